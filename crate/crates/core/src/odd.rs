//! The odd, 2π-periodic subspace: `m` elements on `[0, π]` realised as a
//! `2m`-point periodic grid with `u(-x) = -u(x)`.
//!
//! Two node placements are supported. With centred nodes `x_j = (j + 1/2) h`
//! the unknowns are `u_0..u_{m-1}` and `u_{2m-1-j} = -u_j`. With nodal
//! placement `x_j = j h` the values `u_0 = u_m = 0` are pinned, the unknowns
//! are `u_1..u_{m-1}` and `u_{2m-j} = -u_j`.

use std::f64::consts::PI;

use crate::error::{KsError, Result};
use crate::model::{GridField, ModelSpec};
use crate::stencil::PeriodicSequence;
use crate::system::{Geometry, System};

/// Absolute tolerance on the antisymmetry accepted by [`restrict`].
pub const ODD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OddLayout {
    Centred,
    Nodal,
}

/// Independent values of an odd field on `m` elements.
#[derive(Debug, Clone, PartialEq)]
pub struct OddState {
    pub w: Vec<f64>,
    pub m: usize,
    pub layout: OddLayout,
}

impl OddState {
    pub fn new(w: Vec<f64>, layout: OddLayout) -> Result<Self> {
        let m = match layout {
            OddLayout::Centred => w.len(),
            OddLayout::Nodal => w.len() + 1,
        };
        if m < 3 {
            return Err(KsError::Usage(format!(
                "odd grids need at least 3 elements (got {m})"
            )));
        }
        Ok(Self { w, m, layout })
    }

    pub fn zeros(m: usize, layout: OddLayout) -> Result<Self> {
        let n = match layout {
            OddLayout::Centred => m,
            OddLayout::Nodal => m.saturating_sub(1),
        };
        Self::new(vec![0.0; n], layout)
    }

    pub fn h(&self) -> f64 {
        PI / self.m as f64
    }

    pub fn geometry(&self) -> Geometry {
        match self.layout {
            OddLayout::Centred => Geometry::Odd { m: self.m },
            OddLayout::Nodal => Geometry::OddNodal { m: self.m },
        }
    }

    /// Image under translation by `π`; in both layouts `w'_j = -w_{last-j}`.
    pub fn half_shift(&self) -> Self {
        Self {
            w: half_shift(&self.w),
            m: self.m,
            layout: self.layout,
        }
    }
}

/// Reverse and negate: translation by `π` of an odd field.
pub fn half_shift(w: &[f64]) -> Vec<f64> {
    w.iter().rev().map(|v| -v).collect()
}

/// Writes the full `2m` grid for the unknowns `w` into `u`.
pub(crate) fn embed_into(w: &[f64], layout: OddLayout, u: &mut [f64]) {
    match layout {
        OddLayout::Centred => {
            let m = w.len();
            debug_assert_eq!(u.len(), 2 * m);
            for j in 0..m {
                u[j] = w[j];
                u[2 * m - 1 - j] = -w[j];
            }
        }
        OddLayout::Nodal => {
            let m = w.len() + 1;
            debug_assert_eq!(u.len(), 2 * m);
            u[0] = 0.0;
            u[m] = 0.0;
            for j in 1..m {
                u[j] = w[j - 1];
                u[2 * m - j] = -w[j - 1];
            }
        }
    }
}

/// Full periodic field on `[0, 2π)`. For centred layouts grid index `j`
/// sits at `(j + 1/2) h`, half a cell from the field's nominal node.
pub fn embed(w: &OddState) -> GridField {
    let mut u = vec![0.0; 2 * w.m];
    embed_into(&w.w, w.layout, &mut u);
    let u = PeriodicSequence::new(u).expect("2m >= 6 points");
    GridField::new(u, 2.0 * PI)
}

/// Largest violation of the layout's antisymmetry.
pub fn max_asymmetry(u: &[f64], layout: OddLayout) -> f64 {
    let n = u.len();
    match layout {
        OddLayout::Centred => (0..n).fold(0.0, |m, j| m.max((u[j] + u[n - 1 - j]).abs())),
        OddLayout::Nodal => {
            let mut worst = u[0].abs();
            if n % 2 == 0 {
                worst = worst.max(u[n / 2].abs());
            }
            (1..n).fold(worst, |m, j| m.max((u[j] + u[n - j]).abs()))
        }
    }
}

pub fn restrict(u: &GridField, layout: OddLayout) -> Result<OddState> {
    let n = u.len();
    if n % 2 != 0 {
        return Err(KsError::Usage(format!(
            "odd restriction needs an even number of points (got {n})"
        )));
    }
    let asym = max_asymmetry(u.u.as_slice(), layout);
    if asym > ODD_TOL {
        return Err(KsError::SymmetryViolation {
            max_asymmetry: asym,
        });
    }
    let v = u.u.as_slice();
    match layout {
        OddLayout::Centred => OddState::new(v[..n / 2].to_vec(), layout),
        OddLayout::Nodal => OddState::new(v[1..n / 2].to_vec(), layout),
    }
}

/// `restrict(rhs(embed(w)))` for a grid model.
pub fn rhs_odd(w: &OddState, spec: &ModelSpec) -> Result<Vec<f64>> {
    let sys = System::new(*spec, Some(w.geometry()))?;
    sys.rhs(&w.w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;

    #[test]
    fn embed_small_example() {
        let f = embed(&OddState::new(vec![1.0, 0.0, -1.0], OddLayout::Nodal).unwrap());
        assert_eq!(f.u.as_slice(), &[0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0]);
        assert!((f.h - PI / 4.0).abs() < 1e-15);
        let f = embed(&OddState::new(vec![1.0, 2.0, 3.0], OddLayout::Centred).unwrap());
        assert_eq!(f.u.as_slice(), &[1.0, 2.0, 3.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn restrict_inverts_embed() {
        for layout in [OddLayout::Nodal, OddLayout::Centred] {
            let w = OddState::new(vec![0.3, -1.2, 2.0, 0.7, -0.1], layout).unwrap();
            assert_eq!(restrict(&embed(&w), layout).unwrap(), w);
        }
    }

    #[test]
    fn restrict_rejects_non_odd_fields() {
        let u = PeriodicSequence::new(vec![0.0, 1.0, 0.0, 0.0, 0.0, -0.5]).unwrap();
        let e = restrict(&GridField::new(u, 2.0 * PI), OddLayout::Nodal).unwrap_err();
        match e {
            KsError::SymmetryViolation { max_asymmetry } => assert_eq!(max_asymmetry, 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_is_steady() {
        let spec = ModelSpec::new(ModelKind::Holistic { order: 5 }, 30.0);
        for layout in [OddLayout::Nodal, OddLayout::Centred] {
            let g = rhs_odd(&OddState::zeros(8, layout).unwrap(), &spec).unwrap();
            assert!(g.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn half_shift_is_an_involution() {
        let w = OddState::new(vec![1.0, 2.0, 3.0], OddLayout::Nodal).unwrap();
        assert_eq!(w.half_shift().w, vec![-3.0, -2.0, -1.0]);
        assert_eq!(w.half_shift().half_shift(), w);
    }
}
