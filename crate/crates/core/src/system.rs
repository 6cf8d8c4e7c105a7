//! A model bound to a state layout: the flat vector `x` that integrators,
//! Newton and continuation work with.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{KsError, Result};
use crate::galerkin;
use crate::grid_models::GridOperator;
use crate::model::{ModelKind, ModelSpec};
use crate::odd::{embed_into, OddLayout};

/// Spatial layout for grid models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    /// `n` points on `[0, 2π)`.
    Full { n: usize },
    /// `m` elements on `[0, π]` with nodes at element centres
    /// `x_j = (j - 1/2) h`; odd and 2π-periodic, `m` unknowns.
    Odd { m: usize },
    /// `m` elements on `[0, π]` with nodes at element edges, `u_0 = u_m = 0`;
    /// `m - 1` unknowns.
    OddNodal { m: usize },
}

impl Geometry {
    pub fn spacing(&self) -> f64 {
        match *self {
            Geometry::Full { n } => 2.0 * PI / n as f64,
            Geometry::OddNodal { m } | Geometry::Odd { m } => PI / m as f64,
        }
    }

    pub fn grid_len(&self) -> usize {
        match *self {
            Geometry::Full { n } => n,
            Geometry::OddNodal { m } | Geometry::Odd { m } => 2 * m,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Geometry::Full { n } => n,
            Geometry::OddNodal { m } => m - 1,
            Geometry::Odd { m } => m,
        }
    }

    /// Node positions of the unknowns.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        match *self {
            Geometry::Full { n } => (0..n).map(|j| j as f64 * h).collect(),
            Geometry::OddNodal { m } => (1..m).map(|j| j as f64 * h).collect(),
            Geometry::Odd { m } => (0..m).map(|j| (j as f64 + 0.5) * h).collect(),
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Full { n } => write!(f, "full:{n}"),
            Geometry::OddNodal { m } => write!(f, "oddn:{m}"),
            Geometry::Odd { m } => write!(f, "odd:{m}"),
        }
    }
}

impl FromStr for Geometry {
    type Err = KsError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| KsError::Usage(format!("geometry '{s}' must be full:N or odd:M")))?;
        let count: usize = arg
            .parse()
            .map_err(|_| KsError::Usage(format!("geometry '{s}': bad count '{arg}'")))?;
        match kind {
            "full" if count >= 5 => Ok(Geometry::Full { n: count }),
            "odd" if count >= 3 => Ok(Geometry::Odd { m: count }),
            "oddn" if count >= 3 => Ok(Geometry::OddNodal { m: count }),
            "full" | "odd" | "oddn" => Err(KsError::Usage(format!("geometry '{s}' is too small"))),
            _ => Err(KsError::Usage(format!(
                "unknown geometry '{kind}' (expected full, odd or oddn)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
enum Layout {
    Grid { op: GridOperator, geometry: Geometry },
    Galerkin { modes: usize },
}

/// A discretised KS system `dx/dt = f(x; α)`.
#[derive(Debug)]
pub struct System {
    spec: ModelSpec,
    layout: Layout,
    scratch: RefCell<Scratch>,
}

#[derive(Debug, Default, Clone)]
struct Scratch {
    full_in: Vec<f64>,
    full_out: Vec<f64>,
    op: Vec<f64>,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl Clone for System {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec,
            layout: self.layout.clone(),
            scratch: RefCell::default(),
        }
    }
}

impl System {
    /// Grid models need a geometry; Galerkin models must not have one.
    pub fn new(spec: ModelSpec, geometry: Option<Geometry>) -> Result<Self> {
        let layout = match (spec.kind, geometry) {
            (ModelKind::Galerkin { modes } | ModelKind::NonlinearGalerkin { modes }, None) => {
                Layout::Galerkin { modes }
            }
            (ModelKind::Galerkin { .. } | ModelKind::NonlinearGalerkin { .. }, Some(_)) => {
                return Err(KsError::Usage(
                    "Galerkin models carry their own geometry; drop the geometry option".into(),
                ))
            }
            (_, None) => {
                return Err(KsError::Usage(format!("{} needs a geometry", spec.kind)));
            }
            (kind, Some(geometry)) => {
                let op = GridOperator::new(kind, geometry.spacing(), spec.gamma)?;
                op.check_len(geometry.grid_len())?;
                Layout::Grid { op, geometry }
            }
        };
        Ok(Self {
            spec,
            layout,
            scratch: RefCell::default(),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    pub fn set_alpha(&mut self, alpha: f64) {
        self.spec.alpha = alpha;
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        let mut s = self.clone();
        s.set_alpha(alpha);
        s
    }

    pub fn geometry(&self) -> Option<Geometry> {
        match &self.layout {
            Layout::Grid { geometry, .. } => Some(*geometry),
            Layout::Galerkin { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.layout {
            Layout::Grid { geometry, .. } => geometry.dim(),
            Layout::Galerkin { modes } => *modes,
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(KsError::Shape {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }

    /// `out = f(x; α)` at an explicit `α`.
    pub fn rhs_at(&self, x: &[f64], alpha: f64, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        let mut s = self.scratch.borrow_mut();
        let s = &mut *s;
        match &self.layout {
            Layout::Grid {
                op,
                geometry: Geometry::Full { .. },
            } => op.apply_with(x, alpha, out, &mut s.op),
            Layout::Grid {
                op,
                geometry: geometry @ (Geometry::Odd { m } | Geometry::OddNodal { m }),
            } => {
                let m = *m;
                let (layout, first) = match geometry {
                    Geometry::Odd { .. } => (OddLayout::Centred, 0),
                    _ => (OddLayout::Nodal, 1),
                };
                s.full_in.resize(2 * m, 0.0);
                s.full_out.resize(2 * m, 0.0);
                embed_into(x, layout, &mut s.full_in);
                op.apply_with(&s.full_in, alpha, &mut s.full_out, &mut s.op);
                out.copy_from_slice(&s.full_out[first..first + x.len()]);
            }
            Layout::Galerkin { .. } => {
                s.op.resize(2 * x.len(), 0.0);
                galerkin::rhs_into(self.spec.kind, alpha, x, &mut s.op, out);
            }
        }
    }

    pub fn rhs_into(&self, x: &[f64], out: &mut [f64]) {
        self.rhs_at(x, self.spec.alpha, out)
    }

    pub fn rhs(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let mut out = vec![0.0; x.len()];
        self.rhs_into(x, &mut out);
        Ok(out)
    }

    /// `∂f/∂α`: the RHS is affine in `α`, so one difference is exact.
    pub fn rhs_alpha(&self, x: &[f64], out: &mut [f64]) {
        let mut f0 = vec![0.0; x.len()];
        self.rhs_at(x, 0.0, &mut f0);
        self.rhs_at(x, 1.0, out);
        for (o, a) in out.iter_mut().zip(&f0) {
            *o -= a;
        }
    }

    /// Central-difference `J(x) v`, exact up to rounding for quadratic `f`.
    pub fn jvp_eps(&self, x: &[f64], v: &[f64], eps: f64, out: &mut [f64]) {
        let n = x.len();
        let (mut plus, mut minus) = {
            let mut s = self.scratch.borrow_mut();
            (std::mem::take(&mut s.plus), std::mem::take(&mut s.minus))
        };
        plus.resize(n, 0.0);
        minus.resize(n, 0.0);
        for i in 0..n {
            plus[i] = x[i] + eps * v[i];
            minus[i] = x[i] - eps * v[i];
        }
        let mut fm = vec![0.0; n];
        self.rhs_into(&plus, out);
        self.rhs_into(&minus, &mut fm);
        let inv = 0.5 / eps;
        for i in 0..n {
            out[i] = (out[i] - fm[i]) * inv;
        }
        let mut s = self.scratch.borrow_mut();
        s.plus = plus;
        s.minus = minus;
    }

    pub fn jvp(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        self.jvp_eps(x, v, jvp_step(x), out)
    }

    /// Dense Jacobian assembled column by column from [`jvp`](Self::jvp).
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let eps = jvp_step(x);
        let mut j = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            self.jvp_eps(x, &e, eps, &mut col);
            e[c] = 0.0;
            j.column_mut(c).copy_from_slice(&col);
        }
        j
    }

    /// Exact linear growth rates of the modes this layout supports at the
    /// trivial state, `None` for grid models (use the operator symbol).
    /// Translation by `π` in state coordinates, when the grid allows it.
    pub fn half_shift(&self, x: &[f64]) -> Option<Vec<f64>> {
        match &self.layout {
            Layout::Grid {
                geometry: Geometry::Odd { .. } | Geometry::OddNodal { .. },
                ..
            } => Some(crate::odd::half_shift(x)),
            Layout::Grid {
                geometry: Geometry::Full { n },
                ..
            } => (n % 2 == 0).then(|| {
                let mut y = x.to_vec();
                y.rotate_left(n / 2);
                y
            }),
            Layout::Galerkin { .. } => Some(
                x.iter()
                    .enumerate()
                    .map(|(i, b)| if i % 2 == 0 { -b } else { *b })
                    .collect(),
            ),
        }
    }

    /// Values on the whole periodic grid: odd layouts are embedded,
    /// Galerkin amplitudes are sampled at `4m` equispaced points.
    pub fn full_field(&self, x: &[f64]) -> Vec<f64> {
        match &self.layout {
            Layout::Grid {
                geometry: Geometry::Full { .. },
                ..
            } => x.to_vec(),
            Layout::Grid {
                geometry: geometry @ (Geometry::Odd { m } | Geometry::OddNodal { m }),
                ..
            } => {
                let layout = match geometry {
                    Geometry::Odd { .. } => OddLayout::Centred,
                    _ => OddLayout::Nodal,
                };
                let mut u = vec![0.0; 2 * m];
                embed_into(x, layout, &mut u);
                u
            }
            Layout::Galerkin { modes } => {
                let n = 4 * modes;
                let h = 2.0 * PI / n as f64;
                (0..n)
                    .map(|j| {
                        x.iter()
                            .enumerate()
                            .map(|(k, b)| b * ((k + 1) as f64 * j as f64 * h).sin())
                            .sum()
                    })
                    .collect()
            }
        }
    }

    pub fn galerkin_rates(&self) -> Option<Vec<f64>> {
        match &self.layout {
            Layout::Galerkin { modes } => Some(
                (1..=*modes)
                    .map(|k| galerkin::linear_rate(k, self.spec.alpha))
                    .collect(),
            ),
            Layout::Grid { .. } => None,
        }
    }

    /// Linear growth rate of `e^{ikx}` for grid layouts.
    pub fn symbol(&self, k: f64) -> Option<f64> {
        match &self.layout {
            Layout::Grid { op, .. } => Some(op.symbol(k, self.spec.alpha)),
            Layout::Galerkin { .. } => None,
        }
    }
}

/// `1e-5 max(1, ‖x‖∞)`.
pub fn jvp_step(x: &[f64]) -> f64 {
    1e-5 * x.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

pub fn jacobian_apply(sys: &System, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    sys.check_dim(x.len())?;
    sys.check_dim(v.len())?;
    let mut out = vec![0.0; x.len()];
    sys.jvp(x, v, &mut out);
    Ok(out)
}

pub fn jacobian_dense(sys: &System, x: &[f64]) -> Result<DMatrix<f64>> {
    sys.check_dim(x.len())?;
    Ok(sys.jacobian(x))
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
