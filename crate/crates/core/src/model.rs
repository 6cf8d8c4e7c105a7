//! Model selection and the state containers shared by every discretisation.

use std::fmt;
use std::str::FromStr;

use crate::error::{KsError, Result};
use crate::stencil::PeriodicSequence;

/// Which discretisation of `u_t + 4u_xxxx + α(u u_x + u_xx) = 0` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Holistic model retaining coupling terms up to `γ^{p-1}`, error `O(γ^p, α²)`.
    Holistic { order: u8 },
    /// Conventional centered scheme of order 2, 4 or 6.
    Centered { order: u8 },
    /// `m`-mode sine Galerkin truncation.
    Galerkin { modes: usize },
    /// `m`-mode first-iterate nonlinear Galerkin (modes `m+1..=2m` slaved).
    NonlinearGalerkin { modes: usize },
}

impl ModelKind {
    pub fn holistic(order: u8) -> Result<Self> {
        match order {
            3..=5 => Ok(ModelKind::Holistic { order }),
            _ => Err(KsError::Usage(format!(
                "holistic order must be 3, 4 or 5 (got {order})"
            ))),
        }
    }

    pub fn centered(order: u8) -> Result<Self> {
        match order {
            2 | 4 | 6 => Ok(ModelKind::Centered { order }),
            _ => Err(KsError::Usage(format!(
                "centered order must be 2, 4 or 6 (got {order})"
            ))),
        }
    }

    pub fn galerkin(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(KsError::Usage("Galerkin mode count must be >= 1".into()));
        }
        Ok(ModelKind::Galerkin { modes })
    }

    pub fn nonlinear_galerkin(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(KsError::Usage("Galerkin mode count must be >= 1".into()));
        }
        Ok(ModelKind::NonlinearGalerkin { modes })
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, ModelKind::Holistic { .. } | ModelKind::Centered { .. })
    }

    pub fn galerkin_modes(&self) -> Option<usize> {
        match *self {
            ModelKind::Galerkin { modes } | ModelKind::NonlinearGalerkin { modes } => Some(modes),
            _ => None,
        }
    }

    /// Number of grid points the stencil touches (grid families only).
    pub fn stencil_width(&self) -> Option<usize> {
        match *self {
            ModelKind::Holistic { order } => Some(2 * order as usize - 1),
            ModelKind::Centered { order } => Some(order as usize + 3),
            _ => None,
        }
    }

    /// Consistency order of the grid scheme as `h -> 0`.
    pub fn consistency_order(&self) -> Option<u32> {
        match *self {
            ModelKind::Holistic { order } => Some(2 * order as u32 - 2),
            ModelKind::Centered { order } => Some(order as u32),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Holistic { order } => write!(f, "hol:{order}"),
            ModelKind::Centered { order } => write!(f, "cd:{order}"),
            ModelKind::Galerkin { modes } => write!(f, "gal:{modes}"),
            ModelKind::NonlinearGalerkin { modes } => write!(f, "nlgal:{modes}"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = KsError;

    /// Parses `hol:p`, `cd:p`, `gal:m` or `nlgal:m`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, arg) = s
            .split_once(':')
            .ok_or_else(|| KsError::Usage(format!("model '{s}' must look like family:number")))?;
        let bad = || KsError::Usage(format!("model '{s}': '{arg}' is not a number"));
        match family {
            "hol" => ModelKind::holistic(arg.parse().map_err(|_| bad())?),
            "cd" => ModelKind::centered(arg.parse().map_err(|_| bad())?),
            "gal" => ModelKind::galerkin(arg.parse().map_err(|_| bad())?),
            "nlgal" => ModelKind::nonlinear_galerkin(arg.parse().map_err(|_| bad())?),
            _ => Err(KsError::Usage(format!(
                "unknown model family '{family}' (expected hol, cd, gal or nlgal)"
            ))),
        }
    }
}

/// A model plus its parameters: nonlinearity `α` and inter-element coupling `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub alpha: f64,
    /// Only the holistic family reads this; `γ = 1` recovers the PDE.
    pub gamma: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, alpha: f64) -> Self {
        Self {
            kind,
            alpha,
            gamma: 1.0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// Grid values on a periodic domain with spacing `h`, `x_j = j h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub u: PeriodicSequence,
    pub h: f64,
    pub domain_length: f64,
}

impl GridField {
    pub fn new(u: PeriodicSequence, domain_length: f64) -> Self {
        let h = domain_length / u.len() as f64;
        Self {
            u,
            h,
            domain_length,
        }
    }

    /// Checks `N h = L` to `1e-12` relative.
    pub fn with_spacing(u: PeriodicSequence, h: f64, domain_length: f64) -> Result<Self> {
        let implied = h * u.len() as f64;
        if h <= 0.0 || (implied - domain_length).abs() > 1e-12 * domain_length.abs() {
            return Err(KsError::IncompatibleDomains(format!(
                "{} points with h = {h} do not cover a domain of length {domain_length}",
                u.len()
            )));
        }
        Ok(Self {
            u,
            h,
            domain_length,
        })
    }

    /// Samples `f` at `x_j = j L / N` on a `2π` domain.
    pub fn sample(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let l = 2.0 * std::f64::consts::PI;
        let h = l / n as f64;
        let u = PeriodicSequence::new((0..n).map(|j| f(j as f64 * h)).collect())?;
        Ok(Self::new(u, l))
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| j as f64 * self.h).collect()
    }
}

/// Sine-mode amplitudes `b_1..b_m` of `u = Σ b_k sin(kx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinState {
    pub b: Vec<f64>,
}

impl GalerkinState {
    pub fn new(b: Vec<f64>) -> Result<Self> {
        if b.is_empty() {
            return Err(KsError::Usage("Galerkin state needs at least one mode".into()));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(KsError::Usage("Galerkin amplitudes must be finite".into()));
        }
        Ok(Self { b })
    }

    pub fn modes(&self) -> usize {
        self.b.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_strings_round_trip() {
        for s in ["hol:3", "hol:4", "hol:5", "cd:2", "cd:4", "cd:6", "gal:8", "nlgal:3"] {
            let k: ModelKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
    }

    #[test]
    fn out_of_catalogue_models_are_usage_errors() {
        for s in ["hol:6", "hol:2", "cd:3", "gal:0", "spectral:4", "hol", "cd:x"] {
            let e = s.parse::<ModelKind>().unwrap_err();
            assert_eq!(e.class(), "usage", "{s}");
        }
    }

    #[test]
    fn stencil_widths() {
        let w = |s: &str| s.parse::<ModelKind>().unwrap().stencil_width().unwrap();
        assert_eq!((w("hol:3"), w("hol:4"), w("hol:5")), (5, 7, 9));
        assert_eq!((w("cd:2"), w("cd:4"), w("cd:6")), (5, 7, 9));
    }

    #[test]
    fn grid_spacing_must_cover_domain() {
        let u = PeriodicSequence::zeros(8).unwrap();
        let l = 2.0 * std::f64::consts::PI;
        assert!(GridField::with_spacing(u.clone(), l / 8.0, l).is_ok());
        assert!(GridField::with_spacing(u, l / 7.0, l).is_err());
    }
}
