//! Holistic and centered-difference right-hand sides.
//!
//! Every scheme is a table of terms. Linear terms are `c γ^g α^a δ^e u / h^p`;
//! nonlinear terms are `c γ^g α (δ^e u)(δ^o μ u) / h` with `δ^0 u = u`.
//! Coefficients are stored as integer ratios and converted once per term.

use crate::error::{KsError, Result};
use crate::model::{GridField, ModelKind, ModelSpec};
use crate::stencil::{even_symbol, PeriodicSequence, Stencil};

#[derive(Debug, Clone, Copy)]
struct Ratio(i64, i64);

impl Ratio {
    fn value(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

#[derive(Debug, Clone, Copy)]
struct LinearTerm {
    coef: Ratio,
    gamma_pow: u8,
    alpha_pow: u8,
    h_pow: i32,
    /// Even difference order.
    diff: usize,
}

#[derive(Debug, Clone, Copy)]
struct ProductTerm {
    coef: Ratio,
    gamma_pow: u8,
    /// Even order of the left factor, 0 meaning `u` itself.
    left: usize,
    /// Odd order of the `δ^o μ` factor.
    right: usize,
}

const fn lin(n: i64, d: i64, gamma_pow: u8, alpha_pow: u8, h_pow: i32, diff: usize) -> LinearTerm {
    LinearTerm {
        coef: Ratio(n, d),
        gamma_pow,
        alpha_pow,
        h_pow,
        diff,
    }
}

const fn prod(n: i64, d: i64, gamma_pow: u8, left: usize, right: usize) -> ProductTerm {
    ProductTerm {
        coef: Ratio(n, d),
        gamma_pow,
        left,
        right,
    }
}

const HOLISTIC_LINEAR: [LinearTerm; 7] = [
    lin(-1, 1, 1, 1, 2, 2),
    lin(-4, 1, 2, 0, 4, 4),
    lin(1, 12, 2, 1, 2, 4),
    lin(2, 3, 3, 0, 4, 6),
    lin(-1, 90, 3, 1, 2, 6),
    lin(-7, 60, 4, 0, 4, 8),
    lin(1, 560, 4, 1, 2, 8),
];

const HOLISTIC_PRODUCTS: [ProductTerm; 25] = [
    // γ
    prod(-1, 1, 1, 0, 1),
    // γ² / 12
    prod(2, 12, 2, 0, 3),
    prod(1, 12, 2, 2, 3),
    prod(1, 12, 2, 4, 1),
    // -γ³ / 480
    prod(-16, 480, 3, 0, 5),
    prod(-30, 480, 3, 4, 3),
    prod(-40, 480, 3, 2, 3),
    prod(-40, 480, 3, 4, 1),
    prod(-28, 480, 3, 2, 5),
    prod(-14, 480, 3, 6, 1),
    prod(-7, 480, 3, 4, 5),
    prod(-7, 480, 3, 6, 3),
    // γ⁴ / 60480
    prod(432, 60480, 4, 0, 7),
    prod(3528, 60480, 4, 2, 5),
    prod(1507, 60480, 4, 2, 7),
    prod(3780, 60480, 4, 4, 3),
    prod(3951, 60480, 4, 4, 5),
    prod(984, 60480, 4, 4, 7),
    prod(1764, 60480, 4, 6, 1),
    prod(3419, 60480, 4, 6, 3),
    prod(1414, 60480, 4, 6, 5),
    prod(164, 60480, 4, 6, 7),
    prod(523, 60480, 4, 8, 1),
    prod(656, 60480, 4, 8, 3),
    prod(164, 60480, 4, 8, 5),
];

// Centered schemes carry no γ; their terms are tagged with the scheme order
// that first includes them.
const CENTERED_LINEAR: [(u8, LinearTerm); 6] = [
    (2, lin(-1, 1, 0, 1, 2, 2)),
    (4, lin(1, 12, 0, 1, 2, 4)),
    (6, lin(-1, 90, 0, 1, 2, 6)),
    (2, lin(-4, 1, 0, 0, 4, 4)),
    (4, lin(4, 6, 0, 0, 4, 6)),
    (6, lin(-28, 240, 0, 0, 4, 8)),
];

const CENTERED_PRODUCTS: [(u8, ProductTerm); 3] = [
    (2, prod(-1, 1, 0, 0, 1)),
    (4, prod(1, 6, 0, 0, 3)),
    (6, prod(-1, 30, 0, 0, 5)),
];

#[derive(Debug, Clone)]
struct CompiledProduct {
    coef: f64,
    left: usize,
    right: usize,
}

/// A grid scheme compiled for a fixed `h` and `γ`: two combined linear
/// stencils (the `α^0` and `α^1` parts) and a list of product terms.
#[derive(Debug, Clone)]
pub struct GridOperator {
    kind: ModelKind,
    h: f64,
    gamma: f64,
    linear0: Stencil,
    linear1: Stencil,
    /// `(coefficient, α power, δ order)` kept for the closed-form symbol.
    symbol_terms: Vec<(f64, u8, usize)>,
    even_ops: Vec<(usize, Stencil)>,
    odd_ops: Vec<(usize, Stencil)>,
    products: Vec<CompiledProduct>,
    width: usize,
}

fn combine(terms: &[(f64, usize)]) -> Stencil {
    let hw = terms.iter().map(|&(_, a)| a / 2).max().unwrap_or(1).max(1);
    let mut w = vec![0.0; 2 * hw + 1];
    for &(c, a) in terms {
        let s = Stencil::even(a).expect("table orders are valid");
        for (o, v) in s.entries() {
            w[(o + hw as isize) as usize] += c * v;
        }
    }
    Stencil::from_weight_vec(w)
}

impl GridOperator {
    pub fn new(kind: ModelKind, h: f64, gamma: f64) -> Result<Self> {
        let (lins, prods): (Vec<LinearTerm>, Vec<ProductTerm>) = match kind {
            ModelKind::Holistic { order } => {
                let keep = order - 1;
                (
                    HOLISTIC_LINEAR
                        .iter()
                        .copied()
                        .filter(|t| t.gamma_pow <= keep)
                        .collect(),
                    HOLISTIC_PRODUCTS
                        .iter()
                        .copied()
                        .filter(|t| t.gamma_pow <= keep)
                        .collect(),
                )
            }
            ModelKind::Centered { order } => (
                CENTERED_LINEAR
                    .iter()
                    .filter(|(o, _)| *o <= order)
                    .map(|&(_, t)| t)
                    .collect(),
                CENTERED_PRODUCTS
                    .iter()
                    .filter(|(o, _)| *o <= order)
                    .map(|&(_, t)| t)
                    .collect(),
            ),
            _ => {
                return Err(KsError::Unsupported(format!(
                    "{kind} is not a grid model"
                )))
            }
        };
        let gpow = |p: u8| gamma.powi(p as i32);
        let mut l0 = Vec::new();
        let mut l1 = Vec::new();
        let mut symbol_terms = Vec::new();
        for t in &lins {
            let c = t.coef.value() * gpow(t.gamma_pow) / h.powi(t.h_pow);
            symbol_terms.push((c, t.alpha_pow, t.diff));
            if t.alpha_pow == 0 {
                l0.push((c, t.diff));
            } else {
                l1.push((c, t.diff));
            }
        }
        let mut even_orders: Vec<usize> = prods.iter().map(|p| p.left).filter(|&a| a > 0).collect();
        even_orders.sort_unstable();
        even_orders.dedup();
        let mut odd_orders: Vec<usize> = prods.iter().map(|p| p.right).collect();
        odd_orders.sort_unstable();
        odd_orders.dedup();
        let products = prods
            .iter()
            .map(|p| CompiledProduct {
                coef: p.coef.value() * gpow(p.gamma_pow) / h,
                left: p.left,
                right: p.right,
            })
            .collect();
        Ok(Self {
            kind,
            h,
            gamma,
            linear0: combine(&l0),
            linear1: combine(&l1),
            symbol_terms,
            even_ops: even_orders
                .into_iter()
                .map(|a| (a, Stencil::even(a).unwrap()))
                .collect(),
            odd_ops: odd_orders
                .into_iter()
                .map(|a| (a, Stencil::odd_mu(a).unwrap()))
                .collect(),
            products,
            width: kind.stencil_width().unwrap(),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Grids need at least `width + 1` points.
    pub fn check_len(&self, n: usize) -> Result<()> {
        if n < self.width + 1 {
            return Err(crate::stencil::StencilError::GridTooCoarse {
                len: n,
                width: self.width,
            }
            .into());
        }
        Ok(())
    }

    /// `out = g(u)`; the caller guarantees `u.len() > width`.
    pub fn apply_into(&self, u: &[f64], alpha: f64, out: &mut [f64]) {
        self.apply_with(u, alpha, out, &mut Vec::new());
    }

    /// As [`apply_into`](Self::apply_into) but reuses `scratch` between calls.
    pub fn apply_with(&self, u: &[f64], alpha: f64, out: &mut [f64], scratch: &mut Vec<f64>) {
        let n = u.len();
        scratch.resize(n * (1 + self.even_ops.len() + self.odd_ops.len()), 0.0);
        let (lin1, rest) = scratch.split_at_mut(n);
        self.linear0.apply_into(u, out);
        self.linear1.apply_into(u, lin1);
        for (o, l) in out.iter_mut().zip(lin1.iter()) {
            *o += alpha * l;
        }
        if alpha == 0.0 {
            return;
        }
        let (evens, odds) = rest.split_at_mut(n * self.even_ops.len());
        for ((_, s), buf) in self.even_ops.iter().zip(evens.chunks_mut(n)) {
            s.apply_into(u, buf);
        }
        for ((_, s), buf) in self.odd_ops.iter().zip(odds.chunks_mut(n)) {
            s.apply_into(u, buf);
        }
        let even_buf = |a: usize| -> &[f64] {
            if a == 0 {
                return u;
            }
            let i = self.even_ops.iter().position(|(o, _)| *o == a).unwrap();
            &evens[i * n..(i + 1) * n]
        };
        let odd_buf = |a: usize| -> &[f64] {
            let i = self.odd_ops.iter().position(|(o, _)| *o == a).unwrap();
            &odds[i * n..(i + 1) * n]
        };
        for p in &self.products {
            let c = alpha * p.coef;
            let l = even_buf(p.left);
            let r = odd_buf(p.right);
            for j in 0..n {
                out[j] += c * l[j] * r[j];
            }
        }
    }

    pub fn apply(&self, u: &[f64], alpha: f64) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, alpha, &mut out);
        out
    }

    /// Growth rate of `e^{ikx}` under the linear part.
    pub fn symbol(&self, k: f64, alpha: f64) -> f64 {
        let theta = k * self.h;
        self.symbol_terms
            .iter()
            .map(|&(c, ap, a)| c * alpha.powi(ap as i32) * even_symbol(a, theta))
            .sum()
    }
}

fn check_family(spec: &ModelSpec, holistic: bool) -> Result<()> {
    let ok = match spec.kind {
        ModelKind::Holistic { .. } => holistic,
        ModelKind::Centered { .. } => !holistic,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(KsError::Unsupported(format!(
            "{} passed to the {} evaluator",
            spec.kind,
            if holistic { "holistic" } else { "centered" }
        )))
    }
}

fn rhs_grid(field: &GridField, spec: &ModelSpec) -> Result<PeriodicSequence> {
    let op = GridOperator::new(spec.kind, field.h, spec.gamma)?;
    op.check_len(field.len())?;
    Ok(PeriodicSequence::new(op.apply(field.u.as_slice(), spec.alpha))?)
}

/// Holistic model `du_j/dt = g_j(u; α, γ)`.
pub fn rhs_holistic(field: &GridField, spec: &ModelSpec) -> Result<PeriodicSequence> {
    check_family(spec, true)?;
    rhs_grid(field, spec)
}

/// Conventional centered scheme of order 2, 4 or 6.
pub fn rhs_centered(field: &GridField, spec: &ModelSpec) -> Result<PeriodicSequence> {
    check_family(spec, false)?;
    rhs_grid(field, spec)
}

/// Growth rate of the mode `e^{ikx}` under the linearised grid scheme.
pub fn dispersion_symbol(spec: &ModelSpec, k: u32, h: f64) -> Result<f64> {
    if !spec.kind.is_grid() {
        return Err(KsError::Unsupported(
            "Galerkin linear rates are -4k^4 + αk^2 exactly".into(),
        ));
    }
    let op = GridOperator::new(spec.kind, h, spec.gamma)?;
    Ok(op.symbol(k as f64, spec.alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(n: usize, seed: u64) -> GridField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        GridField::new(PeriodicSequence::new(u).unwrap(), 2.0 * PI)
    }

    #[test]
    fn constants_have_zero_rhs() {
        let f = GridField::new(PeriodicSequence::new(vec![1.7; 16]).unwrap(), 2.0 * PI);
        for s in ["hol:3", "hol:4", "hol:5", "cd:2", "cd:4", "cd:6"] {
            let spec = ModelSpec::new(s.parse().unwrap(), 13.0).with_gamma(0.7);
            let g = rhs_grid(&f, &spec).unwrap();
            assert!(g.max_abs() < 1e-9, "{s}: {}", g.max_abs());
        }
    }

    #[test]
    fn second_order_impulse_response() {
        let n = 12;
        let mut u = vec![0.0; n];
        u[5] = 1.0;
        let f = GridField::new(PeriodicSequence::new(u).unwrap(), 2.0 * PI);
        let spec = ModelSpec::new(ModelKind::Centered { order: 2 }, 0.0);
        let g = rhs_centered(&f, &spec).unwrap();
        let s = -4.0 / f.h.powi(4);
        let want = [1.0, -4.0, 6.0, -4.0, 1.0];
        for j in 0..n {
            let w = if (3..=7).contains(&j) { want[j - 3] } else { 0.0 };
            assert!((g[j] - s * w).abs() < 1e-9 * s.abs());
        }
    }

    #[test]
    fn gamma_zero_decouples_elements() {
        let f = random_field(14, 3);
        for p in 3..=5 {
            let spec = ModelSpec::new(ModelKind::Holistic { order: p }, 20.0).with_gamma(0.0);
            assert_eq!(rhs_holistic(&f, &spec).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn family_mismatch_is_rejected() {
        let f = random_field(14, 4);
        let spec = ModelSpec::new(ModelKind::Centered { order: 2 }, 1.0);
        assert!(rhs_holistic(&f, &spec).is_err());
        let spec = ModelSpec::new(ModelKind::Holistic { order: 3 }, 1.0);
        assert!(rhs_centered(&f, &spec).is_err());
        let spec = ModelSpec::new(ModelKind::Galerkin { modes: 3 }, 1.0);
        assert_eq!(dispersion_symbol(&spec, 1, 0.1).unwrap_err().class(), "unsupported");
    }

    #[test]
    fn coarse_grid_rejected_for_wide_stencils() {
        let f = random_field(9, 5);
        let spec = ModelSpec::new(ModelKind::Holistic { order: 5 }, 1.0);
        assert_eq!(rhs_holistic(&f, &spec).unwrap_err().class(), "grid-too-coarse");
        let spec = ModelSpec::new(ModelKind::Holistic { order: 3 }, 1.0);
        assert!(rhs_holistic(&f, &spec).is_ok());
    }

    #[test]
    fn symbol_at_zero_and_nyquist() {
        let h = 0.3;
        for s in ["hol:3", "hol:5", "cd:2", "cd:6"] {
            let spec = ModelSpec::new(s.parse().unwrap(), 11.0);
            assert_eq!(dispersion_symbol(&spec, 0, h).unwrap(), 0.0);
        }
        // Second-order scheme, α = 0, kh = π: -4 (2 sin(π/2))^4 / h^4.
        let h = PI / 5.0;
        let spec = ModelSpec::new(ModelKind::Centered { order: 2 }, 0.0);
        let got = dispersion_symbol(&spec, 5, h).unwrap();
        assert!((got - (-64.0 / h.powi(4))).abs() < 1e-9 * got.abs());
    }

    #[test]
    fn fifth_order_linear_model_is_diagonal_on_sine_modes() {
        let n = 24;
        let k = 3;
        let f = GridField::sample(n, |x| (k as f64 * x).sin()).unwrap();
        let spec = ModelSpec::new(ModelKind::Holistic { order: 5 }, 0.0);
        let g = rhs_holistic(&f, &spec).unwrap();
        let lam = dispersion_symbol(&spec, k, f.h).unwrap();
        for j in 0..n {
            assert!((g[j] - lam * f.u[j]).abs() <= 1e-12 * lam.abs());
        }
    }
}
