//! Periodic centered difference and mean operators.
//!
//! `δ u_j = u_{j+1/2} - u_{j-1/2}` and `μ u_j = (u_{j+1/2} + u_{j-1/2}) / 2`.
//! Even powers `δ^a` and odd products `δ^a μ` only ever touch integer grid
//! points, so both are represented as explicit weight tables over integer
//! offsets and applied with cyclic indexing.

use std::fmt;

use thiserror::Error;

/// Smallest grid any operator will accept.
pub const MIN_LEN: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StencilError {
    #[error("invalid operator order {order}: {reason}")]
    InvalidOperator { order: usize, reason: &'static str },
    #[error("grid of {len} points is too coarse for a stencil of width {width}")]
    GridTooCoarse { len: usize, width: usize },
}

/// Grid values `u_j` with cyclic indexing, `u_{j+N} = u_j`.
#[derive(Clone, PartialEq)]
pub struct PeriodicSequence {
    values: Vec<f64>,
}

impl PeriodicSequence {
    pub fn new(values: Vec<f64>) -> Result<Self, StencilError> {
        if values.len() < MIN_LEN {
            return Err(StencilError::GridTooCoarse {
                len: values.len(),
                width: MIN_LEN,
            });
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Result<Self, StencilError> {
        Self::new(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Value at any integer index, wrapped onto `0..N`.
    pub fn at(&self, j: isize) -> f64 {
        self.values[wrap(j, self.values.len())]
    }

    /// Cyclic shift: `out_j = u_{j+k}`.
    pub fn shifted(&self, k: isize) -> Self {
        let n = self.values.len();
        let values = (0..n).map(|j| self.values[wrap(j as isize + k, n)]).collect();
        Self { values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl fmt::Debug for PeriodicSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.values.iter()).finish()
    }
}

impl std::ops::Index<usize> for PeriodicSequence {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.values[j]
    }
}

#[inline]
fn wrap_fwd(j: usize, o: usize, n: usize) -> usize {
    let k = j + o;
    if k >= n {
        k - n
    } else {
        k
    }
}

#[inline]
fn wrap_back(j: usize, o: usize, n: usize) -> usize {
    if j >= o {
        j - o
    } else {
        j + n - o
    }
}

#[inline]
pub(crate) fn wrap(j: isize, n: usize) -> usize {
    j.rem_euclid(n as isize) as usize
}

/// A finite weight table `out_j = Σ_o w_o u_{j+o}` over offsets
/// `-half_width..=half_width`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    half_width: usize,
    weights: Vec<f64>,
    shape: Shape,
}

/// Symmetric zero-sum tables are applied as `Σ w_o (u_{j+o} + u_{j-o} - 2u_j)`
/// and antisymmetric ones as `Σ w_o (u_{j+o} - u_{j-o})`, so constants map
/// to exact zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    General,
    SymmetricZeroSum,
    Antisymmetric,
}

impl Stencil {
    fn from_weights(weights: Vec<f64>) -> Self {
        debug_assert!(weights.len() % 2 == 1);
        let hw = weights.len() / 2;
        let sym = (1..=hw).all(|o| weights[hw + o] == weights[hw - o]);
        let anti = weights[hw] == 0.0 && (1..=hw).all(|o| weights[hw + o] == -weights[hw - o]);
        let sum: f64 = weights.iter().sum();
        let mass: f64 = weights.iter().map(|w| w.abs()).sum();
        let shape = if sym && sum.abs() <= 1e-12 * mass {
            Shape::SymmetricZeroSum
        } else if anti {
            Shape::Antisymmetric
        } else {
            Shape::General
        };
        Self {
            half_width: hw,
            weights,
            shape,
        }
    }

    /// Arbitrary odd-length table centred on offset zero.
    pub(crate) fn from_weight_vec(weights: Vec<f64>) -> Self {
        Self::from_weights(weights)
    }

    /// `δ^a` for even `a` in `2..=8`: signed binomial weights.
    pub fn even(a: usize) -> Result<Self, StencilError> {
        if a % 2 != 0 {
            return Err(StencilError::InvalidOperator {
                order: a,
                reason: "δ^a needs an even order; use δ^a μ for odd orders",
            });
        }
        if !(2..=8).contains(&a) {
            return Err(StencilError::InvalidOperator {
                order: a,
                reason: "even orders are limited to 2..=8",
            });
        }
        Ok(Self::from_weights(binomial_row(a)))
    }

    /// `δ^a μ` for odd `a` in `1..=7`: `δ^{a-1}` convolved with `δμ`,
    /// whose weights are `[-1/2, 0, 1/2]`.
    pub fn odd_mu(a: usize) -> Result<Self, StencilError> {
        if a % 2 != 1 {
            return Err(StencilError::InvalidOperator {
                order: a,
                reason: "δ^a μ needs an odd order; use δ^a for even orders",
            });
        }
        if a > 7 {
            return Err(StencilError::InvalidOperator {
                order: a,
                reason: "odd orders are limited to 1..=7",
            });
        }
        let base = binomial_row(a - 1);
        let mut weights = vec![0.0; base.len() + 2];
        for (i, &b) in base.iter().enumerate() {
            weights[i] -= 0.5 * b;
            weights[i + 2] += 0.5 * b;
        }
        Ok(Self::from_weights(weights))
    }

    /// Number of grid points touched.
    pub fn width(&self) -> usize {
        self.weights.len()
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// `(offset, weight)` pairs, offsets ascending.
    pub fn entries(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        let hw = self.half_width as isize;
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (i as isize - hw, w))
    }

    /// Grids must have at least `width + 1` points.
    pub fn check_len(&self, len: usize) -> Result<(), StencilError> {
        if len < self.width() + 1 {
            return Err(StencilError::GridTooCoarse {
                len,
                width: self.width(),
            });
        }
        Ok(())
    }

    /// Applies the stencil to a cyclic slice. The caller checks the length.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        let hw = self.half_width;
        debug_assert!(n > 2 * hw && out.len() == n);
        let w = &self.weights;
        match self.shape {
            Shape::SymmetricZeroSum => {
                for j in 0..n {
                    let c = 2.0 * u[j];
                    let mut acc = 0.0;
                    for o in 1..=hw {
                        acc += w[hw + o] * (u[wrap_fwd(j, o, n)] + u[wrap_back(j, o, n)] - c);
                    }
                    out[j] = acc;
                }
            }
            Shape::Antisymmetric => {
                for j in 0..n {
                    let mut acc = 0.0;
                    for o in 1..=hw {
                        acc += w[hw + o] * (u[wrap_fwd(j, o, n)] - u[wrap_back(j, o, n)]);
                    }
                    out[j] = acc;
                }
            }
            Shape::General => {
                for j in 0..n {
                    let mut acc = 0.0;
                    for (i, &wi) in w.iter().enumerate() {
                        acc += wi * u[wrap(j as isize + i as isize - hw as isize, n)];
                    }
                    out[j] = acc;
                }
            }
        }
    }

    pub fn apply(&self, u: &PeriodicSequence) -> Result<PeriodicSequence, StencilError> {
        self.check_len(u.len())?;
        let mut out = vec![0.0; u.len()];
        self.apply_into(u.as_slice(), &mut out);
        Ok(PeriodicSequence { values: out })
    }
}

/// `(-1)^i C(a, i)` for `i = 0..=a`, i.e. the expansion of `(S^{1/2} - S^{-1/2})^a`
/// listed from offset `-a/2` upward (symmetric for even `a`).
fn binomial_row(a: usize) -> Vec<f64> {
    let mut row = vec![1.0_f64];
    for _ in 0..a {
        let mut next = vec![0.0; row.len() + 1];
        for (i, &c) in row.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c;
        }
        row = next;
    }
    row
}

/// `δ^a u` for even `a`.
pub fn central_diff_even(u: &PeriodicSequence, a: usize) -> Result<PeriodicSequence, StencilError> {
    Stencil::even(a)?.apply(u)
}

/// `δ^a μ u` for odd `a`; `a = 1` gives `(u_{j+1} - u_{j-1}) / 2`.
pub fn central_diff_odd_mu(
    u: &PeriodicSequence,
    a: usize,
) -> Result<PeriodicSequence, StencilError> {
    Stencil::odd_mu(a)?.apply(u)
}

/// Fourier symbol of `δ^a` (even `a`) at phase `θ = k h`: `(-4 sin²(θ/2))^{a/2}`.
pub fn even_symbol(a: usize, theta: f64) -> f64 {
    let s = -4.0 * (0.5 * theta).sin().powi(2);
    s.powi((a / 2) as i32)
}
