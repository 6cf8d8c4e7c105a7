//! Sine-mode Galerkin truncations, `u = Σ_{k=1}^m b_k sin(kx)` on `[0, π]`.

use crate::error::{KsError, Result};
use crate::model::{GalerkinState, ModelKind, ModelSpec};

/// `½ Σ_{j=1}^M j b_j [b_{k+j} + sign(k-j) b_{|k-j|}]`, with `b_0 = 0`,
/// `b_i = 0` for `i > M` and `sign(0) = 0`. `b[0]` holds `b_1`.
pub fn beta(b: &[f64], k: usize) -> Result<f64> {
    let m = b.len();
    if k == 0 || k > m {
        return Err(KsError::Index { index: k, max: m });
    }
    Ok(beta_unchecked(b, k))
}

fn beta_unchecked(b: &[f64], k: usize) -> f64 {
    let m = b.len();
    let at = |i: usize| if i == 0 || i > m { 0.0 } else { b[i - 1] };
    let mut s = 0.0;
    for j in 1..=m {
        let bj = b[j - 1];
        if bj == 0.0 {
            continue;
        }
        let lower = match k.cmp(&j) {
            std::cmp::Ordering::Greater => at(k - j),
            std::cmp::Ordering::Less => -at(j - k),
            std::cmp::Ordering::Equal => 0.0,
        };
        s += j as f64 * bj * (at(k + j) + lower);
    }
    0.5 * s
}

/// Linear growth rate of `sin(kx)`.
pub fn linear_rate(k: usize, alpha: f64) -> f64 {
    let k = k as f64;
    -4.0 * k.powi(4) + alpha * k * k
}

/// Fills `out` with `db/dt`; `buf` must have length `2m` (used by the
/// nonlinear variant only).
pub(crate) fn rhs_into(kind: ModelKind, alpha: f64, b: &[f64], buf: &mut [f64], out: &mut [f64]) {
    let m = b.len();
    match kind {
        ModelKind::Galerkin { .. } => {
            for k in 1..=m {
                out[k - 1] = linear_rate(k, alpha) * b[k - 1] - alpha * beta_unchecked(b, k);
            }
        }
        ModelKind::NonlinearGalerkin { .. } => {
            let padded = &mut buf[..2 * m];
            padded[..m].copy_from_slice(b);
            padded[m..].iter_mut().for_each(|v| *v = 0.0);
            let phi: Vec<f64> = (m + 1..=2 * m)
                .map(|j| -alpha / (4.0 * (j as f64).powi(4)) * beta_unchecked(padded, j))
                .collect();
            padded[m..].copy_from_slice(&phi);
            for k in 1..=m {
                out[k - 1] = linear_rate(k, alpha) * b[k - 1] - alpha * beta_unchecked(padded, k);
            }
        }
        _ => unreachable!("grid models do not reach the Galerkin evaluator"),
    }
}

/// Right-hand side of the traditional or first-iterate nonlinear Galerkin model.
pub fn rhs_galerkin(state: &GalerkinState, spec: &ModelSpec) -> Result<Vec<f64>> {
    let m = match spec.kind.galerkin_modes() {
        Some(m) => m,
        None => {
            return Err(KsError::Unsupported(format!(
                "{} is not a Galerkin model",
                spec.kind
            )))
        }
    };
    if state.modes() != m {
        return Err(KsError::Shape {
            expected: m,
            got: state.modes(),
        });
    }
    let mut buf = vec![0.0; 2 * m];
    let mut out = vec![0.0; m];
    rhs_into(spec.kind, spec.alpha, &state.b, &mut buf, &mut out);
    Ok(out)
}
