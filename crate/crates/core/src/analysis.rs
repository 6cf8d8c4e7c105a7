//! Power spectra, profile comparison and consistency-order estimates.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{KsError, Result};
use crate::integrate::{Trajectory, BLOW_UP};
use crate::model::{GridField, ModelSpec};
use crate::system::{norm_inf, Geometry, System};

/// `û_k = (1/N) Σ u_j e^{-ik x_j}` for `k = 0..N-1`, by direct summation.
pub fn dft(u: &[f64]) -> Vec<Complex64> {
    let n = u.len();
    let w = -2.0 * PI / n as f64;
    (0..n)
        .map(|k| {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, v) in u.iter().enumerate() {
                // Reduce k j mod n so the angle stays small.
                let a = w * ((k * j) % n) as f64;
                s += Complex64::from_polar(*v, a);
            }
            s / n as f64
        })
        .collect()
}

/// `|û_k|²` for `k = 1..N/2-1`, indexed from zero.
pub fn power_values(u: &[f64]) -> Vec<f64> {
    let c = dft(u);
    if cfg!(debug_assertions) {
        let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        let mean_sq = u.iter().map(|v| v * v).sum::<f64>() / u.len() as f64;
        debug_assert!(
            (total - mean_sq).abs() <= 1e-12 * mean_sq.max(1.0),
            "Parseval: {total} vs {mean_sq}"
        );
    }
    (1..u.len() / 2).map(|k| c[k].norm_sqr()).collect()
}

/// `(k, |û_k|²)` for `k = 1..N/2-1`.
pub fn dft_power(u: &GridField) -> Vec<(usize, f64)> {
    power_values(u.u.as_slice())
        .into_iter()
        .enumerate()
        .map(|(i, p)| (i + 1, p))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub wavenumbers: Vec<usize>,
    pub power: Vec<f64>,
    pub samples_used: usize,
    pub transient_skipped: f64,
}

impl SpectrumResult {
    /// `Σ |log10 S_k - log10 R_k|` over the first `kmax` wavenumbers.
    pub fn log_deviation(&self, reference: &SpectrumResult, kmax: usize) -> Result<f64> {
        if self.power.len() < kmax || reference.power.len() < kmax {
            return Err(KsError::InsufficientData(format!(
                "spectra need at least {kmax} wavenumbers"
            )));
        }
        Ok((0..kmax)
            .map(|i| (self.power[i].log10() - reference.power[i].log10()).abs())
            .sum())
    }
}

/// Mean power over snapshots with `t > skip`. Snapshots are values on the
/// whole periodic grid.
pub fn time_averaged_spectrum(traj: &Trajectory, skip: f64) -> Result<SpectrumResult> {
    let mut sum: Vec<f64> = Vec::new();
    let mut used = 0;
    for (t, u) in traj.times.iter().zip(&traj.states) {
        if *t <= skip {
            continue;
        }
        let p = power_values(u);
        if sum.is_empty() {
            sum = vec![0.0; p.len()];
        } else if p.len() != sum.len() {
            return Err(KsError::Shape {
                expected: sum.len(),
                got: p.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(&p) {
            *s += v;
        }
        used += 1;
    }
    if used == 0 {
        return Err(KsError::InsufficientData(format!(
            "no snapshots after t = {skip}"
        )));
    }
    Ok(SpectrumResult {
        wavenumbers: (1..=sum.len()).collect(),
        power: sum.into_iter().map(|s| s / used as f64).collect(),
        samples_used: used,
        transient_skipped: skip,
    })
}

/// Maps every snapshot to its values on the whole periodic grid.
pub fn full_grid_trajectory(sys: &System, traj: &Trajectory) -> Trajectory {
    Trajectory {
        times: traj.times.clone(),
        states: traj.states.iter().map(|x| sys.full_field(x)).collect(),
    }
}

/// Smooth periodic functions with known derivatives `(u, u', u'', u'''')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestProfile {
    /// `sin x + 0.3 cos 2x`
    Mixed,
    /// `sin x`
    Sine,
}

impl TestProfile {
    pub fn eval(&self, x: f64) -> [f64; 4] {
        match self {
            TestProfile::Mixed => {
                let (s1, c1) = x.sin_cos();
                let (s2, c2) = (2.0 * x).sin_cos();
                [
                    s1 + 0.3 * c2,
                    c1 - 0.6 * s2,
                    -s1 - 1.2 * c2,
                    s1 + 4.8 * c2,
                ]
            }
            TestProfile::Sine => {
                let (s, c) = x.sin_cos();
                [s, c, -s, s]
            }
        }
    }

    /// `-4u'''' - α(u'' + u u')`.
    pub fn exact_rhs(&self, x: f64, alpha: f64) -> f64 {
        let [u, u1, u2, u4] = self.eval(x);
        -4.0 * u4 - alpha * (u2 + u * u1)
    }
}

impl fmt::Display for TestProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestProfile::Mixed => "mixed",
            TestProfile::Sine => "sine",
        })
    }
}

impl FromStr for TestProfile {
    type Err = KsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(TestProfile::Mixed),
            "sine" => Ok(TestProfile::Sine),
            _ => Err(KsError::Usage(format!(
                "unknown test profile '{s}' (expected mixed or sine)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub model: ModelSpec,
    pub profile: TestProfile,
    pub grid_sizes: Vec<usize>,
    pub spacings: Vec<f64>,
    pub max_errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log h`.
    pub fitted_order: f64,
    /// False when some refinement failed to reduce the error.
    pub monotone: bool,
}

/// Evaluates the model on `[0, 2π)` grids of the given sizes and fits the
/// rate at which its RHS converges to the PDE.
pub fn consistency_order(
    spec: &ModelSpec,
    profile: TestProfile,
    grids: &[usize],
) -> Result<ConsistencyReport> {
    let width = spec
        .kind
        .stencil_width()
        .ok_or_else(|| KsError::Unsupported(format!("{} has no grid stencil", spec.kind)))?;
    if grids.len() < 2 {
        return Err(KsError::Usage("consistency needs at least two grids".into()));
    }
    if grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(KsError::Usage("grid sizes must be strictly ascending".into()));
    }
    if grids[0] < width + 1 {
        return Err(KsError::Usage(format!(
            "grids need at least {} points for {}",
            width + 1,
            spec.kind
        )));
    }
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for &n in grids {
        let sys = System::new(*spec, Some(Geometry::Full { n }))?;
        let nodes = Geometry::Full { n }.nodes();
        let u: Vec<f64> = nodes.iter().map(|&x| profile.eval(x)[0]).collect();
        let g = sys.rhs(&u)?;
        let err = nodes
            .iter()
            .zip(&g)
            .map(|(&x, v)| (v - profile.exact_rhs(x, spec.alpha)).abs())
            .fold(0.0, f64::max);
        spacings.push(2.0 * PI / n as f64);
        errors.push(err);
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    Ok(ConsistencyReport {
        model: *spec,
        profile,
        grid_sizes: grids.to_vec(),
        fitted_order: log_slope(&spacings, &errors),
        spacings,
        max_errors: errors,
        monotone,
    })
}

fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Trigonometric interpolant of periodic samples `u_j` at `s + j L/N`,
/// evaluated at `x`.
pub fn trig_interpolate(u: &[f64], shift: f64, length: f64, x: f64) -> f64 {
    let n = u.len();
    let c = dft(u);
    let w = 2.0 * PI / length * (x - shift);
    let mut v = c[0].re;
    for k in 1..n.div_ceil(2) {
        v += 2.0 * (c[k] * Complex64::from_polar(1.0, k as f64 * w)).re;
    }
    if n % 2 == 0 {
        v += (c[n / 2] * Complex64::from_polar(1.0, (n / 2) as f64 * w)).re;
    }
    v
}

/// Relative max-norm gap between `a` and the trigonometric interpolant of
/// `b` at `a`'s nodes.
pub fn profile_compare(a: &GridField, b: &GridField) -> Result<f64> {
    profile_compare_shifted(a, 0.0, b, 0.0)
}

/// As [`profile_compare`] with node `j` of each field at `shift + j h`.
pub fn profile_compare_shifted(
    a: &GridField,
    a_shift: f64,
    b: &GridField,
    b_shift: f64,
) -> Result<f64> {
    let l = a.domain_length;
    if (b.domain_length - l).abs() > 1e-12 * l.abs() {
        return Err(KsError::IncompatibleDomains(format!(
            "domain lengths {} and {}",
            a.domain_length, b.domain_length
        )));
    }
    if b.len() < a.len() {
        return Err(KsError::IncompatibleDomains(format!(
            "reference has {} points, coarser than the {} being checked",
            b.len(),
            a.len()
        )));
    }
    let bv = b.u.as_slice();
    if b.len() == a.len() && a_shift == b_shift {
        // Nodes coincide; no interpolation needed.
        let av = a.u.as_slice();
        let diff = av.iter().zip(bv).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        return Ok(if diff == 0.0 { 0.0 } else { diff / norm_inf(bv).max(f64::MIN_POSITIVE) });
    }
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (j, av) in a.u.as_slice().iter().enumerate() {
        let x = a_shift + j as f64 * a.h;
        let r = trig_interpolate(bv, b_shift, l, x);
        diff = diff.max((av - r).abs());
        scale = scale.max(r.abs());
    }
    if diff == 0.0 {
        return Ok(0.0);
    }
    Ok(diff / scale.max(f64::MIN_POSITIVE))
}

/// Fourth-order exponential time differencing for a model on a full
/// periodic grid: the linear part is integrated exactly in Fourier space,
/// so the step is limited by the dynamics rather than the stiffest mode.
/// Used for fine-grid reference runs.
pub fn etdrk4_integrate(
    sys: &System,
    x0: &[f64],
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory> {
    let n = match sys.geometry() {
        Some(Geometry::Full { n }) => n,
        _ => {
            return Err(KsError::Unsupported(
                "exponential integration needs a full periodic grid".into(),
            ))
        }
    };
    if dt <= 0.0 || t_end <= 0.0 || record_every == 0 {
        return Err(KsError::Usage(
            "integration needs dt > 0, t_end > 0 and record_every >= 1".into(),
        ));
    }
    if x0.len() != n {
        return Err(KsError::Shape {
            expected: n,
            got: x0.len(),
        });
    }
    let steps = crate::integrate::step_count(dt, t_end);
    let h = t_end / steps as f64;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let lin: Vec<f64> = (0..n)
        .map(|k| {
            let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            sys.symbol(kk).unwrap()
        })
        .collect();
    let (e, e2, q, f1, f2, f3) = etd_coefficients(&lin, h);

    let mut rhs = vec![0.0; n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut to_phys = |v: &[Complex64], u: &mut Vec<f64>| {
        buf.copy_from_slice(v);
        inv.process(&mut buf);
        u.clear();
        u.extend(buf.iter().map(|z| z.re / n as f64));
    };
    // Nonlinear part in Fourier space: transform of f(u) minus L û.
    let nonlinear = |v: &[Complex64], u: &[f64], rhs: &mut Vec<f64>| -> Vec<Complex64> {
        sys.rhs_into(u, rhs);
        let mut out: Vec<Complex64> = rhs.iter().map(|r| Complex64::new(*r, 0.0)).collect();
        fwd.process(&mut out);
        for k in 0..n {
            out[k] -= lin[k] * v[k];
        }
        out
    };

    let mut v: Vec<Complex64> = x0.iter().map(|r| Complex64::new(*r, 0.0)).collect();
    fwd.process(&mut v);
    let mut u = x0.to_vec();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![u.clone()],
    };
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    let mut b = a.clone();
    let mut c = a.clone();
    let mut tmp = Vec::with_capacity(n);
    for s in 1..=steps {
        let nv = nonlinear(&v, &u, &mut rhs);
        for k in 0..n {
            a[k] = e2[k] * v[k] + q[k] * nv[k];
        }
        to_phys(&a, &mut tmp);
        let na = nonlinear(&a, &tmp, &mut rhs);
        for k in 0..n {
            b[k] = e2[k] * v[k] + q[k] * na[k];
        }
        to_phys(&b, &mut tmp);
        let nb = nonlinear(&b, &tmp, &mut rhs);
        for k in 0..n {
            c[k] = e2[k] * a[k] + q[k] * (2.0 * nb[k] - nv[k]);
        }
        to_phys(&c, &mut tmp);
        let nc = nonlinear(&c, &tmp, &mut rhs);
        for k in 0..n {
            v[k] = e[k] * v[k] + nv[k] * f1[k] + 2.0 * (na[k] + nb[k]) * f2[k] + nc[k] * f3[k];
        }
        to_phys(&v, &mut u);
        let t = s as f64 * h;
        if u.iter().any(|x| !x.is_finite()) || norm_inf(&u) > BLOW_UP {
            return Err(KsError::BlowUp { step: s, time: t });
        }
        if s % record_every == 0 || s == steps {
            traj.times.push(t);
            traj.states.push(u.clone());
        }
    }
    Ok(traj)
}

type Coefficients = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

/// ETDRK4 weights, with the divided differences evaluated as means over a
/// circle of radius one around each `h λ` to avoid cancellation.
fn etd_coefficients(lin: &[f64], h: f64) -> Coefficients {
    const M: usize = 32;
    let roots: Vec<Complex64> = (1..=M)
        .map(|j| Complex64::from_polar(1.0, PI * (j as f64 - 0.5) / M as f64))
        .collect();
    let n = lin.len();
    let (mut e, mut e2, mut q) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut f1, mut f2, mut f3) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        let hl = h * lin[k];
        e[k] = hl.exp();
        e2[k] = (0.5 * hl).exp();
        let (mut sq, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
        for r in &roots {
            let z = hl + r;
            let ez = z.exp();
            let z3 = z * z * z;
            sq += (((0.5 * z).exp() - 1.0) / z).re;
            s1 += ((-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3).re;
            s2 += ((2.0 + z + ez * (z - 2.0)) / z3).re;
            s3 += ((-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3).re;
        }
        let m = M as f64;
        q[k] = h * sq / m;
        f1[k] = h * s1 / m;
        f2[k] = h * s2 / m;
        f3[k] = h * s3 / m;
    }
    (e, e2, q, f1, f2, f3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;

    #[test]
    fn single_sine_mode() {
        let f = GridField::sample(16, |x| x.sin()).unwrap();
        let p = dft_power(&f);
        assert_eq!(p.len(), 7);
        assert!((p[0].1 - 0.25).abs() < 1e-14);
        assert!(p[1..].iter().all(|(_, v)| *v < 1e-28));
        let c = GridField::sample(16, |_| 2.5).unwrap();
        assert!(dft_power(&c).iter().all(|(_, v)| *v < 1e-28));
    }

    #[test]
    fn steady_trajectory_spectrum() {
        let u: Vec<f64> = (0..12).map(|j| (j as f64 * 0.7).cos()).collect();
        let traj = Trajectory {
            times: vec![0.0, 1.0, 2.0, 3.0],
            states: vec![u.clone(); 4],
        };
        let s = time_averaged_spectrum(&traj, 0.5).unwrap();
        assert_eq!(s.samples_used, 3);
        let p = power_values(&u);
        for (a, b) in s.power.iter().zip(&p) {
            assert!((a - b).abs() <= 1e-15 * b.max(1.0));
        }
        let e = time_averaged_spectrum(&traj, 3.0).unwrap_err();
        assert_eq!(e.class(), "insufficient-data");
    }

    #[test]
    fn interpolation_is_exact_for_band_limited_data() {
        let f = |x: f64| 1.0 + x.sin() - 0.5 * (3.0 * x).cos();
        let fine = GridField::sample(32, f).unwrap();
        let coarse = GridField::sample(8, f).unwrap();
        assert!(profile_compare(&coarse, &fine).unwrap() <= 1e-12);
        assert_eq!(profile_compare(&fine, &fine).unwrap(), 0.0);
        assert_eq!(
            profile_compare(&fine, &coarse).unwrap_err().class(),
            "incompatible-domains"
        );
    }

    #[test]
    fn consistency_rejects_narrow_grids() {
        let spec = ModelSpec::new(ModelKind::Holistic { order: 5 }, 7.0);
        let e = consistency_order(&spec, TestProfile::Mixed, &[8, 16]).unwrap_err();
        assert_eq!(e.class(), "usage");
    }

    #[test]
    fn etdrk4_matches_linear_growth() {
        let sys = System::new(
            ModelSpec::new(ModelKind::Centered { order: 6 }, 3.0),
            Some(Geometry::Full { n: 16 }),
        )
        .unwrap();
        // Small amplitude: nonlinearity is negligible over a short run.
        let x0: Vec<f64> = Geometry::Full { n: 16 }
            .nodes()
            .iter()
            .map(|x| 1e-8 * x.sin())
            .collect();
        let tr = etdrk4_integrate(&sys, &x0, 1e-3, 0.5, 500).unwrap();
        let lam = sys.symbol(1.0).unwrap();
        let want = 1e-8 * (0.5 * lam).exp();
        let got = tr.last().unwrap()[4] / (2.0 * PI * 4.0 / 16.0).sin();
        assert!((got / want - 1.0).abs() < 1e-6, "{got} {want}");
    }
}
