//! Classical RK4 time stepping and the maximum-stable-step search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::eigen_spectrum;
use crate::error::{KsError, Result};
use crate::system::{norm2, norm_inf, System};

/// `‖u‖∞` above which a run counts as blown up.
pub const BLOW_UP: f64 = 1e6;

/// Reusable stage buffers for RK4.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `x` in place by one step of size `dt`.
    pub fn step(&mut self, sys: &System, x: &mut [f64], dt: f64) {
        let n = x.len();
        sys.rhs_into(x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * dt * self.k1[i];
        }
        sys.rhs_into(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * dt * self.k2[i];
        }
        sys.rhs_into(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + dt * self.k3[i];
        }
        sys.rhs_into(&self.tmp, &mut self.k4);
        let c = dt / 6.0;
        for i in 0..n {
            x[i] += c * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

/// One RK4 step; non-finite output is reported as a blow-up at step 1.
pub fn rk4_step(sys: &System, x: &[f64], dt: f64) -> Result<Vec<f64>> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(KsError::Usage(format!("time step must be positive (got {dt})")));
    }
    let mut y = x.to_vec();
    Rk4::new(x.len()).step(sys, &mut y, dt);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(KsError::BlowUp { step: 1, time: dt });
    }
    Ok(y)
}

/// Snapshots of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(|s| s.as_slice())
    }
}

/// Number of steps of size close to `dt` that land exactly on `t_end`.
pub fn step_count(dt: f64, t_end: f64) -> usize {
    ((t_end / dt) - 1e-9).ceil().max(1.0) as usize
}

/// Integrates to `t_end`, recording the initial state, every
/// `record_every`-th step and the final state.
pub fn integrate(
    sys: &System,
    x0: &[f64],
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory> {
    if dt <= 0.0 || t_end <= 0.0 || record_every == 0 {
        return Err(KsError::Usage(
            "integration needs dt > 0, t_end > 0 and record_every >= 1".into(),
        ));
    }
    if x0.len() != sys.dim() {
        return Err(KsError::Shape {
            expected: sys.dim(),
            got: x0.len(),
        });
    }
    let steps = step_count(dt, t_end);
    let h = t_end / steps as f64;
    let mut rk = Rk4::new(x0.len());
    let mut x = x0.to_vec();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x.clone()],
    };
    for s in 1..=steps {
        rk.step(sys, &mut x, h);
        let t = s as f64 * h;
        if x.iter().any(|v| !v.is_finite()) || norm_inf(&x) > BLOW_UP {
            return Err(KsError::BlowUp { step: s, time: t });
        }
        if s % record_every == 0 || s == steps {
            traj.times.push(t);
            traj.states.push(x.clone());
        }
    }
    Ok(traj)
}

/// Final state only, no recording.
pub fn advance(sys: &System, x0: &[f64], dt: f64, t_end: f64) -> Result<Vec<f64>> {
    let steps = step_count(dt, t_end);
    let h = t_end / steps as f64;
    let mut rk = Rk4::new(x0.len());
    let mut x = x0.to_vec();
    for s in 1..=steps {
        rk.step(sys, &mut x, h);
        if x.iter().any(|v| !v.is_finite()) || norm_inf(&x) > BLOW_UP {
            return Err(KsError::BlowUp {
                step: s,
                time: s as f64 * h,
            });
        }
    }
    Ok(x)
}

/// Settings for [`max_stable_dt`].
#[derive(Debug, Clone, Copy)]
pub struct StabilityProbe {
    pub horizon: f64,
    pub bound_factor: f64,
    /// Relative size of the seeded perturbation added to the base state.
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for StabilityProbe {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            bound_factor: 10.0,
            perturbation: 1e-6,
            seed: 1,
        }
    }
}

fn stays_bounded(sys: &System, x0: &[f64], dt: f64, horizon: f64, limit: f64) -> bool {
    let steps = step_count(dt, horizon);
    let mut rk = Rk4::new(x0.len());
    let mut x = x0.to_vec();
    for _ in 0..steps {
        rk.step(sys, &mut x, dt);
        let n = norm2(&x);
        if !n.is_finite() || n > limit {
            return false;
        }
    }
    true
}

/// Rounds down to two significant figures.
pub fn floor_2sf(v: f64) -> f64 {
    if v <= 0.0 {
        return v;
    }
    let e = v.log10().floor() as i32 - 1;
    let digits = (v / 10f64.powi(e)).floor();
    // Parse back so the result is the nearest double to the decimal.
    format!("{digits}e{e}").parse().unwrap()
}

/// Largest RK4 step keeping the solution bounded over the horizon, found by
/// bisection from the linear bound `2.8 / |λ|` and reported to two
/// significant figures.
pub fn max_stable_dt(sys: &System, x: &[f64], probe: StabilityProbe) -> Result<f64> {
    if probe.horizon <= 0.0 || probe.bound_factor <= 1.0 {
        return Err(KsError::Usage(
            "stability probe needs horizon > 0 and bound factor > 1".into(),
        ));
    }
    let residual = norm2(&sys.rhs(x)?);
    if residual > 1e-6 * norm2(x).max(1.0) {
        return Err(KsError::SearchInvalid(format!(
            "base state is not steady (residual {residual:e})"
        )));
    }
    let eigs = eigen_spectrum(&sys.jacobian(x))?;
    let lead = eigs[0].re;
    let rho = eigs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if lead > 1e-9 * rho.max(1.0) {
        return Err(KsError::SearchInvalid(format!(
            "base state is unstable (leading eigenvalue {lead:e})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
    let scale = probe.perturbation * norm_inf(x).max(1.0);
    let x0: Vec<f64> = x
        .iter()
        .map(|v| v + scale * rng.gen_range(-1.0..1.0))
        .collect();
    let limit = probe.bound_factor * norm2(&x0).max(1.0);
    let ok = |dt: f64| stays_bounded(sys, &x0, dt, probe.horizon, limit);

    let guess = 2.8 / rho.max(1e-12);
    let mut lo = 0.5 * guess;
    let mut tries = 0;
    while !ok(lo) {
        lo *= 0.5;
        tries += 1;
        if tries > 40 {
            return Err(KsError::SearchInvalid("no stable step found".into()));
        }
    }
    let mut hi = 2.0 * guess.max(lo);
    tries = 0;
    while ok(hi) {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 40 {
            return Err(KsError::SearchInvalid("no unstable step found".into()));
        }
    }
    while (hi - lo) > 1e-3 * lo {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(floor_2sf(lo))
}
