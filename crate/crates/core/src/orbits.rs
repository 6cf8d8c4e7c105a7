//! Periodic orbits by single shooting, their Floquet multipliers, and
//! continuation of an orbit family in `α`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::continuation::{BifurcationKind, BifurcationPoint, SteadyState};
use crate::eigen::{eigen_spectrum, eigenvector};
use crate::error::{KsError, Result};
use crate::integrate::{Rk4, BLOW_UP};
use crate::system::{norm2, norm_inf, System};

/// Minimum number of RK4 steps per period.
pub const STEPS_PER_PERIOD: usize = 2000;
pub const SHOOTING_MAX_ITER: usize = 30;
/// Smallest period accepted before the orbit counts as collapsed.
pub const MIN_PERIOD: f64 = 1e-3;

/// `‖φ_T(x) - x‖ ≤ 1e-8 max(1, ‖x‖)`.
pub fn shooting_tol(x: &[f64]) -> f64 {
    1e-8 * norm2(x).max(1.0)
}

/// Starting point for [`shoot_orbit`].
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitGuess {
    pub anchor: Vec<f64>,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub anchor: Vec<f64>,
    pub period: f64,
    pub alpha: f64,
    /// Sorted by descending modulus.
    pub floquet: Vec<Complex64>,
    pub stable: bool,
    pub residual_norm: f64,
    /// For orbits mapped to themselves by half a period followed by
    /// translation by `π`, the multipliers of that half-period map.
    /// Their squares are the Floquet multipliers.
    pub half_multipliers: Option<Vec<Complex64>>,
    pub half_map: Option<DMatrix<f64>>,
    pub monodromy: DMatrix<f64>,
}

impl PeriodicOrbit {
    fn trivial_index(&self) -> usize {
        let mut best = 0;
        for (i, m) in self.floquet.iter().enumerate() {
            if (m - 1.0).norm() < (self.floquet[best] - 1.0).norm() {
                best = i;
            }
        }
        best
    }

    /// The multiplier nearest 1, carried by the flow direction.
    pub fn trivial_multiplier(&self) -> Complex64 {
        self.floquet[self.trivial_index()]
    }

    /// Largest multiplier in modulus after removing the trivial one.
    pub fn dominant_multiplier(&self) -> Complex64 {
        let t = self.trivial_index();
        self.floquet
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != t)
            .map(|(_, m)| *m)
            .next()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn as_guess(&self) -> OrbitGuess {
        OrbitGuess {
            anchor: self.anchor.clone(),
            period: self.period,
        }
    }
}

/// Guess for the orbit born at a Hopf point: the steady state displaced by
/// `eps` along the real part of the critical eigenvector (largest entry 1),
/// with period `2π/ω`.
pub fn hopf_seed(
    sys: &System,
    hb: &BifurcationPoint,
    steady: &SteadyState,
    eps: f64,
) -> Result<OrbitGuess> {
    if hb.kind != BifurcationKind::Hopf {
        return Err(KsError::Usage(format!(
            "orbit seeds need a Hopf point, got a {}",
            hb.kind
        )));
    }
    let omega = hb.eigen.im;
    if !(omega > 1e-8 * hb.eigen.norm().max(1.0)) {
        return Err(KsError::DegenerateHopf { omega });
    }
    let target = Complex64::new(0.0, omega);
    let lam = steady
        .eigenvalues
        .iter()
        .filter(|c| c.im > 0.0)
        .min_by(|a, b| (*a - target).norm().partial_cmp(&(*b - target).norm()).unwrap())
        .copied()
        .ok_or(KsError::DegenerateHopf { omega: 0.0 })?;
    if !(lam.im > 1e-8 * lam.norm().max(1.0)) {
        return Err(KsError::DegenerateHopf { omega: lam.im });
    }
    let j = sys.with_alpha(steady.alpha).jacobian(&steady.x);
    let v = eigenvector(&j, lam)?;
    let vmax = v.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let anchor = steady
        .x
        .iter()
        .zip(&v)
        .map(|(x, c)| x + eps * c.re / vmax.max(f64::MIN_POSITIVE))
        .collect();
    Ok(OrbitGuess {
        anchor,
        period: 2.0 * PI / lam.im,
    })
}

struct Flow<'a> {
    sys: &'a System,
    steps: usize,
    rk: Rk4,
}

impl Flow<'_> {
    fn run(&mut self, x: &[f64], period: f64) -> Result<Vec<f64>> {
        let h = period / self.steps as f64;
        let mut y = x.to_vec();
        for _ in 0..self.steps {
            self.rk.step(self.sys, &mut y, h);
        }
        if y.iter().any(|v| !v.is_finite()) || norm_inf(&y) > BLOW_UP {
            return Err(KsError::OrbitNotFound("flow blew up".into()));
        }
        Ok(y)
    }

    /// Central-difference monodromy and period derivative of the flow map.
    fn derivatives(&mut self, x: &[f64], period: f64) -> Result<(DMatrix<f64>, Vec<f64>)> {
        let n = x.len();
        let e = 1e-6 * norm2(x).max(1.0);
        let mut m = DMatrix::zeros(n, n);
        let mut xp = x.to_vec();
        for c in 0..n {
            xp[c] = x[c] + e;
            let a = self.run(&xp, period)?;
            xp[c] = x[c] - e;
            let b = self.run(&xp, period)?;
            xp[c] = x[c];
            for r in 0..n {
                m[(r, c)] = (a[r] - b[r]) / (2.0 * e);
            }
        }
        let d = 1e-6 * period;
        let a = self.run(x, period + d)?;
        let b = self.run(x, period - d)?;
        let g = a.iter().zip(&b).map(|(p, q)| (p - q) / (2.0 * d)).collect();
        Ok((m, g))
    }

    /// If `x` returns to itself after half a period and a half shift, the
    /// central-difference Jacobian of that map.
    fn half_map(&mut self, x: &[f64], period: f64) -> Result<Option<DMatrix<f64>>> {
        let n = x.len();
        let full = self.steps;
        self.steps = full / 2;
        let out = (|| {
            let Some(back) = self.sys.half_shift(&self.run(x, 0.5 * period)?) else {
                return Ok(None);
            };
            let gap = norm2(&back.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
            if gap > 1e-6 * norm2(x).max(1.0) {
                return Ok(None);
            }
            let e = 1e-6 * norm2(x).max(1.0);
            let mut m = DMatrix::zeros(n, n);
            let mut xp = x.to_vec();
            for c in 0..n {
                xp[c] = x[c] + e;
                let a = self.run(&xp, 0.5 * period)?;
                xp[c] = x[c] - e;
                let b = self.run(&xp, 0.5 * period)?;
                xp[c] = x[c];
                let d: Vec<f64> = a.iter().zip(&b).map(|(p, q)| (p - q) / (2.0 * e)).collect();
                let d = self.sys.half_shift(&d).expect("shift exists");
                for r in 0..n {
                    m[(r, c)] = d[r];
                }
            }
            Ok(Some(m))
        })();
        self.steps = full;
        out
    }
}

/// Step count for one period: at least [`STEPS_PER_PERIOD`], more when
/// the spectral radius of the Jacobian demands it for RK4 stability.
fn steps_for(sys: &System, x: &[f64], period: f64) -> Result<usize> {
    let rho = eigen_spectrum(&sys.jacobian(x))?
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let stable = (period * rho / 2.5).ceil() as usize;
    let steps = STEPS_PER_PERIOD.max(stable);
    Ok(steps + steps % 2)
}

fn multipliers(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let mut mu = eigen_spectrum(m)?;
    mu.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    Ok(mu)
}

/// Newton on `(φ_T(x) - x, f_1(x)) = 0` in the unknowns `(x, T)`.
pub fn shoot_orbit(sys: &System, guess: &OrbitGuess, alpha: f64) -> Result<PeriodicOrbit> {
    shoot_orbit_with(sys, guess, alpha, None)
}

/// [`shoot_orbit`] starting the chord iteration from a known monodromy,
/// typically that of a nearby orbit.
pub fn shoot_orbit_with(
    sys: &System,
    guess: &OrbitGuess,
    alpha: f64,
    monodromy: Option<&DMatrix<f64>>,
) -> Result<PeriodicOrbit> {
    if !(guess.period > 0.0) {
        return Err(KsError::Usage(format!(
            "orbit period must be positive (got {})",
            guess.period
        )));
    }
    if guess.anchor.len() != sys.dim() {
        return Err(KsError::Shape {
            expected: sys.dim(),
            got: guess.anchor.len(),
        });
    }
    let s = sys.with_alpha(alpha);
    let n = s.dim();
    let zero_amplitude = |x: &[f64], period: f64| -> Result<bool> {
        // Path length over one period, estimated from the speed at x.
        Ok(period * norm2(&s.rhs(x)?) <= 1e-6 * norm2(x).max(1.0))
    };
    if zero_amplitude(&guess.anchor, guess.period)? {
        return Err(KsError::OrbitNotFound("guess is an equilibrium".into()));
    }
    let mut x = guess.anchor.clone();
    let mut period = guess.period;
    let mut flow = Flow {
        sys: &s,
        steps: steps_for(&s, &x, period)?,
        rk: Rk4::new(n),
    };
    let mut f = vec![0.0; n];
    let mut res = f64::INFINITY;
    let mut last = f64::INFINITY;
    // Quasi-Newton: the shooting matrix starts from `monodromy` (or finite
    // differences) and is kept current by Broyden updates; it is rebuilt
    // from finite differences when the residual stops falling.
    let mut a: Option<DMatrix<f64>> = None;
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut chord = monodromy.filter(|m| m.nrows() == n).cloned();
    for _ in 0..SHOOTING_MAX_ITER {
        let y = flow.run(&x, period)?;
        s.rhs_into(&x, &mut f);
        let big = DVector::from_iterator(n + 1, y.iter().zip(&x).map(|(a, b)| a - b).chain([f[0]]));
        res = big.rows(0, n).norm();
        if res <= shooting_tol(&x) && f[0].abs() <= 1e-6 * norm2(&f) {
            break;
        }
        if let Some((old, dz)) = prev.take() {
            if res < last {
                if let Some(am) = a.as_mut() {
                    let u = (&big - &old - &*am * &dz) / dz.norm_squared();
                    *am += u * dz.transpose();
                }
            } else {
                a = None;
            }
        }
        if a.is_none() {
            let (m, g) = match chord.take() {
                // On the orbit, dφ_T/dT is the vector field.
                Some(m) => (m, f.clone()),
                None => flow.derivatives(&x, period)?,
            };
            let j = s.jacobian(&x);
            let mut am = DMatrix::zeros(n + 1, n + 1);
            am.view_mut((0, 0), (n, n)).copy_from(&m);
            for i in 0..n {
                am[(i, i)] -= 1.0;
                am[(i, n)] = g[i];
                am[(n, i)] = j[(0, i)];
            }
            a = Some(am);
        }
        last = res;
        let d = a
            .clone()
            .unwrap()
            .lu()
            .solve(&big)
            .ok_or_else(|| KsError::OrbitNotFound("singular shooting matrix".into()))?;
        for i in 0..n {
            x[i] -= d[i];
        }
        period -= d[n];
        if x.iter().any(|v| !v.is_finite()) || !period.is_finite() {
            return Err(KsError::OrbitNotFound("Newton produced non-finite values".into()));
        }
        if period < MIN_PERIOD {
            return Err(KsError::DegenerateOrbit(format!("period collapsed to {period:e}")));
        }
        prev = Some((big, -d));
    }
    if !(res <= shooting_tol(&x)) {
        return Err(KsError::OrbitNotFound(format!(
            "no convergence after {SHOOTING_MAX_ITER} iterations (residual {res:e})"
        )));
    }
    if zero_amplitude(&x, period)? {
        return Err(KsError::OrbitNotFound("converged to an equilibrium".into()));
    }
    // For symmetric orbits the monodromy is the square of the half map.
    let half_map = flow.half_map(&x, period)?;
    let (m, half_multipliers) = match &half_map {
        Some(h) => (h * h, Some(multipliers(h)?)),
        None => (flow.derivatives(&x, period)?.0, None),
    };
    let floquet = multipliers(&m)?;
    let mut orbit = PeriodicOrbit {
        anchor: x,
        period,
        alpha,
        floquet,
        stable: false,
        residual_norm: res,
        half_multipliers,
        half_map,
        monodromy: m,
    };
    orbit.stable = orbit.dominant_multiplier().norm() < 1.0;
    Ok(orbit)
}

/// Integrates from `x0` for `settle` time units, then returns the state at
/// the next downward zero of `f_1` and the time to the following one.
pub fn settle_on_cycle(
    sys: &System,
    x0: &[f64],
    period_guess: f64,
    settle: f64,
) -> Result<OrbitGuess> {
    let steps = steps_for(sys, x0, period_guess)?;
    let h = period_guess / steps as f64;
    let mut rk = Rk4::new(x0.len());
    let mut x = x0.to_vec();
    let n_settle = (settle / h).ceil() as usize;
    let check = |x: &[f64]| -> Result<()> {
        if x.iter().any(|v| !v.is_finite()) || norm_inf(x) > BLOW_UP {
            return Err(KsError::OrbitNotFound("flow blew up while settling".into()));
        }
        Ok(())
    };
    for _ in 0..n_settle {
        rk.step(sys, &mut x, h);
    }
    check(&x)?;
    let mut f = vec![0.0; x.len()];
    sys.rhs_into(&x, &mut f);
    let mut prev = f[0];
    let mut crossings: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut t = 0.0;
    let limit = 20 * steps;
    for _ in 0..limit {
        let before = x.clone();
        rk.step(sys, &mut x, h);
        t += h;
        sys.rhs_into(&x, &mut f);
        if prev > 0.0 && f[0] <= 0.0 {
            // Pick whichever end of the step is nearer the crossing.
            let frac = prev / (prev - f[0]);
            let at = t - h + frac * h;
            let state = if frac < 0.5 { before } else { x.clone() };
            crossings.push((at, state));
            if crossings.len() == 2 {
                break;
            }
        }
        prev = f[0];
    }
    check(&x)?;
    if crossings.len() < 2 {
        return Err(KsError::OrbitNotFound("trajectory did not settle on a cycle".into()));
    }
    Ok(OrbitGuess {
        period: crossings[1].0 - crossings[0].0,
        anchor: crossings.swap_remove(0).1,
    })
}

/// Shoots from a Hopf point at `hb.alpha + offset`. The seed from
/// [`hopf_seed`] is first integrated onto the cycle when the cycle
/// attracts; otherwise it is handed to Newton directly.
pub fn orbit_from_hopf(
    sys: &System,
    hb: &BifurcationPoint,
    offset: f64,
) -> Result<PeriodicOrbit> {
    let alpha = hb.alpha + offset;
    let s = sys.with_alpha(alpha);
    let steady = crate::continuation::newton_solve(&s, &hb.x, alpha)?;
    let scale = norm_inf(&steady.x).max(1.0);
    let guess = hopf_seed(&s, hb, &steady, 0.05 * scale)?;
    let sigma = steady
        .eigenvalues
        .iter()
        .filter(|c| c.im > 0.0)
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if sigma > 0.0 {
        let settle = (10.0 / sigma).clamp(50.0 * guess.period, 3000.0 * guess.period);
        if let Ok(g) = settle_on_cycle(&s, &guess.anchor, guess.period, settle) {
            if let Ok(o) = shoot_orbit(sys, &g, alpha) {
                return Ok(o);
            }
        }
    }
    let mut last = KsError::OrbitNotFound("no seed amplitude tried".into());
    for frac in [0.1, 0.05, 0.2, 0.02, 0.4] {
        let guess = hopf_seed(&s, hb, &steady, frac * scale)?;
        match shoot_orbit(sys, &guess, alpha) {
            Ok(o) => return Ok(o),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Step control for [`continue_orbits`].
#[derive(Debug, Clone, Copy)]
pub struct OrbitStep {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    pub alpha_resolution: f64,
    pub max_orbits: usize,
    /// Stop once this many period doublings have been found.
    pub max_events: usize,
}

impl Default for OrbitStep {
    fn default() -> Self {
        Self {
            initial: 0.1,
            min: 1e-4,
            max: 0.25,
            alpha_resolution: 5e-3,
            max_orbits: 2000,
            max_events: usize::MAX,
        }
    }
}

/// Multipliers watched for flips: those of the half-period map when the
/// orbit has one, since a flip there shows up as `+1` in the full
/// monodromy and breaks the symmetry instead of doubling the period.
fn flip_set(o: &PeriodicOrbit) -> &[Complex64] {
    o.half_multipliers.as_deref().unwrap_or(&o.floquet)
}

/// Number of real multipliers below `-1`.
fn flipped(o: &PeriodicOrbit) -> usize {
    flip_set(o)
        .iter()
        .filter(|m| m.re < -1.0 && m.im.abs() <= 1e-6 * m.norm())
        .count()
}

/// The real negative multiplier nearest `-1`.
fn flip_multiplier(o: &PeriodicOrbit) -> Complex64 {
    flip_set(o)
        .iter()
        .filter(|m| m.re < 0.0 && m.im.abs() <= 1e-6 * m.norm())
        .min_by(|a, b| (a.re + 1.0).abs().partial_cmp(&(b.re + 1.0).abs()).unwrap())
        .copied()
        .unwrap_or(Complex64::new(0.0, 0.0))
}

fn same_class(a: &PeriodicOrbit, b: &PeriodicOrbit) -> bool {
    a.half_map.is_some() == b.half_map.is_some()
}

fn lerp(a: &PeriodicOrbit, b: &PeriodicOrbit, t: f64) -> OrbitGuess {
    OrbitGuess {
        anchor: a
            .anchor
            .iter()
            .zip(&b.anchor)
            .map(|(p, q)| p + t * (q - p))
            .collect(),
        period: a.period + t * (b.period - a.period),
    }
}

fn extrapolate(prev: Option<&PeriodicOrbit>, cur: &PeriodicOrbit, alpha: f64) -> OrbitGuess {
    match prev {
        Some(p) if (cur.alpha - p.alpha).abs() > 0.0 => {
            lerp(p, cur, (alpha - p.alpha) / (cur.alpha - p.alpha))
        }
        _ => cur.as_guess(),
    }
}

/// Secant continuation of an orbit family in `α` towards `alpha_end`.
/// A real multiplier crossing `-1` is recorded as a period doubling, or
/// as a pitchfork of cycles when it belongs to the half-period map of a
/// symmetric orbit.
pub fn continue_orbits(
    sys: &System,
    first: &PeriodicOrbit,
    alpha_end: f64,
    ctl: OrbitStep,
    label: &str,
) -> Result<(Vec<PeriodicOrbit>, Vec<BifurcationPoint>)> {
    let dir = if alpha_end >= first.alpha { 1.0 } else { -1.0 };
    let mut orbits = vec![first.clone()];
    let mut events = Vec::new();
    let mut step = ctl.initial;
    while orbits.len() < ctl.max_orbits {
        let cur = orbits.last().unwrap();
        if (alpha_end - cur.alpha) * dir <= 1e-12 {
            break;
        }
        let alpha = if (alpha_end - cur.alpha) * dir < step {
            alpha_end
        } else {
            cur.alpha + dir * step
        };
        let prev = orbits.len().checked_sub(2).map(|i| &orbits[i]);
        let guess = extrapolate(prev, cur, alpha);
        // Landing on an orbit of the other symmetry class is a jump to
        // another branch, treated like a failed step.
        let next = match shoot_orbit_with(sys, &guess, alpha, Some(&cur.monodromy)) {
            Ok(o) if same_class(&o, cur) => o,
            _ => {
                step *= 0.5;
                if step < ctl.min {
                    return Err(KsError::ContinuationStall {
                        alpha: cur.alpha,
                        step,
                    });
                }
                continue;
            }
        };
        if flipped(&next) != flipped(cur) {
            events.push(locate_flip(sys, cur, &next, ctl, label));
        }
        orbits.push(next);
        if events.len() >= ctl.max_events {
            break;
        }
        step = (step * 1.5).min(ctl.max);
    }
    Ok((orbits, events))
}

fn locate_flip(
    sys: &System,
    a: &PeriodicOrbit,
    b: &PeriodicOrbit,
    ctl: OrbitStep,
    label: &str,
) -> BifurcationPoint {
    let mut lo = a.clone();
    let mut hi = b.clone();
    // Bisect to the resolution, then further until one end has its
    // multiplier close to -1.
    let near = |o: &PeriodicOrbit| (flip_multiplier(o).re + 1.0).abs() <= 1e-2;
    while (hi.alpha - lo.alpha).abs() > ctl.alpha_resolution
        || (!near(&lo) && !near(&hi) && (hi.alpha - lo.alpha).abs() > 1e-9)
    {
        let mid = 0.5 * (lo.alpha + hi.alpha);
        match shoot_orbit_with(sys, &lerp(&lo, &hi, 0.5), mid, Some(&lo.monodromy)) {
            Ok(o) if !same_class(&o, &lo) => break,
            Ok(o) if flipped(&o) == flipped(&lo) => lo = o,
            Ok(o) => hi = o,
            Err(_) => break,
        }
    }
    let (ml, mh) = (flip_multiplier(&lo), flip_multiplier(&hi));
    let (gl, gh) = (ml.re + 1.0, mh.re + 1.0);
    let alpha = if gl * gh < 0.0 {
        lo.alpha + (hi.alpha - lo.alpha) * gl / (gl - gh)
    } else {
        0.5 * (lo.alpha + hi.alpha)
    };
    let kind = if lo.half_map.is_some() {
        BifurcationKind::Pitchfork
    } else {
        BifurcationKind::PeriodDoubling
    };
    BifurcationPoint {
        kind,
        alpha,
        branch_label: label.to_string(),
        eigen: if gl.abs() < gh.abs() { ml } else { mh },
        x: hi.anchor.clone(),
        twin_found: None,
    }
}

/// From a symmetric orbit just past its symmetry-breaking pitchfork, finds
/// one of the asymmetric pair by pushing along the flip eigenvector and
/// letting the flow settle.
pub fn leave_symmetry(sys: &System, orbit: &PeriodicOrbit) -> Result<PeriodicOrbit> {
    let h = orbit
        .half_map
        .as_ref()
        .ok_or_else(|| KsError::Usage("orbit has no half-period symmetry".into()))?;
    let nu = flip_set(orbit)
        .iter()
        .filter(|m| m.re < -1.0 && m.im.abs() <= 1e-6 * m.norm())
        .min_by(|a, b| a.re.partial_cmp(&b.re).unwrap())
        .copied()
        .ok_or_else(|| KsError::Usage("orbit is not past a symmetry-breaking point".into()))?;
    let v = eigenvector(h, nu)?;
    let vmax = v.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let scale = norm_inf(&orbit.anchor).max(1.0) / vmax.max(f64::MIN_POSITIVE);
    let s = sys.with_alpha(orbit.alpha);
    let shifted = |eps: f64| -> Vec<f64> {
        orbit
            .anchor
            .iter()
            .zip(&v)
            .map(|(x, c)| x + eps * scale * c.re)
            .collect()
    };
    let asymmetric = |o: Result<PeriodicOrbit>| o.ok().filter(|o| o.half_map.is_none());
    // A stable asymmetric cycle attracts the perturbed flow; an unstable one
    // has to be hit by shooting directly.
    if let Ok(g) = settle_on_cycle(&s, &shifted(1e-2), orbit.period, 400.0 * orbit.period) {
        if let Some(o) = asymmetric(shoot_orbit(sys, &g, orbit.alpha)) {
            return Ok(o);
        }
    }
    for eps in [1e-2, -1e-2, 3e-2, -3e-2, 1e-1, -1e-1] {
        let g = OrbitGuess {
            anchor: shifted(eps),
            period: orbit.period,
        };
        if let Some(o) = asymmetric(shoot_orbit(sys, &g, orbit.alpha)) {
            return Ok(o);
        }
    }
    Err(KsError::OrbitNotFound(
        "no asymmetric cycle near the symmetric one".into(),
    ))
}

/// α offset from a Hopf point at which the first orbit is shot.
pub const HOPF_OFFSET: f64 = 0.2;

/// Follows the cycle born at `hb` to its first period doubling. A cycle
/// with the half-period symmetry first loses it in a pitchfork of cycles;
/// the search then continues on one of the asymmetric pair.
pub fn first_period_doubling(
    sys: &System,
    hb: &BifurcationPoint,
    alpha_end: f64,
    ctl: OrbitStep,
    label: &str,
) -> Result<(Vec<PeriodicOrbit>, Vec<BifurcationPoint>)> {
    let ctl = OrbitStep {
        max_events: 1,
        ..ctl
    };
    let first = orbit_from_hopf(sys, hb, HOPF_OFFSET)?;
    let (mut orbits, mut events) = continue_orbits(sys, &first, alpha_end, ctl, label)?;
    let Some(pf) = events.last().filter(|e| e.kind == BifurcationKind::Pitchfork) else {
        return Ok((orbits, events));
    };
    let pf_alpha = pf.alpha;
    // Break the symmetry close to the pitchfork: the asymmetric cycles can
    // lose stability again soon after it.
    let n = orbits.len();
    let (a, b) = (&orbits[n - 2], &orbits[n - 1]);
    let mut asym = None;
    for d in [0.02, 0.05] {
        let alpha = pf_alpha + d;
        if alpha >= b.alpha {
            break;
        }
        let g = lerp(a, b, (alpha - a.alpha) / (b.alpha - a.alpha));
        let Ok(o) = shoot_orbit_with(sys, &g, alpha, Some(&b.monodromy)) else {
            continue;
        };
        if o.half_map.is_some() {
            if let Ok(x) = leave_symmetry(sys, &o) {
                asym = Some(x);
                break;
            }
        }
    }
    let asym = match asym {
        Some(x) => x,
        None => leave_symmetry(sys, b)?,
    };
    let (more, ev) = if flipped(&asym) > 0 {
        // Already past a flip: look for it between here and the pitchfork.
        continue_orbits(sys, &asym, pf_alpha, ctl, label)?
    } else {
        continue_orbits(sys, &asym, alpha_end, ctl, label)?
    };
    orbits.extend(more);
    events.extend(ev);
    Ok((orbits, events))
}
