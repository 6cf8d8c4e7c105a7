//! Steady states: Newton solves, pseudo-arclength continuation in `α`, and
//! detection and classification of bifurcations along a branch.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::eigen::{eigen_spectrum, eigenvector};
use crate::error::{KsError, Result};
use crate::system::{norm2, norm_inf, Geometry, System};

pub const NEWTON_MAX_ITER: usize = 50;
/// Grid size whose norm the signed norm is scaled to.
pub const REFERENCE_POINTS: usize = 48;

/// Converged when `‖f‖₂ ≤ 1e-10 max(1, ‖x‖₂)`.
pub fn newton_tol(x: &[f64]) -> f64 {
    1e-10 * norm2(x).max(1.0)
}

/// Size of the rounding error made when evaluating `f` near `x`,
/// `8 ε ‖ |J| |x| ‖₂`. On fine, stiff grids this exceeds [`newton_tol`].
pub fn rounding_floor(j: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for r in 0..n {
        let v: f64 = (0..n).map(|c| j[(r, c)].abs() * x[c].abs()).sum();
        s += v * v;
    }
    8.0 * f64::EPSILON * s.sqrt()
}

fn tolerance(j: &DMatrix<f64>, x: &[f64]) -> f64 {
    newton_tol(x).max(rounding_floor(j, x))
}

/// A converged equilibrium and its linear stability.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub x: Vec<f64>,
    pub alpha: f64,
    pub residual_norm: f64,
    /// Sorted by descending real part.
    pub eigenvalues: Vec<Complex64>,
    pub n_unstable: usize,
}

impl SteadyState {
    pub fn stable(&self) -> bool {
        self.n_unstable == 0
    }
}

pub fn count_unstable(eigs: &[Complex64]) -> usize {
    eigs.iter().filter(|c| c.re > 0.0).count()
}

/// Spectrum and residual of `x` at `α`.
pub fn analyse(sys: &System, x: &[f64], alpha: f64) -> Result<SteadyState> {
    let s = sys.with_alpha(alpha);
    let f = s.rhs(x)?;
    let eigenvalues = eigen_spectrum(&s.jacobian(x))?;
    let n_unstable = count_unstable(&eigenvalues);
    Ok(SteadyState {
        x: x.to_vec(),
        alpha,
        residual_norm: norm2(&f),
        eigenvalues,
        n_unstable,
    })
}

fn lu_solve(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let n = a.nrows();
    let lu = a.lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for i in 0..n {
        lo = lo.min(u[(i, i)].abs());
        hi = hi.max(u[(i, i)].abs());
    }
    if !(lo > 1e-14 * hi) {
        return Err(KsError::NearBifurcation);
    }
    lu.solve(&b).ok_or(KsError::NearBifurcation)
}

/// Newton iteration on `f(x; α) = 0` with a dense Jacobian.
pub fn newton_solve(sys: &System, guess: &[f64], alpha: f64) -> Result<SteadyState> {
    if guess.iter().any(|v| !v.is_finite()) {
        return Err(KsError::Usage("Newton guess must be finite".into()));
    }
    let s = sys.with_alpha(alpha);
    let mut x = guess.to_vec();
    let mut f = s.rhs(&x)?;
    let mut res = norm2(&f);
    let mut tol = newton_tol(&x);
    for _ in 0..NEWTON_MAX_ITER {
        let j = s.jacobian(&x);
        tol = tolerance(&j, &x);
        if res <= tol {
            return analyse(sys, &x, alpha);
        }
        let dx = lu_solve(j, DVector::from_vec(f.clone()))?;
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi -= d;
        }
        s.rhs_into(&x, &mut f);
        res = norm2(&f);
        if !res.is_finite() {
            break;
        }
    }
    if res <= tol {
        return analyse(sys, &x, alpha);
    }
    Err(KsError::Divergence {
        iterations: NEWTON_MAX_ITER,
        residual: res,
    })
}

/// Sign of the first nonzero entry (zero for the zero vector).
fn leading_sign(x: &[f64]) -> f64 {
    x.iter()
        .find(|v| **v != 0.0)
        .map(|v| v.signum())
        .unwrap_or(0.0)
}

/// `sign(u_1) ‖u‖₂ sqrt(reference_points / m)` for an odd state with `m`
/// elements; when `u_1 = 0` the first nonzero value sets the sign.
pub fn signed_norm(w: &[f64], m: usize, reference_points: usize) -> f64 {
    leading_sign(w) * norm2(w) * (reference_points as f64 / m as f64).sqrt()
}

/// Signed norm for any layout. Galerkin states are sampled on the interior
/// nodes of the reference grid.
pub fn signed_norm_for(sys: &System, x: &[f64]) -> f64 {
    match sys.geometry() {
        Some(Geometry::OddNodal { m } | Geometry::Odd { m }) => {
            signed_norm(x, m, REFERENCE_POINTS)
        }
        Some(Geometry::Full { n }) => {
            leading_sign(&x[1..]) * norm2(x) * (2.0 * REFERENCE_POINTS as f64 / n as f64).sqrt()
        }
        None => {
            let h = std::f64::consts::PI / REFERENCE_POINTS as f64;
            let u: Vec<f64> = (1..REFERENCE_POINTS)
                .map(|j| {
                    x.iter()
                        .enumerate()
                        .map(|(k, b)| b * ((k + 1) as f64 * j as f64 * h).sin())
                        .sum()
                })
                .collect();
            leading_sign(&u) * norm2(&u)
        }
    }
}

/// Step-size policy for pseudo-arclength continuation.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    /// Failure floor: halving below this raises a stall error.
    pub floor: f64,
    pub max_points: usize,
    /// Bisection stops once the bracketing `α` values are this close.
    pub alpha_resolution: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            initial: 0.1,
            min: 1e-4,
            max: 1.0,
            floor: 1e-8,
            max_points: 3000,
            alpha_resolution: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BifurcationKind {
    Pitchfork,
    Fold,
    Hopf,
    PeriodDoubling,
}

impl fmt::Display for BifurcationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BifurcationKind::Pitchfork => "pitchfork",
            BifurcationKind::Fold => "fold",
            BifurcationKind::Hopf => "hopf",
            BifurcationKind::PeriodDoubling => "period-doubling",
        })
    }
}

impl std::str::FromStr for BifurcationKind {
    type Err = KsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pitchfork" => Ok(BifurcationKind::Pitchfork),
            "fold" => Ok(BifurcationKind::Fold),
            "hopf" => Ok(BifurcationKind::Hopf),
            "period-doubling" => Ok(BifurcationKind::PeriodDoubling),
            _ => Err(KsError::Parse(format!("unknown bifurcation kind '{s}'"))),
        }
    }
}

/// A located event on a branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationPoint {
    pub kind: BifurcationKind,
    pub alpha: f64,
    pub branch_label: String,
    /// The eigenvalue (or Floquet multiplier) that crosses.
    pub eigen: Complex64,
    /// State at the bracket end nearest the event.
    pub x: Vec<f64>,
    /// Whether a second branch was found through the point (real crossings
    /// that are not folds).
    pub twin_found: Option<bool>,
}

/// Accepted continuation points.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub label: String,
    pub points: Vec<SteadyState>,
    pub signed_norms: Vec<f64>,
}

/// Weighted inner product on `(x, α)`: state components carry weight `1/dim`.
#[derive(Debug, Clone, Copy)]
struct Metric {
    theta: f64,
}

impl Metric {
    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() - 1;
        let s: f64 = a[..n].iter().zip(&b[..n]).map(|(p, q)| p * q).sum();
        self.theta * s + a[n] * b[n]
    }

    fn norm(&self, a: &[f64]) -> f64 {
        self.dot(a, a).sqrt()
    }

    fn normalise(&self, a: &mut [f64]) {
        let n = self.norm(a);
        a.iter_mut().for_each(|v| *v /= n);
    }
}

#[derive(Debug, Clone)]
struct Point {
    y: Vec<f64>,
    tangent: Vec<f64>,
    state: SteadyState,
}

impl Point {
    fn alpha(&self) -> f64 {
        *self.y.last().unwrap()
    }
}

struct Tracer<'a> {
    sys: &'a System,
    metric: Metric,
    ctl: StepControl,
}

impl<'a> Tracer<'a> {
    fn new(sys: &'a System, ctl: StepControl) -> Self {
        Self {
            sys,
            metric: Metric {
                theta: 1.0 / sys.dim() as f64,
            },
            ctl,
        }
    }

    fn split<'b>(&self, y: &'b [f64]) -> (&'b [f64], f64) {
        let n = y.len() - 1;
        (&y[..n], y[n])
    }

    /// `[[J, f_α], [θ τ_xᵀ, τ_α]]`.
    fn bordered(&self, y: &[f64], tau: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
        let (x, alpha) = self.split(y);
        let n = x.len();
        let s = self.sys.with_alpha(alpha);
        let j = s.jacobian(x);
        let mut fa = vec![0.0; n];
        s.rhs_alpha(x, &mut fa);
        let mut a = DMatrix::zeros(n + 1, n + 1);
        a.view_mut((0, 0), (n, n)).copy_from(&j);
        for i in 0..n {
            a[(i, n)] = fa[i];
            a[(n, i)] = self.metric.theta * tau[i];
        }
        a[(n, n)] = tau[n];
        let mut f = vec![0.0; n];
        s.rhs_into(x, &mut f);
        (a, f)
    }

    /// Unit tangent at `y`, oriented to agree with `reference`.
    fn tangent(&self, y: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
        let (a, _) = self.bordered(y, reference);
        let n = y.len();
        let mut rhs = DVector::zeros(n);
        rhs[n - 1] = 1.0;
        let t = lu_solve(a, rhs)?;
        let mut t: Vec<f64> = t.iter().copied().collect();
        self.metric.normalise(&mut t);
        Ok(t)
    }

    /// Keller corrector for `f = 0`, `⟨τ, y - y0⟩ = ds`. Returns the point
    /// and the iteration count.
    fn correct(&self, y0: &[f64], tau: &[f64], ds: f64) -> Result<(Vec<f64>, usize)> {
        let n = y0.len();
        let mut y: Vec<f64> = y0.iter().zip(tau).map(|(a, t)| a + ds * t).collect();
        for it in 1..=12 {
            let (a, f) = self.bordered(&y, tau);
            let floor = rounding_floor(&a.view((0, 0), (n - 1, n - 1)).into_owned(), &y[..n - 1]);
            let d: Vec<f64> = y.iter().zip(y0).map(|(p, q)| p - q).collect();
            let g = self.metric.dot(tau, &d) - ds;
            let mut r = DVector::from_vec(f.clone());
            r = r.push(g);
            let dy = lu_solve(a, r)?;
            for i in 0..n {
                y[i] -= dy[i];
            }
            if y.iter().any(|v| !v.is_finite()) {
                break;
            }
            let (x, alpha) = self.split(&y);
            let mut fx = vec![0.0; n - 1];
            self.sys.rhs_at(x, alpha, &mut fx);
            let step = self.metric.norm(dy.as_slice());
            let tol = newton_tol(x).max(floor);
            if norm2(&fx) <= tol && (it >= 2 || step <= 1e-6 * ds.abs().max(1e-3)) {
                return Ok((y, it));
            }
        }
        Err(KsError::Divergence {
            iterations: 12,
            residual: f64::NAN,
        })
    }

    fn make_point(&self, y: Vec<f64>, tangent: Vec<f64>) -> Result<Point> {
        let (x, alpha) = self.split(&y);
        let state = analyse(self.sys, x, alpha)?;
        Ok(Point { y, tangent, state })
    }

    fn point_at(&self, from: &Point, ds: f64) -> Result<Point> {
        let (y, _) = self.correct(&from.y, &from.tangent, ds)?;
        let t = self.tangent(&y, &from.tangent)?;
        self.make_point(y, t)
    }

    /// Bisects the arclength interval `(0, ds]` from `a` for the first change
    /// of `n_unstable`, then keeps going to the end of the step.
    fn locate(&self, a: &Point, b: &Point, ds: f64, label: &str, out: &mut Vec<BifurcationPoint>) {
        let mut lo = (0.0, a.clone());
        let end = (ds, b.clone());
        let mut guard = 0;
        while lo.1.state.n_unstable != end.1.state.n_unstable && guard < 8 {
            guard += 1;
            let mut hi = end.clone();
            while (hi.1.alpha() - lo.1.alpha()).abs() > self.ctl.alpha_resolution
                && hi.0 - lo.0 > 1e-10
            {
                let mid = 0.5 * (lo.0 + hi.0);
                match self.point_at(a, mid) {
                    Ok(p) => {
                        if p.state.n_unstable == lo.1.state.n_unstable {
                            lo = (mid, p);
                        } else {
                            hi = (mid, p);
                        }
                    }
                    Err(_) => break,
                }
            }
            out.push(self.classify(&lo.1, &hi.1, label));
            lo = hi;
        }
    }

    fn classify(&self, lo: &Point, hi: &Point, label: &str) -> BifurcationPoint {
        let nearest = |p: &Point| -> Complex64 {
            *p.state
                .eigenvalues
                .iter()
                .min_by(|a, b| a.re.abs().partial_cmp(&b.re.abs()).unwrap())
                .unwrap()
        };
        let (el, eh) = (nearest(lo), nearest(hi));
        let (al, ah) = (lo.alpha(), hi.alpha());
        let alpha = if el.re * eh.re < 0.0 {
            al + (ah - al) * el.re / (el.re - eh.re)
        } else {
            0.5 * (al + ah)
        };
        let re = 0.0;
        let im = eh.im.abs();
        let complex = im > 1e-6 * eh.norm().max(1.0);
        let n = lo.y.len() - 1;
        let (kind, twin) = if complex {
            (BifurcationKind::Hopf, None)
        } else if lo.tangent[n] * hi.tangent[n] < 0.0 {
            (BifurcationKind::Fold, None)
        } else {
            let twin = self.twin_test(hi, eh.re);
            (BifurcationKind::Pitchfork, Some(twin))
        };
        BifurcationPoint {
            kind,
            alpha,
            branch_label: event_label(self.sys, label, &hi.state.x),
            eigen: Complex64::new(re, im),
            x: hi.state.x.clone(),
            twin_found: twin,
        }
    }

    /// Real null direction at `p`, extended by a zero `α` component.
    fn null_direction(&self, p: &Point, lambda: f64) -> Option<Vec<f64>> {
        let (x, alpha) = self.split(&p.y);
        let j = self.sys.with_alpha(alpha).jacobian(x);
        let v = eigenvector(&j, Complex64::new(lambda, 0.0)).ok()?;
        let mut y: Vec<f64> = v.iter().map(|c| c.re).collect();
        y.push(0.0);
        self.metric.normalise(&mut y);
        Some(y)
    }

    fn twin_test(&self, p: &Point, lambda: f64) -> bool {
        let Some(v) = self.null_direction(p, lambda) else {
            return false;
        };
        for ds in [0.05, -0.05] {
            if let Ok((y, _)) = self.correct(&p.y, &v, ds) {
                let d: Vec<f64> = y.iter().zip(&p.y).map(|(a, b)| a - b).collect();
                let along = self.metric.dot(&d, &p.tangent);
                let perp: Vec<f64> = d
                    .iter()
                    .zip(&p.tangent)
                    .map(|(a, t)| a - along * t)
                    .collect();
                if self.metric.norm(&perp) > 0.5 * self.metric.norm(&d) {
                    return true;
                }
            }
        }
        false
    }

    fn trace(
        &self,
        seed: Point,
        alpha_range: (f64, f64),
        label: &str,
        stop_at_trivial: bool,
    ) -> Result<(Branch, Vec<BifurcationPoint>)> {
        let mut events = Vec::new();
        let mut pts = vec![seed];
        let mut ds = self.ctl.initial;
        let in_range = |a: f64| a >= alpha_range.0 - 1e-12 && a <= alpha_range.1 + 1e-12;
        while pts.len() < self.ctl.max_points {
            let cur = pts.last().unwrap();
            let attempt = self.correct(&cur.y, &cur.tangent, ds).and_then(|(y, its)| {
                let t = self.tangent(&y, &cur.tangent)?;
                Ok((y, t, its))
            });
            let (y, t, its) = match attempt {
                Ok(v) => v,
                Err(_) => {
                    ds *= 0.5;
                    if ds < self.ctl.floor {
                        return Err(KsError::ContinuationStall {
                            alpha: cur.alpha(),
                            step: ds,
                        });
                    }
                    continue;
                }
            };
            // Reject sharp turns: they usually mean a jump between branches.
            if self.metric.dot(&t, &cur.tangent) < 0.9 && ds > self.ctl.min {
                ds = (0.5 * ds).max(self.ctl.min);
                continue;
            }
            let next = self.make_point(y, t)?;
            if next.state.n_unstable != cur.state.n_unstable {
                self.locate(cur, &next, ds, label, &mut events);
            }
            let crossed_trivial = stop_at_trivial && pts.len() > 3 && {
                let (xa, _) = self.split(&cur.y);
                let (xb, _) = self.split(&next.y);
                segment_distance_to_origin(xa, xb) <= 1e-2 * norm2(xa).max(norm2(xb))
                    || norm_inf(xb) < 1e-4
            };
            let leave = !in_range(next.alpha());
            if !leave {
                pts.push(next);
            }
            if leave || crossed_trivial {
                break;
            }
            if its < 4 {
                ds *= 2.0;
            } else if its > 8 {
                ds *= 0.5;
            }
            ds = ds.clamp(self.ctl.min, self.ctl.max);
        }
        // Events are reported only inside the requested range.
        events.retain(|e| in_range(e.alpha));
        let signed_norms = pts
            .iter()
            .map(|p| signed_norm_for(self.sys, &p.state.x))
            .collect();
        let branch = Branch {
            label: label.to_string(),
            points: pts.into_iter().map(|p| p.state).collect(),
            signed_norms,
        };
        Ok((branch, events))
    }
}

/// A branch that returns to the trivial state changes sign on the way, so
/// events are labelled by the sign of the state where they occur.
fn event_label(sys: &System, branch: &str, x: &[f64]) -> String {
    let family = branch.trim_end_matches(['+', '-']);
    if family == branch {
        return branch.to_string();
    }
    let sign = if signed_norm_for(sys, x) < 0.0 { "-" } else { "+" };
    format!("{family}{sign}")
}

fn segment_distance_to_origin(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
    let dd: f64 = d.iter().map(|v| v * v).sum();
    let t = if dd > 0.0 {
        (-a.iter().zip(&d).map(|(p, q)| p * q).sum::<f64>() / dd).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm2(&a.iter().zip(&d).map(|(p, q)| p + t * q).collect::<Vec<_>>())
}

/// Continues a converged steady state in `α`. `direction` (state part, `α`
/// part) orients the first step; by default `α` increases.
pub fn continue_branch(
    sys: &System,
    seed: &SteadyState,
    direction: Option<(Vec<f64>, f64)>,
    alpha_range: (f64, f64),
    ctl: StepControl,
    label: &str,
) -> Result<(Branch, Vec<BifurcationPoint>)> {
    let j = sys.with_alpha(seed.alpha).jacobian(&seed.x);
    if seed.residual_norm > 10.0 * tolerance(&j, &seed.x) {
        return Err(KsError::Usage("continuation seed is not converged".into()));
    }
    let tracer = Tracer::new(sys, ctl);
    let mut y = seed.x.clone();
    y.push(seed.alpha);
    let mut reference = match direction {
        Some((dx, da)) => {
            let mut r = dx;
            r.push(da);
            r
        }
        None => {
            let mut r = vec![0.0; seed.x.len()];
            r.push(1.0);
            r
        }
    };
    tracer.metric.normalise(&mut reference);
    let t = tracer.tangent(&y, &reference)?;
    let start = Point {
        y,
        tangent: t,
        state: seed.clone(),
    };
    let stop_at_trivial = norm_inf(&seed.x) > 0.0;
    tracer.trace(start, alpha_range, label, stop_at_trivial)
}

/// Names of the primary families by pitchfork index on the trivial branch.
pub fn family_name(k: usize) -> String {
    match k {
        1 => "unimodal".into(),
        2 => "bimodal".into(),
        3 => "trimodal".into(),
        4 => "quadrimodal".into(),
        _ => format!("mode{k}"),
    }
}

/// A full diagram: the trivial branch plus both signs of every primary
/// branch leaving it.
#[derive(Debug, Clone)]
pub struct Diagram {
    pub branches: Vec<Branch>,
    pub events: Vec<BifurcationPoint>,
    /// `(family index, α)` of the pitchforks on the trivial branch.
    pub primaries: Vec<(usize, f64)>,
}

impl Diagram {
    pub fn events_on(&self, family: &str) -> Vec<&BifurcationPoint> {
        self.events
            .iter()
            .filter(|e| e.branch_label.trim_end_matches(['+', '-']) == family)
            .collect()
    }

    pub fn branch(&self, label: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.label == label)
    }
}

/// Seeds a primary branch from the trivial state at `α*` with amplitude
/// `±1e-3` along the critical eigenvector.
pub fn switch_from_trivial(
    sys: &System,
    alpha_star: f64,
    k_index: usize,
    sign: f64,
) -> Result<(SteadyState, Vec<f64>)> {
    let dim = sys.dim();
    let zero = vec![0.0; dim];
    let j = sys.with_alpha(alpha_star).jacobian(&zero);
    let eigs = eigen_spectrum(&j)?;
    let lam = eigs
        .iter()
        .min_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
        .copied()
        .unwrap();
    let v = eigenvector(&j, lam)?;
    let mut v: Vec<f64> = v.iter().map(|c| c.re).collect();
    let vmax = norm_inf(&v);
    let s = leading_sign(&v);
    v.iter_mut().for_each(|c| *c *= s / vmax);
    let guess: Vec<f64> = v.iter().map(|c| sign * 1e-3 * c).collect();
    let tracer = Tracer::new(sys, StepControl::default());
    // One corrector step perpendicular to the null direction pins α.
    let mut y0 = zero.clone();
    y0.push(alpha_star);
    let mut dir: Vec<f64> = guess.clone();
    dir.push(0.0);
    let amp = tracer.metric.norm(&dir);
    tracer.metric.normalise(&mut dir);
    let (y, _) = tracer.correct(&y0, &dir, amp)?;
    let n = y.len() - 1;
    let state = analyse(sys, &y[..n], y[n])?;
    let _ = k_index;
    let mut d = guess;
    let a = leading_sign(&d);
    if a == 0.0 {
        d = v;
    }
    Ok((state, d))
}

/// Traces the trivial branch over `alpha_range` and both signs of every
/// primary branch born on it.
pub fn bifurcation_diagram(
    sys: &System,
    alpha_range: (f64, f64),
    ctl: StepControl,
) -> Result<Diagram> {
    let zero = vec![0.0; sys.dim()];
    let seed = analyse(sys, &zero, alpha_range.0)?;
    let (trivial, trivial_events) =
        continue_branch(sys, &seed, None, alpha_range, ctl, "trivial")?;
    let mut branches = vec![trivial];
    let mut events = trivial_events.clone();
    let mut primaries = Vec::new();
    let mut k = 0;
    for e in trivial_events
        .iter()
        .filter(|e| e.kind == BifurcationKind::Pitchfork)
    {
        k += 1;
        primaries.push((k, e.alpha));
        for sign in [1.0, -1.0] {
            let label = format!("{}{}", family_name(k), if sign > 0.0 { "+" } else { "-" });
            let (seed, dir) = switch_from_trivial(sys, e.alpha, k, sign)?;
            let (b, ev) = continue_branch(sys, &seed, Some((dir, 0.0)), alpha_range, ctl, &label)?;
            branches.push(b);
            // Both seeds may trace the same closed loop; keep one copy.
            for e in ev {
                let seen = events.iter().any(|o| {
                    o.kind == e.kind
                        && o.branch_label == e.branch_label
                        && (o.alpha - e.alpha).abs() < 10.0 * ctl.alpha_resolution
                });
                if !seen {
                    events.push(e);
                }
            }
        }
    }
    Ok(Diagram {
        branches,
        events,
        primaries,
    })
}
