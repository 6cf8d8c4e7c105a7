//! The comparison tables: bifurcation points of the steady branches,
//! maximum stable RK4 steps, and the first Hopf and period-doubling points.

use crate::continuation::{
    bifurcation_diagram, newton_solve, BifurcationKind, Diagram, SteadyState, StepControl,
};
use crate::error::{KsError, Result};
use crate::integrate::{max_stable_dt, StabilityProbe};
use crate::model::{ModelKind, ModelSpec};
use crate::orbits::{first_period_doubling, OrbitStep};
use crate::system::{Geometry, System};

/// Continuation range for the steady-state diagrams.
pub const DIAGRAM_RANGE: (f64, f64) = (0.5, 70.0);

pub const TABLE1_COLUMNS: [&str; 8] = [
    "R2b1", "R2b2", "R2b3", "R2b4", "R3t1", "R3t2", "R4b1", "R4q1",
];

fn model(s: &str, g: &str) -> (ModelKind, Geometry) {
    (s.parse().unwrap(), g.parse().unwrap())
}

/// Models of the bifurcation table that have transcribed stencils.
pub fn table1_models() -> Vec<(ModelKind, Geometry)> {
    [
        ("cd:6", "odd:48"),
        ("hol:3", "odd:8"),
        ("hol:4", "odd:8"),
        ("hol:5", "odd:8"),
        ("cd:2", "odd:8"),
        ("cd:4", "odd:8"),
        ("cd:6", "odd:8"),
        ("hol:3", "odd:12"),
        ("hol:4", "odd:12"),
        ("cd:2", "odd:12"),
        ("cd:4", "odd:12"),
    ]
    .iter()
    .map(|(m, g)| model(m, g))
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    pub alpha: f64,
    pub kind: BifurcationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub model: ModelKind,
    pub geometry: Geometry,
    pub entries: [Option<TableEntry>; 8],
}

/// Non-Hopf events on both signs of a family, merged and sorted by `α`.
fn family_points(d: &Diagram, family: &str) -> Vec<TableEntry> {
    let mut pts: Vec<TableEntry> = Vec::new();
    for e in d.events_on(family) {
        if e.kind == BifurcationKind::Hopf {
            continue;
        }
        if pts
            .iter()
            .any(|p| p.kind == e.kind && (p.alpha - e.alpha).abs() < 1e-2)
        {
            continue;
        }
        pts.push(TableEntry {
            alpha: e.alpha,
            kind: e.kind,
        });
    }
    pts.sort_by(|a, b| a.alpha.partial_cmp(&b.alpha).unwrap());
    pts
}

/// Reads the table columns off a diagram: the first four points on the
/// bimodal branches, the first two on the trimodal ones, and the first two
/// on the quadrimodal ones (its own secondary point, then the junction
/// with the bimodal family).
pub fn table1_entries(d: &Diagram) -> [Option<TableEntry>; 8] {
    let b = family_points(d, "bimodal");
    let t = family_points(d, "trimodal");
    let q = family_points(d, "quadrimodal");
    [
        b.first().copied(),
        b.get(1).copied(),
        b.get(2).copied(),
        b.get(3).copied(),
        t.first().copied(),
        t.get(1).copied(),
        q.get(1).copied(),
        q.first().copied(),
    ]
}

pub fn table1_row(kind: ModelKind, geometry: Geometry) -> Result<Table1Row> {
    let sys = System::new(ModelSpec::new(kind, 0.0), Some(geometry))?;
    let d = bifurcation_diagram(&sys, DIAGRAM_RANGE, StepControl::default())?;
    Ok(Table1Row {
        model: kind,
        geometry,
        entries: table1_entries(&d),
    })
}

/// Steady state at `alpha` on the branch called `label`, interpolated from
/// the first bracketing pair of points and polished by Newton.
pub fn steady_on_branch(
    sys: &System,
    d: &Diagram,
    label: &str,
    alpha: f64,
) -> Result<SteadyState> {
    let b = d
        .branch(label)
        .ok_or_else(|| KsError::SearchInvalid(format!("no branch '{label}'")))?;
    for w in b.points.windows(2) {
        let (p, q) = (&w[0], &w[1]);
        if (p.alpha - alpha) * (q.alpha - alpha) > 0.0 || p.alpha == q.alpha {
            continue;
        }
        let t = (alpha - p.alpha) / (q.alpha - p.alpha);
        let guess: Vec<f64> = p.x.iter().zip(&q.x).map(|(a, b)| a + t * (b - a)).collect();
        return newton_solve(sys, &guess, alpha);
    }
    Err(KsError::SearchInvalid(format!(
        "branch '{label}' does not reach alpha = {alpha}"
    )))
}

/// Steady state at `alpha` on either sign of `family`. Stable states are
/// preferred, then the negative branch.
pub fn steady_on_family(
    sys: &System,
    d: &Diagram,
    family: &str,
    alpha: f64,
) -> Result<SteadyState> {
    let found: Vec<SteadyState> = ['-', '+']
        .iter()
        .filter_map(|s| steady_on_branch(sys, d, &format!("{family}{s}"), alpha).ok())
        .collect();
    found
        .iter()
        .find(|s| s.stable())
        .or(found.first())
        .cloned()
        .ok_or_else(|| {
            KsError::SearchInvalid(format!("no {family} steady state at alpha = {alpha}"))
        })
}

pub const TABLE3_ALPHAS: [(f64, &str); 3] = [(10.0, "unimodal"), (20.0, "bimodal"), (30.0, "bimodal")];

pub fn table3_models() -> Vec<(ModelKind, Geometry)> {
    [
        ("hol:3", "odd:8"),
        ("hol:4", "odd:8"),
        ("hol:5", "odd:8"),
        ("cd:2", "odd:8"),
        ("cd:4", "odd:8"),
        ("cd:6", "odd:8"),
        ("cd:2", "odd:16"),
    ]
    .iter()
    .map(|(m, g)| model(m, g))
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table3Row {
    pub model: ModelKind,
    pub geometry: Geometry,
    /// Per column, the step or the error class that prevented it.
    pub steps: Vec<std::result::Result<f64, &'static str>>,
}

/// Maximum stable RK4 step on the steady state of `family` at `alpha`.
pub fn stable_step_on(
    sys: &System,
    d: &Diagram,
    family: &str,
    alpha: f64,
) -> Result<f64> {
    let s = steady_on_family(sys, d, family, alpha)?;
    max_stable_dt(&sys.with_alpha(alpha), &s.x, StabilityProbe::default())
}

pub fn table3_row(kind: ModelKind, geometry: Geometry) -> Result<Table3Row> {
    let sys = System::new(ModelSpec::new(kind, 0.0), Some(geometry))?;
    let top = TABLE3_ALPHAS.iter().map(|c| c.0).fold(0.0, f64::max) + 5.0;
    let d = bifurcation_diagram(&sys, (DIAGRAM_RANGE.0, top), StepControl::default())?;
    let steps = TABLE3_ALPHAS
        .iter()
        .map(|&(a, fam)| stable_step_on(&sys, &d, fam, a).map_err(|e| e.class()))
        .collect();
    Ok(Table3Row {
        model: kind,
        geometry,
        steps,
    })
}

pub fn table4_models() -> Vec<(ModelKind, Geometry)> {
    [
        ("hol:3", "odd:8"),
        ("hol:4", "odd:8"),
        ("hol:5", "odd:8"),
        ("cd:2", "odd:8"),
        ("cd:4", "odd:8"),
        ("cd:6", "odd:8"),
        ("cd:6", "odd:24"),
    ]
    .iter()
    .map(|(m, g)| model(m, g))
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table4Row {
    pub model: ModelKind,
    pub geometry: Geometry,
    pub hopf: Option<f64>,
    pub period_doubling: std::result::Result<f64, String>,
}

/// Range searched for the first Hopf point.
pub const HOPF_RANGE: (f64, f64) = (0.5, 40.0);
/// How far past the Hopf point the orbit family is followed.
pub const PD_SEARCH: f64 = 6.0;

/// First Hopf point of the steady diagram and the first period doubling of
/// the cycles born there.
pub fn table4_row(kind: ModelKind, geometry: Geometry) -> Result<Table4Row> {
    let sys = System::new(ModelSpec::new(kind, 0.0), Some(geometry))?;
    let d = bifurcation_diagram(&sys, HOPF_RANGE, StepControl::default())?;
    let Some(hb) = d
        .events
        .iter()
        .filter(|e| e.kind == BifurcationKind::Hopf)
        .min_by(|a, b| a.alpha.partial_cmp(&b.alpha).unwrap())
    else {
        return Ok(Table4Row {
            model: kind,
            geometry,
            hopf: None,
            period_doubling: Err("no Hopf point".into()),
        });
    };
    let pd = first_period_doubling(&sys, hb, hb.alpha + PD_SEARCH, OrbitStep::default(), "hb1")
        .map_err(|e| e.class().to_string())
        .and_then(|(_, ev)| {
            ev.iter()
                .find(|e| e.kind == BifurcationKind::PeriodDoubling)
                .map(|e| e.alpha)
                .ok_or_else(|| "no period doubling".to_string())
        });
    Ok(Table4Row {
        model: kind,
        geometry,
        hopf: Some(hb.alpha),
        period_doubling: pd,
    })
}

/// Time-averaging protocol for spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumProtocol {
    pub alpha: f64,
    pub dt: f64,
    /// Transient discarded before averaging.
    pub skip: f64,
    /// Averaging window after the transient.
    pub window: f64,
    pub sample_every: f64,
}

impl Default for SpectrumProtocol {
    fn default() -> Self {
        Self {
            alpha: 20.0,
            dt: 1e-4,
            skip: 10.0,
            window: 40.0,
            sample_every: 0.01,
        }
    }
}

/// Points of the accurate reference grid on `[0, 2π)`.
pub const REFERENCE_GRID: usize = 256;

/// Spectrum of `kind` on a full grid of `n` points started from `|sin(x/2)|`.
/// RK4 for the coarse models; the reference grid uses exponential time
/// differencing, which leaves the same spatial scheme but is not bound by
/// its stiffest mode.
pub fn grid_spectrum(
    kind: ModelKind,
    n: usize,
    p: &SpectrumProtocol,
    exponential: bool,
) -> Result<crate::analysis::SpectrumResult> {
    let geometry = Geometry::Full { n };
    let sys = System::new(ModelSpec::new(kind, p.alpha), Some(geometry))?;
    let x0: Vec<f64> = geometry.nodes().iter().map(|x| (0.5 * x).sin().abs()).collect();
    let every = ((p.sample_every / p.dt).round() as usize).max(1);
    let t_end = p.skip + p.window;
    let traj = if exponential {
        crate::analysis::etdrk4_integrate(&sys, &x0, p.dt, t_end, every)?
    } else {
        crate::integrate::integrate(&sys, &x0, p.dt, t_end, every)?
    };
    crate::analysis::time_averaged_spectrum(&traj, p.skip)
}

pub fn reference_spectrum(p: &SpectrumProtocol) -> Result<crate::analysis::SpectrumResult> {
    grid_spectrum(ModelKind::Centered { order: 6 }, REFERENCE_GRID, p, true)
}
