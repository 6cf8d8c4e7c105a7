//! Run configuration and the commands behind the `ks` binary.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ks_core::analysis::{consistency_order, time_averaged_spectrum, TestProfile};
use ks_core::continuation::{
    analyse, bifurcation_diagram, continue_branch, newton_solve, signed_norm_for,
    switch_from_trivial, BifurcationKind, Diagram, StepControl,
};
use ks_core::experiments::{
    table1_models, table1_row, table3_models, table3_row, table4_models,
    table4_row, TABLE1_COLUMNS, TABLE3_ALPHAS,
};
use ks_core::integrate::{integrate, max_stable_dt, StabilityProbe};
use ks_core::io::{
    bifurcation_csv, branch_csv, builtin_ic, consistency_csv, fmt_f64, orbit_csv,
    parse_trajectory, spectrum_csv, trajectory_csv, Csv, Manifest,
};
use ks_core::orbits::{first_period_doubling, OrbitStep};
use ks_core::{Geometry, KsError, ModelKind, ModelSpec, Result, System};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sim,
    Steady,
    Cont,
    Orbit,
    Dtmax,
    Spectrum,
    Consistency,
    Tables,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Sim,
        Command::Steady,
        Command::Cont,
        Command::Orbit,
        Command::Dtmax,
        Command::Spectrum,
        Command::Consistency,
        Command::Tables,
    ];

    /// Keys each command reads, besides `out` and `seed`.
    fn keys(&self) -> &'static [&'static str] {
        match self {
            Command::Sim => &["model", "geometry", "alpha", "dt", "t-end", "ic", "record-every"],
            Command::Steady => &["model", "geometry", "alpha", "ic"],
            Command::Cont => &["model", "geometry", "alpha-range", "seed-branch"],
            Command::Orbit => &["model", "geometry", "alpha-range", "from-hopf"],
            Command::Dtmax => &["model", "geometry", "alpha", "branch"],
            Command::Spectrum => &["traj", "skip"],
            Command::Consistency => &["model", "alpha", "grids", "profile"],
            Command::Tables => &["target"],
        }
    }

    fn defaults(&self) -> &'static [(&'static str, &'static str)] {
        match self {
            Command::Sim => &[("ic", "halfwave"), ("record-every", "1")],
            Command::Steady => &[("ic", "sine(1)")],
            Command::Cont => &[("alpha-range", "0:70"), ("seed-branch", "trivial")],
            Command::Orbit => &[("from-hopf", "HB1")],
            Command::Dtmax => &[("branch", "unimodal-")],
            Command::Spectrum => &[("skip", "10")],
            Command::Consistency => &[("grids", "16,32,64,128"), ("profile", "mixed")],
            Command::Tables => &[],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Sim => "sim",
            Command::Steady => "steady",
            Command::Cont => "cont",
            Command::Orbit => "orbit",
            Command::Dtmax => "dtmax",
            Command::Spectrum => "spectrum",
            Command::Consistency => "consistency",
            Command::Tables => "tables",
        })
    }
}

impl FromStr for Command {
    type Err = KsError;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| KsError::Usage(format!("unknown command '{s}'")))
    }
}

/// Keys every command accepts.
const COMMON_KEYS: [&str; 3] = ["out", "seed", "version"];

/// A fully resolved run: command plus `key=value` settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Merges a config file's keys with flag values (flags win), fills
    /// defaults and checks the keys against the command.
    pub fn resolve(
        command: Option<&str>,
        file: Option<&Manifest>,
        flags: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut values = BTreeMap::new();
        if let Some(m) = file {
            values.extend(m.0.clone());
        }
        values.extend(flags.clone());
        let name = match (command, values.remove("command")) {
            (Some(c), _) => c.to_string(),
            (None, Some(c)) => c,
            (None, None) => {
                return Err(KsError::Usage(
                    "no command given (on the command line or as command= in the config)".into(),
                ))
            }
        };
        let command: Command = name.parse()?;
        values.remove("version");
        for (k, v) in command.defaults() {
            values.entry(k.to_string()).or_insert_with(|| v.to_string());
        }
        values.entry("seed".into()).or_insert_with(|| "0".into());
        let cfg = Self { command, values };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let allowed = self.command.keys();
        let stray: Vec<&str> = self
            .values
            .keys()
            .map(String::as_str)
            .filter(|k| !allowed.contains(k) && !COMMON_KEYS.contains(k))
            .collect();
        if !stray.is_empty() {
            return Err(KsError::Usage(format!(
                "keys not used by '{}': {}",
                self.command,
                stray.join(", ")
            )));
        }
        let mut missing: Vec<&str> = allowed
            .iter()
            .copied()
            .filter(|k| *k != "geometry" && !self.values.contains_key(*k))
            .collect();
        if self.command == Command::Tables && !self.values.contains_key("out") {
            missing.push("out");
        }
        if !missing.is_empty() {
            return Err(KsError::Usage(format!(
                "'{}' needs: {}",
                self.command,
                missing.join(", ")
            )));
        }
        if allowed.contains(&"geometry") {
            let kind = self.model()?;
            match (kind.is_grid(), self.values.contains_key("geometry")) {
                (true, false) => {
                    return Err(KsError::Usage(format!(
                        "conflicting keys model, geometry: {kind} needs a geometry"
                    )))
                }
                (false, true) => {
                    return Err(KsError::Usage(format!(
                        "conflicting keys model, geometry: {kind} takes no geometry"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| KsError::Usage(format!("missing key '{key}'")))
    }

    fn number<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| KsError::Usage(format!("{key}: '{v}' is not a valid number")))
    }

    pub fn model(&self) -> Result<ModelKind> {
        self.get("model")?.parse()
    }

    pub fn geometry(&self) -> Result<Option<Geometry>> {
        self.values.get("geometry").map(|g| g.parse()).transpose()
    }

    fn system(&self, alpha: f64) -> Result<System> {
        System::new(ModelSpec::new(self.model()?, alpha), self.geometry()?)
    }

    fn alpha_range(&self) -> Result<(f64, f64)> {
        let v = self.get("alpha-range")?;
        let bad = || KsError::Usage(format!("alpha-range: '{v}' must look like A:B with A < B"));
        let (a, b) = v.split_once(':').ok_or_else(bad)?;
        let (a, b): (f64, f64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        if !(a < b) {
            return Err(bad());
        }
        Ok((a, b))
    }

    pub fn out_dir(&self) -> Option<PathBuf> {
        self.values.get("out").map(PathBuf::from)
    }

    /// The resolved configuration, as written next to the artifacts.
    pub fn manifest(&self) -> Manifest {
        let mut m = Manifest(self.values.clone());
        m.set("command", self.command);
        m.set("version", env!("CARGO_PKG_VERSION"));
        m
    }
}

/// What a run produced: files written and lines for the terminal.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub report: Vec<String>,
}

struct Sink<'a> {
    dir: Option<&'a Path>,
    out: Outcome,
}

impl Sink<'_> {
    fn csv(&mut self, name: &str, csv: &Csv) -> Result<()> {
        if let Some(d) = self.dir {
            let p = d.join(name);
            csv.write(&p)?;
            self.out.files.push(p);
        }
        Ok(())
    }

    fn say(&mut self, line: String) {
        self.out.report.push(line);
    }
}

/// Executes a resolved configuration. With an output directory, artifacts
/// and `manifest.txt` are written there.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let dir = cfg.out_dir();
    if let Some(d) = &dir {
        std::fs::create_dir_all(d)?;
    }
    let mut sink = Sink {
        dir: dir.as_deref(),
        out: Outcome::default(),
    };
    match cfg.command {
        Command::Sim => sim(cfg, &mut sink)?,
        Command::Steady => steady(cfg, &mut sink)?,
        Command::Cont => cont(cfg, &mut sink)?,
        Command::Orbit => orbit(cfg, &mut sink)?,
        Command::Dtmax => dtmax(cfg, &mut sink)?,
        Command::Spectrum => spectrum(cfg, &mut sink)?,
        Command::Consistency => consistency(cfg, &mut sink)?,
        Command::Tables => tables(cfg, &mut sink)?,
    }
    if let Some(d) = &dir {
        let p = d.join("manifest.txt");
        cfg.manifest().write(&p)?;
        sink.out.files.push(p);
    }
    Ok(sink.out)
}

fn sim(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let alpha: f64 = cfg.number("alpha")?;
    let sys = cfg.system(alpha)?;
    let x0 = builtin_ic(cfg.get("ic")?, &sys)?;
    let traj = integrate(
        &sys,
        &x0,
        cfg.number("dt")?,
        cfg.number("t-end")?,
        cfg.number("record-every")?,
    )?;
    let full = ks_core::analysis::full_grid_trajectory(&sys, &traj);
    sink.csv("trajectory.csv", &trajectory_csv(&full))?;
    sink.say(format!(
        "{} snapshots to t = {}",
        traj.len(),
        traj.times.last().unwrap()
    ));
    Ok(())
}

fn steady(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let alpha: f64 = cfg.number("alpha")?;
    let sys = cfg.system(alpha)?;
    let guess = builtin_ic(cfg.get("ic")?, &sys)?;
    let s = newton_solve(&sys, &guess, alpha)?;
    let branch = ks_core::continuation::Branch {
        label: "steady".into(),
        signed_norms: vec![signed_norm_for(&sys, &s.x)],
        points: vec![s.clone()],
    };
    sink.csv("steady.csv", &branch_csv(&sys, &branch))?;
    let mut eig = Csv::new(vec!["re".into(), "im".into()]);
    for l in &s.eigenvalues {
        eig.push(vec![fmt_f64(l.re), fmt_f64(l.im)]);
    }
    sink.csv("eigenvalues.csv", &eig)?;
    sink.say(format!(
        "steady state at alpha = {alpha}: signed norm {}, {} unstable, residual {:e}",
        branch.signed_norms[0], s.n_unstable, s.residual_norm
    ));
    Ok(())
}

fn diagram(cfg: &RunConfig, sys: &System, range: (f64, f64)) -> Result<Diagram> {
    let seed = cfg.get("seed-branch").unwrap_or("trivial");
    if seed == "trivial" {
        return bifurcation_diagram(sys, range, StepControl::default());
    }
    // One signed primary branch: trace the trivial branch to find where it
    // starts, then follow only that sign.
    let (family, sign) = match seed.strip_suffix('+') {
        Some(f) => (f, 1.0),
        None => (
            seed.strip_suffix('-').ok_or_else(|| {
                KsError::Usage(format!(
                    "seed-branch '{seed}' must be 'trivial' or a family with a sign, e.g. bimodal-"
                ))
            })?,
            -1.0,
        ),
    };
    let k = (1..=8)
        .find(|k| ks_core::continuation::family_name(*k) == family)
        .ok_or_else(|| KsError::Usage(format!("unknown branch family '{family}'")))?;
    let zero = vec![0.0; sys.dim()];
    let start = analyse(sys, &zero, range.0)?;
    let (trivial, tev) = continue_branch(sys, &start, None, range, StepControl::default(), "trivial")?;
    let pf = tev
        .iter()
        .filter(|e| e.kind == BifurcationKind::Pitchfork)
        .nth(k - 1)
        .ok_or_else(|| KsError::SearchInvalid(format!("no {family} pitchfork in range")))?;
    let (s, dir) = switch_from_trivial(sys, pf.alpha, k, sign)?;
    let (b, ev) = continue_branch(sys, &s, Some((dir, 0.0)), range, StepControl::default(), seed)?;
    let mut events = tev.clone();
    events.extend(ev);
    Ok(Diagram {
        branches: vec![trivial, b],
        events,
        primaries: vec![(k, pf.alpha)],
    })
}

fn cont(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let range = cfg.alpha_range()?;
    let sys = cfg.system(range.0)?;
    let d = diagram(cfg, &sys, range)?;
    for b in &d.branches {
        sink.csv(&format!("branch_{}.csv", b.label), &branch_csv(&sys, b))?;
    }
    sink.csv("bifurcations.csv", &bifurcation_csv(&d.events))?;
    for e in &d.events {
        sink.say(format!("{:<14} {:<10} {:.4}", e.branch_label, e.kind, e.alpha));
    }
    Ok(())
}

fn orbit(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let range = cfg.alpha_range()?;
    let which = cfg.get("from-hopf")?;
    let index: usize = which
        .strip_prefix("HB")
        .and_then(|i| i.parse().ok())
        .filter(|i| *i >= 1)
        .ok_or_else(|| KsError::Usage(format!("from-hopf '{which}' must be HB1, HB2, ...")))?;
    let sys = cfg.system(range.0)?;
    let d = bifurcation_diagram(&sys, (0.5f64.min(range.0), range.1), StepControl::default())?;
    let mut hopfs: Vec<_> = d
        .events
        .iter()
        .filter(|e| e.kind == BifurcationKind::Hopf)
        .collect();
    hopfs.sort_by(|a, b| a.alpha.partial_cmp(&b.alpha).unwrap());
    let hb = hopfs.get(index - 1).ok_or_else(|| {
        KsError::SearchInvalid(format!("only {} Hopf points below alpha = {}", hopfs.len(), range.1))
    })?;
    sink.say(format!("{which} at alpha = {:.4} on {}", hb.alpha, hb.branch_label));
    let (orbits, events) =
        first_period_doubling(&sys, hb, range.1, OrbitStep::default(), which)?;
    sink.csv("orbits.csv", &orbit_csv(&orbits))?;
    sink.csv("orbit_events.csv", &bifurcation_csv(&events))?;
    for e in &events {
        sink.say(format!("{:<16} {:.4}", e.kind, e.alpha));
    }
    Ok(())
}

fn dtmax(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let alpha: f64 = cfg.number("alpha")?;
    let sys = cfg.system(alpha)?;
    let label = cfg.get("branch")?;
    let dt = if label == "trivial" {
        max_stable_dt(&sys, &vec![0.0; sys.dim()], StabilityProbe::default())?
    } else {
        let d = bifurcation_diagram(&sys, (0.5, alpha + 5.0), StepControl::default())?;
        let s = ks_core::experiments::steady_on_branch(&sys, &d, label, alpha)?;
        max_stable_dt(&sys.with_alpha(alpha), &s.x, StabilityProbe::default())?
    };
    let mut csv = Csv::new(vec!["alpha".into(), "branch".into(), "dt_max".into()]);
    csv.push(vec![fmt_f64(alpha), label.to_string(), fmt_f64(dt)]);
    sink.csv("dtmax.csv", &csv)?;
    sink.say(format!("dt_max = {dt}"));
    Ok(())
}

fn spectrum(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let traj = parse_trajectory(&Csv::read(Path::new(cfg.get("traj")?))?)?;
    let s = time_averaged_spectrum(&traj, cfg.number("skip")?)?;
    sink.csv("spectrum.csv", &spectrum_csv(&s))?;
    sink.say(format!("averaged {} snapshots", s.samples_used));
    for (k, p) in s.wavenumbers.iter().zip(&s.power) {
        sink.say(format!("{k} {p:e}"));
    }
    Ok(())
}

fn consistency(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let spec = ModelSpec::new(cfg.model()?, cfg.number("alpha")?);
    let grids: Vec<usize> = cfg
        .get("grids")?
        .split(',')
        .map(|g| {
            g.trim()
                .parse()
                .map_err(|_| KsError::Usage(format!("grids: '{g}' is not a grid size")))
        })
        .collect::<Result<_>>()?;
    let profile: TestProfile = cfg.get("profile")?.parse()?;
    let r = consistency_order(&spec, profile, &grids)?;
    sink.csv("consistency.csv", &consistency_csv(&r))?;
    sink.say(format!("fitted order {:.3}", r.fitted_order));
    if !r.monotone {
        sink.say("warning: errors do not decrease monotonically".into());
    }
    Ok(())
}

fn cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_else(|| "---".into())
}

fn tables(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    match cfg.get("target")? {
        "table1" => {
            let mut header = vec!["model".to_string(), "geometry".to_string()];
            header.extend(TABLE1_COLUMNS.iter().map(|c| c.to_string()));
            let mut csv = Csv::new(header);
            for (m, g) in table1_models() {
                let row = table1_row(m, g)?;
                let mut r = vec![m.to_string(), g.to_string()];
                r.extend(row.entries.iter().map(|e| match e {
                    Some(e) if e.kind == BifurcationKind::Fold => format!("{}*", fmt_f64(e.alpha)),
                    Some(e) => fmt_f64(e.alpha),
                    None => "---".into(),
                }));
                sink.say(r.join(","));
                csv.push(r);
            }
            sink.csv("table1.csv", &csv)?;
        }
        "table3" => {
            let mut header = vec!["model".to_string(), "geometry".to_string()];
            header.extend(TABLE3_ALPHAS.iter().map(|(a, _)| format!("alpha={a}")));
            let mut csv = Csv::new(header);
            for (m, g) in table3_models() {
                let row = table3_row(m, g)?;
                let mut r = vec![m.to_string(), g.to_string()];
                r.extend(row.steps.iter().map(|s| cell(s.ok())));
                sink.say(r.join(","));
                csv.push(r);
            }
            sink.csv("table3.csv", &csv)?;
        }
        "table4" => {
            let header = ["model", "geometry", "HB1", "PD"];
            let mut csv = Csv::new(header.iter().map(|s| s.to_string()).collect());
            for (m, g) in table4_models() {
                let row = table4_row(m, g)?;
                let r = vec![
                    m.to_string(),
                    g.to_string(),
                    cell(row.hopf),
                    cell(row.period_doubling.ok()),
                ];
                sink.say(r.join(","));
                csv.push(r);
            }
            sink.csv("table4.csv", &csv)?;
        }
        other => {
            return Err(KsError::Usage(format!(
                "unknown target '{other}' (expected table1, table3 or table4)"
            )))
        }
    }
    Ok(())
}
