//! Flat CSV artifacts, key=value manifests and the built-in initial
//! conditions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{ConsistencyReport, SpectrumResult};
use crate::continuation::{signed_norm_for, BifurcationKind, BifurcationPoint, Branch};
use crate::error::{KsError, Result};
use crate::integrate::Trajectory;
use crate::orbits::PeriodicOrbit;
use crate::system::System;

/// Seventeen significant digits: enough to read back the same double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| KsError::Parse(format!("'{s}' is not a number")))
}

/// A parsed CSV file: header plus rows of raw fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_text(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| KsError::Parse("empty CSV".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, l) in lines.enumerate() {
            let r: Vec<String> = l.split(',').map(str::to_string).collect();
            if r.len() != header.len() {
                return Err(KsError::Parse(format!(
                    "row {} has {} fields, header has {}",
                    i + 1,
                    r.len(),
                    header.len()
                )));
            }
            rows.push(r);
        }
        Ok(Self { header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| KsError::Parse(format!("missing column '{name}'")))
    }
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

/// `t,u_1..u_n`.
pub fn trajectory_csv(traj: &Trajectory) -> Csv {
    let n = traj.states.first().map_or(0, |s| s.len());
    let mut header = vec!["t".to_string()];
    header.extend(numbered("u_", n));
    let mut csv = Csv::new(header);
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let mut r = vec![fmt_f64(*t)];
        r.extend(s.iter().map(|v| fmt_f64(*v)));
        csv.push(r);
    }
    csv
}

pub fn parse_trajectory(csv: &Csv) -> Result<Trajectory> {
    if csv.header.first().map(String::as_str) != Some("t") {
        return Err(KsError::Parse("trajectory CSV must start with a 't' column".into()));
    }
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
    };
    for r in &csv.rows {
        traj.times.push(parse_f64(&r[0])?);
        traj.states
            .push(r[1..].iter().map(|v| parse_f64(v)).collect::<Result<_>>()?);
    }
    if traj.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(KsError::Parse("trajectory times must increase".into()));
    }
    Ok(traj)
}

/// `alpha,signed_norm,n_unstable,u_1..`.
pub fn branch_csv(sys: &System, branch: &Branch) -> Csv {
    let n = sys.dim();
    let mut header: Vec<String> = ["alpha", "signed_norm", "n_unstable"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(numbered("u_", n));
    let mut csv = Csv::new(header);
    for p in &branch.points {
        let mut r = vec![
            fmt_f64(p.alpha),
            fmt_f64(signed_norm_for(sys, &p.x)),
            p.n_unstable.to_string(),
        ];
        r.extend(p.x.iter().map(|v| fmt_f64(*v)));
        csv.push(r);
    }
    csv
}

/// One parsed branch row.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRow {
    pub alpha: f64,
    pub signed_norm: f64,
    pub n_unstable: usize,
    pub u: Vec<f64>,
}

pub fn parse_branch(csv: &Csv) -> Result<Vec<BranchRow>> {
    let (a, s, k) = (
        csv.column("alpha")?,
        csv.column("signed_norm")?,
        csv.column("n_unstable")?,
    );
    csv.rows
        .iter()
        .map(|r| {
            Ok(BranchRow {
                alpha: parse_f64(&r[a])?,
                signed_norm: parse_f64(&r[s])?,
                n_unstable: r[k]
                    .parse()
                    .map_err(|_| KsError::Parse(format!("bad count '{}'", r[k])))?,
                u: r[3..].iter().map(|v| parse_f64(v)).collect::<Result<_>>()?,
            })
        })
        .collect()
}

pub fn branch_rows_csv(rows: &[BranchRow]) -> Csv {
    let n = rows.first().map_or(0, |r| r.u.len());
    let mut header: Vec<String> = ["alpha", "signed_norm", "n_unstable"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(numbered("u_", n));
    let mut csv = Csv::new(header);
    for row in rows {
        let mut r = vec![
            fmt_f64(row.alpha),
            fmt_f64(row.signed_norm),
            row.n_unstable.to_string(),
        ];
        r.extend(row.u.iter().map(|v| fmt_f64(*v)));
        csv.push(r);
    }
    csv
}

/// `kind,alpha,branch,re_lambda,im_lambda`.
pub fn bifurcation_csv(events: &[BifurcationPoint]) -> Csv {
    let mut csv = Csv::new(
        ["kind", "alpha", "branch", "re_lambda", "im_lambda"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for e in events {
        csv.push(vec![
            e.kind.to_string(),
            fmt_f64(e.alpha),
            e.branch_label.clone(),
            fmt_f64(e.eigen.re),
            fmt_f64(e.eigen.im),
        ]);
    }
    csv
}

/// `(kind, α, branch)` of each row.
pub fn parse_bifurcations(csv: &Csv) -> Result<Vec<(BifurcationKind, f64, String)>> {
    let (k, a, b) = (
        csv.column("kind")?,
        csv.column("alpha")?,
        csv.column("branch")?,
    );
    csv.rows
        .iter()
        .map(|r| Ok((r[k].parse()?, parse_f64(&r[a])?, r[b].clone())))
        .collect()
}

/// `alpha,period,stable,mu_max_re,mu_max_im,anchor_u_1..`.
pub fn orbit_csv(orbits: &[PeriodicOrbit]) -> Csv {
    let n = orbits.first().map_or(0, |o| o.anchor.len());
    let mut header: Vec<String> = ["alpha", "period", "stable", "mu_max_re", "mu_max_im"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(numbered("anchor_u_", n));
    let mut csv = Csv::new(header);
    for o in orbits {
        let mu = o.dominant_multiplier();
        let mut r = vec![
            fmt_f64(o.alpha),
            fmt_f64(o.period),
            o.stable.to_string(),
            fmt_f64(mu.re),
            fmt_f64(mu.im),
        ];
        r.extend(o.anchor.iter().map(|v| fmt_f64(*v)));
        csv.push(r);
    }
    csv
}

/// `k,S_k`.
pub fn spectrum_csv(s: &SpectrumResult) -> Csv {
    let mut csv = Csv::new(vec!["k".into(), "S_k".into()]);
    for (k, p) in s.wavenumbers.iter().zip(&s.power) {
        csv.push(vec![k.to_string(), fmt_f64(*p)]);
    }
    csv
}

/// `N,h,max_error,fitted_order`; the fitted order repeats on every row.
pub fn consistency_csv(r: &ConsistencyReport) -> Csv {
    let mut csv = Csv::new(
        ["N", "h", "max_error", "fitted_order"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for ((n, h), e) in r.grid_sizes.iter().zip(&r.spacings).zip(&r.max_errors) {
        csv.push(vec![
            n.to_string(),
            fmt_f64(*h),
            fmt_f64(*e),
            fmt_f64(r.fitted_order),
        ]);
    }
    csv
}

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest(pub BTreeMap<String, String>);

impl Manifest {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut m = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                KsError::Parse(format!("line {}: expected key=value", i + 1))
            })?;
            m.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self(m))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Named initial conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Zero,
    /// `|sin(x/2)|`
    HalfWave,
    /// `a sin(kx)`
    Sine { k: u32, amplitude: f64 },
    /// Uniform noise in `[-amplitude, amplitude)` from a seeded generator.
    Random { seed: u64, amplitude: f64 },
}

impl std::str::FromStr for InitialCondition {
    type Err = KsError;

    /// `zero`, `halfwave`, `sine(k)`, `sine(k,amplitude)`, `random(seed,amplitude)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            KsError::Usage(format!(
                "unknown initial condition '{s}' (expected zero, halfwave, sine(k[,amplitude]) or random(seed,amplitude))"
            ))
        };
        let s = s.trim();
        match s {
            "zero" => return Ok(InitialCondition::Zero),
            "halfwave" => return Ok(InitialCondition::HalfWave),
            _ => {}
        }
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<&str> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(str::trim)
            .collect();
        match (name, args.as_slice()) {
            ("sine", [k]) => Ok(InitialCondition::Sine {
                k: k.parse().map_err(|_| bad())?,
                amplitude: 1.0,
            }),
            ("sine", [k, amp]) => Ok(InitialCondition::Sine {
                k: k.parse().map_err(|_| bad())?,
                amplitude: amp.parse().map_err(|_| bad())?,
            }),
            ("random", [seed, amp]) => Ok(InitialCondition::Random {
                seed: seed.parse().map_err(|_| bad())?,
                amplitude: amp.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialCondition::Zero => write!(f, "zero"),
            InitialCondition::HalfWave => write!(f, "halfwave"),
            InitialCondition::Sine { k, amplitude } if *amplitude == 1.0 => write!(f, "sine({k})"),
            InitialCondition::Sine { k, amplitude } => write!(f, "sine({k},{amplitude})"),
            InitialCondition::Random { seed, amplitude } => {
                write!(f, "random({seed},{amplitude})")
            }
        }
    }
}

/// Samples the named field at the system's nodes. Galerkin systems get the
/// sine-series coefficients of the field on `[0, π]`.
pub fn builtin_ic(name: &str, sys: &System) -> Result<Vec<f64>> {
    let ic: InitialCondition = name.parse()?;
    let dim = sys.dim();
    if let InitialCondition::Random { seed, amplitude } = ic {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok((0..dim)
            .map(|_| amplitude * rng.gen_range(-1.0..1.0))
            .collect());
    }
    let f = |x: f64| match ic {
        InitialCondition::Zero => 0.0,
        InitialCondition::HalfWave => (0.5 * x).sin().abs(),
        InitialCondition::Sine { k, amplitude } => amplitude * (k as f64 * x).sin(),
        InitialCondition::Random { .. } => unreachable!(),
    };
    match sys.geometry() {
        Some(g) => Ok(g.nodes().into_iter().map(f).collect()),
        None => {
            // b_k = (2/π) ∫_0^π f sin(kx) dx by the midpoint rule.
            let q = 2048;
            let h = PI / q as f64;
            Ok((1..=dim)
                .map(|k| {
                    (0..q)
                        .map(|j| {
                            let x = (j as f64 + 0.5) * h;
                            f(x) * (k as f64 * x).sin()
                        })
                        .sum::<f64>()
                        * h
                        * 2.0
                        / PI
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelKind, ModelSpec};
    use crate::system::Geometry;

    #[test]
    fn float_text_round_trips() {
        for v in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0, -0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn halfwave_on_full_grid() {
        let sys = System::new(
            ModelSpec::new(ModelKind::Holistic { order: 3 }, 5.0),
            Some(Geometry::Full { n: 8 }),
        )
        .unwrap();
        let u = builtin_ic("halfwave", &sys).unwrap();
        for (j, v) in u.iter().enumerate() {
            let x = j as f64 * PI / 4.0;
            assert_eq!(*v, (x / 2.0).sin().abs());
        }
        assert!(builtin_ic("zero", &sys).unwrap().iter().all(|v| *v == 0.0));
        assert_eq!(builtin_ic("gauss", &sys).unwrap_err().class(), "usage");
    }

    #[test]
    fn random_ic_is_reproducible() {
        let sys = System::new(ModelSpec::new(ModelKind::Galerkin { modes: 6 }, 5.0), None)
            .unwrap();
        let a = builtin_ic("random(7,0.1)", &sys).unwrap();
        assert_eq!(a, builtin_ic("random(7, 0.1)", &sys).unwrap());
        assert_ne!(a, builtin_ic("random(8,0.1)", &sys).unwrap());
        assert!(a.iter().all(|v| v.abs() < 0.1));
    }

    #[test]
    fn galerkin_sine_ic_is_a_unit_mode() {
        let sys = System::new(ModelSpec::new(ModelKind::Galerkin { modes: 4 }, 5.0), None)
            .unwrap();
        let b = builtin_ic("sine(3)", &sys).unwrap();
        for (i, v) in b.iter().enumerate() {
            let want = if i == 2 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "{b:?}");
        }
    }

    #[test]
    fn manifest_round_trip() {
        let mut m = Manifest::default();
        m.set("model", "hol:5");
        m.set("alpha", fmt_f64(20.0));
        let back = Manifest::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), m.to_text());
    }
}
