use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ks_cli::{run, RunConfig};
use ks_core::io::Manifest;
use ks_core::KsError;

/// Kuramoto-Sivashinsky discretisations: simulation, continuation, orbits,
/// spectra and the comparison tables. Every flag can also be given as
/// `key=value` in a `--config` file; flags win.
#[derive(Parser, Debug)]
#[command(name = "ks", version)]
struct Cli {
    /// sim, steady, cont, orbit, dtmax, spectrum, consistency or tables
    command: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// hol:3|hol:4|hol:5|cd:2|cd:4|cd:6|gal:m|nlgal:m
    #[arg(long)]
    model: Option<String>,
    /// full:N on [0,2π] or odd:M elements on [0,π]
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// A:B
    #[arg(long = "alpha-range", allow_hyphen_values = true)]
    alpha_range: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long = "t-end")]
    t_end: Option<String>,
    /// zero, halfwave, sine(k), sine(k,amplitude) or random(seed,amplitude)
    #[arg(long)]
    ic: Option<String>,
    #[arg(long = "record-every")]
    record_every: Option<String>,
    /// trivial or a signed family such as bimodal-
    #[arg(long = "seed-branch")]
    seed_branch: Option<String>,
    /// HB1, HB2, ... counted by increasing alpha
    #[arg(long = "from-hopf")]
    from_hopf: Option<String>,
    #[arg(long)]
    branch: Option<String>,
    #[arg(long)]
    traj: Option<String>,
    #[arg(long)]
    skip: Option<String>,
    /// Comma-separated grid sizes
    #[arg(long)]
    grids: Option<String>,
    /// mixed or sine
    #[arg(long)]
    profile: Option<String>,
    /// table1, table3 or table4
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl Cli {
    fn flags(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("model", &self.model),
            ("geometry", &self.geometry),
            ("alpha", &self.alpha),
            ("alpha-range", &self.alpha_range),
            ("dt", &self.dt),
            ("t-end", &self.t_end),
            ("ic", &self.ic),
            ("record-every", &self.record_every),
            ("seed-branch", &self.seed_branch),
            ("from-hopf", &self.from_hopf),
            ("branch", &self.branch),
            ("traj", &self.traj),
            ("skip", &self.skip),
            ("grids", &self.grids),
            ("profile", &self.profile),
            ("target", &self.target),
            ("out", &self.out),
            ("seed", &self.seed),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v)))
            .collect()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let file = cli.config.as_deref().map(Manifest::read).transpose()?;
        let cfg = RunConfig::resolve(cli.command.as_deref(), file.as_ref(), &cli.flags())?;
        run(&cfg)
    })();
    match result {
        Ok(out) => {
            for line in out.report {
                println!("{line}");
            }
            for f in out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ks: {e}");
            eprintln!("error-class: {}", e.class());
            ExitCode::from(if matches!(e, KsError::Usage(_)) { 2 } else { 1 })
        }
    }
}
