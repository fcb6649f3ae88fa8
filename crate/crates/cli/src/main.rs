use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use vlcsec_core::config::{Config, SchemeKind};
use vlcsec_core::noma::InterferenceSet;
use vlcsec_core::sim::{self, EvePlacement};
use vlcsec_core::topology::Strategy;
use vlcsec_core::{oracle, report, ConfigError};

const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;
const EXIT_IO: u8 = 4;

/// Secure NOMA visible-light network simulator.
#[derive(Parser)]
#[command(name = "vlcsec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo campaign or sweep and write CSV tables.
    Run(RunArgs),
    /// Run a self-check oracle and report agreement statistics.
    Oracle {
        /// blockage | sinr | alloc | azimuth
        kind: String,
        /// Number of random instances.
        #[arg(default_value_t = 1000)]
        n: usize,
        #[arg(default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "manifest")]
    config: Option<PathBuf>,
    /// Manifest of an earlier run to reproduce.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Built-in user layout: 1, 2 or 3.
    #[arg(long)]
    scenario: Option<String>,
    /// broadcasting | simple | smart
    #[arg(long)]
    strategy: Option<Strategy>,
    /// fixed | fixed:<zeta> | optimized
    #[arg(long)]
    allocation: Option<String>,
    /// physical | literal
    #[arg(long)]
    interference: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Transmit power per LED in dBm; repeat for a sweep.
    #[arg(long = "power-dbm", allow_negative_numbers = true)]
    power_dbm: Vec<f64>,
    /// fixed | fixed:<x>,<y> | uniform | grid:<step> | clone:<user>
    #[arg(long)]
    eve: Option<String>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Fail when any trial used an allocation the solver did not converge on.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    master_seed: u64,
    started_unix: u64,
    finished_unix: u64,
    outputs: Vec<String>,
    config: Config,
}

enum Failure {
    Config(String),
    Io(String),
    Check(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::Config(m) => (EXIT_CONFIG, format!("config error: {m}")),
            Failure::Io(m) => (EXIT_IO, format!("i/o error: {m}")),
            Failure::Check(m) => (EXIT_CHECK, m),
        };
        eprintln!("vlcsec: {msg}");
        ExitCode::from(code)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(e) => Failure::Io(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn parse_eve(spec: &str, room: (f64, f64)) -> Result<EvePlacement, Failure> {
    let bad = || Failure::Config(format!("invalid --eve `{spec}` (fixed|fixed:x,y|uniform|grid:step|clone:user)"));
    let (head, tail) = spec.split_once(':').map_or((spec, None), |(h, t)| (h, Some(t)));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    Ok(match (head, tail) {
        ("fixed", None) => EvePlacement::FixedAt { x: room.0 / 2.0, y: room.1 / 2.0 },
        ("fixed", Some(xy)) => {
            let (x, y) = xy.split_once(',').ok_or_else(bad)?;
            EvePlacement::FixedAt { x: num(x)?, y: num(y)? }
        }
        ("uniform", None) => EvePlacement::DEFAULT_BOX,
        ("grid", Some(step)) => {
            let EvePlacement::UniformBox { x_min, x_max, y_min, y_max } = EvePlacement::DEFAULT_BOX else {
                unreachable!()
            };
            EvePlacement::GridOver { x_min, x_max, y_min, y_max, step: num(step)? }
        }
        ("clone", Some(k)) => EvePlacement::CloneOf { user: k.trim().parse().map_err(|_| bad())? },
        _ => return Err(bad()),
    })
}

/// Applies command-line overrides to the file configuration.
fn apply_overrides(cfg: &mut Config, args: &RunArgs) -> Result<(), Failure> {
    if let Some(s) = &args.scenario {
        cfg.scenario = s.clone();
        cfg.users = None;
    }
    if let Some(s) = args.strategy {
        cfg.strategy = s;
    }
    if let Some(a) = &args.allocation {
        match a.split_once(':') {
            None if a == "optimized" => cfg.allocation.scheme = SchemeKind::Optimized,
            None if a == "fixed" => cfg.allocation.scheme = SchemeKind::Fixed,
            Some(("fixed", z)) => {
                cfg.allocation.scheme = SchemeKind::Fixed;
                cfg.allocation.zeta =
                    z.parse().map_err(|_| Failure::Config(format!("invalid zeta in --allocation `{a}`")))?;
            }
            _ => return Err(Failure::Config(format!("invalid --allocation `{a}` (fixed|fixed:<zeta>|optimized)"))),
        }
    }
    if let Some(i) = &args.interference {
        cfg.interference = match i.as_str() {
            "physical" => InterferenceSet::Physical,
            "literal" => InterferenceSet::Literal,
            _ => return Err(Failure::Config(format!("invalid --interference `{i}` (physical|literal)"))),
        };
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if !args.power_dbm.is_empty() {
        cfg.power_dbm = Some(args.power_dbm.clone());
        cfg.power_w = None;
    }
    if let Some(e) = &args.eve {
        cfg.eve = parse_eve(e, (cfg.room.length, cfg.room.width))?;
    }
    Ok(())
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn write_table<F>(dir: &Path, name: &str, write: F) -> Result<PathBuf, Failure>
where
    F: FnOnce(BufWriter<File>) -> csv::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path).map_err(io_err(&path))?;
    write(BufWriter::new(file)).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let started_unix = unix_now();
    let mut file_cfg = match (&args.config, &args.manifest) {
        (Some(path), _) => Config::from_path(path)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            let m: Manifest = serde_json::from_str(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            m.config
        }
        (None, None) => Config::default(),
    };
    apply_overrides(&mut file_cfg, &args)?;
    let cfg = file_cfg.resolve()?;

    let rows = sim::sweep(&cfg).map_err(|e| Failure::Config(e.to_string()))?;

    fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    let outputs = [
        write_table(&args.out_dir, "summary.csv", |w| report::write_summary(w, &cfg, &rows))?,
        write_table(&args.out_dir, "per_user.csv", |w| report::write_per_user(w, &cfg, &rows))?,
        write_table(&args.out_dir, "diagnostics.csv", |w| report::write_diagnostics(w, &cfg, &rows))?,
    ];
    let manifest = Manifest {
        tool: "vlcsec".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        master_seed: cfg.master_seed,
        started_unix,
        finished_unix: unix_now(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        config: file_cfg,
    };
    let path = args.out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(io_err(&path))?;

    let flagged: usize = rows.iter().map(|r| r.stats.diagnostics.flagged_trials).sum();
    for row in &rows {
        let s = &row.stats;
        println!(
            "P_s = {:.3} W  R_D = {:.4} +/- {:.4}  R_S = {:.4} +/- {:.4}",
            row.point.power, s.mean_rd, s.se_rd, s.mean_rs, s.se_rs
        );
    }
    println!("wrote {} sweep rows to {}", rows.len(), args.out_dir.display());
    if flagged > 0 {
        eprintln!("vlcsec: {flagged} trials used a non-converged allocation");
        if args.strict {
            return Err(Failure::Check("--strict: flagged trials present".into()));
        }
    }
    Ok(())
}

fn cmd_oracle(kind: &str, n: usize, seed: u64) -> Result<(), Failure> {
    let report = oracle::run(kind, n, seed)
        .ok_or_else(|| Failure::Config(format!("unknown oracle `{kind}` ({})", oracle::KINDS.join("|"))))?;
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!("oracle `{kind}` failed its thresholds")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Oracle { kind, n, seed } => cmd_oracle(&kind, n, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
