mod commands;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aubry::config::{ClassSelection, Config, IntegrateConfig};
use aubry::critical::CycleMethod;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aubry", version, about = "Critical values, potentials and static classes of magnetic Lagrangians on the 2-torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the Euler-Lagrange flow from the configured initial state.
    Integrate {
        #[command(flatten)]
        common: CommonArgs,
        /// Initial state `x,y,v1,v2`.
        #[arg(long, value_parser = parse_state, allow_hyphen_values = true)]
        state: Option<[f64; 4]>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Discrete alpha function on the selected classes.
    Alpha(CommonArgs),
    /// Critical potential tables and cycle certificates.
    Potential {
        #[command(flatten)]
        common: CommonArgs,
        /// Only write entries with phi at most this value (default: the class threshold).
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Aubry nodes and static classes.
    Classes(CommonArgs),
    /// Minimizing closed measures.
    Measure(CommonArgs),
    /// Run the whole pipeline on an exactly solvable example.
    ExampleVerify {
        #[command(flatten)]
        common: CommonArgs,
        /// Extra levels with n doubled and h_time halved.
        #[arg(long)]
        refine_levels: Option<u32>,
        #[arg(long)]
        audit_samples: Option<usize>,
    },
    /// Class counts over seeded random perturbations.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        num_perturbations: Option<usize>,
        #[arg(long)]
        fourier_degree: Option<u32>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    h_time: Option<f64>,
    #[arg(long)]
    speed_cap: Option<f64>,
    #[arg(long)]
    windings: Option<u32>,
    /// Class grid `M1xM2` on `[-extent, extent]^2`.
    #[arg(long, value_parser = parse_grid)]
    classes_grid: Option<[usize; 2]>,
    #[arg(long)]
    classes_extent: Option<f64>,
    /// One class `c1,c2`; repeatable.
    #[arg(long = "class", value_parser = parse_class, allow_hyphen_values = true)]
    classes: Vec<[f64; 2]>,
    /// Minimum-mean-cycle solver: karp, howard or auto.
    #[arg(long, value_parser = parse_method)]
    method: Option<CycleMethod>,
}

fn parse_floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers"));
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.trim().parse().map_err(|e| format!("{p:?}: {e}"))?;
    }
    Ok(out)
}

fn parse_state(s: &str) -> Result<[f64; 4], String> {
    parse_floats(s)
}

fn parse_class(s: &str) -> Result<[f64; 2], String> {
    parse_floats(s)
}

fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected M1xM2, e.g. 5x5")?;
    let a: usize = a.parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: usize = b.parse().map_err(|e| format!("{b:?}: {e}"))?;
    Ok([a, b])
}

fn parse_method(s: &str) -> Result<CycleMethod, String> {
    match s {
        "karp" => Ok(CycleMethod::Karp),
        "howard" => Ok(CycleMethod::Howard),
        "auto" => Ok(CycleMethod::Auto),
        _ => Err(format!("unknown method {s:?} (karp, howard, auto)")),
    }
}

/// A failed run and its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<aubry::Error> for CliError {
    fn from(e: aubry::Error) -> Self {
        CliError {
            code: if e.is_numerical() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn load(common: &CommonArgs) -> Result<Config, CliError> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", common.config.display())))?;
    let mut cfg: Config = serde_json::from_str(&text)
        .map_err(|e| CliError::invalid(format!("{}: {e}", common.config.display())))?;
    if let Some(n) = common.n {
        cfg.grid.n = n;
    }
    if let Some(h) = common.h_time {
        cfg.grid.h_time = h;
    }
    if let Some(cap) = common.speed_cap {
        cfg.grid.speed_cap = Some(cap);
    }
    if let Some(w) = common.windings {
        cfg.grid.windings = w;
    }
    if let Some(m) = common.method {
        cfg.tolerances.method = m;
    }
    if common.classes_grid.is_some() && !common.classes.is_empty() {
        return Err(CliError::invalid("give either --classes-grid or --class, not both"));
    }
    if common.classes_grid.is_some() || !common.classes.is_empty() || common.classes_extent.is_some() {
        let mut sel = cfg.classes.take().unwrap_or_default();
        if let Some(grid) = common.classes_grid {
            sel = ClassSelection {
                grid: Some(grid),
                list: None,
                ..sel
            };
        }
        if !common.classes.is_empty() {
            sel = ClassSelection {
                grid: None,
                list: Some(common.classes.clone()),
                ..sel
            };
        }
        if let Some(extent) = common.classes_extent {
            sel.extent = extent;
        }
        cfg.classes = Some(sel);
    }
    Ok(cfg)
}

fn validate(cfg: &Config, path: &Path) -> Result<(), CliError> {
    cfg.validate()
        .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<PathBuf, CliError> {
    match cli.command {
        Command::Integrate {
            common,
            state,
            duration,
            step,
        } => {
            let mut cfg = load(&common)?;
            if state.is_some() || duration.is_some() || step.is_some() {
                let base = cfg.integrate.take();
                let pick = |v: Option<f64>, from: Option<f64>, name: &str| {
                    v.or(from).ok_or_else(|| CliError::invalid(format!("--{name} required without an integrate section")))
                };
                cfg.integrate = Some(IntegrateConfig {
                    state: state
                        .or(base.as_ref().map(|b| b.state))
                        .ok_or_else(|| CliError::invalid("--state required without an integrate section"))?,
                    duration: pick(duration, base.as_ref().map(|b| b.duration), "duration")?,
                    step: pick(step, base.as_ref().map(|b| b.step), "step")?,
                });
            }
            validate(&cfg, &common.config)?;
            commands::integrate(cfg, &common.out)?;
            Ok(common.out)
        }
        Command::Alpha(common) => {
            let cfg = load(&common)?;
            validate(&cfg, &common.config)?;
            commands::alpha(cfg, &common.out)?;
            Ok(common.out)
        }
        Command::Potential { common, threshold } => {
            let cfg = load(&common)?;
            validate(&cfg, &common.config)?;
            commands::potential(cfg, &common.out, threshold)?;
            Ok(common.out)
        }
        Command::Classes(common) => {
            let cfg = load(&common)?;
            validate(&cfg, &common.config)?;
            commands::classes(cfg, &common.out)?;
            Ok(common.out)
        }
        Command::Measure(common) => {
            let cfg = load(&common)?;
            validate(&cfg, &common.config)?;
            commands::measure(cfg, &common.out)?;
            Ok(common.out)
        }
        Command::ExampleVerify {
            common,
            refine_levels,
            audit_samples,
        } => {
            let mut cfg = load(&common)?;
            if let Some(r) = refine_levels {
                cfg.verify.refine_levels = r;
            }
            if let Some(a) = audit_samples {
                cfg.verify.audit_samples = a;
            }
            validate(&cfg, &common.config)?;
            commands::example_verify(cfg, &common.out)?;
            Ok(common.out)
        }
        Command::Sweep {
            common,
            seed,
            amplitude,
            num_perturbations,
            fourier_degree,
        } => {
            let mut cfg = load(&common)?;
            let sweep = cfg
                .sweep
                .as_mut()
                .ok_or_else(|| CliError::invalid(format!("{}: config has no sweep section", common.config.display())))?;
            if let Some(s) = seed {
                sweep.seed = s;
            }
            if let Some(a) = amplitude {
                sweep.amplitude = a;
            }
            if let Some(k) = num_perturbations {
                sweep.num_perturbations = k;
            }
            if let Some(d) = fourier_degree {
                sweep.fourier_degree = d;
            }
            validate(&cfg, &common.config)?;
            commands::sweep(cfg, &common.out)?;
            Ok(common.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(out) => {
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
