use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod meta;
mod plot;

use commands::Ctx;
use config::ScenarioConfig;
use meta::RunMeta;

#[derive(Parser)]
#[command(name = "mfront", version, about = "Asymptotic long-wave fields over variable bathymetry")]
struct Cli {
    /// Worker thread cap (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Rescale lengths by scale.length and times by scale.length / sqrt(g H0).
    #[arg(long, global = true)]
    dimensional: bool,
    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ray trajectories sampled at 65 times per ray.
    Trace { config: PathBuf },
    /// Front samples at each evaluation time.
    Front { config: PathBuf },
    /// Classified focal points and the scene cache.
    Focal { config: PathBuf },
    /// Asymptotic elevation on the evaluation grid.
    Field { config: PathBuf },
    /// Finite-difference reference on the evaluation grid.
    OracleFd { config: PathBuf },
    /// Spectral reference (constant depth only).
    OracleSpectral { config: PathBuf },
    /// Front-band error of the asymptotic field against an oracle.
    Compare { config: PathBuf },
    /// Profile function F(z) with its Maslov-phased real part.
    Profile { config: PathBuf },
    /// Dispersion threshold l^3 / H^2.
    Threshold {
        config: Option<PathBuf>,
        /// Depth in km.
        #[arg(long = "depth", requires = "length")]
        depth: Option<f64>,
        /// Source size in km.
        #[arg(long = "length", requires = "depth")]
        length: Option<f64>,
    },
    /// Plot-ready CSV from earlier outputs.
    Plot {
        kind: PlotKind,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Front time to extract (front_polyline); default is the last one.
        #[arg(long)]
        t: Option<f64>,
        /// Direction of the cut (profile_cut).
        #[arg(long, default_value_t = 0.0)]
        psi: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum PlotKind {
    FrontPolyline,
    ProfileCut,
    FieldHeatmap,
}

fn exit_code(e: &mfront::Error) -> u8 {
    use mfront::Error::*;
    match e {
        Parse { .. } | Argument(_) | Io(_) => 2,
        Numeric { .. } | Resolution(_) | Singularity(_) | Consistency(_) | Degenerate(_) => 3,
        Validity(_) | Domain(_) | Capability(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let (name, cfg_path) = match &cli.cmd {
        Cmd::Trace { config } => ("trace", Some(config)),
        Cmd::Front { config } => ("front", Some(config)),
        Cmd::Focal { config } => ("focal", Some(config)),
        Cmd::Field { config } => ("field", Some(config)),
        Cmd::OracleFd { config } => ("oracle-fd", Some(config)),
        Cmd::OracleSpectral { config } => ("oracle-spectral", Some(config)),
        Cmd::Compare { config } => ("compare", Some(config)),
        Cmd::Profile { config } => ("profile", Some(config)),
        Cmd::Threshold { config, .. } => ("threshold", config.as_ref()),
        Cmd::Plot { .. } => ("plot", None),
    };

    if let Cmd::Plot { kind, input, output, t, psi } = &cli.cmd {
        return match plot::emit(*kind, input, output, *t, *psi) {
            Ok(msg) => {
                println!("{msg}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        };
    }
    if let Cmd::Threshold { depth: Some(h), length: Some(l), .. } = cli.cmd {
        return match commands::threshold_value(h, l) {
            Ok(v) => {
                println!("l^3/H^2 = {v} km");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        };
    }
    let Some(cfg_path) = cfg_path else {
        eprintln!("error: threshold needs a config or both --depth and --length");
        return ExitCode::from(2);
    };

    let cfg = match ScenarioConfig::load(cfg_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cfg_path.display());
            return ExitCode::from(exit_code(&e));
        }
    };
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.clone());
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return ExitCode::from(2);
    }
    let mut meta = RunMeta::new(name, &cfg);
    let mut ctx = Ctx { cfg: &cfg, out: &out, dimensional: cli.dimensional, meta: &mut meta };
    let res = match &cli.cmd {
        Cmd::Trace { .. } => ctx.trace(),
        Cmd::Front { .. } => ctx.front(),
        Cmd::Focal { .. } => ctx.focal(),
        Cmd::Field { .. } => ctx.field(),
        Cmd::OracleFd { .. } => ctx.oracle_fd(),
        Cmd::OracleSpectral { .. } => ctx.oracle_spectral(),
        Cmd::Compare { .. } => ctx.compare(),
        Cmd::Profile { .. } => ctx.profile(),
        Cmd::Threshold { .. } => ctx.threshold(),
        Cmd::Plot { .. } => unreachable!(),
    };
    let code = match &res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            meta.fail(e);
            exit_code(e)
        }
    };
    if let Err(e) = meta.write(&out.join("run.meta")) {
        eprintln!("error: cannot write run.meta: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
