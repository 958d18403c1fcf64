use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};

use siltlab_core::study::{self, StudyOutput};
use siltlab_core::{Error, ExperimentConfig, ModeName, Study};

#[derive(Parser)]
#[command(
    name = "siltlab",
    version,
    about = "Monte Carlo checks of the Tanaka formula for self-intersection local time"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path and write the path, its moving-level curve and one report.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
    /// Residuals of the identity for the derivative of self-intersection local time.
    VerifyTanaka(Common),
    /// Calibrate the estimators on the classical Tanaka formula.
    ClassicalTanaka(Common),
    /// Convergence in the bandwidth or in the time step.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ConvergeKind::Eps)]
        kind: ConvergeKind,
    },
    /// Increment scaling of V in the level or in the bandwidth.
    Continuity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ContinuityKind::X)]
        kind: ContinuityKind,
    },
    /// Tail decay of the squared moving-level local time.
    TailLemma(Common),
    /// Weak-derivative identity against a Gaussian test function.
    WeakDerivative(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConvergeKind {
    Eps,
    Dt,
}

#[derive(Clone, Copy, ValueEnum)]
enum ContinuityKind {
    X,
    Eps,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Reference,
    Fast,
}

#[derive(Args)]
struct Common {
    /// TOML file with `ExperimentConfig` keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Replicate count.
    #[arg(long)]
    n_paths: Option<usize>,
}

impl Common {
    fn load(&self, default: Study, allowed: &[Study]) -> siltlab_core::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p, default)?,
            None => ExperimentConfig::preset(default),
        };
        if !allowed.contains(&cfg.study) {
            return Err(Error::Config {
                field: "study".into(),
                reason: format!("`{}` cannot run under this subcommand", cfg.study),
            });
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Reference => ModeName::Reference,
                ModeArg::Fast => ModeName::Fast,
            };
        }
        if let Some(n) = self.n_paths {
            cfg.n_paths = n;
        }
        if self.threads == Some(0) {
            return Err(Error::Config {
                field: "threads".into(),
                reason: "must be at least 1".into(),
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

const EXIT_THRESHOLD: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_THRESHOLD),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(if e.is_configuration() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            })
        }
    }
}

fn run(cli: Cli) -> siltlab_core::Result<bool> {
    let (common, default, allowed): (&Common, Study, Vec<Study>) = match &cli.command {
        Command::Simulate { common, replicate } => {
            let cfg = common.load(Study::VerifyTanaka, &Study::ALL)?;
            let report = study::simulate(&cfg, *replicate, &cfg.out_dir)?;
            println!(
                "replicate {} x={} eps={}: lhs={} rhs={} residual={}",
                replicate, report.x, report.epsilon, report.lhs, report.rhs, report.residual
            );
            println!(
                "wrote path.csv, curve.csv, report.csv to {}",
                cfg.out_dir.display()
            );
            return Ok(true);
        }
        Command::VerifyTanaka(c) => (c, Study::VerifyTanaka, vec![Study::VerifyTanaka]),
        Command::ClassicalTanaka(c) => (c, Study::ClassicalTanaka, vec![Study::ClassicalTanaka]),
        Command::Converge { common, kind } => (
            common,
            match kind {
                ConvergeKind::Eps => Study::ConvergeEps,
                ConvergeKind::Dt => Study::ConvergeDt,
            },
            vec![Study::ConvergeEps, Study::ConvergeDt],
        ),
        Command::Continuity { common, kind } => (
            common,
            match kind {
                ContinuityKind::X => Study::ContinuityX,
                ContinuityKind::Eps => Study::ContinuityEps,
            },
            vec![Study::ContinuityX, Study::ContinuityEps],
        ),
        Command::TailLemma(c) => (c, Study::TailLemma, vec![Study::TailLemma]),
        Command::WeakDerivative(c) => (c, Study::WeakDerivative, vec![Study::WeakDerivative]),
    };
    let cfg = common.load(default, &allowed)?;
    info!("running {} over {} paths", cfg.study, cfg.n_paths);
    let start = Instant::now();
    let output = match common.threads {
        Some(n) => study::run_study_with_threads(&cfg, n)?,
        None => study::run_study(&cfg)?,
    };
    let wall = start.elapsed().as_secs_f64();
    study::write_outputs(&output, &cfg.out_dir, wall)?;
    print_report(&output, wall);
    Ok(output.report.pass)
}

fn print_report(out: &StudyOutput, wall: f64) {
    let r = &out.report;
    println!("{} ({} paths, {:.1}s)", r.study, out.config.n_paths, wall);
    for row in &r.rows {
        let s = &row.summary;
        println!(
            "  {:<32} mean {:>12.5e}  se {:>10.3e}  rmse {:>10.3e}  {}",
            row.parameter,
            s.mean,
            s.stderr,
            s.rmse,
            if row.pass { "ok" } else { "FAIL" }
        );
    }
    for s in &r.slopes {
        match (&s.fit, s.min_slope) {
            (Some(f), Some(lo)) => println!(
                "  slope {:<26} {:.3} +- {:.3} (min {lo}) {}",
                s.name,
                f.slope,
                f.stderr,
                if s.pass { "ok" } else { "FAIL" }
            ),
            (Some(f), None) => println!("  slope {:<26} {:.3} +- {:.3}", s.name, f.slope, f.stderr),
            (None, _) => println!("  slope {:<26} unavailable", s.name),
        }
    }
    for c in &r.checks {
        println!(
            "  check {:<26} {:.5} vs {:.5} {}",
            c.name,
            c.observed,
            c.bound,
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    println!("{}", if r.pass { "PASS" } else { "FAIL" });
}
