use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpkit::report::TaskStatus;
use fpkit::{load_config, run, ExperimentConfig, ExperimentKind, TableFormat};

#[derive(Parser)]
#[command(
    name = "fpkit",
    version,
    about = "Certify enriched almost contractions and run fixed-point experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check contraction conditions on sampled pairs.
    Certify(WithConfig),
    /// Search a parameter grid for certified (b, θ, L).
    Search(WithConfig),
    /// Run Picard or Krasnoselskij iterations.
    Iterate(WithConfig),
    /// Iterate over a λ × start grid in parallel.
    Sweep(WithConfig),
    /// Solve a variational inequality by projected averaging.
    Vip(WithConfig),
    /// Run the built-in reproduction suites.
    Reproduce {
        /// Optional reproduce-paper config.
        config: Option<PathBuf>,
        /// Suite to run; repeat for several. Defaults to all.
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// List suite names and exit.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct WithConfig {
    /// Experiment config (TOML, or JSON by extension).
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's, else `fpkit-out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Table format: csv, json or markdown.
    #[arg(long)]
    format: Option<TableFormat>,
    /// Record wall time in the report.
    #[arg(long)]
    timing: bool,
}

fn load(path: &Path, want: ExperimentKind) -> Result<ExperimentConfig, String> {
    let cfg = load_config(path).map_err(|e| e.to_string())?;
    if cfg.kind != want {
        return Err(format!(
            "{}: config kind is {:?}, but the subcommand expects {:?}",
            path.display(),
            cfg.kind.as_str(),
            want.as_str()
        ));
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<i32, String> {
    let (mut cfg, common) = match cli.command {
        Command::Certify(a) => (load(&a.config, ExperimentKind::Certify)?, a.common),
        Command::Search(a) => (load(&a.config, ExperimentKind::Search)?, a.common),
        Command::Iterate(a) => (load(&a.config, ExperimentKind::Iterate)?, a.common),
        Command::Sweep(a) => (load(&a.config, ExperimentKind::Sweep)?, a.common),
        Command::Vip(a) => (load(&a.config, ExperimentKind::Vip)?, a.common),
        Command::Reproduce { list: true, .. } => {
            for s in fpkit::reproduce::SUITES {
                println!("{s}");
            }
            return Ok(0);
        }
        Command::Reproduce {
            config,
            suites,
            common,
            ..
        } => {
            let mut cfg = match config {
                Some(p) => load(&p, ExperimentKind::ReproducePaper)?,
                None => ExperimentConfig::reproduce(Vec::new(), fpkit::reproduce::DEFAULT_SEED),
            };
            if !suites.is_empty() {
                cfg.reproduce.get_or_insert_with(Default::default).suites = suites;
            }
            (cfg, common)
        }
    };
    if let Some(s) = common.seed {
        cfg.seed = Some(s);
        if let Some(p) = cfg.sampling.as_mut() {
            p.seed = Some(s);
        }
    }
    if let Some(f) = common.format {
        cfg.output.format = f;
    }
    cfg.output.timing |= common.timing;
    let dir = common
        .out_dir
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("fpkit-out"));

    let out = run(&cfg).map_err(|e| e.to_string())?;
    out.write(&dir).map_err(|e| e.to_string())?;

    for t in &out.report.tasks {
        let tag = match t.status {
            TaskStatus::Pass => "PASS",
            TaskStatus::Fail => "FAIL",
            TaskStatus::Error => "ERROR",
        };
        println!("{tag} {}", t.name);
        for c in &t.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            if c.detail.is_empty() {
                println!("  {mark} {}", c.name);
            } else {
                println!("  {mark} {}: {}", c.name, c.detail);
            }
        }
        if let Some(e) = &t.error {
            println!("  error: {e}");
        }
    }
    println!("report: {}", dir.join("report.json").display());
    Ok(out.report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
