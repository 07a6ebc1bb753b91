//! `bctau`: command-line driver for the acceptance criteria and the
//! config-driven pipelines.
//!
//! Exit codes: 0 when every selected check passes, 1 on a criterion or stage
//! failure, 2 on a configuration or output error.

mod config;
mod manifest;
mod stages;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use bctau::criteria::{self, Bound, Check, RunParams};
use bctau::replib;
use clap::{Parser, Subcommand};

use config::{ConfigError, ExperimentConfig};
use manifest::RunManifest;
use stages::{Artifact, Example, StageRun};

#[derive(Parser, Debug)]
#[command(name = "bctau", version, about = "Bicomplex geometry toolkit: acceptance criteria and pipelines")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Grid size, overriding the config.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// RNG seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for the manifest and data files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the manifest as JSON instead of a summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Criterion 1: the isomorphism onto the bicomplex isometry group.
    Algebra,
    /// Model-space invariants.
    Chtau {
        #[command(subcommand)]
        cmd: ChtauCmd,
    },
    /// Discrete metric calculus.
    Metric {
        #[command(subcommand)]
        cmd: MetricCmd,
    },
    /// Gauss equation.
    Gauss {
        #[command(subcommand)]
        cmd: GaussCmd,
    },
    /// Flat connection.
    Conn {
        #[command(subcommand)]
        cmd: ConnCmd,
    },
    /// Affine spheres.
    Affine {
        #[command(subcommand)]
        cmd: AffineCmd,
    },
    /// Representation diagnostics.
    Rep {
        #[command(subcommand)]
        cmd: RepCmd,
    },
    /// Solve, assemble, flatness, holonomy and (on the Hitchin locus) the affine roundtrip.
    Pipeline,
    /// Runs acceptance criteria (all ten by default).
    Accept {
        /// Criterion ids to run.
        #[arg(long = "id", value_parser = clap::value_parser!(u8).range(1..=10))]
        ids: Vec<u8>,
    },
}

#[derive(Subcommand, Debug)]
enum ChtauCmd {
    /// Seeded invariant table.
    Check,
}

#[derive(Subcommand, Debug)]
enum MetricCmd {
    /// Criterion 2: Laplacian and curvature convergence against the oracle.
    Convergence,
    /// Criterion 3: the Stokes identity.
    Stokes,
}

#[derive(Subcommand, Debug)]
enum GaussCmd {
    /// Criterion 4: constant roots and the perturbed problem.
    Check,
    /// Solves the configured problem; writes solve.json and psi.csv.
    Solve,
}

#[derive(Subcommand, Debug)]
enum ConnCmd {
    /// Criterion 5: Maurer-Cartan residuals.
    Flatness,
    /// Criterion 6: period holonomies.
    Periods,
    /// Holonomy of the configured datum around a loop.
    Holonomy {
        /// `x`, `y` or a JSON step list.
        #[arg(long = "loop", default_value = "x")]
        lp: String,
    },
}

#[derive(Subcommand, Debug)]
enum AffineCmd {
    /// Criterion 8, or the configured Wang data with `--config`.
    Roundtrip,
    /// Criterion 9: sign of the second variation.
    SecondVariation,
}

#[derive(Subcommand, Debug)]
enum RepCmd {
    /// Criterion 10, or a scan of the given generators.
    Anosov {
        /// Generator file: JSON list of 3x3 complex matrices.
        #[arg(long, conflicts_with = "example")]
        gens: Option<PathBuf>,
        /// Built-in generators.
        #[arg(long, value_enum)]
        example: Option<Example>,
        /// Maximal word length.
        #[arg(long)]
        len: Option<usize>,
    },
    /// Criterion 7, or the configured study with `--config`.
    Goldman,
}

enum Failure {
    Config(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

struct Run {
    manifest: RunManifest,
    artifacts: Vec<Artifact>,
}

impl Run {
    fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            manifest: RunManifest::new(command, cfg),
            artifacts: Vec::new(),
        }
    }

    fn criterion(&mut self, id: u8, cfg: &ExperimentConfig) {
        let params = RunParams {
            grid: cfg.grid,
            seed: cfg.seed,
        };
        self.manifest.push_criterion(criteria::run(id, &params));
    }

    fn stage(&mut self, run: StageRun) {
        self.artifacts.extend(run.artifacts);
        self.manifest.push_stage(run.summary);
    }
}

fn effective_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if cli.grid.is_some() {
        cfg.grid = cli.grid;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.out.is_some() {
        cfg.output = cli.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: &ExperimentConfig) -> Result<Run, Failure> {
    let has_config = cli.config.is_some();
    let run = match &cli.command {
        Command::Algebra => criterion_run("algebra", 1, cfg),
        Command::Chtau { cmd: ChtauCmd::Check } => stage_run("chtau check", cfg, stages::chtau_check(cfg)),
        Command::Metric { cmd } => match cmd {
            MetricCmd::Convergence => criterion_run("metric convergence", 2, cfg),
            MetricCmd::Stokes => criterion_run("metric stokes", 3, cfg),
        },
        Command::Gauss { cmd } => match cmd {
            GaussCmd::Check => criterion_run("gauss check", 4, cfg),
            GaussCmd::Solve => stage_run("gauss solve", cfg, stages::gauss_solve(cfg)?),
        },
        Command::Conn { cmd } => match cmd {
            ConnCmd::Flatness => criterion_run("conn flatness", 5, cfg),
            ConnCmd::Periods => criterion_run("conn periods", 6, cfg),
            ConnCmd::Holonomy { lp } => {
                let mut run = Run::new("conn holonomy", cfg);
                for s in stages::conn_holonomy(cfg, lp)? {
                    run.stage(s);
                }
                run
            }
        },
        Command::Affine { cmd } => match cmd {
            AffineCmd::Roundtrip if has_config => stage_run("affine roundtrip", cfg, stages::affine_roundtrip(cfg)?),
            AffineCmd::Roundtrip => {
                let mut run = criterion_run("affine roundtrip", 8, cfg);
                if cli.out.is_some() {
                    let n = cfg.grid.unwrap_or(128);
                    let a = stages::fplus_artifact(n, 1.0.into()).map_err(Failure::Config)?;
                    run.artifacts.push(a);
                }
                run
            }
            AffineCmd::SecondVariation => criterion_run("affine second-variation", 9, cfg),
        },
        Command::Rep { cmd } => match cmd {
            RepCmd::Goldman if has_config => stage_run("rep goldman", cfg, stages::rep_goldman(cfg)),
            RepCmd::Goldman => criterion_run("rep goldman", 7, cfg),
            RepCmd::Anosov { gens, example, len } => {
                let len = len.unwrap_or(cfg.rep.len);
                if !(1..=config::MAX_WORD_LEN).contains(&len) {
                    return Err(Failure::Config(format!("--len must be in 1..={}", config::MAX_WORD_LEN)));
                }
                let rep = match (example, gens.as_ref().or(cfg.rep.gens.as_ref())) {
                    (Some(Example::Fuchsian), _) => Some(replib::fuchsian_example()),
                    (Some(Example::Reducible), _) => Some(replib::reducible_example(cfg.seed)),
                    (None, Some(path)) => Some(stages::load_generators(path)?),
                    (None, None) => None,
                };
                match rep {
                    Some(rep) => stage_run("rep anosov", cfg, stages::rep_anosov(cfg, &rep, len)),
                    None => criterion_run("rep anosov", 10, cfg),
                }
            }
        },
        Command::Pipeline => {
            let mut run = Run::new("pipeline", cfg);
            for s in stages::pipeline(cfg)? {
                run.stage(s);
            }
            run
        }
        Command::Accept { ids } => {
            let mut run = Run::new("accept", cfg);
            let ids: Vec<u8> = if ids.is_empty() { (1..=10).collect() } else { ids.clone() };
            for id in ids {
                run.criterion(id, cfg);
            }
            run
        }
    };
    Ok(run)
}

fn criterion_run(command: &str, id: u8, cfg: &ExperimentConfig) -> Run {
    let mut run = Run::new(command, cfg);
    run.criterion(id, cfg);
    run
}

fn stage_run(command: &str, cfg: &ExperimentConfig, s: StageRun) -> Run {
    let mut run = Run::new(command, cfg);
    run.stage(s);
    run
}

fn op(b: Bound) -> &'static str {
    match b {
        Bound::AtMost => "<=",
        Bound::AtLeast => ">=",
        Bound::Below => "<",
        Bound::Above => ">",
    }
}

fn check_line(c: &Check) -> String {
    let status = if c.passed { "ok  " } else { "FAIL" };
    format!("    {status} {}: {:.3e} {} {:.3e}", c.name, c.value, op(c.bound), c.limit)
}

fn print_summary(m: &RunManifest) {
    for r in &m.criteria {
        println!("{}", r.line());
        for c in r.checks.iter().filter(|c| !c.passed) {
            println!("{}", check_line(c));
        }
    }
    for s in &m.stages {
        let status = if s.passed() { "PASS" } else { "FAIL" };
        println!("{status} stage {}", s.name);
        if let Some(e) = &s.error {
            println!("    error: {e}");
        }
        for c in &s.checks {
            println!("{}", check_line(c));
        }
        if let Some(n) = &s.note {
            println!("    note: {n}");
        }
    }
}

fn failed_checks(checks: &[Check]) -> String {
    let lines: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: {:.3e} {} {:.3e}", c.name, c.value, op(c.bound), c.limit))
        .collect();
    lines.join("; ")
}

/// The stage-failure message: criterion id, title and every failing check.
fn failure_message(m: &RunManifest) -> Option<String> {
    let title = |id: u8| criteria::TITLES[id as usize - 1];
    if let Some(r) = m.criteria.iter().find(|r| !r.passed()) {
        let detail = match &r.error {
            Some(e) => e.clone(),
            None if r.checks.iter().all(|c| c.passed) => "time limit exceeded".into(),
            None => failed_checks(&r.checks),
        };
        return Some(format!("criterion {} ({}): {detail}", r.id, title(r.id)));
    }
    m.stages.iter().find(|s| !s.passed()).map(|s| {
        let detail = match &s.error {
            Some(e) => e.clone(),
            None if s.checks.is_empty() => "no checks".into(),
            None => failed_checks(&s.checks),
        };
        match s.criterion {
            Some(id) => format!("criterion {id} ({}), stage {}: {detail}", title(id), s.name),
            None => format!("stage {}: {detail}", s.name),
        }
    })
}

fn write_outputs(dir: &PathBuf, run: &Run) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.json"), run.manifest.to_json())?;
    for a in &run.artifacts {
        fs::write(dir.join(&a.name), &a.bytes)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("config error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match effective_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let run = match execute(&cli, &cfg) {
        Ok(r) => r,
        Err(Failure::Config(e)) => {
            eprintln!("{}", if e.starts_with("config error") { e } else { format!("config error: {e}") });
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = &cfg.output {
        if let Err(e) = write_outputs(dir, &run) {
            eprintln!("output error: {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    }
    if cli.json {
        print!("{}", run.manifest.to_json());
    } else {
        print_summary(&run.manifest);
    }
    match failure_message(&run.manifest) {
        None => ExitCode::SUCCESS,
        Some(msg) => {
            eprintln!("stage failure: {msg}");
            ExitCode::from(1)
        }
    }
}
