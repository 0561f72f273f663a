//! Subcommand dispatch for the `zwm-tomo` binary.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or I/O
//! error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{parse_config, RunConfig, Tolerances};
use crate::error::{Error, Result};
use crate::forms::{plan_schedule, MeasurementPlan};
use crate::fringe::fit_fringe;
use crate::interferometer::Simulator;
use crate::io::{
    plot_csv, read_json, setting_stem, write_atomic, write_json, write_pattern, DirectorySource,
    FitRecord,
};
use crate::matrix::{Gate, UnitaryMatrix};
use crate::reconstruction::{
    reconstruct_with, verify_report, PatternSource, ReconstructOptions, ReconstructionReport,
};

#[derive(Debug, Parser)]
#[command(name = "zwm-tomo", version, about = "Undetected-photon unitary reconstruction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the noise master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Write the measurement plan.
    Plan,
    /// Simulate every setting and write pattern CSVs with sidecars.
    Simulate,
    /// Fit every pattern in a pattern directory.
    Fit {
        /// Pattern directory (default: `<out>/patterns`).
        #[arg(long)]
        patterns: Option<PathBuf>,
    },
    /// Reconstruct the unknown unitary and write `report.json`.
    Reconstruct {
        /// Reconstruct blind from a pattern directory instead of simulating.
        #[arg(long)]
        patterns: Option<PathBuf>,
    },
    /// Compare a report with the ground truth.
    Verify {
        /// Report to check (default: `<out>/report.json`).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the gate library.
    Gates {
        #[arg(long)]
        dim: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    VerificationFailed,
    ConfigError,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::VerificationFailed => 1,
            ExitStatus::ConfigError => 2,
        }
    }
}

/// Global options shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

impl Options {
    fn load_config(&self) -> Result<Option<RunConfig>> {
        let Some(path) = &self.config else {
            return Ok(None);
        };
        let mut cfg = parse_config(path)?;
        if let Some(seed) = self.seed {
            cfg.noise.master_seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        Ok(Some(cfg))
    }

    fn require_config(&self) -> Result<RunConfig> {
        self.load_config()?
            .ok_or_else(|| Error::config("--config", "this command needs a run configuration"))
    }

    fn out_dir(&self, cfg: Option<&RunConfig>) -> Result<PathBuf> {
        self.out
            .clone()
            .or_else(|| cfg.map(|c| c.output_dir.clone()))
            .ok_or_else(|| Error::config("--out", "no output directory given"))
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::ConfigError.code() } else { 0 };
        }
    };
    let options = Options {
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        quiet: cli.quiet,
    };
    match dispatch(&cli.command, &options) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::ConfigError.code()
        }
    }
}

pub fn dispatch(command: &Command, options: &Options) -> Result<ExitStatus> {
    match command {
        Command::Plan => cmd_plan(options),
        Command::Simulate => cmd_simulate(options),
        Command::Fit { patterns } => cmd_fit(options, patterns.as_deref()),
        Command::Reconstruct { patterns } => cmd_reconstruct(options, patterns.as_deref()),
        Command::Verify { report } => cmd_verify(options, report.as_deref()),
        Command::Gates { dim } => cmd_gates(options, *dim),
    }
}

fn build_plan(cfg: &RunConfig) -> Result<MeasurementPlan> {
    plan_schedule(cfg.dim, cfg.protocol, &cfg.phase_grid)
}

fn build_simulator(cfg: &RunConfig) -> Result<Simulator> {
    Simulator::new(cfg.truth_matrix()?, cfg.scale, cfg.coherence, cfg.noise)
}

fn cmd_plan(options: &Options) -> Result<ExitStatus> {
    let cfg = options.require_config()?;
    let plan = build_plan(&cfg)?;
    let out = options.out_dir(Some(&cfg))?;
    write_json(&out.join("plan.json"), &plan)?;
    options.say(format!(
        "{} plan for dim {}: {} forms, {} settings -> {}",
        serde_json::to_value(plan.protocol).map(|v| v.to_string()).unwrap_or_default(),
        plan.dim,
        plan.forms.len(),
        plan.settings.len(),
        out.join("plan.json").display()
    ));
    for (i, form) in plan.forms.iter().enumerate() {
        options.say(format!("  form {i}: {form:?}"));
    }
    Ok(ExitStatus::Success)
}

fn cmd_simulate(options: &Options) -> Result<ExitStatus> {
    let cfg = options.require_config()?;
    let plan = build_plan(&cfg)?;
    let sim = build_simulator(&cfg)?;
    let out = options.out_dir(Some(&cfg))?;
    let dir = out.join("patterns");
    let mut seeds = sim.seeds();
    seeds.haar_seed = cfg.haar_seed();
    plan.settings.par_iter().try_for_each(|setting| {
        let pattern = sim.simulate(setting)?;
        write_pattern(&dir, plan.dim, &pattern, &cfg.noise, seeds)
    })?;
    write_json(&dir.join("plan.json"), &plan)?;
    write_json(&out.join("plan.json"), &plan)?;
    options.say(format!(
        "simulated {} settings -> {}",
        plan.settings.len(),
        dir.display()
    ));
    Ok(ExitStatus::Success)
}

fn pattern_dir(options: &Options, cfg: Option<&RunConfig>, explicit: Option<&Path>) -> Result<PathBuf> {
    match explicit {
        Some(p) => Ok(p.to_path_buf()),
        None => Ok(options.out_dir(cfg)?.join("patterns")),
    }
}

fn cmd_fit(options: &Options, patterns: Option<&Path>) -> Result<ExitStatus> {
    let cfg = options.load_config()?;
    let dir = pattern_dir(options, cfg.as_ref(), patterns)?;
    let plan: MeasurementPlan = read_json(&dir.join("plan.json"))?;
    let source = DirectorySource::new(&dir, plan.dim);
    let out = match options.out_dir(cfg.as_ref()) {
        Ok(out) => out,
        Err(_) => dir.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let fits_dir = out.join("fits");
    plan.settings.par_iter().try_for_each(|setting| {
        let pattern = source.pattern(setting)?;
        let fit = fit_fringe(&pattern)?;
        let record = FitRecord {
            setting_id: setting.id,
            setting: setting.clone(),
            fit,
        };
        write_json(&fits_dir.join(format!("{}.json", setting_stem(setting.id))), &record)
    })?;
    options.say(format!(
        "fitted {} patterns -> {}",
        plan.settings.len(),
        fits_dir.display()
    ));
    Ok(ExitStatus::Success)
}

fn cmd_reconstruct(options: &Options, patterns: Option<&Path>) -> Result<ExitStatus> {
    let cfg = options.load_config()?;
    let reconstruct_opts = ReconstructOptions {
        phase_mode: cfg.as_ref().map(|c| c.phase_mode).unwrap_or_default(),
        visibility_tol: cfg
            .as_ref()
            .map(|c| c.tolerances.visibility)
            .unwrap_or(Tolerances::default().visibility),
    };
    let out = match (options.out_dir(cfg.as_ref()), patterns) {
        (Ok(out), _) => out,
        (Err(_), Some(p)) => p.parent().map(Path::to_path_buf).unwrap_or_default(),
        (Err(e), None) => return Err(e),
    };

    let (report, measurements) = match patterns {
        Some(dir) => {
            // Blind: only the pattern directory is consulted.
            let plan: MeasurementPlan = read_json(&dir.join("plan.json"))?;
            let source = DirectorySource::new(dir, plan.dim);
            reconstruct_with(&source, &plan, &reconstruct_opts, None)?
        }
        None => {
            let cfg = cfg
                .as_ref()
                .ok_or_else(|| Error::config("--config", "needed unless --patterns is given"))?;
            let plan = build_plan(cfg)?;
            let sim = build_simulator(cfg)?;
            let truth = sim.truth().clone();
            let (mut report, measurements) =
                reconstruct_with(&sim, &plan, &reconstruct_opts, Some(&truth))?;
            report.seeds.haar_seed = cfg.haar_seed();
            (report, measurements)
        }
    };

    write_json(&out.join("report.json"), &report)?;
    for m in &measurements {
        write_atomic(
            &out.join("plots").join(format!("{}.csv", setting_stem(m.setting_id))),
            plot_csv(m).as_bytes(),
        )?;
    }
    options.say(format!(
        "reconstructed dim {} from {} settings -> {}",
        report.dim,
        report.settings_used,
        out.join("report.json").display()
    ));
    options.say(format!("estimate:\n{}", report.estimate));
    options.say(format!("unitarity deviation: {:e}", report.unitarity_deviation));
    if let Some(f) = report.fidelity_vs_truth {
        options.say(format!("fidelity vs truth: {f:.15}"));
    }
    Ok(ExitStatus::Success)
}

fn cmd_verify(options: &Options, report_path: Option<&Path>) -> Result<ExitStatus> {
    let cfg = options.load_config()?;
    let path = match report_path {
        Some(p) => p.to_path_buf(),
        None => options.out_dir(cfg.as_ref())?.join("report.json"),
    };
    let mut report: ReconstructionReport = read_json(&path)?;
    if report.truth.is_none() {
        if let Some(cfg) = &cfg {
            let truth: UnitaryMatrix = cfg.truth_matrix()?;
            report.truth = Some(truth.into_inner());
        }
    }
    let tol = cfg.as_ref().map(|c| c.tolerances).unwrap_or_default();
    let summary = verify_report(&report, tol.modulus, tol.argument);
    if options.quiet {
        println!("{}", if summary.passed { "PASS" } else { "FAIL" });
    } else {
        print!("{summary}");
    }
    Ok(if summary.passed {
        ExitStatus::Success
    } else {
        ExitStatus::VerificationFailed
    })
}

fn cmd_gates(options: &Options, dim: Option<usize>) -> Result<ExitStatus> {
    let cfg = options.load_config()?;
    let dim = dim.or(cfg.as_ref().map(|c| c.dim)).unwrap_or(4);
    for gate in Gate::ALL {
        match gate.matrix(dim) {
            Ok(m) => println!("{gate} (dim {dim}):\n{}", m.matrix()),
            Err(e) => {
                if !options.quiet {
                    println!("{gate}: {e}");
                }
            }
        }
    }
    Ok(ExitStatus::Success)
}
