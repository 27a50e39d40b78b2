//! Command-line front end: flag and file configuration, run directories and
//! the four experiment pipelines.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use crate::config::{KernelReference, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    compare_baseline, compute_reference, convergence_study, error_series, run_model_problem,
    shared_samples, write_checkpoint,
};
use crate::kernels::kernel_sup_error;

#[derive(Debug, Parser)]
#[command(name = "memstep", version, about = "Time stepping for equations with a sum-of-exponentials memory kernel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the relaxation model problem and log its trajectory.
    Run(CommonArgs),
    /// Convergence study over a ladder of step counts.
    Converge(CommonArgs),
    /// Pointwise error of the Prony kernel against exp(-t^beta).
    KernelError(CommonArgs),
    /// Compare the compressed stepper with the full-history baseline.
    CompareBaseline(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Run(_) => "run",
            Self::Converge(_) => "converge",
            Self::KernelError(_) => "kernel-error",
            Self::CompareBaseline(_) => "compare-baseline",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Self::Run(a) | Self::Converge(a) | Self::KernelError(a) | Self::CompareBaseline(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON configuration with flat dotted keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "R")]
    pub beta: Option<f64>,
    /// Prony coefficients as `a,b` CSV rows.
    #[arg(long, value_name = "PATH")]
    pub kernel_file: Option<PathBuf>,
    #[arg(long, value_name = "R")]
    pub sigma: Option<f64>,
    #[arg(long, value_name = "R")]
    pub tau: Option<f64>,
    #[arg(long, value_name = "N")]
    pub steps: Option<usize>,
    /// Final time.
    #[arg(long = "T", value_name = "R")]
    pub final_time: Option<f64>,
    /// Cells per direction.
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub reference_steps: Option<usize>,
    /// Comma-separated step counts of a convergence study.
    #[arg(long, value_name = "N,N,...", value_delimiter = ',')]
    pub ladder: Option<Vec<usize>>,
    /// Omit wall-clock timing from CSV output.
    #[arg(long, value_name = "BOOL", action = clap::ArgAction::Set)]
    pub deterministic: Option<bool>,
}

impl CommonArgs {
    /// File values (if any) overridden by flags, then resolved.
    pub fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = &self.kernel_file {
            cfg.kernel_file = Some(v.clone());
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.final_time {
            cfg.final_time = v;
        }
        // A flag for one of tau/steps replaces both file values.
        if self.tau.is_some() || self.steps.is_some() {
            cfg.tau = self.tau;
            cfg.steps = self.steps;
        }
        if let Some(v) = self.grid {
            cfg.grid_n = v;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = Some(v.clone());
        }
        if let Some(v) = self.reference_steps {
            cfg.reference_steps = v;
        }
        if let Some(v) = &self.ladder {
            cfg.ladder = v.clone();
        }
        if let Some(v) = self.deterministic {
            cfg.deterministic = v;
        }
        cfg.resolve()
    }
}

/// Exit status for an error: 3 numerical, 1 input/output, 2 configuration.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        3
    } else if matches!(err, Error::Io { .. }) {
        1
    } else {
        2
    }
}

/// Runs a parsed command, writing outputs below the resolved run directory.
pub fn execute(cli: &Cli, stdout: &mut dyn std::io::Write) -> Result<PathBuf> {
    let cfg = cli.command.args().load()?;
    let dir = output_dir(&cfg, cli.command.name());
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let marker = dir.join(".partial");
    write_file(&marker, "")?;
    let started = chrono::Utc::now();

    match &cli.command {
        Command::Run(_) => cmd_run(&cfg, &dir, stdout)?,
        Command::Converge(_) => cmd_converge(&cfg, &dir, stdout)?,
        Command::KernelError(_) => cmd_kernel_error(&cfg, &dir, stdout)?,
        Command::CompareBaseline(_) => cmd_compare_baseline(&cfg, &dir, stdout)?,
    }

    let mut manifest = cfg.to_flat_map()?;
    manifest.insert("output.dir".into(), Value::String(dir.display().to_string()));
    add_meta(&mut manifest, cli.command.name(), started);
    write_file(
        &dir.join("manifest.json"),
        &(serde_json::to_string_pretty(&Value::Object(manifest))? + "\n"),
    )?;
    std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(dir)
}

fn output_dir(cfg: &RunConfig, command: &str) -> PathBuf {
    match &cfg.output_dir {
        Some(dir) => dir.clone(),
        None => {
            let root = std::env::var_os("MEMSTEP_OUT").unwrap_or_else(|| "runs".into());
            PathBuf::from(root).join(command)
        }
    }
}

fn add_meta(map: &mut Map<String, Value>, command: &str, started: chrono::DateTime<chrono::Utc>) {
    let stamp = |t: chrono::DateTime<chrono::Utc>| {
        Value::String(t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
    };
    map.insert("meta.version".into(), env!("CARGO_PKG_VERSION").into());
    map.insert("meta.command".into(), command.into());
    map.insert("meta.started".into(), stamp(started));
    map.insert("meta.finished".into(), stamp(chrono::Utc::now()));
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn print(stdout: &mut dyn std::io::Write, line: String) -> Result<()> {
    writeln!(stdout, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn cmd_run(cfg: &RunConfig, dir: &Path, stdout: &mut dyn std::io::Write) -> Result<()> {
    let spec = cfg.experiment()?;
    let samples = shared_samples(&[spec.steps, spec.reference_steps]);
    let (run, reference) = rayon::join(
        || run_model_problem(&spec, spec.steps / samples),
        || compute_reference(&spec, samples),
    );
    let (run, reference) = (run?, reference?);
    let errors = error_series(&run.snapshots[1..], &reference.snapshots)?;
    write_file(&dir.join("trajectory.csv"), &run.trajectory_csv())?;
    write_file(&dir.join("errors.csv"), &errors.to_csv())?;
    write_checkpoint(&run.final_state, dir.join("checkpoint"))?;
    let last = run.records.last().expect("trajectory holds u^0");
    print(
        stdout,
        format!(
            "steps {} tau {:e}: final energy {:.6e}, center value {:.6e}, max eps2 {:.6e}, max epsinf {:.6e}",
            spec.steps,
            run.cfg.tau,
            last.energy,
            last.center_value,
            errors.max_eps2(),
            errors.max_epsinf()
        ),
    )
}

fn cmd_converge(cfg: &RunConfig, dir: &Path, stdout: &mut dyn std::io::Write) -> Result<()> {
    let report = convergence_study(&cfg.experiment()?)?;
    write_file(&dir.join("convergence.csv"), &report.to_csv())?;
    write_file(&dir.join("errors.csv"), &report.finest.to_csv())?;
    for r in &report.rows {
        print(
            stdout,
            format!("tau {:e}: max eps2 {:.6e}, max epsinf {:.6e}", r.tau, r.max_eps2, r.max_epsinf),
        )?;
    }
    let show = |s: Option<f64>| s.map_or("n/a".to_string(), |s| format!("{s:.4}"));
    print(
        stdout,
        format!(
            "slope eps2 {} epsinf {}",
            show(report.slope_eps2),
            show(report.slope_epsinf)
        ),
    )
}

fn cmd_kernel_error(cfg: &RunConfig, dir: &Path, stdout: &mut dyn std::io::Write) -> Result<()> {
    let prony = cfg.prony()?;
    let window = cfg.window()?;
    let report = match cfg.kernel_error_against {
        KernelReference::Analytic => kernel_sup_error(&cfg.analytic()?, &prony, &window)?,
        KernelReference::SelfCheck => kernel_sup_error(&prony, &prony, &window)?,
    };
    write_file(&dir.join("kernel_error.csv"), &report.to_csv())?;
    print(
        stdout,
        format!("sup error {:.16e} at t = {:.16e}", report.sup_norm, report.argmax()),
    )
}

fn cmd_compare_baseline(cfg: &RunConfig, dir: &Path, stdout: &mut dyn std::io::Write) -> Result<()> {
    let report = compare_baseline(&cfg.experiment()?, cfg.baseline_rule)?;
    write_file(&dir.join("baseline.csv"), &report.to_csv(!cfg.deterministic))?;
    for r in &report.rows {
        print(
            stdout,
            format!(
                "steps {}: max diff {:.6e}, fields {} vs {}, seconds {:.3} vs {:.3}",
                r.steps, r.max_diff, r.soe_fields, r.history_fields, r.soe_seconds, r.history_seconds
            ),
        )?;
    }
    let slope = report.slope.map_or("n/a".to_string(), |s| format!("{s:.4}"));
    print(stdout, format!("difference slope {slope}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::NotSpd("x".into())), 3);
        assert_eq!(exit_code(&Error::Convergence { iterations: 1, residual: 1.0 }), 3);
        assert_eq!(exit_code(&Error::config("a", "b")), 2);
        assert_eq!(
            exit_code(&Error::io("p", std::io::Error::other("boom"))),
            1
        );
    }

    #[test]
    fn flags_override_and_tau_replaces_steps() {
        let args = CommonArgs {
            tau: Some(0.5),
            final_time: Some(2.0),
            grid: Some(8),
            ..CommonArgs::default()
        };
        let cfg = args.load().unwrap();
        assert_eq!((cfg.steps, cfg.grid_n), (Some(4), 8));
    }
}
