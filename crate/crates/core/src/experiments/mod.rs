//! Relaxation of an initial state on the unit square: the model problem,
//! reference solutions, error metrics, convergence studies and the
//! comparison with the full-history baseline.

mod checkpoint;

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sample_function, CgSettings, Grid2D, GridFunction, SpdOperator};
use crate::kernels::{load_builtin_prony, PronySeries};
use crate::schemes::{
    auxiliary_residuals, energy, general_step, quadrature_init, quadrature_step, soe_init,
    soe_step, stiff_terms, HistoryKernel, ProblemSpec, QuadratureRule, SchemeConfig, SoeState,
};

pub use checkpoint::{read_checkpoint, write_checkpoint};

/// Which Prony kernel drives the memory term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    /// One of the tabulated twelve-term fits of `exp(-t^beta)`.
    Builtin { beta: f64 },
    Custom(PronySeries),
}

impl KernelChoice {
    pub fn prony(&self) -> Result<PronySeries> {
        match self {
            Self::Builtin { beta } => load_builtin_prony(*beta),
            Self::Custom(k) => Ok(k.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kernel: KernelChoice,
    /// `N1 = N2`.
    pub grid_n: usize,
    pub final_time: f64,
    pub sigma: f64,
    /// Steps of a single run.
    pub steps: usize,
    /// Step counts of a convergence study.
    pub ladder: Vec<usize>,
    pub reference_steps: usize,
    pub solver: CgSettings,
    /// Start from `u0 = 0` instead of the model initial state.
    pub zero_initial: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            kernel: KernelChoice::Builtin { beta: 0.5 },
            grid_n: 32,
            final_time: 10.0,
            sigma: 0.5,
            steps: 1000,
            ladder: vec![50, 100, 200, 400],
            reference_steps: 1000,
            solver: CgSettings::default(),
            zero_initial: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::config("time.final", format!("must be > 0, got {}", self.final_time)));
        }
        Grid2D::square(self.grid_n).map_err(|e| Error::config("grid.n", e.to_string()))?;
        if self.steps == 0 {
            return Err(Error::config("scheme.steps", "must be >= 1"));
        }
        if self.reference_steps == 0 {
            return Err(Error::config("study.reference_steps", "must be >= 1"));
        }
        self.kernel.prony()?;
        self.scheme(self.steps)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::square(self.grid_n)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let grid = self.grid()?;
        let u0 = if self.zero_initial {
            GridFunction::zeros(grid)
        } else {
            model_initial_state(grid)
        };
        ProblemSpec::new(SpdOperator::laplacian(grid), self.kernel.prony()?, u0)
    }

    /// Scheme with the spec's weight and `steps` uniform steps on `[0, T]`.
    pub fn scheme(&self, steps: usize) -> Result<SchemeConfig> {
        self.scheme_with_sigma(self.sigma, steps)
    }

    fn scheme_with_sigma(&self, sigma: f64, steps: usize) -> Result<SchemeConfig> {
        Ok(SchemeConfig::covering(sigma, self.final_time, steps)?.with_solver(self.solver))
    }
}

/// `u0(x) = x1 x2 sin(pi x1) sin(pi x2)`.
pub fn model_initial_state(grid: Grid2D) -> GridFunction {
    sample_function(grid, |x1, x2| x1 * x2 * (PI * x1).sin() * (PI * x2).sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub n: usize,
    pub t: f64,
    pub energy: f64,
    pub center_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub t: f64,
    pub field: GridFunction,
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub cfg: SchemeConfig,
    /// One record per level, starting with `n = 0`.
    pub records: Vec<TrajectoryRecord>,
    /// Fields at every `stride`-th level, `n = 0` included.
    pub snapshots: Vec<Snapshot>,
    /// Largest scaled auxiliary residual over all steps and terms.
    pub max_aux_residual: f64,
    pub final_state: SoeState,
}

impl RunLog {
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("n,t,energy,center_value\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.n, r.t, r.energy, r.center_value);
        }
        out
    }

    pub fn center_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.center_value).collect()
    }
}

/// Runs the compressed-memory scheme, logging energy and the center value every step.
pub fn run_scheme(problem: &ProblemSpec, cfg: &SchemeConfig, stride: usize) -> Result<RunLog> {
    cfg.validate()?;
    if stride == 0 || !cfg.n_steps.is_multiple_of(stride) {
        return Err(Error::Alignment(format!(
            "snapshot stride {stride} does not divide {} steps",
            cfg.n_steps
        )));
    }
    let stiff = stiff_terms(problem.kernel(), cfg);
    if !stiff.is_empty() {
        log::warn!(
            "(1 - sigma) b_i tau > 1 for terms {stiff:?} at tau = {}; auxiliary updates lose accuracy",
            cfg.tau
        );
    }
    let plain = problem.is_plain();
    let mut state = soe_init(problem);
    let mut records = Vec::with_capacity(cfg.n_steps + 1);
    let mut snapshots = Vec::with_capacity(cfg.n_steps / stride + 1);
    let mut max_aux_residual = 0.0f64;
    let record = |s: &SoeState| -> Result<TrajectoryRecord> {
        Ok(TrajectoryRecord {
            n: s.n,
            t: s.t,
            energy: energy(problem, s)?,
            center_value: s.y.center_value(),
        })
    };
    records.push(record(&state)?);
    snapshots.push(Snapshot { n: 0, t: 0.0, field: state.y.clone() });
    for _ in 0..cfg.n_steps {
        let next = if plain {
            soe_step(problem, cfg, &state)?
        } else {
            general_step(problem, cfg, &state)?
        };
        let r = auxiliary_residuals(problem.kernel(), cfg, &state, &next)?;
        max_aux_residual = r.into_iter().fold(max_aux_residual, f64::max);
        state = next;
        records.push(record(&state)?);
        if state.n.is_multiple_of(stride) {
            snapshots.push(Snapshot { n: state.n, t: state.t, field: state.y.clone() });
        }
    }
    Ok(RunLog {
        cfg: *cfg,
        records,
        snapshots,
        max_aux_residual,
        final_state: state,
    })
}

/// The model relaxation problem with the spec's kernel, weight and step count.
pub fn run_model_problem(spec: &ExperimentSpec, stride: usize) -> Result<RunLog> {
    spec.validate()?;
    run_scheme(&spec.problem()?, &spec.scheme(spec.steps)?, stride)
}

/// `sigma = 1/2` run with `reference_steps` steps, keeping snapshots at `samples` shared times.
pub fn compute_reference(spec: &ExperimentSpec, samples: usize) -> Result<RunLog> {
    spec.validate()?;
    if samples == 0 || !spec.reference_steps.is_multiple_of(samples) {
        return Err(Error::Alignment(format!(
            "{samples} sample times do not align with {} reference steps",
            spec.reference_steps
        )));
    }
    let cfg = spec.scheme_with_sigma(0.5, spec.reference_steps)?;
    run_scheme(&spec.problem()?, &cfg, spec.reference_steps / samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSample {
    pub t: f64,
    pub eps2: f64,
    pub epsinf: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorSeries {
    pub samples: Vec<ErrorSample>,
}

impl ErrorSeries {
    pub fn max_eps2(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.eps2))
    }

    pub fn max_epsinf(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.epsinf))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,eps2,epsinf\n");
        for s in &self.samples {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", s.t, s.eps2, s.epsinf);
        }
        out
    }
}

/// `eps2 = ||y - y_ref||` (h1 h2 weighted) and `epsinf = max |y - y_ref|` at every
/// snapshot of `coarse`, each of which must have a reference snapshot at the same time.
pub fn error_series(coarse: &[Snapshot], reference: &[Snapshot]) -> Result<ErrorSeries> {
    let mut samples = Vec::with_capacity(coarse.len());
    for s in coarse {
        let tol = 1e-9 * s.t.abs().max(1.0);
        let r = reference
            .iter()
            .find(|r| (r.t - s.t).abs() <= tol)
            .ok_or_else(|| Error::Alignment(format!("no reference snapshot at t = {}", s.t)))?;
        let diff = s.field.sub(&r.field)?;
        samples.push(ErrorSample {
            t: s.t,
            eps2: diff.l2_norm(),
            epsinf: diff.max_abs(),
        });
    }
    Ok(ErrorSeries { samples })
}

/// Least-squares slope of `log(err)` against `log(tau)`; `None` unless every error
/// is finite and positive and there are at least two distinct step sizes.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(t, e)| !(t > 0.0 && e > 0.0 && e.is_finite())) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Number of shared sample times: the largest count dividing every step count.
pub fn shared_samples(step_counts: &[usize]) -> usize {
    step_counts.iter().copied().fold(0, gcd)
}

fn validate_ladder(ladder: &[usize]) -> Result<Vec<usize>> {
    if ladder.len() < 3 {
        return Err(Error::config(
            "study.ladder",
            format!("need at least 3 step counts, got {}", ladder.len()),
        ));
    }
    let mut sorted = ladder.to_vec();
    sorted.sort_unstable();
    if sorted[0] == 0 {
        return Err(Error::config("study.ladder", "step counts must be >= 1"));
    }
    if sorted.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::config(
            "study.ladder",
            format!("step counts must double from entry to entry, got {ladder:?}"),
        ));
    }
    Ok(sorted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub tau: f64,
    pub max_eps2: f64,
    pub max_epsinf: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub sigma: f64,
    /// Ordered from the coarsest step to the finest.
    pub rows: Vec<ConvergenceRow>,
    pub slope_eps2: Option<f64>,
    pub slope_epsinf: Option<f64>,
    /// Error series of the finest run.
    pub finest: ErrorSeries,
    pub sample_times: Vec<f64>,
    /// Largest scaled auxiliary residual over the study and reference runs.
    pub max_aux_residual: f64,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,max_eps2,max_epsinf\n");
        for r in &self.rows {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", r.tau, r.max_eps2, r.max_epsinf);
        }
        out
    }
}

/// Errors of the spec's scheme over a doubling ladder of step counts against a
/// `sigma = 1/2` reference with `reference_steps` steps, compared at the times
/// shared by every run; ladder runs execute in parallel.
pub fn convergence_study(spec: &ExperimentSpec) -> Result<ConvergenceReport> {
    spec.validate()?;
    let ladder = validate_ladder(&spec.ladder)?;
    let finest = *ladder.last().expect("validated ladder is non-empty");
    if spec.reference_steps < 10 * finest {
        log::warn!(
            "reference uses {} steps, fewer than ten times the finest study run ({finest})",
            spec.reference_steps
        );
    }
    let mut counts = ladder.clone();
    counts.push(spec.reference_steps);
    let samples = shared_samples(&counts);
    if samples < 8 {
        log::warn!("only {samples} shared sample times between the study and its reference");
    }
    let problem = spec.problem()?;

    let (reference, runs) = rayon::join(
        || compute_reference(spec, samples),
        || {
            ladder
                .par_iter()
                .map(|&steps| run_scheme(&problem, &spec.scheme(steps)?, steps / samples))
                .collect::<Result<Vec<_>>>()
        },
    );
    let reference = reference?;
    let runs = runs?;

    let mut rows = Vec::with_capacity(runs.len());
    let mut finest_series = ErrorSeries::default();
    let mut max_aux_residual = reference.max_aux_residual;
    for run in &runs {
        let series = error_series(&run.snapshots[1..], &reference.snapshots)?;
        rows.push(ConvergenceRow {
            steps: run.cfg.n_steps,
            tau: run.cfg.tau,
            max_eps2: series.max_eps2(),
            max_epsinf: series.max_epsinf(),
        });
        max_aux_residual = max_aux_residual.max(run.max_aux_residual);
        finest_series = series;
    }
    let slope = |f: fn(&ConvergenceRow) -> f64| {
        fit_slope(&rows.iter().map(|r| (r.tau, f(r))).collect::<Vec<_>>())
    };
    Ok(ConvergenceReport {
        sigma: spec.sigma,
        slope_eps2: slope(|r| r.max_eps2),
        slope_epsinf: slope(|r| r.max_epsinf),
        sample_times: finest_series.samples.iter().map(|s| s.t).collect(),
        rows,
        finest: finest_series,
        max_aux_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineRow {
    pub steps: usize,
    pub tau: f64,
    /// Largest nodal difference between the two steppers over all levels.
    pub max_diff: f64,
    /// Grid functions held by the compressed state (`m + 1`).
    pub soe_fields: usize,
    /// Grid functions held by the history stepper at the end (`n + 1` levels).
    pub history_fields: usize,
    pub soe_seconds: f64,
    pub history_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BaselineReport {
    pub rule: QuadratureRule,
    pub rows: Vec<BaselineRow>,
    pub slope: Option<f64>,
    pub max_aux_residual: f64,
}

impl BaselineReport {
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut out = String::from("tau,steps,max_diff,soe_fields,history_fields");
        out.push_str(if with_timing { ",soe_seconds,history_seconds\n" } else { "\n" });
        for r in &self.rows {
            let _ = write!(
                out,
                "{:.16e},{},{:.16e},{},{}",
                r.tau, r.steps, r.max_diff, r.soe_fields, r.history_fields
            );
            if with_timing {
                let _ = write!(out, ",{:.6e},{:.6e}", r.soe_seconds, r.history_seconds);
            }
            out.push('\n');
        }
        out
    }
}

/// Largest grid size accepted by the baseline comparison.
pub const BASELINE_MAX_GRID: usize = 32;

/// Runs the compressed-memory stepper and the full-history stepper on the same
/// Prony kernel for every ladder entry and reports their largest nodal difference.
pub fn compare_baseline(spec: &ExperimentSpec, rule: QuadratureRule) -> Result<BaselineReport> {
    spec.validate()?;
    if spec.grid_n > BASELINE_MAX_GRID {
        return Err(Error::config(
            "grid.n",
            format!(
                "baseline comparison stores the whole history; use a grid of at most {BASELINE_MAX_GRID}"
            ),
        ));
    }
    let ladder = validate_ladder(&spec.ladder)?;
    let problem = spec.problem()?;
    let results = ladder
        .par_iter()
        .map(|&steps| baseline_row(&problem, &spec.scheme(steps)?, rule))
        .collect::<Result<Vec<_>>>()?;
    let max_aux_residual = results.iter().fold(0.0f64, |m, r| m.max(r.1));
    let rows: Vec<BaselineRow> = results.into_iter().map(|r| r.0).collect();
    let slope = fit_slope(&rows.iter().map(|r| (r.tau, r.max_diff)).collect::<Vec<_>>());
    Ok(BaselineReport {
        rule,
        rows,
        slope,
        max_aux_residual,
    })
}

fn baseline_row(
    problem: &ProblemSpec,
    cfg: &SchemeConfig,
    rule: QuadratureRule,
) -> Result<(BaselineRow, f64)> {
    let plain = problem.is_plain();
    let mut soe = soe_init(problem);
    let mut hist = quadrature_init(
        problem,
        cfg,
        rule,
        Some(HistoryKernel::Prony(problem.kernel().clone())),
    )?;
    let (mut soe_time, mut hist_time) = (0.0, 0.0);
    let mut max_diff = 0.0f64;
    let mut max_aux = 0.0f64;
    for _ in 0..cfg.n_steps {
        let start = Instant::now();
        let next = if plain {
            soe_step(problem, cfg, &soe)?
        } else {
            general_step(problem, cfg, &soe)?
        };
        soe_time += start.elapsed().as_secs_f64();
        let r = auxiliary_residuals(problem.kernel(), cfg, &soe, &next)?;
        max_aux = r.into_iter().fold(max_aux, f64::max);
        soe = next;

        let start = Instant::now();
        hist = quadrature_step(problem, cfg, hist)?;
        hist_time += start.elapsed().as_secs_f64();

        max_diff = max_diff.max(soe.y.sub(hist.y())?.max_abs());
    }
    let row = BaselineRow {
        steps: cfg.n_steps,
        tau: cfg.tau,
        max_diff,
        soe_fields: soe.aux.len() + 1,
        history_fields: hist.levels.len(),
        soe_seconds: soe_time,
        history_seconds: hist_time,
    };
    Ok((row, max_aux))
}
