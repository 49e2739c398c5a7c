//! Experiment orchestration: single runs, sweeps, and their persisted
//! artifacts.
//!
//! A run executes the full indicator pipeline — curvature constancy check,
//! geodesic integration, deviation integration against the family oracle's
//! initial data, entropy series — fits the asymptotic slopes, and persists
//! CSV series plus a JSON record. Everything persisted is a deterministic
//! function of the configuration (wall-clock timing goes to a separate
//! file outside the determinism contract).

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use igchaos_core::dynamics::{
    integrate_geodesic_on, integrate_jlc, jacobi_fd_oracle, lyapunov_estimate,
};
use igchaos_core::entropy::{ig_entropy_series, slope_fit};
use igchaos_core::manifold::{
    analytic_geodesic_eval, metric_speed_sq, ricci_scalar_at, ThetaPoint,
};

use crate::config::{ConfigOverlay, ExperimentConfig};
use crate::csvio::{fmt_f64, CsvTable};
use crate::error::CliError;
use crate::svg;

/// Random points sampled for the curvature constancy check of each run.
const RICCI_CHECK_POINTS: usize = 64;

/// Measured deviation-intensity prefactor at the end of the integration,
/// reported against the two candidate normalizations without asserting
/// either.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JacobiPrefactorReport {
    pub tau: f64,
    pub intensity: f64,
    /// `intensity * exp(-rate * tau)`; scales with the family increment
    /// `delta_lambda`.
    pub prefactor: f64,
    /// Prefactor divided by `delta_lambda`, the increment-free quantity
    /// whose normalization is reported (not asserted) below.
    pub prefactor_per_delta: f64,
    pub ratio_to_3n: f64,
    pub ratio_to_sqrt_3n: f64,
}

/// Relative paths (inside the run directory) of the persisted series.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ArtifactPaths {
    pub geodesic_csv: String,
    pub jacobi_csv: String,
    pub entropy_csv: String,
    pub record_json: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_svg: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jacobi_svg: Option<String>,
}

/// Persisted result of one experiment. Every number is reproducible from
/// the embedded config snapshot.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub ricci_scalar: f64,
    pub ricci_points_checked: usize,
    pub entropy_slope: f64,
    pub entropy_fit_window: (f64, f64),
    pub entropy_r_squared: f64,
    /// `3 N rate`, the asymptotic entropy slope.
    pub entropy_slope_target: f64,
    pub lyapunov_estimate: f64,
    pub lyapunov_window: (f64, f64),
    /// `rate`, the asymptotic intensity exponent.
    pub lyapunov_target: f64,
    pub jacobi_prefactor: JacobiPrefactorReport,
    pub geodesic_speed_sq: f64,
    /// `6 N rate^2`, the conserved speed.
    pub geodesic_speed_sq_target: f64,
    pub artifacts: ArtifactPaths,
}

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Executes one experiment and persists its artifacts under
/// `config.out_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord, CliError> {
    let started = Instant::now();
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| CliError::Validation(format!("cannot create output directory: {e}")))?;

    let params = config.geodesic_params();
    let rate = config.lambda_rate;
    let n = config.n;

    // Curvature: the closed form must return exactly -3N at every sampled
    // macrostate.
    let expected_ricci = -3.0 * n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    for i in 0..RICCI_CHECK_POINTS {
        let pairs: Vec<(f64, f64)> = (0..3 * n)
            .map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(0.05..10.0)))
            .collect();
        let point = ThetaPoint::new(pairs).map_err(CliError::from_core)?;
        let r = ricci_scalar_at(&point);
        if r != expected_ricci {
            return Err(CliError::Numerical(format!(
                "curvature check failed at sample {i}: {r} != {expected_ricci}"
            )));
        }
    }

    // Geodesic flow.
    let grid = config.dynamics_grid();
    let initial = analytic_geodesic_eval(&params, 0.0);
    let geodesic =
        integrate_geodesic_on(&initial, &grid, config.rel_tol).map_err(CliError::from_core)?;
    if let Some(halt) = &geodesic.halt {
        return Err(CliError::Numerical(format!(
            "geodesic integration halted early: {halt:?}"
        )));
    }
    let speed_target = 6.0 * n as f64 * rate * rate;
    let (p_end, v_end) = geodesic.states.last().expect("non-empty trajectory");
    let speed_end = metric_speed_sq(p_end, v_end).map_err(CliError::from_core)?;

    let geo_csv = geodesic_table(&geodesic)?;

    // Deviation dynamics: oracle initial data, then the covariant system.
    let oracle =
        jacobi_fd_oracle(&params, config.delta_lambda, &grid).map_err(CliError::from_core)?;
    let jacobi = integrate_jlc(
        &geodesic,
        (&oracle.deviations[0], &oracle.covariant_rates[0]),
        config.rel_tol,
    )
    .map_err(CliError::from_core)?;
    let intensity_series = jacobi.intensity_series();
    let lyap_window = config.lyapunov_window();
    let lyapunov =
        lyapunov_estimate(&intensity_series, lyap_window).map_err(CliError::from_core)?;

    let jac_csv = jacobi_table(&intensity_series);
    let (tau_last, j_last) = *intensity_series.last().expect("non-empty");
    let prefactor = j_last * (-rate * tau_last).exp();
    let prefactor_per_delta = prefactor / config.delta_lambda;
    let three_n = 3.0 * n as f64;
    let prefactor_report = JacobiPrefactorReport {
        tau: tau_last,
        intensity: j_last,
        prefactor,
        prefactor_per_delta,
        ratio_to_3n: prefactor_per_delta / three_n,
        ratio_to_sqrt_3n: prefactor_per_delta / three_n.sqrt(),
    };

    // Entropy series and its asymptotic slope.
    let entropy_grid = config.entropy_grid();
    let series = ig_entropy_series(&params, &entropy_grid).map_err(CliError::from_core)?;
    let entropy_points: Vec<(f64, f64)> = series
        .tau_grid
        .iter()
        .copied()
        .zip(series.entropy.iter().copied())
        .collect();
    let fit = slope_fit(&entropy_points, config.fit_window).map_err(CliError::from_core)?;

    let ent_csv = entropy_table(&series);

    // Persist.
    let artifacts = ArtifactPaths {
        geodesic_csv: "geodesic.csv".into(),
        jacobi_csv: "jacobi.csv".into(),
        entropy_csv: "entropy.csv".into(),
        record_json: "record.json".into(),
        entropy_svg: config.emit_svg.then(|| "entropy.svg".to_string()),
        jacobi_svg: config.emit_svg.then(|| "jacobi.svg".to_string()),
    };
    let dir = &config.out_dir;
    write_file(dir, &artifacts.geodesic_csv, geo_csv.as_str())?;
    write_file(dir, &artifacts.jacobi_csv, jac_csv.as_str())?;
    write_file(dir, &artifacts.entropy_csv, ent_csv.as_str())?;
    if config.emit_svg {
        let entropy_svg = svg::line_chart(
            &format!("Information-geometric entropy (N={n}, rate={rate})"),
            "tau",
            "S(tau)",
            &entropy_points,
        );
        write_file(dir, artifacts.entropy_svg.as_ref().unwrap(), &entropy_svg)?;
        let log_j: Vec<(f64, f64)> = intensity_series
            .iter()
            .filter(|&&(_, j)| j > 0.0)
            .map(|&(t, j)| (t, j.ln()))
            .collect();
        let jacobi_svg = svg::line_chart(
            &format!("Deviation intensity (N={n}, rate={rate})"),
            "tau",
            "log |J|",
            &log_j,
        );
        write_file(dir, artifacts.jacobi_svg.as_ref().unwrap(), &jacobi_svg)?;
    }

    let record = RunRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        config: config.clone(),
        ricci_scalar: expected_ricci,
        ricci_points_checked: RICCI_CHECK_POINTS,
        entropy_slope: fit.slope,
        entropy_fit_window: config.fit_window,
        entropy_r_squared: fit.r_squared,
        entropy_slope_target: 3.0 * n as f64 * rate,
        lyapunov_estimate: lyapunov,
        lyapunov_window: lyap_window,
        lyapunov_target: rate,
        jacobi_prefactor: prefactor_report,
        geodesic_speed_sq: speed_end,
        geodesic_speed_sq_target: speed_target,
        artifacts,
    };
    let mut json = serde_json::to_string_pretty(&record)
        .map_err(|e| CliError::Numerical(format!("record serialization failed: {e}")))?;
    json.push('\n');
    write_file(dir, &record.artifacts.record_json, &json)?;

    // Timing sits outside the deterministic record.
    let elapsed = started.elapsed().as_secs_f64();
    write_file(
        dir,
        "timing.txt",
        &format!("wall_clock_seconds {elapsed:.6}\n"),
    )?;

    Ok(record)
}

/// Geodesic CSV: one row per `(tau, block)`; `speed_sq` is the conserved
/// full-manifold speed at that tau (repeated across the block rows).
pub fn geodesic_table(
    trajectory: &igchaos_core::dynamics::GeodesicTrajectory<f64>,
) -> Result<CsvTable, CliError> {
    let mut table = CsvTable::new(&["tau", "block", "mu", "sigma", "dmu", "dsigma", "speed_sq"]);
    for (tau, (point, velocity)) in trajectory.tau_grid.iter().zip(&trajectory.states) {
        let speed = metric_speed_sq(point, velocity).map_err(CliError::from_core)?;
        for (b, (blk, &(dmu, dsigma))) in point.blocks().iter().zip(velocity.blocks()).enumerate() {
            table.row(&[
                fmt_f64(*tau),
                b.to_string(),
                fmt_f64(blk.mu),
                fmt_f64(blk.sigma),
                fmt_f64(dmu),
                fmt_f64(dsigma),
                fmt_f64(speed),
            ]);
        }
    }
    Ok(table)
}

/// Deviation CSV: intensity plus the local log-slope between consecutive
/// samples (zero on the first row).
pub fn jacobi_table(intensity_series: &[(f64, f64)]) -> CsvTable {
    let mut table = CsvTable::new(&["tau", "intensity", "running_rate"]);
    let mut prev: Option<(f64, f64)> = None;
    for &(tau, j) in intensity_series {
        let rate_est = match prev {
            Some((t0, j0)) if j > 0.0 && j0 > 0.0 && tau > t0 => (j.ln() - j0.ln()) / (tau - t0),
            _ => 0.0,
        };
        table.row(&[fmt_f64(tau), fmt_f64(j), fmt_f64(rate_est)]);
        prev = Some((tau, j));
    }
    table
}

/// Entropy CSV: the three log series per tau sample.
pub fn entropy_table(series: &igchaos_core::entropy::VolumeSeries<f64>) -> CsvTable {
    let mut table = CsvTable::new(&["tau", "log_region_volume", "log_avg_volume", "entropy"]);
    for i in 0..series.tau_grid.len() {
        table.row(&[
            fmt_f64(series.tau_grid[i]),
            fmt_f64(series.log_region_volume[i]),
            fmt_f64(series.log_avg_volume[i]),
            fmt_f64(series.entropy[i]),
        ]);
    }
    table
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::write(dir.join(name), contents.as_bytes())
        .map_err(|e| CliError::Validation(format!("cannot write {name}: {e}")))
}

/// One sweep cell: the grid coordinates plus the run outcome (failures are
/// recorded, the sweep continues).
#[derive(Debug)]
pub struct SweepRun {
    pub n: usize,
    pub lambda_rate: f64,
    pub dir: PathBuf,
    pub outcome: Result<RunRecord, CliError>,
}

/// Sweep result: all runs plus the summary table location.
#[derive(Debug)]
pub struct SweepOutcome {
    pub runs: Vec<SweepRun>,
    pub summary_csv: PathBuf,
    pub summary_text: String,
}

impl SweepOutcome {
    pub fn all_succeeded(&self) -> bool {
        self.runs.iter().all(|r| r.outcome.is_ok())
    }
}

/// Executes the Cartesian product of the sweep lists. `base_overlays` are
/// the same overlays the single-run path resolves (config file, then
/// flags); per-cell values are appended so rate-derived defaults
/// (tau_max, windows, delta) re-derive per cell unless explicitly pinned.
pub fn run_sweep(base_overlays: Vec<ConfigOverlay>) -> Result<SweepOutcome, CliError> {
    let base = ExperimentConfig::resolve(base_overlays.clone())?;
    if base.sweep_n.is_none() && base.sweep_lambda_rate.is_none() {
        return Err(CliError::Validation(
            "sweep requires sweep_n and/or sweep_lambda_rate".into(),
        ));
    }
    let ns = base.sweep_n.clone().unwrap_or_else(|| vec![base.n]);
    let rates = base
        .sweep_lambda_rate
        .clone()
        .unwrap_or_else(|| vec![base.lambda_rate]);

    let mut cells: Vec<(usize, f64, PathBuf)> = Vec::new();
    for &n in &ns {
        for &rate in &rates {
            let dir = base.out_dir.join(format!("run_N{n}_rate{}", fmt_f64(rate)));
            cells.push((n, rate, dir));
        }
    }

    std::fs::create_dir_all(&base.out_dir)
        .map_err(|e| CliError::Validation(format!("cannot create output directory: {e}")))?;

    // Independent runs, a worker pool pulling from a shared index; each run
    // owns its directory so writers never collide.
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<SweepRun>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    let workers = base.workers.min(cells.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let (n, rate, dir) = &cells[i];
                let mut overlays = base_overlays.clone();
                overlays.push(ConfigOverlay {
                    n: Some(*n),
                    lambda_rate: Some(*rate),
                    out_dir: Some(dir.clone()),
                    ..Default::default()
                });
                let outcome = ExperimentConfig::resolve(overlays)
                    .map_err(CliError::from)
                    .and_then(|cfg| run_experiment(&cfg));
                results.lock().expect("result store").as_mut_slice()[i] = Some(SweepRun {
                    n: *n,
                    lambda_rate: *rate,
                    dir: dir.clone(),
                    outcome,
                });
            });
        }
    });

    let runs: Vec<SweepRun> = results
        .into_inner()
        .expect("result store")
        .into_iter()
        .map(|r| r.expect("every cell executed"))
        .collect();

    // Summary table: one row per cell, also echoed as text.
    let mut table = CsvTable::new(&[
        "N",
        "lambda_rate",
        "ricci_scalar",
        "entropy_slope",
        "slope_over_3nlambda",
        "lyapunov",
        "lyapunov_over_lambda",
        "status",
    ]);
    let mut text = String::from(
        "N  lambda  ricci  slope  slope/(3*N*lambda)  rate_fit  rate_fit/lambda  status\n",
    );
    for run in &runs {
        match &run.outcome {
            Ok(rec) => {
                let slope_ratio = rec.entropy_slope / rec.entropy_slope_target;
                let lyap_ratio = rec.lyapunov_estimate / rec.lyapunov_target;
                table.row(&[
                    run.n.to_string(),
                    fmt_f64(run.lambda_rate),
                    fmt_f64(rec.ricci_scalar),
                    fmt_f64(rec.entropy_slope),
                    fmt_f64(slope_ratio),
                    fmt_f64(rec.lyapunov_estimate),
                    fmt_f64(lyap_ratio),
                    "ok".into(),
                ]);
                text.push_str(&format!(
                    "{}  {}  {}  {:.6}  {:.6}  {:.6}  {:.6}  ok\n",
                    run.n,
                    run.lambda_rate,
                    rec.ricci_scalar,
                    rec.entropy_slope,
                    slope_ratio,
                    rec.lyapunov_estimate,
                    lyap_ratio
                ));
            }
            Err(e) => {
                table.row(&[
                    run.n.to_string(),
                    fmt_f64(run.lambda_rate),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("failed: {e}"),
                ]);
                text.push_str(&format!("{}  {}  failed: {e}\n", run.n, run.lambda_rate));
            }
        }
    }
    let summary_csv = base.out_dir.join("summary.csv");
    table
        .write_to(&summary_csv)
        .map_err(|e| CliError::Validation(format!("cannot write summary: {e}")))?;

    Ok(SweepOutcome {
        runs,
        summary_csv,
        summary_text: text,
    })
}
