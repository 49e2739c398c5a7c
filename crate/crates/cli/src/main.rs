//! `igchaos`: simulator and verification driver for the statistical-
//! manifold chaos indicators.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use igchaos_cli::config::{ConfigOverlay, ExperimentConfig};
use igchaos_cli::csvio::{fmt_f64, CsvTable};
use igchaos_cli::error::CliError;
use igchaos_cli::runner::{entropy_table, geodesic_table, jacobi_table, run_experiment, run_sweep};
use igchaos_cli::svg;
use igchaos_cli::verify::{verify, VerifyOptions};

use igchaos_core::dynamics::{
    integrate_geodesic_on, integrate_jlc, jacobi_fd_oracle, lyapunov_estimate,
};
use igchaos_core::entropy::{ig_entropy_series, slope_fit};
use igchaos_core::manifold::{analytic_geodesic_eval, curvature_report, ricci_scalar_at};
use igchaos_core::maxent::{discretized_gaussian, maxent_solve, GridSpec, MomentConstraints};
use igchaos_core::oracle::{default_fd_step, fd_ricci_scalar};

#[derive(Parser)]
#[command(
    name = "igchaos",
    about = "Chaos indicators on the product-Gaussian statistical manifold",
    version
)]
struct Cli {
    /// JSON configuration file; command-line flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV/JSON/SVG artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Random seed (curvature sampling, Monte Carlo checks).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Also emit SVG line plots.
    #[arg(long, global = true)]
    svg: bool,

    #[command(flatten)]
    overrides: OverrideArgs,

    #[command(subcommand)]
    command: Command,
}

/// Per-key overrides of the configuration document.
#[derive(Args)]
struct OverrideArgs {
    /// Number of three-coordinate groups (the system has 3N Gaussian
    /// degrees of freedom).
    #[arg(long = "n", global = true)]
    n: Option<usize>,

    /// Geodesic instability rate.
    #[arg(long, global = true)]
    lambda_rate: Option<f64>,

    /// Geodesic amplitude constant.
    #[arg(long = "lambda-amplitude", global = true)]
    lambda_amplitude: Option<f64>,

    #[arg(long, global = true)]
    tau_max: Option<f64>,

    #[arg(long, global = true)]
    tau_samples: Option<usize>,

    /// Integrator relative tolerance, in [1e-12, 1e-3].
    #[arg(long, global = true)]
    rel_tol: Option<f64>,

    /// Rate increment of the deviation family oracle.
    #[arg(long, global = true)]
    delta_lambda: Option<f64>,

    /// Entropy fit window "lo,hi" (defaults to the upper half of the
    /// tau range).
    #[arg(long, global = true, value_parser = parse_window)]
    fit_window: Option<(f64, f64)>,

    /// Sweep values of N (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    sweep_n: Option<Vec<usize>>,

    /// Sweep values of lambda_rate (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    sweep_lambda_rate: Option<Vec<f64>>,

    /// Sweep worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected \"lo,hi\"".into());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lo, hi))
}

#[derive(Subcommand)]
enum Command {
    /// Ricci scalar, sectional curvatures and their finite-difference
    /// cross-check at a sampled macrostate.
    Curvature,
    /// Integrate the geodesic flow and emit the sampled trajectory.
    Geodesic,
    /// Integrate the geodesic deviation and emit intensities.
    Jacobi,
    /// Entropy series with its fitted asymptotic slope.
    Entropy,
    /// Solve the discrete maximum-entropy problem and emit the weights.
    Maxent(MaxentArgs),
    /// Full experiment: curvature check, dynamics, entropy, fits, record.
    Run,
    /// Cartesian sweep over N and lambda_rate with a summary table.
    Sweep,
    /// Run every oracle cross-check and report pass/fail per check.
    Verify,
}

#[derive(Args)]
struct MaxentArgs {
    #[arg(long, default_value_t = 0.0)]
    mean: f64,
    #[arg(long, default_value_t = 1.0)]
    stddev: f64,
    /// Grid half-width in units of stddev around the mean.
    #[arg(long, default_value_t = 10.0)]
    half_width: f64,
    #[arg(long, default_value_t = 2001)]
    nodes: usize,
    /// Moment residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
}

fn main() -> ExitCode {
    // Usage errors are validation errors (exit 1); clap's default exit
    // code of 2 is reserved for numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("igchaos: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn overlays_from(cli: &Cli) -> Result<Vec<ConfigOverlay>, CliError> {
    let mut overlays = Vec::new();
    if let Some(path) = &cli.config {
        overlays.push(ConfigOverlay::from_json_file(path)?);
    }
    let o = &cli.overrides;
    overlays.push(ConfigOverlay {
        n: o.n,
        lambda_rate: o.lambda_rate,
        lambda_amplitude: o.lambda_amplitude,
        tau_max: o.tau_max,
        tau_samples: o.tau_samples,
        rel_tol: o.rel_tol,
        delta_lambda: o.delta_lambda,
        fit_window: o.fit_window,
        sweep_n: o.sweep_n.clone(),
        sweep_lambda_rate: o.sweep_lambda_rate.clone(),
        out_dir: cli.out.clone(),
        emit_svg: cli.svg.then_some(true),
        rng_seed: cli.seed,
        workers: o.workers,
    });
    Ok(overlays)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let overlays = overlays_from(&cli)?;
    let config = ExperimentConfig::resolve(overlays.clone())?;
    match &cli.command {
        Command::Curvature => cmd_curvature(&config),
        Command::Geodesic => cmd_geodesic(&config),
        Command::Jacobi => cmd_jacobi(&config),
        Command::Entropy => cmd_entropy(&config),
        Command::Maxent(args) => cmd_maxent(&config, args),
        Command::Run => {
            let record = run_experiment(&config)?;
            println!(
                "run complete: ricci = {}, entropy slope = {:.6} (target {}), \
                 rate fit = {:.6} (target {})",
                record.ricci_scalar,
                record.entropy_slope,
                record.entropy_slope_target,
                record.lyapunov_estimate,
                record.lyapunov_target
            );
            println!(
                "artifacts in {} (record.json, geodesic.csv, jacobi.csv, entropy.csv)",
                config.out_dir.display()
            );
            Ok(())
        }
        Command::Sweep => {
            let outcome = run_sweep(overlays)?;
            print!("{}", outcome.summary_text);
            println!("summary written to {}", outcome.summary_csv.display());
            if outcome.all_succeeded() {
                Ok(())
            } else {
                Err(CliError::Numerical("one or more sweep runs failed".into()))
            }
        }
        Command::Verify => {
            let report = verify(&VerifyOptions {
                flip_christoffel_sign: false,
                rng_seed: config.rng_seed,
            });
            print!("{}", report.render());
            if report.all_passed() {
                Ok(())
            } else {
                Err(CliError::Verification("oracle cross-checks failed".into()))
            }
        }
    }
}

fn ensure_out(config: &ExperimentConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| CliError::Validation(format!("cannot create output directory: {e}")))
}

fn cmd_curvature(config: &ExperimentConfig) -> Result<(), CliError> {
    ensure_out(config)?;
    let (point, _) = analytic_geodesic_eval(&config.geodesic_params(), 0.0);
    let report = curvature_report(&point, None).map_err(CliError::from_core)?;
    let fd = fd_ricci_scalar(&point, default_fd_step(&point)).map_err(CliError::from_core)?;
    let mut table = CsvTable::new(&["coord_i", "coord_j", "sectional"]);
    for (&(i, j), &k) in &report.sectional {
        table.row(&[i.to_string(), j.to_string(), fmt_f64(k)]);
    }
    let path = config.out_dir.join("curvature.csv");
    table
        .write_to(&path)
        .map_err(|e| CliError::Validation(format!("cannot write curvature.csv: {e}")))?;
    println!(
        "ricci scalar (closed form) = {}",
        fmt_f64(ricci_scalar_at(&point))
    );
    println!("ricci scalar (finite difference) = {}", fmt_f64(fd));
    println!(
        "sectional curvatures over {} sampled planes written to {}",
        report.sectional.len(),
        path.display()
    );
    Ok(())
}

fn cmd_geodesic(config: &ExperimentConfig) -> Result<(), CliError> {
    ensure_out(config)?;
    let params = config.geodesic_params();
    let initial = analytic_geodesic_eval(&params, 0.0);
    let grid = config.dynamics_grid();
    let traj =
        integrate_geodesic_on(&initial, &grid, config.rel_tol).map_err(CliError::from_core)?;
    let table = geodesic_table(&traj)?;
    let path = config.out_dir.join("geodesic.csv");
    table
        .write_to(&path)
        .map_err(|e| CliError::Validation(format!("cannot write geodesic.csv: {e}")))?;
    println!(
        "integrated {} samples to tau = {} ({} accepted / {} rejected steps)",
        traj.tau_grid.len(),
        fmt_f64(*traj.tau_grid.last().unwrap_or(&0.0)),
        traj.stats.accepted_steps,
        traj.stats.rejected_steps
    );
    if let Some(halt) = &traj.halt {
        println!("halted early: {halt:?}");
    }
    println!("trajectory written to {}", path.display());
    Ok(())
}

fn cmd_jacobi(config: &ExperimentConfig) -> Result<(), CliError> {
    ensure_out(config)?;
    let params = config.geodesic_params();
    let grid = config.dynamics_grid();
    let initial = analytic_geodesic_eval(&params, 0.0);
    let geodesic =
        integrate_geodesic_on(&initial, &grid, config.rel_tol).map_err(CliError::from_core)?;
    let oracle =
        jacobi_fd_oracle(&params, config.delta_lambda, &grid).map_err(CliError::from_core)?;
    let jacobi = integrate_jlc(
        &geodesic,
        (&oracle.deviations[0], &oracle.covariant_rates[0]),
        config.rel_tol,
    )
    .map_err(CliError::from_core)?;
    let series = jacobi.intensity_series();
    let table = jacobi_table(&series);
    let path = config.out_dir.join("jacobi.csv");
    table
        .write_to(&path)
        .map_err(|e| CliError::Validation(format!("cannot write jacobi.csv: {e}")))?;
    if config.emit_svg {
        let log_j: Vec<(f64, f64)> = series
            .iter()
            .filter(|&&(_, j)| j > 0.0)
            .map(|&(t, j)| (t, j.ln()))
            .collect();
        let chart = svg::line_chart("Deviation intensity", "tau", "log |J|", &log_j);
        std::fs::write(config.out_dir.join("jacobi.svg"), chart)
            .map_err(|e| CliError::Validation(format!("cannot write jacobi.svg: {e}")))?;
    }
    let lyap = lyapunov_estimate(&series, config.lyapunov_window()).map_err(CliError::from_core)?;
    println!(
        "rate fit over [{}, {}] = {:.8} (geodesic rate {})",
        fmt_f64(config.lyapunov_window().0),
        fmt_f64(config.lyapunov_window().1),
        lyap,
        fmt_f64(config.lambda_rate)
    );
    if let Some(halt) = &jacobi.halt {
        println!("halted early: {halt:?}");
    }
    println!("intensities written to {}", path.display());
    Ok(())
}

fn cmd_entropy(config: &ExperimentConfig) -> Result<(), CliError> {
    ensure_out(config)?;
    let params = config.geodesic_params();
    let series = ig_entropy_series(&params, &config.entropy_grid()).map_err(CliError::from_core)?;
    let table = entropy_table(&series);
    let path = config.out_dir.join("entropy.csv");
    table
        .write_to(&path)
        .map_err(|e| CliError::Validation(format!("cannot write entropy.csv: {e}")))?;

    let pts: Vec<(f64, f64)> = series
        .tau_grid
        .iter()
        .copied()
        .zip(series.entropy.iter().copied())
        .collect();
    let fit = slope_fit(&pts, config.fit_window).map_err(CliError::from_core)?;
    let summary = serde_json::json!({
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "fit_window": [config.fit_window.0, config.fit_window.1],
        "slope_target": 3.0 * config.n as f64 * config.lambda_rate,
    });
    let fit_path = config.out_dir.join("entropy_fit.json");
    std::fs::write(&fit_path, format!("{summary:#}\n"))
        .map_err(|e| CliError::Validation(format!("cannot write entropy_fit.json: {e}")))?;
    if config.emit_svg {
        let chart = svg::line_chart("Information-geometric entropy", "tau", "S(tau)", &pts);
        std::fs::write(config.out_dir.join("entropy.svg"), chart)
            .map_err(|e| CliError::Validation(format!("cannot write entropy.svg: {e}")))?;
    }
    println!("{summary:#}");
    println!(
        "series written to {}, fit to {}",
        path.display(),
        fit_path.display()
    );
    Ok(())
}

fn cmd_maxent(config: &ExperimentConfig, args: &MaxentArgs) -> Result<(), CliError> {
    ensure_out(config)?;
    let constraints =
        MomentConstraints::new(args.mean, args.stddev).map_err(CliError::from_core)?;
    let grid = GridSpec::new(
        args.mean - args.half_width * args.stddev,
        args.mean + args.half_width * args.stddev,
        args.nodes,
    )
    .map_err(CliError::from_core)?;
    let solution =
        maxent_solve(&grid, &constraints, args.tolerance).map_err(CliError::from_core)?;
    let reference = discretized_gaussian(&grid, &constraints).map_err(CliError::from_core)?;

    let mut table = CsvTable::new(&["x", "weight", "gaussian_reference"]);
    for ((&x, &w), &r) in solution
        .distribution
        .grid()
        .iter()
        .zip(solution.distribution.weights())
        .zip(reference.weights())
    {
        table.row(&[fmt_f64(x), fmt_f64(w), fmt_f64(r)]);
    }
    let path = config.out_dir.join("maxent.csv");
    table
        .write_to(&path)
        .map_err(|e| CliError::Validation(format!("cannot write maxent.csv: {e}")))?;
    println!(
        "solved in {} Newton iterations: alpha = {:.12}, beta = {:.12}, residual = {:.3e}",
        solution.iterations, solution.alpha, solution.beta, solution.residual
    );
    println!(
        "moments: mean = {:.12} (target {}), variance = {:.12} (target {})",
        solution.distribution.mean(),
        fmt_f64(args.mean),
        solution.distribution.variance(),
        fmt_f64(args.stddev * args.stddev)
    );
    println!("weights written to {}", path.display());
    Ok(())
}
