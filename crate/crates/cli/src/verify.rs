//! The `verify` command: every closed form against its independent
//! numeric route, with one pass/fail line per check.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use igchaos_core::dynamics::{
    integrate_geodesic_on, integrate_jlc, jacobi_fd_oracle, lyapunov_estimate, uniform_grid,
};
use igchaos_core::entropy::{ig_entropy_series, log_region_volume, slope_fit};
use igchaos_core::manifold::{
    analytic_geodesic_eval, christoffel_at, geodesic_ode_residual, metric_at, metric_speed_sq,
    ricci_scalar_at, GeodesicParams, ThetaPoint,
};
use igchaos_core::maxent::{discretized_gaussian, maxent_solve, GridSpec, MomentConstraints};
use igchaos_core::oracle::{
    adaptive_simpson, dense_fd_curvature, fd_christoffel, fd_ricci_scalar, fisher_metric_estimates,
    fisher_offdiag_quadrature, QuadratureSpec,
};

use crate::tolerances as tol;

/// One verification check: the measured discrepancy against its bound.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub name: &'static str,
    pub tolerance: f64,
    pub measured: f64,
    pub pass: bool,
}

/// Full verification report.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// One line per check.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<34} measured {:>12.4e}  tolerance {:>9.1e}  {}",
                c.name,
                c.measured,
                c.tolerance,
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            out,
            "{}/{} checks passed",
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.len()
        );
        out
    }
}

/// Test hooks for mutation sanity checks; all off in production use.
#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Flip the sign of the closed-form `Gamma^sigma_{mu mu}` the
    /// finite-difference check compares against, to prove the check can
    /// catch a wrong connection component.
    pub flip_christoffel_sign: bool,
    pub rng_seed: u64,
}

/// Runs every oracle-agreement suite.
pub fn verify(options: &VerifyOptions) -> VerifyReport {
    let mut checks = Vec::new();
    let mut push = |name: &'static str, tolerance: f64, measured: f64| {
        checks.push(VerifyCheck {
            name,
            tolerance,
            measured,
            pass: measured.is_finite() && measured <= tolerance,
        });
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.rng_seed);

    // Fisher metric: Gauss-Hermite quadrature of the defining integral.
    {
        let spec = QuadratureSpec::gauss_hermite(40);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let sigma = rng.gen_range(0.1..10.0);
            let mu = rng.gen_range(-10.0..10.0);
            let p = ThetaPoint::<f64>::uniform(1, mu, sigma).expect("valid point");
            let est = fisher_metric_estimates(&p, &spec).expect("quadrature");
            let g = metric_at(&p);
            worst = worst
                .max(((est[0].metric.g_mu_mu - g[0].g_mu_mu) / g[0].g_mu_mu).abs())
                .max(
                    ((est[0].metric.g_sigma_sigma - g[0].g_sigma_sigma) / g[0].g_sigma_sigma).abs(),
                );
        }
        push(
            "fisher_metric_gauss_hermite",
            tol::FISHER_QUADRATURE_REL,
            worst,
        );
    }

    // Fisher metric: Monte Carlo route, measured in standard errors.
    {
        let p = ThetaPoint::<f64>::uniform(1, 0.0, 1.0).expect("valid point");
        let spec = QuadratureSpec::monte_carlo(1_000_000, options.rng_seed.wrapping_add(1));
        match fisher_metric_estimates(&p, &spec) {
            Ok(est) => {
                let g = metric_at(&p);
                let z_mm = ((est[0].metric.g_mu_mu - g[0].g_mu_mu) / est[0].std_error_mu_mu).abs();
                let z_ss = ((est[0].metric.g_sigma_sigma - g[0].g_sigma_sigma)
                    / est[0].std_error_sigma_sigma)
                    .abs();
                push(
                    "fisher_metric_monte_carlo",
                    tol::FISHER_MC_SIGMA,
                    z_mm.max(z_ss),
                );
            }
            Err(_) => push(
                "fisher_metric_monte_carlo",
                tol::FISHER_MC_SIGMA,
                f64::INFINITY,
            ),
        }
    }

    // In-block off-diagonal entries vanish under quadrature.
    {
        let p = ThetaPoint::<f64>::uniform(2, 1.5, 0.7).expect("valid point");
        let worst = fisher_offdiag_quadrature(&p, 40)
            .expect("quadrature")
            .into_iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        push(
            "fisher_metric_offdiagonal",
            tol::FISHER_QUADRATURE_REL,
            worst,
        );
    }

    // Christoffel symbols from metric differences.
    {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let sigma = rng.gen_range(0.3..5.0);
            let mu = rng.gen_range(-3.0..3.0);
            let p = ThetaPoint::<f64>::uniform(1, mu, sigma).expect("valid point");
            let fd = fd_christoffel(&p, 1e-5 * sigma).expect("fd");
            let mut closed = christoffel_at(&p);
            if options.flip_christoffel_sign {
                for b in &mut closed.blocks {
                    b.gamma_sigma_mu_mu = -b.gamma_sigma_mu_mu;
                }
            }
            for (f, c) in fd.blocks.iter().zip(&closed.blocks) {
                worst = worst
                    .max((f.gamma_mu_mu_sigma - c.gamma_mu_mu_sigma).abs())
                    .max((f.gamma_sigma_mu_mu - c.gamma_sigma_mu_mu).abs())
                    .max((f.gamma_sigma_sigma_sigma - c.gamma_sigma_sigma_sigma).abs());
            }
        }
        push("fd_christoffel", tol::FD_CHRISTOFFEL_ABS, worst);
    }

    // Ricci scalar from differentiated Christoffel symbols.
    {
        let mut worst = 0.0f64;
        for n in [1usize, 2, 3] {
            let pairs: Vec<(f64, f64)> = (0..3 * n)
                .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(0.5..3.0)))
                .collect();
            let p = ThetaPoint::<f64>::new(pairs).expect("valid point");
            let r = fd_ricci_scalar(&p, 1e-4).expect("fd ricci");
            let expect = -3.0 * n as f64;
            worst = worst.max(((r - expect) / expect).abs());
        }
        push("fd_ricci_scalar", tol::FD_RICCI_REL, worst);
    }

    // Dense brute-force Riemann tensor: identities and sectional values.
    {
        let p =
            ThetaPoint::<f64>::new(vec![(0.3, 1.1), (-0.7, 0.8), (1.0, 1.9)]).expect("valid point");
        let dense = dense_fd_curvature(&p, 1e-5, 1e-4).expect("dense curvature");
        push(
            "dense_riemann_antisymmetry",
            tol::DENSE_RIEMANN_IDENTITY_ABS,
            dense.max_antisymmetry_violation(),
        );
        push(
            "dense_riemann_first_bianchi",
            tol::DENSE_RIEMANN_IDENTITY_ABS,
            dense.max_first_bianchi_violation(),
        );
        let mut worst = 0.0f64;
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    continue;
                }
                let k = dense.sectional(i, j).expect("plane");
                let expect = if i / 2 == j / 2 { -0.5 } else { 0.0 };
                worst = worst.max((k - expect).abs());
            }
        }
        push("dense_sectional_curvature", tol::DENSE_SECTIONAL_ABS, worst);
        push(
            "dense_ricci_scalar",
            tol::FD_RICCI_REL,
            ((dense.ricci_scalar - ricci_scalar_at(&p)) / 3.0).abs(),
        );
    }

    // Closed-form geodesics solve the geodesic equations.
    {
        let mut worst = 0.0f64;
        for &(scale, rate) in &[(8.0f64.sqrt(), 1.0), (1.0, 0.5), (2.5, 2.0)] {
            let params = GeodesicParams::<f64>::new(scale, rate, 0.0, 1).expect("params");
            for tau in [0.0, 0.5, 1.0, 5.0] {
                worst = worst.max(geodesic_ode_residual(&params, tau));
            }
        }
        push("geodesic_ode_residual", tol::GEODESIC_RESIDUAL_ABS, worst);
    }

    // Numeric integration against the closed form, plus speed conservation.
    {
        let params = GeodesicParams::<f64>::new(8.0f64.sqrt(), 1.0, 0.0, 1).expect("params");
        let grid = uniform_grid(10.0, 201);
        let initial = analytic_geodesic_eval(&params, 0.0);
        let traj = integrate_geodesic_on(&initial, &grid, 1e-10).expect("integration");
        let mut sup = 0.0f64;
        let mut speed_worst = 0.0f64;
        for (tau, (point, velocity)) in traj.tau_grid.iter().zip(&traj.states) {
            let (p_ref, v_ref) = analytic_geodesic_eval(&params, *tau);
            for (a, b) in point.blocks().iter().zip(p_ref.blocks()) {
                sup = sup.max((a.mu - b.mu).abs()).max((a.sigma - b.sigma).abs());
            }
            for (a, b) in velocity.blocks().iter().zip(v_ref.blocks()) {
                sup = sup.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
            }
            let speed = metric_speed_sq(point, velocity).expect("speed");
            speed_worst = speed_worst.max(((speed - 6.0) / 6.0).abs());
        }
        push(
            "geodesic_numeric_vs_closed_form",
            tol::GEODESIC_SUP_ABS,
            sup,
        );
        push(
            "geodesic_speed_conservation",
            tol::GEODESIC_SPEED_REL,
            speed_worst,
        );
    }

    // Deviation equation against the family oracle; fitted exponent.
    {
        let params = GeodesicParams::<f64>::new(8.0f64.sqrt(), 1.0, 0.0, 1).expect("params");
        let grid = uniform_grid(20.0, 201);
        let oracle = jacobi_fd_oracle(&params, 1e-5, &grid).expect("oracle");
        let initial = analytic_geodesic_eval(&params, 0.0);
        let geo = integrate_geodesic_on(&initial, &grid, 1e-10).expect("integration");
        let jlc = integrate_jlc(
            &geo,
            (&oracle.deviations[0], &oracle.covariant_rates[0]),
            1e-10,
        )
        .expect("jlc");
        let mut worst = 0.0f64;
        for ((tau, a), b) in jlc
            .tau_grid
            .iter()
            .zip(&jlc.intensities)
            .zip(&oracle.intensities)
        {
            if *tau <= 10.0 {
                worst = worst.max((a - b).abs() / b);
            }
        }
        push("jlc_vs_family_oracle", tol::JACOBI_ORACLE_REL, worst);
        let lyap = lyapunov_estimate(&jlc.intensity_series(), (10.0, 20.0)).expect("fit");
        push(
            "lyapunov_matches_rate",
            tol::LYAPUNOV_REL,
            (lyap - 1.0).abs(),
        );
    }

    // Swept-region volume: closed form against adaptive quadrature.
    {
        let params = GeodesicParams::<f64>::new(8.0f64.sqrt(), 1.0, 0.0, 1).expect("params");
        let mut worst = 0.0f64;
        for &tau in &[0.5, 1.0, 2.0, 4.0] {
            let (p0, _) = analytic_geodesic_eval(&params, 0.0);
            let (pt, _) = analytic_geodesic_eval(&params, tau);
            let mu_len = (pt.blocks()[0].mu - p0.blocks()[0].mu).abs();
            let sig_int = adaptive_simpson(
                &|s: f64| 2.0f64.sqrt() / (s * s),
                p0.blocks()[0].sigma,
                pt.blocks()[0].sigma,
                1e-10,
            )
            .abs();
            let oracle_log = 3.0 * (mu_len * sig_int).ln();
            let closed = log_region_volume(&params, tau).expect("volume");
            worst = worst.max(((closed - oracle_log) / oracle_log).abs());
        }
        push("region_volume_quadrature", tol::REGION_VOLUME_REL, worst);
    }

    // Entropy slope: linear growth at rate 3 N lambda.
    {
        let params = GeodesicParams::<f64>::new(8.0f64.sqrt(), 1.0, 0.0, 1).expect("params");
        let grid: Vec<f64> = (1..=200).map(|i| 0.2 * i as f64).collect();
        let series = ig_entropy_series(&params, &grid).expect("series");
        let pts: Vec<(f64, f64)> = series
            .tau_grid
            .iter()
            .copied()
            .zip(series.entropy.iter().copied())
            .collect();
        let fit = slope_fit(&pts, (20.0, 40.0)).expect("fit");
        push(
            "entropy_slope_linear_growth",
            tol::ENTROPY_SLOPE_REL,
            ((fit.slope - 3.0) / 3.0).abs(),
        );
    }

    // Maximum-entropy solver against the discretized Gaussian.
    {
        let grid = GridSpec::<f64>::new(-10.0, 10.0, 2001).expect("grid");
        let constraints = MomentConstraints::<f64>::new(0.0, 1.0).expect("constraints");
        match maxent_solve(&grid, &constraints, 1e-10) {
            Ok(sol) => {
                let reference = discretized_gaussian(&grid, &constraints).expect("reference");
                let mut shape = 0.0f64;
                for ((&x, &w), &r) in sol
                    .distribution
                    .grid()
                    .iter()
                    .zip(sol.distribution.weights())
                    .zip(reference.weights())
                {
                    if x.abs() <= 5.0 {
                        shape = shape.max((w - r).abs() / r);
                    }
                }
                push("maxent_gaussian_shape", tol::MAXENT_SHAPE_REL, shape);
                let m_err = (sol.distribution.mean() - 0.0)
                    .abs()
                    .max((sol.distribution.variance() - 1.0).abs());
                push("maxent_moment_residual", tol::MAXENT_MOMENT_ABS, m_err);
            }
            Err(_) => {
                push(
                    "maxent_gaussian_shape",
                    tol::MAXENT_SHAPE_REL,
                    f64::INFINITY,
                );
                push(
                    "maxent_moment_residual",
                    tol::MAXENT_MOMENT_ABS,
                    f64::INFINITY,
                );
            }
        }
    }

    VerifyReport { checks }
}
