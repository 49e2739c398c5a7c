//! Verification tolerances, each pinned with its origin.
//!
//! Gauss–Hermite quadrature of the Fisher integral is exact up to rounding
//! (the integrands are quartic polynomials against a Gaussian weight), so
//! its bound sits at accumulated-rounding level. Finite-difference bounds
//! follow from central-difference truncation `O(h^2)` plus subtractive
//! rounding `O(eps / h)` at the steps used. Dynamics bounds are the
//! integrator's global error at `rel_tol = 1e-10` with an order of
//! magnitude of headroom. Fit bounds come from the known `1/tau`
//! finite-horizon correction to the asymptotic slopes.

/// Quadrature vs closed-form Fisher metric, relative.
pub const FISHER_QUADRATURE_REL: f64 = 1e-10;

/// Monte Carlo Fisher metric: allowed deviation in standard errors.
pub const FISHER_MC_SIGMA: f64 = 3.0;

/// Finite-difference Christoffel symbols vs closed form, absolute.
pub const FD_CHRISTOFFEL_ABS: f64 = 1e-7;

/// Finite-difference Ricci scalar vs `-3N`, relative, at step `1e-4`.
pub const FD_RICCI_REL: f64 = 1e-4;

/// Dense Riemann antisymmetry and first-Bianchi residuals, absolute.
pub const DENSE_RIEMANN_IDENTITY_ABS: f64 = 1e-6;

/// Dense sectional curvature vs {-1/2, 0}, absolute.
pub const DENSE_SECTIONAL_ABS: f64 = 1e-5;

/// Residual of the geodesic equations on the closed-form solution.
pub const GEODESIC_RESIDUAL_ABS: f64 = 1e-6;

/// Numeric vs closed-form geodesic, sup norm at `rel_tol = 1e-10`.
pub const GEODESIC_SUP_ABS: f64 = 1e-8;

/// Conserved geodesic speed `6 N rate^2`, relative.
pub const GEODESIC_SPEED_REL: f64 = 1e-8;

/// Deviation integration vs family oracle, relative intensity.
pub const JACOBI_ORACLE_REL: f64 = 5e-3;

/// Fitted instability exponent vs the geodesic rate, relative.
pub const LYAPUNOV_REL: f64 = 2e-2;

/// Closed-form swept volume vs adaptive quadrature, relative.
pub const REGION_VOLUME_REL: f64 = 1e-9;

/// Fitted entropy slope vs `3 N rate`, relative.
pub const ENTROPY_SLOPE_REL: f64 = 2e-2;

/// Entropy per degree-of-freedom group across N, relative spread.
pub const ENTROPY_PER_N_REL: f64 = 3e-2;

/// Maximum-entropy weights vs the discretized Gaussian, sup relative on
/// the `|x - mean| <= 5 stddev` core.
pub const MAXENT_SHAPE_REL: f64 = 1e-3;

/// Maximum-entropy discrete moments vs constraints, absolute.
pub const MAXENT_MOMENT_ABS: f64 = 1e-10;

/// Sweep summary: `slope / (3 N rate)` and `rate_fit / rate` band.
pub const INDICATOR_RATIO_BAND: (f64, f64) = (0.98, 1.02);
