//! Numeric geodesic flow and geodesic deviation.
//!
//! The geodesic system is integrated per block (the blocks never couple);
//! the deviation system is the covariant second-order linearization along
//! the geodesic, integrated jointly with it. Curvature enters through the
//! closed-form per-block Riemann components. The structurally independent
//! cross-check is [`jacobi_fd_oracle`], which never touches the deviation
//! equation: it differentiates the closed-form geodesic family in its rate
//! parameter.

use crate::entropy::slope_fit;
use crate::error::{Error, Result};
use crate::manifold::{
    analytic_geodesic_eval, geodesic_block_state, metric_speed_sq, GeodesicParams, TangentVector,
    ThetaPoint,
};
use crate::ode::{integrate, Halt, OdeOptions};
use crate::scalar::Scalar;

/// Deviation intensities past this magnitude truncate the integration.
pub const INTENSITY_OVERFLOW_LIMIT: f64 = 1e300;

/// Why a trajectory ended before its final requested sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryHalt<T> {
    /// A sigma coordinate collapsed below resolvable scale.
    SigmaCollapse { tau: T },
    /// The deviation intensity exceeded [`INTENSITY_OVERFLOW_LIMIT`].
    IntensityOverflow { tau: T },
}

/// Adaptive-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationStats<T> {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest accepted local error estimate (absolute).
    pub max_error_estimate: T,
}

/// A sampled geodesic: states at a strictly increasing tau grid.
#[derive(Debug, Clone)]
pub struct GeodesicTrajectory<T> {
    pub tau_grid: Vec<T>,
    pub states: Vec<(ThetaPoint<T>, TangentVector<T>)>,
    pub stats: IntegrationStats<T>,
    pub halt: Option<TrajectoryHalt<T>>,
}

/// A sampled Jacobi field along a geodesic: deviation vectors, their
/// covariant rates, and metric intensities.
#[derive(Debug, Clone)]
pub struct JacobiTrajectory<T> {
    pub tau_grid: Vec<T>,
    pub deviations: Vec<TangentVector<T>>,
    pub covariant_rates: Vec<TangentVector<T>>,
    pub intensities: Vec<T>,
    pub halt: Option<TrajectoryHalt<T>>,
}

impl<T: Scalar> JacobiTrajectory<T> {
    /// `(tau, intensity)` pairs, the input shape of [`lyapunov_estimate`].
    pub fn intensity_series(&self) -> Vec<(T, T)> {
        self.tau_grid
            .iter()
            .copied()
            .zip(self.intensities.iter().copied())
            .collect()
    }
}

fn validate_rel_tol<T: Scalar>(rel_tol: T) -> Result<()> {
    let lo = 1e-12;
    let hi = 1e-3;
    let v = rel_tol.as_f64();
    if !(v >= lo && v <= hi) {
        return Err(Error::ToleranceOutOfRange { value: v, lo, hi });
    }
    Ok(())
}

fn pack_state<T: Scalar>(point: &ThetaPoint<T>, velocity: &TangentVector<T>) -> Vec<T> {
    let mut y = Vec::with_capacity(4 * point.block_count());
    for (b, &(dmu, dsigma)) in point.blocks().iter().zip(velocity.blocks()) {
        y.extend_from_slice(&[b.mu, b.sigma, dmu, dsigma]);
    }
    y
}

fn unpack_state<T: Scalar>(y: &[T]) -> Result<(ThetaPoint<T>, TangentVector<T>)> {
    let mut pairs = Vec::with_capacity(y.len() / 4);
    let mut vels = Vec::with_capacity(y.len() / 4);
    for chunk in y.chunks(4) {
        pairs.push((chunk[0], chunk[1]));
        vels.push((chunk[2], chunk[3]));
    }
    Ok((ThetaPoint::new(pairs)?, TangentVector::new(vels)))
}

/// Geodesic right-hand side: `theta'' = -Gamma(theta) theta' theta'`,
/// expanded per block with the closed-form connection. Contractions are
/// grouped as velocity/sigma ratios, which stay order-one along the flow
/// while sigma itself decays toward the underflow threshold.
fn geodesic_rhs<T: Scalar>(y: &[T], dy: &mut [T]) {
    let two = T::of(2.0);
    let half = T::of(0.5);
    for (yb, db) in y.chunks(4).zip(dy.chunks_mut(4)) {
        let sigma = yb[1];
        let v_mu = yb[2];
        let v_sigma = yb[3];
        let r_mu = v_mu / sigma;
        let r_sigma = v_sigma / sigma;
        db[0] = v_mu;
        db[1] = v_sigma;
        db[2] = two * r_sigma * v_mu;
        db[3] = r_sigma * v_sigma - half * r_mu * v_mu;
    }
}

fn sigma_guard<T: Scalar>(y: &[T]) -> bool {
    y.chunks(4).all(|c| c[1] > T::zero())
}

/// Integrates the geodesic equations from `initial`, sampling at `tau_grid`
/// (strictly increasing; a leading `tau_grid[0] == 0` records the initial
/// state). Sigma collapse truncates the trajectory with a halt tag.
pub fn integrate_geodesic_on<T: Scalar>(
    initial: &(ThetaPoint<T>, TangentVector<T>),
    tau_grid: &[T],
    rel_tol: T,
) -> Result<GeodesicTrajectory<T>> {
    validate_rel_tol(rel_tol)?;
    let (point, velocity) = initial;
    if velocity.block_count() != point.block_count() {
        return Err(Error::BlockStructure(format!(
            "velocity has {} blocks, point has {}",
            velocity.block_count(),
            point.block_count()
        )));
    }
    let y0 = pack_state(point, velocity);
    let opts = OdeOptions {
        rel_tol,
        abs_tol: rel_tol * T::of(1e-3),
        max_steps: 10_000_000,
        control_dims: None,
    };
    let mut rhs = |_t: T, y: &[T], dy: &mut [T]| geodesic_rhs(y, dy);
    let guard = sigma_guard::<T>;
    let sol = integrate(
        &mut rhs,
        &y0,
        T::zero(),
        tau_grid,
        &opts,
        Some(&guard),
        None,
    )?;

    let mut states = Vec::with_capacity(sol.states.len());
    for s in &sol.states {
        states.push(unpack_state(s)?);
    }
    Ok(GeodesicTrajectory {
        tau_grid: sol.times,
        states,
        stats: IntegrationStats {
            accepted_steps: sol.accepted_steps,
            rejected_steps: sol.rejected_steps,
            max_error_estimate: sol.max_error_estimate,
        },
        halt: match sol.halt {
            Some(Halt::GuardUnderflow { tau }) => Some(TrajectoryHalt::SigmaCollapse { tau }),
            _ => None,
        },
    })
}

/// As [`integrate_geodesic_on`] with a default uniform grid of 401 samples
/// over `[0, tau_end]`.
pub fn integrate_geodesic<T: Scalar>(
    initial: &(ThetaPoint<T>, TangentVector<T>),
    tau_end: T,
    rel_tol: T,
) -> Result<GeodesicTrajectory<T>> {
    if !(tau_end > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tau_end",
            reason: format!("must be positive, got {tau_end}"),
        });
    }
    let grid = uniform_grid(tau_end, 401);
    integrate_geodesic_on(initial, &grid, rel_tol)
}

/// Uniform grid `0, h, ..., tau_end` with `count` points (count >= 2).
pub fn uniform_grid<T: Scalar>(tau_end: T, count: usize) -> Vec<T> {
    let count = count.max(2);
    let h = tau_end / T::of_usize(count - 1);
    (0..count)
        .map(|i| {
            if i + 1 == count {
                tau_end
            } else {
                T::of_usize(i) * h
            }
        })
        .collect()
}

/// Joint geodesic + deviation right-hand side. Layout: the geodesic block
/// section (4 per block) followed by the deviation section
/// `[dmu, dsigma, w_mu, w_sigma]` per block, where `w = D(delta)/Dtau`.
///
/// The deviation obeys the covariant second-order system
/// `D^2 delta / Dtau^2 = -R(theta', delta) theta'`; rewritten in ordinary
/// derivatives via `d(delta)/dtau = w - Gamma theta' delta` and
/// `dw/dtau = -Gamma theta' w - R^a_{bcd} v^b delta^c v^d`.
fn jlc_rhs<T: Scalar>(y: &[T], dy: &mut [T], block_count: usize) {
    let geo_len = 4 * block_count;
    geodesic_rhs(&y[..geo_len], &mut dy[..geo_len]);
    let half = T::of(0.5);
    let k_block = T::of(crate::manifold::IN_BLOCK_SECTIONAL);
    let two = T::of(2.0);
    for b in 0..block_count {
        let g = &y[4 * b..4 * b + 4];
        let sigma = g[1];
        // Velocity/sigma ratios keep every contraction representable while
        // sigma decays; the curvature factors 1/sigma^2 always meet two
        // velocity factors of order sigma.
        let r = [g[2] / sigma, g[3] / sigma];
        let dvb = &y[geo_len + 4 * b..geo_len + 4 * b + 4];
        let delta = [dvb[0], dvb[1]];
        let w = [dvb[2], dvb[3]];

        // Gamma^a_{bc} contracted with the velocity: m[a][c] = Gamma^a_{bc} v^b.
        // Closed form per block: Gamma^0_{01} = Gamma^0_{10} = -1/sigma,
        // Gamma^1_{00} = 1/(2 sigma), Gamma^1_{11} = -1/sigma.
        let m = [[-r[1], -r[0]], [half * r[0], -r[1]]];

        // Tidal force f[a] = R^a_{bcd} v^b delta^c v^d with the
        // constant-curvature Riemann components
        // R^0_{101} = 2K/sigma^2 = -R^0_{110}, R^1_{010} = K/sigma^2
        // = -R^1_{001}; contracting two velocities leaves pure ratios.
        let f = [
            two * k_block * (r[1] * r[1] * delta[0] - r[1] * r[0] * delta[1]),
            k_block * (r[0] * r[0] * delta[1] - r[0] * r[1] * delta[0]),
        ];

        let out = &mut dy[geo_len + 4 * b..geo_len + 4 * b + 4];
        for a in 0..2 {
            out[a] = w[a] - (m[a][0] * delta[0] + m[a][1] * delta[1]);
            out[2 + a] = -(m[a][0] * w[0] + m[a][1] * w[1]) - f[a];
        }
    }
}

/// Overflow-safe metric norm of the deviation section of a joint state.
fn joint_intensity<T: Scalar>(y: &[T], block_count: usize) -> T {
    let geo_len = 4 * block_count;
    let two = T::of(2.0);
    // Scale by the largest ratio to keep squares representable.
    let mut peak = T::zero();
    for b in 0..block_count {
        let sigma = y[4 * b + 1];
        let dmu = y[geo_len + 4 * b];
        let dsigma = y[geo_len + 4 * b + 1];
        peak = peak.max((dmu / sigma).abs()).max((dsigma / sigma).abs());
    }
    if peak == T::zero() || !peak.is_finite() {
        return peak * T::of(std::f64::consts::SQRT_2);
    }
    let mut acc = T::zero();
    for b in 0..block_count {
        let sigma = y[4 * b + 1];
        let r_mu = y[geo_len + 4 * b] / sigma / peak;
        let r_sigma = y[geo_len + 4 * b + 1] / sigma / peak;
        acc = acc + r_mu * r_mu + two * r_sigma * r_sigma;
    }
    peak * acc.sqrt()
}

/// Integrates the deviation system along the supplied geodesic, starting
/// from `initial_deviation = (delta(0), D delta/Dtau (0))`, and records the
/// metric intensity at every sample of the geodesic's tau grid.
///
/// Step control is driven by the geodesic components alone, so the output
/// is exactly homogeneous of degree one in the initial deviation data.
pub fn integrate_jlc<T: Scalar>(
    geodesic: &GeodesicTrajectory<T>,
    initial_deviation: (&TangentVector<T>, &TangentVector<T>),
    rel_tol: T,
) -> Result<JacobiTrajectory<T>> {
    validate_rel_tol(rel_tol)?;
    let (point0, velocity0) = &geodesic.states[0];
    let block_count = point0.block_count();
    let (delta0, w0) = initial_deviation;
    for (name, v) in [("deviation", delta0), ("covariant rate", w0)] {
        if v.block_count() != block_count {
            return Err(Error::BlockStructure(format!(
                "initial {name} has {} blocks, geodesic has {}",
                v.block_count(),
                block_count
            )));
        }
    }

    let mut y0 = pack_state(point0, velocity0);
    for (&(dmu, dsigma), &(wmu, wsigma)) in delta0.blocks().iter().zip(w0.blocks()) {
        y0.extend_from_slice(&[dmu, dsigma, wmu, wsigma]);
    }

    let opts = OdeOptions {
        rel_tol,
        abs_tol: rel_tol * T::of(1e-3),
        max_steps: 10_000_000,
        // Deviation components are linear in their initial data; excluding
        // them from the error norm preserves exact homogeneity.
        control_dims: Some(4 * block_count),
    };
    let mut rhs = |_t: T, y: &[T], dy: &mut [T]| jlc_rhs(y, dy, block_count);
    let guard = move |y: &[T]| y[..4 * block_count].chunks(4).all(|c| c[1] > T::zero());
    let limit = T::of(INTENSITY_OVERFLOW_LIMIT);
    let stop = move |_t: T, y: &[T]| {
        let j = joint_intensity(y, block_count);
        !j.is_finite() || j > limit
    };
    let sol = integrate(
        &mut rhs,
        &y0,
        T::zero(),
        &geodesic.tau_grid,
        &opts,
        Some(&guard),
        Some(&stop),
    )?;

    let mut deviations = Vec::with_capacity(sol.states.len());
    let mut covariant_rates = Vec::with_capacity(sol.states.len());
    let mut intensities = Vec::with_capacity(sol.states.len());
    for s in &sol.states {
        let geo_len = 4 * block_count;
        let mut dev = Vec::with_capacity(block_count);
        let mut rate = Vec::with_capacity(block_count);
        for b in 0..block_count {
            let d = &s[geo_len + 4 * b..geo_len + 4 * b + 4];
            dev.push((d[0], d[1]));
            rate.push((d[2], d[3]));
        }
        deviations.push(TangentVector::new(dev));
        covariant_rates.push(TangentVector::new(rate));
        intensities.push(joint_intensity(s, block_count));
    }
    Ok(JacobiTrajectory {
        tau_grid: sol.times,
        deviations,
        covariant_rates,
        intensities,
        halt: match sol.halt {
            Some(Halt::GuardUnderflow { tau }) => Some(TrajectoryHalt::SigmaCollapse { tau }),
            Some(Halt::Stopped { tau }) => Some(TrajectoryHalt::IntensityOverflow { tau }),
            None => None,
        },
    })
}

/// Metric norm `(g_{ab} J^a J^b)^{1/2}` of a deviation vector at a point.
pub fn jacobi_intensity<T: Scalar>(deviation: &TangentVector<T>, at: &ThetaPoint<T>) -> Result<T> {
    Ok(metric_speed_sq(at, deviation)?.sqrt())
}

/// Jacobi field of the closed-form geodesic family by central finite
/// differences in the rate parameter, scaled by `delta_rate`; the
/// structurally independent oracle for [`integrate_jlc`].
///
/// Deviations are `(theta(tau; rate + d) - theta(tau; rate - d)) / 2` with
/// `d = delta_rate`; covariant rates difference the deviation in tau and
/// add the connection term; intensities use the metric at the closed-form
/// geodesic point.
pub fn jacobi_fd_oracle<T: Scalar>(
    params: &GeodesicParams<T>,
    delta_rate: T,
    tau_grid: &[T],
) -> Result<JacobiTrajectory<T>> {
    let lo = T::of(1e-8) * params.rate;
    let hi = T::of(1e-3) * params.rate;
    if !(delta_rate >= lo && delta_rate <= hi) {
        return Err(Error::InvalidParameter {
            name: "delta_rate",
            reason: format!("must lie in [1e-8, 1e-3] * rate, got {delta_rate}"),
        });
    }
    let plus = params.with_rate(params.rate + delta_rate)?;
    let minus = params.with_rate(params.rate - delta_rate)?;
    let half = T::of(0.5);

    // Per-block family deviation (all blocks share constants).
    let family_delta = |tau: T| -> (T, T) {
        let (mu_p, sig_p, _, _) = geodesic_block_state(&plus, tau);
        let (mu_m, sig_m, _, _) = geodesic_block_state(&minus, tau);
        (half * (mu_p - mu_m), half * (sig_p - sig_m))
    };

    let block_count = 3 * params.n;
    let h_tau = T::of(1e-6) / params.rate;
    let mut deviations = Vec::with_capacity(tau_grid.len());
    let mut covariant_rates = Vec::with_capacity(tau_grid.len());
    let mut intensities = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        let (d_mu, d_sigma) = family_delta(tau);
        let (dp_mu, dp_sigma) = family_delta(tau + h_tau);
        let (dm_mu, dm_sigma) = family_delta(tau - h_tau);
        let two_h = T::of(2.0) * h_tau;
        let ddot_mu = (dp_mu - dm_mu) / two_h;
        let ddot_sigma = (dp_sigma - dm_sigma) / two_h;

        let (_, sigma, v_mu, v_sigma) = geodesic_block_state(params, tau);
        let inv_s = sigma.recip();
        // Connection term Gamma^a_{bc} v^b delta^c added to the plain rate.
        let w_mu = ddot_mu - inv_s * (v_mu * d_sigma + v_sigma * d_mu);
        let w_sigma = ddot_sigma + half * inv_s * v_mu * d_mu - inv_s * v_sigma * d_sigma;

        let deviation = TangentVector::new(vec![(d_mu, d_sigma); block_count]);
        let (point, _) = analytic_geodesic_eval(params, tau);
        intensities.push(jacobi_intensity(&deviation, &point)?);
        deviations.push(deviation);
        covariant_rates.push(TangentVector::new(vec![(w_mu, w_sigma); block_count]));
    }
    Ok(JacobiTrajectory {
        tau_grid: tau_grid.to_vec(),
        deviations,
        covariant_rates,
        intensities,
        halt: None,
    })
}

/// Least-squares slope of `log intensity` versus `tau` over the window, the
/// finite-horizon stand-in for the asymptotic instability exponent.
pub fn lyapunov_estimate<T: Scalar>(series: &[(T, T)], window: (T, T)) -> Result<T> {
    let mut logged = Vec::new();
    for &(tau, j) in series {
        if tau < window.0 || tau > window.1 {
            continue;
        }
        if !(j > T::zero()) {
            return Err(Error::NonPositiveIntensity {
                tau: tau.as_f64(),
                value: j.as_f64(),
            });
        }
        logged.push((tau, j.ln()));
    }
    let fit = slope_fit(&logged, (T::neg_infinity(), T::infinity()))?;
    Ok(fit.slope)
}
