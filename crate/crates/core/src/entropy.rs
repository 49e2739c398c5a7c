//! Statistical volumes and the information-geometric entropy.
//!
//! The closed-form geodesics sweep a region whose volume factorizes over
//! blocks; each per-block factor has an elementary antiderivative, so the
//! region volume is exact. Everything downstream (time-averaged volume,
//! entropy) is carried in log space end to end: the volumes grow like
//! `exp(3 N rate tau)` and would overflow doubles almost immediately for
//! moderate `N tau`, while every claim being checked is about the log
//! anyway.

use crate::error::{Error, Result};
use crate::manifold::{GeodesicParams, ThetaPoint};
use crate::scalar::{log_add_exp, Scalar};

/// Target spacing control for the internal trapezoid refinement:
/// `h <= TRAPEZOID_PHASE_STEP / (3 N rate)` keeps the quadrature's relative
/// error around `(3 N rate h)^2 / 12 ~ 1e-4`, far inside the 2% slope
/// tolerances downstream.
const TRAPEZOID_PHASE_STEP: f64 = 0.035;

/// Hard cap on internal trapezoid nodes per call.
const MAX_TRAPEZOID_NODES: usize = 4_000_000;

/// Volume element `sqrt(det g)` at a point: the product over blocks of
/// `sqrt(2) / sigma^2`. Grows without bound as any sigma approaches zero;
/// the log-space entry points below avoid materializing it.
pub fn volume_element<T: Scalar>(point: &ThetaPoint<T>) -> T {
    let sqrt2 = T::of(std::f64::consts::SQRT_2);
    point
        .blocks()
        .iter()
        .map(|b| sqrt2 / (b.sigma * b.sigma))
        .fold(T::one(), |acc, f| acc * f)
}

/// Natural log of the swept-region volume at `tau`.
///
/// Per block the iterated integral has the exact antiderivative
/// `|mu(tau) - mu(0)| * sqrt(2) * |1/sigma(0) - 1/sigma(tau)|`; blocks share
/// constants, so the total log volume is `3N` times the per-block log
/// factor. The magnitudes make the swept region an unsigned volume (sigma
/// decreases along the flow past the transient, which flips the iterated
/// integral's sign).
pub fn log_region_volume<T: Scalar>(params: &GeodesicParams<T>, tau: T) -> Result<T> {
    if !(tau > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("must be positive, got {tau}"),
        });
    }
    Ok(T::of_usize(3 * params.n) * log_block_region_factor(params, tau))
}

/// Log of one block's swept-volume factor, in a form stable for all
/// `rate * tau` (no bare `exp` of large arguments).
fn log_block_region_factor<T: Scalar>(params: &GeodesicParams<T>, tau: T) -> T {
    let r = params.rate;
    let k = params.denom_constant();
    let two = T::of(2.0);
    let phase = r * tau;

    // mu factor: (scale^2/(2r)) (1 - E) / ((1 + K)(E + K)), E = e^{-2 r tau}.
    let e = (-two * phase).exp();
    let ln_one_minus_e = (-(-two * phase).exp_m1()).ln();
    let ln_mu = (params.scale * params.scale / (two * r)).ln() + ln_one_minus_e
        - (T::one() + k).ln()
        - (e + k).ln();

    // sigma factor: |expm1(-r tau) + K expm1(r tau)| / scale.
    let ln_sigma_diff = if phase.as_f64() > 350.0 {
        // K e^{r tau} dominates; remaining terms are below resolution.
        k.ln() + phase
    } else {
        ((-phase).exp_m1() + k * phase.exp_m1()).abs().ln()
    };

    let half_ln2 = T::of(0.5 * std::f64::consts::LN_2);
    ln_mu + half_ln2 + ln_sigma_diff - params.scale.ln()
}

/// Log of the time-averaged swept volume `(1/tau) * integral_0^tau dV`,
/// accumulated with a log-sum-exp trapezoid rule refined to at least
/// `quad_points` subintervals (and finer when the exponential growth rate
/// demands it).
pub fn averaged_log_volume<T: Scalar>(
    params: &GeodesicParams<T>,
    tau: T,
    quad_points: usize,
) -> Result<T> {
    if !(tau > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("must be positive, got {tau}"),
        });
    }
    if quad_points < 16 {
        return Err(Error::InvalidParameter {
            name: "quad_points",
            reason: format!("must be >= 16, got {quad_points}"),
        });
    }
    let m = refined_subintervals(params, tau.as_f64(), quad_points);
    let h = tau / T::of_usize(m);
    let mut log_integral = T::neg_infinity();
    for i in 0..=m {
        let t_i = if i == m { tau } else { T::of_usize(i) * h };
        let log_dv = if i == 0 {
            T::neg_infinity()
        } else {
            T::of_usize(3 * params.n) * log_block_region_factor(params, t_i)
        };
        let w = if i == 0 || i == m { h / T::of(2.0) } else { h };
        log_integral = log_add_exp(log_integral, log_dv + w.ln());
    }
    Ok(log_integral - tau.ln())
}

fn refined_subintervals<T: Scalar>(params: &GeodesicParams<T>, span: f64, floor: usize) -> usize {
    let growth = 3.0 * params.n as f64 * params.rate.as_f64();
    let needed = (span * growth / TRAPEZOID_PHASE_STEP).ceil() as usize;
    needed.max(floor).clamp(64, MAX_TRAPEZOID_NODES)
}

/// Region volumes, averaged volumes and entropy sampled on a tau grid.
///
/// `entropy[i]` equals `log_avg_volume[i]` by definition.
#[derive(Debug, Clone)]
pub struct VolumeSeries<T> {
    pub tau_grid: Vec<T>,
    pub log_region_volume: Vec<T>,
    pub log_avg_volume: Vec<T>,
    pub entropy: Vec<T>,
}

/// Entropy series `S(tau) = log avg-volume(tau)` over a strictly increasing
/// grid of positive tau values.
///
/// One pass builds a refined internal grid covering `[0, max tau]`, walks a
/// cumulative log-sum-exp trapezoid along it, and reads the requested
/// samples off the running integral, so the cost is linear in the refined
/// node count rather than quadratic in the grid size.
pub fn ig_entropy_series<T: Scalar>(
    params: &GeodesicParams<T>,
    tau_grid: &[T],
) -> Result<VolumeSeries<T>> {
    if tau_grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "tau_grid",
            reason: "must be non-empty".into(),
        });
    }
    if !(tau_grid[0] > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tau_grid",
            reason: "entries must be positive".into(),
        });
    }
    for w in tau_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidParameter {
                name: "tau_grid",
                reason: "entries must be strictly increasing".into(),
            });
        }
    }

    let three_n = T::of_usize(3 * params.n);
    let log_dv = |t: T| -> T {
        if t <= T::zero() {
            T::neg_infinity()
        } else {
            three_n * log_block_region_factor(params, t)
        }
    };

    let span = tau_grid.last().expect("non-empty").as_f64();
    let total_nodes = refined_subintervals(params, span, 16 * tau_grid.len());
    let base_h = span / total_nodes as f64;

    let mut log_region = Vec::with_capacity(tau_grid.len());
    let mut log_avg = Vec::with_capacity(tau_grid.len());

    let mut t_prev = T::zero();
    let mut f_prev = T::neg_infinity();
    let mut log_cum = T::neg_infinity();
    let half = T::of(0.5);
    for &t_target in tau_grid {
        // Walk the refined trapezoid from t_prev to t_target.
        let seg = (t_target - t_prev).as_f64();
        let sub = (seg / base_h).ceil().max(1.0) as usize;
        let h = (t_target - t_prev) / T::of_usize(sub);
        for i in 1..=sub {
            let t_i = if i == sub {
                t_target
            } else {
                t_prev + T::of_usize(i) * h
            };
            let f_i = log_dv(t_i);
            // Trapezoid panel (h/2)(dv_{i-1} + dv_i) in log space.
            let panel = (h * half).ln() + log_add_exp(f_prev, f_i);
            log_cum = log_add_exp(log_cum, panel);
            f_prev = f_i;
        }
        t_prev = t_target;
        log_region.push(f_prev);
        log_avg.push(log_cum - t_target.ln());
    }

    Ok(VolumeSeries {
        tau_grid: tau_grid.to_vec(),
        log_region_volume: log_region,
        entropy: log_avg.clone(),
        log_avg_volume: log_avg,
    })
}

/// Ordinary least-squares line fit over the points whose abscissa falls in
/// `window` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
}

/// Least-squares slope/intercept/r^2 over a window of `(x, y)` samples.
pub fn slope_fit<T: Scalar>(series: &[(T, T)], window: (T, T)) -> Result<SlopeFit<T>> {
    let pts: Vec<(T, T)> = series
        .iter()
        .copied()
        .filter(|&(x, _)| x >= window.0 && x <= window.1)
        .collect();
    if pts.len() < 3 {
        return Err(Error::DegenerateWindow(format!(
            "need >= 3 points in window, got {}",
            pts.len()
        )));
    }
    let n = T::of_usize(pts.len());
    let mean_x = pts.iter().map(|&(x, _)| x).fold(T::zero(), |a, b| a + b) / n;
    let mean_y = pts.iter().map(|&(_, y)| y).fold(T::zero(), |a, b| a + b) / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for &(x, y) in &pts {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() {
        return Err(Error::DegenerateWindow(
            "all abscissae identical in window".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == T::zero() {
        T::one()
    } else {
        let mut ss_res = T::zero();
        for &(x, y) in &pts {
            let resid = y - (slope * x + intercept);
            ss_res = ss_res + resid * resid;
        }
        T::one() - ss_res / syy
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{analytic_geodesic_eval, metric_at};
    use crate::oracle::adaptive_simpson;

    fn params(scale: f64, rate: f64, n: usize) -> GeodesicParams<f64> {
        GeodesicParams::new(scale, rate, 0.0, n).unwrap()
    }

    fn sqrt8() -> f64 {
        8.0_f64.sqrt()
    }

    #[test]
    fn volume_element_reference_values() {
        let p: ThetaPoint<f64> = ThetaPoint::uniform(1, 0.0, 1.0).unwrap();
        assert!((volume_element(&p) - 2.0f64.powf(1.5)).abs() < 1e-12);

        // Doubling one sigma divides the element by 4.
        let q: ThetaPoint<f64> = ThetaPoint::new(vec![(0.0, 2.0), (0.0, 1.0), (0.0, 1.0)]).unwrap();
        assert!((volume_element(&q) - 2.0f64.powf(1.5) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn volume_element_is_sqrt_metric_determinant() {
        let p: ThetaPoint<f64> =
            ThetaPoint::new(vec![(1.0, 0.7), (-2.0, 1.9), (0.5, 3.2)]).unwrap();
        let det: f64 = metric_at(&p)
            .iter()
            .map(|g| g.g_mu_mu * g.g_sigma_sigma)
            .product();
        assert!((volume_element(&p) - det.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn region_volume_closed_form_block_factor() {
        // Per-block factor at tau = 1 with the reference constants equals
        // 2 tanh(1) (cosh(1) - 1).
        let p = params(sqrt8(), 1.0, 1);
        let expected_block = 2.0 * 1.0f64.tanh() * (1.0f64.cosh() - 1.0);
        let log_v = log_region_volume(&p, 1.0).unwrap();
        assert!((log_v - 3.0 * expected_block.ln()).abs() < 1e-12);
        assert!((expected_block - 0.8272140753760729).abs() < 1e-12);
        assert!(log_region_volume(&p, 0.0).is_err());
        assert!(log_region_volume(&p, -1.0).is_err());
    }

    #[test]
    fn region_volume_agrees_with_quadrature_oracle() {
        let p = params(sqrt8(), 1.0, 1);
        for &tau in &[0.5, 1.0, 2.0, 4.0] {
            let (p0, _) = analytic_geodesic_eval(&p, 0.0);
            let (pt, _) = analytic_geodesic_eval(&p, tau);
            let mu0 = p0.blocks()[0].mu;
            let mu1 = pt.blocks()[0].mu;
            let s0 = p0.blocks()[0].sigma;
            let s1 = pt.blocks()[0].sigma;
            let mu_len = adaptive_simpson(&|_x: f64| 1.0, mu0, mu1, 1e-12).abs();
            let sig_int = adaptive_simpson(&|s: f64| 2.0f64.sqrt() / (s * s), s0, s1, 1e-12).abs();
            let oracle_log = 3.0 * (mu_len * sig_int).ln();
            let closed = log_region_volume(&p, tau).unwrap();
            assert!(
                ((closed - oracle_log) / oracle_log).abs() < 1e-9,
                "tau {tau}: closed {closed} oracle {oracle_log}"
            );
        }
    }

    #[test]
    fn region_volume_log_slope_tends_to_3n_rate() {
        let p = params(sqrt8(), 1.0, 1);
        let v30 = log_region_volume(&p, 30.0).unwrap();
        assert!(((v30 / 30.0) / 3.0 - 1.0).abs() < 0.01);
        let p2 = params(sqrt8(), 0.5, 4);
        let v = log_region_volume(&p2, 80.0).unwrap();
        assert!(((v / 80.0) / 6.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn averaged_log_volume_growth_ratio() {
        // The ratio S(tau)/tau approaches 3 N rate from below with a
        // -ln(3 N rate tau)/tau correction; at tau = 40 that correction is
        // ~4% of the limit for N = 1 and ~0.6% for N = 10.
        let p1 = params(sqrt8(), 1.0, 1);
        let s1 = averaged_log_volume(&p1, 40.0, 64).unwrap();
        let expected1 = 3.0 * 40.0 - (3.0f64 * 40.0).ln();
        assert!(((s1 - expected1) / expected1).abs() < 1e-3, "S = {s1}");
        assert!((s1 / 40.0 / 3.0 - 1.0).abs() < 0.05);

        let p10 = params(sqrt8(), 1.0, 10);
        let s10 = averaged_log_volume(&p10, 40.0, 64).unwrap();
        assert!(
            (s10 / 40.0 / 30.0 - 1.0).abs() < 0.02,
            "ratio {}",
            s10 / 40.0 / 30.0
        );
        assert!(s10.is_finite());
    }

    #[test]
    fn averaged_log_volume_mean_value_bounds() {
        let p = params(sqrt8(), 1.0, 2);
        let tau = 6.0;
        let avg = averaged_log_volume(&p, tau, 64).unwrap();
        let max_log_dv = (1..=600)
            .map(|i| log_region_volume(&p, tau * i as f64 / 600.0).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(avg <= max_log_dv + 1e-9);
        // Lower mean-value bound: min over [0, tau] of dV is 0 (at tau -> 0+),
        // which any finite average dominates.
        assert!(avg.is_finite());
    }

    #[test]
    fn averaged_log_volume_validates_inputs() {
        let p = params(1.0, 1.0, 1);
        assert!(averaged_log_volume(&p, -1.0, 64).is_err());
        assert!(averaged_log_volume(&p, 1.0, 8).is_err());
    }

    #[test]
    fn entropy_series_slope_reference_window() {
        let p = params(sqrt8(), 1.0, 1);
        let grid: Vec<f64> = (1..=400).map(|i| 0.1 * i as f64).collect();
        let series = ig_entropy_series(&p, &grid).unwrap();
        let pts: Vec<(f64, f64)> = series
            .tau_grid
            .iter()
            .copied()
            .zip(series.entropy.iter().copied())
            .collect();
        let fit = slope_fit(&pts, (20.0, 40.0)).unwrap();
        assert!(
            fit.slope >= 2.94 && fit.slope <= 3.06,
            "slope {}",
            fit.slope
        );
        assert!(fit.r_squared > 0.99999);

        // Entropy increasing on the asymptotic window.
        for w in pts.windows(2) {
            if w[0].0 >= 20.0 {
                assert!(w[1].1 > w[0].1);
            }
        }
        // entropy column is the averaged-volume log by definition.
        assert_eq!(series.entropy, series.log_avg_volume);
    }

    #[test]
    fn entropy_series_slope_other_constants() {
        let p = params(sqrt8(), 0.5, 2);
        let target = 3.0 * 2.0 * 0.5;
        let grid: Vec<f64> = (1..=400).map(|i| 0.2 * i as f64).collect();
        let series = ig_entropy_series(&p, &grid).unwrap();
        let pts: Vec<(f64, f64)> = series
            .tau_grid
            .iter()
            .copied()
            .zip(series.entropy.iter().copied())
            .collect();
        let fit = slope_fit(&pts, (40.0, 80.0)).unwrap();
        assert!(
            ((fit.slope - target) / target).abs() < 0.02,
            "slope {} target {target}",
            fit.slope
        );
    }

    #[test]
    fn entropy_per_dof_is_n_independent_asymptotically() {
        // At tau = 60 / rate the -ln(3 N rate tau)/(3 N) correction is under
        // 3% across N in {1, 2, 5, 10}.
        let rate = 1.0;
        let tau = 60.0;
        let per_n: Vec<f64> = [1usize, 2, 5, 10]
            .iter()
            .map(|&n| {
                let p = params(sqrt8(), rate, n);
                averaged_log_volume(&p, tau, 64).unwrap() / n as f64
            })
            .collect();
        let max = per_n.iter().cloned().fold(f64::MIN, f64::max);
        let min = per_n.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min - 1.0 < 0.03, "spread {}", max / min - 1.0);
    }

    #[test]
    fn entropy_series_additivity_in_blocks() {
        let tau = 7.0;
        let p1 = params(sqrt8(), 1.0, 1);
        let p4 = params(sqrt8(), 1.0, 4);
        let v1 = log_region_volume(&p1, tau).unwrap();
        let v4 = log_region_volume(&p4, tau).unwrap();
        assert!((v4 - 4.0 * v1).abs() < 1e-10);
    }

    #[test]
    fn entropy_series_validates_grid() {
        let p = params(1.0, 1.0, 1);
        assert!(ig_entropy_series(&p, &[]).is_err());
        assert!(ig_entropy_series(&p, &[0.0, 1.0]).is_err());
        assert!(ig_entropy_series(&p, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn slope_fit_exact_lines() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 * i as f64 + 1.0)).collect();
        let fit = slope_fit(&pts, (0.0, 9.0)).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!(fit.r_squared > 1.0 - 1e-12);

        let neg: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, -2.0 * i as f64)).collect();
        let fit = slope_fit(&neg, (0.0, 9.0)).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn slope_fit_degenerate_windows() {
        let pts = vec![(1.0, 2.0), (2.0, 3.0)];
        assert!(matches!(
            slope_fit(&pts, (0.0, 10.0)),
            Err(Error::DegenerateWindow(_))
        ));
        let same_x = vec![(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)];
        assert!(matches!(
            slope_fit(&same_x, (0.0, 10.0)),
            Err(Error::DegenerateWindow(_))
        ));
    }
}
