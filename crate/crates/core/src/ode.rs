//! Adaptive Dormand–Prince 5(4) integrator with continuous output.
//!
//! Shared by the geodesic and deviation integrators. Features beyond the
//! plain method, all driven by the callers here:
//!
//! * component-wise error scale `abs_tol + rel_tol * |y|`;
//! * the error norm may be restricted to a state prefix (`control_dims`),
//!   which keeps step selection independent of linearly-propagated
//!   components and makes their solutions exactly homogeneous in their
//!   initial data;
//! * a stage guard rejecting steps whose internal stages leave the valid
//!   region (sigma > 0), shrinking the step instead of evaluating there;
//! * a stop predicate that truncates the trajectory cleanly (overflow tag).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Butcher tableau of the Dormand–Prince 5(4) pair.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// Difference between the 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
/// Coefficients of the 4th-order continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 10.0;
/// PI controller damping (Hairer's beta).
const BETA: f64 = 0.04;

/// Integrator configuration.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_steps: usize,
    /// Restrict the error norm to the first `control_dims` components.
    pub control_dims: Option<usize>,
}

impl<T: Scalar> OdeOptions<T> {
    pub fn with_tolerance(rel_tol: T) -> Self {
        Self {
            rel_tol,
            abs_tol: rel_tol * T::of(1e-3),
            max_steps: 10_000_000,
            control_dims: None,
        }
    }
}

/// Why an integration ended before its final sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Halt<T> {
    /// The stage guard kept failing until the step underflowed.
    GuardUnderflow { tau: T },
    /// The stop predicate fired after an accepted step.
    Stopped { tau: T },
}

/// Integration result: states at the requested sample times (truncated if
/// halted) plus controller diagnostics.
#[derive(Debug, Clone)]
pub struct OdeSolution<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest accepted local error estimate, in absolute scaled units
    /// (the per-step estimate multiplied by its tolerance scale).
    pub max_error_estimate: T,
    pub halt: Option<Halt<T>>,
    /// Final integrator state (at the last accepted step).
    pub final_time: T,
    pub final_state: Vec<T>,
}

fn validate_samples<T: Scalar>(t0: T, samples: &[T]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: "at least one sample time required".into(),
        });
    }
    if samples[0] < t0 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: format!("first sample {} precedes t0 {}", samples[0], t0),
        });
    }
    for w in samples.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidParameter {
                name: "samples",
                reason: "sample times must be strictly increasing".into(),
            });
        }
    }
    Ok(())
}

/// State-validity predicate evaluated on internal stages.
pub type StateGuard<'a, T> = &'a dyn Fn(&[T]) -> bool;
/// Early-termination predicate evaluated after accepted steps.
pub type StopCondition<'a, T> = &'a dyn Fn(T, &[T]) -> bool;

/// Integrates `dy/dt = f(t, y)` from `(t0, y0)` forward, producing states at
/// `samples` (strictly increasing, `samples[0] >= t0`). `guard` returning
/// false marks a stage state invalid; `stop` returning true after an
/// accepted step truncates the trajectory with a [`Halt::Stopped`] tag.
pub fn integrate<T, F>(
    f: &mut F,
    y0: &[T],
    t0: T,
    samples: &[T],
    opts: &OdeOptions<T>,
    guard: Option<StateGuard<'_, T>>,
    stop: Option<StopCondition<'_, T>>,
) -> Result<OdeSolution<T>>
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]),
{
    validate_samples(t0, samples)?;
    let rel = opts.rel_tol;
    if !(rel > T::zero()) || !rel.is_finite() {
        return Err(Error::InvalidParameter {
            name: "rel_tol",
            reason: format!("must be positive, got {rel}"),
        });
    }
    let dim = y0.len();
    let control = opts.control_dims.unwrap_or(dim).min(dim);
    let t_end = *samples.last().expect("validated non-empty");

    let a: Vec<Vec<T>> = A
        .iter()
        .map(|row| row.iter().map(|&x| T::of(x)).collect())
        .collect();
    let c: Vec<T> = C.iter().map(|&x| T::of(x)).collect();
    let e: Vec<T> = E.iter().map(|&x| T::of(x)).collect();
    let d: Vec<T> = D.iter().map(|&x| T::of(x)).collect();

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); dim]; 7];
    f(t, &y, &mut k[0]);

    let mut times = Vec::with_capacity(samples.len());
    let mut states = Vec::with_capacity(samples.len());
    let mut next_sample = 0usize;
    if samples[0] == t0 {
        times.push(t0);
        states.push(y.clone());
        next_sample = 1;
    }
    if next_sample >= samples.len() {
        return Ok(OdeSolution {
            times,
            states,
            accepted_steps: 0,
            rejected_steps: 0,
            max_error_estimate: T::zero(),
            halt: None,
            final_time: t,
            final_state: y,
        });
    }

    let scale_of = |yi: T| opts.abs_tol + rel * yi.abs();
    let mut h = initial_step(
        f,
        t,
        &y,
        &k[0].clone(),
        rel,
        opts.abs_tol,
        t_end - t0,
        control,
    );
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut max_err_abs = T::zero();
    let mut fac_old: T = T::of(1e-4);
    let mut last_rejected = false;
    let mut y_stage = vec![T::zero(); dim];
    let mut y_new = vec![T::zero(); dim];

    for _step in 0..opts.max_steps {
        if t >= t_end {
            break;
        }
        let h_floor = T::of(16.0) * T::eps() * t.abs().max(T::one());
        if h < h_floor {
            return Err(Error::StepSizeUnderflow {
                tau: t.as_f64(),
                context: "adaptive step shrank below machine resolution".into(),
            });
        }
        if t + h > t_end {
            h = t_end - t;
        }

        // Stages 2..7 (k[0] holds f(t, y) via FSAL).
        let mut guard_failed = false;
        for s in 0..6 {
            for i in 0..dim {
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    if a[s][j] != T::zero() {
                        acc = acc + a[s][j] * kj[i];
                    }
                }
                y_stage[i] = y[i] + h * acc;
            }
            if let Some(g) = guard {
                if !g(&y_stage) {
                    guard_failed = true;
                    break;
                }
            }
            let ts = t + c[s] * h;
            let (_, tail) = k.split_at_mut(s + 1);
            f(ts, &y_stage, &mut tail[0]);
        }
        if guard_failed {
            rejected += 1;
            h = h * T::of(0.5);
            if h < h_floor {
                return Ok(OdeSolution {
                    times,
                    states,
                    accepted_steps: accepted,
                    rejected_steps: rejected,
                    max_error_estimate: max_err_abs,
                    halt: Some(Halt::GuardUnderflow { tau: t }),
                    final_time: t,
                    final_state: y,
                });
            }
            continue;
        }
        // The 5th-order solution equals stage 7's state (c7 = 1, a7 = b).
        y_new.copy_from_slice(&y_stage);

        // Weighted RMS error norm over the controlled components.
        let mut err_sq = T::zero();
        let mut max_abs_local = T::zero();
        for i in 0..control {
            let mut err_i = T::zero();
            for (j, kj) in k.iter().enumerate() {
                if e[j] != T::zero() {
                    err_i = err_i + e[j] * kj[i];
                }
            }
            err_i = err_i * h;
            let scale = scale_of(y[i].abs().max(y_new[i].abs()));
            let ratio = err_i / scale;
            err_sq = err_sq + ratio * ratio;
            max_abs_local = max_abs_local.max(err_i.abs());
        }
        let err = (err_sq / T::of_usize(control.max(1))).sqrt();

        if err <= T::one() {
            // Accept.
            accepted += 1;
            max_err_abs = max_err_abs.max(max_abs_local);
            let t_new = t + h;

            // Continuous extension for samples inside (t, t_new].
            if next_sample < samples.len() && samples[next_sample] <= t_new {
                let cont = build_interpolant(&y, &y_new, &k, h, &d);
                while next_sample < samples.len() && samples[next_sample] <= t_new {
                    let theta = ((samples[next_sample] - t) / h)
                        .max(T::zero())
                        .min(T::one());
                    times.push(samples[next_sample]);
                    states.push(eval_interpolant(&cont, theta));
                    next_sample += 1;
                }
            }

            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6); // FSAL
            t = t_new;

            if let Some(sp) = stop {
                if sp(t, &y) {
                    return Ok(OdeSolution {
                        times,
                        states,
                        accepted_steps: accepted,
                        rejected_steps: rejected,
                        max_error_estimate: max_err_abs,
                        halt: Some(Halt::Stopped { tau: t }),
                        final_time: t,
                        final_state: y,
                    });
                }
            }

            // PI step controller.
            let expo = T::of(0.2 - BETA * 0.75);
            let err_clamped = err.max(T::of(1e-10));
            let mut factor = T::of(SAFETY) * err_clamped.powf(-expo) * fac_old.powf(T::of(BETA));
            factor = factor.max(T::of(MIN_SCALE)).min(T::of(MAX_SCALE));
            if last_rejected {
                factor = factor.min(T::one());
            }
            fac_old = err.max(T::of(1e-4));
            last_rejected = false;
            h = h * factor;

            if next_sample >= samples.len() {
                break;
            }
        } else {
            rejected += 1;
            last_rejected = true;
            let shrink = (T::of(SAFETY) * err.powf(T::of(-0.2)))
                .max(T::of(MIN_SCALE))
                .min(T::one());
            h = h * shrink;
        }
    }

    if next_sample < samples.len() {
        return Err(Error::MaxStepsExceeded {
            max_steps: opts.max_steps,
            tau: t.as_f64(),
        });
    }

    Ok(OdeSolution {
        times,
        states,
        accepted_steps: accepted,
        rejected_steps: rejected,
        max_error_estimate: max_err_abs,
        halt: None,
        final_time: t,
        final_state: y,
    })
}

/// Hairer-style starting step: balance the size of the initial derivative
/// against a trial Euler step. Only the controlled components participate,
/// keeping the step sequence independent of the uncontrolled ones.
#[allow(clippy::too_many_arguments)]
fn initial_step<T, F>(
    f: &mut F,
    t0: T,
    y0: &[T],
    f0: &[T],
    rel: T,
    abs: T,
    span: T,
    control: usize,
) -> T
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]),
{
    let dim = control.min(y0.len());
    let scale = |yi: T| abs + rel * yi.abs();
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for i in 0..dim {
        let s = scale(y0[i]);
        let a = y0[i] / s;
        let b = f0[i] / s;
        d0 = d0 + a * a;
        d1 = d1 + b * b;
    }
    let n = T::of_usize(dim.max(1));
    d0 = (d0 / n).sqrt();
    d1 = (d1 / n).sqrt();
    let mut h0 = if d0 < T::of(1e-5) || d1 < T::of(1e-5) {
        T::of(1e-6)
    } else {
        T::of(0.01) * (d0 / d1)
    };
    h0 = h0.min(span.abs() * T::of(0.1)).max(T::of(1e-12));

    // One explicit Euler step to probe the second derivative.
    let y1: Vec<T> = y0
        .iter()
        .zip(f0.iter())
        .map(|(&y, &d)| y + h0 * d)
        .collect();
    let mut f1 = vec![T::zero(); y0.len()];
    f(t0 + h0, &y1, &mut f1);
    let mut d2 = T::zero();
    for i in 0..dim {
        let s = scale(y0[i]);
        let diff = (f1[i] - f0[i]) / s;
        d2 = d2 + diff * diff;
    }
    d2 = (d2 / n).sqrt() / h0;

    let d_max = d1.max(d2);
    let h1 = if d_max <= T::of(1e-15) {
        (h0 * T::of(1e-3)).max(T::of(1e-6))
    } else {
        (T::of(0.01) / d_max).powf(T::of(0.2))
    };
    (T::of(100.0) * h0).min(h1).min(span.abs())
}

type Interpolant<T> = [Vec<T>; 5];

fn build_interpolant<T: Scalar>(
    y: &[T],
    y_new: &[T],
    k: &[Vec<T>],
    h: T,
    d: &[T],
) -> Interpolant<T> {
    let dim = y.len();
    let mut cont0 = Vec::with_capacity(dim);
    let mut cont1 = Vec::with_capacity(dim);
    let mut cont2 = Vec::with_capacity(dim);
    let mut cont3 = Vec::with_capacity(dim);
    let mut cont4 = Vec::with_capacity(dim);
    for i in 0..dim {
        let ydiff = y_new[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        cont0.push(y[i]);
        cont1.push(ydiff);
        cont2.push(bspl);
        cont3.push(ydiff - h * k[6][i] - bspl);
        let mut acc = T::zero();
        for (j, kj) in k.iter().enumerate() {
            if d[j] != T::zero() {
                acc = acc + d[j] * kj[i];
            }
        }
        cont4.push(h * acc);
    }
    [cont0, cont1, cont2, cont3, cont4]
}

fn eval_interpolant<T: Scalar>(cont: &Interpolant<T>, theta: T) -> Vec<T> {
    let one_minus = T::one() - theta;
    cont[0]
        .iter()
        .zip(&cont[1])
        .zip(&cont[2])
        .zip(&cont[3])
        .zip(&cont[4])
        .map(|((((&c0, &c1), &c2), &c3), &c4)| {
            c0 + theta * (c1 + one_minus * (c2 + theta * (c3 + one_minus * c4)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let opts = OdeOptions::with_tolerance(1e-10_f64);
        let samples: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0];
        let sol = integrate(&mut f, &[1.0], 0.0, &samples, &opts, None, None).unwrap();
        assert!(sol.halt.is_none());
        for (t, s) in sol.times.iter().zip(&sol.states) {
            assert!((s[0] - (-t).exp()).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn harmonic_oscillator_dense_output_accuracy() {
        let opts = OdeOptions::with_tolerance(1e-10_f64);
        let samples: Vec<f64> = (0..=400).map(|i| i as f64 * 0.025).collect();
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let sol = integrate(&mut f, &[1.0, 0.0], 0.0, &samples, &opts, None, None).unwrap();
        let mut worst = 0.0f64;
        for (t, s) in sol.times.iter().zip(&sol.states) {
            worst = worst
                .max((s[0] - t.cos()).abs())
                .max((s[1] + t.sin()).abs());
        }
        assert!(worst < 1e-9, "sup error {worst}");
        assert!(sol.accepted_steps > 10);
    }

    #[test]
    fn guard_shrinks_step_and_eventually_halts() {
        // y' = -10 with a guard y > 0: the solution hits zero at t = 0.1 and
        // cannot continue.
        let opts = OdeOptions::with_tolerance(1e-8_f64);
        let samples = vec![0.05, 0.2];
        let mut f = |_t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = -10.0;
        let guard = |y: &[f64]| y[0] > 0.0;
        let sol = integrate(&mut f, &[1.0], 0.0, &samples, &opts, Some(&guard), None).unwrap();
        assert!(matches!(sol.halt, Some(Halt::GuardUnderflow { .. })));
        assert_eq!(sol.times.len(), 1); // only the 0.05 sample was reached
        assert!(sol.final_time < 0.100001 && sol.final_time > 0.09);
    }

    #[test]
    fn stop_predicate_truncates() {
        let opts = OdeOptions::with_tolerance(1e-8_f64);
        let samples: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        let stop = |_t: f64, y: &[f64]| y[0] > 100.0;
        let sol = integrate(&mut f, &[1.0], 0.0, &samples, &opts, None, Some(&stop)).unwrap();
        assert!(matches!(sol.halt, Some(Halt::Stopped { .. })));
        assert!(sol.times.len() < samples.len());
        // e^t exceeds 100 just past t = ln(100) ~ 4.6.
        assert!(sol.final_time > 4.6 && sol.final_time < 6.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let opts = OdeOptions::with_tolerance(1e-8_f64);
        let mut f = |_t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = 0.0;
        assert!(integrate(&mut f, &[1.0], 0.0, &[], &opts, None, None).is_err());
        assert!(integrate(&mut f, &[1.0], 0.0, &[2.0, 1.0], &opts, None, None).is_err());
        assert!(integrate(&mut f, &[1.0], 1.0, &[0.5], &opts, None, None).is_err());
    }

    #[test]
    fn zero_derivative_is_constant() {
        let opts = OdeOptions::with_tolerance(1e-10_f64);
        let samples = vec![1.0, 2.0, 3.0];
        let mut f = |_t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = 0.0;
            dy[1] = 0.0;
        };
        let sol = integrate(&mut f, &[3.5, -1.25], 0.0, &samples, &opts, None, None).unwrap();
        for s in &sol.states {
            assert_eq!(s[0], 3.5);
            assert_eq!(s[1], -1.25);
        }
    }
}
