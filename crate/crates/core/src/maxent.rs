//! Discrete maximum-relative-entropy solver.
//!
//! Maximizing relative entropy against a uniform prior under mean and
//! variance constraints selects the Gaussian; this module demonstrates the
//! mechanism on a bounded uniform grid, which makes the (improper) uniform
//! prior proper and the optimization finite-dimensional. The solver works
//! in the two-dimensional dual: weights take the exponential-family form
//! `w_i ~ exp(alpha x_i + beta x_i^2)` and a damped Newton iteration moves
//! the multipliers until the discrete moments match the constraints.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniformly spaced grid specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub min: T,
    pub max: T,
    pub nodes: usize,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(min: T, max: T, nodes: usize) -> Result<Self> {
        if !(max > min) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("max {max} must exceed min {min}"),
            });
        }
        if nodes < 3 {
            return Err(Error::InvalidParameter {
                name: "nodes",
                reason: format!("need >= 3 nodes, got {nodes}"),
            });
        }
        Ok(Self { min, max, nodes })
    }

    pub fn abscissae(&self) -> Vec<T> {
        let h = (self.max - self.min) / T::of_usize(self.nodes - 1);
        (0..self.nodes)
            .map(|i| {
                if i + 1 == self.nodes {
                    self.max
                } else {
                    self.min + T::of_usize(i) * h
                }
            })
            .collect()
    }
}

/// Probability mass on a uniformly spaced grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<T> {
    grid: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> DiscreteDistribution<T> {
    /// Validates non-negativity, normalization (within 1e-12) and uniform
    /// grid spacing.
    pub fn new(grid: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if grid.len() != weights.len() || grid.len() < 3 {
            return Err(Error::GridMismatch(format!(
                "grid has {} nodes, weights {}",
                grid.len(),
                weights.len()
            )));
        }
        let h = grid[1] - grid[0];
        if !(h > T::zero()) {
            return Err(Error::GridMismatch(
                "grid must be strictly increasing".into(),
            ));
        }
        for w in grid.windows(2) {
            let step = w[1] - w[0];
            if ((step - h) / h).abs() > T::of(1e-9) {
                return Err(Error::GridMismatch("grid spacing is not uniform".into()));
            }
        }
        let mut total = T::zero();
        for (i, &w) in weights.iter().enumerate() {
            if w < T::zero() || !w.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "weights",
                    reason: format!("weight {i} is {w}"),
                });
            }
            total = total + w;
        }
        if (total - T::one()).abs() > T::of(1e-12) {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: format!("weights sum to {total}, expected 1"),
            });
        }
        Ok(Self { grid, weights })
    }

    /// Uniform distribution on a grid.
    pub fn uniform(spec: &GridSpec<T>) -> Result<Self> {
        let grid = spec.abscissae();
        let w = T::of_usize(grid.len()).recip();
        let mut weights = vec![w; grid.len()];
        let correction = T::one() - weights.iter().copied().sum::<T>();
        weights[0] = weights[0] + correction;
        Self::new(grid, weights)
    }

    /// All mass on a single node.
    pub fn point_mass(spec: &GridSpec<T>, index: usize) -> Result<Self> {
        let grid = spec.abscissae();
        if index >= grid.len() {
            return Err(Error::IndexOutOfRange {
                index,
                dim: grid.len(),
            });
        }
        let mut weights = vec![T::zero(); grid.len()];
        weights[index] = T::one();
        Self::new(grid, weights)
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn mean(&self) -> T {
        self.grid
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * x)
            .sum()
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.grid
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * (x - m) * (x - m))
            .sum()
    }
}

/// Mean and standard-deviation constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentConstraints<T> {
    pub mean: T,
    pub stddev: T,
}

impl<T: Scalar> MomentConstraints<T> {
    pub fn new(mean: T, stddev: T) -> Result<Self> {
        if !(stddev > T::zero()) || !stddev.is_finite() {
            return Err(Error::InvalidParameter {
                name: "stddev",
                reason: format!("must be positive, got {stddev}"),
            });
        }
        Ok(Self { mean, stddev })
    }
}

/// Relative entropy `-sum p_i log(p_i / m_i)` with the `0 log 0 = 0`
/// convention. Requires identical grids and `m_i > 0` wherever `p_i > 0`.
pub fn relative_entropy<T: Scalar>(
    p: &DiscreteDistribution<T>,
    m: &DiscreteDistribution<T>,
) -> Result<T> {
    if p.grid.len() != m.grid.len() || p.grid.iter().zip(&m.grid).any(|(a, b)| a != b) {
        return Err(Error::GridMismatch(
            "relative entropy needs identical grids".into(),
        ));
    }
    let mut acc = T::zero();
    for (i, (&pi, &mi)) in p.weights.iter().zip(&m.weights).enumerate() {
        if pi == T::zero() {
            continue;
        }
        if mi == T::zero() {
            return Err(Error::ZeroReferenceMass {
                index: i,
                p: pi.as_f64(),
            });
        }
        acc = acc - pi * (pi / mi).ln();
    }
    Ok(acc)
}

/// Solved maximum-entropy distribution with its dual certificate.
#[derive(Debug, Clone)]
pub struct MaxEntSolution<T> {
    pub distribution: DiscreteDistribution<T>,
    /// Lagrange multiplier on the first moment.
    pub alpha: T,
    /// Lagrange multiplier on the second moment; negative at any solution
    /// with finite variance.
    pub beta: T,
    pub iterations: usize,
    /// Final max absolute moment residual.
    pub residual: T,
    /// Residual norm after each accepted Newton step (starts with the
    /// initial residual); strictly decreasing under the damping rule.
    pub residual_history: Vec<T>,
}

/// Default moment residual tolerance.
pub const DEFAULT_MOMENT_TOLERANCE: f64 = 1e-10;
/// Newton iteration budget.
pub const MAX_NEWTON_ITERATIONS: usize = 100;

struct DualMoments<T> {
    weights: Vec<T>,
    m1: T,
    m2: T,
    m3: T,
    m4: T,
}

fn dual_moments<T: Scalar>(xs: &[T], alpha: T, beta: T) -> DualMoments<T> {
    // Log-domain softmax against overflow for large |alpha|, |beta|.
    let logits: Vec<T> = xs.iter().map(|&x| alpha * x + beta * x * x).collect();
    let peak = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let mut weights: Vec<T> = logits.iter().map(|&l| (l - peak).exp()).collect();
    let z: T = weights.iter().copied().sum();
    let (mut m1, mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (w, &x) in weights.iter_mut().zip(xs) {
        *w = *w / z;
        let wx = *w * x;
        m1 = m1 + wx;
        m2 = m2 + wx * x;
        m3 = m3 + wx * x * x;
        m4 = m4 + wx * x * x * x;
    }
    DualMoments {
        weights,
        m1,
        m2,
        m3,
        m4,
    }
}

fn moment_residual<T: Scalar>(m: &DualMoments<T>, constraints: &MomentConstraints<T>) -> (T, T, T) {
    let target2 = constraints.mean * constraints.mean + constraints.stddev * constraints.stddev;
    let r1 = m.m1 - constraints.mean;
    let r2 = m.m2 - target2;
    // Convergence is judged on (mean, variance), the constrained quantities.
    let var = m.m2 - m.m1 * m.m1;
    let rv = var - constraints.stddev * constraints.stddev;
    (r1, r2, r1.abs().max(rv.abs()))
}

/// Solves the discrete maximum-relative-entropy problem with a uniform
/// prior under the given moment constraints.
///
/// The returned weights take the form `w_i ~ exp(alpha x_i + beta x_i^2)`
/// with `beta < 0`; the damped Newton iteration on `(alpha, beta)` enforces
/// a monotone decrease of the moment residual and keeps `beta` negative.
pub fn maxent_solve<T: Scalar>(
    grid: &GridSpec<T>,
    constraints: &MomentConstraints<T>,
    tolerance: T,
) -> Result<MaxEntSolution<T>> {
    if !(tolerance > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tolerance",
            reason: format!("must be positive, got {tolerance}"),
        });
    }
    let eight = T::of(8.0);
    let span_lo = constraints.mean - eight * constraints.stddev;
    let span_hi = constraints.mean + eight * constraints.stddev;
    if grid.min > span_lo || grid.max < span_hi {
        return Err(Error::InfeasibleConstraints(format!(
            "grid [{}, {}] must span mean +- 8 stddev = [{span_lo}, {span_hi}]",
            grid.min, grid.max
        )));
    }
    let xs = grid.abscissae();

    // Neutral start: a flat Gaussian at the scale of the grid itself, so
    // the dual iteration genuinely solves for the multipliers instead of
    // being handed them.
    let grid_scale = (grid.max - grid.min) / T::of(2.0);
    let mut beta = -(T::of(2.0) * grid_scale * grid_scale).recip();
    let mut alpha = -T::of(2.0) * beta * constraints.mean;
    let mut moments = dual_moments(&xs, alpha, beta);
    let (mut r1, mut r2, mut res_norm) = moment_residual(&moments, constraints);
    let mut residual_history = vec![res_norm];

    let mut iterations = 0usize;
    while res_norm > tolerance {
        if iterations >= MAX_NEWTON_ITERATIONS {
            return Err(Error::NewtonDidNotConverge {
                iterations,
                residual: res_norm.as_f64(),
            });
        }
        iterations += 1;

        // Jacobian of (m1, m2) in (alpha, beta): the moment covariance.
        let var_x = moments.m2 - moments.m1 * moments.m1;
        let cov_x_x2 = moments.m3 - moments.m1 * moments.m2;
        let var_x2 = moments.m4 - moments.m2 * moments.m2;
        let det = var_x * var_x2 - cov_x_x2 * cov_x_x2;
        if det.abs() < T::of(1e-300) {
            return Err(Error::NewtonDidNotConverge {
                iterations,
                residual: res_norm.as_f64(),
            });
        }
        let d_alpha = -(var_x2 * r1 - cov_x_x2 * r2) / det;
        let d_beta = -(-cov_x_x2 * r1 + var_x * r2) / det;

        // Damped update: halve until beta stays negative and the residual
        // norm strictly decreases.
        let mut step = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            let a_try = alpha + step * d_alpha;
            let b_try = beta + step * d_beta;
            if b_try < T::zero() {
                let m_try = dual_moments(&xs, a_try, b_try);
                let (t1, t2, t_norm) = moment_residual(&m_try, constraints);
                if t_norm < res_norm {
                    alpha = a_try;
                    beta = b_try;
                    moments = m_try;
                    r1 = t1;
                    r2 = t2;
                    res_norm = t_norm;
                    residual_history.push(res_norm);
                    accepted = true;
                    break;
                }
            }
            step = step / T::of(2.0);
        }
        if !accepted {
            return Err(Error::NewtonDidNotConverge {
                iterations,
                residual: res_norm.as_f64(),
            });
        }
    }

    let distribution = DiscreteDistribution::new(xs, moments.weights)?;
    Ok(MaxEntSolution {
        distribution,
        alpha,
        beta,
        iterations,
        residual: res_norm,
        residual_history,
    })
}

/// Gaussian density with the given moments, discretized on the grid and
/// renormalized; the reference shape the solver must reproduce.
pub fn discretized_gaussian<T: Scalar>(
    grid: &GridSpec<T>,
    constraints: &MomentConstraints<T>,
) -> Result<DiscreteDistribution<T>> {
    let xs = grid.abscissae();
    let half = T::of(0.5);
    let mut weights: Vec<T> = xs
        .iter()
        .map(|&x| {
            let z = (x - constraints.mean) / constraints.stddev;
            (-half * z * z).exp()
        })
        .collect();
    let total: T = weights.iter().copied().sum();
    for w in &mut weights {
        *w = *w / total;
    }
    DiscreteDistribution::new(xs, weights)
}
