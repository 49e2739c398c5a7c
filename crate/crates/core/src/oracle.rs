//! Independent numeric oracles for the closed-form geometry.
//!
//! Two structurally different routes to the same objects:
//!
//! * the Fisher information integral evaluated by Gauss–Hermite quadrature
//!   (or Monte Carlo) instead of the closed form;
//! * connection and curvature assembled from central finite differences of
//!   the metric instead of the simplified expressions.
//!
//! Nothing here may call back into the closed-form curvature results it is
//! meant to check; the only shared input is the metric function itself,
//! which the quadrature route validates independently.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::manifold::{metric_at, BlockMetric, ChristoffelBlock, ChristoffelSet, ThetaPoint};
use crate::scalar::Scalar;

/// Integration route for the Fisher information integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureMethod {
    GaussHermite,
    MonteCarlo,
}

/// Discretization of the expectation integral defining the metric.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub method: QuadratureMethod,
    /// Gauss–Hermite nodes per axis (must be >= 2).
    pub node_count: usize,
    /// Monte Carlo sample count (must be >= 1 when Monte Carlo).
    pub sample_count: usize,
    pub rng_seed: u64,
    /// Largest acceptable relative standard error for Monte Carlo results;
    /// estimates above it are reported as non-convergence.
    pub mc_rel_error_threshold: f64,
}

impl QuadratureSpec {
    pub fn gauss_hermite(node_count: usize) -> Self {
        Self {
            method: QuadratureMethod::GaussHermite,
            node_count,
            sample_count: 0,
            rng_seed: 0,
            mc_rel_error_threshold: 0.01,
        }
    }

    pub fn monte_carlo(sample_count: usize, rng_seed: u64) -> Self {
        Self {
            method: QuadratureMethod::MonteCarlo,
            node_count: 0,
            sample_count,
            rng_seed,
            mc_rel_error_threshold: 0.01,
        }
    }

    fn validate(&self) -> Result<()> {
        match self.method {
            QuadratureMethod::GaussHermite if self.node_count < 2 => Err(Error::InvalidParameter {
                name: "node_count",
                reason: format!("Gauss-Hermite needs >= 2 nodes, got {}", self.node_count),
            }),
            QuadratureMethod::MonteCarlo if self.sample_count < 1 => Err(Error::InvalidParameter {
                name: "sample_count",
                reason: "Monte Carlo needs >= 1 sample".into(),
            }),
            _ => Ok(()),
        }
    }
}

/// Gauss–Hermite rule for weight `exp(-t^2)`: nodes and weights such that
/// `integral f(t) exp(-t^2) dt ~= sum w_i f(t_i)`, exact for polynomials of
/// degree `2 node_count - 1`.
///
/// Computed by the Golub–Welsch algorithm: eigenvalues of the symmetric
/// tridiagonal Jacobi matrix (zero diagonal, off-diagonal `sqrt(i/2)`),
/// weights from the first eigenvector components scaled by `sqrt(pi)`.
pub fn gauss_hermite_rule<T: Scalar>(node_count: usize) -> Result<(Vec<T>, Vec<T>)> {
    if node_count < 2 {
        return Err(Error::InvalidParameter {
            name: "node_count",
            reason: format!("needs >= 2 nodes, got {node_count}"),
        });
    }
    let n = node_count;
    let mut diag = vec![T::zero(); n];
    let mut off = vec![T::zero(); n];
    for (i, o) in off.iter_mut().enumerate().take(n - 1) {
        *o = (T::of_usize(i + 1) / T::of(2.0)).sqrt();
    }
    let mut first_row = vec![T::zero(); n];
    first_row[0] = T::one();
    tridiag_ql(&mut diag, &mut off, &mut first_row)?;

    let mu0 = T::of(std::f64::consts::PI).sqrt();
    let mut pairs: Vec<(T, T)> = diag
        .into_iter()
        .zip(first_row.into_iter().map(|z| mu0 * z * z))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));
    Ok(pairs.into_iter().unzip())
}

/// Implicit-shift QL iteration for a symmetric tridiagonal matrix, tracking
/// only the first row of the accumulated eigenvector matrix (all that the
/// quadrature weights need). `diag` holds the diagonal, `off[i]` the
/// (i, i+1) entries; on return `diag` holds eigenvalues.
fn tridiag_ql<T: Scalar>(diag: &mut [T], off: &mut [T], first_row: &mut [T]) -> Result<()> {
    let n = diag.len();
    if n == 1 {
        return Ok(());
    }
    off[n - 1] = T::zero();
    let two = T::of(2.0);
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= T::eps() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::InvalidParameter {
                    name: "node_count",
                    reason: "tridiagonal eigenvalue iteration failed to converge".into(),
                });
            }
            let mut g = (diag[l + 1] - diag[l]) / (two * off[l]);
            let mut r = g.hypot(T::one());
            let denom = g + if g >= T::zero() { r.abs() } else { -r.abs() };
            g = diag[m] - diag[l] + off[l] / denom;
            let (mut s, mut c) = (T::one(), T::one());
            let mut p = T::zero();
            // Deflation mid-sweep restarts the subdiagonal scan.
            let mut deflated = false;
            for i in (l..m).rev() {
                let mut f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == T::zero() {
                    diag[i + 1] = diag[i + 1] - p;
                    off[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + two * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                f = first_row[i + 1];
                first_row[i + 1] = s * first_row[i] + c * f;
                first_row[i] = c * first_row[i] - s * f;
            }
            if deflated {
                continue;
            }
            diag[l] = diag[l] - p;
            off[l] = g;
            off[m] = T::zero();
        }
    }
    Ok(())
}

/// Per-block Fisher metric with an attached statistical error bar
/// (zero for the deterministic quadrature route).
#[derive(Debug, Clone, Copy)]
pub struct FisherBlockEstimate<T> {
    pub metric: BlockMetric<T>,
    pub std_error_mu_mu: T,
    pub std_error_sigma_sigma: T,
}

/// Fisher information metric evaluated from its defining expectation
/// integral, per block. Off-block and off-diagonal entries vanish by the
/// product structure of the distribution; [`fisher_offdiag_quadrature`]
/// spot-checks the in-block off-diagonal numerically.
///
/// Monte Carlo estimates whose relative standard error exceeds the spec
/// threshold are reported as [`Error::QuadratureNotConverged`].
pub fn fisher_metric_quadrature<T: Scalar>(
    point: &ThetaPoint<T>,
    spec: &QuadratureSpec,
) -> Result<Vec<BlockMetric<T>>>
where
    StandardNormal: Distribution<T>,
{
    Ok(fisher_metric_estimates(point, spec)?
        .into_iter()
        .map(|e| e.metric)
        .collect())
}

/// As [`fisher_metric_quadrature`] but retaining standard errors.
pub fn fisher_metric_estimates<T: Scalar>(
    point: &ThetaPoint<T>,
    spec: &QuadratureSpec,
) -> Result<Vec<FisherBlockEstimate<T>>>
where
    StandardNormal: Distribution<T>,
{
    spec.validate()?;
    match spec.method {
        QuadratureMethod::GaussHermite => {
            let (nodes, weights) = gauss_hermite_rule::<T>(spec.node_count)?;
            let norm = T::of(std::f64::consts::PI).sqrt().recip();
            let sqrt2 = T::of(std::f64::consts::SQRT_2);
            Ok(point
                .blocks()
                .iter()
                .map(|b| {
                    let mut g_mm = T::zero();
                    let mut g_ss = T::zero();
                    for (&t, &w) in nodes.iter().zip(weights.iter()) {
                        // x = mu + sqrt(2) sigma t; scores in terms of t:
                        // d log p / d mu = t sqrt(2) / sigma,
                        // d log p / d sigma = (2 t^2 - 1) / sigma.
                        let s_mu = sqrt2 * t / b.sigma;
                        let s_sigma = (T::of(2.0) * t * t - T::one()) / b.sigma;
                        g_mm = g_mm + w * s_mu * s_mu;
                        g_ss = g_ss + w * s_sigma * s_sigma;
                    }
                    FisherBlockEstimate {
                        metric: BlockMetric {
                            g_mu_mu: norm * g_mm,
                            g_sigma_sigma: norm * g_ss,
                        },
                        std_error_mu_mu: T::zero(),
                        std_error_sigma_sigma: T::zero(),
                    }
                })
                .collect())
        }
        QuadratureMethod::MonteCarlo => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
            let n_samples = spec.sample_count;
            let inv_n = T::of_usize(n_samples).recip();
            let mut out = Vec::with_capacity(point.block_count());
            for (idx, b) in point.blocks().iter().enumerate() {
                let mut sum_mm = T::zero();
                let mut sum_mm2 = T::zero();
                let mut sum_ss = T::zero();
                let mut sum_ss2 = T::zero();
                for _ in 0..n_samples {
                    let t: T = StandardNormal.sample(&mut rng);
                    let s_mu = t / b.sigma;
                    let s_sigma = (t * t - T::one()) / b.sigma;
                    let mm = s_mu * s_mu;
                    let ss = s_sigma * s_sigma;
                    sum_mm = sum_mm + mm;
                    sum_mm2 = sum_mm2 + mm * mm;
                    sum_ss = sum_ss + ss;
                    sum_ss2 = sum_ss2 + ss * ss;
                }
                let mean_mm = sum_mm * inv_n;
                let mean_ss = sum_ss * inv_n;
                let var_mm = (sum_mm2 * inv_n - mean_mm * mean_mm).max(T::zero());
                let var_ss = (sum_ss2 * inv_n - mean_ss * mean_ss).max(T::zero());
                let se_mm = (var_mm * inv_n).sqrt();
                let se_ss = (var_ss * inv_n).sqrt();
                let rel = (se_mm / mean_mm).max(se_ss / mean_ss);
                if rel.as_f64() > spec.mc_rel_error_threshold {
                    return Err(Error::QuadratureNotConverged {
                        block: idx,
                        rel_std_error: rel.as_f64(),
                        threshold: spec.mc_rel_error_threshold,
                    });
                }
                out.push(FisherBlockEstimate {
                    metric: BlockMetric {
                        g_mu_mu: mean_mm,
                        g_sigma_sigma: mean_ss,
                    },
                    std_error_mu_mu: se_mm,
                    std_error_sigma_sigma: se_ss,
                });
            }
            Ok(out)
        }
    }
}

/// In-block off-diagonal Fisher entry `g_{mu sigma}` by Gauss–Hermite
/// quadrature, per block. The product structure makes it zero; this is the
/// numerical certificate.
pub fn fisher_offdiag_quadrature<T: Scalar>(
    point: &ThetaPoint<T>,
    node_count: usize,
) -> Result<Vec<T>> {
    let (nodes, weights) = gauss_hermite_rule::<T>(node_count)?;
    let norm = T::of(std::f64::consts::PI).sqrt().recip();
    let sqrt2 = T::of(std::f64::consts::SQRT_2);
    Ok(point
        .blocks()
        .iter()
        .map(|b| {
            let mut g_ms = T::zero();
            for (&t, &w) in nodes.iter().zip(weights.iter()) {
                let s_mu = sqrt2 * t / b.sigma;
                let s_sigma = (T::of(2.0) * t * t - T::one()) / b.sigma;
                g_ms = g_ms + w * s_mu * s_sigma;
            }
            norm * g_ms
        })
        .collect())
}

/// Suggested finite-difference step for a point: `1e-5 * min sigma`,
/// balancing truncation against rounding.
pub fn default_fd_step<T: Scalar>(point: &ThetaPoint<T>) -> T {
    T::of(1e-5) * point.min_sigma()
}

fn validate_fd_step<T: Scalar>(point: &ThetaPoint<T>, step: T) -> Result<()> {
    if !(step > T::zero()) || !step.is_finite() {
        return Err(Error::InvalidParameter {
            name: "step",
            reason: format!("must be positive and finite, got {step}"),
        });
    }
    let limit = point.min_sigma() / T::of(10.0);
    if step >= limit {
        return Err(Error::StepTooLarge {
            step: step.as_f64(),
            limit: limit.as_f64(),
        });
    }
    Ok(())
}

/// Block metric entries as a 2x2 matrix (closed-form metric is diagonal;
/// the off-diagonal zeros participate in the differencing all the same).
fn block_metric_matrix<T: Scalar>(point: &ThetaPoint<T>, block: usize) -> [[T; 2]; 2] {
    let g = metric_at(point)[block];
    [[g.g_mu_mu, T::zero()], [T::zero(), g.g_sigma_sigma]]
}

fn shifted_point<T: Scalar>(
    point: &ThetaPoint<T>,
    block: usize,
    coord: usize,
    delta: T,
) -> Result<ThetaPoint<T>> {
    let mut coords = point.coords();
    let idx = 2 * block + coord;
    coords[idx] = coords[idx] + delta;
    ThetaPoint::from_coords(&coords)
}

/// All eight per-block Christoffel components `Gamma^a_{bc}` assembled from
/// central differences of the metric. Indexing `[a][b][c]`, `0 = mu`,
/// `1 = sigma`.
pub fn fd_christoffel_block_full<T: Scalar>(
    point: &ThetaPoint<T>,
    block: usize,
    step: T,
) -> Result<[[[T; 2]; 2]; 2]> {
    validate_fd_step(point, step)?;
    let two_h = T::of(2.0) * step;
    // dg[c][e][f] = d g_{ef} / d x_c
    let mut dg = [[[T::zero(); 2]; 2]; 2];
    for c in 0..2 {
        let plus = block_metric_matrix(&shifted_point(point, block, c, step)?, block);
        let minus = block_metric_matrix(&shifted_point(point, block, c, -step)?, block);
        for e in 0..2 {
            for f in 0..2 {
                dg[c][e][f] = (plus[e][f] - minus[e][f]) / two_h;
            }
        }
    }
    let g = block_metric_matrix(point, block);
    let ginv = [[g[0][0].recip(), T::zero()], [T::zero(), g[1][1].recip()]];
    let half = T::of(0.5);
    let mut gamma = [[[T::zero(); 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                let mut acc = T::zero();
                for e in 0..2 {
                    acc = acc + ginv[a][e] * (dg[b][e][c] + dg[c][b][e] - dg[e][b][c]);
                }
                gamma[a][b][c] = half * acc;
            }
        }
    }
    Ok(gamma)
}

/// Christoffel symbols by central differences of the metric, assembled
/// per definition. Cross-block derivatives vanish identically (each block
/// metric depends only on that block's sigma), so the assembly is blockwise.
pub fn fd_christoffel<T: Scalar>(point: &ThetaPoint<T>, step: T) -> Result<ChristoffelSet<T>> {
    let mut blocks = Vec::with_capacity(point.block_count());
    for b in 0..point.block_count() {
        let gamma = fd_christoffel_block_full(point, b, step)?;
        blocks.push(ChristoffelBlock {
            gamma_mu_mu_sigma: gamma[0][0][1],
            gamma_sigma_mu_mu: gamma[1][0][0],
            gamma_sigma_sigma_sigma: gamma[1][1][1],
        });
    }
    Ok(ChristoffelSet { blocks })
}

/// Per-block Christoffel components from the closed form, as the full
/// `[a][b][c]` array. Differentiated by [`fd_ricci_scalar`].
fn closed_christoffel_block<T: Scalar>(point: &ThetaPoint<T>, block: usize) -> [[[T; 2]; 2]; 2] {
    let set = crate::manifold::christoffel_at(point);
    let blk = set.blocks[block];
    let mut out = [[[T::zero(); 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                out[a][b][c] = blk.component(a, b, c);
            }
        }
    }
    out
}

/// Ricci scalar assembled from differentiated Christoffel symbols and
/// contracted with the inverse metric.
///
/// Per block the Ricci components combine the Christoffel derivatives
/// `d_e Gamma^e_{bd} - d_d Gamma^e_{be}` (central differences) with the
/// quadratic terms `Gamma^e_{bd} Gamma^h_{eh} - Gamma^h_{be} Gamma^e_{dh}`;
/// the scalar sums the block contractions (cross-block terms vanish on the
/// product metric, which the dense path verifies).
pub fn fd_ricci_scalar<T: Scalar>(point: &ThetaPoint<T>, step: T) -> Result<T> {
    validate_fd_step(point, step)?;
    let two_h = T::of(2.0) * step;
    let mut total = T::zero();
    for blk in 0..point.block_count() {
        // dgamma[c][a][b][d] = d Gamma^a_{bd} / d x_c
        let mut dgamma = [[[[T::zero(); 2]; 2]; 2]; 2];
        for c in 0..2 {
            let gp = closed_christoffel_block(&shifted_point(point, blk, c, step)?, blk);
            let gm = closed_christoffel_block(&shifted_point(point, blk, c, -step)?, blk);
            for a in 0..2 {
                for b in 0..2 {
                    for d in 0..2 {
                        dgamma[c][a][b][d] = (gp[a][b][d] - gm[a][b][d]) / two_h;
                    }
                }
            }
        }
        let gamma = closed_christoffel_block(point, blk);
        let g = block_metric_matrix(point, blk);
        let ginv = [g[0][0].recip(), g[1][1].recip()];
        for b in 0..2 {
            let d = b; // diagonal contraction: metric inverse is diagonal
            let mut ricci_bd = T::zero();
            for e in 0..2 {
                ricci_bd = ricci_bd + dgamma[e][e][b][d] - dgamma[d][e][b][e];
                for h in 0..2 {
                    ricci_bd = ricci_bd + gamma[e][b][d] * gamma[h][e][h]
                        - gamma[h][b][e] * gamma[e][d][h];
                }
            }
            total = total + ginv[b] * ricci_bd;
        }
    }
    Ok(total)
}

/// Maximum number of degree-of-freedom groups the dense tensor path accepts.
pub const DENSE_PATH_MAX_N: usize = 2;

/// Dense curvature tensors computed by brute-force finite differences on
/// the full `6N`-dimensional chart, for `N <= 2`.
///
/// `riemann_up[a][b][c][d]` is `R^a_{bcd}` built from finite-difference
/// Christoffel symbols (themselves built from finite-difference metric
/// derivatives), so this path never consults the closed-form connection or
/// curvature.
#[derive(Debug, Clone)]
pub struct DenseCurvature<T> {
    pub dim: usize,
    pub metric: Vec<Vec<T>>,
    pub riemann_up: Vec<T>,
    pub riemann_down: Vec<T>,
    pub ricci_scalar: T,
}

impl<T: Scalar> DenseCurvature<T> {
    #[inline]
    fn flat(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        let n = self.dim;
        ((a * n + b) * n + c) * n + d
    }

    pub fn riemann_up(&self, a: usize, b: usize, c: usize, d: usize) -> T {
        self.riemann_up[self.flat(a, b, c, d)]
    }

    pub fn riemann_down(&self, a: usize, b: usize, c: usize, d: usize) -> T {
        self.riemann_down[self.flat(a, b, c, d)]
    }

    /// Sectional curvature of the coordinate plane `(i, j)`.
    pub fn sectional(&self, i: usize, j: usize) -> Result<T> {
        if i == j {
            return Err(Error::DegeneratePlane(i, j));
        }
        let r = self.riemann_down(i, j, i, j);
        let denom = self.metric[i][i] * self.metric[j][j] - self.metric[i][j] * self.metric[i][j];
        Ok(r / denom)
    }

    /// Largest violation of the antisymmetries
    /// `R_{abcd} = -R_{bacd} = -R_{abdc}`.
    pub fn max_antisymmetry_violation(&self) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let r = self.riemann_down(a, b, c, d);
                        let v1 = (r + self.riemann_down(b, a, c, d)).abs();
                        let v2 = (r + self.riemann_down(a, b, d, c)).abs();
                        worst = worst.max(v1).max(v2);
                    }
                }
            }
        }
        worst
    }

    /// Largest violation of the first Bianchi identity
    /// `R_{a[bcd]} = 0` (cyclic sum over the last three indices).
    pub fn max_first_bianchi_violation(&self) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let s = self.riemann_down(a, b, c, d)
                            + self.riemann_down(a, c, d, b)
                            + self.riemann_down(a, d, b, c);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

fn dense_metric_coords<T: Scalar>(coords: &[T]) -> Result<Vec<Vec<T>>> {
    let point = ThetaPoint::from_coords(coords)?;
    let blocks = metric_at(&point);
    let dim = coords.len();
    let mut g = vec![vec![T::zero(); dim]; dim];
    for (b, m) in blocks.iter().enumerate() {
        g[2 * b][2 * b] = m.g_mu_mu;
        g[2 * b + 1][2 * b + 1] = m.g_sigma_sigma;
    }
    Ok(g)
}

/// Gauss-Jordan inversion with partial pivoting; the dense path deliberately
/// ignores the diagonal structure of the metric.
fn invert_dense<T: Scalar>(a: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let n = a.len();
    let mut work: Vec<Vec<T>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { T::one() } else { T::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                work[i][col]
                    .abs()
                    .partial_cmp(&work[j][col].abs())
                    .expect("finite pivots")
            })
            .expect("non-empty");
        work.swap(col, pivot);
        let p = work[col][col];
        if p.abs() == T::zero() {
            return Err(Error::InvalidParameter {
                name: "metric",
                reason: "singular metric in dense inversion".into(),
            });
        }
        for j in 0..2 * n {
            work[col][j] = work[col][j] / p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = work[i][col];
            if f == T::zero() {
                continue;
            }
            for j in 0..2 * n {
                work[i][j] = work[i][j] - f * work[col][j];
            }
        }
    }
    Ok(work.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Dense Christoffel symbols `Gamma^a_{bc}` at arbitrary chart coordinates,
/// from central differences of the dense metric.
fn dense_fd_christoffel<T: Scalar>(coords: &[T], step: T) -> Result<Vec<T>> {
    let dim = coords.len();
    let two_h = T::of(2.0) * step;
    // dg[c] = d g / d x_c as dim x dim matrices
    let mut dg = Vec::with_capacity(dim);
    for c in 0..dim {
        let mut plus = coords.to_vec();
        plus[c] = plus[c] + step;
        let mut minus = coords.to_vec();
        minus[c] = minus[c] - step;
        let gp = dense_metric_coords(&plus)?;
        let gm = dense_metric_coords(&minus)?;
        let mut d = vec![vec![T::zero(); dim]; dim];
        for e in 0..dim {
            for f in 0..dim {
                d[e][f] = (gp[e][f] - gm[e][f]) / two_h;
            }
        }
        dg.push(d);
    }
    let g = dense_metric_coords(coords)?;
    let ginv = invert_dense(&g)?;
    let half = T::of(0.5);
    let mut gamma = vec![T::zero(); dim * dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                let mut acc = T::zero();
                for e in 0..dim {
                    acc = acc + ginv[a][e] * (dg[b][e][c] + dg[c][b][e] - dg[e][b][c]);
                }
                gamma[(a * dim + b) * dim + c] = half * acc;
            }
        }
    }
    Ok(gamma)
}

/// Brute-force curvature tensors on the full chart by double finite
/// differences (metric -> Christoffel -> Riemann). Restricted to `N <= 2`
/// to bound the `O((6N)^5)` assembly cost.
///
/// `inner_step` feeds the metric differences, `outer_step` the Christoffel
/// differences; `outer_step` should be roughly one order larger to keep the
/// inner rounding noise out of the outer derivative.
pub fn dense_fd_curvature<T: Scalar>(
    point: &ThetaPoint<T>,
    inner_step: T,
    outer_step: T,
) -> Result<DenseCurvature<T>> {
    if point.n() > DENSE_PATH_MAX_N {
        return Err(Error::DenseCurvatureTooLarge {
            n: point.n(),
            max: DENSE_PATH_MAX_N,
        });
    }
    validate_fd_step(point, inner_step)?;
    validate_fd_step(point, outer_step)?;
    let coords = point.coords();
    let dim = coords.len();
    let two_h = T::of(2.0) * outer_step;

    // dgamma[c] = d Gamma / d x_c, each a flattened dim^3 array.
    let mut dgamma = Vec::with_capacity(dim);
    for c in 0..dim {
        let mut plus = coords.clone();
        plus[c] = plus[c] + outer_step;
        let mut minus = coords.clone();
        minus[c] = minus[c] - outer_step;
        let gp = dense_fd_christoffel(&plus, inner_step)?;
        let gm = dense_fd_christoffel(&minus, inner_step)?;
        let d: Vec<T> = gp
            .iter()
            .zip(gm.iter())
            .map(|(&p, &m)| (p - m) / two_h)
            .collect();
        dgamma.push(d);
    }
    let gamma = dense_fd_christoffel(&coords, inner_step)?;
    let gm = |v: &[T], a: usize, b: usize, c: usize| v[(a * dim + b) * dim + c];

    // R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
    //           + sum_e (Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb})
    let mut riemann_up = vec![T::zero(); dim * dim * dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                for d in 0..dim {
                    let mut r = gm(&dgamma[c], a, d, b) - gm(&dgamma[d], a, c, b);
                    for e in 0..dim {
                        r = r + gm(&gamma, a, c, e) * gm(&gamma, e, d, b)
                            - gm(&gamma, a, d, e) * gm(&gamma, e, c, b);
                    }
                    riemann_up[((a * dim + b) * dim + c) * dim + d] = r;
                }
            }
        }
    }

    let g = dense_metric_coords(&coords)?;
    let mut riemann_down = vec![T::zero(); dim * dim * dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                for d in 0..dim {
                    let mut r = T::zero();
                    for e in 0..dim {
                        r = r + g[a][e] * riemann_up[((e * dim + b) * dim + c) * dim + d];
                    }
                    riemann_down[((a * dim + b) * dim + c) * dim + d] = r;
                }
            }
        }
    }

    // Ricci: R_{bd} = R^a_{bad}; scalar via inverse metric.
    let ginv = invert_dense(&g)?;
    let mut scalar = T::zero();
    for b in 0..dim {
        for d in 0..dim {
            let mut ricci_bd = T::zero();
            for a in 0..dim {
                ricci_bd = ricci_bd + riemann_up[((a * dim + b) * dim + a) * dim + d];
            }
            scalar = scalar + ginv[b][d] * ricci_bd;
        }
    }

    Ok(DenseCurvature {
        dim,
        metric: g,
        riemann_up,
        riemann_down,
        ricci_scalar: scalar,
    })
}

/// Adaptive Simpson quadrature with relative error control; the generic
/// 1-D integral oracle used by the volume cross-checks.
pub fn adaptive_simpson<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T, rel_tol: T) -> T {
    fn simpson<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, fa: T, b: T, fb: T) -> (T, T, T) {
        let m = (a + b) / T::of(2.0);
        let fm = f(m);
        let s = (b - a) / T::of(6.0) * (fa + T::of(4.0) * fm + fb);
        (m, fm, s)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<T: Scalar, F: Fn(T) -> T>(
        f: &F,
        a: T,
        fa: T,
        b: T,
        fb: T,
        m: T,
        fm: T,
        whole: T,
        tol: T,
        depth: usize,
    ) -> T {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= T::of(15.0) * tol {
            return left + right + delta / T::of(15.0);
        }
        let half_tol = tol / T::of(2.0);
        recurse(f, a, fa, m, fm, lm, flm, left, half_tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, half_tol, depth - 1)
    }
    if a == b {
        return T::zero();
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    let tol = rel_tol * whole.abs().max(T::one() * T::of(1e-300));
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{christoffel_at, metric_at, ricci_scalar_at};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn point(n: usize, mu: f64, sigma: f64) -> ThetaPoint<f64> {
        ThetaPoint::uniform(n, mu, sigma).unwrap()
    }

    #[test]
    fn gauss_hermite_rule_basic_moments() {
        let (nodes, weights) = gauss_hermite_rule::<f64>(40).unwrap();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let m0: f64 = weights.iter().sum();
        assert!((m0 - sqrt_pi).abs() < 1e-12);
        let m2: f64 = nodes.iter().zip(&weights).map(|(&t, &w)| w * t * t).sum();
        assert!((m2 - sqrt_pi / 2.0).abs() < 1e-12);
        let m4: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&t, &w)| w * t.powi(4))
            .sum();
        assert!((m4 - 0.75 * sqrt_pi).abs() < 1e-12);
        // Nodes are symmetric about zero.
        for (lo, hi) in nodes.iter().zip(nodes.iter().rev()) {
            assert!((lo + hi).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_hermite_exact_for_even_monomials() {
        // n nodes integrate polynomials up to degree 2n - 1 exactly:
        // integral of t^{2k} e^{-t^2} is sqrt(pi) (2k-1)!! / 2^k.
        let sqrt_pi = std::f64::consts::PI.sqrt();
        for n in [2usize, 3, 5, 8, 13, 21, 40, 64] {
            let (nodes, weights) = gauss_hermite_rule::<f64>(n).unwrap();
            let mut expect = sqrt_pi;
            for k in 0..n {
                if 2 * k + 1 > 2 * n - 1 {
                    break;
                }
                let got: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&t, &w)| w * t.powi(2 * k as i32))
                    .sum();
                assert!(
                    ((got - expect) / expect).abs() < 1e-12,
                    "n={n} k={k}: {got} vs {expect}"
                );
                expect *= (2 * k + 1) as f64 / 2.0;
            }
        }
    }

    #[test]
    fn fisher_quadrature_matches_closed_form() {
        let p = point(1, 0.0, 1.0);
        let est = fisher_metric_quadrature(&p, &QuadratureSpec::gauss_hermite(40)).unwrap();
        assert!((est[0].g_mu_mu - 1.0).abs() < 1e-10);
        assert!((est[0].g_sigma_sigma - 2.0).abs() < 1e-10);

        let p2 = point(1, 5.0, 0.5);
        let est2 = fisher_metric_quadrature(&p2, &QuadratureSpec::gauss_hermite(40)).unwrap();
        assert!((est2[0].g_mu_mu - 4.0).abs() < 1e-10);
        assert!((est2[0].g_sigma_sigma - 8.0).abs() < 1e-10);
    }

    #[test]
    fn fisher_quadrature_random_points_within_1e10() {
        let mut rng = StdRng::seed_from_u64(11);
        let spec = QuadratureSpec::gauss_hermite(40);
        for _ in 0..100 {
            let sigma = rng.gen_range(0.1..10.0);
            let mu = rng.gen_range(-20.0..20.0);
            let p = point(1, mu, sigma);
            let est = fisher_metric_quadrature(&p, &spec).unwrap();
            let g = metric_at(&p);
            let rel_mm = ((est[0].g_mu_mu - g[0].g_mu_mu) / g[0].g_mu_mu).abs();
            let rel_ss = ((est[0].g_sigma_sigma - g[0].g_sigma_sigma) / g[0].g_sigma_sigma).abs();
            assert!(rel_mm < 1e-10 && rel_ss < 1e-10, "sigma={sigma}");
        }
    }

    #[test]
    fn fisher_offdiag_is_zero() {
        let p = point(2, 1.5, 0.7);
        for v in fisher_offdiag_quadrature(&p, 40).unwrap() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn fisher_monte_carlo_within_three_std_errors() {
        let p = point(1, 0.0, 1.0);
        let spec = QuadratureSpec::monte_carlo(1_000_000, 42);
        let est = fisher_metric_estimates(&p, &spec).unwrap();
        for e in est {
            assert!((e.metric.g_mu_mu - 1.0).abs() <= 3.0 * e.std_error_mu_mu);
            assert!((e.metric.g_sigma_sigma - 2.0).abs() <= 3.0 * e.std_error_sigma_sigma);
            assert!(e.std_error_mu_mu > 0.0);
        }
    }

    #[test]
    fn fisher_monte_carlo_reports_non_convergence() {
        let p = point(1, 0.0, 1.0);
        let mut spec = QuadratureSpec::monte_carlo(50, 1);
        spec.mc_rel_error_threshold = 1e-4;
        assert!(matches!(
            fisher_metric_estimates(&p, &spec),
            Err(Error::QuadratureNotConverged { .. })
        ));
    }

    #[test]
    fn fd_christoffel_reference_values() {
        let p = point(1, 0.0, 2.0);
        let c = fd_christoffel(&p, 1e-5).unwrap();
        assert!((c.blocks[0].gamma_mu_mu_sigma - (-0.5)).abs() < 1e-7);
        assert!((c.blocks[0].gamma_sigma_mu_mu - 0.25).abs() < 1e-7);
        assert!((c.blocks[0].gamma_sigma_sigma_sigma - (-0.5)).abs() < 1e-7);

        let p1 = point(1, 0.0, 1.0);
        let c1 = fd_christoffel(&p1, 1e-5).unwrap();
        assert!((c1.blocks[0].gamma_mu_mu_sigma - (-1.0)).abs() < 1e-7);
        assert!((c1.blocks[0].gamma_sigma_mu_mu - 0.5).abs() < 1e-7);
        assert!((c1.blocks[0].gamma_sigma_sigma_sigma - (-1.0)).abs() < 1e-7);
    }

    #[test]
    fn fd_christoffel_independent_of_mu_shift() {
        let p = point(1, 0.4, 1.3);
        let shifted = point(1, 3.4, 1.3);
        let a = fd_christoffel(&p, 1e-5).unwrap();
        let b = fd_christoffel(&shifted, 1e-5).unwrap();
        assert!((a.blocks[0].gamma_mu_mu_sigma - b.blocks[0].gamma_mu_mu_sigma).abs() < 1e-12);
        assert!((a.blocks[0].gamma_sigma_mu_mu - b.blocks[0].gamma_sigma_mu_mu).abs() < 1e-12);
        assert!(
            (a.blocks[0].gamma_sigma_sigma_sigma - b.blocks[0].gamma_sigma_sigma_sigma).abs()
                < 1e-12
        );
    }

    #[test]
    fn fd_christoffel_untracked_components_vanish() {
        let p = point(1, -1.0, 0.8);
        let full = fd_christoffel_block_full(&p, 0, 1e-5).unwrap();
        let closed = christoffel_at(&p);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let expect = closed.blocks[0].component(a, b, c);
                    assert!(
                        (full[a][b][c] - expect).abs() < 1e-7,
                        "Gamma^{a}_({b}{c}) fd {} vs closed {expect}",
                        full[a][b][c]
                    );
                }
            }
        }
    }

    #[test]
    fn fd_step_validation() {
        let p = point(1, 0.0, 1.0);
        assert!(matches!(
            fd_christoffel(&p, 0.2),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(fd_christoffel(&p, -1e-5).is_err());
    }

    #[test]
    fn fd_ricci_scalar_matches_closed_form() {
        let mut rng = StdRng::seed_from_u64(3);
        for n in [1usize, 3] {
            let pairs: Vec<(f64, f64)> = (0..3 * n)
                .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(0.5..3.0)))
                .collect();
            let p = ThetaPoint::new(pairs).unwrap();
            let r = fd_ricci_scalar(&p, 1e-4).unwrap();
            let expect = -3.0 * n as f64;
            assert!(
                ((r - expect) / expect).abs() < 1e-4,
                "N={n}: fd {r} vs {expect}"
            );
            assert_eq!(ricci_scalar_at(&p), expect);
        }
    }

    #[test]
    fn fd_ricci_second_order_convergence() {
        let p = point(1, 0.0, 0.7);
        let e1 = (fd_ricci_scalar(&p, 2e-3).unwrap() + 3.0).abs();
        let e2 = (fd_ricci_scalar(&p, 1e-3).unwrap() + 3.0).abs();
        let e3 = (fd_ricci_scalar(&p, 5e-4).unwrap() + 3.0).abs();
        let order12 = (e1 / e2).log2();
        let order23 = (e2 / e3).log2();
        assert!(order12 >= 1.9, "observed order {order12}");
        assert!(order23 >= 1.9, "observed order {order23}");
    }

    #[test]
    fn dense_curvature_identities_and_sectional() {
        let p: ThetaPoint<f64> =
            ThetaPoint::new(vec![(0.3, 1.1), (-0.7, 0.8), (1.0, 1.9)]).unwrap();
        let dense = dense_fd_curvature(&p, 1e-5, 1e-4).unwrap();
        assert!(dense.max_antisymmetry_violation() < 1e-6);
        assert!(dense.max_first_bianchi_violation() < 1e-6);
        assert!((dense.ricci_scalar + 3.0).abs() < 1e-4);
        // In-block planes at -1/2, cross-block planes flat.
        for b in 0..3 {
            let k = dense.sectional(2 * b, 2 * b + 1).unwrap();
            assert!((k + 0.5).abs() < 1e-5, "in-block K = {k}");
        }
        for &(i, j) in &[(0usize, 2usize), (0, 3), (1, 2), (1, 4), (3, 4)] {
            let k = dense.sectional(i, j).unwrap();
            assert!(k.abs() < 1e-5, "cross-block K({i},{j}) = {k}");
        }
    }

    #[test]
    fn dense_curvature_rejects_large_n() {
        let p = point(3, 0.0, 1.0);
        assert!(matches!(
            dense_fd_curvature(&p, 1e-5, 1e-4),
            Err(Error::DenseCurvatureTooLarge { n: 3, max: 2 })
        ));
    }

    #[test]
    fn adaptive_simpson_known_integrals() {
        let v = adaptive_simpson(&|x: f64| x * x, 0.0, 1.0, 1e-12);
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        let w = adaptive_simpson(&|x: f64| x.exp(), 0.0, 2.0, 1e-12);
        assert!((w - (2.0f64.exp() - 1.0)).abs() < 1e-11);
        // The volume-element integrand sqrt(2)/sigma^2 over [1, 2].
        let u = adaptive_simpson(&|s: f64| 2.0f64.sqrt() / (s * s), 1.0, 2.0, 1e-12);
        assert!((u - 2.0f64.sqrt() * 0.5).abs() < 1e-12);
    }
}
