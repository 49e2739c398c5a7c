//! Geometry, dynamics and entropy of the product-Gaussian statistical
//! manifold.
//!
//! A system of `3N` independent Gaussian degrees of freedom, each known
//! only through its mean and standard deviation, defines a `6N`-dimensional
//! manifold of macrostates carrying the Fisher–Rao metric. This crate
//! implements its closed-form geometry and the three instability
//! indicators it supports:
//!
//! * constant negative Ricci scalar `-3N` with non-constant sectional
//!   curvature ([`manifold`]);
//! * linear growth of the information-geometric entropy, slope
//!   `3 N rate` ([`entropy`]);
//! * exponential divergence of the geodesic-deviation intensity at the
//!   geodesic rate ([`dynamics`]).
//!
//! Every closed form is backed by a structurally independent numeric
//! route in [`oracle`], and [`maxent`] demonstrates the inference step
//! that produces the Gaussian model in the first place.
//!
//! All numerics are generic over the [`scalar::Scalar`] float type;
//! the `*64` aliases at the crate root fix the `f64` configuration used
//! by the CLI and the acceptance suite.

// Negated comparisons (`!(x > 0)`) reject NaN along with the out-of-range
// values; index loops in the tensor assemblies mirror the index notation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod manifold;
pub mod maxent;
pub mod ode;
pub mod oracle;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases for the common configuration.
pub type ThetaPoint64 = manifold::ThetaPoint<f64>;
pub type TangentVector64 = manifold::TangentVector<f64>;
pub type BlockMetric64 = manifold::BlockMetric<f64>;
pub type ChristoffelSet64 = manifold::ChristoffelSet<f64>;
pub type CurvatureReport64 = manifold::CurvatureReport<f64>;
pub type GeodesicParams64 = manifold::GeodesicParams<f64>;
pub type GeodesicTrajectory64 = dynamics::GeodesicTrajectory<f64>;
pub type JacobiTrajectory64 = dynamics::JacobiTrajectory<f64>;
pub type VolumeSeries64 = entropy::VolumeSeries<f64>;
pub type DiscreteDistribution64 = maxent::DiscreteDistribution<f64>;

#[cfg(test)]
mod tests {
    use super::manifold::{metric_at, ricci_scalar_at, ThetaPoint};

    // The geometry is scalar-generic; exercise the f32 instantiation once.
    #[test]
    fn f32_instantiation_works() {
        let p = ThetaPoint::<f32>::uniform(1, 0.0, 2.0).unwrap();
        let g = metric_at(&p);
        assert_eq!(g[0].g_mu_mu, 0.25f32);
        assert_eq!(g[0].g_sigma_sigma, 0.5f32);
        assert_eq!(ricci_scalar_at(&p), -3.0f32);
    }
}
