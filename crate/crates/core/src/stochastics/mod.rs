//! Random streams, sampling and the estimators shared by every experiment.

pub mod distribution;
pub mod montecarlo;
pub mod quadrature;
pub mod reduce;
pub mod rng;
pub mod stats;
pub mod testfn;

pub use distribution::DistributionSpec;
pub use montecarlo::{column, replicate};
pub use reduce::{pairwise_sum, pairwise_sum_by, pairwise_sum_complex};
pub use rng::{derive_stream, RandomStream};
pub use testfn::{Scalar, TestFunction};
pub use stats::{
    complex_mean_with_se, covariance, covariance_with_se, empirical_cf, empirical_cf_scalar,
    empirical_cf_with_se, extrapolate, ks_critical_95, ks_distance, ks_two_sample, mean,
    mean_with_se, normal_cdf, variance_with_se, ComplexEstimate, EstimateWithError, PointSet,
};
