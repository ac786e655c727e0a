//! Kernel regression on functional covariates observed through finitely
//! many measurements.
//!
//! Curves live on a dense reference grid over [0, 1]; norms and inner
//! products use the trapezoid rule on that grid. Three pseudometrics d_p
//! stand in for the L² distance when only p pieces of information about a
//! curve are available: values at p equispaced points, a kernel smoother of
//! those values, or the first p Karhunen–Loève scores.
//!
//! ```
//! use std::sync::Arc;
//! use fdreg::{make_uniform_grid, uniform_kernel, predict_full, Dataset, ReferenceCurve};
//!
//! let grid = Arc::new(make_uniform_grid(64).unwrap());
//! let curves: Vec<_> = (0..4)
//!     .map(|k| ReferenceCurve::from_fn(grid.clone(), |t| k as f64 * t).unwrap())
//!     .collect();
//! let data = Dataset::new(curves, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
//! let x = ReferenceCurve::from_fn(grid, |t| 1.1 * t).unwrap();
//! let fit = predict_full(&x, &data, 0.6, &uniform_kernel()).unwrap();
//! assert_eq!(fit.effective_neighbors, 2);
//! ```

pub mod bandwidth;
pub mod curve;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod io;
pub mod kernels;
pub mod kl_basis;
pub mod metrics;

pub use bandwidth::{
    build_plan, cnp_schedule, cnp_schedule_scaled, default_k, empirical_h_star, h_star_neighbors,
    knn_distance, BandwidthPlan, CnpSchedule, VariantKind,
};
pub use curve::{
    h1_norm, inner_product, l2_distance, l2_norm, make_uniform_grid, Dataset, Grid, ReferenceCurve,
    DEFAULT_REFERENCE_INTERVALS,
};
pub use error::{Error, Result};
pub use estimators::{
    kernel_weights, predict_discretized, predict_full, predict_knn, EmbeddedSample, FitResult,
    WeightVector,
};
pub use experiments::{
    besicovitch_probe, consistency_sweep, generate, h2_probe, rate_transfer_check, Eta,
    ProcessKind, ProcessSpec, PseudometricFamily, RegressionSpec, SweepDesign, SweepEstimator,
    SweepResult,
};
pub use kernels::{shifted_linear_kernel, uniform_kernel, validate_regular, KernelName, RegularKernel};
pub use kl_basis::{empirical_basis, scores, tail_sum, EigenBasis, ScoreVector};
pub use metrics::{
    check_basis_conditions, pseudo_distance, reconstruct, BasisFamily, Metric, PseudometricSpec,
};
