//! Reference measures, transition kernels, the closed-form catalog, the
//! h-transform, and residual checks of the standing hypotheses.

pub mod catalog;
pub mod eigen;
pub mod kernel;
pub mod measure;
pub mod residuals;

pub use catalog::{
    bessel3_kernel, constant_drift_kernel, flipped_bessel_kernel, flipped_bessel_zero_limit, gaussian_kernel,
    parse_kernel, tanh_drift_kernel, KernelId,
};
pub use eigen::Eigenpair;
pub use kernel::{h_transform, FlipVariant, Side, TransitionKernel};
pub use measure::{ReferenceMeasure, ScalarFn, Support};
pub use residuals::{
    chapman_kolmogorov_residual, duality_residual, eigen_residual, generator_drift_residual, local_eigen_residual,
    normalization_residual, psi_from_drift, GeneratorCheck, TestFunction,
};
