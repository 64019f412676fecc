//! Kernel representation similarity (HSIC, CKA) and the large-bandwidth
//! behaviour of Gaussian RBF CKA.
//!
//! * [`kernels`]: distances, Gram matrices, centering.
//! * [`alignment`]: HSIC, CKA, non-centered alignment.
//! * [`asymptotics`]: bandwidth sweeps, tail slope, convergence onset,
//!   representation eccentricity.
//! * [`synth`]: seeded synthetic representation pairs.
//! * [`stats`]: cross-run summaries.

pub mod alignment;
pub mod asymptotics;
pub mod error;
pub mod exec;
pub mod kernels;
pub mod matrix;
pub mod numeric;
pub mod stats;
pub mod synth;

pub use alignment::{cka, hsic, non_centered_alignment, AlignmentKind, AlignmentValue};
pub use asymptotics::{
    convergence_onset, eccentricity, predicted_asymptote, sweep, tail_slope, Anchor, Arrangement, CurvePoint,
    GeometryReport, Onset, SweepConfig, SweepPoint, SweepResult,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use kernels::{
    center, gram, pairwise_distances, Centering, DistanceMatrix, GramMatrix, Kernel, KernelSpec, MedianConvention,
};
pub use matrix::FeatureMatrix;
pub use stats::{summarize, RunSummary};
pub use synth::{generate_pair, Nonlinearity, SynthSpec};
