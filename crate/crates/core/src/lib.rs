//! Exact discrete calculus on the hypercube {-1,1}^n for vector-valued
//! functions, with numerical verification of the dimension-free Pisier-type
//! inequalities driven by biased sign vectors, the Enflo/Rademacher type
//! bridge, and the cotype integral identities; plus extremal search for the
//! best constants at desk scale.
//!
//! Everything exact is enumerated with fixed-order pairwise reductions, so
//! results are bit-reproducible at any thread count; everything sampled is
//! driven by counter-based generators keyed on (seed, stream, counter).

pub mod clt;
pub mod cube;
pub mod error;
pub mod lab;
pub mod measure;
pub mod norms;
pub mod rng;
pub mod search;
pub mod stats;
pub mod sum;

pub use cube::{
    biased_expectation, discrete_derivative, expectation, heat_semigroup, inverse_walsh,
    kernel_gradient, kernel_semigroup, laplacian, walsh_transform, CubeFunction, CubePoint,
    WalshSpectrum, MAX_JOINT_N, MAX_SINGLE_N, MAX_TRIPLE_N,
};
pub use clt::{CltRow, GaussianPisierQuery, LiftedCubeFunction, SmoothFunction};
pub use error::{Error, Result};
pub use lab::{
    ConvexGauge, EvalMode, InequalityReport, PointwiseResidual, RandomFunctionParams,
    ReportParams, SymmetrizationChain, Tolerances,
};
pub use measure::{BiasedCoordinateLaw, MuQuadrature};
pub use norms::{MomentQuery, NormSpec};
pub use search::{
    Objective, RestartTrace, SearchArgument, SearchConfig, SearchResult, StepRule,
};
