//! Implementability of joint distributions over sequential outcomes under
//! restricted information.
//!
//! A process generates outcomes `x_1, ..., x_n`; stage `k` only sees an
//! information label `y_k = f_k(x_1, ..., x_{k-1})`. This crate decides
//! whether a target distribution can be produced by classical local rules
//! `P_k(x_k | y_k)`, fits the nearest such model when it cannot, and builds
//! and checks quantum implementations in which every stage measures its own
//! share of a separable state with a measurement chosen from `y_k` alone.

pub mod classical;
pub mod constructions;
pub mod distribution;
mod error;
pub mod fit;
pub mod linalg;
pub mod process;
pub mod quantum;

pub use classical::{
    behavioral_from_joint, check_classical_implementable, conditionals, eval_classical, eval_latent, ConditionalRow,
    ImplementabilityReport, LatentModel, LocalModel, Witness,
};
pub use constructions::{
    build_diag_universal, build_thm1, build_thm2, separable_state, verify_model, worked_example, Construction,
    ExampleBundle, SeparableDecomposition, Thm2Construction, Thm2Spec, VerificationReport, WorkedExample,
};
pub use distribution::JointDistribution;
pub use error::{Error, Result};
pub use fit::{fit_local_model, FitReport, Metric, SearchParams};
pub use linalg::ComplexMatrix;
pub use num_complex::Complex64;
pub use process::{InfoGenerator, InfoMap, ProcessSpec};
pub use quantum::{
    born_joint, commutation_witness, discord_one_sided, validate_povm, validate_state, DensityMatrix, DiscordReport,
    Povm, QuantumModel, Side,
};
