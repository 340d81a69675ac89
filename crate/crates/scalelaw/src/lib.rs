//! Scaling-law toolkit for generalization error.
//!
//! Measured error tables over model size, dataset size, and pruning density
//! go in; fitted landscape forms, cross-validated fit quality, extrapolation
//! reports, and design answers (largest useful model, cheapest configuration
//! on an error contour, minimal parameters at a target error) come out.
//!
//! The crate is organized around six concerns:
//!
//! * [`forms`]: the landscape functions themselves and their validity checks;
//! * [`fit`]: divergence objective, multi-start least squares, cross-validation;
//! * [`extrapolate`]: fit-small/predict-large protocols over grid corners;
//! * [`design`]: closed-form and search-based design answers;
//! * [`synth`]: seeded synthetic landscape generator and stability experiment;
//! * [`io`] and [`presets`]: CSV/JSON interchange and published parameter sets.
//!
//! Heavy loops parallelize through rayon when the `parallel` feature (on by
//! default) is enabled; results are identical with it off.

pub mod design;
pub mod error;
pub mod exec;
pub mod extrapolate;
pub mod fit;
pub mod forms;
pub mod io;
pub mod optim;
pub mod presets;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use forms::{
    eval_dense_adapted_density, eval_dense_core, eval_dense_envelope, eval_prune_joint,
    eval_prune_joint_at_mstar, eval_prune_lower_transition, eval_prune_single,
    eval_prune_single_complex, invariant_mstar, irreducible_error, validate_criteria,
    CriteriaReport, DenseMeasurement, DenseParams, Eps0Mode, PruneJointParams, PruneMeasurement,
    PruneParams,
};
