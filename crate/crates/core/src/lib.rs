//! Constrained space-filling experimental designs built with privacy sets.
//!
//! Hard constraints are expressed as privacy sets (classical, Latin
//! hypercube, Bridge, interval) on a gridded `[-1, 1]^d` region with optional
//! linear constraints. Soft objectives are the D-criterion, the
//! projection-aware average reciprocal distance, or MaxPro. The search
//! combines greedy augmentation with mutations that temporarily break
//! privacy.

pub mod config;
pub mod criteria;
pub mod error;
pub mod grid;
pub mod io;
pub mod oracle;
pub mod plot;
pub mod privacy;
pub mod psa;

pub use config::ExperimentConfig;
pub use criteria::{CriterionSpec, ModelSpec};
pub use error::{Error, Result};
pub use grid::{GridPoint, GridSpace, LinearConstraints};
pub use privacy::{Design, PrivacyKind, PrivacySpec};
pub use psa::{psa_bench, psa_run, PsaConfig, RunTrace};
