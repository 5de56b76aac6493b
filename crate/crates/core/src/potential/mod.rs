//! B-spline distance potential: basis functions, residue-pair indexing,
//! structure featurization and energy evaluation.

mod bspline;
mod features;
mod pairs;
mod params;

pub use bspline::{bspline_eval, SplineBasisConfig};
pub use features::{energy, featurize, FeatureVector};
pub use pairs::{pair_from_index, pair_index, N_PAIRS};
pub use params::{ParamsFormatError, PotentialParams, SchemeTag, N_PARAMS};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("basis index {0} out of range 1..={1}")]
    BadBasisIndex(usize, usize),
    #[error("feature/parameter configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("unknown residue type '{0}'")]
    UnknownResidue(String),
}
