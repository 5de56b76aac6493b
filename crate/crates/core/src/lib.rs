//! Distance-dependent knowledge-based protein potentials.
//!
//! Structures are reduced to Cα traces, pairwise Cα–Cα distances are expanded
//! in eight uniform cubic B-spline basis functions per residue-pair type, and
//! the resulting 1680 coefficients are fit by linear programming so that
//! native structures score lower than their decoys.
//!
//! Module map:
//!
//! - [`pdbio`]: PDB ingestion, Cα traces and decoy ensembles
//! - [`geometry`]: Kabsch superposition and RMSD
//! - [`potential`]: B-spline basis, pair indexing, featurization, energy
//! - [`lp`]: bounded-variable primal simplex
//! - [`training`]: LP assembly for the two training schemes
//! - [`evaluation`]: native rank, energy/RMSD correlation, summaries
//! - [`synthgen`]: seeded synthetic native/decoy ensembles

pub mod evaluation;
pub mod geometry;
pub mod lp;
pub mod pdbio;
pub mod potential;
pub mod residue;
pub mod seed;
pub mod synthgen;
pub mod training;

pub use evaluation::{EvalSummary, ProteinEval};
pub use geometry::Superposition;
pub use pdbio::{CaTrace, DecoyEnsemble};
pub use potential::{FeatureVector, PotentialParams, SplineBasisConfig};
pub use residue::AminoAcid;
pub use training::{Scheme, TrainingConfig};
