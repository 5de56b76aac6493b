//! Seeded synthetic native/decoy ensembles.
//!
//! Natives are self-avoiding random Cα chains with a fixed 3.8 Å virtual
//! bond and uniformly random residue types; decoys add isotropic Gaussian
//! noise to the native coordinates at a per-decoy scale drawn from
//! `perturbation_sigmas`. Protein `k` draws only from its own derived stream,
//! so output is identical regardless of thread count.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::pdbio::{CaTrace, Decoy, DecoyEnsemble, PdbError, Residue};
use crate::residue::AminoAcid;
use crate::seed::stream_rng;

pub const BOND_LENGTH: f64 = 3.8;
/// No two residues of a native chain come closer than this.
pub const MIN_PAIR_DISTANCE: f64 = 2.2;

const MAX_STEP_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_proteins: usize,
    pub residues_per_protein: usize,
    pub decoys_per_protein: usize,
    pub perturbation_sigmas: Vec<f64>,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_proteins: 30,
            residues_per_protein: 150,
            decoys_per_protein: 40,
            perturbation_sigmas: vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
            rng_seed: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Trace(#[from] PdbError),
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if self.n_proteins == 0 || self.decoys_per_protein == 0 {
            return bad("protein and decoy counts must be at least 1");
        }
        if self.residues_per_protein < 2 {
            return bad("residues_per_protein must be at least 2");
        }
        if self.perturbation_sigmas.is_empty() {
            return bad("perturbation_sigmas must not be empty");
        }
        if self.perturbation_sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("perturbation sigmas must be positive and finite");
        }
        Ok(())
    }
}

pub fn protein_id(index: usize) -> String {
    format!("syn{:04}", index + 1)
}

fn random_unit<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum()
}

/// Self-avoiding chain by sequential rejection; restarts from scratch when a
/// step cannot be placed.
pub fn random_chain<R: Rng>(n: usize, rng: &mut R) -> Vec<[f64; 3]> {
    let min2 = MIN_PAIR_DISTANCE * MIN_PAIR_DISTANCE;
    'restart: loop {
        let mut chain: Vec<[f64; 3]> = Vec::with_capacity(n);
        chain.push([0.0; 3]);
        while chain.len() < n {
            let last = *chain.last().expect("chain is non-empty");
            let mut placed = false;
            for _ in 0..MAX_STEP_ATTEMPTS {
                let d = random_unit(rng);
                let cand = [
                    last[0] + BOND_LENGTH * d[0],
                    last[1] + BOND_LENGTH * d[1],
                    last[2] + BOND_LENGTH * d[2],
                ];
                if chain.iter().all(|p| dist2(*p, cand) >= min2) {
                    chain.push(cand);
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'restart;
            }
        }
        return chain;
    }
}

fn generate_one(config: &SynthConfig, index: usize) -> Result<DecoyEnsemble, SynthError> {
    let id = protein_id(index);
    let mut rng = stream_rng(config.rng_seed, "synth-protein", index as u64);
    let types: Vec<AminoAcid> = (0..config.residues_per_protein)
        .map(|_| AminoAcid::ALL[rng.random_range(0..AminoAcid::ALL.len())])
        .collect();
    let chain = random_chain(config.residues_per_protein, &mut rng);
    let residues = types
        .iter()
        .zip(&chain)
        .map(|(&aa, &pos)| Residue { aa, pos })
        .collect();
    let native = CaTrace::new(format!("{id}_native"), residues)?;

    let mut decoys = Vec::with_capacity(config.decoys_per_protein);
    for d in 0..config.decoys_per_protein {
        let sigma = config.perturbation_sigmas[rng.random_range(0..config.perturbation_sigmas.len())];
        let noise = Normal::new(0.0, sigma).expect("sigma validated positive");
        let pos: Vec<[f64; 3]> = chain
            .iter()
            .map(|p| [p[0] + noise.sample(&mut rng), p[1] + noise.sample(&mut rng), p[2] + noise.sample(&mut rng)])
            .collect();
        let decoy_id = format!("decoy{:04}", d + 1);
        let trace = native.with_positions(decoy_id.clone(), &pos)?;
        decoys.push(Decoy {
            id: decoy_id,
            trace,
            reference_rmsd: None,
        });
    }
    Ok(DecoyEnsemble::new(id, native, decoys)?)
}

pub fn generate(config: &SynthConfig) -> Result<Vec<DecoyEnsemble>, SynthError> {
    config.validate()?;
    (0..config.n_proteins)
        .into_par_iter()
        .map(|k| generate_one(config, k))
        .collect()
}
