use super::bspline::{bspline_eval, SplineBasisConfig};
use super::pairs::{pair_index, N_PAIRS};
use super::params::PotentialParams;
use super::PotentialError;
use crate::pdbio::CaTrace;

/// Aggregated basis evaluations of one structure, keyed by the flat
/// parameter index `pair * n_basis + (p - 1)`; entries sorted, no zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    config: SplineBasisConfig,
    min_separation: usize,
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn config(&self) -> &SplineBasisConfig {
        &self.config
    }

    pub fn min_separation(&self) -> usize {
        self.min_separation
    }

    pub fn dim(&self) -> usize {
        N_PAIRS * self.config.n_basis
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry for `pair` and 1-based basis `p`.
    pub fn get(&self, pair: usize, p: usize) -> f64 {
        let key = pair * self.config.n_basis + (p - 1);
        self.entries
            .binary_search_by_key(&key, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        for &(k, x) in &self.entries {
            v[k] = x;
        }
        v
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(k, v)| v * x[k]).sum()
    }

    /// `self - other`, dropping entries whose magnitude is at most `drop_tol`.
    pub fn difference(&self, other: &FeatureVector, drop_tol: f64) -> Vec<(usize, f64)> {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::with_capacity(a.len().max(b.len()));
        while i < a.len() || j < b.len() {
            let (k, v) = match (a.get(i), b.get(j)) {
                (Some(&(ka, va)), Some(&(kb, vb))) if ka == kb => {
                    i += 1;
                    j += 1;
                    (ka, va - vb)
                }
                (Some(&(ka, va)), Some(&(kb, _))) if ka < kb => {
                    i += 1;
                    (ka, va)
                }
                (Some(&(ka, va)), None) => {
                    i += 1;
                    (ka, va)
                }
                (_, Some(&(kb, vb))) => {
                    j += 1;
                    (kb, -vb)
                }
                (None, None) => unreachable!(),
            };
            if v.abs() > drop_tol {
                out.push((k, v));
            }
        }
        out
    }

    pub fn compatible_with(&self, other: &FeatureVector) -> bool {
        self.config == other.config && self.min_separation == other.min_separation
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Sums `B_p(r_ij)` into `(pair_index(aa_i, aa_j), p)` for every residue pair
/// `i < j` with `j - i >= min_separation`.
pub fn featurize(trace: &CaTrace, config: &SplineBasisConfig, min_separation: usize) -> FeatureVector {
    let min_separation = min_separation.max(1);
    let nb = config.n_basis;
    let (lo, hi) = config.domain();
    let mut dense = vec![0.0; N_PAIRS * nb];
    let res = trace.residues();
    for i in 0..res.len() {
        for j in (i + min_separation)..res.len() {
            let r = distance(res[i].pos, res[j].pos);
            if r <= lo || r >= hi {
                continue;
            }
            let base = pair_index(res[i].aa, res[j].aa) * nb;
            for p in config.active_bases(r) {
                dense[base + p - 1] += bspline_eval(p, r, config).expect("active basis in range");
            }
        }
    }
    let entries = dense
        .into_iter()
        .enumerate()
        .filter(|&(_, v)| v != 0.0)
        .collect();
    FeatureVector {
        config: *config,
        min_separation,
        entries,
    }
}

/// Energy of a featurized structure: dot product with the parameter vector.
pub fn energy(features: &FeatureVector, params: &PotentialParams) -> Result<f64, PotentialError> {
    if features.config != params.basis {
        return Err(PotentialError::ConfigMismatch(format!(
            "features use {:?}, parameters use {:?}",
            features.config, params.basis
        )));
    }
    if features.min_separation != params.min_separation {
        return Err(PotentialError::ConfigMismatch(format!(
            "features use min_separation {}, parameters use {}",
            features.min_separation, params.min_separation
        )));
    }
    Ok(features.dot(&params.x))
}
