//! Native-rank detection metrics and energy/RMSD correlation.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{self, GeometryError};
use crate::pdbio::DecoyEnsemble;
use crate::potential::{energy, featurize, PotentialError, PotentialParams};

/// Energies closer than this are ties; a tied decoy outranks the native.
pub const TIE_TOL: f64 = 1e-9;

/// Width of a correlation histogram bin over [-1, 1].
pub const HIST_BIN_WIDTH: f64 = 0.1;
pub const HIST_BINS: usize = 20;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} energies vs {1} distances")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("no ensembles to evaluate")]
    NoEnsembles,
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv output failed for {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoyScore {
    pub decoy_id: String,
    pub rmsd: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProteinEval {
    pub protein_id: String,
    pub native_rank: usize,
    pub native_energy: f64,
    /// RMSD of the lowest-energy decoy (first one on exact ties).
    pub best_decoy_rmsd: f64,
    /// Energy/RMSD correlation over the decoys; `None` when either side has
    /// zero variance.
    pub correlation: Option<f64>,
    /// Decoys within [`TIE_TOL`] of the native energy (counted in the rank).
    pub n_ties: usize,
    pub decoys: Vec<DecoyScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub n_proteins: usize,
    pub n_firsts: usize,
    pub average_rank: f64,
    pub average_best_decoy_rmsd: f64,
    pub n_undefined_correlations: usize,
}

/// Sample Pearson correlation in the `1/(N-1)` form. `Ok(None)` marks zero
/// variance on either side.
pub fn correlation(energies: &[f64], distances: &[f64]) -> Result<Option<f64>, EvalError> {
    if energies.len() != distances.len() {
        return Err(EvalError::LengthMismatch(energies.len(), distances.len()));
    }
    let n = energies.len();
    if n < 2 {
        return Err(EvalError::TooFewPoints(n));
    }
    let nf = n as f64;
    let me = energies.iter().sum::<f64>() / nf;
    let md = distances.iter().sum::<f64>() / nf;
    let (mut see, mut sdd, mut sed) = (0.0, 0.0, 0.0);
    for (e, d) in energies.iter().zip(distances) {
        let (a, b) = (e - me, d - md);
        see += a * a;
        sdd += b * b;
        sed += a * b;
    }
    let se = (see / (nf - 1.0)).sqrt();
    let sd = (sdd / (nf - 1.0)).sqrt();
    if se == 0.0 || sd == 0.0 {
        return Ok(None);
    }
    let r = sed / (nf - 1.0) / (se * sd);
    Ok(Some(r.clamp(-1.0, 1.0)))
}

/// `1 + #{decoys with E_decoy < E_native + TIE_TOL}` and the tie count.
pub fn rank_from_energies(native: f64, decoys: &[f64]) -> (usize, usize) {
    let mut rank = 1;
    let mut ties = 0;
    for &e in decoys {
        if e < native - TIE_TOL {
            rank += 1;
        } else if (e - native).abs() <= TIE_TOL {
            rank += 1;
            ties += 1;
        }
    }
    (rank, ties)
}

pub fn rank_native(ensemble: &DecoyEnsemble, params: &PotentialParams) -> Result<ProteinEval, EvalError> {
    let score = |t| energy(&featurize(t, &params.basis, params.min_separation), params);
    let native_energy = score(&ensemble.native)?;
    let mut decoys = Vec::with_capacity(ensemble.decoys.len());
    for d in &ensemble.decoys {
        decoys.push(DecoyScore {
            decoy_id: d.id.clone(),
            rmsd: geometry::rmsd(&ensemble.native, &d.trace)?,
            energy: score(&d.trace)?,
        });
    }
    let energies: Vec<f64> = decoys.iter().map(|d| d.energy).collect();
    let rmsds: Vec<f64> = decoys.iter().map(|d| d.rmsd).collect();
    let (native_rank, n_ties) = rank_from_energies(native_energy, &energies);
    if n_ties > 0 {
        log::info!("{}: {} decoy(s) tie the native energy", ensemble.protein_id, n_ties);
    }
    let best = decoys
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.energy.total_cmp(&b.1.energy).then(a.0.cmp(&b.0)))
        .map(|(_, d)| d.rmsd)
        .unwrap_or(0.0);
    let correlation = if decoys.len() >= 2 {
        correlation(&energies, &rmsds)?
    } else {
        None
    };
    Ok(ProteinEval {
        protein_id: ensemble.protein_id.clone(),
        native_rank,
        native_energy,
        best_decoy_rmsd: best,
        correlation,
        n_ties,
        decoys,
    })
}

pub fn summarize(evals: &[ProteinEval]) -> EvalSummary {
    let n = evals.len();
    let nf = n.max(1) as f64;
    EvalSummary {
        n_proteins: n,
        n_firsts: evals.iter().filter(|e| e.native_rank == 1).count(),
        average_rank: evals.iter().map(|e| e.native_rank as f64).sum::<f64>() / nf,
        average_best_decoy_rmsd: evals.iter().map(|e| e.best_decoy_rmsd).sum::<f64>() / nf,
        n_undefined_correlations: evals.iter().filter(|e| e.correlation.is_none()).count(),
    }
}

/// Bin counts over [-1, 1] in steps of 0.1; 1.0 lands in the last bin.
pub fn correlation_histogram(evals: &[ProteinEval]) -> Vec<(f64, f64, usize)> {
    let mut counts = [0usize; HIST_BINS];
    for c in evals.iter().filter_map(|e| e.correlation) {
        let b = ((c + 1.0) / HIST_BIN_WIDTH).floor() as isize;
        counts[b.clamp(0, HIST_BINS as isize - 1) as usize] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(b, &n)| {
            let lo = -1.0 + b as f64 * HIST_BIN_WIDTH;
            let hi = -1.0 + (b + 1) as f64 * HIST_BIN_WIDTH;
            ((lo * 10.0).round() / 10.0, (hi * 10.0).round() / 10.0, n)
        })
        .collect()
}

/// Evaluates every ensemble in parallel; results keep input order.
pub fn evaluate_set(
    ensembles: &[DecoyEnsemble],
    params: &PotentialParams,
) -> Result<(EvalSummary, Vec<ProteinEval>), EvalError> {
    if ensembles.is_empty() {
        return Err(EvalError::NoEnsembles);
    }
    let evals = ensembles
        .par_iter()
        .map(|e| rank_native(e, params))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((summarize(&evals), evals))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, EvalError> {
    csv::Writer::from_path(path).map_err(|source| EvalError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |c| format!("{c}"))
}

/// Writes `per_protein.csv`, `corr_hist.csv` and `scatter/<id>.csv` under
/// `dir`. An undefined correlation is written as `undefined`.
pub fn write_outputs(dir: &Path, evals: &[ProteinEval]) -> Result<(), EvalError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| EvalError::Io { path, source }
    };
    let scatter = dir.join("scatter");
    fs::create_dir_all(&scatter).map_err(io_err(&scatter))?;
    let csv_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| EvalError::Csv { path, source }
    };

    let path = dir.join("per_protein.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["protein_id", "native_rank", "native_energy", "best_decoy_rmsd", "correlation"])
        .map_err(csv_err(&path))?;
    for e in evals {
        w.write_record([
            e.protein_id.clone(),
            e.native_rank.to_string(),
            format!("{}", e.native_energy),
            format!("{}", e.best_decoy_rmsd),
            fmt_opt(e.correlation),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("corr_hist.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["bin_low", "bin_high", "count"]).map_err(csv_err(&path))?;
    for (lo, hi, n) in correlation_histogram(evals) {
        w.write_record([format!("{lo:.1}"), format!("{hi:.1}"), n.to_string()])
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    for e in evals {
        let path = scatter.join(format!("{}.csv", e.protein_id));
        let mut w = csv_writer(&path)?;
        w.write_record(["decoy_id", "rmsd", "energy"]).map_err(csv_err(&path))?;
        for d in &e.decoys {
            w.write_record([d.decoy_id.clone(), format!("{}", d.rmsd), format!("{}", d.energy)])
                .map_err(csv_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}
