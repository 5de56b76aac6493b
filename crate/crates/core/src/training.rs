//! LP training of the potential.
//!
//! Every (native, decoy) pair contributes a row on the feature difference
//! `dF = F(decoy) - F(native)`:
//!
//! - margin row: `dF·X + S >= epsilon` (LPKP1 and LPKP2)
//! - distance row: `dF·X <= alpha * rmsd(native, decoy)` (LPKP2 only)
//!
//! with `-x_bound <= X <= x_bound`, `S >= 0` and the objective `min sum S`.
//! One slack is shared by all rows of a protein unless per-decoy slack is
//! requested.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{self, GeometryError};
use crate::lp::{self, LpError, LpInstance, LpStatus, Relation, SolveOptions};
use crate::pdbio::{Decoy, DecoyEnsemble};
use crate::potential::{featurize, PotentialParams, SplineBasisConfig, N_PAIRS};
use crate::seed::{derive_seed, stream_rng};

pub use crate::potential::SchemeTag as Scheme;

/// Feature differences at or below this magnitude count as zero.
pub const DELTA_DROP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlackGranularity {
    PerProtein,
    PerDecoy,
}

/// How the slack enters the margin row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlackSign {
    /// `dF·X + S >= epsilon`: the slack relaxes the margin.
    Relaxing,
    /// `dF·X - S >= epsilon`, as the margin row is sometimes printed.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub scheme: Scheme,
    pub epsilon: f64,
    pub x_bound: f64,
    pub decoys_per_protein: usize,
    pub slack: SlackGranularity,
    pub slack_sign: SlackSign,
    pub alpha: f64,
    pub min_separation: usize,
    pub rng_seed: u64,
    pub basis: SplineBasisConfig,
    /// Recompute decoy RMSDs instead of using values shipped with the set.
    pub recompute_rmsd: bool,
    pub solve: SolveOptions,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            scheme: Scheme::Lpkp1,
            epsilon: 0.01,
            x_bound: 4.0,
            decoys_per_protein: 45,
            slack: SlackGranularity::PerProtein,
            slack_sign: SlackSign::Relaxing,
            alpha: 1.0,
            min_separation: 1,
            rng_seed: 0,
            basis: SplineBasisConfig::default(),
            recompute_rmsd: true,
            solve: SolveOptions::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainingError> {
        let bad = |m: &str| Err(TrainingError::InvalidConfig(m.to_string()));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if !(self.x_bound > 0.0 && self.x_bound.is_finite()) {
            return bad("x_bound must be positive");
        }
        if self.decoys_per_protein == 0 {
            return bad("decoys_per_protein must be at least 1");
        }
        if !self.alpha.is_finite() {
            return bad("alpha must be finite");
        }
        if self.min_separation == 0 {
            return bad("min_separation must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("no ensembles to train on")]
    NoEnsembles,
    #[error("no constraint rows survive (every decoy featurizes like its native)")]
    NoConstraints,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("LP reported infeasible after {iterations} iterations ({rows} rows, {vars} variables)")]
    SolverInfeasible { iterations: usize, rows: usize, vars: usize },
    #[error("LP solve stopped with status {status:?} after {iterations} iterations")]
    SolverFailed { status: LpStatus, iterations: usize },
}

/// One (native, decoy) comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub delta_features: Vec<(usize, f64)>,
    pub rmsd: f64,
    pub protein_index: usize,
    pub decoy_id: String,
}

impl ConstraintRow {
    pub fn energy_gap(&self, x: &[f64]) -> f64 {
        self.delta_features.iter().map(|&(k, v)| v * x[k]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedProtein {
    pub protein_id: String,
    pub n_decoys_used: usize,
    pub rows: Vec<ConstraintRow>,
}

/// RMSD of a decoy to its native, recomputed unless a shipped value is
/// accepted.
pub fn decoy_rmsd(native: &crate::pdbio::CaTrace, decoy: &Decoy, recompute: bool) -> Result<f64, GeometryError> {
    match (recompute, decoy.reference_rmsd) {
        (false, Some(r)) => Ok(r),
        _ => geometry::rmsd(native, &decoy.trace),
    }
}

/// Stratified selection over the RMSD-sorted decoys: the sorted list is cut
/// into `k` contiguous rank strata (boundaries `floor(s*n/k)`) and one decoy
/// is drawn uniformly from each. `rmsds[i]` belongs to `ensemble.decoys[i]`.
/// The result lists the chosen decoys in increasing RMSD order, paired with
/// their RMSDs.
pub fn subsample_by_rmsd(ensemble: &DecoyEnsemble, rmsds: &[f64], k: usize, seed: u64) -> Vec<(Decoy, f64)> {
    let mut order: Vec<usize> = (0..ensemble.decoys.len()).collect();
    order.sort_by(|&a, &b| rmsds[a].total_cmp(&rmsds[b]).then(a.cmp(&b)));
    let n = order.len();
    let picks: Vec<usize> = if n <= k {
        order
    } else {
        let mut rng = stream_rng(seed, "subsample", 0);
        (0..k)
            .map(|s| {
                let lo = s * n / k;
                let hi = (s + 1) * n / k;
                order[rng.random_range(lo..hi)]
            })
            .collect()
    };
    picks
        .into_iter()
        .map(|i| (ensemble.decoys[i].clone(), rmsds[i]))
        .collect()
}

/// Keeps `k` decoys spread over the RMSD range (all of them when fewer
/// exist), deterministically for a given seed.
pub fn subsample_decoys(ensemble: &DecoyEnsemble, k: usize, seed: u64) -> Result<DecoyEnsemble, GeometryError> {
    let rmsds = ensemble
        .decoys
        .iter()
        .map(|d| geometry::rmsd(&ensemble.native, &d.trace))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DecoyEnsemble {
        protein_id: ensemble.protein_id.clone(),
        native: ensemble.native.clone(),
        decoys: subsample_by_rmsd(ensemble, &rmsds, k.max(1), seed)
            .into_iter()
            .map(|(d, _)| d)
            .collect(),
    })
}

fn prepare_one(index: usize, ensemble: &DecoyEnsemble, config: &TrainingConfig) -> Result<PreparedProtein, GeometryError> {
    let rmsds = ensemble
        .decoys
        .iter()
        .map(|d| decoy_rmsd(&ensemble.native, d, config.recompute_rmsd))
        .collect::<Result<Vec<_>, _>>()?;
    let seed = derive_seed(config.rng_seed, "protein", index as u64);
    let chosen = subsample_by_rmsd(ensemble, &rmsds, config.decoys_per_protein, seed);
    let native = featurize(&ensemble.native, &config.basis, config.min_separation);
    let mut rows = Vec::with_capacity(chosen.len());
    for (decoy, rmsd) in &chosen {
        let f = featurize(&decoy.trace, &config.basis, config.min_separation);
        let delta = f.difference(&native, DELTA_DROP_TOL);
        if delta.is_empty() {
            log::warn!(
                "{}: decoy {} featurizes identically to the native; row excluded",
                ensemble.protein_id,
                decoy.id
            );
            continue;
        }
        rows.push(ConstraintRow {
            delta_features: delta,
            rmsd: *rmsd,
            protein_index: index,
            decoy_id: decoy.id.clone(),
        });
    }
    Ok(PreparedProtein {
        protein_id: ensemble.protein_id.clone(),
        n_decoys_used: chosen.len(),
        rows,
    })
}

/// RMSDs, decoy subsampling and feature differences for every ensemble,
/// computed in parallel, returned in input order.
pub fn prepare(ensembles: &[DecoyEnsemble], config: &TrainingConfig) -> Result<Vec<PreparedProtein>, TrainingError> {
    config.validate()?;
    if ensembles.is_empty() {
        return Err(TrainingError::NoEnsembles);
    }
    let prepared = ensembles
        .par_iter()
        .enumerate()
        .map(|(i, e)| prepare_one(i, e, config))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(prepared)
}

/// Where each piece of the LP lives.
#[derive(Debug, Clone, PartialEq)]
pub struct LpLayout {
    pub n_params: usize,
    /// Slack variable of each margin row.
    pub margin_slack: Vec<usize>,
    /// LP row index of each margin row.
    pub margin_rows: Vec<usize>,
    /// LP row index of each distance row (LPKP2).
    pub distance_rows: Vec<usize>,
    /// Slack variable per protein (per-protein granularity, `None` when the
    /// protein contributed no rows).
    pub protein_slack: Vec<Option<usize>>,
}

/// Assembles the training LP from prepared rows.
pub fn assemble_lp(prepared: &[PreparedProtein], config: &TrainingConfig) -> Result<(LpInstance, LpLayout), TrainingError> {
    let rows: Vec<&ConstraintRow> = prepared.iter().flat_map(|p| &p.rows).collect();
    if rows.is_empty() {
        return Err(TrainingError::NoConstraints);
    }
    let n_params = N_PAIRS * config.basis.n_basis;

    let mut protein_slack = vec![None; prepared.len()];
    let mut margin_slack = Vec::with_capacity(rows.len());
    let mut next = n_params;
    match config.slack {
        SlackGranularity::PerProtein => {
            for (i, p) in prepared.iter().enumerate() {
                if !p.rows.is_empty() {
                    protein_slack[i] = Some(next);
                    next += 1;
                }
            }
            for r in &rows {
                margin_slack.push(protein_slack[r.protein_index].expect("protein with rows has a slack"));
            }
        }
        SlackGranularity::PerDecoy => {
            for _ in &rows {
                margin_slack.push(next);
                next += 1;
            }
        }
    }

    let mut lp = LpInstance::new(next);
    for j in 0..n_params {
        lp.set_bounds(j, -config.x_bound, config.x_bound);
    }
    for j in n_params..next {
        lp.set_bounds(j, 0.0, f64::INFINITY);
        lp.set_cost(j, 1.0);
    }

    let slack_coeff = match config.slack_sign {
        SlackSign::Relaxing => 1.0,
        SlackSign::Literal => -1.0,
    };
    let mut margin_rows = Vec::with_capacity(rows.len());
    for (r, &s) in rows.iter().zip(&margin_slack) {
        let mut coeffs = r.delta_features.clone();
        coeffs.push((s, slack_coeff));
        margin_rows.push(lp.n_constraints());
        lp.add_constraint(coeffs, Relation::Ge, config.epsilon);
    }
    let mut distance_rows = Vec::new();
    if config.scheme == Scheme::Lpkp2 {
        for r in &rows {
            distance_rows.push(lp.n_constraints());
            lp.add_constraint(r.delta_features.clone(), Relation::Le, config.alpha * r.rmsd);
        }
    }
    Ok((
        lp,
        LpLayout {
            n_params,
            margin_slack,
            margin_rows,
            distance_rows,
            protein_slack,
        },
    ))
}

/// Featurizes, subsamples and assembles the LP for `ensembles`.
pub fn build_lp(ensembles: &[DecoyEnsemble], config: &TrainingConfig) -> Result<(LpInstance, LpLayout), TrainingError> {
    let prepared = prepare(ensembles, config)?;
    assemble_lp(&prepared, config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProteinTrainingRecord {
    pub protein_id: String,
    pub n_decoys_used: usize,
    pub n_rows: usize,
    /// Per-protein slack; the largest of the protein's slacks under per-decoy
    /// granularity; `None` when no rows survived.
    pub slack_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingReport {
    pub scheme: String,
    pub objective_value: f64,
    pub iterations: usize,
    pub n_constraints: usize,
    pub n_margin_rows: usize,
    pub n_distance_rows: usize,
    /// Margin rows with `dF·X < epsilon` once slack is ignored.
    pub n_violated_margins: usize,
    pub wall_time_secs: f64,
    pub proteins: Vec<ProteinTrainingRecord>,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub params: PotentialParams,
    pub report: TrainingReport,
    pub prepared: Vec<PreparedProtein>,
}

/// Solves a prepared training problem.
pub fn train_prepared(prepared: Vec<PreparedProtein>, config: &TrainingConfig) -> Result<TrainingOutcome, TrainingError> {
    let started = Instant::now();
    let (lp, layout) = assemble_lp(&prepared, config)?;
    log::info!(
        "solving {:?}: {} variables, {} rows",
        config.scheme,
        lp.n_vars(),
        lp.n_constraints()
    );
    let sol = lp::solve(&lp, &config.solve)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(TrainingError::SolverInfeasible {
                iterations: sol.iterations,
                rows: lp.n_constraints(),
                vars: lp.n_vars(),
            })
        }
        status => {
            return Err(TrainingError::SolverFailed {
                status,
                iterations: sol.iterations,
            })
        }
    }

    let x: Vec<f64> = sol.values[..layout.n_params].to_vec();
    let rows: Vec<&ConstraintRow> = prepared.iter().flat_map(|p| &p.rows).collect();
    let n_violated_margins = rows
        .iter()
        .filter(|r| r.energy_gap(&x) < config.epsilon - config.solve.feas_tol)
        .count();

    let mut slack_per_protein = vec![None::<f64>; prepared.len()];
    for (r, &s) in rows.iter().zip(&layout.margin_slack) {
        let v = sol.values[s];
        let e = &mut slack_per_protein[r.protein_index];
        *e = Some(e.map_or(v, |old| old.max(v)));
    }
    let proteins = prepared
        .iter()
        .zip(slack_per_protein)
        .map(|(p, slack)| ProteinTrainingRecord {
            protein_id: p.protein_id.clone(),
            n_decoys_used: p.n_decoys_used,
            n_rows: p.rows.len(),
            slack_value: slack,
        })
        .collect();

    let params = PotentialParams {
        x,
        basis: config.basis,
        scheme: config.scheme,
        epsilon: config.epsilon,
        bounds: (-config.x_bound, config.x_bound),
        min_separation: config.min_separation,
    };
    let report = TrainingReport {
        scheme: config.scheme.to_string(),
        objective_value: sol.objective_value,
        iterations: sol.iterations,
        n_constraints: lp.n_constraints(),
        n_margin_rows: layout.margin_rows.len(),
        n_distance_rows: layout.distance_rows.len(),
        n_violated_margins,
        wall_time_secs: started.elapsed().as_secs_f64(),
        proteins,
    };
    Ok(TrainingOutcome {
        params,
        report,
        prepared,
    })
}

/// Featurize, subsample, assemble, solve.
pub fn train(ensembles: &[DecoyEnsemble], config: &TrainingConfig) -> Result<TrainingOutcome, TrainingError> {
    let prepared = prepare(ensembles, config)?;
    train_prepared(prepared, config)
}
