use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kbpot_core::evaluation::{evaluate_set, write_outputs};
use kbpot_core::lp::write_mps;
use kbpot_core::pdbio::{load_dataset, read_structure, write_ensemble_dir, ParseOptions, UnknownResiduePolicy};
use kbpot_core::potential::{energy, featurize, PotentialParams};
use kbpot_core::synthgen::{self, SynthConfig};
use kbpot_core::training::{self, Scheme, SlackGranularity, SlackSign, TrainingConfig, TrainingReport};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::manifest::{sibling, RunManifest};
use crate::{DataArgs, EvalArgs, GenArgs, ScoreArgs, TrainArgs};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::data(format!("{}: {e}", path.display()))
}

fn parse_options(skip_unknown: bool, chain: Option<char>) -> ParseOptions {
    ParseOptions {
        unknown: if skip_unknown { UnknownResiduePolicy::Skip } else { UnknownResiduePolicy::Fail },
        ..ParseOptions::default()
    }
    .with_standard_aliases()
    .with_chain(chain)
}

fn load(data: &DataArgs) -> Result<Vec<kbpot_core::DecoyEnsemble>, CliError> {
    if !data.data.exists() {
        return Err(CliError::data(format!("{}: no such file or directory", data.data.display())));
    }
    let sets = load_dataset(&data.data, &parse_options(data.skip_unknown_residues, None))?;
    log::info!("loaded {} ensembles from {}", sets.len(), data.data.display());
    Ok(sets)
}

fn read_params(path: &Path) -> Result<PotentialParams, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(PotentialParams::from_text(&text)?)
}

pub fn gen(args: &GenArgs, manifest_path: Option<PathBuf>) -> Result<(), CliError> {
    let started = Instant::now();
    if args.out.exists() && fs::read_dir(&args.out).map_err(io_err(&args.out))?.next().is_some() {
        return Err(CliError::usage(format!("output directory {} is not empty", args.out.display())));
    }
    if args.test_proteins >= args.n_proteins && args.test_proteins > 0 {
        return Err(CliError::usage("--test-proteins must leave at least one training protein"));
    }
    let cfg = SynthConfig {
        n_proteins: args.n_proteins,
        residues_per_protein: args.residues,
        decoys_per_protein: args.decoys,
        perturbation_sigmas: args.sigmas.clone(),
        rng_seed: args.seed,
    };
    let sets = synthgen::generate(&cfg)?;
    let n_train = args.n_proteins - args.test_proteins;
    for (k, e) in sets.iter().enumerate() {
        let root = match (args.test_proteins, k < n_train) {
            (0, _) => args.out.clone(),
            (_, true) => args.out.join("train"),
            (_, false) => args.out.join("test"),
        };
        write_ensemble_dir(&root, e)?;
    }

    let mut m = RunManifest::new(
        "gen",
        Some(args.seed),
        serde_json::json!({
            "n_proteins": args.n_proteins,
            "residues_per_protein": args.residues,
            "decoys_per_protein": args.decoys,
            "perturbation_sigmas": args.sigmas,
            "test_proteins": args.test_proteins,
        }),
    );
    m.add_output(&args.out);
    m.wall_time_secs = started.elapsed().as_secs_f64();
    // kept outside the tree so that reruns give identical directories
    m.write(&manifest_path.unwrap_or_else(|| sibling(&args.out, "manifest.json")))?;
    println!("wrote {} ensembles to {}", sets.len(), args.out.display());
    Ok(())
}

/// Training settings as they may appear in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainFile {
    scheme: Option<String>,
    epsilon: Option<f64>,
    x_bound: Option<f64>,
    decoys_per_protein: Option<usize>,
    min_separation: Option<usize>,
    slack: Option<String>,
    alpha: Option<f64>,
    seed: Option<u64>,
    paper_literal_sign: Option<bool>,
    recompute_rmsd: Option<bool>,
}

/// Fully resolved training settings, recorded in the manifest.
#[derive(Debug, Serialize)]
struct TrainSettings {
    scheme: String,
    epsilon: f64,
    x_bound: f64,
    decoys_per_protein: usize,
    min_separation: usize,
    slack: String,
    alpha: f64,
    seed: u64,
    paper_literal_sign: bool,
    recompute_rmsd: bool,
    skip_unknown_residues: bool,
}

fn resolve(args: &TrainArgs) -> Result<(TrainSettings, TrainingConfig), CliError> {
    let file = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            toml::from_str::<TrainFile>(&text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?
        }
        None => TrainFile::default(),
    };
    let d = TrainingConfig::default();
    let s = TrainSettings {
        scheme: args.scheme.clone().or(file.scheme).unwrap_or_else(|| d.scheme.to_string()),
        epsilon: args.epsilon.or(file.epsilon).unwrap_or(d.epsilon),
        x_bound: args.x_bound.or(file.x_bound).unwrap_or(d.x_bound),
        decoys_per_protein: args.decoys_per_protein.or(file.decoys_per_protein).unwrap_or(d.decoys_per_protein),
        min_separation: args.min_separation.or(file.min_separation).unwrap_or(d.min_separation),
        slack: args.slack.clone().or(file.slack).unwrap_or_else(|| "per-protein".into()),
        alpha: args.alpha.or(file.alpha).unwrap_or(d.alpha),
        seed: args.seed.or(file.seed).unwrap_or(d.rng_seed),
        paper_literal_sign: args.paper_literal_sign || file.paper_literal_sign.unwrap_or(false),
        recompute_rmsd: args.recompute_rmsd.or(file.recompute_rmsd).unwrap_or(d.recompute_rmsd),
        skip_unknown_residues: args.data.skip_unknown_residues,
    };
    let scheme: Scheme = s.scheme.parse().map_err(CliError::usage)?;
    let slack = match s.slack.as_str() {
        "per-protein" | "per_protein" => SlackGranularity::PerProtein,
        "per-decoy" | "per_decoy" => SlackGranularity::PerDecoy,
        other => return Err(CliError::usage(format!("unknown slack granularity '{other}'"))),
    };
    let cfg = TrainingConfig {
        scheme,
        epsilon: s.epsilon,
        x_bound: s.x_bound,
        decoys_per_protein: s.decoys_per_protein,
        slack,
        slack_sign: if s.paper_literal_sign { SlackSign::Literal } else { SlackSign::Relaxing },
        alpha: s.alpha,
        min_separation: s.min_separation,
        rng_seed: s.seed,
        recompute_rmsd: s.recompute_rmsd,
        ..d
    };
    cfg.validate()?;
    Ok((s, cfg))
}

fn report_lines(report: &TrainingReport) -> String {
    let mut out = String::new();
    for p in &report.proteins {
        let rec = serde_json::json!({
            "record": "protein",
            "protein_id": p.protein_id,
            "n_decoys_used": p.n_decoys_used,
            "n_rows": p.n_rows,
            "slack_value": p.slack_value,
        });
        out.push_str(&rec.to_string());
        out.push('\n');
    }
    let summary = serde_json::json!({
        "record": "summary",
        "scheme": report.scheme,
        "objective_value": report.objective_value,
        "iterations": report.iterations,
        "n_constraints": report.n_constraints,
        "n_margin_rows": report.n_margin_rows,
        "n_distance_rows": report.n_distance_rows,
        "n_violated_margins": report.n_violated_margins,
        "wall_time_secs": report.wall_time_secs,
    });
    out.push_str(&summary.to_string());
    out.push('\n');
    out
}

pub fn train(args: &TrainArgs, manifest_path: Option<PathBuf>) -> Result<(), CliError> {
    let started = Instant::now();
    let (settings, cfg) = resolve(args)?;
    let sets = load(&args.data)?;
    let prepared = training::prepare(&sets, &cfg)?;

    let mut m = RunManifest::new("train", Some(settings.seed), serde_json::to_value(&settings).expect("settings serialize"));
    m.add_input(&args.data.data)?;
    if let Some(p) = &args.config {
        m.add_input(p)?;
    }

    if let Some(path) = &args.dump_lp {
        let (lp, _) = training::assemble_lp(&prepared, &cfg)?;
        fs::write(path, write_mps(&lp, "KBPOT")).map_err(io_err(path))?;
        m.add_output(path);
    }

    let outcome = training::train_prepared(prepared, &cfg)?;
    fs::write(&args.out, outcome.params.to_text()).map_err(io_err(&args.out))?;
    m.add_output(&args.out);
    let report_path = args.report.clone().unwrap_or_else(|| sibling(&args.out, "report.jsonl"));
    fs::write(&report_path, report_lines(&outcome.report)).map_err(io_err(&report_path))?;
    m.add_output(&report_path);

    m.wall_time_secs = started.elapsed().as_secs_f64();
    m.write(&manifest_path.unwrap_or_else(|| sibling(&args.out, "manifest.json")))?;
    let r = &outcome.report;
    println!(
        "{}",
        serde_json::json!({
            "scheme": r.scheme,
            "objective_value": r.objective_value,
            "n_constraints": r.n_constraints,
            "n_violated_margins": r.n_violated_margins,
            "iterations": r.iterations,
        })
    );
    Ok(())
}

pub fn eval(args: &EvalArgs, manifest_path: Option<PathBuf>) -> Result<(), CliError> {
    let started = Instant::now();
    let params = read_params(&args.params)?;
    let sets = load(&args.data)?;
    let (summary, evals) = evaluate_set(&sets, &params)?;
    write_outputs(&args.out_dir, &evals)?;
    let summary_path = args.out_dir.join("summary.json");
    let summary_json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, summary_json.clone() + "\n").map_err(io_err(&summary_path))?;

    let mut m = RunManifest::new(
        "eval",
        None,
        serde_json::json!({ "skip_unknown_residues": args.data.skip_unknown_residues }),
    );
    m.add_input(&args.params)?;
    m.add_input(&args.data.data)?;
    m.add_output(&args.out_dir);
    m.wall_time_secs = started.elapsed().as_secs_f64();
    m.write(&manifest_path.unwrap_or_else(|| args.out_dir.join("manifest.json")))?;
    println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    Ok(())
}

pub fn score(args: &ScoreArgs, manifest_path: Option<PathBuf>) -> Result<(), CliError> {
    let started = Instant::now();
    let params = read_params(&args.params)?;
    let trace = read_structure(&args.structure, &parse_options(args.skip_unknown_residues, args.chain))?;
    let e = energy(&featurize(&trace, &params.basis, params.min_separation), &params)?;
    // no negative zero in the printout
    let e = if e == 0.0 { 0.0 } else { e };
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{e:.12}").map_err(|err| CliError::data(format!("stdout: {err}")))?;

    let mut m = RunManifest::new(
        "score",
        None,
        serde_json::json!({ "chain": args.chain.map(String::from), "skip_unknown_residues": args.skip_unknown_residues }),
    );
    m.add_input(&args.params)?;
    m.add_input(&args.structure)?;
    m.wall_time_secs = started.elapsed().as_secs_f64();
    match manifest_path {
        Some(p) => m.write(&p)?,
        None => log::info!("manifest: {}", m.to_json()),
    }
    Ok(())
}
