//! PDB ingestion and Cα traces.
//!
//! Only `ATOM`/`HETATM` records whose atom name is `CA` are read, using the
//! fixed column layout of PDB v3.3. Only the first model of a multi-model file
//! is used, and alternate locations other than blank and `A` are discarded.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::residue::AminoAcid;

#[derive(Debug, Error)]
pub enum PdbError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("no CA atoms found")]
    NoCaAtoms,
    #[error("line {line}: unknown residue type '{name}'")]
    UnknownResidue { line: usize, name: String },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("'{0}': no usable native/decoy ensemble")]
    EmptyEnsemble(String),
    #[error("dataset layout: {0}")]
    Layout(String),
}

impl PdbError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        PdbError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residue {
    pub aa: AminoAcid,
    pub pos: [f64; 3],
}

/// Ordered Cα coordinates of one structure.
#[derive(Debug, Clone, PartialEq)]
pub struct CaTrace {
    id: String,
    residues: Vec<Residue>,
}

impl CaTrace {
    /// Validates the trace invariants: at least two residues, finite
    /// coordinates, no two consecutive positions identical.
    pub fn new(id: impl Into<String>, residues: Vec<Residue>) -> Result<Self, PdbError> {
        let id = id.into();
        if residues.len() < 2 {
            return Err(PdbError::InvalidTrace(format!(
                "{id}: {} residue(s), need at least 2",
                residues.len()
            )));
        }
        for (k, r) in residues.iter().enumerate() {
            if r.pos.iter().any(|c| !c.is_finite()) {
                return Err(PdbError::InvalidTrace(format!(
                    "{id}: residue {k} has a non-finite coordinate"
                )));
            }
        }
        for (k, w) in residues.windows(2).enumerate() {
            if w[0].pos == w[1].pos {
                return Err(PdbError::InvalidTrace(format!(
                    "{id}: residues {k} and {} share a position",
                    k + 1
                )));
            }
        }
        Ok(CaTrace { id, residues })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn residues(&self) -> &[Residue] {
        &self.residues
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.residues.iter().map(|r| r.pos)
    }

    pub fn sequence(&self) -> impl Iterator<Item = AminoAcid> + '_ {
        self.residues.iter().map(|r| r.aa)
    }

    pub fn same_sequence(&self, other: &CaTrace) -> bool {
        self.len() == other.len() && self.sequence().eq(other.sequence())
    }

    /// Same residues with new coordinates, re-validated.
    pub fn with_positions(&self, id: impl Into<String>, positions: &[[f64; 3]]) -> Result<Self, PdbError> {
        if positions.len() != self.len() {
            return Err(PdbError::InvalidTrace(format!(
                "expected {} positions, got {}",
                self.len(),
                positions.len()
            )));
        }
        let residues = self
            .residues
            .iter()
            .zip(positions)
            .map(|(r, &pos)| Residue { aa: r.aa, pos })
            .collect();
        CaTrace::new(id, residues)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoy {
    pub id: String,
    pub trace: CaTrace,
    /// RMSD shipped with the decoy set, if any.
    pub reference_rmsd: Option<f64>,
}

/// A native structure and its decoys; every decoy shares the native's
/// length and residue sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoyEnsemble {
    pub protein_id: String,
    pub native: CaTrace,
    pub decoys: Vec<Decoy>,
}

impl DecoyEnsemble {
    /// Builds an ensemble, dropping (with a warning) decoys whose length or
    /// sequence differs from the native.
    pub fn new(protein_id: impl Into<String>, native: CaTrace, decoys: Vec<Decoy>) -> Result<Self, PdbError> {
        let protein_id = protein_id.into();
        let total = decoys.len();
        let decoys: Vec<Decoy> = decoys
            .into_iter()
            .filter(|d| {
                let ok = native.same_sequence(&d.trace);
                if !ok {
                    log::warn!(
                        "{protein_id}: dropping decoy {} (length {} vs native {}, or sequence differs)",
                        d.id,
                        d.trace.len(),
                        native.len()
                    );
                }
                ok
            })
            .collect();
        if decoys.is_empty() {
            return Err(PdbError::EmptyEnsemble(protein_id));
        }
        if decoys.len() < total {
            log::info!("{protein_id}: kept {} of {total} decoys", decoys.len());
        }
        Ok(DecoyEnsemble {
            protein_id,
            native,
            decoys,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownResiduePolicy {
    #[default]
    Fail,
    Skip,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Chain to read; `None` takes the first chain encountered.
    pub chain: Option<char>,
    pub unknown: UnknownResiduePolicy,
    /// Extra residue names mapped onto canonical types (e.g. MSE -> MET).
    pub aliases: HashMap<String, AminoAcid>,
}

impl ParseOptions {
    pub fn with_standard_aliases(mut self) -> Self {
        self.aliases.insert("MSE".into(), AminoAcid::Met);
        self
    }

    pub fn with_chain(mut self, chain: Option<char>) -> Self {
        self.chain = chain;
        self
    }

    fn resolve(&self, name: &str) -> Option<AminoAcid> {
        AminoAcid::from_code3(name).or_else(|| self.aliases.get(name.trim()).copied())
    }
}

/// Column slice with 1-based inclusive bounds, tolerant of short lines.
fn cols(line: &str, from: usize, to: usize) -> &str {
    let start = (from - 1).min(line.len());
    let end = to.min(line.len());
    line.get(start..end).unwrap_or("")
}

fn col_char(line: &str, at: usize) -> char {
    cols(line, at, at).chars().next().unwrap_or(' ')
}

struct CaRecord {
    chain: char,
    res_seq: i32,
    icode: char,
    aa: AminoAcid,
    pos: [f64; 3],
}

fn parse_coord(line: &str, lineno: usize, from: usize, axis: &str) -> Result<f64, PdbError> {
    let field = cols(line, from, from + 7).trim();
    let v: f64 = field.parse().map_err(|_| PdbError::MalformedRecord {
        line: lineno,
        reason: format!("{axis} coordinate '{field}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(PdbError::MalformedRecord {
            line: lineno,
            reason: format!("{axis} coordinate '{field}' is not finite"),
        });
    }
    Ok(v)
}

/// Parses PDB text into a Cα trace named `id`.
pub fn parse_structure(id: &str, text: &str, opts: &ParseOptions) -> Result<CaTrace, PdbError> {
    let mut records: Vec<CaRecord> = Vec::new();
    let mut chain = opts.chain;
    let mut seen_model = false;

    for (k, line) in text.lines().enumerate() {
        let lineno = k + 1;
        let tag = cols(line, 1, 6);
        match tag.trim_end() {
            "MODEL" => {
                if seen_model {
                    break;
                }
                seen_model = true;
                continue;
            }
            "ENDMDL" | "END" => break,
            "ATOM" | "HETATM" => {}
            _ => continue,
        }
        if cols(line, 13, 16).trim() != "CA" {
            continue;
        }
        let alt = col_char(line, 17);
        if alt != ' ' && alt != 'A' {
            continue;
        }
        let rec_chain = col_char(line, 22);
        match chain {
            Some(c) if c != rec_chain => continue,
            Some(_) => {}
            None => chain = Some(rec_chain),
        }
        let name = cols(line, 18, 20).trim();
        let aa = match opts.resolve(name) {
            Some(aa) => aa,
            // hetero groups that are not mapped residues (ligands, ions) are not part of the chain
            None if tag.starts_with("HETATM") => continue,
            None => match opts.unknown {
                UnknownResiduePolicy::Fail => {
                    return Err(PdbError::UnknownResidue {
                        line: lineno,
                        name: name.to_string(),
                    })
                }
                UnknownResiduePolicy::Skip => {
                    log::warn!("{id}: line {lineno}: skipping non-canonical residue {name}");
                    continue;
                }
            },
        };
        let seq_field = cols(line, 23, 26).trim();
        let res_seq: i32 = seq_field.parse().map_err(|_| PdbError::MalformedRecord {
            line: lineno,
            reason: format!("residue number '{seq_field}' is not an integer"),
        })?;
        let pos = [
            parse_coord(line, lineno, 31, "x")?,
            parse_coord(line, lineno, 39, "y")?,
            parse_coord(line, lineno, 47, "z")?,
        ];
        records.push(CaRecord {
            chain: rec_chain,
            res_seq,
            icode: col_char(line, 27),
            aa,
            pos,
        });
    }

    if records.is_empty() {
        return Err(PdbError::NoCaAtoms);
    }
    // one chain is selected, so the chain key is constant; stable sort keeps file order on ties
    records.sort_by_key(|r| (r.chain, r.res_seq, r.icode));
    records.dedup_by_key(|r| (r.chain, r.res_seq, r.icode));

    let residues = records
        .into_iter()
        .map(|r| Residue { aa: r.aa, pos: r.pos })
        .collect();
    CaTrace::new(id, residues)
}

pub fn read_structure(path: &Path, opts: &ParseOptions) -> Result<CaTrace, PdbError> {
    let text = fs::read_to_string(path).map_err(|e| PdbError::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_structure(&id, &text, opts).map_err(|e| match e {
        PdbError::MalformedRecord { line, reason } => PdbError::MalformedRecord {
            line,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    })
}

/// Renders a trace as PDB `ATOM` records (coordinates rounded to 0.001 Å).
pub fn write_pdb(trace: &CaTrace, chain: char) -> String {
    let mut out = String::with_capacity(trace.len() * 81 + 16);
    for (k, r) in trace.residues().iter().enumerate() {
        let _ = writeln!(
            out,
            "ATOM  {:>5}  CA  {:>3} {}{:>4}    {:>8.3}{:>8.3}{:>8.3}  1.00  0.00           C",
            k + 1,
            r.aa.code3(),
            chain,
            k + 1,
            r.pos[0],
            r.pos[1],
            r.pos[2],
        );
    }
    out.push_str("TER\nEND\n");
    out
}

const TRACE_MAGIC: &str = "kbpot-trace v1";

/// Lossless text form of a trace: one residue per line with shortest
/// round-trip float formatting.
pub fn to_trace_format(trace: &CaTrace) -> String {
    let mut out = format!("{TRACE_MAGIC}\nid {}\n", trace.id());
    for r in trace.residues() {
        let _ = writeln!(out, "{} {:?} {:?} {:?}", r.aa, r.pos[0], r.pos[1], r.pos[2]);
    }
    out
}

pub fn parse_trace_format(text: &str) -> Result<CaTrace, PdbError> {
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, reason: &str| PdbError::MalformedRecord {
        line,
        reason: reason.to_string(),
    };
    match lines.next() {
        Some((_, l)) if l.trim() == TRACE_MAGIC => {}
        _ => return Err(bad(1, "missing trace header")),
    }
    let id = match lines.next() {
        Some((_, l)) => l.strip_prefix("id ").ok_or_else(|| bad(2, "missing id line"))?.to_string(),
        None => return Err(bad(2, "missing id line")),
    };
    let mut residues = Vec::new();
    for (k, line) in lines {
        let lineno = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let name = it.next().unwrap_or("");
        let aa = AminoAcid::from_code3(name).ok_or_else(|| PdbError::UnknownResidue {
            line: lineno,
            name: name.to_string(),
        })?;
        let mut pos = [0.0; 3];
        for c in pos.iter_mut() {
            *c = it
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| bad(lineno, "expected three coordinates"))?;
        }
        residues.push(Residue { aa, pos });
    }
    if residues.is_empty() {
        return Err(PdbError::NoCaAtoms);
    }
    CaTrace::new(id, residues)
}

/// Chain letter carried by identifiers such as `1em9A`; `1chd-` has none.
pub fn chain_from_protein_id(id: &str) -> Option<char> {
    let b = id.as_bytes();
    if b.len() == 5 && b[0].is_ascii_digit() && b[4].is_ascii_uppercase() {
        Some(b[4] as char)
    } else {
        None
    }
}

fn options_for(protein_id: &str, opts: &ParseOptions) -> ParseOptions {
    let mut o = opts.clone();
    if o.chain.is_none() {
        o.chain = chain_from_protein_id(protein_id);
    }
    o
}

pub fn load_ensemble(
    protein_id: &str,
    native_path: &Path,
    decoy_paths: &[PathBuf],
    opts: &ParseOptions,
) -> Result<DecoyEnsemble, PdbError> {
    load_ensemble_with_rmsd(
        protein_id,
        native_path,
        &decoy_paths.iter().map(|p| (p.clone(), None)).collect::<Vec<_>>(),
        opts,
    )
}

fn load_ensemble_with_rmsd(
    protein_id: &str,
    native_path: &Path,
    decoys: &[(PathBuf, Option<f64>)],
    opts: &ParseOptions,
) -> Result<DecoyEnsemble, PdbError> {
    let opts = options_for(protein_id, opts);
    let native = read_structure(native_path, &opts)?;
    let mut parsed = Vec::with_capacity(decoys.len());
    for (path, rmsd) in decoys {
        match read_structure(path, &opts) {
            Ok(trace) => parsed.push(Decoy {
                id: trace.id().to_string(),
                trace,
                reference_rmsd: *rmsd,
            }),
            Err(e @ PdbError::Io { .. }) => return Err(e),
            Err(e) => log::warn!("{protein_id}: dropping unreadable decoy {}: {e}", path.display()),
        }
    }
    DecoyEnsemble::new(protein_id, native, parsed)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, PdbError> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| PdbError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| PdbError::io(dir, err)))
        .collect::<Result<_, _>>()?;
    v.sort();
    Ok(v)
}

/// Loads every `<root>/<protein_id>/native.pdb` + `decoys/*.pdb` ensemble,
/// in sorted protein-id order.
pub fn load_dataset_dir(root: &Path, opts: &ParseOptions) -> Result<Vec<DecoyEnsemble>, PdbError> {
    let mut out = Vec::new();
    for dir in sorted_entries(root)? {
        let native = dir.join("native.pdb");
        if !dir.is_dir() || !native.is_file() {
            continue;
        }
        let protein_id = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let decoy_dir = dir.join("decoys");
        let decoys: Vec<(PathBuf, Option<f64>)> = if decoy_dir.is_dir() {
            sorted_entries(&decoy_dir)?
                .into_iter()
                .filter(|p| p.extension().is_some_and(|e| e == "pdb"))
                .map(|p| (p, None))
                .collect()
        } else {
            Vec::new()
        };
        out.push(load_ensemble_with_rmsd(&protein_id, &native, &decoys, opts)?);
    }
    if out.is_empty() {
        return Err(PdbError::EmptyEnsemble(root.display().to_string()));
    }
    Ok(out)
}

/// Loads ensembles from a manifest with one `protein_id, role, path[, rmsd]`
/// line per structure; `role` is `native` or `decoy`, relative paths resolve
/// against the manifest's directory, and `#` starts a comment.
pub fn load_manifest(path: &Path, opts: &ParseOptions) -> Result<Vec<DecoyEnsemble>, PdbError> {
    let text = fs::read_to_string(path).map_err(|e| PdbError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut order: Vec<String> = Vec::new();
    let mut natives: HashMap<String, PathBuf> = HashMap::new();
    let mut decoys: HashMap<String, Vec<(PathBuf, Option<f64>)>> = HashMap::new();

    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(PdbError::Layout(format!(
                "{}:{}: expected 'protein_id, role, path[, rmsd]'",
                path.display(),
                k + 1
            )));
        }
        let id = fields[0].to_string();
        let p = base.join(fields[2]);
        let rmsd = match fields.get(3) {
            Some(f) => Some(f.parse::<f64>().map_err(|_| {
                PdbError::Layout(format!("{}:{}: bad rmsd '{f}'", path.display(), k + 1))
            })?),
            None => None,
        };
        if !order.contains(&id) {
            order.push(id.clone());
        }
        match fields[1] {
            "native" => {
                if natives.insert(id.clone(), p).is_some() {
                    return Err(PdbError::Layout(format!("{id}: more than one native")));
                }
            }
            "decoy" => decoys.entry(id).or_default().push((p, rmsd)),
            other => {
                return Err(PdbError::Layout(format!(
                    "{}:{}: unknown role '{other}'",
                    path.display(),
                    k + 1
                )))
            }
        }
    }

    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let native = natives
            .get(&id)
            .ok_or_else(|| PdbError::Layout(format!("{id}: no native listed")))?;
        let ds = decoys.remove(&id).unwrap_or_default();
        out.push(load_ensemble_with_rmsd(&id, native, &ds, opts)?);
    }
    if out.is_empty() {
        return Err(PdbError::EmptyEnsemble(path.display().to_string()));
    }
    Ok(out)
}

/// Loads a dataset given either a manifest file or a directory root.
pub fn load_dataset(path: &Path, opts: &ParseOptions) -> Result<Vec<DecoyEnsemble>, PdbError> {
    if path.is_file() {
        load_manifest(path, opts)
    } else {
        load_dataset_dir(path, opts)
    }
}

/// Writes an ensemble in the directory layout `load_dataset_dir` reads.
pub fn write_ensemble_dir(root: &Path, ensemble: &DecoyEnsemble) -> Result<(), PdbError> {
    let dir = root.join(&ensemble.protein_id);
    let decoy_dir = dir.join("decoys");
    fs::create_dir_all(&decoy_dir).map_err(|e| PdbError::io(&decoy_dir, e))?;
    let chain = chain_from_protein_id(&ensemble.protein_id).unwrap_or('A');
    let native = dir.join("native.pdb");
    fs::write(&native, write_pdb(&ensemble.native, chain)).map_err(|e| PdbError::io(&native, e))?;
    for d in &ensemble.decoys {
        let p = decoy_dir.join(format!("{}.pdb", d.id));
        fs::write(&p, write_pdb(&d.trace, chain)).map_err(|e| PdbError::io(&p, e))?;
    }
    Ok(())
}
