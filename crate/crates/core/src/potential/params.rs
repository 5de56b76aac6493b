use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use super::bspline::SplineBasisConfig;
use super::pairs::{pair_from_index, pair_index, N_PAIRS};
use crate::residue::AminoAcid;

/// Parameter count of the standard eight-basis layout.
pub const N_PARAMS: usize = N_PAIRS * 8;

const MAGIC: &str = "kbpot-params v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeTag {
    Lpkp1,
    Lpkp2,
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeTag::Lpkp1 => "LPKP1",
            SchemeTag::Lpkp2 => "LPKP2",
        })
    }
}

impl FromStr for SchemeTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "LPKP1" => Ok(SchemeTag::Lpkp1),
            "LPKP2" => Ok(SchemeTag::Lpkp2),
            _ => Err(format!("unknown scheme '{s}' (expected LPKP1 or LPKP2)")),
        }
    }
}

/// Trained coefficients `x[pair * n_basis + (p - 1)]` plus the metadata
/// needed to evaluate them consistently.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialParams {
    pub x: Vec<f64>,
    pub basis: SplineBasisConfig,
    pub scheme: SchemeTag,
    pub epsilon: f64,
    pub bounds: (f64, f64),
    pub min_separation: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsFormatError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("expected {expected} parameter lines, found {found}")]
    Count { expected: usize, found: usize },
    #[error("parameter {pair}/{basis} listed twice")]
    Duplicate { pair: String, basis: usize },
    #[error("parameter {value} outside bounds [{lo}, {hi}] at line {line}")]
    OutOfBounds { line: usize, value: f64, lo: f64, hi: f64 },
}

impl PotentialParams {
    pub fn zeros(basis: SplineBasisConfig, min_separation: usize) -> Self {
        PotentialParams {
            x: vec![0.0; N_PAIRS * basis.n_basis],
            basis,
            scheme: SchemeTag::Lpkp1,
            epsilon: 0.01,
            bounds: (-4.0, 4.0),
            min_separation,
        }
    }

    pub fn get(&self, a: AminoAcid, b: AminoAcid, p: usize) -> f64 {
        self.x[pair_index(a, b) * self.basis.n_basis + (p - 1)]
    }

    pub fn set(&mut self, a: AminoAcid, b: AminoAcid, p: usize, value: f64) {
        let nb = self.basis.n_basis;
        self.x[pair_index(a, b) * nb + (p - 1)] = value;
    }

    /// Same parameters multiplied by `c` (bounds scale along).
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.x.iter_mut().for_each(|v| *v *= c);
        let (lo, hi) = (self.bounds.0 * c, self.bounds.1 * c);
        out.bounds = (lo.min(hi), lo.max(hi));
        out
    }

    /// Serializes to the line-oriented `kbpot-params v1` format. Values are
    /// written with 17 significant digits, so reading back is lossless.
    pub fn to_text(&self) -> String {
        let b = &self.basis;
        let mut out = String::with_capacity(64 * self.x.len());
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(
            out,
            "basis {} {} {} {}",
            b.n_basis, b.knot_start, b.knot_step, b.support_width
        );
        let _ = writeln!(
            out,
            "scheme {} epsilon {} bounds {} {} min_separation {}",
            self.scheme, self.epsilon, self.bounds.0, self.bounds.1, self.min_separation
        );
        for pair in 0..N_PAIRS {
            let (a, c) = pair_from_index(pair).expect("pair index in range");
            for p in 1..=b.n_basis {
                let _ = writeln!(out, "{a} {c} {p} {:.16e}", self.x[pair * b.n_basis + p - 1]);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ParamsFormatError> {
        let syntax = |line: usize, reason: String| ParamsFormatError::Syntax { line, reason };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        match lines.next() {
            Some((_, l)) if l == MAGIC => {}
            Some((n, l)) => return Err(syntax(n, format!("expected '{MAGIC}', found '{l}'"))),
            None => return Err(syntax(1, "empty parameter file".into())),
        }

        let (n, l) = lines.next().ok_or_else(|| syntax(2, "missing basis line".into()))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 5 || f[0] != "basis" {
            return Err(syntax(n, format!("malformed basis line '{l}'")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| syntax(n, format!("bad number '{s}'")));
        let basis = SplineBasisConfig {
            n_basis: f[1].parse().map_err(|_| syntax(n, format!("bad basis count '{}'", f[1])))?,
            knot_start: num(f[2])?,
            knot_step: num(f[3])?,
            support_width: num(f[4])?,
        };
        if basis.n_basis == 0 {
            return Err(syntax(n, "basis count must be positive".into()));
        }

        let (n, l) = lines.next().ok_or_else(|| syntax(3, "missing scheme line".into()))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 9 || f[0] != "scheme" || f[2] != "epsilon" || f[4] != "bounds" || f[7] != "min_separation" {
            return Err(syntax(n, format!("malformed scheme line '{l}'")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| syntax(n, format!("bad number '{s}'")));
        let scheme: SchemeTag = f[1].parse().map_err(|e| syntax(n, e))?;
        let epsilon = num(f[3])?;
        let bounds = (num(f[5])?, num(f[6])?);
        let min_separation: usize = f[8]
            .parse()
            .map_err(|_| syntax(n, format!("bad min_separation '{}'", f[8])))?;

        let nb = basis.n_basis;
        let mut x = vec![0.0; N_PAIRS * nb];
        let mut seen = vec![false; N_PAIRS * nb];
        let mut count = 0;
        for (n, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 4 {
                return Err(syntax(n, format!("expected '<AA3> <AA3> <p> <value>', found '{l}'")));
            }
            let a: AminoAcid = f[0].parse().map_err(|e: crate::residue::UnknownAminoAcid| syntax(n, e.to_string()))?;
            let b: AminoAcid = f[1].parse().map_err(|e: crate::residue::UnknownAminoAcid| syntax(n, e.to_string()))?;
            if a > b {
                return Err(syntax(n, format!("pair {a} {b} is not in sorted order")));
            }
            let p: usize = f[2].parse().map_err(|_| syntax(n, format!("bad basis index '{}'", f[2])))?;
            if p == 0 || p > nb {
                return Err(syntax(n, format!("basis index {p} out of range 1..={nb}")));
            }
            let v: f64 = f[3].parse().map_err(|_| syntax(n, format!("bad value '{}'", f[3])))?;
            if !v.is_finite() {
                return Err(syntax(n, format!("non-finite value '{}'", f[3])));
            }
            if v < bounds.0 || v > bounds.1 {
                return Err(ParamsFormatError::OutOfBounds { line: n, value: v, lo: bounds.0, hi: bounds.1 });
            }
            let k = pair_index(a, b) * nb + p - 1;
            if seen[k] {
                return Err(ParamsFormatError::Duplicate { pair: format!("{a}-{b}"), basis: p });
            }
            seen[k] = true;
            x[k] = v;
            count += 1;
        }
        if count != N_PAIRS * nb {
            return Err(ParamsFormatError::Count { expected: N_PAIRS * nb, found: count });
        }
        Ok(PotentialParams {
            x,
            basis,
            scheme,
            epsilon,
            bounds,
            min_separation,
        })
    }
}
