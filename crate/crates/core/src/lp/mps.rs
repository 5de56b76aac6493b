//! Fixed-format MPS export.
//!
//! Layout: objective row `COST`, constraint rows `R0000001..` in instance
//! order, columns `C0000001..` in variable order. Within a column the
//! objective entry comes first, then rows by increasing index; zero entries
//! are omitted. One entry per line. Bounds follow variable order, emitting
//! `FR`, `MI`, `FX`, `LO` and `UP` records only where they differ from the
//! MPS default `[0, +inf)`. Numbers use the shortest round-trip form that
//! fits the 12-character field, falling back to fewer significant digits.

use std::fmt::Write as _;

use super::{LpInstance, Relation};

fn num12(v: f64) -> String {
    for s in [format!("{v}"), format!("{v:e}")] {
        if s.len() <= 12 {
            return s;
        }
    }
    (0..=11)
        .rev()
        .map(|p| format!("{v:.p$e}"))
        .find(|s| s.len() <= 12)
        .unwrap_or_else(|| format!("{v:.0e}"))
}

fn row_name(i: usize) -> String {
    format!("R{:07}", i + 1)
}

fn col_name(j: usize) -> String {
    format!("C{:07}", j + 1)
}

fn entry(out: &mut String, f1: &str, f2: &str, f3: &str, value: f64) {
    let _ = writeln!(out, " {f1:<2} {f2:<8}  {f3:<8}  {:>12}", num12(value));
}

pub fn write_mps(lp: &LpInstance, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n N  COST\n");
    for (i, c) in lp.constraints().iter().enumerate() {
        let tag = match c.relation {
            Relation::Ge => "G",
            Relation::Le => "L",
        };
        let _ = writeln!(out, " {tag}  {}", row_name(i));
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.n_vars()];
    for (i, c) in lp.constraints().iter().enumerate() {
        for &(j, a) in &c.coeffs {
            if a != 0.0 {
                by_col[j].push((i, a));
            }
        }
    }
    out.push_str("COLUMNS\n");
    for (j, entries) in by_col.iter_mut().enumerate() {
        entries.sort_by_key(|e| e.0);
        let cost = lp.objective()[j];
        if cost != 0.0 {
            entry(&mut out, "", &col_name(j), "COST", cost);
        }
        for &(i, a) in entries.iter() {
            entry(&mut out, "", &col_name(j), &row_name(i), a);
        }
    }

    out.push_str("RHS\n");
    for (i, c) in lp.constraints().iter().enumerate() {
        if c.rhs != 0.0 {
            entry(&mut out, "", "RHS", &row_name(i), c.rhs);
        }
    }

    out.push_str("BOUNDS\n");
    for j in 0..lp.n_vars() {
        let (l, u) = (lp.lower_bounds()[j], lp.upper_bounds()[j]);
        let c = col_name(j);
        if l == u {
            entry(&mut out, "FX", "BND", &c, l);
            continue;
        }
        if l == f64::NEG_INFINITY && u == f64::INFINITY {
            let _ = writeln!(out, " FR BND       {c}");
            continue;
        }
        if l == f64::NEG_INFINITY {
            let _ = writeln!(out, " MI BND       {c}");
        } else if l != 0.0 {
            entry(&mut out, "LO", "BND", &c, l);
        }
        if u.is_finite() {
            entry(&mut out, "UP", "BND", &c, u);
        }
    }
    out.push_str("ENDATA\n");
    out
}
