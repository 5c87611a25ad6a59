//! CPLEX LP text export.
//!
//! Rows are named after their provenance tags, numbers are written in plain
//! decimal with at most 12 significant digits, binaries with the default
//! `[0, 1]` box go to `Binaries` and every other integral variable goes to
//! `Generals` with explicit bounds.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::model::{MipModel, RowSense};

/// Decimal rendering of `x` rounded to 12 significant digits.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn format_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "+infinity".into()
    } else if x == f64::NEG_INFINITY {
        "-infinity".into()
    } else {
        format_number(x)
    }
}

fn write_linear(out: &mut String, model: &MipModel, terms: &[(usize, f64)]) {
    let mut line_len = 0usize;
    for (k, &(j, a)) in terms.iter().enumerate() {
        let name = model.variables[j].label.to_string();
        let sign = if a < 0.0 { "-" } else { "+" };
        let piece = if k == 0 && a >= 0.0 {
            format!(" {} {name}", format_number(a))
        } else {
            format!(" {sign} {} {name}", format_number(a.abs()))
        };
        if line_len + piece.len() > 240 {
            out.push_str("\n   ");
            line_len = 0;
        }
        line_len += piece.len();
        out.push_str(&piece);
    }
}

/// Unique row names: the tag, suffixed with the row index on collision.
fn row_names(model: &MipModel) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    for row in &model.rows {
        *seen.entry(row.tag.to_string()).or_insert(0) += 1;
    }
    model
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let name = row.tag.to_string();
            if seen[&name] > 1 {
                format!("{name}_r{i}")
            } else {
                name
            }
        })
        .collect()
}

/// The model as CPLEX LP text.
pub fn to_lp_string(model: &MipModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ formulation {} instance {}",
        model.provenance.formulation, model.provenance.instance
    );
    out.push_str("Minimize\n obj:");
    if model.objective.is_empty() {
        if let Some(v) = model.variables.first() {
            let _ = write!(out, " 0 {}", v.label);
        }
    } else {
        write_linear(&mut out, model, &model.objective);
    }
    out.push_str("\nSubject To\n");
    for (row, name) in model.rows.iter().zip(row_names(model)) {
        let _ = write!(out, " {name}:");
        write_linear(&mut out, model, &row.terms);
        let op = match row.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", format_number(row.rhs));
    }

    let is_binary = |j: usize| {
        let v = &model.variables[j];
        v.integral && v.lower == 0.0 && v.upper == 1.0
    };
    out.push_str("Bounds\n");
    for (j, v) in model.variables.iter().enumerate() {
        if is_binary(j) {
            continue;
        }
        if v.lower == v.upper {
            let _ = writeln!(out, " {} = {}", v.label, format_number(v.lower));
        } else if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.label);
        } else {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                format_bound(v.lower),
                v.label,
                format_bound(v.upper)
            );
        }
    }

    let generals: Vec<String> = (0..model.n_vars())
        .filter(|&j| model.variables[j].integral && !is_binary(j))
        .map(|j| model.variables[j].label.to_string())
        .collect();
    let binaries: Vec<String> = (0..model.n_vars())
        .filter(|&j| is_binary(j))
        .map(|j| model.variables[j].label.to_string())
        .collect();
    for (section, names) in [("Generals", generals), ("Binaries", binaries)] {
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{section}");
        for chunk in names.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
