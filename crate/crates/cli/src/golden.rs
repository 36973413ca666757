//! Regression comparison of a result directory against a golden one.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use paraweight::spectral::io::read_field;
use paraweight::SpectralField;

use crate::error::CliError;

/// Files that never take part in the comparison.
pub const EXCLUDED: &[&str] = &["timing.json"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericDiff {
    pub file: String,
    /// JSON pointer, `row <i> column <name>`, or `coefficient <i>`.
    pub location: String,
    pub result: f64,
    pub golden: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DiffReport {
    pub tol: f64,
    pub structural: Vec<String>,
    pub numeric: Vec<NumericDiff>,
}

impl DiffReport {
    pub fn passed(&self) -> bool {
        self.structural.is_empty() && self.numeric.is_empty()
    }
}

fn rel_error(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a.is_nan() || b.is_nan() || a.is_infinite() || b.is_infinite() {
        return f64::INFINITY;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

fn list_files(dir: &Path) -> Result<BTreeSet<String>, CliError> {
    let mut out = BTreeSet::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            let name = entry.file_name().to_string_lossy().into_owned();
            if !EXCLUDED.contains(&name.as_str()) {
                out.insert(name);
            }
        }
    }
    Ok(out)
}

/// Compares every file present in both directories; a file present in only
/// one of them is a structural failure naming it.
pub fn compare_golden(result_dir: &Path, golden_dir: &Path, tol: f64) -> Result<DiffReport, CliError> {
    let mut report = DiffReport { tol, ..DiffReport::default() };
    let ours = list_files(result_dir)?;
    let theirs = list_files(golden_dir)?;
    for name in theirs.difference(&ours) {
        report.structural.push(format!("{name}: missing from result"));
    }
    for name in ours.difference(&theirs) {
        report.structural.push(format!("{name}: not in golden"));
    }
    for name in ours.intersection(&theirs) {
        let a = result_dir.join(name);
        let b = golden_dir.join(name);
        if name.ends_with(".json") {
            let va: Value = parse_json(&a, name, &mut report)?;
            let vb: Value = parse_json(&b, name, &mut report)?;
            compare_json(name, "", &va, &vb, &mut report);
        } else if name.ends_with(".csv") {
            compare_csv(name, &fs::read_to_string(a)?, &fs::read_to_string(b)?, &mut report);
        } else if name.ends_with(".spf") {
            compare_spf(name, &a, &b, &mut report)?;
        } else if fs::read(a)? != fs::read(b)? {
            report.structural.push(format!("{name}: contents differ"));
        }
    }
    Ok(report)
}

fn parse_json(path: &Path, name: &str, report: &mut DiffReport) -> Result<Value, CliError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text).unwrap_or_else(|e| {
        report.structural.push(format!("{name}: invalid JSON in {}: {e}", path.display()));
        Value::Null
    }))
}

fn push_numeric(report: &mut DiffReport, file: &str, location: String, a: f64, b: f64) {
    let e = rel_error(a, b);
    if e > report.tol {
        report.numeric.push(NumericDiff { file: file.into(), location, result: a, golden: b, rel_error: e });
    }
}

fn compare_json(file: &str, path: &str, a: &Value, b: &Value, report: &mut DiffReport) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            push_numeric(report, file, path.to_string(), x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN))
        }
        (Value::Object(x), Value::Object(y)) => {
            let kx: BTreeSet<_> = x.keys().collect();
            let ky: BTreeSet<_> = y.keys().collect();
            if kx != ky {
                report.structural.push(format!("{file}{path}: keys differ"));
                return;
            }
            for k in kx {
                compare_json(file, &format!("{path}/{k}"), &x[k], &y[k], report);
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                report.structural.push(format!("{file}{path}: length {} vs {}", x.len(), y.len()));
                return;
            }
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                compare_json(file, &format!("{path}/{i}"), p, q, report);
            }
        }
        _ if a == b => {}
        _ => report.structural.push(format!("{file}{path}: {a} vs {b}")),
    }
}

fn compare_csv(file: &str, a: &str, b: &str, report: &mut DiffReport) {
    let ra: Vec<&str> = a.lines().collect();
    let rb: Vec<&str> = b.lines().collect();
    if ra.first() != rb.first() {
        report.structural.push(format!("{file}: header differs"));
        return;
    }
    if ra.len() != rb.len() {
        report.structural.push(format!("{file}: {} rows vs {}", ra.len() - 1, rb.len().saturating_sub(1)));
        return;
    }
    let header: Vec<&str> = ra.first().map(|h| h.split(',').collect()).unwrap_or_default();
    for (row, (la, lb)) in ra.iter().zip(&rb).enumerate().skip(1) {
        let ca: Vec<&str> = la.split(',').collect();
        let cb: Vec<&str> = lb.split(',').collect();
        if ca.len() != cb.len() {
            report.structural.push(format!("{file}: row {row} has {} cells vs {}", ca.len(), cb.len()));
            continue;
        }
        for (col, (x, y)) in ca.iter().zip(&cb).enumerate() {
            let name = header.get(col).copied().unwrap_or("?");
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(p), Ok(q)) => push_numeric(report, file, format!("row {row} column {name}"), p, q),
                _ if x == y => {}
                _ => report.structural.push(format!("{file}: row {row} column {name}: `{x}` vs `{y}`")),
            }
        }
    }
}

fn compare_spf(file: &str, a: &Path, b: &Path, report: &mut DiffReport) -> Result<(), CliError> {
    let fa: SpectralField = read_field(fs::File::open(a)?)?;
    let fb: SpectralField = read_field(fs::File::open(b)?)?;
    if fa.grid() != fb.grid() {
        report.structural.push(format!("{file}: grids differ"));
        return Ok(());
    }
    let scale = fa.max_coeff().max(fb.max_coeff());
    let worst = fa
        .coeffs()
        .iter()
        .zip(fb.coeffs())
        .map(|(p, q)| (p - q).norm())
        .enumerate()
        .fold((0, 0.0f64), |best, (i, d)| if d > best.1 { (i, d) } else { best });
    if scale > 0.0 && worst.1 / scale > report.tol {
        report.numeric.push(NumericDiff {
            file: file.into(),
            location: format!("coefficient {}", worst.0),
            result: fa.coeffs()[worst.0].norm(),
            golden: fb.coeffs()[worst.0].norm(),
            rel_error: worst.1 / scale,
        });
    }
    Ok(())
}
