//! Data files: solution and history CSV.

use std::io::Write;
use std::path::Path;

use schwarz_coupler::schwarz::{DiscreteField, IterationHistory};

use crate::error::CliError;

/// Round-trip exact: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

/// One row of `solution.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRow {
    pub x: f64,
    pub value: f64,
    pub component: &'static str,
    pub subdomain: usize,
}

/// Rows for every dof of every field, sorted by `x`. Coincident points
/// (e.g. a local/nonlocal interface) are ordered left subdomain first.
pub fn solution_rows(fields: &[&DiscreteField]) -> Vec<SolutionRow> {
    let mut rows: Vec<(f64, SolutionRow)> = Vec::new();
    for field in fields {
        let space = field.space();
        let left_end = |s: usize| {
            space
                .elements()
                .iter()
                .filter(|e| e.subdomain == s)
                .map(|e| e.a)
                .fold(f64::INFINITY, f64::min)
        };
        for (dof, &value) in space.dofs().iter().zip(field.coeffs()) {
            rows.push((
                left_end(dof.subdomain),
                SolutionRow {
                    x: dof.x,
                    value,
                    component: space.component().as_str(),
                    subdomain: dof.subdomain,
                },
            ));
        }
    }
    rows.sort_by(|(la, a), (lb, b)| a.x.total_cmp(&b.x).then(la.total_cmp(lb)));
    rows.into_iter().map(|(_, r)| r).collect()
}

/// Columns `x, value, component, subdomain_index`.
pub fn emit_solution_csv(path: &Path, fields: &[&DiscreteField]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["x", "value", "component", "subdomain_index"])
        .map_err(|e| csv_err(path, e))?;
    for r in solution_rows(fields) {
        w.write_record([
            fmt_f64(r.x),
            fmt_f64(r.value),
            r.component.to_string(),
            r.subdomain.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Per-iteration contraction factor: error ratio when a reference is
/// known, step-difference ratio otherwise.
pub fn running_rates(history: &IterationHistory) -> Vec<Option<f64>> {
    let ratio = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    let recs = &history.records;
    (0..recs.len())
        .map(|k| {
            if recs[k].err_h.is_some() {
                let prev = if k == 0 {
                    history.initial_err_h
                } else {
                    recs[k - 1].err_h
                };
                ratio(recs[k].err_h, prev)
            } else if k > 0 {
                ratio(Some(recs[k].step_diff_h), Some(recs[k - 1].step_diff_h))
            } else {
                None
            }
        })
        .collect()
}

/// Columns `iter, step_diff_H, err_H, energy_Ei, rate_running, err_L2_local,
/// err_L2_nonlocal`; empty cells where a value is unavailable. A final
/// `# rate_estimate=...` comment line closes the file.
pub fn emit_history_csv(path: &Path, history: &IterationHistory) -> Result<(), CliError> {
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record([
        "iter",
        "step_diff_H",
        "err_H",
        "energy_Ei",
        "rate_running",
        "err_L2_local",
        "err_L2_nonlocal",
    ])
    .map_err(|e| csv_err(path, e))?;
    for (r, rate) in history.records.iter().zip(running_rates(history)) {
        w.write_record([
            r.n.to_string(),
            fmt_f64(r.step_diff_h),
            opt(r.err_h),
            fmt_f64(r.energy),
            opt(rate),
            opt(r.err_l2_local),
            opt(r.err_l2_nonlocal),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    let mut inner = w
        .into_inner()
        .map_err(|e| CliError::io(path, e.into_error()))?;
    let estimate = history.rate_estimate.map(fmt_f64).unwrap_or_else(|| "NA".into());
    writeln!(inner, "# rate_estimate={estimate}").map_err(|e| CliError::io(path, e))?;
    inner.flush().map_err(|e| CliError::io(path, e))
}
