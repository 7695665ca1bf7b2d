//! Parameter sweeps over one or two dotted config paths.

use anyhow::{Context, Result};
use rayon::prelude::*;

use crate::config::{set_dotted, ExperimentConfig, SweepSection};
use crate::experiments::{run_experiment, RunOptions};
use crate::output::{Cell, ScalarValue, Scalars, Table};

/// Result of one grid point: the axis values and either scalars or a reason.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub values: Vec<toml::Value>,
    pub result: std::result::Result<Scalars, String>,
}

/// Grid points in lexicographic order (last axis fastest).
fn grid(sweep: &SweepSection) -> Vec<Vec<toml::Value>> {
    let mut out: Vec<Vec<toml::Value>> = vec![Vec::new()];
    for axis in &sweep.axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    out
}

fn run_point(
    base: &toml::Table,
    sweep: &SweepSection,
    values: &[toml::Value],
    seed: u64,
    opts: &RunOptions,
) -> Result<Scalars> {
    let mut table = base.clone();
    table.remove("sweep");
    table.insert("experiment".into(), toml::Value::String(sweep.inner.as_str().into()));
    for (axis, v) in sweep.axes.iter().zip(values) {
        set_dotted(&mut table, &axis.parameter, v.clone())?;
    }
    let mut cfg = ExperimentConfig::from_table(table)?;
    cfg.seed = seed;
    Ok(run_experiment(&cfg, opts)?.scalars)
}

/// Run every grid point on `workers` threads (rayon's default when `None`).
/// Failures become rows with a reason; row order never depends on scheduling.
pub fn run_sweep(
    raw: &toml::Table,
    sweep: &SweepSection,
    seed: u64,
    opts: &RunOptions,
    workers: Option<usize>,
) -> Result<Vec<SweepPoint>> {
    let points = grid(sweep);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building worker pool")?;
    let results: Vec<SweepPoint> = pool.install(|| {
        points
            .par_iter()
            .map(|values| SweepPoint {
                values: values.clone(),
                result: run_point(raw, sweep, values, seed, opts).map_err(|e| format!("{e:#}")),
            })
            .collect()
    });
    Ok(results)
}

fn value_cell(v: &toml::Value) -> Cell {
    match v {
        toml::Value::Float(x) => Cell::Float(*x),
        toml::Value::Integer(i) => Cell::Int(*i),
        toml::Value::String(s) => Cell::Text(s.clone()),
        other => Cell::Text(other.to_string()),
    }
}

/// One row per point; scalar columns are the union of names in row order.
pub fn sweep_table(sweep: &SweepSection, points: &[SweepPoint]) -> Table {
    let mut names: Vec<String> = Vec::new();
    for p in points {
        if let Ok(s) = &p.result {
            for (k, _) in &s.0 {
                if !names.contains(k) {
                    names.push(k.clone());
                }
            }
        }
    }
    let mut columns: Vec<String> = sweep.axes.iter().map(|a| a.parameter.clone()).collect();
    columns.extend(["status".to_string(), "reason".to_string()]);
    columns.extend(names.iter().cloned());
    let mut table = Table {
        schema: format!("ion-dfs/sweep-{}/v1", sweep.inner.as_str()),
        columns,
        rows: Vec::with_capacity(points.len()),
    };
    for p in points {
        let mut row: Vec<Cell> = p.values.iter().map(value_cell).collect();
        match &p.result {
            Ok(s) => {
                row.push("ok".into());
                row.push(Cell::Empty);
                for n in &names {
                    row.push(match s.get(n) {
                        Some(ScalarValue::Float(x)) => Cell::Float(*x),
                        Some(ScalarValue::Int(i)) => Cell::Int(*i),
                        Some(ScalarValue::Text(t)) => Cell::Text(t.clone()),
                        None => Cell::Empty,
                    });
                }
            }
            Err(reason) => {
                row.push("failed".into());
                row.push(Cell::Text(reason.clone()));
                row.extend(names.iter().map(|_| Cell::Empty));
            }
        }
        table.push(row);
    }
    table
}
