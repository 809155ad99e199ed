use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::metrics::{MetricsRecord, SweepPoint};
use super::SweepParam;
use crate::engine::{Trace, TraceRow};
use crate::{Error, Result};

/// Per-node series of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceField {
    X,
    Y,
    Z,
    Sigma,
}

impl TraceField {
    pub const ALL: [TraceField; 4] = [TraceField::X, TraceField::Y, TraceField::Z, TraceField::Sigma];

    pub fn name(&self) -> &'static str {
        match self {
            TraceField::X => "x",
            TraceField::Y => "y",
            TraceField::Z => "z",
            TraceField::Sigma => "sigma",
        }
    }

    fn values<'r>(&self, row: &'r TraceRow) -> &'r [f64] {
        match self {
            TraceField::X => &row.x,
            TraceField::Y => &row.y,
            TraceField::Z => &row.z,
            TraceField::Sigma => &row.sigma,
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `k,<field>_1,...,<field>_n`, one row per slot.
pub fn write_trace(trace: &Trace, field: TraceField, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let header: Vec<String> = std::iter::once("k".to_string())
        .chain((1..=trace.node_count()).map(|j| format!("{}_{j}", field.name())))
        .collect();
    w.write_record(&header)?;
    for row in &trace.rows {
        w.write_record(std::iter::once(row.k.to_string()).chain(field.values(row).iter().map(|&v| num(v))))?;
    }
    finish(w, path)
}

/// Writes `x.csv`, `y.csv`, `z.csv`, `sigma.csv`, `mass.csv` and, for ARQ
/// runs, `realization.txt` into `dir`.
pub fn write_trace_dir(trace: &Trace, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for field in TraceField::ALL {
        write_trace(trace, field, &dir.join(format!("{}.csv", field.name())))?;
    }
    let path = dir.join("mass.csv");
    let mut w = create(&path)?;
    w.write_record(["k", "total_x", "total_y", "inflight_x", "inflight_y", "buffered_x", "buffered_y"])?;
    for r in &trace.rows {
        w.write_record([
            r.k.to_string(),
            num(r.total_x()),
            num(r.total_y()),
            num(r.inflight_x),
            num(r.inflight_y),
            num(r.buffered_x),
            num(r.buffered_y),
        ])?;
    }
    finish(w, &path)?;
    if let Some(realization) = &trace.realization {
        let path = dir.join("realization.txt");
        let mut f = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        write!(f, "{realization}").and_then(|_| f.flush()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub fn write_metrics(metrics: &[MetricsRecord], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["k", "abs_error", "abs_error_std", "mean_rel_error", "mean_abs_error", "mean_sigma", "max_sigma"])?;
    for m in metrics {
        w.write_record([
            m.k.to_string(),
            num(m.abs_error),
            num(m.abs_error_std),
            num(m.mean_rel_error),
            num(m.mean_abs_error),
            num(m.mean_sigma),
            num(m.max_sigma),
        ])?;
    }
    finish(w, path)
}

pub fn write_sweep(param: SweepParam, points: &[SweepPoint], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    w.write_record([
        param.name(),
        "abs_error",
        "abs_error_std",
        "mean_rel_error",
        "mean_abs_error",
        "time_avg_abs_error",
    ])?;
    for p in points {
        let value = match param {
            SweepParam::TauMax => format!("{}", p.value as u32),
            SweepParam::Q => format!("{}", p.value),
        };
        w.write_record([
            value,
            num(p.abs_error),
            num(p.abs_error_std),
            num(p.mean_rel_error),
            num(p.mean_abs_error),
            num(p.time_avg_abs_error),
        ])?;
    }
    finish(w, path)
}
