use crate::engine::Trace;

/// Aggregate over replicas at one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    pub k: usize,
    /// `|z_hat - z*|`, `z_hat` the mean ratio over nodes and replicas.
    pub abs_error: f64,
    /// Standard deviation across replicas of the per-replica node-mean
    /// ratio.
    pub abs_error_std: f64,
    /// `||z - z* 1|| / ||z* 1||` averaged over replicas (the plain norm
    /// when `z* = 0`).
    pub mean_rel_error: f64,
    /// `|z_j - z*|` averaged over nodes and replicas.
    pub mean_abs_error: f64,
    /// Network-mean running sum, averaged over replicas.
    pub mean_sigma: f64,
    /// Largest per-node running sum over replicas.
    pub max_sigma: f64,
}

/// Error series of a set of replicas sharing one configuration.
pub fn consensus_error(traces: &[Trace], z_star: f64) -> Vec<MetricsRecord> {
    let Some(first) = traces.first() else { return Vec::new() };
    let replicas = traces.len() as f64;
    let n = first.node_count() as f64;
    let scale = if z_star == 0.0 { 1.0 } else { z_star.abs() * n.sqrt() };
    (0..first.rows.len())
        .map(|k| {
            let rows = traces.iter().map(|t| &t.rows[k]);
            let means: Vec<f64> = rows.clone().map(|r| r.z.iter().sum::<f64>() / n).collect();
            let z_hat = means.iter().sum::<f64>() / replicas;
            let var = means.iter().map(|m| (m - z_hat).powi(2)).sum::<f64>() / replicas;
            let rel = rows.clone().map(|r| r.z.iter().map(|z| (z - z_star).powi(2)).sum::<f64>().sqrt() / scale);
            let abs = rows.clone().map(|r| r.z.iter().map(|z| (z - z_star).abs()).sum::<f64>() / n);
            MetricsRecord {
                k,
                abs_error: (z_hat - z_star).abs(),
                abs_error_std: var.sqrt(),
                mean_rel_error: rel.sum::<f64>() / replicas,
                mean_abs_error: abs.sum::<f64>() / replicas,
                mean_sigma: rows.clone().map(|r| r.mean_sigma()).sum::<f64>() / replicas,
                max_sigma: rows.flat_map(|r| r.sigma.iter().copied()).fold(0.0, f64::max),
            }
        })
        .collect()
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    /// Final-slot metrics.
    pub abs_error: f64,
    pub abs_error_std: f64,
    pub mean_rel_error: f64,
    pub mean_abs_error: f64,
    /// `abs_error` averaged over slots `1..=K`.
    pub time_avg_abs_error: f64,
}

pub fn summarize(value: f64, metrics: &[MetricsRecord]) -> SweepPoint {
    let last = metrics.last().copied().expect("metrics cover at least one slot");
    let tail = &metrics[1.min(metrics.len() - 1)..];
    SweepPoint {
        value,
        abs_error: last.abs_error,
        abs_error_std: last.abs_error_std,
        mean_rel_error: last.mean_rel_error,
        mean_abs_error: last.mean_abs_error,
        time_avg_abs_error: tail.iter().map(|m| m.abs_error).sum::<f64>() / tail.len() as f64,
    }
}
