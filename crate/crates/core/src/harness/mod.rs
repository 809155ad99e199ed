//! Experiment configuration, replica execution, metrics and CSV output.

mod metrics;
mod output;

use std::path::{Path, PathBuf};

pub use metrics::{consensus_error, summarize, MetricsRecord, SweepPoint};
pub use output::{write_metrics, write_sweep, write_trace, write_trace_dir, TraceField};

use crate::channel::{LinkParamTable, LinkParams};
use crate::engine::{run_replica, AlgorithmKind, Network, Trace};
use crate::graph::{parse_graph, Digraph};
use crate::{Error, Result};

/// Benchmark topologies bundled with their initial values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Paper5,
    Paper10,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Paper5, Preset::Paper10];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Paper5 => "paper5",
            Preset::Paper10 => "paper10",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == name).ok_or_else(|| Error::UnknownPreset(name.to_string()))
    }

    pub fn graph(&self) -> Digraph {
        match self {
            Preset::Paper5 => Digraph::five_node(),
            Preset::Paper10 => Digraph::ten_node(),
        }
    }

    pub fn x0(&self) -> Vec<f64> {
        match self {
            Preset::Paper5 => vec![4.0, 5.0, 6.0, 3.0, 2.0],
            Preset::Paper10 => vec![0.0, 28.0, 6.0, 8.0, 26.0, -2.0, 18.0, 2.0, 4.0, 10.0],
        }
    }
}

/// Resolves `--graph`: a preset name, or a path to an edge-list file.
pub fn load_graph(spec: &str) -> Result<(String, Digraph)> {
    if let Ok(preset) = Preset::from_name(spec) {
        return Ok((preset.name().to_string(), preset.graph()));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::UnknownPreset(spec.to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
    Ok((name, parse_graph(&text)?))
}

/// Resolves `--x0`: a preset name or a comma-separated list.
pub fn parse_x0(spec: &str, n: usize) -> Result<Vec<f64>> {
    let x0 = match Preset::from_name(spec.trim()) {
        Ok(preset) => preset.x0(),
        Err(_) => spec
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::config("x0", format!("`{}` is not a finite number", v.trim())))
            })
            .collect::<Result<_>>()?,
    };
    if x0.len() != n {
        return Err(Error::config("x0", format!("{} values for {n} nodes", x0.len())));
    }
    Ok(x0)
}

/// Parses `--seeds`: a count `N` (seeds `0..N`), a range `a..b`
/// (exclusive), or a list `a,b,c`.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::config("seeds", format!("cannot parse `{spec}` (use N, a..b or a,b,c)"));
    let spec = spec.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        (a..b).collect()
    } else if spec.contains(',') {
        spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    } else {
        (0..spec.parse::<u64>().map_err(|_| bad())?).collect()
    };
    if seeds.is_empty() {
        return Err(Error::config("seeds", "at least one seed is required"));
    }
    Ok(seeds)
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    TauMax,
    Q,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::TauMax => "tau_max",
            SweepParam::Q => "q",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Sweep {
    /// Parses `tau-max=0,2,4` or `q=0.2,0.6`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, values) = spec.split_once('=').ok_or_else(|| Error::config("sweep", "expected `param=v1,v2,...`"))?;
        let param = match key.trim() {
            "tau-max" | "tau_max" => SweepParam::TauMax,
            "q" => SweepParam::Q,
            other => return Err(Error::config("sweep", format!("unknown parameter `{other}` (tau-max|q)"))),
        };
        let values = values
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| Error::config("sweep", format!("bad value `{v}`"))))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::config("sweep", "no values"));
        }
        if param == SweepParam::TauMax && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(Error::config("sweep", "tau-max values must be non-negative integers"));
        }
        Ok(Sweep { param, values })
    }
}

/// One experiment: a protocol on a graph, replicated over seeds.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub graph_name: String,
    pub graph: Digraph,
    pub algorithm: AlgorithmKind,
    pub params: LinkParamTable,
    pub iterations: usize,
    pub seeds: Vec<u64>,
    pub x0: Vec<f64>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A preset with its bundled initial values, one seed and 100 slots.
    pub fn preset(preset: Preset, algorithm: AlgorithmKind, q: f64, tau_max: u32) -> Result<Self> {
        Ok(ExperimentConfig {
            graph_name: preset.name().to_string(),
            graph: preset.graph(),
            algorithm,
            params: LinkParamTable::uniform(LinkParams::new(q, tau_max)?),
            iterations: 100,
            seeds: vec![0],
            x0: preset.x0(),
            out_dir: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iters", "at least one iteration is required"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if self.x0.len() != self.graph.node_count() {
            return Err(Error::LengthMismatch { expected: self.graph.node_count(), actual: self.x0.len() });
        }
        if self.algorithm.is_arq() && !self.graph.is_strongly_connected() {
            return Err(Error::NotStronglyConnected);
        }
        Ok(())
    }

    /// `sum(x0) / n`.
    pub fn z_star(&self) -> f64 {
        self.x0.iter().sum::<f64>() / self.x0.len() as f64
    }

    /// Copy with one swept parameter replaced.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<Self> {
        let base = self.params.default_params();
        let params = match param {
            SweepParam::TauMax => LinkParams::new(base.q(), value as u32)?,
            SweepParam::Q => LinkParams::new(value, base.tau_max())?,
        };
        Ok(ExperimentConfig { params: LinkParamTable::uniform(params), ..self.clone() })
    }
}

/// Traces of every replica plus the aggregated metrics.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub z_star: f64,
    pub traces: Vec<Trace>,
    pub metrics: Vec<MetricsRecord>,
    /// Non-fatal issues, e.g. a baseline run on a graph that is not
    /// strongly connected.
    pub warnings: Vec<String>,
}

/// Runs every replica (in parallel with the `parallel` feature) and
/// aggregates. Replica `r` uses seed `cfg.seeds[r]` and stream id `r`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    if !cfg.graph.is_strongly_connected() {
        warnings.push(format!("graph `{}` is not strongly connected; consensus is not guaranteed", cfg.graph_name));
    }
    let net = Network::new(cfg.graph.clone());
    let job = |(replica, &seed): (usize, &u64)| {
        run_replica(&net, &cfg.x0, cfg.algorithm, &cfg.params, cfg.iterations, seed, replica as u32)
    };
    #[cfg(feature = "parallel")]
    let traces: Vec<Trace> = {
        use rayon::prelude::*;
        cfg.seeds.par_iter().enumerate().map(job).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let traces: Vec<Trace> = cfg.seeds.iter().enumerate().map(job).collect::<Result<_>>()?;

    let z_star = cfg.z_star();
    let metrics = consensus_error(&traces, z_star);
    Ok(ExperimentResult { z_star, traces, metrics, warnings })
}

/// Runs `cfg` once per sweep value and summarizes each at the final slot.
pub fn run_sweep(cfg: &ExperimentConfig, sweep: &Sweep) -> Result<Vec<SweepPoint>> {
    sweep
        .values
        .iter()
        .map(|&v| {
            let result = run_experiment(&cfg.with_param(sweep.param, v)?)?;
            Ok(summarize(v, &result.metrics))
        })
        .collect()
}

/// Writes `metrics.csv` and one directory of traces per replica.
pub fn write_experiment(result: &ExperimentResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_metrics(&result.metrics, &dir.join("metrics.csv"))?;
    for trace in &result.traces {
        write_trace_dir(trace, &dir.join(format!("replica-{:03}-seed-{}", trace.replica, trace.seed)))?;
    }
    Ok(())
}
