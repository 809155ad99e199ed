use std::path::PathBuf;
use std::process::ExitCode;

use arq_consensus::channel::{LinkParamTable, LinkParams};
use arq_consensus::engine::AlgorithmKind;
use arq_consensus::harness::{
    load_graph, parse_seeds, parse_x0, run_experiment, run_sweep, write_experiment, write_sweep, ExperimentConfig,
    Preset, Sweep,
};
use arq_consensus::Error;
use clap::Parser;
use serde_json::json;

/// Run ratio-consensus experiments over lossy directed networks and write
/// CSV traces.
#[derive(Debug, Parser)]
#[command(name = "arqrc", version)]
struct Args {
    /// Preset (paper5, paper10) or edge-list file.
    #[arg(long, default_value = "paper5")]
    graph: String,

    /// rc, rrc, rcrs, arq-stsf or arq-mtmf.
    #[arg(long, default_value = "arq-stsf")]
    algo: AlgorithmKind,

    /// Packet error probability on every link.
    #[arg(long, default_value_t = 0.2)]
    q: f64,

    /// Retransmission limit on every link.
    #[arg(long, default_value_t = 2)]
    tau_max: u32,

    #[arg(long, default_value_t = 200)]
    iters: usize,

    /// Count N (0..N), range a..b, or list a,b,c.
    #[arg(long, default_value = "1")]
    seeds: String,

    /// Comma-separated values or a preset name; defaults to the graph's
    /// preset values.
    #[arg(long)]
    x0: Option<String>,

    #[arg(long, env = "ARQRC_OUT_DIR", default_value = "arqrc-out")]
    out: PathBuf,

    /// Per-link overrides, lines `src dst q tau_max`.
    #[arg(long)]
    link_params: Option<PathBuf>,

    /// `tau-max=v1,v2,..` or `q=v1,v2,..`.
    #[arg(long)]
    sweep: Option<String>,
}

fn config(args: &Args) -> Result<ExperimentConfig, Error> {
    let (graph_name, graph) = load_graph(&args.graph)?;
    let x0 = match (&args.x0, Preset::from_name(&args.graph)) {
        (Some(spec), _) => parse_x0(spec, graph.node_count())?,
        (None, Ok(preset)) => preset.x0(),
        (None, Err(_)) => {
            return Err(Error::Config { field: "x0", message: "required when --graph is a file".into() });
        }
    };
    let default = LinkParams::new(args.q, args.tau_max)?;
    let params = match &args.link_params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
            LinkParamTable::parse_overrides(&text, default, &graph)?
        }
        None => LinkParamTable::uniform(default),
    };
    Ok(ExperimentConfig {
        graph_name,
        graph,
        algorithm: args.algo,
        params,
        iterations: args.iters,
        seeds: parse_seeds(&args.seeds)?,
        x0,
        out_dir: Some(args.out.clone()),
    })
}

fn execute(args: &Args) -> Result<serde_json::Value, Error> {
    let cfg = config(args)?;
    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io { path: args.out.clone(), source })?;
    if let Some(spec) = &args.sweep {
        let sweep = Sweep::parse(spec)?;
        let points = run_sweep(&cfg, &sweep)?;
        let path = args.out.join("sweep.csv");
        write_sweep(sweep.param, &points, &path)?;
        return Ok(json!({
            "status": "ok",
            "graph": cfg.graph_name,
            "algo": cfg.algorithm.name(),
            "sweep": sweep.param.name(),
            "points": points.len(),
            "output": path,
        }));
    }
    let result = run_experiment(&cfg)?;
    for warning in &result.warnings {
        eprintln!("warning: {warning}");
    }
    write_experiment(&result, &args.out)?;
    let last = result.metrics.last().expect("at least one slot");
    Ok(json!({
        "status": "ok",
        "graph": cfg.graph_name,
        "algo": cfg.algorithm.name(),
        "replicas": result.traces.len(),
        "z_star": result.z_star,
        "final_abs_error": last.abs_error,
        "final_mean_rel_error": last.mean_rel_error,
        "output": args.out,
    }))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(err) if !err.use_stderr() => err.exit(),
        Err(err) => {
            let message = err.to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", json!({ "error": { "kind": "usage", "field": null, "message": first } }));
            return ExitCode::from(2);
        }
    };
    match execute(&args) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            let field = match &err {
                Error::Config { field, .. } => Some(*field),
                _ => None,
            };
            eprintln!("{}", json!({ "error": { "kind": err.kind(), "field": field, "message": err.to_string() } }));
            ExitCode::from(2)
        }
    }
}
