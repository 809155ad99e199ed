//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use arq_consensus::augmented::{
    build_index, build_xi, ergodicity_trace, forward_product, replay, xi_sequence, Realization,
};
use arq_consensus::channel::{
    fate_distribution, sample_fate, LinkParamTable, LinkParams, PacketFate, RngStream, ScriptedChannel,
};
use arq_consensus::engine::{init_states, rc_step, run, run_replica, AlgorithmKind, Network, Simulation, Trace};
use arq_consensus::graph::{assign_weights, Digraph, Link};
use arq_consensus::harness::{self, run_experiment, run_sweep, ExperimentConfig, Preset, Sweep, SweepParam};

const ARQ: [AlgorithmKind; 2] = [AlgorithmKind::ArqMtmf, AlgorithmKind::ArqStsf];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn uniform(q: f64, tau: u32) -> LinkParamTable {
    LinkParamTable::uniform(LinkParams::new(q, tau).unwrap())
}

fn paper5() -> (Network, Vec<f64>) {
    (Network::new(Preset::Paper5.graph()), Preset::Paper5.x0())
}

fn paper10() -> (Network, Vec<f64>) {
    (Network::new(Preset::Paper10.graph()), Preset::Paper10.x0())
}

fn max_dev(z: &[f64], target: f64) -> f64 {
    z.iter().map(|v| (v - target).abs()).fold(0.0, f64::max)
}

fn rc_baseline_convergence() -> Verdict {
    let start = Instant::now();
    let (net, x0) = paper5();
    let mut states = init_states(net.graph(), &x0).unwrap();
    for _ in 0..100 {
        rc_step(&mut states, &net);
    }
    let z: Vec<f64> = states.iter().map(|s| s.z).collect();
    let err = max_dev(&z, 4.0);
    let elapsed = start.elapsed();
    verdict(err < 1e-9 && elapsed < Duration::from_secs(1), format!("max |z_j[100]-4| = {err:.3e}, {elapsed:.2?}"))
}

fn weight_fidelity() -> Verdict {
    let t = 1.0 / 3.0;
    let reference = [
        [t, 0.0, 0.0, 0.5, 0.0],
        [t, t, 0.0, 0.0, 0.0],
        [t, t, 0.5, 0.0, t],
        [0.0, 0.0, 0.0, 0.5, t],
        [0.0, t, 0.5, 0.0, t],
    ];
    let p = assign_weights(&Digraph::five_node());
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for (r, row) in reference.iter().enumerate() {
        for (c, &e) in row.iter().enumerate() {
            let v = p.get(r, c);
            if e == 0.5 || e == 0.0 {
                exact &= v == e;
            } else {
                worst = worst.max((v - e).abs());
            }
        }
    }
    verdict(exact && worst <= 1e-15, format!("halves and zeros exact: {exact}, max deviation of thirds {worst:.1e}"))
}

fn fate_distribution_check() -> Verdict {
    let params = LinkParams::new(0.4, 2).unwrap();
    let dist = fate_distribution(params);
    let expected = [0.6, 0.24, 0.096, 0.064];
    let analytic = dist.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut counts = [0usize; 4];
    let mut rng = RngStream::new(2024, 0, Link { src: 0, dst: 1 });
    let draws = 100_000;
    for _ in 0..draws {
        match sample_fate(params, &mut rng) {
            PacketFate::Delivered { delay } => counts[delay as usize] += 1,
            PacketFate::Dropped => counts[3] += 1,
        }
    }
    let mc = counts.iter().zip(expected).map(|(&c, e)| (c as f64 / draws as f64 - e).abs()).fold(0.0, f64::max);
    verdict(
        dist.len() == 4 && analytic <= 1e-12 && mc <= 0.005,
        format!("analytic max dev {analytic:.1e}, Monte Carlo max dev {mc:.4} over 1e5 draws"),
    )
}

fn mass_conservation() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for (net, x0) in [paper5(), paper10()] {
        let sx: f64 = x0.iter().sum();
        let n = x0.len() as f64;
        for q in [0.2, 0.6, 0.8] {
            for tau in [2, 5] {
                for seed in 0..5 {
                    for algo in ARQ {
                        let trace = run(&net, &x0, algo, &uniform(q, tau), 500, seed).unwrap();
                        for row in &trace.rows {
                            worst = worst.max((row.total_x() - sx).abs()).max((row.total_y() - n).abs());
                        }
                        runs += 1;
                    }
                }
            }
        }
    }
    verdict(worst <= 1e-10, format!("{runs} runs x 500 slots, max deviation {worst:.2e}"))
}

fn oracle_gap(net: &Network, x0: &[f64], trace: &Trace) -> f64 {
    let states = replay(net, x0, trace.realization.as_ref().unwrap()).unwrap();
    let n = x0.len();
    let mut worst: f64 = 0.0;
    for (row, s) in trace.rows.iter().zip(&states) {
        for j in 0..n {
            worst = worst.max((row.x[j] - s.actual_x(n)[j]).abs()).max((row.y[j] - s.actual_y(n)[j]).abs());
        }
    }
    worst
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    // Two-node scenario: 1->2 has limit 2 and fails three times (drop);
    // 2->1 has limit 1 and fails once before delivery.
    let g = Digraph::new(2, [(0, 1), (1, 0)]).unwrap();
    let net2 = Network::new(g.clone());
    let mut params = uniform(0.5, 2);
    params.set(Link { src: 1, dst: 0 }, LinkParams::new(0.5, 1).unwrap());
    let channel = ScriptedChannel::new().script(g.link_index(0, 1).unwrap(), 0, vec![true, true, true]).script(
        g.link_index(1, 0).unwrap(),
        0,
        vec![true, false],
    );
    for algo in ARQ {
        let mut sim = Simulation::new(&net2, &[4.0, 2.0], algo, params.clone(), channel.clone()).unwrap();
        sim.record_realization(true);
        let trace = sim.run(50).unwrap();
        worst = worst.max(oracle_gap(&net2, &[4.0, 2.0], &trace));
    }
    let (net, x0) = paper5();
    let mut round_trip = true;
    for seed in 0..3 {
        for algo in ARQ {
            let trace = run(&net, &x0, algo, &uniform(0.6, 2), 200, seed).unwrap();
            let recorded = trace.realization.as_ref().unwrap();
            round_trip &= Realization::parse(&recorded.to_string()).ok().as_ref() == Some(recorded);
            worst = worst.max(oracle_gap(&net, &x0, &trace));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-12 && round_trip && elapsed < Duration::from_secs(10),
        format!("max |engine - oracle| = {worst:.2e}, text round trip {round_trip}, {elapsed:.2?}"),
    )
}

fn column_stochasticity() -> Verdict {
    let (net, x0) = paper5();
    let index = build_index(net.graph(), 2);
    let mut count = 0usize;
    let mut worst: f64 = 0.0;
    let mut seed = 0u64;
    while count < 10_000 {
        let q = [0.1, 0.4, 0.6, 0.9][seed as usize % 4];
        let algo = ARQ[(seed / 4) as usize % 2];
        let trace = run(&net, &x0, algo, &uniform(q, 2), 500, 1000 + seed).unwrap();
        let r = trace.realization.unwrap();
        for k in 0..r.len() {
            worst = worst.max(build_xi(&index, net.weights(), &r, k).unwrap().column_stochastic_error());
            count += 1;
        }
        seed += 1;
    }
    let mut product_worst: f64 = 0.0;
    for algo in ARQ {
        let trace = run(&net, &x0, algo, &uniform(0.6, 2), 1000, 77).unwrap();
        let (_, xis) = xi_sequence(&net, trace.realization.as_ref().unwrap()).unwrap();
        product_worst = product_worst.max(forward_product(&xis).unwrap().column_stochastic_error());
    }
    verdict(
        worst <= 1e-12 && product_worst <= 1e-9,
        format!("{count} matrices, max column-sum error {worst:.1e}; L_1000 max error {product_worst:.1e}"),
    )
}

fn stochastic_convergence() -> Verdict {
    let (net, x0) = paper5();
    let mut parts = Vec::new();
    let mut pass = true;
    for algo in ARQ {
        let mut worst: f64 = 0.0;
        let mut rel = 0.0;
        for seed in 0..20 {
            let trace = run(&net, &x0, algo, &uniform(0.6, 2), 2000, seed).unwrap();
            worst = worst.max(max_dev(&trace.last().z, 4.0));
            let z300 = &trace.rows[300].z;
            rel += z300.iter().map(|z| (z - 4.0).powi(2)).sum::<f64>().sqrt() / (4.0 * 5f64.sqrt());
        }
        rel /= 20.0;
        pass &= worst < 1e-3 && rel < 1e-2;
        parts.push(format!("{algo}: max |z[2000]-4| {worst:.1e}, mean rel error at k=300 {rel:.1e}"));
    }
    verdict(pass, parts.join("; "))
}

fn q_zero_reduction() -> Verdict {
    let (net, x0) = paper5();
    let rc = run(&net, &x0, AlgorithmKind::Rc, &uniform(0.0, 0), 200, 0).unwrap();
    let mut worst: f64 = 0.0;
    for algo in [AlgorithmKind::ArqMtmf, AlgorithmKind::ArqStsf, AlgorithmKind::RcRs, AlgorithmKind::Rrc] {
        let trace = run(&net, &x0, algo, &uniform(0.0, 3), 200, 5).unwrap();
        for (a, b) in trace.rows.iter().zip(&rc.rows) {
            for j in 0..5 {
                worst = worst.max((a.x[j] - b.x[j]).abs()).max((a.y[j] - b.y[j]).abs()).max((a.z[j] - b.z[j]).abs());
            }
        }
    }
    verdict(worst <= 1e-14, format!("max deviation from RC over 200 slots {worst:.1e}"))
}

fn running_sum_boundedness() -> Verdict {
    let (net, x0) = paper10();
    let params = uniform(0.6, 5);
    let p = net.weights();
    let traces = |algo| -> Vec<Trace> {
        (0..20).map(|s| run_replica(&net, &x0, algo, &params, 1000, s, s as u32).unwrap()).collect()
    };
    let mean_sigma_end = |ts: &[Trace]| ts.iter().map(|t| t.last().mean_sigma()).sum::<f64>() / ts.len() as f64;

    let rcrs = traces(AlgorithmKind::RcRs);
    let rcrs_mean = mean_sigma_end(&rcrs);
    let mut decreases = 0usize;
    let mut first_drop = String::new();
    for t in &rcrs {
        for w in t.rows.windows(2) {
            for j in 0..x0.len() {
                if w[1].sigma[j] < w[0].sigma[j] {
                    if decreases == 0 {
                        first_drop = format!(
                            " (first: seed {} node {} at k={}, x_j[{}] = {:.3})",
                            t.seed,
                            j + 1,
                            w[1].k,
                            w[0].k,
                            w[0].x[j]
                        );
                    }
                    decreases += 1;
                }
            }
        }
    }
    let mut pass = decreases == 0;
    let mut parts = vec![format!("rcrs mean sigma(1000) {rcrs_mean:.3e}, decreasing steps {decreases}{first_drop}")];
    for algo in ARQ {
        let ts = traces(algo);
        let mean = mean_sigma_end(&ts);
        let mut max_sigma: f64 = 0.0;
        let mut max_out: f64 = 0.0;
        for t in &ts {
            for row in &t.rows {
                for j in 0..x0.len() {
                    max_sigma = max_sigma.max(row.sigma[j].abs());
                    max_out = max_out.max((1.0 - p.self_weight(j)) * row.x[j].abs());
                }
            }
        }
        let ratio = rcrs_mean / mean.abs().max(f64::MIN_POSITIVE);
        pass &= ratio >= 10.0 && max_sigma < 10.0 * max_out;
        parts.push(format!(
            "{algo}: mean sigma(1000) {mean:.2e} (ratio {ratio:.1e}), max sigma {max_sigma:.2} vs max outgoing {max_out:.2}"
        ));
    }
    verdict(pass, parts.join("; "))
}

fn inversions(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] < w[0]).count()
}

fn error_vs_tau_trend() -> Verdict {
    let sweep = Sweep::parse("tau-max=0,2,4,6,8,10").unwrap();
    let fmt = |v: &[f64]| v.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ");
    let mut parts = Vec::new();
    let mut pass = true;
    for algo in ARQ {
        let mut cfg = ExperimentConfig::preset(Preset::Paper5, algo, 0.8, 0).unwrap();
        cfg.iterations = 200;
        cfg.seeds = (0..20).collect();
        let points = run_sweep(&cfg, &sweep).unwrap();
        let high: Vec<f64> = points.iter().map(|p| p.abs_error).collect();
        let averaged: Vec<f64> = points.iter().map(|p| p.time_avg_abs_error).collect();
        let low_cfg = cfg.with_param(SweepParam::Q, 0.2).unwrap();
        let low: Vec<f64> = run_sweep(&low_cfg, &sweep).unwrap().iter().map(|p| p.abs_error).collect();
        let inv = inversions(&high);
        let low_max = low.iter().copied().fold(0.0, f64::max);
        pass &= inv <= 1 && low_max < 0.06;
        parts.push(format!(
            "{algo}: q=0.8 [{}] inversions {inv}; q=0.2 max {low_max:.1e}; slot-averaged q=0.8 [{}] (info)",
            fmt(&high),
            fmt(&averaged)
        ));
    }
    verdict(pass, parts.join("; "))
}

fn ergodicity() -> Verdict {
    let (net, x0) = paper5();
    let mut pass = true;
    let mut parts = Vec::new();
    for algo in ARQ {
        for seed in 0..3 {
            let trace = run(&net, &x0, algo, &uniform(0.2, 2), 500, seed).unwrap();
            let (_, xis) = xi_sequence(&net, trace.realization.as_ref().unwrap()).unwrap();
            let deltas = ergodicity_trace(&xis).unwrap();
            let hit = deltas.iter().position(|&d| d < 1e-6);
            pass &= hit.is_some() && deltas[500] < deltas[50];
            parts.push(format!(
                "{algo} seed {seed}: K={} d50 {:.1e} d500 {:.1e}",
                hit.map_or("none".to_string(), |k| k.to_string()),
                deltas[50],
                deltas[500]
            ));
        }
    }
    verdict(pass, parts.join("; "))
}

fn write_all(dir: &std::path::Path) {
    let configs = [
        (Preset::Paper5, AlgorithmKind::ArqMtmf),
        (Preset::Paper10, AlgorithmKind::ArqStsf),
        (Preset::Paper10, AlgorithmKind::RcRs),
    ];
    for (preset, algo) in configs {
        let mut cfg = ExperimentConfig::preset(preset, algo, 0.6, 3).unwrap();
        cfg.iterations = 300;
        cfg.seeds = (0..4).collect();
        let result = run_experiment(&cfg).unwrap();
        harness::write_experiment(&result, &dir.join(format!("{}-{algo}", preset.name()))).unwrap();
    }
}

fn reproducibility() -> Verdict {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        write_all(dir.path());
    }
    let mut files = 0;
    let mut identical = true;
    let mut stack = vec![dirs[0].path().to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let other = dirs[1].path().join(path.strip_prefix(dirs[0].path()).unwrap());
                identical &= std::fs::read(&path).ok() == std::fs::read(&other).ok();
                files += 1;
            }
        }
    }
    verdict(identical && files > 0, format!("{files} files compared byte for byte"))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 12] = [
        ("deterministic baseline convergence", rc_baseline_convergence),
        ("weight-matrix fidelity", weight_fidelity),
        ("fate distribution", fate_distribution_check),
        ("mass conservation", mass_conservation),
        ("oracle equivalence", oracle_equivalence),
        ("column stochasticity", column_stochasticity),
        ("stochastic convergence", stochastic_convergence),
        ("q=0 reduction", q_zero_reduction),
        ("running-sum boundedness", running_sum_boundedness),
        ("error-vs-tau trend", error_vs_tau_trend),
        ("ergodicity diagnostic", ergodicity),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.pass);
        println!("{} criterion {:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
