//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p gossip-cli --release --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use gossip_cli::{cmd_run, CInit, ExperimentConfig};
use gossip_core::analysis::{
    averaging_time_bound, convergence_rate, doubling_ladder, empirical_averaging_time, expected_projection_exact,
    speedup_curve, SpeedupConfig,
};
use gossip_core::engine::{
    primal_from_dual, rbk_step, rbk_step_projection, rnm_step, DualState, Engine, PrimalState, Simulation,
};
use gossip_core::sampling::{trial_rng, Sampler};
use gossip_core::{Graph, GraphSpec, IncidenceSystem, SamplerSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn graph(spec: &str) -> Graph {
    spec.parse::<GraphSpec>().unwrap().build().unwrap()
}

fn indices(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64).collect()
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn one_step_convergence() -> Outcome {
    let mut worst: f64 = 0.0;
    for spec in ["path:2", "complete:3", "ring:6", "ring:30", "ring:100", "grid:4x4"] {
        let g = graph(spec);
        for engine in [Engine::Primal, Engine::Dual] {
            let c = indices(g.num_nodes());
            let mut sim = Simulation::new(engine, &g, SamplerSpec::AllEdges, c, trial_rng(1, 0)).unwrap();
            sim.step().unwrap();
            let err = sim.exact_error() / sim.initial_error();
            worst = worst.max(err);
            if !(err < 1e-12) {
                return Err(format!("{spec} {engine}: relative error {err:e} after one step"));
            }
        }
    }
    Ok(format!("6 graphs x 2 engines, worst relative error {worst:.1e}"))
}

fn projection_equivalence() -> Outcome {
    let graphs: Vec<Graph> = ["ring:10", "grid:3x4", "complete:3", "complete:5", "path:6", "grid:2x3"]
        .iter()
        .map(|s| graph(s))
        .chain(std::iter::once(
            Graph::new(7, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (3, 6), (1, 5)]).unwrap(),
        ))
        .collect();
    let mut rng = trial_rng(2, 0);
    let mut worst: f64 = 0.0;
    for inst in 0..1000 {
        let g = &graphs[inst % graphs.len()];
        let sys = IncidenceSystem::new(g);
        let tau = rng.gen_range(1..=g.num_edges());
        let sample = Sampler::new(SamplerSpec::FixedSize(tau), g).unwrap().draw(g, &mut rng).unwrap();
        let c: Vec<f64> = (0..g.num_nodes()).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let mut fast = PrimalState::new(c.clone());
        let mut slow = PrimalState::new(c);
        rbk_step(&mut fast, &sample).unwrap();
        rbk_step_projection(&mut slow, &sample, &sys).unwrap();
        let diff = fast.x.iter().zip(&slow.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    check(worst <= 1e-8, format!("1000 instances, max |diff| {worst:.1e} (tol 1e-8)"))
}

fn primal_dual_duality() -> Outcome {
    let g = graph("ring:30");
    let sys = IncidenceSystem::new(&g);
    let c = indices(30);
    let mut sampler = Sampler::new(SamplerSpec::FixedSize(3), &g).unwrap();
    let mut rng = trial_rng(3, 0);
    let mut primal = PrimalState::new(c.clone());
    let mut dual = DualState::new(c, g.num_edges());
    let mut worst: f64 = 0.0;
    let mut prev = gossip_core::engine::dual_objective(&dual, &sys);
    for k in 1..=100 {
        let sample = sampler.draw(&g, &mut rng).unwrap();
        rbk_step(&mut primal, &sample).unwrap();
        rnm_step(&mut dual, &sample, &sys).unwrap();
        let mapped = primal_from_dual(&dual, &sys);
        let diff = mapped.iter().zip(&primal.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(diff);
        if diff > 1e-8 {
            return Err(format!("step {k}: trajectories differ by {diff:e}"));
        }
        let d = gossip_core::engine::dual_objective(&dual, &sys);
        if d < prev {
            return Err(format!("step {k}: dual objective fell from {prev} to {d}"));
        }
        prev = d;
    }
    Ok(format!("100 steps, max |x - (c + A^T y)| {worst:.1e}, final D(y) = {prev:.6}"))
}

fn mass_preservation() -> Outcome {
    let mut steps = 0u64;
    for spec in ["path:2", "complete:3", "ring:6", "ring:30", "ring:100", "grid:4x4"] {
        let g = graph(spec);
        let m = g.num_edges();
        let mut runs = vec![
            (Engine::Primal, SamplerSpec::SingleEdge),
            (Engine::Primal, SamplerSpec::FixedSize(m.div_ceil(4))),
            (Engine::Dual, SamplerSpec::FixedSize(m.div_ceil(4))),
            (Engine::Primal, SamplerSpec::AllEdges),
        ];
        if m <= 30 {
            runs.push((Engine::Dual, SamplerSpec::SingleEdge));
        }
        for (engine, sampler) in runs {
            let c = indices(g.num_nodes());
            let cbar = c.iter().sum::<f64>() / c.len() as f64;
            let tol = 1e-10 * cbar.abs().max(1.0);
            let mut sim = Simulation::new(engine, &g, sampler, c, trial_rng(4, 0)).unwrap();
            while !sim.below(0.01) {
                sim.step().unwrap();
                steps += 1;
                let mean = sim.x().iter().sum::<f64>() / sim.x().len() as f64;
                if (mean - cbar).abs() >= tol {
                    return Err(format!(
                        "{spec} {engine} {sampler}: step {} mean {mean} vs {cbar}",
                        sim.iterations()
                    ));
                }
            }
        }
    }
    Ok(format!("{steps} steps checked across 6 graphs, both engines"))
}

fn triangle_rate() -> Outcome {
    let g = graph("complete:3");
    let sys = IncidenceSystem::new(&g);
    let report = convergence_rate(&sys, &expected_projection_exact(&g, &sys, 1).unwrap()).unwrap();
    let err = (report.rho - 0.5).abs();
    let cross = (report.rho_from_expected_w - 0.5).abs();
    check(
        err <= 1e-10 && cross <= 1e-10,
        format!("rho = {}, from E[W] = {}", report.rho, report.rho_from_expected_w),
    )
}

fn triangle_averaging_time() -> Outcome {
    let g = graph("complete:3");
    let bound = averaging_time_bound(0.5, 0.01).unwrap().iterations;
    let k = empirical_averaging_time(&g, SamplerSpec::SingleEdge, &indices(3), 0.01, 2000, 6, 1_000_000).unwrap();
    check(bound == 20 && k <= bound, format!("empirical K(0.01) = {k}, bound {bound}"))
}

fn ring_decay() -> Outcome {
    let g = graph("ring:10");
    let sys = IncidenceSystem::new(&g);
    let rho = convergence_rate(&sys, &expected_projection_exact(&g, &sys, 2).unwrap()).unwrap().rho;
    let c = indices(10);
    let cbar = c.iter().sum::<f64>() / 10.0;
    let z0: f64 = c.iter().map(|v| (v - cbar).powi(2)).sum();
    const TRIALS: usize = 200;
    const STEPS: usize = 50;
    let mut sq = vec![[0.0f64; TRIALS]; STEPS + 1];
    for t in 0..TRIALS {
        let mut sim = Simulation::new(Engine::Primal, &g, SamplerSpec::FixedSize(2), c.clone(), trial_rng(7, t as u64)).unwrap();
        sq[0][t] = z0;
        for row in sq.iter_mut().skip(1) {
            sim.step().unwrap();
            row[t] = sim.exact_error().powi(2);
        }
    }
    let mut tightest = f64::INFINITY;
    for (k, row) in sq.iter().enumerate() {
        let n = TRIALS as f64;
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let bound = rho.powi(k as i32) * z0;
        if mean > bound + 3.0 * se {
            return Err(format!("k = {k}: mean {mean:.4} > bound {bound:.4} + 3 SE {se:.4}"));
        }
        if k > 0 {
            tightest = tightest.min((bound + 3.0 * se - mean) / bound);
        }
    }
    Ok(format!("rho = {rho:.6}, k = 0..={STEPS}, smallest relative slack {tightest:.3}"))
}

fn superlinear_speedup() -> Outcome {
    let cfg = SpeedupConfig {
        trials: 20,
        with_theory: false,
        ..SpeedupConfig::default()
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for spec in ["ring:30", "ring:100", "grid:4x4"] {
        let g = graph(spec);
        let rows = speedup_curve(&g, &indices(g.num_nodes()), &doubling_ladder(g.num_edges()), &cfg).unwrap();
        let worst = rows
            .iter()
            .filter(|r| r.tau > 1)
            .map(|r| r.mean_iters / r.baseline)
            .fold(0.0, f64::max);
        ok &= worst <= 1.0;
        parts.push(format!("{spec} max mean/(l/tau) {worst:.3}"));
    }
    check(ok, parts.join(", "))
}

fn block_size_monotonicity() -> Outcome {
    let specs = ["path:2", "complete:3", "path:4", "ring:6", "complete:4", "grid:2x3", "ring:10", "grid:3x3"];
    let mut bad = Vec::new();
    for spec in specs {
        let g = graph(spec);
        let sys = IncidenceSystem::new(&g);
        let mut prev: Option<(usize, f64)> = None;
        for tau in 1..=g.num_edges() {
            let rho = convergence_rate(&sys, &expected_projection_exact(&g, &sys, tau).unwrap()).unwrap().rho;
            let v = tau as f64 / (1.0 - rho);
            if let Some((pt, pv)) = prev {
                if v > pv * (1.0 + 1e-9) {
                    bad.push(format!("{spec} tau {pt}->{tau}: {pv:.4}->{v:.4}"));
                }
            }
            prev = Some((tau, v));
        }
    }
    if bad.is_empty() {
        Ok(format!("{} graphs with m <= 12", specs.len()))
    } else {
        Err(format!("tau/(1-rho) increases: {}", bad.join("; ")))
    }
}

fn determinism() -> Outcome {
    let mut cfg = ExperimentConfig::new("ring:30".parse().unwrap());
    cfg.sampler = SamplerSpec::FixedSize(3);
    cfg.engine = Engine::Dual;
    cfg.c_init = CInit::Indices;
    cfg.trials = 8;
    cfg.seed = 42;
    let mut first = Vec::new();
    let mut second = Vec::new();
    cmd_run(&cfg, &mut first).map_err(|e| e.to_string())?;
    cmd_run(&cfg, &mut second).map_err(|e| e.to_string())?;
    check(
        first == second,
        format!("two runs, {} bytes each, identical: {}", first.len(), first == second),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("one-step convergence with the full edge set", one_step_convergence),
        ("component averaging equals the projection step", projection_equivalence),
        ("dual trajectory maps onto the primal trajectory", primal_dual_duality),
        ("mass preservation", mass_preservation),
        ("exact rate on the triangle", triangle_rate),
        ("averaging-time bound on the triangle", triangle_averaging_time),
        ("expected squared error decay on ring(10)", ring_decay),
        ("superlinear speedup", superlinear_speedup),
        ("tau/(1-rho) nonincreasing in tau", block_size_monotonicity),
        ("deterministic run output", determinism),
    ];
    let mut failures = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
