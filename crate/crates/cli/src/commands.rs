//! The `run`, `speedup` and `rate` subcommands.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use gossip_core::analysis::{self, averaging_time_bound, doubling_ladder, SpeedupConfig, SpeedupRow};
use gossip_core::engine::{run, RunOptions, RunTrace};
use gossip_core::sampling::trial_rng;
use gossip_core::{Graph, IncidenceSystem};

use crate::config::ExperimentConfig;
use crate::{csv, CliError};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub trials: usize,
    pub converged: usize,
    pub mean_iters: f64,
    pub min_iters: u64,
    pub max_iters: u64,
    /// Every node started with the same value.
    pub trivial: bool,
}

impl RunSummary {
    pub fn all_converged(&self) -> bool {
        self.converged == self.trials
    }
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "trials={} converged={} iterations mean={} min={} max={}",
            self.trials, self.converged, self.mean_iters, self.min_iters, self.max_iters
        )?;
        if self.trivial {
            f.write_str(" (trivial input: all initial values equal, nothing to do)")?;
        }
        if !self.all_converged() {
            write!(f, " ({} trials hit the iteration cap)", self.trials - self.converged)?;
        }
        Ok(())
    }
}

fn trace_rows(trial: usize, trace: &RunTrace) -> String {
    let mut buf = String::new();
    for rec in &trace.records {
        let _ = writeln!(
            buf,
            "{trial},{},{},{},{}",
            rec.k,
            csv::real(rec.error_after),
            csv::opt_real(rec.dual_objective),
            csv::joined(&rec.sample.edges)
        );
    }
    buf
}

/// Runs `cfg.trials` independent trials and writes one CSV row per step.
///
/// Trials execute concurrently; rows are emitted in trial order. Trials that
/// hit the iteration cap keep their rows and are reported in the summary.
pub fn cmd_run(cfg: &ExperimentConfig, out: &mut impl Write) -> Result<RunSummary, CliError> {
    let g = cfg.graph.build()?;
    let c = cfg.c_init.values(g.num_nodes())?;
    cfg.sampler.validate(&g)?;
    let opts = RunOptions {
        eps: cfg.eps,
        max_iters: cfg.max_iters,
        record_steps: true,
    };
    let traces: Vec<RunTrace> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run(cfg.engine, &g, cfg.sampler, c.clone(), &opts, trial_rng(cfg.seed, t as u64)))
        .collect::<Result<_, _>>()?;

    writeln!(out, "{}", csv::RUN_HEADER)?;
    for (t, trace) in traces.iter().enumerate() {
        out.write_all(trace_rows(t, trace).as_bytes())?;
    }
    out.flush()?;

    let iters: Vec<u64> = traces.iter().map(|t| t.iterations).collect();
    Ok(RunSummary {
        trials: traces.len(),
        converged: traces.iter().filter(|t| t.converged).count(),
        mean_iters: iters.iter().sum::<u64>() as f64 / iters.len() as f64,
        min_iters: iters.iter().copied().min().unwrap_or(0),
        max_iters: iters.iter().copied().max().unwrap_or(0),
        trivial: c.iter().all(|&v| v == c[0]),
    })
}

/// Mean iterations per block size against the `ℓ/τ` baseline.
pub fn cmd_speedup(cfg: &ExperimentConfig, out: &mut impl Write) -> Result<Vec<SpeedupRow>, CliError> {
    let g = cfg.graph.build()?;
    let c = cfg.c_init.values(g.num_nodes())?;
    let taus = cfg.taus.clone().unwrap_or_else(|| doubling_ladder(g.num_edges()));
    let scfg = SpeedupConfig {
        eps: cfg.eps,
        trials: cfg.trials,
        seed: cfg.seed,
        max_iters: cfg.max_iters,
        with_theory: true,
    };
    let rows = analysis::speedup_curve(&g, &c, &taus, &scfg)?;
    write_speedup_csv(&rows, out)?;
    Ok(rows)
}

pub fn write_speedup_csv(rows: &[SpeedupRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", csv::SPEEDUP_HEADER)?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.tau,
            csv::real(r.mean_iters),
            csv::real(r.std_iters),
            csv::real(r.baseline),
            csv::opt_real(r.theoretical)
        )?;
    }
    out.flush()
}

#[derive(Debug, Clone)]
pub struct RateSummary {
    pub report: analysis::RateReport,
    pub bound: analysis::AveragingTimeBound,
    pub eps: f64,
}

/// Prints `ρ`, `λ_min⁺`, `1/(1 − ρ)` and the ε-averaging-time bound.
pub fn cmd_rate(cfg: &ExperimentConfig, out: &mut impl Write) -> Result<RateSummary, CliError> {
    let g: Graph = cfg.graph.build()?;
    let tau = cfg.sampler.validate(&g)?;
    let sys = IncidenceSystem::new(&g);
    let proj = analysis::expected_projection(&g, &sys, cfg.sampler, cfg.seed)?;
    let report = analysis::convergence_rate(&sys, &proj)?;
    let bound = averaging_time_bound(report.rho, cfg.eps)?;

    writeln!(out, "graph: {} (n={}, m={})", cfg.graph, g.num_nodes(), g.num_edges())?;
    writeln!(out, "sampler: {} (tau={tau})", cfg.sampler)?;
    writeln!(out, "H: {}", report.mode)?;
    writeln!(out, "lambda_min_plus: {}", report.lambda_min_plus)?;
    write!(out, "rho: {}", report.rho)?;
    if report.is_one_step() {
        write!(out, " (converges in one step)")?;
    }
    writeln!(out)?;
    writeln!(out, "rho from E[W]: {}", report.rho_from_expected_w)?;
    writeln!(out, "1/(1-rho): {}", report.iteration_complexity())?;
    writeln!(
        out,
        "K({}) bound: {} (loose form {})",
        cfg.eps, bound.iterations, bound.loose
    )?;
    out.flush()?;
    Ok(RateSummary {
        report,
        bound,
        eps: cfg.eps,
    })
}
