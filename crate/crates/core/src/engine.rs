//! Gossip iterations on the consensus system.
//!
//! The primal method (randomized block Kaczmarz) keeps one value per node and
//! averages over the connected components of each sampled edge set. The dual
//! method (randomized Newton) keeps one weight per edge and maximizes the dual
//! objective over the sampled block; its node values are recovered as
//! `x = c + Aᵀy`. Both consume the same random samples, so with equal seeds
//! their trajectories coincide.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, IncidenceSystem};
use crate::linalg::{dot, norm_sq, pinv_psd};
use crate::sampling::{Sampler, SamplerSpec, SketchSample};

/// Default iteration cap for [`run`].
pub const DEFAULT_MAX_ITERS: u64 = 1_000_000;

// exact recomputation period of the incrementally tracked primal error
const ERROR_REFRESH: u64 = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalState {
    pub x: Vec<f64>,
    pub c: Vec<f64>,
    pub k: u64,
}

impl PrimalState {
    pub fn new(c: Vec<f64>) -> Self {
        PrimalState {
            x: c.clone(),
            c,
            k: 0,
        }
    }

    pub fn mean(&self) -> f64 {
        mean(&self.x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub y: Vec<f64>,
    pub c: Vec<f64>,
    pub k: u64,
}

impl DualState {
    /// Starts from `y = 0`, so the induced node values equal `c`.
    pub fn new(c: Vec<f64>, num_edges: usize) -> Self {
        DualState {
            y: vec![0.0; num_edges],
            c,
            k: 0,
        }
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_sample(n: usize, m: Option<usize>, sample: &SketchSample) -> Result<()> {
    if sample.num_nodes != n || m.is_some_and(|m| m != sample.num_edges) {
        return Err(Error::Dimension(format!(
            "sample drawn for a graph with {} nodes and {} edges, state has {n} nodes{}",
            sample.num_nodes,
            sample.num_edges,
            m.map(|m| format!(" and {m} edges")).unwrap_or_default()
        )));
    }
    Ok(())
}

/// One block Kaczmarz step: every component of the sampled subgraph
/// replaces its node values by their average.
pub fn rbk_step(state: &mut PrimalState, sample: &SketchSample) -> Result<()> {
    check_sample(state.x.len(), None, sample)?;
    for comp in &sample.components {
        let avg = comp.nodes.iter().map(|&i| state.x[i]).sum::<f64>() / comp.nodes.len() as f64;
        for &i in &comp.nodes {
            state.x[i] = avg;
        }
    }
    state.k += 1;
    Ok(())
}

/// The same step evaluated literally as
/// `x ← x − Aᵀ I_S (I_Sᵀ A Aᵀ I_S)† I_Sᵀ A x`.
///
/// Costs a pseudoinverse per call; meant as a reference for [`rbk_step`].
pub fn rbk_step_projection(
    state: &mut PrimalState,
    sample: &SketchSample,
    sys: &IncidenceSystem,
) -> Result<()> {
    check_sample(sys.num_nodes(), Some(sys.num_edges()), sample)?;
    check_len("x", &state.x, sys.num_nodes())?;
    let gram = sys.gram_submatrix(&sample.edges);
    let ax = sys.apply(&state.x);
    let residual: Vec<f64> = sample.edges.iter().map(|&e| ax[e]).collect();
    let lambda = pinv_psd(&gram)?.mat_vec(&residual);
    let mut block = vec![0.0; sys.num_edges()];
    for (&e, &l) in sample.edges.iter().zip(&lambda) {
        block[e] = l;
    }
    let correction = sys.apply_transpose(&block);
    for (xi, d) in state.x.iter_mut().zip(correction) {
        *xi -= d;
    }
    state.k += 1;
    Ok(())
}

/// One randomized Newton step on the dual weights:
/// `y ← y − I_S (I_Sᵀ A Aᵀ I_S)† I_Sᵀ A (c + Aᵀ y)`.
///
/// The sampled Gram submatrix is block diagonal over the components of the
/// sampled subgraph, so each component is solved separately.
pub fn rnm_step(state: &mut DualState, sample: &SketchSample, sys: &IncidenceSystem) -> Result<()> {
    check_sample(sys.num_nodes(), Some(sys.num_edges()), sample)?;
    check_len("y", &state.y, sys.num_edges())?;
    check_len("c", &state.c, sys.num_nodes())?;
    let x = primal_from_dual(state, sys);
    for comp in &sample.components {
        let residual: Vec<f64> = comp
            .edges
            .iter()
            .map(|&e| {
                let (i, j) = sys.edge(e);
                x[i] - x[j]
            })
            .collect();
        let gram = sys.gram_submatrix(&comp.edges);
        let lambda = pinv_psd(&gram)?.mat_vec(&residual);
        for (&e, l) in comp.edges.iter().zip(lambda) {
            state.y[e] -= l;
        }
    }
    state.k += 1;
    Ok(())
}

fn check_len(name: &str, v: &[f64], want: usize) -> Result<()> {
    if v.len() != want {
        return Err(Error::Dimension(format!(
            "{name} has length {}, expected {want}",
            v.len()
        )));
    }
    Ok(())
}

/// `x = c + Aᵀ y`
pub fn primal_from_dual(state: &DualState, sys: &IncidenceSystem) -> Vec<f64> {
    let aty = sys.apply_transpose(&state.y);
    state.c.iter().zip(aty).map(|(c, a)| c + a).collect()
}

/// `D(y) = −(A c)ᵀ y − ½‖Aᵀ y‖²`
pub fn dual_objective(state: &DualState, sys: &IncidenceSystem) -> f64 {
    let ac = sys.apply(&state.c);
    -dot(&ac, &state.y) - 0.5 * norm_sq(&sys.apply_transpose(&state.y))
}

/// `Aᵀ y`: what each node adds to its private value to obtain its current
/// estimate.
pub fn advice(state: &DualState, sys: &IncidenceSystem) -> Vec<f64> {
    sys.apply_transpose(&state.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Primal,
    Dual,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "primal" => Ok(Engine::Primal),
            "dual" => Ok(Engine::Dual),
            other => Err(Error::InvalidParameter(format!(
                "engine `{other}` (expected primal or dual)"
            ))),
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Primal => "primal",
            Engine::Dual => "dual",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Iteration number after the step, starting at 1.
    pub k: u64,
    pub sample: SketchSample,
    pub error_before: f64,
    pub error_after: f64,
    /// `D(y)` after the step, dual engine only.
    pub dual_objective: Option<f64>,
}

/// A running gossip process on one graph with one random stream.
pub struct Simulation<'g, R> {
    graph: &'g Graph,
    engine: Engine,
    sys: Option<IncidenceSystem>,
    sampler: Sampler,
    rng: R,
    primal: PrimalState,
    dual: Option<DualState>,
    target: f64,
    initial_error: f64,
    err_sq: f64,
    since_refresh: u64,
}

impl<'g, R: Rng> Simulation<'g, R> {
    pub fn new(engine: Engine, graph: &'g Graph, spec: SamplerSpec, c: Vec<f64>, rng: R) -> Result<Self> {
        check_len("c", &c, graph.num_nodes())?;
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("initial values must be finite".into()));
        }
        let sampler = Sampler::new(spec, graph)?;
        let target = if c.iter().all(|&v| v == c[0]) { c[0] } else { mean(&c) };
        let err_sq = c.iter().map(|v| (v - target).powi(2)).sum::<f64>();
        let (sys, dual) = match engine {
            Engine::Primal => (None, None),
            Engine::Dual => (
                Some(IncidenceSystem::new(graph)),
                Some(DualState::new(c.clone(), graph.num_edges())),
            ),
        };
        Ok(Simulation {
            graph,
            engine,
            sys,
            sampler,
            rng,
            primal: PrimalState::new(c),
            dual,
            target,
            initial_error: err_sq.sqrt(),
            err_sq,
            since_refresh: 0,
        })
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn iterations(&self) -> u64 {
        self.primal.k
    }

    /// Current node values (`c + Aᵀy` for the dual engine).
    pub fn x(&self) -> &[f64] {
        &self.primal.x
    }

    pub fn y(&self) -> Option<&[f64]> {
        self.dual.as_ref().map(|d| d.y.as_slice())
    }

    pub fn dual_state(&self) -> Option<&DualState> {
        self.dual.as_ref()
    }

    pub fn system(&self) -> Option<&IncidenceSystem> {
        self.sys.as_ref()
    }

    /// The consensus value `c̄`.
    pub fn target(&self) -> f64 {
        self.target
    }

    /// `‖c − x*‖`
    pub fn initial_error(&self) -> f64 {
        self.initial_error
    }

    /// `‖x − x*‖`, tracked incrementally for the primal engine.
    pub fn error(&self) -> f64 {
        self.err_sq.max(0.0).sqrt()
    }

    /// `‖x − x*‖ / ‖c − x*‖`, zero for constant input.
    pub fn relative_error(&self) -> f64 {
        if self.initial_error == 0.0 {
            0.0
        } else {
            self.error() / self.initial_error
        }
    }

    pub fn exact_error(&self) -> f64 {
        self.primal
            .x
            .iter()
            .map(|v| (v - self.target).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn refresh_error(&mut self) {
        self.err_sq = self.exact_error().powi(2);
        self.since_refresh = 0;
    }

    /// Whether the relative error is below `eps`, confirmed by an exact
    /// recomputation whenever the tracked value says so.
    pub fn below(&mut self, eps: f64) -> bool {
        if self.initial_error == 0.0 {
            return true;
        }
        if self.relative_error() >= eps {
            return false;
        }
        self.refresh_error();
        self.relative_error() < eps
    }

    /// Draws a sample and applies one step of the configured engine.
    pub fn step(&mut self) -> Result<StepRecord> {
        let sample = self.sampler.draw(self.graph, &mut self.rng)?;
        self.apply(sample)
    }

    /// Applies one step with an externally chosen sample.
    pub fn apply(&mut self, sample: SketchSample) -> Result<StepRecord> {
        let error_before = self.error();
        let dual_objective = match (&mut self.dual, &self.sys) {
            (Some(dual), Some(sys)) => {
                rnm_step(dual, &sample, sys)?;
                self.primal.x = primal_from_dual(dual, sys);
                self.primal.k = dual.k;
                let d = dual_objective(dual, sys);
                self.refresh_error();
                Some(d)
            }
            _ => {
                let t = self.target;
                let touched_sq = |x: &[f64]| {
                    sample
                        .components
                        .iter()
                        .flat_map(|c| c.nodes.iter())
                        .map(|&i| (x[i] - t).powi(2))
                        .sum::<f64>()
                };
                let before = touched_sq(&self.primal.x);
                rbk_step(&mut self.primal, &sample)?;
                let after = touched_sq(&self.primal.x);
                self.err_sq += after - before;
                self.since_refresh += 1;
                if self.since_refresh >= ERROR_REFRESH {
                    self.refresh_error();
                }
                None
            }
        };
        Ok(StepRecord {
            k: self.primal.k,
            sample,
            error_before: error_before / self.initial_error.max(f64::MIN_POSITIVE),
            error_after: self.relative_error(),
            dual_objective,
        })
    }

    pub fn into_parts(self) -> (PrimalState, Option<DualState>) {
        (self.primal, self.dual)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Target relative error.
    pub eps: f64,
    pub max_iters: u64,
    /// Keep a [`StepRecord`] per step in the trace.
    pub record_steps: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            eps: 0.01,
            max_iters: DEFAULT_MAX_ITERS,
            record_steps: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub iterations: u64,
    pub converged: bool,
    /// The run stopped at the iteration cap.
    pub capped: bool,
    pub final_error: f64,
    pub records: Vec<StepRecord>,
    pub final_x: Vec<f64>,
    pub final_y: Option<Vec<f64>>,
}

/// Iterates until `‖x − x*‖ / ‖c − x*‖ < eps` or the iteration cap.
pub fn run<R: Rng>(
    engine: Engine,
    graph: &Graph,
    spec: SamplerSpec,
    c: Vec<f64>,
    opts: &RunOptions,
    rng: R,
) -> Result<RunTrace> {
    if !(opts.eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            opts.eps
        )));
    }
    let mut sim = Simulation::new(engine, graph, spec, c, rng)?;
    let mut records = Vec::new();
    let mut converged = sim.below(opts.eps);
    while !converged && sim.iterations() < opts.max_iters {
        let rec = sim.step()?;
        if opts.record_steps {
            records.push(rec);
        }
        converged = sim.below(opts.eps);
    }
    let final_error = sim.relative_error();
    let iterations = sim.iterations();
    let (primal, dual) = sim.into_parts();
    Ok(RunTrace {
        iterations,
        converged,
        capped: !converged,
        final_error,
        records,
        final_x: primal.x,
        final_y: dual.map(|d| d.y),
    })
}
