//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exposed: stepping a gossip process on a generated
//! graph ([`GossipDemo`]), the exact rate profile `ρ(τ)` of a small graph
//! ([`rate_profile`]) and a measured speedup table ([`speedup_table`]).
//! Tables come back as flat `Float64Array`s with a fixed row width.

use std::f64::consts::PI;

use wasm_bindgen::prelude::*;

use gossip_core::analysis::{self, doubling_ladder, SpeedupConfig};
use gossip_core::engine::{
    self, advice, dual_objective, primal_from_dual, rbk_step, rnm_step, DualState, Engine, PrimalState,
};
use gossip_core::sampling::{trial_rng, Sampler, TrialRng};
use gossip_core::{Graph, GraphSpec, IncidenceSystem, SamplerSpec};

/// Largest edge count accepted by [`rate_profile`].
pub const MAX_PROFILE_EDGES: usize = 16;

/// Largest node count accepted by [`speedup_table`].
pub const MAX_SPEEDUP_NODES: usize = 64;

fn parse_graph(spec: &str) -> Result<(GraphSpec, Graph), String> {
    let spec: GraphSpec = spec.parse().map_err(|e: gossip_core::Error| e.to_string())?;
    if let GraphSpec::File(_) = spec {
        return Err("file graphs are not available in the browser".into());
    }
    let g = spec.build().map_err(|e| e.to_string())?;
    Ok((spec, g))
}

/// Node coordinates in the unit square: grids on a lattice, paths on a
/// line, everything else on a circle.
fn layout(spec: &GraphSpec, n: usize) -> Vec<(f64, f64)> {
    match *spec {
        GraphSpec::Grid(rows, cols) => (0..n)
            .map(|v| {
                let (r, c) = (v / cols, v % cols);
                (
                    0.1 + 0.8 * c as f64 / (cols - 1) as f64,
                    0.1 + 0.8 * r as f64 / (rows - 1) as f64,
                )
            })
            .collect(),
        GraphSpec::Path(_) => (0..n).map(|v| (0.05 + 0.9 * v as f64 / (n - 1) as f64, 0.5)).collect(),
        _ => (0..n)
            .map(|v| {
                let a = 2.0 * PI * v as f64 / n as f64 - PI / 2.0;
                (0.5 + 0.42 * a.cos(), 0.5 + 0.42 * a.sin())
            })
            .collect(),
    }
}

/// A gossip process advanced one step at a time from the page.
#[wasm_bindgen]
pub struct GossipDemo {
    graph: Graph,
    positions: Vec<(f64, f64)>,
    sys: IncidenceSystem,
    sampler: Sampler,
    rng: TrialRng,
    primal: PrimalState,
    dual: Option<DualState>,
    target: f64,
    initial_error: f64,
    last: Vec<usize>,
}

#[wasm_bindgen]
impl GossipDemo {
    /// `graph` and `sampler` use the CLI syntax (`ring:12`, `tau:3`, ...);
    /// `engine` is `primal` or `dual`. Node `i` starts with value `i`.
    #[wasm_bindgen(constructor)]
    pub fn new(graph: &str, sampler: &str, engine: &str, seed: u64) -> Result<GossipDemo, String> {
        let (spec, graph) = parse_graph(graph)?;
        let sampler_spec: SamplerSpec = sampler.parse().map_err(|e: gossip_core::Error| e.to_string())?;
        let engine: Engine = engine.parse().map_err(|e: gossip_core::Error| e.to_string())?;
        let sampler = Sampler::new(sampler_spec, &graph).map_err(|e| e.to_string())?;
        let n = graph.num_nodes();
        let c: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let target = engine::mean(&c);
        let initial_error = c.iter().map(|v| (v - target).powi(2)).sum::<f64>().sqrt();
        let dual = match engine {
            Engine::Primal => None,
            Engine::Dual => Some(DualState::new(c.clone(), graph.num_edges())),
        };
        Ok(GossipDemo {
            positions: layout(&spec, n),
            sys: IncidenceSystem::new(&graph),
            graph,
            sampler,
            rng: trial_rng(seed, 0),
            primal: PrimalState::new(c),
            dual,
            target,
            initial_error,
            last: Vec::new(),
        })
    }

    /// Draws a block, applies one step and returns the selected edge indices.
    pub fn step(&mut self) -> Result<Vec<u32>, String> {
        let sample = self.sampler.draw(&self.graph, &mut self.rng).map_err(|e| e.to_string())?;
        match &mut self.dual {
            Some(dual) => {
                rnm_step(dual, &sample, &self.sys).map_err(|e| e.to_string())?;
                self.primal.x = primal_from_dual(dual, &self.sys);
                self.primal.k = dual.k;
            }
            None => rbk_step(&mut self.primal, &sample).map_err(|e| e.to_string())?,
        }
        self.last = sample.edges;
        Ok(self.selected())
    }

    /// Edges chosen by the most recent step.
    pub fn selected(&self) -> Vec<u32> {
        self.last.iter().map(|&e| e as u32).collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    /// Endpoints as `[i0, j0, i1, j1, ...]` in edge order.
    pub fn edges(&self) -> Vec<u32> {
        self.graph
            .edges()
            .iter()
            .flat_map(|&(i, j)| [i as u32, j as u32])
            .collect()
    }

    /// Node coordinates as `[x0, y0, x1, y1, ...]` in the unit square.
    pub fn positions(&self) -> Vec<f64> {
        self.positions.iter().flat_map(|&(x, y)| [x, y]).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.primal.x.clone()
    }

    /// Per-node correction `Aᵀy` (dual engine), empty for the primal engine.
    pub fn advice(&self) -> Vec<f64> {
        self.dual.as_ref().map(|d| advice(d, &self.sys)).unwrap_or_default()
    }

    /// Edge weights `y` (dual engine), empty for the primal engine.
    pub fn edge_weights(&self) -> Vec<f64> {
        self.dual.as_ref().map(|d| d.y.clone()).unwrap_or_default()
    }

    /// `D(y)` for the dual engine.
    pub fn dual_objective(&self) -> Option<f64> {
        self.dual.as_ref().map(|d| dual_objective(d, &self.sys))
    }

    pub fn iterations(&self) -> f64 {
        self.primal.k as f64
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn relative_error(&self) -> f64 {
        let err = self
            .primal
            .x
            .iter()
            .map(|v| (v - self.target).powi(2))
            .sum::<f64>()
            .sqrt();
        err / self.initial_error
    }
}

/// Exact `ρ(τ)` for every block size, as rows `[τ, ρ, 1/(1 − ρ)]`.
#[wasm_bindgen]
pub fn rate_profile(graph: &str) -> Result<Vec<f64>, String> {
    let (_, g) = parse_graph(graph)?;
    if g.num_edges() > MAX_PROFILE_EDGES {
        return Err(format!(
            "{} edges; the exact profile is limited to {MAX_PROFILE_EDGES} in the browser",
            g.num_edges()
        ));
    }
    let profile = analysis::exact_rate_profile(&g).map_err(|e| e.to_string())?;
    Ok(profile
        .into_iter()
        .flat_map(|(tau, rho)| [tau as f64, rho, 1.0 / (1.0 - rho)])
        .collect())
}

/// Mean iterations to relative error 0.01 on the doubling ladder of block
/// sizes, as rows `[τ, mean, ℓ/τ]`.
#[wasm_bindgen]
pub fn speedup_table(graph: &str, trials: usize, seed: u64) -> Result<Vec<f64>, String> {
    let (_, g) = parse_graph(graph)?;
    if g.num_nodes() > MAX_SPEEDUP_NODES {
        return Err(format!(
            "{} nodes; speedup runs are limited to {MAX_SPEEDUP_NODES} in the browser",
            g.num_nodes()
        ));
    }
    let c: Vec<f64> = (0..g.num_nodes()).map(|i| i as f64).collect();
    let cfg = SpeedupConfig {
        trials,
        seed,
        with_theory: false,
        ..SpeedupConfig::default()
    };
    let rows = analysis::speedup_curve(&g, &c, &doubling_ladder(g.num_edges()), &cfg).map_err(|e| e.to_string())?;
    Ok(rows.iter().flat_map(|r| [r.tau as f64, r.mean_iters, r.baseline]).collect())
}
