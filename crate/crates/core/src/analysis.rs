//! Convergence-rate analysis and experiment drivers.
//!
//! `H = E[R_S]` with `R_S = I_S (I_Sᵀ A Aᵀ I_S)† I_Sᵀ` is computed either by
//! enumerating every edge subset of the block size or by Monte Carlo. The
//! rate is `ρ = 1 − λ_min⁺(Aᵀ H A)`, the expected contraction of the squared
//! distance to consensus per step.

use std::fmt;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::engine::{Engine, RunOptions, Simulation};
use crate::error::{Error, Result};
use crate::graph::{Component, Graph, IncidenceSystem};
use crate::linalg::{count_zero_eigenvalues, spd_inverse, sym_eigen, zero_cutoff, DenseMatrix};
use crate::sampling::{binomial, enumerate_subsets, trial_rng, Sampler, SamplerSpec, ENUMERATION_CAP};
use crate::union_find::UnionFind;

/// Upper bound on Monte Carlo samples for `H`.
pub const MONTE_CARLO_SAMPLES: usize = 100_000;

/// Minimum trial count for [`speedup_curve`].
pub const MIN_SPEEDUP_TRIALS: usize = 20;

/// Tolerance between the two routes to `ρ`.
pub const RATE_CROSS_CHECK_TOL: f64 = 1e-8;

const ENUMERATION_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    Exact { subsets: u128 },
    MonteCarlo { samples: usize },
}

impl fmt::Display for ProjectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionMode::Exact { subsets } => write!(f, "exact enumeration ({subsets} subsets)"),
            ProjectionMode::MonteCarlo { samples } => write!(f, "monte carlo ({samples} samples)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpectedProjection {
    pub h: DenseMatrix,
    pub tau: usize,
    pub mode: ProjectionMode,
}

/// `(A_C A_Cᵀ)†` for the edge rows `A_C` of one connected component.
///
/// Uses `(A_C A_Cᵀ)† = A_C (L†)² A_Cᵀ` with `L = A_Cᵀ A_C` the component
/// Laplacian. A connected component has null space `span{1}`, so
/// `L† = (L + 11ᵀ/k)⁻¹ − 11ᵀ/k` and only a Cholesky inverse is needed.
pub fn component_gram_pinv(sys: &IncidenceSystem, comp: &Component) -> Result<DenseMatrix> {
    let k = comp.nodes.len();
    let local = |v: usize| comp.nodes.binary_search(&v).expect("edge endpoint outside component");
    let ends: Vec<(usize, usize)> = comp
        .edges
        .iter()
        .map(|&e| {
            let (i, j) = sys.edge(e);
            (local(i), local(j))
        })
        .collect();
    let shift = 1.0 / k as f64;
    let mut shifted = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            shifted[(i, j)] = shift;
        }
    }
    for &(i, j) in &ends {
        shifted[(i, i)] += 1.0;
        shifted[(j, j)] += 1.0;
        shifted[(i, j)] -= 1.0;
        shifted[(j, i)] -= 1.0;
    }
    let mut lap_pinv = spd_inverse(&shifted)?;
    for i in 0..k {
        for j in 0..k {
            lap_pinv[(i, j)] -= shift;
        }
    }
    let sq = lap_pinv.matmul(&lap_pinv);
    let t = ends.len();
    let mut out = DenseMatrix::zeros(t, t);
    for (p, &(i1, j1)) in ends.iter().enumerate() {
        for (q, &(i2, j2)) in ends.iter().enumerate() {
            out[(p, q)] = sq[(i1, i2)] - sq[(i1, j2)] - sq[(j1, i2)] + sq[(j1, j2)];
        }
    }
    Ok(out)
}

/// Adds `R_S` for the selection whose components are given into `acc`.
///
/// The Gram submatrix of a selection is block diagonal over its components,
/// so each block is handled on its own.
fn accumulate_projection(acc: &mut DenseMatrix, sys: &IncidenceSystem, comps: &[Component]) -> Result<()> {
    for comp in comps {
        let block = component_gram_pinv(sys, comp)?;
        for (p, &e) in comp.edges.iter().enumerate() {
            for (q, &f) in comp.edges.iter().enumerate() {
                acc[(e, f)] += block[(p, q)];
            }
        }
    }
    Ok(())
}

/// `R_S` as a full `m × m` matrix.
pub fn projection_matrix(g: &Graph, sys: &IncidenceSystem, selected: &[usize]) -> Result<DenseMatrix> {
    let mut r = DenseMatrix::zeros(sys.num_edges(), sys.num_edges());
    accumulate_projection(&mut r, sys, &g.components(selected)?)?;
    Ok(r)
}

fn sum_projections(g: &Graph, sys: &IncidenceSystem, subsets: &[Vec<usize>]) -> Result<DenseMatrix> {
    let m = sys.num_edges();
    let mut acc = DenseMatrix::zeros(m, m);
    let mut uf = UnionFind::new(g.num_nodes());
    for s in subsets {
        accumulate_projection(&mut acc, sys, &g.components_with(s, &mut uf)?)?;
    }
    Ok(acc)
}

/// `H` averaged over every subset of size `tau`.
///
/// Subsets are processed in fixed-size chunks whose partial sums are added
/// in order, so the result does not depend on thread scheduling.
pub fn expected_projection_exact(g: &Graph, sys: &IncidenceSystem, tau: usize) -> Result<ExpectedProjection> {
    let m = sys.num_edges();
    let mut subsets = enumerate_subsets(m, tau)?;
    let count = binomial(m, tau);
    let mut h = DenseMatrix::zeros(m, m);
    loop {
        let batch: Vec<Vec<usize>> = subsets.by_ref().take(ENUMERATION_CHUNK * 16).collect();
        if batch.is_empty() {
            break;
        }
        let chunks: Vec<&[Vec<usize>]> = batch.chunks(ENUMERATION_CHUNK).collect();
        #[cfg(feature = "parallel")]
        let partial: Vec<Result<DenseMatrix>> = chunks.par_iter().map(|c| sum_projections(g, sys, c)).collect();
        #[cfg(not(feature = "parallel"))]
        let partial: Vec<Result<DenseMatrix>> = chunks.iter().map(|c| sum_projections(g, sys, c)).collect();
        for p in partial {
            h = h.add(&p?);
        }
    }
    Ok(ExpectedProjection {
        h: h.scale(1.0 / count as f64),
        tau,
        mode: ProjectionMode::Exact { subsets: count },
    })
}

/// Monte Carlo estimate of `H` from `samples` independent draws.
pub fn expected_projection_monte_carlo(
    g: &Graph,
    sys: &IncidenceSystem,
    spec: SamplerSpec,
    samples: usize,
    seed: u64,
) -> Result<ExpectedProjection> {
    if samples == 0 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least one sample".into()));
    }
    let mut sampler = Sampler::new(spec, g)?;
    let mut rng = trial_rng(seed, 0);
    let m = sys.num_edges();
    let mut h = DenseMatrix::zeros(m, m);
    for _ in 0..samples {
        let s = sampler.draw(g, &mut rng)?;
        accumulate_projection(&mut h, sys, &s.components)?;
    }
    Ok(ExpectedProjection {
        h: h.scale(1.0 / samples as f64),
        tau: sampler.block_size(),
        mode: ProjectionMode::MonteCarlo { samples },
    })
}

/// Exact `H` when the subsets fit under the enumeration cap, otherwise a
/// Monte Carlo estimate with `min(10⁵, 100·C(m, τ))` samples.
pub fn expected_projection(g: &Graph, sys: &IncidenceSystem, spec: SamplerSpec, seed: u64) -> Result<ExpectedProjection> {
    let tau = spec.validate(g)?;
    let count = binomial(g.num_edges(), tau);
    if count <= ENUMERATION_CAP {
        expected_projection_exact(g, sys, tau)
    } else {
        let samples = count.saturating_mul(100).min(MONTE_CARLO_SAMPLES as u128) as usize;
        expected_projection_monte_carlo(g, sys, spec, samples, seed)
    }
}

#[derive(Debug, Clone)]
pub struct RateReport {
    pub h: DenseMatrix,
    pub tau: usize,
    pub mode: ProjectionMode,
    /// Ascending eigenvalues of `Aᵀ H A`.
    pub spectrum: Vec<f64>,
    pub lambda_min_plus: f64,
    pub rho: f64,
    /// `ρ` read off as the second largest eigenvalue of `E[W] = I − Aᵀ H A`.
    pub rho_from_expected_w: f64,
}

impl RateReport {
    /// `1 / (1 − ρ)`
    pub fn iteration_complexity(&self) -> f64 {
        1.0 / (1.0 - self.rho)
    }

    /// The method reaches consensus in a single step.
    pub fn is_one_step(&self) -> bool {
        self.rho == 0.0
    }
}

/// `ρ = 1 − λ_min⁺(Aᵀ H A)`, cross-checked against the spectrum of `E[W]`.
pub fn convergence_rate(sys: &IncidenceSystem, proj: &ExpectedProjection) -> Result<RateReport> {
    let a = sys.matrix();
    let m = a.transpose().matmul(&proj.h).matmul(a);
    let eig = sym_eigen(&m)?;
    let zeros = count_zero_eigenvalues(&eig.eigenvalues);
    if zeros != 1 {
        return Err(Error::SingularRate(zeros));
    }
    let lambda_min_plus = eig.eigenvalues[1];
    // ρ is itself an eigenvalue of E[W]; snap it with the same zero cutoff
    let snap = |r: f64| if r <= zero_cutoff(1.0) { 0.0 } else { r };
    let rho = snap(1.0 - lambda_min_plus);

    let n = sys.num_nodes();
    let w = DenseMatrix::identity(n).sub(&m);
    let w_eig = sym_eigen(&w)?;
    let rho_from_expected_w = snap(w_eig.eigenvalues[n - 2]);
    if (rho - rho_from_expected_w).abs() > RATE_CROSS_CHECK_TOL {
        return Err(Error::RateMismatch {
            from_gap: rho,
            from_expected_w: rho_from_expected_w,
        });
    }
    Ok(RateReport {
        h: proj.h.clone(),
        tau: proj.tau,
        mode: proj.mode,
        spectrum: eig.eigenvalues,
        lambda_min_plus,
        rho,
        rho_from_expected_w,
    })
}

/// `H` and `ρ` in one call, with the automatic exact/Monte Carlo choice.
pub fn rate(g: &Graph, spec: SamplerSpec, seed: u64) -> Result<RateReport> {
    let sys = IncidenceSystem::new(g);
    let proj = expected_projection(g, &sys, spec, seed)?;
    convergence_rate(&sys, &proj)
}

/// Exact `ρ(τ)` for every block size whose subsets can be enumerated.
pub fn exact_rate_profile(g: &Graph) -> Result<Vec<(usize, f64)>> {
    let sys = IncidenceSystem::new(g);
    (1..=g.num_edges())
        .filter(|&tau| binomial(g.num_edges(), tau) <= ENUMERATION_CAP)
        .map(|tau| {
            let proj = expected_projection_exact(g, &sys, tau)?;
            Ok((tau, convergence_rate(&sys, &proj)?.rho))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingTimeBound {
    /// `⌈3 log(1/ε) / log(1/ρ)⌉`, or 1 when `ρ = 0`.
    pub iterations: u64,
    /// `3 log(1/ε) / (1 − ρ)`
    pub loose: f64,
}

/// Upper bound on the ε-averaging time for a method with rate `rho`.
pub fn averaging_time_bound(rho: f64, eps: f64) -> Result<AveragingTimeBound> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1), got {eps}")));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("ρ must lie in [0, 1), got {rho}")));
    }
    let log_inv_eps = (1.0 / eps).ln();
    let loose = 3.0 * log_inv_eps / (1.0 - rho);
    let iterations = if rho == 0.0 {
        1
    } else {
        (3.0 * log_inv_eps / (1.0 / rho).ln()).ceil() as u64
    };
    Ok(AveragingTimeBound { iterations, loose })
}

fn trials_map<T: Send>(trials: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        (0..trials as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials as u64).map(f).collect()
    }
}

/// Iterations the primal method needs to bring the relative error below
/// `eps`, for trial `trial` of the experiment seeded with `seed`.
pub fn hitting_time(
    g: &Graph,
    spec: SamplerSpec,
    c: &[f64],
    eps: f64,
    seed: u64,
    trial: u64,
    max_iters: u64,
) -> Result<u64> {
    let mut sim = Simulation::new(Engine::Primal, g, spec, c.to_vec(), trial_rng(seed, trial))?;
    while !sim.below(eps) {
        if sim.iterations() >= max_iters {
            return Err(Error::IterationCap(max_iters));
        }
        sim.step()?;
    }
    Ok(sim.iterations())
}

/// Empirical ε-averaging time for a fixed `c`: the smallest `k` with
/// `P(z_k > ε z_0) ≤ ε` under the empirical distribution of `trials` runs.
///
/// Errors are monotone along a run, so `z_k > ε z_0` exactly when the
/// hitting time exceeds `k`.
pub fn empirical_averaging_time(
    g: &Graph,
    spec: SamplerSpec,
    c: &[f64],
    eps: f64,
    trials: usize,
    seed: u64,
    max_iters: u64,
) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1), got {eps}")));
    }
    let needed = (10.0 / eps).ceil() as usize;
    if trials < needed {
        return Err(Error::InvalidParameter(format!(
            "{trials} trials are too few for the (1 − ε)-quantile; need at least {needed}"
        )));
    }
    let mut times = trials_map(trials, |t| hitting_time(g, spec, c, eps, seed, t, max_iters))?;
    times.sort_unstable();
    let allowed = (eps * trials as f64).floor() as usize;
    Ok(times[trials - 1 - allowed.min(trials - 1)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupRow {
    pub tau: usize,
    pub mean_iters: f64,
    pub std_iters: f64,
    /// `ℓ / τ` with `ℓ` the mean iteration count at `τ = 1`.
    pub baseline: f64,
    /// `1 / (1 − ρ(τ))` when `H` can be enumerated exactly.
    pub theoretical: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupConfig {
    pub eps: f64,
    pub trials: usize,
    pub seed: u64,
    pub max_iters: u64,
    /// Compute the exact `1/(1 − ρ)` column where enumeration is feasible.
    pub with_theory: bool,
}

impl Default for SpeedupConfig {
    fn default() -> Self {
        SpeedupConfig {
            eps: 0.01,
            trials: MIN_SPEEDUP_TRIALS,
            seed: 0,
            max_iters: RunOptions::default().max_iters,
            with_theory: true,
        }
    }
}

/// `1, 2, 4, …` below `m`, followed by `m`.
pub fn doubling_ladder(num_edges: usize) -> Vec<usize> {
    let mut taus: Vec<usize> = std::iter::successors(Some(1usize), |t| Some(t * 2))
        .take_while(|&t| t < num_edges)
        .collect();
    taus.push(num_edges);
    taus
}

/// Mean iterations to reach relative error `eps` for each block size,
/// against the linear-speedup baseline `ℓ/τ`.
pub fn speedup_curve(g: &Graph, c: &[f64], taus: &[usize], cfg: &SpeedupConfig) -> Result<Vec<SpeedupRow>> {
    if cfg.trials < MIN_SPEEDUP_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "speedup curves need at least {MIN_SPEEDUP_TRIALS} trials, got {}",
            cfg.trials
        )));
    }
    let mut taus = taus.to_vec();
    taus.sort_unstable();
    taus.dedup();
    if taus.first() != Some(&1) {
        return Err(Error::InvalidParameter("τ list must contain 1".into()));
    }
    if let Some(&bad) = taus.iter().find(|&&t| t > g.num_edges()) {
        return Err(Error::BlockSize {
            tau: bad,
            edges: g.num_edges(),
        });
    }
    let sys = IncidenceSystem::new(g);
    let mut rows: Vec<SpeedupRow> = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let spec = SamplerSpec::FixedSize(tau);
        let iters = trials_map(cfg.trials, |t| hitting_time(g, spec, c, cfg.eps, cfg.seed, t, cfg.max_iters))?;
        let n = iters.len() as f64;
        let mean_iters = iters.iter().map(|&k| k as f64).sum::<f64>() / n;
        let var = if iters.len() > 1 {
            iters.iter().map(|&k| (k as f64 - mean_iters).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let theoretical = if cfg.with_theory && binomial(g.num_edges(), tau) <= ENUMERATION_CAP {
            let proj = expected_projection_exact(g, &sys, tau)?;
            Some(convergence_rate(&sys, &proj)?.iteration_complexity())
        } else {
            None
        };
        let ell = rows.first().map_or(mean_iters, |r| r.mean_iters);
        rows.push(SpeedupRow {
            tau,
            mean_iters,
            std_iters: var.sqrt(),
            baseline: ell / tau as f64,
            theoretical,
        });
    }
    Ok(rows)
}
