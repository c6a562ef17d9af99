//! Random edge subsets: the sketch `I_S` drawn at every gossip step.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Component, Graph};
use crate::union_find::UnionFind;

/// Largest number of subsets [`enumerate_subsets`] will walk.
pub const ENUMERATION_CAP: u128 = 2_000_000;

/// The per-trial random source. ChaCha8 is portable and supports
/// independent streams, one per trial.
pub type TrialRng = ChaCha8Rng;

/// Deterministic generator for trial `trial` of an experiment seeded with
/// `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerSpec {
    /// Uniform over all edge subsets of size `τ`.
    FixedSize(usize),
    /// Pairwise gossip, identical to `FixedSize(1)`.
    SingleEdge,
    /// Every edge, identical to `FixedSize(m)`.
    AllEdges,
}

impl SamplerSpec {
    /// The block size `τ` on a graph with `num_edges` edges.
    pub fn block_size(&self, num_edges: usize) -> usize {
        match *self {
            SamplerSpec::FixedSize(t) => t,
            SamplerSpec::SingleEdge => 1,
            SamplerSpec::AllEdges => num_edges,
        }
    }

    pub fn validate(&self, g: &Graph) -> Result<usize> {
        let m = g.num_edges();
        let tau = self.block_size(m);
        if tau == 0 || tau > m {
            return Err(Error::BlockSize { tau, edges: m });
        }
        Ok(tau)
    }
}

impl FromStr for SamplerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pairwise" => Ok(SamplerSpec::SingleEdge),
            "all" => Ok(SamplerSpec::AllEdges),
            other => other
                .strip_prefix("tau:")
                .and_then(|k| k.trim().parse().ok())
                .map(SamplerSpec::FixedSize)
                .ok_or_else(|| Error::SamplerSpec(s.to_string())),
        }
    }
}

impl fmt::Display for SamplerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerSpec::FixedSize(t) => write!(f, "tau:{t}"),
            SamplerSpec::SingleEdge => f.write_str("pairwise"),
            SamplerSpec::AllEdges => f.write_str("all"),
        }
    }
}

/// A selected edge subset together with the components it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchSample {
    /// Sorted edge indices.
    pub edges: Vec<usize>,
    pub components: Vec<Component>,
    pub num_nodes: usize,
    pub num_edges: usize,
}

impl SketchSample {
    /// Builds a sample from an explicit edge selection.
    pub fn from_edges(g: &Graph, edges: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut edges: Vec<usize> = edges.into_iter().collect();
        edges.sort_unstable();
        edges.dedup();
        let components = g.components(&edges)?;
        Ok(SketchSample {
            edges,
            components,
            num_nodes: g.num_nodes(),
            num_edges: g.num_edges(),
        })
    }

    pub fn block_size(&self) -> usize {
        self.edges.len()
    }
}

/// Draws edge subsets of a fixed size by partial Fisher–Yates over a
/// persistent permutation of the edge indices.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: SamplerSpec,
    tau: usize,
    pool: Vec<usize>,
    uf: UnionFind,
}

impl Sampler {
    pub fn new(spec: SamplerSpec, g: &Graph) -> Result<Self> {
        let tau = spec.validate(g)?;
        Ok(Sampler {
            spec,
            tau,
            pool: (0..g.num_edges()).collect(),
            uf: UnionFind::new(g.num_nodes()),
        })
    }

    pub fn spec(&self) -> SamplerSpec {
        self.spec
    }

    pub fn block_size(&self) -> usize {
        self.tau
    }

    /// Selected edge indices only, sorted.
    pub fn draw_edges<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<usize> {
        let m = self.pool.len();
        if self.tau == m {
            // every subset of size m is the full edge set; no randomness needed
            return (0..m).collect();
        }
        for i in 0..self.tau {
            let j = rng.gen_range(i..m);
            self.pool.swap(i, j);
        }
        let mut edges = self.pool[..self.tau].to_vec();
        edges.sort_unstable();
        edges
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, g: &Graph, rng: &mut R) -> Result<SketchSample> {
        if g.num_edges() != self.pool.len() || g.num_nodes() != self.uf.len() {
            return Err(Error::Dimension(
                "sampler was built for a different graph".into(),
            ));
        }
        let edges = self.draw_edges(rng);
        let components = g.components_with(&edges, &mut self.uf)?;
        Ok(SketchSample {
            edges,
            components,
            num_nodes: g.num_nodes(),
            num_edges: g.num_edges(),
        })
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is exact at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All size-`tau` subsets of `0..num_edges` in lexicographic order.
pub fn enumerate_subsets(num_edges: usize, tau: usize) -> Result<Subsets> {
    if tau == 0 || tau > num_edges {
        return Err(Error::BlockSize {
            tau,
            edges: num_edges,
        });
    }
    let count = binomial(num_edges, tau);
    if count > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            count,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(Subsets {
        n: num_edges,
        current: Some((0..tau).collect()),
    })
}

#[derive(Debug, Clone)]
pub struct Subsets {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let k = out.len();
        let mut next = out.clone();
        // rightmost position that can still advance
        if let Some(i) = (0..k).rev().find(|&i| next[i] < self.n - k + i) {
            next[i] += 1;
            for j in i + 1..k {
                next[j] = next[j - 1] + 1;
            }
            self.current = Some(next);
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_strings() {
        assert_eq!("tau:4".parse::<SamplerSpec>().unwrap(), SamplerSpec::FixedSize(4));
        assert_eq!("pairwise".parse::<SamplerSpec>().unwrap(), SamplerSpec::SingleEdge);
        assert_eq!("all".parse::<SamplerSpec>().unwrap(), SamplerSpec::AllEdges);
        for s in ["tau:", "tau:x", "random", "tau:-1"] {
            assert!(s.parse::<SamplerSpec>().is_err());
        }
        assert_eq!(SamplerSpec::FixedSize(3).to_string(), "tau:3");
    }

    #[test]
    fn validation() {
        let tri = Graph::complete(3).unwrap();
        assert_eq!(SamplerSpec::AllEdges.validate(&tri).unwrap(), 3);
        assert_eq!(SamplerSpec::SingleEdge.validate(&tri).unwrap(), 1);
        assert!(matches!(
            SamplerSpec::FixedSize(4).validate(&tri),
            Err(Error::BlockSize { tau: 4, edges: 3 })
        ));
        assert!(SamplerSpec::FixedSize(0).validate(&tri).is_err());
    }

    #[test]
    fn degenerate_samplers_are_constant() {
        let g = Graph::grid(3, 3).unwrap();
        let mut rng = trial_rng(1, 0);
        let mut all = Sampler::new(SamplerSpec::AllEdges, &g).unwrap();
        for _ in 0..5 {
            let s = all.draw(&g, &mut rng).unwrap();
            assert_eq!(s.edges, (0..12).collect::<Vec<_>>());
            assert_eq!(s.components.len(), 1);
        }
        let p2 = Graph::path(2).unwrap();
        let mut single = Sampler::new(SamplerSpec::SingleEdge, &p2).unwrap();
        for _ in 0..5 {
            assert_eq!(single.draw(&p2, &mut rng).unwrap().edges, vec![0]);
        }
    }

    #[test]
    fn single_edge_matches_tau_one() {
        let g = Graph::ring(9).unwrap();
        let mut a = Sampler::new(SamplerSpec::SingleEdge, &g).unwrap();
        let mut b = Sampler::new(SamplerSpec::FixedSize(1), &g).unwrap();
        let (mut ra, mut rb) = (trial_rng(5, 2), trial_rng(5, 2));
        for _ in 0..50 {
            assert_eq!(a.draw_edges(&mut ra), b.draw_edges(&mut rb));
        }
    }

    #[test]
    fn seeds_and_streams() {
        let g = Graph::ring(12).unwrap();
        let run = |seed, trial| {
            let mut s = Sampler::new(SamplerSpec::FixedSize(3), &g).unwrap();
            let mut rng = trial_rng(seed, trial);
            (0..100).map(|_| s.draw_edges(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(42, 0), run(42, 0));
        assert_ne!(run(42, 0), run(42, 1));
        assert_ne!(run(42, 0), run(43, 0));
    }

    #[test]
    fn pair_frequencies_on_triangle() {
        let g = Graph::complete(3).unwrap();
        let mut s = Sampler::new(SamplerSpec::FixedSize(2), &g).unwrap();
        let mut rng = trial_rng(2024, 0);
        let draws = 30_000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let e = s.draw_edges(&mut rng);
            let idx = match e.as_slice() {
                [0, 1] => 0,
                [0, 2] => 1,
                [1, 2] => 2,
                other => panic!("unexpected subset {other:?}"),
            };
            counts[idx] += 1;
        }
        for c in counts {
            let f = c as f64 / draws as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn edge_marginals() {
        let g = Graph::ring(10).unwrap();
        let (tau, m, draws) = (3usize, 10usize, 20_000usize);
        let mut s = Sampler::new(SamplerSpec::FixedSize(tau), &g).unwrap();
        let mut rng = trial_rng(7, 0);
        let mut counts = vec![0usize; m];
        for _ in 0..draws {
            for e in s.draw_edges(&mut rng) {
                counts[e] += 1;
            }
        }
        let p = tau as f64 / m as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for c in counts {
            assert!((c as f64 / draws as f64 - p).abs() <= 3.0 * sigma + 1e-3);
        }
    }

    #[test]
    fn subset_enumeration() {
        let all = |k| enumerate_subsets(3, k).unwrap().collect::<Vec<_>>();
        assert_eq!(all(1), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(all(2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(all(3), vec![vec![0, 1, 2]]);
        assert_eq!(enumerate_subsets(8, 4).unwrap().count(), 70);
        assert!(enumerate_subsets(3, 0).is_err());
        assert!(matches!(
            enumerate_subsets(100, 10),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(30, 15), 155_117_520);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(200, 100), u128::MAX);
    }
}
