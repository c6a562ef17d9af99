//! Graphs, generators, the incidence system of the consensus constraints,
//! and connected components of edge selections.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::union_find::UnionFind;

/// An undirected connected simple graph on nodes `0..n`.
///
/// Edges are stored as `(i, j)` with `i < j`, sorted lexicographically. The
/// position of an edge in that order is its edge index, which is also the row
/// index of the edge in the incidence matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validates and canonicalizes an edge list. Endpoints may be given in
    /// either order.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGraph(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        let mut canon = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "parallel edge ({}, {})",
                w[0].0, w[0].1
            )));
        }

        let mut uf = UnionFind::new(n);
        let mut count = n;
        for &(a, b) in &canon {
            if uf.union(a, b) {
                count -= 1;
            }
        }
        if count != 1 {
            return Err(Error::Disconnected { count });
        }
        Ok(Graph { n, edges: canon })
    }

    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGraph(format!("ring needs n >= 3, got {n}")));
        }
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn path(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGraph(format!("path needs n >= 2, got {n}")));
        }
        Graph::new(n, (0..n - 1).map(|i| (i, i + 1)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGraph(format!(
                "complete graph needs n >= 2, got {n}"
            )));
        }
        Graph::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    /// `rows × cols` lattice; node `(r, c)` has index `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidGraph(format!(
                "grid needs at least 2x2, got {rows}x{cols}"
            )));
        }
        let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Graph::new(rows * cols, edges)
    }

    /// Parses the edge-list format: one edge per line as two
    /// whitespace-separated node indices, `#` starts a comment, blank lines
    /// are ignored. The node count is one more than the largest index.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_node = None::<usize>;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected two node indices, found {} fields", fields.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("`{s}` is not a node index"),
                })
            };
            let (a, b) = (parse(fields[0])?, parse(fields[1])?);
            if a == b {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("self-loop at node {a}"),
                });
            }
            max_node = Some(max_node.unwrap_or(0).max(a).max(b));
            edges.push((a, b));
        }
        let n = max_node.map_or(0, |m| m + 1);
        Graph::new(n, edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> (usize, usize) {
        self.edges[index]
    }

    /// Index of the edge joining `a` and `b`, in either orientation.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&(a.min(b), a.max(b))).ok()
    }

    /// Edge list in the text format accepted by [`Graph::parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        self.edges
            .iter()
            .map(|(a, b)| format!("{a} {b}\n"))
            .collect()
    }

    /// Connected components of the subgraph formed by the selected edges.
    ///
    /// Nodes not touched by any selected edge are left out. Components are
    /// ordered by their smallest node; nodes and edges inside a component
    /// are sorted.
    pub fn components(&self, selected: &[usize]) -> Result<Vec<Component>> {
        let mut uf = UnionFind::new(self.n);
        self.components_with(selected, &mut uf)
    }

    /// Same as [`Graph::components`], reusing a caller-owned forest. The
    /// forest must hold singletons on entry and is restored before return.
    pub fn components_with(&self, selected: &[usize], uf: &mut UnionFind) -> Result<Vec<Component>> {
        if selected.is_empty() {
            return Err(Error::EmptySelection);
        }
        if uf.len() != self.n {
            return Err(Error::Dimension(format!(
                "union-find has {} elements, graph has {} nodes",
                uf.len(),
                self.n
            )));
        }
        if let Some(&e) = selected.iter().find(|&&e| e >= self.edges.len()) {
            return Err(Error::Dimension(format!(
                "edge index {e} out of range 0..{}",
                self.edges.len()
            )));
        }
        let mut touched = BTreeSet::new();
        for &e in selected {
            let (a, b) = self.edges[e];
            uf.union(a, b);
            touched.insert(a);
            touched.insert(b);
        }

        // root -> position in output, assigned in order of smallest node
        let mut slot: Vec<(usize, usize)> = Vec::new();
        let mut out: Vec<Component> = Vec::new();
        for &v in &touched {
            let root = uf.find(v);
            let pos = match slot.iter().find(|(r, _)| *r == root) {
                Some(&(_, p)) => p,
                None => {
                    slot.push((root, out.len()));
                    out.push(Component::default());
                    out.len() - 1
                }
            };
            out[pos].nodes.push(v);
        }
        let mut sorted_sel = selected.to_vec();
        sorted_sel.sort_unstable();
        sorted_sel.dedup();
        for e in sorted_sel {
            let root = uf.find(self.edges[e].0);
            let pos = slot.iter().find(|(r, _)| *r == root).map(|&(_, p)| p).unwrap();
            out[pos].edges.push(e);
        }
        uf.reset(touched);
        Ok(out)
    }
}

/// One connected piece of a selected subgraph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Component {
    /// Sorted node indices, always at least two.
    pub nodes: Vec<usize>,
    /// Sorted indices of the selected edges inside this component.
    pub edges: Vec<usize>,
}

/// Textual graph generator description, e.g. `ring:30` or `grid:4x4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    Ring(usize),
    Grid(usize, usize),
    Path(usize),
    Complete(usize),
    File(PathBuf),
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Ring(n) => Graph::ring(*n),
            GraphSpec::Grid(r, c) => Graph::grid(*r, *c),
            GraphSpec::Path(n) => Graph::path(*n),
            GraphSpec::Complete(n) => Graph::complete(*n),
            GraphSpec::File(path) => Graph::parse_edge_list(&std::fs::read_to_string(path)?),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::GraphSpec(s.to_string());
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        match kind.trim() {
            "ring" => Ok(GraphSpec::Ring(num(arg)?)),
            "path" => Ok(GraphSpec::Path(num(arg)?)),
            "complete" => Ok(GraphSpec::Complete(num(arg)?)),
            "grid" => {
                let (r, c) = arg.split_once(['x', 'X']).ok_or_else(bad)?;
                Ok(GraphSpec::Grid(num(r)?, num(c)?))
            }
            "file" if !arg.is_empty() => Ok(GraphSpec::File(PathBuf::from(arg))),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Ring(n) => write!(f, "ring:{n}"),
            GraphSpec::Grid(r, c) => write!(f, "grid:{r}x{c}"),
            GraphSpec::Path(n) => write!(f, "path:{n}"),
            GraphSpec::Complete(n) => write!(f, "complete:{n}"),
            GraphSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// The consensus system `A x = 0`: one row per edge `(i, j)`, `i < j`, with
/// `+1` in column `i` and `-1` in column `j`.
///
/// Products with `A`, `Aᵀ` and `A Aᵀ` go through the edge list; the dense
/// matrix is materialized once for the spectral analysis.
#[derive(Debug, Clone)]
pub struct IncidenceSystem {
    edges: Vec<(usize, usize)>,
    n: usize,
    a: DenseMatrix,
}

impl IncidenceSystem {
    pub fn new(g: &Graph) -> Self {
        let (m, n) = (g.num_edges(), g.num_nodes());
        let mut a = DenseMatrix::zeros(m, n);
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            a[(e, i)] = 1.0;
            a[(e, j)] = -1.0;
        }
        IncidenceSystem {
            edges: g.edges().to_vec(),
            n,
            a,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    /// Endpoints `(i, j)`, `i < j`, of edge row `e`.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// `A x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "A x: vector length");
        self.edges.iter().map(|&(i, j)| x[i] - x[j]).collect()
    }

    /// `Aᵀ y`
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.edges.len(), "Aᵀ y: vector length");
        let mut out = vec![0.0; self.n];
        for (&(i, j), &w) in self.edges.iter().zip(y) {
            out[i] += w;
            out[j] -= w;
        }
        out
    }

    /// Principal submatrix `I_Sᵀ A Aᵀ I_S` of the edge Gram matrix for the
    /// given edge indices (in the given order).
    pub fn gram_submatrix(&self, selected: &[usize]) -> DenseMatrix {
        let k = selected.len();
        let mut g = DenseMatrix::zeros(k, k);
        for (p, &e) in selected.iter().enumerate() {
            let (a1, b1) = self.edges[e];
            for (q, &f) in selected.iter().enumerate() {
                let (a2, b2) = self.edges[f];
                let sign = |u: usize, v: usize| if u == v { 1.0 } else { 0.0 };
                g[(p, q)] = sign(a1, a2) - sign(a1, b2) - sign(b1, a2) + sign(b1, b2);
            }
        }
        g
    }
}
