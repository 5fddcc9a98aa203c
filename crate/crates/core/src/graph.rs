//! Weighted undirected graphs, Laplacians and Laplacian spectra.
//!
//! Nodes are 0-based internally; the edge-list text format is 1-based.

use alloc::collections::BTreeSet;
use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// An undirected edge `{a, b}` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    node_count: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Builds a graph from 0-based `(i, j, weight)` triples, rejecting
    /// self-loops, duplicates, out-of-range nodes and non-positive weights.
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidSize { what: "graph", got: 0, min: 1 });
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (i, j, w) in edges {
            check_edge(node_count, i, j, w).map_err(|reason| Error::InvalidParameter { name: "edge", reason })?;
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if !seen.insert((a, b)) {
                return Err(Error::InvalidParameter { name: "edge", reason: "duplicate edge" });
            }
            out.push(Edge { a, b, weight: w });
        }
        Ok(Self { node_count, edges: out })
    }

    /// Path `1 - 2 - ... - N`.
    pub fn path(n: usize, weight: f64) -> Result<Self> {
        check_size("path", n, 2)?;
        check_weight(weight)?;
        Self::new(n, (0..n - 1).map(|i| (i, i + 1, weight)))
    }

    pub fn ring(n: usize, weight: f64) -> Result<Self> {
        check_size("ring", n, 3)?;
        check_weight(weight)?;
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n, weight)))
    }

    /// `d`-dimensional torus `Z_side^d` with nearest-neighbour coupling.
    ///
    /// Nodes are numbered row-major over the lattice coordinates: node
    /// `sum_k coord[k] * side^(d-1-k)`. For `d = 1` this is [`Self::ring`].
    pub fn torus(side: usize, dim: usize, weight: f64) -> Result<Self> {
        check_size("torus side", side, 3)?;
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidSize { what: "torus dimension (1..=3)", got: dim, min: 1 });
        }
        check_weight(weight)?;
        let n = side.pow(dim as u32);
        let mut edges = Vec::with_capacity(n * dim);
        for node in 0..n {
            let mut stride = 1;
            for _ in 0..dim {
                let coord = (node / stride) % side;
                let neighbour = node - coord * stride + ((coord + 1) % side) * stride;
                edges.push((node, neighbour, weight));
                stride *= side;
            }
        }
        Self::new(n, edges)
    }

    pub fn complete(n: usize, weight: f64) -> Result<Self> {
        check_size("complete graph", n, 2)?;
        check_weight(weight)?;
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, weight))))
    }

    /// Parses the edge-list text format: first non-comment line is `N`, then
    /// one `i j w` line per edge (1-based). Lines starting with `#` and blank
    /// lines are ignored.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (first, header) = lines.next().ok_or(Error::Parse { line: 1, message: "missing node count".into() })?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Parse { line: first, message: format!("invalid node count `{header}`") })?;
        if n == 0 {
            return Err(Error::Parse { line: first, message: "node count must be positive".into() });
        }

        let mut seen = BTreeSet::new();
        let mut edges = Vec::new();
        for (line, content) in lines {
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse { line, message: format!("expected `i j w`, got `{content}`") });
            }
            let parse_index = |s: &str| -> Result<usize> {
                s.parse::<usize>()
                    .ok()
                    .filter(|&i| (1..=n).contains(&i))
                    .map(|i| i - 1)
                    .ok_or_else(|| Error::Parse { line, message: format!("node index `{s}` not in 1..={n}") })
            };
            let i = parse_index(fields[0])?;
            let j = parse_index(fields[1])?;
            let w: f64 = fields[2]
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("invalid weight `{}`", fields[2]) })?;
            if let Err(reason) = check_edge(n, i, j, w) {
                return Err(Error::Parse { line, message: reason.into() });
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::Parse { line, message: "duplicate edge".into() });
            }
            edges.push((i, j, w));
        }
        Self::new(n, edges)
    }

    /// Serializes to the 1-based edge-list format.
    pub fn to_edge_list(&self) -> alloc::string::String {
        let mut s = format!("{}\n", self.node_count);
        for e in &self.edges {
            s.push_str(&format!("{} {} {}\n", e.a + 1, e.b + 1, e.weight));
        }
        s
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.a == node || e.b == node).count()
    }

    /// Weighted Laplacian: `L_ii = sum_k l_ik`, `L_ij = -l_ij`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.node_count;
        let mut l = DMatrix::zeros(n, n);
        for e in &self.edges {
            l[(e.a, e.b)] -= e.weight;
            l[(e.b, e.a)] -= e.weight;
            l[(e.a, e.a)] += e.weight;
            l[(e.b, e.b)] += e.weight;
        }
        l
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count;
        let mut adjacency = vec![Vec::new(); n];
        for e in &self.edges {
            adjacency[e.a].push(e.b);
            adjacency[e.b].push(e.a);
        }
        let mut visited = vec![false; n];
        visited[0] = true;
        let mut queue = VecDeque::from([0usize]);
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !visited[v] {
                    visited[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// Dense symmetric eigendecomposition of the Laplacian with the default
    /// zero tolerance `1e-9 * max(1, lambda_max)`.
    pub fn spectrum(&self) -> Result<LaplacianSpectrum> {
        let eigenvalues = self.raw_eigenvalues()?;
        let top = eigenvalues.last().copied().unwrap_or(0.0);
        LaplacianSpectrum::new(eigenvalues, default_zero_tolerance(top))
    }

    pub fn spectrum_with_tolerance(&self, zero_tolerance: f64) -> Result<LaplacianSpectrum> {
        LaplacianSpectrum::new(self.raw_eigenvalues()?, zero_tolerance)
    }

    fn raw_eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.node_count;
        let eig = SymmetricEigen::try_new(self.laplacian(), f64::EPSILON, 1000 * n.max(10))
            .ok_or(Error::Numerical("symmetric eigensolver did not converge"))?;
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }
}

fn check_size(what: &'static str, got: usize, min: usize) -> Result<()> {
    if got < min {
        return Err(Error::InvalidSize { what, got, min });
    }
    Ok(())
}

fn check_weight(w: f64) -> Result<()> {
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::InvalidParameter { name: "weight", reason: "must be positive and finite" });
    }
    Ok(())
}

fn check_edge(n: usize, i: usize, j: usize, w: f64) -> core::result::Result<(), &'static str> {
    if i >= n || j >= n {
        return Err("node index out of range");
    }
    if i == j {
        return Err("self-loop");
    }
    if !(w.is_finite() && w > 0.0) {
        return Err("edge weight must be positive and finite");
    }
    Ok(())
}

pub fn default_zero_tolerance(lambda_max: f64) -> f64 {
    1e-9 * lambda_max.max(1.0)
}

/// Laplacian eigenvalues sorted ascending, with the smallest clamped to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSpectrum {
    eigenvalues: Vec<f64>,
    zero_tolerance: f64,
}

impl LaplacianSpectrum {
    /// Sorts `eigenvalues`, checks that the smallest is within
    /// `zero_tolerance` of zero and that none is below `-zero_tolerance`,
    /// then clamps the smallest to exactly 0.
    pub fn new(mut eigenvalues: Vec<f64>, zero_tolerance: f64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidSize { what: "spectrum", got: 0, min: 1 });
        }
        if !(zero_tolerance.is_finite() && zero_tolerance > 0.0) {
            return Err(Error::InvalidParameter { name: "zero_tolerance", reason: "must be positive" });
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite Laplacian eigenvalue"));
        }
        eigenvalues.sort_by(f64::total_cmp);
        if libm::fabs(eigenvalues[0]) > zero_tolerance {
            return Err(Error::InvalidParameter {
                name: "eigenvalues",
                reason: "smallest Laplacian eigenvalue is not zero",
            });
        }
        eigenvalues[0] = 0.0;
        Ok(Self { eigenvalues, zero_tolerance })
    }

    /// Closed-form spectrum of `ring(n, weight)`: `2l(1 - cos(2 pi k / n))`.
    pub fn ring(n: usize, weight: f64) -> Result<Self> {
        check_size("ring", n, 3)?;
        check_weight(weight)?;
        Self::from_analytic((0..n).map(|k| ring_eigenvalue(n, k, weight)).collect())
    }

    /// Closed-form spectrum of `path(n, weight)`: `2l(1 - cos(pi k / n))`.
    pub fn path(n: usize, weight: f64) -> Result<Self> {
        check_size("path", n, 2)?;
        check_weight(weight)?;
        Self::from_analytic(
            (0..n).map(|k| 2.0 * weight * (1.0 - libm::cos(PI * k as f64 / n as f64))).collect(),
        )
    }

    /// Closed-form spectrum of `torus(side, dim, weight)`: sums of ring
    /// eigenvalues over all lattice wave vectors.
    pub fn torus(side: usize, dim: usize, weight: f64) -> Result<Self> {
        check_size("torus side", side, 3)?;
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidSize { what: "torus dimension (1..=3)", got: dim, min: 1 });
        }
        check_weight(weight)?;
        let ring: Vec<f64> = (0..side).map(|k| ring_eigenvalue(side, k, weight)).collect();
        let mut values = vec![0.0];
        for _ in 0..dim {
            values = values.iter().flat_map(|&v| ring.iter().map(move |&r| v + r)).collect();
        }
        Self::from_analytic(values)
    }

    /// Spectrum of the complete graph: `0` once, `n * weight` otherwise.
    pub fn complete(n: usize, weight: f64) -> Result<Self> {
        check_size("complete graph", n, 2)?;
        check_weight(weight)?;
        let mut values = vec![n as f64 * weight; n];
        values[0] = 0.0;
        Self::from_analytic(values)
    }

    fn from_analytic(values: Vec<f64>) -> Result<Self> {
        let top = values.iter().copied().fold(0.0, f64::max);
        Self::new(values, default_zero_tolerance(top))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn zero_tolerance(&self) -> f64 {
        self.zero_tolerance
    }

    pub fn node_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `lambda_2`, or 0 for a single node.
    pub fn algebraic_connectivity(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() == 1 || self.algebraic_connectivity() > self.zero_tolerance
    }

    /// `(n, lambda_n)` for `n = 2..=N` (1-based mode index). Eigenvalues
    /// within the zero tolerance are reported as exactly 0.
    pub fn modes(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let tol = self.zero_tolerance;
        self.eigenvalues
            .iter()
            .enumerate()
            .skip(1)
            .map(move |(k, &v)| (k + 1, if libm::fabs(v) <= tol { 0.0 } else { v }))
    }
}

fn ring_eigenvalue(n: usize, k: usize, weight: f64) -> f64 {
    2.0 * weight * (1.0 - libm::cos(2.0 * PI * k as f64 / n as f64))
}
