//! Finite simple graphs and ℤ^d-periodic graphs.
//!
//! A [`SimpleGraph`] is an undirected graph without loops or multiple
//! edges, stored as a canonical sorted edge list plus adjacency lists. A
//! [`PeriodicGraph`] describes an infinite graph X carrying a free ℤ^d
//! action with finite quotient: a fundamental cell of `cell_size` vertex
//! classes and a set of edge orbits `(i, j, v)`, each meaning an edge
//! between vertex `(i, w)` and `(j, w + v)` for every translation
//! `w ∈ ℤ^d`. [`PeriodicGraph::unroll`] materializes a finite window of X
//! large enough that all paths of bounded length rooted in the central
//! cell are counted correctly.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt;

/// A finite simple undirected graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl SimpleGraph {
    /// Builds a graph from an edge list, canonicalizing pair order and
    /// rejecting loops, duplicates and out-of-range endpoints.
    pub fn new(n: usize, raw_edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut edges = Vec::with_capacity(raw_edges.len());
        for &(u, v) in raw_edges {
            if u >= n {
                return Err(Error::VertexOutOfRange { index: u, n });
            }
            if v >= n {
                return Err(Error::VertexOutOfRange { index: v, n });
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateEdge(w[0].0, w[0].1));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Self { n, edges, adj })
    }

    /// Builds a graph from a 0/1 adjacency matrix, rejecting asymmetric
    /// data and diagonal entries.
    pub fn from_adjacency(matrix: &[Vec<u8>]) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut edges = Vec::new();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::AsymmetricEdge(i, row.len()));
            }
            for (j, &x) in row.iter().enumerate() {
                if x != matrix[j][i] {
                    return Err(Error::AsymmetricEdge(i, j));
                }
                if i == j && x != 0 {
                    return Err(Error::SelfLoop(i));
                }
                if i < j && x != 0 {
                    edges.push((i, j));
                }
            }
        }
        Self::new(n, &edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list, each pair `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// `Some(k)` when every vertex has degree `k`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        (1..self.n).all(|v| self.degree(v) == d).then_some(d)
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Euler characteristic χ = |V| − |E|.
    pub fn euler_characteristic(&self) -> i64 {
        self.n as i64 - self.edges.len() as i64
    }

    /// Complete graph K_n.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j));
            }
        }
        Self::new(n, &edges).expect("K_n is valid")
    }

    /// Cycle graph C_n, n ≥ 3.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(n, &edges).expect("C_n is valid")
    }

    /// Path graph P_n on n vertices.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Self::new(n, &edges).expect("P_n is valid")
    }

    /// The Petersen graph.
    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5)); // outer pentagon
            edges.push((i, i + 5)); // spokes
            edges.push((i + 5, (i + 2) % 5 + 5)); // inner pentagram
        }
        Self::new(10, &edges).expect("Petersen is valid")
    }
}

/// Outcome of structural validation: the type invariants hold (or
/// construction would have failed); this reports derived facts and
/// degeneracies the zeta machinery cares about.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub max_degree: usize,
    pub min_degree: usize,
    /// `Some(q)` when the graph is (q+1)-regular.
    pub regular_q: Option<usize>,
    pub connected: Option<bool>,
    pub warnings: Vec<String>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ok, d={}", self.max_degree)?;
        if let Some(q) = self.regular_q {
            write!(f, ", regular q={q}")?;
        }
        for w in &self.warnings {
            write!(f, "; warning: {w}")?;
        }
        Ok(())
    }
}

fn degree_report(degrees: &[usize], connected: Option<bool>) -> ValidationReport {
    let max_degree = degrees.iter().copied().max().unwrap_or(0);
    let min_degree = degrees.iter().copied().min().unwrap_or(0);
    let regular_q = (max_degree == min_degree && max_degree >= 1).then(|| max_degree - 1);
    let mut warnings = Vec::new();
    let isolated = degrees.iter().filter(|&&d| d == 0).count();
    if isolated > 0 {
        warnings.push(format!("{isolated} isolated vertex(es); zeta machinery requires min degree >= 1"));
    }
    let leaves = degrees.iter().filter(|&&d| d == 1).count();
    if leaves > 0 {
        warnings.push(format!("{leaves} vertex(es) of degree 1; Q - I has negative entries there"));
    }
    if connected == Some(false) {
        warnings.push("graph is not connected".to_string());
    }
    ValidationReport { max_degree, min_degree, regular_q, connected, warnings }
}

impl SimpleGraph {
    /// Confirms the type invariants and reports max degree, regularity and
    /// degeneracy warnings.
    pub fn validate(&self) -> ValidationReport {
        let degrees: Vec<_> = (0..self.n).map(|v| self.degree(v)).collect();
        degree_report(&degrees, Some(self.is_connected()))
    }
}

/// One edge orbit of a periodic graph: an edge between `(i, 0)` and
/// `(j, offset)`, repeated over all ℤ^d translates. Stored in canonical
/// orientation: `i < j`, or `i == j` with `offset` lexicographically
/// positive.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellEdge {
    pub i: usize,
    pub j: usize,
    pub offset: Vec<i64>,
}

impl CellEdge {
    /// Canonicalizes `(i, j, v)`; `(j, i, -v)` maps to the same value.
    pub fn canonical(i: usize, j: usize, offset: Vec<i64>) -> Result<Self> {
        if i < j {
            Ok(Self { i, j, offset })
        } else if i > j {
            Ok(Self { i: j, j: i, offset: offset.iter().map(|x| -x).collect() })
        } else {
            // i == j: orientation is fixed by the sign of the first
            // nonzero offset component; a zero offset is a loop.
            match offset.iter().find(|&&x| x != 0) {
                None => Err(Error::SelfLoop(i)),
                Some(&x) if x > 0 => Ok(Self { i, j, offset }),
                Some(_) => Ok(Self { i, j, offset: offset.iter().map(|x| -x).collect() }),
            }
        }
    }
}

/// A ℤ^d-periodic graph given by its fundamental cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicGraph {
    rank: usize,
    cell: usize,
    edges: Vec<CellEdge>,
}

impl PeriodicGraph {
    pub fn new(rank: usize, cell: usize, raw: &[(usize, usize, Vec<i64>)]) -> Result<Self> {
        if cell == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut edges = Vec::with_capacity(raw.len());
        for (i, j, v) in raw {
            if *i >= cell {
                return Err(Error::VertexOutOfRange { index: *i, n: cell });
            }
            if *j >= cell {
                return Err(Error::VertexOutOfRange { index: *j, n: cell });
            }
            if v.len() != rank {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("offset {:?} has length {} but rank is {}", v, v.len(), rank),
                });
            }
            edges.push(CellEdge::canonical(*i, *j, v.clone())?);
        }
        edges.sort();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateEdge(w[0].i, w[0].j));
            }
        }
        Ok(Self { rank, cell, edges })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cell_size(&self) -> usize {
        self.cell
    }

    /// Canonical, sorted edge orbits.
    pub fn edges(&self) -> &[CellEdge] {
        &self.edges
    }

    /// Degree of the vertex class `i` (equal along the whole Γ-orbit).
    pub fn degree(&self, i: usize) -> usize {
        self.edges
            .iter()
            .map(|e| (e.i == i) as usize + (e.j == i) as usize)
            .sum()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.cell).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        (0..self.cell).map(|i| self.degree(i)).min().unwrap_or(0)
    }

    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        (1..self.cell).all(|i| self.degree(i) == d).then_some(d)
    }

    /// Largest ∞-norm of an edge offset.
    pub fn max_offset_norm(&self) -> i64 {
        self.edges
            .iter()
            .flat_map(|e| e.offset.iter().map(|x| x.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> ValidationReport {
        let degrees: Vec<_> = (0..self.cell).map(|i| self.degree(i)).collect();
        degree_report(&degrees, None)
    }

    /// The hypercubic lattice ℤ^d: one vertex class, one edge orbit per
    /// coordinate direction.
    pub fn hypercubic(d: usize) -> Self {
        let raw: Vec<_> = (0..d)
            .map(|k| {
                let mut v = vec![0i64; d];
                v[k] = 1;
                (0usize, 0usize, v)
            })
            .collect();
        Self::new(d, 1, &raw).expect("hypercubic lattice is valid")
    }

    /// The honeycomb lattice: two vertex classes, 3-regular.
    pub fn honeycomb() -> Self {
        Self::new(
            2,
            2,
            &[
                (0, 1, vec![0, 0]),
                (0, 1, vec![-1, 0]),
                (0, 1, vec![0, -1]),
            ],
        )
        .expect("honeycomb lattice is valid")
    }

    /// Materializes the finite window of X induced on
    /// `cell × {-h..h}^rank`, where `h = radius * max(1, max offset norm)`,
    /// so every path of length ≤ `radius` starting in the central cell
    /// stays inside. Returns the window graph, the map from window vertex
    /// to `(class, coordinate)`, and the ids of the central cell.
    pub fn unroll(&self, radius: usize) -> Result<Window> {
        let half = radius as i64 * self.max_offset_norm().max(1);
        let side = (2 * half + 1) as usize;
        let box_count = side.checked_pow(self.rank as u32).ok_or_else(|| {
            Error::Numerical("unroll window too large".into())
        })?;
        let total = box_count
            .checked_mul(self.cell)
            .filter(|&t| t <= 50_000_000)
            .ok_or_else(|| Error::Numerical("unroll window too large".into()))?;

        // Enumerate coordinates in odometer order so ids are reproducible.
        let mut coords = Vec::with_capacity(box_count);
        let mut cur = vec![-half; self.rank];
        loop {
            coords.push(cur.clone());
            let mut k = 0;
            loop {
                if k == self.rank {
                    break;
                }
                cur[k] += 1;
                if cur[k] <= half {
                    break;
                }
                cur[k] = -half;
                k += 1;
            }
            if k == self.rank {
                break;
            }
            if self.rank == 0 {
                break;
            }
        }

        let mut labels = Vec::with_capacity(total);
        let mut index = HashMap::with_capacity(total);
        for w in &coords {
            for c in 0..self.cell {
                index.insert((c, w.clone()), labels.len());
                labels.push((c, w.clone()));
            }
        }

        let mut edges = Vec::new();
        for w in &coords {
            for e in &self.edges {
                let target: Vec<i64> = w.iter().zip(&e.offset).map(|(a, b)| a + b).collect();
                if target.iter().all(|x| x.abs() <= half) {
                    let a = index[&(e.i, w.clone())];
                    let b = index[&(e.j, target)];
                    edges.push((a, b));
                }
            }
        }
        let graph = SimpleGraph::new(labels.len(), &edges)?;
        let central: Vec<usize> = (0..self.cell)
            .map(|c| index[&(c, vec![0i64; self.rank])])
            .collect();
        Ok(Window { graph, labels, central, certified_len: radius })
    }
}

/// A finite window of a periodic graph, with the coordinates of each
/// window vertex and the ids of the central copy of the fundamental cell.
#[derive(Clone, Debug)]
pub struct Window {
    pub graph: SimpleGraph,
    /// window vertex id → (vertex class, ℤ^d coordinate)
    pub labels: Vec<(usize, Vec<i64>)>,
    pub central: Vec<usize>,
    /// Path counts of length ≤ this, rooted in `central`, are exact.
    pub certified_len: usize,
}
