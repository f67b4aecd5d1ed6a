//! Synthetic graphs and the symmetric graph operators used for aggregation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

/// Undirected simple graph on vertices `0..n`. Edges are stored as `(u, v)`
/// with `u < v`, which makes iteration order lexicographic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: BTreeSet::new(),
        }
    }

    /// Build from an edge list, rejecting self-loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::empty(n);
        for (u, v) in edges {
            if !g.insert_edge(u, v)? {
                return Err(Error::invalid(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(g)
    }

    /// Returns false if the edge was already present.
    fn insert_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        if u == v {
            return Err(Error::invalid(format!("self-loop at vertex {u}")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::invalid(format!(
                "edge ({u}, {v}) out of range for {} vertices",
                self.n
            )));
        }
        Ok(self.edges.insert((u.min(v), u.max(v))))
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    pub fn adjacency(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    pub fn to_json(&self) -> Result<String> {
        let file = GraphFile {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    /// Parse either the JSON form `{"n": .., "edges": [[u, v], ..]}` or a
    /// whitespace-separated edge list (`u v` per line, `#` comments allowed).
    /// Edge-list input infers `n` as one past the largest endpoint.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            let file: GraphFile = serde_json::from_str(text)?;
            return Graph::from_edges(file.n, file.edges.into_iter().map(|[u, v]| (u, v)));
        }
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.ok_or_else(|| Error::Parse(format!("line {}: expected two vertices", lineno + 1)))?
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::Parse(format!("line {}: trailing tokens", lineno + 1)));
            }
            edges.push((u, v));
        }
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Graph::from_edges(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for &(u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<[usize; 2]>,
}

/// Record of the preferential-attachment process: the seed-phase edge count
/// and the targets chosen for each new vertex.
#[derive(Debug, Clone, Default)]
pub struct BaTrace {
    pub seed_phase_edges: usize,
    pub attachments: Vec<(usize, Vec<usize>)>,
}

impl BaTrace {
    pub fn total_edges(&self) -> usize {
        self.seed_phase_edges + self.attachments.iter().map(|(_, t)| t.len()).sum::<usize>()
    }
}

/// Barabási–Albert preferential attachment.
///
/// Starts from `m` isolated vertices; vertex `m` links to all of them, and
/// every later vertex links to `m` distinct targets drawn from a list holding
/// each vertex once per incident edge endpoint (degree-proportional), with
/// duplicates rejected. Produces exactly `m·(n − m)` edges.
pub fn generate_ba(n: usize, m: usize, seed: u64) -> Result<Graph> {
    generate_ba_traced(n, m, seed).map(|(g, _)| g)
}

pub fn generate_ba_traced(n: usize, m: usize, seed: u64) -> Result<(Graph, BaTrace)> {
    if m == 0 || m >= n {
        return Err(Error::invalid(format!(
            "BA attachment count m={m} must satisfy 1 <= m < n={n}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut g = Graph::empty(n);
    let mut trace = BaTrace::default();
    let mut targets: Vec<usize> = (0..m).collect();
    let mut repeated: Vec<usize> = Vec::with_capacity(2 * m * n);
    for source in m..n {
        for &t in &targets {
            g.insert_edge(source, t)?;
        }
        trace.attachments.push((source, targets.clone()));
        repeated.extend_from_slice(&targets);
        repeated.extend(std::iter::repeat(source).take(m));
        if source + 1 < n {
            targets = random_subset(&repeated, m, &mut rng);
        }
    }
    Ok((g, trace))
}

fn random_subset(pool: &[usize], m: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(m);
    while chosen.len() < m {
        let x = pool[rng.below(pool.len())];
        if !chosen.contains(&x) {
            chosen.push(x);
        }
    }
    chosen
}

pub const REGULAR_MAX_RETRIES: usize = 1000;

/// Random `k`-regular graph by the pairing (configuration) model.
///
/// Each attempt shuffles the `n·k` half-edge stubs and pairs them off,
/// rejecting pairs that would form a self-loop or a repeated edge and
/// re-pairing the rejected stubs. An attempt that gets stuck is discarded
/// and the pairing restarts, up to [`REGULAR_MAX_RETRIES`] times.
pub fn generate_regular(n: usize, k: usize, seed: u64) -> Result<Graph> {
    if k >= n {
        return Err(Error::invalid(format!("degree k={k} must be < n={n}")));
    }
    if (n * k) % 2 != 0 {
        return Err(Error::invalid(format!("n*k = {} must be even", n * k)));
    }
    let mut rng = SplitMix64::new(seed);
    for _ in 0..REGULAR_MAX_RETRIES {
        if let Some(g) = try_pairing(n, k, &mut rng) {
            return Ok(g);
        }
    }
    Err(Error::GenerationFailure(format!(
        "no simple {k}-regular graph on {n} vertices after {REGULAR_MAX_RETRIES} pairings"
    )))
}

fn try_pairing(n: usize, k: usize, rng: &mut SplitMix64) -> Option<Graph> {
    let mut g = Graph::empty(n);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(k)).collect();
    while !stubs.is_empty() {
        rng.shuffle(&mut stubs);
        let mut leftover = Vec::new();
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            if u != v && !g.has_edge(u, v) {
                g.edges.insert((u.min(v), u.max(v)));
            } else {
                leftover.extend_from_slice(pair);
            }
        }
        if leftover.len() == stubs.len() && !has_suitable_pair(&g, &leftover) {
            return None;
        }
        stubs = leftover;
    }
    Some(g)
}

fn has_suitable_pair(g: &Graph, stubs: &[usize]) -> bool {
    stubs.iter().enumerate().any(|(i, &u)| {
        stubs[i + 1..]
            .iter()
            .any(|&v| u != v && !g.has_edge(u, v))
    })
}

/// GCN propagation matrix `D̃^{-1/2} (A + I) D̃^{-1/2}`.
pub fn normalized_adjacency(g: &Graph) -> Matrix {
    let n = g.vertex_count();
    let deg = g.degrees();
    let inv_sqrt: Vec<f64> = deg.iter().map(|&d| 1.0 / ((d + 1) as f64).sqrt()).collect();
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = inv_sqrt[i] * inv_sqrt[i];
    }
    for (u, v) in g.edges() {
        let w = inv_sqrt[u] * inv_sqrt[v];
        a[(u, v)] = w;
        a[(v, u)] = w;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `Â` itself; not guaranteed PSD.
    NormalizedAdjacency,
    /// `(I + Â) / 2`, eigenvalues in `[0, 1]`.
    #[default]
    ShiftPsd,
    /// `Â²`.
    Squared,
    /// `((I + Â) / 2)^power`.
    SgcPower,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 4] = [
        OperatorKind::NormalizedAdjacency,
        OperatorKind::ShiftPsd,
        OperatorKind::Squared,
        OperatorKind::SgcPower,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::NormalizedAdjacency => "normalized_adjacency",
            OperatorKind::ShiftPsd => "shift_psd",
            OperatorKind::Squared => "squared",
            OperatorKind::SgcPower => "sgc_power",
        }
    }

    pub fn is_psd(self) -> bool {
        !matches!(self, OperatorKind::NormalizedAdjacency)
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown operator kind `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct GraphOperator {
    pub matrix: Matrix,
    pub kind: OperatorKind,
    pub power: usize,
}

impl GraphOperator {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

pub fn build_operator(g: &Graph, kind: OperatorKind, power: usize) -> Result<GraphOperator> {
    if power == 0 {
        return Err(Error::invalid("operator power must be >= 1"));
    }
    let a_hat = normalized_adjacency(g);
    let matrix = match kind {
        OperatorKind::NormalizedAdjacency => a_hat,
        OperatorKind::ShiftPsd => shift_psd(&a_hat),
        OperatorKind::Squared => a_hat.matmul(&a_hat)?,
        OperatorKind::SgcPower => {
            let base = shift_psd(&a_hat);
            let mut acc = base.clone();
            for _ in 1..power {
                acc = acc.matmul(&base)?;
            }
            symmetrize_in_place(&mut acc);
            acc
        }
    };
    Ok(GraphOperator {
        matrix,
        kind,
        power,
    })
}

fn shift_psd(a_hat: &Matrix) -> Matrix {
    let mut m = a_hat.scaled(0.5);
    for i in 0..m.rows() {
        m[(i, i)] += 0.5;
    }
    m
}

// Products of symmetric matrices drift by rounding; average the halves.
fn symmetrize_in_place(m: &mut Matrix) {
    let n = m.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
