//! Random graph ensembles and spectral diagnostics.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{lanczos_extremes, symmetric_eigenvalues, LanczosOptions, SymmetricOperator};
use crate::rng::rng_from_seed;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no simple {d}-regular graph on {n} vertices")]
    Infeasible { n: usize, d: usize },
    #[error("edge probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),
    #[error("graph has no vertices")]
    Empty,
    #[error("vertex {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) listed twice")]
    MultiEdge(usize, usize),
    #[error("pairing model failed after {0} restarts")]
    GenerationFailed(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A simple undirected graph with a sorted, deduplicated edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    degree: Vec<usize>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        let mut e = Vec::with_capacity(edges.len());
        for (i, j) in edges {
            for v in [i, j] {
                if v >= n {
                    return Err(GraphError::IndexOutOfRange { index: v, n });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            e.push((i.min(j), i.max(j)));
        }
        e.sort_unstable();
        if let Some(w) = e.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::MultiEdge(w[0].0, w[0].1));
        }
        let mut degree = vec![0; n];
        for &(i, j) in &e {
            degree[i] += 1;
            degree[j] += 1;
        }
        Ok(Self { n, edges: e, degree })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        Self::new(n, edges).expect("simple")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect()).expect("simple")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degree
    }

    pub fn max_degree(&self) -> usize {
        self.degree.iter().copied().max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.degree.iter().copied().min().unwrap_or(0)
    }

    pub fn is_regular(&self) -> bool {
        self.max_degree() == self.min_degree()
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    pub fn adjacency_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    /// Edge list text: a `# n <n>` header then one `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# n {}\n", self.n);
        for &(i, j) in &self.edges {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    /// Parses edge-list text. Lines starting with `#` are comments, except a
    /// `# n <count>` header which fixes the vertex count; without it the count
    /// is one more than the largest index.
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("n") {
                    let v = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| {
                        GraphError::Parse {
                            line: lineno + 1,
                            msg: "bad vertex-count header".into(),
                        }
                    })?;
                    n = Some(v);
                }
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    msg: format!("expected two indices, got {:?}", line),
                });
            }
            let parse = |t: &str| {
                t.parse::<usize>().map_err(|e| GraphError::Parse {
                    line: lineno + 1,
                    msg: e.to_string(),
                })
            };
            edges.push((parse(parts[0])?, parse(parts[1])?));
        }
        let n = n.unwrap_or_else(|| {
            edges
                .iter()
                .map(|&(i, j)| i.max(j) + 1)
                .max()
                .unwrap_or(0)
        });
        Self::new(n, edges)
    }

    pub fn read(path: &Path) -> Result<Self, GraphError> {
        Self::from_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), GraphError> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}

const MAX_RESTARTS: usize = 10_000;

/// Random simple `d`-regular graph from the pairing model.
///
/// Points are matched one pair at a time; a pair that would create a loop or
/// a repeated edge is redrawn, and the whole pairing restarts if no valid
/// partner turns up.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph, GraphError> {
    if (n * d) % 2 == 1 || (d >= n && d > 0) {
        return Err(GraphError::Infeasible { n, d });
    }
    let mut rng = rng_from_seed(seed);
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(d); n];
    'restart: for _ in 0..MAX_RESTARTS {
        adj.iter_mut().for_each(Vec::clear);
        let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        points.shuffle(&mut rng);
        while !points.is_empty() {
            let mut ok = false;
            for _ in 0..(50 + 4 * points.len()) {
                let a = rng.random_range(0..points.len());
                let b = rng.random_range(0..points.len());
                let (u, v) = (points[a], points[b]);
                if a == b || u == v || adj[u].contains(&v) {
                    continue;
                }
                adj[u].push(v);
                adj[v].push(u);
                let (hi, lo) = (a.max(b), a.min(b));
                points.swap_remove(hi);
                points.swap_remove(lo);
                ok = true;
                break;
            }
            if !ok {
                continue 'restart;
            }
        }
        let edges = adj
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
            .collect();
        return Graph::new(n, edges);
    }
    Err(GraphError::GenerationFailed(MAX_RESTARTS))
}

/// `G(n, p)`: every pair present independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GraphError::InvalidProbability(p));
    }
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges)
}

/// Adjacency spectrum edges and the normalized-Laplacian expansion `λ(G)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLambda {
    /// Second largest adjacency eigenvalue.
    pub lambda2: f64,
    /// Smallest adjacency eigenvalue.
    pub lambda_min: f64,
    /// `max_{i≠1} |1 − λᵢ(L)|` for the normalized Laplacian `L`.
    pub lambda_g: f64,
}

impl SpectralLambda {
    /// `max(|λ₂|, |λ_min|)`, the deflated adjacency norm.
    pub fn deflated_norm(&self) -> f64 {
        self.lambda2.abs().max(self.lambda_min.abs())
    }
}

const DENSE_LIMIT: usize = 3000;

pub fn spectral_lambda(graph: &Graph) -> Result<SpectralLambda, GraphError> {
    check_spectral(graph)?;
    if graph.n() <= DENSE_LIMIT {
        Ok(spectral_dense(graph))
    } else {
        Ok(spectral_iterative(graph))
    }
}

/// Dense path, whatever the size.
pub fn spectral_lambda_dense(graph: &Graph) -> Result<SpectralLambda, GraphError> {
    check_spectral(graph)?;
    Ok(spectral_dense(graph))
}

/// Lanczos path with deflation, whatever the size.
pub fn spectral_lambda_iterative(graph: &Graph) -> Result<SpectralLambda, GraphError> {
    check_spectral(graph)?;
    Ok(spectral_iterative(graph))
}

/// As [`spectral_lambda`] but tolerating isolated vertices: their rows of the
/// normalized adjacency are zero, which contributes the eigenvalue 0 to the
/// normalized spectrum.
pub(crate) fn spectral_lambda_lenient(graph: &Graph) -> Result<SpectralLambda, GraphError> {
    if graph.n() < 2 {
        return Err(GraphError::Empty);
    }
    if graph.n() <= DENSE_LIMIT {
        Ok(spectral_dense(graph))
    } else {
        Ok(spectral_iterative(graph))
    }
}

fn check_spectral(graph: &Graph) -> Result<(), GraphError> {
    if graph.n() < 2 {
        return Err(GraphError::Empty);
    }
    if let Some(v) = graph.degrees().iter().position(|&d| d == 0) {
        return Err(GraphError::IsolatedVertex(v));
    }
    Ok(())
}

fn inv_sqrt_degrees(graph: &Graph) -> Vec<f64> {
    graph
        .degrees()
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
        .collect()
}

fn spectral_dense(graph: &Graph) -> SpectralLambda {
    let n = graph.n();
    let a = graph.adjacency_dense();
    let ev = symmetric_eigenvalues(&a);
    let s = inv_sqrt_degrees(graph);
    let m = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * s[i] * s[j]);
    let mev = symmetric_eigenvalues(&m);
    // drop the top eigenvalue (1 with eigenvector d^{1/2})
    let lambda_g = mev[..n - 1]
        .iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()));
    SpectralLambda {
        lambda2: ev[n - 2],
        lambda_min: ev[0],
        lambda_g,
    }
}

struct SparseAdjacency {
    adj: Vec<Vec<usize>>,
    scale: Option<Vec<f64>>,
}

impl SymmetricOperator for SparseAdjacency {
    fn dim(&self) -> usize {
        self.adj.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match &self.scale {
            None => {
                for (i, nb) in self.adj.iter().enumerate() {
                    y[i] = nb.iter().map(|&j| x[j]).sum();
                }
            }
            Some(s) => {
                for (i, nb) in self.adj.iter().enumerate() {
                    y[i] = s[i] * nb.iter().map(|&j| s[j] * x[j]).sum::<f64>();
                }
            }
        }
    }
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / nrm).collect()
}

fn spectral_iterative(graph: &Graph) -> SpectralLambda {
    let n = graph.n();
    let opts = LanczosOptions {
        max_dim: n.min(1000),
        tol: 1e-10,
        seed: 0x9a9a,
    };
    let a = SparseAdjacency {
        adj: graph.adjacency_lists(),
        scale: None,
    };
    let top = if graph.is_regular() {
        vec![1.0 / (n as f64).sqrt(); n]
    } else {
        lanczos_extremes(&a, &[], opts).max_vector
    };
    let adj_res = lanczos_extremes(&a, &[top], opts);

    let s = inv_sqrt_degrees(graph);
    let perron = unit(
        graph
            .degrees()
            .iter()
            .map(|&d| (d as f64).sqrt())
            .collect(),
    );
    let m = SparseAdjacency {
        adj: a.adj,
        scale: Some(s),
    };
    let norm_res = lanczos_extremes(&m, &[perron], opts);
    SpectralLambda {
        lambda2: adj_res.max,
        lambda_min: adj_res.min,
        lambda_g: norm_res.max.abs().max(norm_res.min.abs()),
    }
}
