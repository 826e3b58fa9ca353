//! Network graphs and combination matrices.
//!
//! **Storage convention.** A [`CombinationMatrix`] is stored
//! column-stochastic: `weights[(l, k)] = a_{lk}` is the weight node `k`
//! assigns to the estimate arriving from neighbour `l`, and every column
//! sums to one. The Perron vector `y` is the *right* eigenvector `A y = y`
//! normalised to `1ᵀ y = 1`; the all-ones vector is the left eigenvector.

use std::collections::VecDeque;

use nalgebra::{Complex, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Column sums must be within this of one for a matrix to count as
/// left-stochastic.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Perron residual `‖Ay − y‖∞` accepted from the direct solve before the
/// power-iteration fallback kicks in.
pub const PERRON_TOL: f64 = 1e-10;

/// Eigenvector matrices with a condition number above this are treated as
/// numerically defective.
pub const MAX_CONDITION: f64 = 1e12;

/// Undirected graph on `N` nodes. Every node is its own neighbour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    adjacency: Vec<bool>,
}

impl Graph {
    /// Graph with the given undirected edges. Self-loops are implicit.
    pub fn new(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::Config("graph needs at least one node".into()));
        }
        let mut g = Self { n_nodes, adjacency: vec![false; n_nodes * n_nodes] };
        for k in 0..n_nodes {
            g.adjacency[k * n_nodes + k] = true;
        }
        for &(a, b) in edges {
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::Dimension(format!("edge ({a}, {b}) out of range")));
            }
            g.link(a, b);
        }
        Ok(g)
    }

    pub fn complete(n_nodes: usize) -> Self {
        let edges: Vec<_> = (0..n_nodes)
            .flat_map(|a| ((a + 1)..n_nodes).map(move |b| (a, b)))
            .collect();
        Self::new(n_nodes, &edges).expect("complete graph")
    }

    pub fn path(n_nodes: usize) -> Self {
        let edges: Vec<_> = (1..n_nodes).map(|b| (b - 1, b)).collect();
        Self::new(n_nodes, &edges).expect("path graph")
    }

    /// Star with node 0 at the centre.
    pub fn star(n_nodes: usize) -> Self {
        let edges: Vec<_> = (1..n_nodes).map(|b| (0, b)).collect();
        Self::new(n_nodes, &edges).expect("star graph")
    }

    fn link(&mut self, a: usize, b: usize) {
        let n = self.n_nodes;
        self.adjacency[a * n + b] = true;
        self.adjacency[b * n + a] = true;
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// `l ∈ 𝒩_k`.
    pub fn contains(&self, l: usize, k: usize) -> bool {
        self.adjacency[l * self.n_nodes + k]
    }

    /// `𝒩_k`, including `k` itself, ascending.
    pub fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_nodes).filter(move |&l| self.contains(l, k))
    }

    /// `|𝒩_k|`, counting `k`.
    pub fn degree(&self, k: usize) -> usize {
        self.neighbors(k).count()
    }

    /// Average neighbourhood size `(1/N) Σ |𝒩_k|`.
    pub fn mean_degree(&self) -> f64 {
        (0..self.n_nodes).map(|k| self.degree(k)).sum::<usize>() as f64 / self.n_nodes as f64
    }

    /// Undirected edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n_nodes {
            for b in (a + 1)..self.n_nodes {
                if self.contains(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// BFS reachability from node 0.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n_nodes];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(k) = queue.pop_front() {
            for l in self.neighbors(k) {
                if !seen[l] {
                    seen[l] = true;
                    queue.push_back(l);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Neighbour lists excluding self-loops, for serialisation.
    pub fn to_adjacency_list(&self) -> Vec<Vec<usize>> {
        (0..self.n_nodes)
            .map(|k| self.neighbors(k).filter(|&l| l != k).collect())
            .collect()
    }

    pub fn from_adjacency_list(lists: &[Vec<usize>]) -> Result<Self> {
        let n = lists.len();
        let mut g = Self::new(n, &[])?;
        for (k, list) in lists.iter().enumerate() {
            for &l in list {
                if l >= n {
                    return Err(Error::Dimension(format!("neighbour {l} of node {k} out of range")));
                }
                g.link(k, l);
            }
        }
        Ok(g)
    }
}

/// Random connected graph with average neighbourhood size close to
/// `degree_target` (neighbourhoods count the node itself).
///
/// A uniformly random recursive tree guarantees connectivity; extra edges are
/// then drawn uniformly from the remaining pairs until the target density is
/// reached. Targets below the tree density yield the tree.
pub fn random_connected_graph<R: Rng + ?Sized>(
    n: usize,
    degree_target: usize,
    rng: &mut R,
) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InfeasibleGraph(format!("need at least two nodes, got {n}")));
    }
    if degree_target == 0 || degree_target > n {
        return Err(Error::InfeasibleGraph(format!(
            "neighbourhood size {degree_target} impossible with {n} nodes"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut g = Graph::new(n, &[])?;
    for i in 1..n {
        let j = rng.random_range(0..i);
        g.link(order[i], order[j]);
    }
    let wanted_edges = (n * (degree_target - 1)) / 2;
    let have = n - 1;
    if wanted_edges > have {
        let mut candidates: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
            .filter(|&(a, b)| !g.contains(a, b))
            .collect();
        candidates.shuffle(rng);
        for &(a, b) in candidates.iter().take(wanted_edges - have) {
            g.link(a, b);
        }
    }
    Ok(g)
}

/// `N×N` nonnegative weights together with the graph they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationMatrix {
    weights: DMatrix<f64>,
    graph: Graph,
}

impl CombinationMatrix {
    /// Wraps weights on a graph. Only shape and sign are enforced here; use
    /// [`validate`](Self::validate) for stochasticity, support and
    /// primitivity.
    pub fn new(weights: DMatrix<f64>, graph: Graph) -> Result<Self> {
        let n = graph.n_nodes();
        if weights.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "weights are {}x{} for a graph of {n} nodes",
                weights.nrows(),
                weights.ncols()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("combination weights must be finite and nonnegative".into()));
        }
        Ok(Self { weights, graph })
    }

    /// Weights with the graph inferred from their (symmetrised) support.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        if !weights.is_square() {
            return Err(Error::Dimension("combination matrix must be square".into()));
        }
        let n = weights.nrows();
        let mut edges = Vec::new();
        for l in 0..n {
            for k in 0..n {
                if l != k && weights[(l, k)] > 0.0 {
                    edges.push((l, k));
                }
            }
        }
        let graph = Graph::new(n, &edges)?;
        Self::new(weights, graph)
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n), Graph::new(n, &[]).expect("n > 0")).expect("identity")
    }

    /// Two-node matrix `[[α, 1−β], [1−α, β]]`.
    pub fn two_node(alpha: f64, beta: f64) -> Result<Self> {
        let w = DMatrix::from_row_slice(2, 2, &[alpha, 1.0 - beta, 1.0 - alpha, beta]);
        Self::from_weights(w)
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// `a_{lk}`.
    pub fn get(&self, l: usize, k: usize) -> f64 {
        self.weights[(l, k)]
    }

    /// Checks that nonzero weights only sit on graph edges.
    pub fn check_support(&self) -> Result<()> {
        let n = self.n_nodes();
        for l in 0..n {
            for k in 0..n {
                if self.weights[(l, k)] != 0.0 && !self.graph.contains(l, k) {
                    return Err(Error::SupportViolation { row: l, col: k });
                }
            }
        }
        Ok(())
    }

    /// Strict positivity of some power of the support pattern.
    pub fn is_primitive(&self) -> bool {
        let n = self.n_nodes();
        let support: Vec<bool> = self.weights.iter().map(|&w| w > 0.0).collect();
        // column-major like nalgebra: index = l + k*n
        let idx = |r: usize, c: usize| r + c * n;
        if (0..n).any(|k| (0..n).all(|l| !support[idx(l, k)])) {
            return false;
        }
        // Once B^m > 0 every higher power stays positive (no zero columns), so
        // squaring until the exponent exceeds the Wielandt bound suffices.
        let bound = (n - 1) * (n - 1) + 1;
        let mut power = support;
        let mut exponent = 1usize;
        loop {
            if power.iter().all(|&b| b) {
                return true;
            }
            if exponent >= bound {
                return false;
            }
            let mut next = vec![false; n * n];
            for r in 0..n {
                for c in 0..n {
                    next[idx(r, c)] = (0..n).any(|m| power[idx(r, m)] && power[idx(m, c)]);
                }
            }
            power = next;
            exponent *= 2;
        }
    }

    /// Structural and numerical checks. Never fails; problems are listed in
    /// the report.
    pub fn validate(&self) -> ValidationReport {
        let n = self.n_nodes();
        let mut failures = Vec::new();
        let col_err = (0..n)
            .map(|k| (self.weights.column(k).sum() - 1.0).abs())
            .fold(0.0, f64::max);
        let row_err = (0..n)
            .map(|l| (self.weights.row(l).sum() - 1.0).abs())
            .fold(0.0, f64::max);
        let left_stochastic = col_err <= STOCHASTIC_TOL;
        if !left_stochastic {
            failures.push(format!("column sums deviate from 1 by up to {col_err:e}"));
        }
        let doubly_stochastic = left_stochastic && row_err <= STOCHASTIC_TOL;

        let mut topology_consistent = true;
        for l in 0..n {
            for k in 0..n {
                let positive = self.weights[(l, k)] > 0.0;
                if positive != self.graph.contains(l, k) {
                    topology_consistent = false;
                    failures.push(format!(
                        "a[{l},{k}] = {} but neighbour relation is {}",
                        self.weights[(l, k)],
                        self.graph.contains(l, k)
                    ));
                }
            }
        }
        let connected = self.graph.is_connected();
        if !connected {
            failures.push("graph is not connected".into());
        }
        let primitive = self.is_primitive();
        if !primitive {
            failures.push("matrix is not primitive".into());
        }
        ValidationReport {
            left_stochastic,
            doubly_stochastic,
            topology_consistent,
            connected,
            primitive,
            max_column_sum_error: col_err,
            max_row_sum_error: row_err,
            failures,
        }
    }

    /// Serialisable adjacency list plus weight triplets.
    pub fn to_json(&self) -> CombinationJson {
        let n = self.n_nodes();
        let mut weights = Vec::new();
        for k in 0..n {
            for l in 0..n {
                if self.weights[(l, k)] != 0.0 {
                    weights.push(WeightTriplet { from: l, to: k, weight: self.weights[(l, k)] });
                }
            }
        }
        CombinationJson { n_nodes: n, adjacency: self.graph.to_adjacency_list(), weights }
    }

    pub fn from_json(json: &CombinationJson) -> Result<Self> {
        if json.adjacency.len() != json.n_nodes {
            return Err(Error::Dimension("adjacency list length differs from n_nodes".into()));
        }
        let graph = Graph::from_adjacency_list(&json.adjacency)?;
        let n = json.n_nodes;
        let mut w = DMatrix::zeros(n, n);
        for t in &json.weights {
            if t.from >= n || t.to >= n {
                return Err(Error::Dimension(format!("weight ({}, {}) out of range", t.from, t.to)));
            }
            w[(t.from, t.to)] = t.weight;
        }
        let cm = Self::new(w, graph)?;
        cm.check_support()?;
        Ok(cm)
    }
}

/// Free-function form of [`CombinationMatrix::validate`].
pub fn validate(cm: &CombinationMatrix) -> ValidationReport {
    cm.validate()
}

/// Result of [`CombinationMatrix::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub left_stochastic: bool,
    pub doubly_stochastic: bool,
    pub topology_consistent: bool,
    pub connected: bool,
    pub primitive: bool,
    pub max_column_sum_error: f64,
    pub max_row_sum_error: f64,
    pub failures: Vec<String>,
}

impl ValidationReport {
    /// Usable as a diffusion combination matrix.
    pub fn is_valid(&self) -> bool {
        self.left_stochastic && self.topology_consistent && self.primitive
    }
}

/// JSON form of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n_nodes: usize,
    /// Neighbours of each node, self excluded.
    pub adjacency: Vec<Vec<usize>>,
}

impl From<&Graph> for GraphJson {
    fn from(g: &Graph) -> Self {
        Self { n_nodes: g.n_nodes(), adjacency: g.to_adjacency_list() }
    }
}

impl TryFrom<&GraphJson> for Graph {
    type Error = Error;

    fn try_from(j: &GraphJson) -> Result<Self> {
        if j.adjacency.len() != j.n_nodes {
            return Err(Error::Dimension("adjacency list length differs from n_nodes".into()));
        }
        Graph::from_adjacency_list(&j.adjacency)
    }
}

/// `a_{from,to}`: the weight node `to` gives to node `from`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTriplet {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// JSON form of a combination matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationJson {
    pub n_nodes: usize,
    pub adjacency: Vec<Vec<usize>>,
    pub weights: Vec<WeightTriplet>,
}

/// Perron vector of a primitive combination matrix: `A y = y`, `1ᵀ y = 1`,
/// `y ≥ 0`.
pub fn perron_vector(cm: &CombinationMatrix) -> Result<DVector<f64>> {
    let n = cm.n_nodes();
    if !cm.is_primitive() {
        return Err(Error::SpectralAmbiguity);
    }
    let a = cm.weights();
    if n == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    // (A − I) y = 0 with the last equation replaced by 1ᵀ y = 1.
    let mut sys = a - DMatrix::identity(n, n);
    sys.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let direct = sys.lu().solve(&rhs);
    let residual = |y: &DVector<f64>| (a * y - y).amax();
    let mut y = match direct {
        Some(y) if y.iter().all(|v| v.is_finite()) && residual(&y) <= PERRON_TOL => y,
        _ => power_iteration(a),
    };
    for v in y.iter_mut() {
        if *v < 0.0 {
            debug_assert!(*v > -1e-10, "Perron entry {v}");
            *v = 0.0;
        }
    }
    let s = y.sum();
    y /= s;
    if residual(&y) > PERRON_TOL {
        return Err(Error::SpectralAmbiguity);
    }
    Ok(y)
}

fn power_iteration(a: &DMatrix<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut y = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..100_000 {
        let mut next = a * &y;
        let s = next.sum();
        next /= s;
        let delta = (&next - &y).amax();
        y = next;
        if delta < 1e-15 {
            break;
        }
    }
    y
}

/// Eigendecomposition `A = T D T⁻¹` with `D` diagonal (complex in general).
///
/// The eigenvalue at one comes first. When `A` is primitive the first column
/// of `T` is the Perron vector, which makes the first row of `T⁻¹` equal to
/// `1ᵀ`.
#[derive(Debug, Clone)]
pub struct SpectralA {
    pub eigvals: Vec<C64>,
    pub t: DMatrix<C64>,
    pub t_inv: DMatrix<C64>,
    pub perron_y: Option<DVector<f64>>,
    /// 2-norm condition number of `T`.
    pub condition: f64,
}

impl SpectralA {
    pub fn n(&self) -> usize {
        self.eigvals.len()
    }

    /// `D` as a dense matrix.
    pub fn d(&self) -> DMatrix<C64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigvals))
    }

    /// Whether `T` is well enough conditioned for the reduced formulas.
    pub fn is_reliable(&self) -> bool {
        self.condition.is_finite() && self.condition <= MAX_CONDITION
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        (&self.t * self.d() * &self.t_inv).map(|z| z.re)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigvals.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn condition_number(t: &DMatrix<C64>) -> f64 {
    let sv = t.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Computes `A = T D T⁻¹`. Eigenvalues come from a real Schur form,
/// eigenvectors from the null space of `A − λI` (one SVD per cluster of
/// coincident eigenvalues).
pub fn spectral_decompose(cm: &CombinationMatrix) -> Result<SpectralA> {
    let n = cm.n_nodes();
    let a = cm.weights();
    let mut eig: Vec<C64> = a.complex_eigenvalues().iter().copied().collect();
    if eig.len() != n {
        return Err(Error::Dimension("eigenvalue count mismatch".into()));
    }
    // Eigenvalue nearest one first, then by decreasing modulus.
    let lead = (0..n)
        .min_by(|&i, &j| (eig[i] - 1.0).norm().total_cmp(&(eig[j] - 1.0).norm()))
        .unwrap();
    let one = eig.remove(lead);
    eig.sort_by(|x, y| {
        y.norm()
            .total_cmp(&x.norm())
            .then(y.re.total_cmp(&x.re))
            .then(y.im.total_cmp(&x.im))
    });
    eig.insert(0, one);

    let perron_y = if cm.is_primitive() { Some(perron_vector(cm)?) } else { None };
    if perron_y.is_some() {
        // Snap to the exact value; Perron–Frobenius guarantees it.
        eig[0] = C64::new(1.0, 0.0);
    }

    // Cluster coincident eigenvalues.
    let tol = 1e-6;
    let mut cluster_of = vec![usize::MAX; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if cluster_of[i] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![i];
        cluster_of[i] = id;
        for j in (i + 1)..n {
            if cluster_of[j] == usize::MAX && (eig[i] - eig[j]).norm() < tol * eig[i].norm().max(1.0) {
                cluster_of[j] = id;
                members.push(j);
            }
        }
        clusters.push(members);
    }

    let ac: DMatrix<C64> = a.map(|x| C64::new(x, 0.0));
    let mut t = DMatrix::<C64>::zeros(n, n);
    for members in &clusters {
        let centre = members.iter().map(|&i| eig[i]).sum::<C64>() / members.len() as f64;
        for &i in members {
            eig[i] = centre;
        }
        let shifted = &ac - DMatrix::<C64>::identity(n, n) * centre;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
        for (slot, &i) in members.iter().enumerate() {
            let row = order[slot];
            let v: DVector<C64> = v_t.row(row).transpose().map(|z| z.conj());
            t.set_column(i, &v);
        }
    }
    if let Some(y) = &perron_y {
        t.set_column(0, &y.map(|v| C64::new(v, 0.0)));
    }
    let condition = condition_number(&t);
    let t_inv = t.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(n, n, C64::new(f64::NAN, 0.0)));
    // A defective cluster leaves columns that are not eigenvectors.
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(&eig));
    let residual = (&ac * &t - &t * d).norm() / (t.norm() * ac.norm().max(1.0));
    let finite = t_inv.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    let condition = if finite && residual <= 1e-9 { condition } else { f64::INFINITY };
    Ok(SpectralA { eigvals: eig, t, t_inv, perron_y, condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two(a: f64, b: f64) -> CombinationMatrix {
        CombinationMatrix::two_node(a, b).unwrap()
    }

    #[test]
    fn identity_is_not_primitive() {
        let r = CombinationMatrix::identity(2).validate();
        assert!(r.left_stochastic);
        assert!(!r.primitive);
        assert!(!r.connected);
        assert!(!r.is_valid());
    }

    #[test]
    fn uniform_two_node_is_doubly_stochastic() {
        let r = two(0.5, 0.5).validate();
        assert!(r.left_stochastic && r.doubly_stochastic && r.primitive && r.is_valid());
    }

    #[test]
    fn left_but_not_doubly() {
        let r = two(0.5, 0.9).validate();
        assert!(r.left_stochastic);
        assert!(!r.doubly_stochastic);
        assert_relative_eq!(r.max_row_sum_error, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn non_stochastic_reported() {
        let w = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.6, 0.5]);
        let r = CombinationMatrix::from_weights(w).unwrap().validate();
        assert!(!r.left_stochastic);
        assert!(!r.failures.is_empty());
    }

    #[test]
    fn support_mismatch_reported() {
        let w = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0, 0.0, 0.5]);
        let cm = CombinationMatrix::new(w, Graph::path(3)).unwrap();
        let r = cm.validate();
        assert!(r.left_stochastic);
        assert!(!r.topology_consistent);
    }

    #[test]
    fn periodic_matrix_is_not_primitive() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(!CombinationMatrix::from_weights(w).unwrap().is_primitive());
    }

    #[test]
    fn perron_of_doubly_stochastic_is_uniform() {
        let y = perron_vector(&two(0.3, 0.3)).unwrap();
        assert_relative_eq!(y[0], 0.5, epsilon = 1e-14);
        let w = DMatrix::from_row_slice(3, 3, &[0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5]);
        let y = perron_vector(&CombinationMatrix::from_weights(w).unwrap()).unwrap();
        for v in y.iter() {
            assert_relative_eq!(*v, 1.0 / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn perron_two_node_asymmetric() {
        let y = perron_vector(&two(0.5, 0.9)).unwrap();
        assert_relative_eq!(y[0], 1.0 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(y[1], 5.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn perron_single_node() {
        let cm = CombinationMatrix::identity(1);
        assert_eq!(perron_vector(&cm).unwrap().as_slice(), &[1.0]);
    }

    #[test]
    fn perron_rejects_reducible() {
        assert!(matches!(perron_vector(&CombinationMatrix::identity(3)), Err(Error::SpectralAmbiguity)));
    }

    #[test]
    fn two_node_spectrum() {
        let s = spectral_decompose(&two(0.5, 0.5)).unwrap();
        assert_relative_eq!(s.eigvals[0].re, 1.0, epsilon = 1e-14);
        assert!(s.eigvals[1].norm() < 1e-14);
    }

    #[test]
    fn two_node_t_matches_closed_form() {
        let (alpha, beta) = (0.3, 0.8);
        let s = spectral_decompose(&two(alpha, beta)).unwrap();
        assert_relative_eq!(s.eigvals[1].re, alpha + beta - 1.0, epsilon = 1e-12);
        let c = 1.0 / (2.0 - alpha - beta);
        let closed = DMatrix::from_row_slice(2, 2, &[c * (1.0 - beta), c, c * (1.0 - alpha), -c]);
        for col in 0..2 {
            // Columns agree up to a (complex) scale factor.
            let mine = s.t.column(col);
            let scale = if closed[(0, col)].abs() > 1e-12 {
                mine[0] / closed[(0, col)]
            } else {
                mine[1] / closed[(1, col)]
            };
            for row in 0..2 {
                assert!((mine[row] - scale * closed[(row, col)]).norm() < 1e-12);
            }
        }
        let ones_row = s.t_inv.row(0);
        assert!((ones_row[0] - 1.0).norm() < 1e-12 && (ones_row[1] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn symmetric_doubly_stochastic_has_real_spectrum() {
        let g = Graph::path(4);
        let w = DMatrix::from_row_slice(
            4,
            4,
            &[0.5, 0.5, 0.0, 0.0, 0.5, 0.2, 0.3, 0.0, 0.0, 0.3, 0.4, 0.3, 0.0, 0.0, 0.3, 0.7],
        );
        let s = spectral_decompose(&CombinationMatrix::new(w, g).unwrap()).unwrap();
        for z in &s.eigvals {
            assert!(z.im.abs() < 1e-12 && z.re <= 1.0 + 1e-12 && z.re >= -1.0 - 1e-12);
        }
    }

    #[test]
    fn reconstruction_random_left_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..8 {
            let mut w = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
            for k in 0..n {
                let s = w.column(k).sum();
                w.column_mut(k).scale_mut(1.0 / s);
            }
            let cm = CombinationMatrix::from_weights(w.clone()).unwrap();
            let s = spectral_decompose(&cm).unwrap();
            assert!(s.is_reliable());
            let rel = (s.reconstruct() - &w).norm() / w.norm();
            assert!(rel < 1e-8, "n={n}: {rel}");
            assert!(s.spectral_radius() <= 1.0 + 1e-10);
            assert!((s.eigvals[0] - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn repeated_eigenvalues_are_handled() {
        // Star Metropolis-like matrix: leaves share an eigenvalue.
        let g = Graph::star(4);
        let mut w = DMatrix::zeros(4, 4);
        for leaf in 1..4 {
            w[(0, leaf)] = 0.25;
            w[(leaf, 0)] = 0.25;
            w[(leaf, leaf)] = 0.75;
        }
        w[(0, 0)] = 0.25;
        let cm = CombinationMatrix::new(w.clone(), g).unwrap();
        let s = spectral_decompose(&cm).unwrap();
        assert!(s.is_reliable(), "cond {}", s.condition);
        assert!((s.reconstruct() - &w).norm() / w.norm() < 1e-8);
    }

    #[test]
    fn defective_matrix_flagged() {
        // Lower-bidiagonal: a 2x2 Jordan block at 0.5.
        let defective = DMatrix::from_row_slice(3, 3, &[0.5, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5, 1.0]);
        let s = spectral_decompose(&CombinationMatrix::from_weights(defective).unwrap()).unwrap();
        assert!(!s.is_reliable(), "cond {}", s.condition);
    }

    #[test]
    fn random_graph_small_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_connected_graph(2, 2, &mut rng).unwrap();
        assert_eq!(g, Graph::complete(2));
        for _ in 0..20 {
            let g = random_connected_graph(3, 2, &mut rng).unwrap();
            assert!(g.is_connected());
            assert!(g.edges().len() >= 2);
        }
        assert!(random_connected_graph(1, 1, &mut rng).is_err());
        assert!(random_connected_graph(5, 6, &mut rng).is_err());
    }

    /// Independent reachability oracle: transitive closure by repeated
    /// relaxation instead of BFS.
    fn closure_connected(g: &Graph) -> bool {
        let n = g.n_nodes();
        let mut reach: Vec<bool> = (0..n).map(|k| k == 0).collect();
        loop {
            let mut changed = false;
            for (a, b) in g.edges() {
                if reach[a] != reach[b] {
                    reach[a] = true;
                    reach[b] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        reach.into_iter().all(|r| r)
    }

    #[test]
    fn random_graph_twenty_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..50 {
            let g = random_connected_graph(20, 5, &mut rng).unwrap();
            assert!(g.is_connected() && closure_connected(&g));
            assert!((g.mean_degree() - 5.0).abs() <= 0.5, "{}", g.mean_degree());
        }
    }

    #[test]
    fn json_round_trip() {
        let cm = two(0.3, 0.6);
        let back = CombinationMatrix::from_json(&cm.to_json()).unwrap();
        assert_eq!(back, cm);
        let text = serde_json::to_string(&GraphJson::from(&Graph::path(4))).unwrap();
        let g: GraphJson = serde_json::from_str(&text).unwrap();
        assert_eq!(Graph::try_from(&g).unwrap(), Graph::path(4));
    }
}
