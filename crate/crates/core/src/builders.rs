//! Constructors for the standard families of random walk spaces: weighted
//! graphs, Markov chains with their steady state, ε-step walks on point
//! clouds, and the Neumann-type convolution kernel on unions of intervals.

use std::collections::HashMap;
use std::io::Read;

use nalgebra::{DMatrix, DVector};

use crate::connectivity::closed_classes;
use crate::error::{Error, Result};
use crate::space::{Metric, Space};

/// Undirected weighted graph, loops allowed. Duplicate edges are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(labels: Vec<String>, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = labels.len();
        for &(u, v, w) in &edges {
            if u >= n || v >= n {
                return Err(Error::dim(format!("edge ({u},{v}) references a missing vertex")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::arg(format!("edge ({u},{v}) has nonpositive weight {w}")));
            }
        }
        Ok(WeightedGraph { labels, edges })
    }

    /// Vertices are numbered in order of first appearance.
    pub fn from_labeled_edges<S: AsRef<str>>(edges: &[(S, S, f64)]) -> Result<Self> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut labels = Vec::new();
        let mut id = |s: &str| {
            *index.entry(s.to_string()).or_insert_with(|| {
                labels.push(s.to_string());
                labels.len() - 1
            })
        };
        let numbered: Vec<_> = edges
            .iter()
            .map(|(u, v, w)| (id(u.as_ref()), id(v.as_ref()), *w))
            .collect();
        WeightedGraph::new(labels, numbered)
    }

    /// Symmetric weight matrix; a loop `(x, x, w)` contributes `w` to `W_xx`.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let n = self.labels.len();
        let mut w = DMatrix::zeros(n, n);
        for &(u, v, c) in &self.edges {
            w[(u, v)] += c;
            if u != v {
                w[(v, u)] += c;
            }
        }
        w
    }

    /// Parses "u,v,w" lines. A first line whose weight is not numeric is
    /// taken as a header.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut edges = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != 3 {
                return Err(Error::Parse(format!(
                    "edge line {} has {} fields, expected 3",
                    line + 1,
                    rec.len()
                )));
            }
            match rec[2].parse::<f64>() {
                Ok(w) => edges.push((rec[0].to_string(), rec[1].to_string(), w)),
                Err(_) if line == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("edge line {}: {e}", line + 1))),
            }
        }
        if edges.is_empty() {
            return Err(Error::Parse("edge list is empty".into()));
        }
        WeightedGraph::from_labeled_edges(&edges)
    }
}

/// Points in ℝ^k with positive base weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::arg("point cloud is empty"));
        }
        if points.len() != weights.len() {
            return Err(Error::dim(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let k = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != k {
                return Err(Error::dim(format!("point {i} has dimension {}, expected {k}", p.len())));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::arg(format!("point {i} has a non-finite coordinate")));
            }
            if !(weights[i].is_finite() && weights[i] > 0.0) {
                return Err(Error::arg(format!("point {i} has nonpositive weight")));
            }
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::arg(format!("points {i} and {j} coincide")));
                }
            }
        }
        Ok(PointCloud { points, weights })
    }

    /// Parses "x1,...,xk,mu" lines.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() < 2 {
                return Err(Error::Parse(format!("point line {} needs coordinates and a weight", line + 1)));
            }
            let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match vals {
                Ok(mut v) => {
                    weights.push(v.pop().expect("at least two fields"));
                    points.push(v);
                }
                Err(_) if line == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("point line {}: {e}", line + 1))),
            }
        }
        PointCloud::new(points, weights)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.points[i]
            .iter()
            .zip(&self.points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance_matrix(&self) -> DMatrix<f64> {
        let n = self.points.len();
        DMatrix::from_fn(n, n, |i, j| self.distance(i, j))
    }
}

/// `m_x = Σ_y (w_xy / d_x) δ_y`, `ν_x = d_x`, graph metric.
pub fn from_weighted_graph(g: &WeightedGraph) -> Result<Space> {
    let n = g.labels.len();
    if n == 0 {
        return Err(Error::arg("graph has no vertices"));
    }
    let w = g.weight_matrix();
    let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    if let Some(i) = deg.iter().position(|&d| d <= 0.0) {
        return Err(Error::arg(format!("vertex {} is isolated", g.labels[i])));
    }
    let kernel = DMatrix::from_fn(n, n, |i, j| w[(i, j)] / deg[i]);
    Space::new(
        g.labels.clone(),
        Metric::GraphShortestPath,
        kernel,
        DVector::from_vec(deg),
    )
}

/// Steady state of a Markov kernel, required to have full support and
/// satisfy detailed balance.
///
/// Each closed communicating class is solved separately and weighted by its
/// share of the points, so a reducible chain gets the canonical mixture.
pub fn from_markov_kernel(kernel: DMatrix<f64>, metric: Metric) -> Result<Space> {
    let labels = (0..kernel.nrows()).map(|i| i.to_string()).collect();
    from_markov_kernel_labeled(labels, kernel, metric)
}

pub fn from_markov_kernel_labeled(labels: Vec<String>, kernel: DMatrix<f64>, metric: Metric) -> Result<Space> {
    let n = kernel.nrows();
    if n == 0 || kernel.ncols() != n {
        return Err(Error::dim(format!(
            "kernel is {}x{}, expected a nonempty square matrix",
            kernel.nrows(),
            kernel.ncols()
        )));
    }
    if kernel.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::arg("kernel entries must be finite and nonnegative"));
    }
    for i in 0..n {
        let s = kernel.row(i).sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!("kernel row {i} sums to {s}")));
        }
    }
    let (classes, transient) = closed_classes(&kernel);
    if !transient.is_empty() {
        return Err(Error::NoInvariantMeasure);
    }
    let mut nu = DVector::zeros(n);
    for class in &classes {
        let pi = if n > crate::linalg::DENSE_LIMIT {
            class_stationary_power(&kernel, class)
        } else {
            class_stationary_lu(&kernel, class)
        }
        .ok_or(Error::NoInvariantMeasure)?;
        let weight = class.len() as f64 / n as f64;
        for (k, &i) in class.iter().enumerate() {
            nu[i] = weight * pi[k];
        }
    }
    if nu.iter().any(|&v| v <= 0.0) {
        return Err(Error::NoInvariantMeasure);
    }
    let residual = (kernel.transpose() * &nu - &nu).amax();
    if residual > 1e-12 {
        return Err(Error::Solver(format!("stationary residual {residual:e} exceeds 1e-12")));
    }
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((nu[i] * kernel[(i, j)] - nu[j] * kernel[(j, i)]).abs());
        }
    }
    if worst > crate::space::BALANCE_TOL {
        return Err(Error::NotReversible(worst));
    }
    Space::new(labels, metric, kernel, nu)
}

fn class_kernel(kernel: &DMatrix<f64>, class: &[usize]) -> DMatrix<f64> {
    let k = class.len();
    DMatrix::from_fn(k, k, |a, b| kernel[(class[a], class[b])])
}

/// Solves `(Pᵀ − I)π = 0` with the last equation replaced by `Σπ = 1`.
fn class_stationary_lu(kernel: &DMatrix<f64>, class: &[usize]) -> Option<DVector<f64>> {
    let k = class.len();
    let p = class_kernel(kernel, class);
    let mut a = p.transpose() - DMatrix::identity(k, k);
    a.row_mut(k - 1).fill(1.0);
    let mut rhs = DVector::zeros(k);
    rhs[k - 1] = 1.0;
    let lu = a.clone().lu();
    let pi = lu.solve(&rhs)?;
    let r = &rhs - &a * &pi;
    Some(&pi + lu.solve(&r)?)
}

/// Power iteration on the lazy chain `(P + I)/2`, which has the same steady
/// state and no periodicity.
fn class_stationary_power(kernel: &DMatrix<f64>, class: &[usize]) -> Option<DVector<f64>> {
    let k = class.len();
    let pt = class_kernel(kernel, class).transpose();
    let mut pi = DVector::from_element(k, 1.0 / k as f64);
    for _ in 0..1_000_000 {
        let next = (&pt * &pi + &pi) * 0.5;
        let next = &next / next.sum();
        let delta = (&next - &pi).amax();
        pi = next;
        if delta < 1e-15 {
            return Some(pi);
        }
    }
    log::warn!("power iteration did not converge on a class of {k} points");
    Some(pi)
}

/// ε-step walk: `m_x = μ ⌞ B(x, ε) / μ(B(x, ε))` with the open ball.
///
/// The returned measure is `ν_x = μ_x · μ(B(x, ε))`, which satisfies detailed
/// balance because ball membership is symmetric. It coincides with `μ` up to
/// scaling whenever all balls carry equal mass.
pub fn epsilon_step_from_point_cloud(pc: &PointCloud, eps: f64) -> Result<Space> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::arg(format!("eps must be positive, got {eps}")));
    }
    let n = pc.points.len();
    let d = pc.distance_matrix();
    let mu = &pc.weights;
    let mut kernel = DMatrix::zeros(n, n);
    let mut nu = DVector::zeros(n);
    for i in 0..n {
        let ball: f64 = (0..n).filter(|&j| d[(i, j)] < eps).map(|j| mu[j]).sum();
        for j in 0..n {
            if d[(i, j)] < eps {
                kernel[(i, j)] = mu[j] / ball;
            }
        }
        nu[i] = mu[i] * ball;
    }
    let labels = (0..n).map(|i| i.to_string()).collect();
    Space::new(labels, Metric::Explicit(d), kernel, nu)
}

/// Uniform convolution kernel `J = χ_{(−r,r)}/(2r)` on a grid of spacing `h`
/// over a union of closed intervals, with the jump mass that would leave the
/// domain kept as a self-loop.
pub fn grid_kernel_neumann(intervals: &[(f64, f64)], h: f64, radius: f64) -> Result<Space> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::arg(format!("grid spacing must be positive, got {h}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::arg(format!("radius must be positive, got {radius}")));
    }
    if intervals.is_empty() {
        return Err(Error::arg("at least one interval is required"));
    }
    let mut sorted = intervals.to_vec();
    for &(a, b) in &sorted {
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::arg(format!("invalid interval [{a}, {b}]")));
        }
    }
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    for w in sorted.windows(2) {
        if w[1].0 <= w[0].1 {
            return Err(Error::arg("intervals must be pairwise disjoint"));
        }
    }
    if radius <= h {
        log::warn!("radius {radius} does not exceed grid spacing {h}; the kernel is nearly diagonal");
    }

    let mut xs = Vec::new();
    for &(a, b) in intervals {
        let len = b - a;
        let count = if h >= len { 1 } else { (len / h + 1e-9).floor() as usize + 1 };
        xs.extend((0..count).map(|k| a + k as f64 * h));
    }
    let n = xs.len();
    let within = |i: usize, j: usize| (xs[i] - xs[j]).abs() < radius - 1e-9 * h;

    let max_count = (0..n)
        .map(|i| (0..n).filter(|&j| within(i, j)).count())
        .max()
        .unwrap_or(1);
    let mut c = h / (2.0 * radius);
    if c * max_count as f64 > 1.0 {
        c = 1.0 / max_count as f64;
    }

    let mut kernel = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if j != i && within(i, j) {
                kernel[(i, j)] = c;
                off += c;
            }
        }
        kernel[(i, i)] = 1.0 - off;
    }
    let metric = DMatrix::from_fn(n, n, |i, j| (xs[i] - xs[j]).abs());
    let labels = xs.iter().map(|x| format!("{}", (x * 1e9).round() / 1e9)).collect();
    let measure = DVector::from_element(n, 1.0 / n as f64);
    Space::new(labels, Metric::Explicit(metric), kernel, measure)
}
