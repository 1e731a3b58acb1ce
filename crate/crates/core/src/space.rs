//! Finite metric random walk spaces.
//!
//! A [`Space`] on `n` points carries a metric `d`, a row-stochastic kernel
//! whose row `x` is the jump law `m_x`, and a positive measure `ν`. The
//! analysis modules assume `ν` is invariant (`νᵀP = νᵀ`) and reversible
//! (`ν_x P_xy = ν_y P_yx`); [`validate_space`] reports every axiom that fails
//! together with its largest residual.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row sums must be 1 within this relative tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Invariance and detailed balance residuals, relative to `ν(X)`.
pub const BALANCE_TOL: f64 = 1e-10;
/// Triangle inequality slack.
pub const TRIANGLE_TOL: f64 = 1e-9;

/// How the metric of a space was specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Explicit,
    GraphShortestPath,
}

/// Metric specification accepted by [`Space::new`].
#[derive(Debug, Clone)]
pub enum Metric {
    Explicit(DMatrix<f64>),
    /// Unit-length shortest paths over the undirected support of the kernel.
    GraphShortestPath,
}

/// A finite metric random walk space. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    labels: Vec<String>,
    metric: DMatrix<f64>,
    metric_kind: MetricKind,
    /// Distance assigned to pairs with no connecting path (graph metrics only).
    sentinel: Option<f64>,
    kernel: DMatrix<f64>,
    measure: DVector<f64>,
}

impl Space {
    /// Builds a space after structural checks only. Axioms are checked by
    /// [`validate_space`] or [`Space::validated`].
    pub fn new(
        labels: Vec<String>,
        metric: Metric,
        kernel: DMatrix<f64>,
        measure: DVector<f64>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::dim("space must have at least one point"));
        }
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::dim(format!(
                "kernel is {}x{}, expected {n}x{n}",
                kernel.nrows(),
                kernel.ncols()
            )));
        }
        if measure.len() != n {
            return Err(Error::dim(format!(
                "measure has length {}, expected {n}",
                measure.len()
            )));
        }
        if kernel.iter().chain(measure.iter()).any(|v| !v.is_finite()) {
            return Err(Error::arg("kernel and measure entries must be finite"));
        }
        let (metric, metric_kind, sentinel) = match metric {
            Metric::Explicit(d) => {
                if d.nrows() != n || d.ncols() != n {
                    return Err(Error::dim(format!(
                        "metric is {}x{}, expected {n}x{n}",
                        d.nrows(),
                        d.ncols()
                    )));
                }
                if d.iter().any(|v| !v.is_finite()) {
                    return Err(Error::arg("metric entries must be finite"));
                }
                (d, MetricKind::Explicit, None)
            }
            Metric::GraphShortestPath => {
                let (d, sentinel) = graph_shortest_path(&kernel);
                (d, MetricKind::GraphShortestPath, sentinel)
            }
        };
        Ok(Space {
            labels,
            metric,
            metric_kind,
            sentinel,
            kernel,
            measure,
        })
    }

    /// Like [`Space::new`] with labels `0..n`.
    pub fn unlabeled(metric: Metric, kernel: DMatrix<f64>, measure: DVector<f64>) -> Result<Self> {
        let labels = (0..kernel.nrows()).map(|i| i.to_string()).collect();
        Space::new(labels, metric, kernel, measure)
    }

    /// Returns the space unchanged if every axiom holds.
    pub fn validated(self) -> Result<Self> {
        let report = validate_space(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::Validation(Box::new(report)))
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn metric_kind(&self) -> MetricKind {
        self.metric_kind
    }

    /// The distance used for unreachable pairs of a graph metric, if any.
    pub fn sentinel(&self) -> Option<f64> {
        self.sentinel
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn measure(&self) -> &DVector<f64> {
        &self.measure
    }

    pub fn total_mass(&self) -> f64 {
        self.measure.sum()
    }

    /// True when `ν(X) = 1` within 1e-12.
    pub fn is_normalized(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= 1e-12
    }

    /// `ν / ν(X)`.
    pub fn probability(&self) -> DVector<f64> {
        &self.measure / self.total_mass()
    }

    /// Same space with `ν` rescaled to a probability measure.
    pub fn normalized(&self) -> Space {
        Space {
            measure: self.probability(),
            ..self.clone()
        }
    }

    /// Index of a point by label.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// The symmetric interaction matrix `W_xy = ν_x m_x({y})` (with `ν`
    /// normalized).
    pub fn interaction_matrix(&self) -> DMatrix<f64> {
        let nu = self.probability();
        let n = self.len();
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                w[(i, j)] = nu[i] * self.kernel[(i, j)];
            }
        }
        w
    }

    /// Support of `m_x`.
    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&y| self.kernel[(x, y)] > 0.0)
    }

    pub(crate) fn check_field(&self, f: &ScalarField) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::dim(format!(
                "field has length {}, space has {} points",
                f.len(),
                self.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_subset(&self, s: &Subset) -> Result<()> {
        if s.len() != self.len() {
            return Err(Error::dim(format!(
                "subset has length {}, space has {} points",
                s.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Rebuilds the space with a new kernel, keeping metric and measure.
    pub(crate) fn with_kernel(&self, kernel: DMatrix<f64>) -> Space {
        Space {
            kernel,
            ..self.clone()
        }
    }
}

/// A real value per point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField(DVector<f64>);

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("field entries must be finite"));
        }
        Ok(ScalarField(DVector::from_vec(values)))
    }

    pub fn constant(n: usize, c: f64) -> Self {
        ScalarField(DVector::from_element(n, c))
    }

    pub fn indicator(s: &Subset) -> Self {
        ScalarField(DVector::from_iterator(
            s.len(),
            s.mask().iter().map(|&b| if b { 1.0 } else { 0.0 }),
        ))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl From<DVector<f64>> for ScalarField {
    fn from(v: DVector<f64>) -> Self {
        ScalarField(v)
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A boolean mask over the points of a space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subset(Vec<bool>);

impl Subset {
    pub fn from_mask(mask: Vec<bool>) -> Self {
        Subset(mask)
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(Error::dim(format!("index {i} out of range for {n} points")));
            }
            mask[i] = true;
        }
        Ok(Subset(mask))
    }

    pub fn empty(n: usize) -> Self {
        Subset(vec![false; n])
    }

    pub fn full(n: usize) -> Self {
        Subset(vec![true; n])
    }

    /// Subset encoded by the low `n` bits of `bits`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Subset((0..n).map(|i| bits >> i & 1 == 1).collect())
    }

    pub fn mask(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn complement(&self) -> Subset {
        Subset(self.0.iter().map(|b| !b).collect())
    }

    /// `ν(S)` for a measure vector.
    pub fn mass(&self, measure: &DVector<f64>) -> f64 {
        self.0
            .iter()
            .zip(measure.iter())
            .filter(|(b, _)| **b)
            .map(|(_, m)| m)
            .sum()
    }
}

/// Axioms checked by [`validate_space`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    KernelNonnegative,
    RowStochastic,
    MetricZeroDiagonal,
    MetricSymmetric,
    MetricPositive,
    TriangleInequality,
    MeasurePositive,
    Invariance,
    Reversibility,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::KernelNonnegative => "kernel_nonnegative",
            Axiom::RowStochastic => "row_stochastic",
            Axiom::MetricZeroDiagonal => "metric_zero_diagonal",
            Axiom::MetricSymmetric => "metric_symmetric",
            Axiom::MetricPositive => "metric_positive",
            Axiom::TriangleInequality => "triangle_inequality",
            Axiom::MeasurePositive => "measure_positive",
            Axiom::Invariance => "invariance",
            Axiom::Reversibility => "reversibility",
        };
        f.write_str(s)
    }
}

/// Largest residual of one axiom and where it occurs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub axiom: Axiom,
    pub max_residual: f64,
    pub tolerance: f64,
    /// Point indices of the worst offender (one, two or three points).
    pub location: Vec<usize>,
}

impl Residual {
    pub fn violated(&self) -> bool {
        self.max_residual > self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// One entry per axiom, violated or not.
    pub residuals: Vec<Residual>,
    /// The subset of `residuals` above tolerance.
    pub violations: Vec<Residual>,
    /// `|(νᵀP)_j − ν_j|` for every point.
    pub invariance_by_point: Vec<f64>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn residual(&self, axiom: Axiom) -> &Residual {
        self.residuals
            .iter()
            .find(|r| r.axiom == axiom)
            .expect("every axiom has a residual entry")
    }

    pub fn is_violated(&self, axiom: Axiom) -> bool {
        self.violations.iter().any(|r| r.axiom == axiom)
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(|r| format!("{} (residual {:e} at {:?})", r.axiom, r.max_residual, r.location))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Default)]
struct Worst {
    value: f64,
    at: Vec<usize>,
}

impl Worst {
    fn offer(&mut self, value: f64, at: &[usize]) {
        if value > self.value {
            self.value = value;
            self.at = at.to_vec();
        }
    }
}

/// Checks every axiom of a finite metric random walk space.
pub fn validate_space(space: &Space) -> ValidationReport {
    let n = space.len();
    let p = &space.kernel;
    let d = &space.metric;
    let nu = &space.measure;
    let mass = nu.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let dscale = d.iter().fold(1.0_f64, |m, v| m.max(v.abs()));

    let mut neg = Worst::default();
    let mut stoch = Worst::default();
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            neg.offer(-p[(i, j)], &[i, j]);
            row += p[(i, j)];
        }
        stoch.offer((row - 1.0).abs(), &[i]);
    }

    let mut diag = Worst::default();
    let mut sym = Worst::default();
    let mut pos = Worst::default();
    for i in 0..n {
        diag.offer(d[(i, i)].abs(), &[i]);
        for j in 0..n {
            if i != j {
                sym.offer((d[(i, j)] - d[(j, i)]).abs(), &[i, j]);
                // Residual is how far d(x,y) is from being strictly positive.
                if d[(i, j)] <= 0.0 {
                    pos.offer(f64::MIN_POSITIVE.max(-d[(i, j)]), &[i, j]);
                }
            }
        }
    }

    let mut tri = Worst::default();
    let is_sentinel = |v: f64| space.sentinel.is_some_and(|s| v == s);
    for i in 0..n {
        for k in 0..n {
            let dik = d[(i, k)];
            if is_sentinel(dik) {
                continue;
            }
            for j in 0..n {
                let (dij, djk) = (d[(i, j)], d[(j, k)]);
                if is_sentinel(dij) || is_sentinel(djk) {
                    continue;
                }
                tri.offer(dik - dij - djk, &[i, j, k]);
            }
        }
    }

    let mut mpos = Worst::default();
    for i in 0..n {
        if nu[i] <= 0.0 {
            mpos.offer(f64::MIN_POSITIVE.max(-nu[i]), &[i]);
        }
    }

    let mut inv = Worst::default();
    let mut invariance_by_point = vec![0.0; n];
    for j in 0..n {
        let pushed: f64 = (0..n).map(|i| nu[i] * p[(i, j)]).sum();
        let r = (pushed - nu[j]).abs();
        invariance_by_point[j] = r;
        inv.offer(r, &[j]);
    }

    let mut rev = Worst::default();
    for i in 0..n {
        for j in (i + 1)..n {
            rev.offer((nu[i] * p[(i, j)] - nu[j] * p[(j, i)]).abs(), &[i, j]);
        }
    }

    let entry = |axiom, w: Worst, tolerance| Residual {
        axiom,
        max_residual: w.value,
        tolerance,
        location: w.at,
    };
    let residuals = vec![
        entry(Axiom::KernelNonnegative, neg, 0.0),
        entry(Axiom::RowStochastic, stoch, STOCHASTIC_TOL),
        entry(Axiom::MetricZeroDiagonal, diag, 1e-12 * dscale),
        entry(Axiom::MetricSymmetric, sym, 1e-12 * dscale),
        entry(Axiom::MetricPositive, pos, 0.0),
        entry(Axiom::TriangleInequality, tri, TRIANGLE_TOL),
        entry(Axiom::MeasurePositive, mpos, 0.0),
        entry(Axiom::Invariance, inv, BALANCE_TOL * mass),
        entry(Axiom::Reversibility, rev, BALANCE_TOL * mass),
    ];
    let violations = residuals.iter().filter(|r| r.violated()).cloned().collect();
    ValidationReport {
        residuals,
        violations,
        invariance_by_point,
    }
}

/// All-pairs unit-length shortest paths over `{(i,j) : P_ij > 0 or P_ji > 0}`.
///
/// Unreachable pairs get the sentinel `n · max(1, largest finite distance)`.
pub fn graph_shortest_path(kernel: &DMatrix<f64>) -> (DMatrix<f64>, Option<f64>) {
    let n = kernel.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && (kernel[(i, j)] > 0.0 || kernel[(j, i)] > 0.0))
                .collect()
        })
        .collect();
    let mut d = DMatrix::from_element(n, n, f64::INFINITY);
    let mut max_finite = 0.0_f64;
    for s in 0..n {
        d[(s, s)] = 0.0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if d[(s, v)].is_infinite() {
                    d[(s, v)] = d[(s, u)] + 1.0;
                    max_finite = max_finite.max(d[(s, v)]);
                    queue.push_back(v);
                }
            }
        }
    }
    if d.iter().all(|v| v.is_finite()) {
        return (d, None);
    }
    let sentinel = n as f64 * max_finite.max(1.0);
    d.iter_mut().filter(|v| v.is_infinite()).for_each(|v| *v = sentinel);
    (d, Some(sentinel))
}

/// Replaces the kernel by its `steps`-th matrix power (the `steps`-step walk).
pub fn convolve_kernel(space: &Space, steps: u32) -> Result<Space> {
    if steps == 0 {
        return Err(Error::arg("convolution power must be at least 1"));
    }
    Ok(space.with_kernel(matrix_power(space.kernel(), steps)))
}

pub(crate) fn matrix_power(m: &DMatrix<f64>, mut e: u32) -> DMatrix<f64> {
    let mut result = DMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Pushes a mass distribution forward through `steps` jumps: `μ ∗ m^{*steps}`.
pub fn propagate_measure(space: &Space, mu: &ScalarField, steps: u32) -> Result<ScalarField> {
    space.check_field(mu)?;
    if mu.values().iter().any(|&v| v < 0.0) {
        return Err(Error::arg("measure entries must be nonnegative"));
    }
    let pt = space.kernel().transpose();
    let mut cur = mu.values().clone();
    for _ in 0..steps {
        cur = &pt * &cur;
    }
    Ok(ScalarField(cur))
}

/// The walk restricted to `omega`, with jump mass leaving `omega` returned to
/// the source point as a self-loop.
pub fn restrict_space(space: &Space, omega: &Subset) -> Result<Space> {
    space.check_subset(omega)?;
    let idx = omega.indices();
    if idx.is_empty() {
        return Err(Error::arg("restriction set must be nonempty"));
    }
    let k = idx.len();
    let p = space.kernel();
    let mut kernel = DMatrix::zeros(k, k);
    let mut metric = DMatrix::zeros(k, k);
    for (a, &x) in idx.iter().enumerate() {
        let mut leaving = 0.0;
        for z in 0..space.len() {
            if !omega.contains(z) {
                leaving += p[(x, z)];
            }
        }
        for (b, &y) in idx.iter().enumerate() {
            kernel[(a, b)] = p[(x, y)];
            metric[(a, b)] = space.metric()[(x, y)];
        }
        kernel[(a, a)] += leaving;
    }
    let measure = DVector::from_iterator(k, idx.iter().map(|&x| space.measure()[x]));
    let labels = idx.iter().map(|&x| space.labels()[x].clone()).collect();
    let mut out = Space::new(labels, Metric::Explicit(metric), kernel, measure)?;
    out.sentinel = space.sentinel;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn p3_is_valid() {
        let report = validate_space(&fixtures::p3());
        assert!(report.is_valid(), "{}", report.summary());
    }

    #[test]
    fn uniform_measure_on_p3_breaks_invariance() {
        let p3 = fixtures::p3();
        let bad = Space::new(
            p3.labels().to_vec(),
            Metric::GraphShortestPath,
            p3.kernel().clone(),
            DVector::from_element(3, 1.0 / 3.0),
        )
        .unwrap();
        let report = validate_space(&bad);
        assert!(report.is_violated(Axiom::Invariance));
        // (νᵀP)_a = ν_b / 2 = 1/6 against ν_a = 1/3.
        assert!((report.invariance_by_point[0] - 1.0 / 6.0).abs() < 1e-15);
        let inv = report.residual(Axiom::Invariance);
        assert!((inv.max_residual - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(inv.location, vec![1]);
        assert!(report.is_violated(Axiom::Reversibility));
    }

    #[test]
    fn one_point_space_is_valid() {
        let s = Space::unlabeled(
            Metric::Explicit(DMatrix::zeros(1, 1)),
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        assert!(validate_space(&s).is_valid());
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let err = Space::unlabeled(
            Metric::GraphShortestPath,
            DMatrix::from_element(2, 2, 0.5),
            DVector::from_element(3, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn p3_two_step_kernel() {
        let k2 = convolve_kernel(&fixtures::p3(), 2).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[0.5, 0.0, 0.5, 0.0, 1.0, 0.0, 0.5, 0.0, 0.5]);
        assert!((k2.kernel() - expect).amax() < 1e-15);
        assert!(validate_space(&k2).is_valid());
    }

    #[test]
    fn zero_power_rejected() {
        assert!(convolve_kernel(&fixtures::p3(), 0).is_err());
        let one = convolve_kernel(&fixtures::k3(), 1).unwrap();
        assert_eq!(one.kernel(), fixtures::k3().kernel());
    }

    #[test]
    fn two_block_powers_stay_block_diagonal() {
        let tb = fixtures::two_block(0.1);
        let blocks = fixtures::two_block_halves(&tb);
        for steps in [1, 3, 8] {
            let k = convolve_kernel(&tb, steps).unwrap();
            for i in blocks.0.indices() {
                for j in blocks.1.indices() {
                    assert_eq!(k.kernel()[(i, j)], 0.0);
                    assert_eq!(k.kernel()[(j, i)], 0.0);
                }
            }
        }
    }

    #[test]
    fn propagate_dirac_and_invariant() {
        let p3 = fixtures::p3();
        let delta = ScalarField::new(vec![1.0, 0.0, 0.0]).unwrap();
        let out = propagate_measure(&p3, &delta, 1).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 1.0, 0.0]);
        let nu = ScalarField::from(p3.measure().clone());
        for steps in [0, 1, 7] {
            let out = propagate_measure(&p3, &nu, steps).unwrap();
            assert!((out.values() - p3.measure()).amax() < 1e-15);
        }
        let neg = ScalarField::new(vec![-0.1, 0.6, 0.5]).unwrap();
        assert!(propagate_measure(&p3, &neg, 1).is_err());
    }

    #[test]
    fn propagation_never_crosses_blocks() {
        let tb = fixtures::two_block(0.1);
        let (b1, b2) = fixtures::two_block_halves(&tb);
        let mu = ScalarField::indicator(&b1);
        let out = propagate_measure(&tb, &mu, 50).unwrap();
        let leaked: f64 = b2.indices().iter().map(|&i| out[i]).sum();
        assert_eq!(leaked, 0.0);
    }

    #[test]
    fn restrict_p3_to_ab() {
        let p3 = fixtures::p3();
        let omega = Subset::from_indices(3, &[0, 1]).unwrap();
        let r = restrict_space(&p3, &omega).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.5]);
        assert_eq!(r.kernel(), &expect);
        assert_eq!(r.measure().as_slice(), &[0.25, 0.5]);
        assert!(validate_space(&r).is_valid());
    }

    #[test]
    fn restrict_to_everything_is_identity() {
        let k3 = fixtures::k3();
        let r = restrict_space(&k3, &Subset::full(3)).unwrap();
        assert_eq!(r.kernel(), k3.kernel());
        assert_eq!(r.measure(), k3.measure());
        assert!(restrict_space(&k3, &Subset::empty(3)).is_err());
    }

    #[test]
    fn disconnected_graph_metric_uses_sentinel() {
        let k = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let (d, s) = graph_shortest_path(&k);
        assert_eq!(s, Some(3.0));
        assert_eq!(d[(0, 2)], 3.0);
        assert_eq!(d[(0, 1)], 1.0);
    }
}
