//! Named spaces and random generators shared by tests, benchmarks and the CLI.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::builders::{from_weighted_graph, grid_kernel_neumann, WeightedGraph};
use crate::space::{Metric, ScalarField, Space, Subset};

/// Path a–b–c with unit weights, ν = (¼, ½, ¼).
pub fn p3() -> Space {
    let g = WeightedGraph::from_labeled_edges(&[("a", "b", 1.0), ("b", "c", 1.0)]).expect("static graph");
    from_weighted_graph(&g).expect("valid graph").normalized()
}

/// Triangle with unit weights, uniform ν.
pub fn k3() -> Space {
    let g = WeightedGraph::from_labeled_edges(&[("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)])
        .expect("static graph");
    from_weighted_graph(&g).expect("valid graph").normalized()
}

/// Truncated weighted chain `x_3 – x_4 – … – x_{3N+3}` whose segments carry
/// weights `1/n³, 1/n², 1/n³`. The measure `ν_x = d_x` is left unnormalized.
pub fn linear_chain(segments: usize) -> Space {
    assert!(segments >= 1, "chain needs at least one segment");
    let labels: Vec<String> = (3..=3 * segments + 3).map(|k| format!("x{k}")).collect();
    let mut edges = Vec::with_capacity(3 * segments);
    for n in 1..=segments {
        let base = 3 * (n - 1);
        let nf = n as f64;
        edges.push((base, base + 1, 1.0 / (nf * nf * nf)));
        edges.push((base + 1, base + 2, 1.0 / (nf * nf)));
        edges.push((base + 2, base + 3, 1.0 / (nf * nf * nf)));
    }
    from_weighted_graph(&WeightedGraph::new(labels, edges).expect("static graph")).expect("valid graph")
}

/// The field equal to `n` on `x_{3n+1}, x_{3n+2}` and 0 elsewhere.
pub fn linear_chain_bump(space: &Space, n: usize) -> ScalarField {
    let mut v = vec![0.0; space.len()];
    // Label x_k sits at index k − 3.
    v[3 * n + 1 - 3] = n as f64;
    v[3 * n + 2 - 3] = n as f64;
    ScalarField::new(v).expect("finite")
}

/// Neumann convolution walk on `[−1, 0] ∪ [2, 3]` with radius 1.
pub fn two_block(h: f64) -> Space {
    grid_kernel_neumann(&[(-1.0, 0.0), (2.0, 3.0)], h, 1.0).expect("static grid")
}

/// The two intervals of a [`two_block`] space, as subsets.
pub fn two_block_halves(space: &Space) -> (Subset, Subset) {
    let first: Vec<bool> = (0..space.len())
        .map(|i| space.metric()[(0, i)] <= 1.0 + 1e-9)
        .collect();
    let s = Subset::from_mask(first);
    let c = s.complement();
    (s, c)
}

/// Simple random walk on the `n`-cycle.
pub fn cycle(n: usize) -> Space {
    lazy_cycle(n, 0.0)
}

/// Walk on the `n`-cycle holding with probability `alpha`.
pub fn lazy_cycle(n: usize, alpha: f64) -> Space {
    assert!(n >= 3, "cycle needs at least three points");
    assert!((0.0..=1.0).contains(&alpha), "holding probability must lie in [0, 1]");
    let step = (1.0 - alpha) / 2.0;
    let mut kernel = DMatrix::zeros(n, n);
    for i in 0..n {
        kernel[(i, i)] += alpha;
        kernel[(i, (i + 1) % n)] += step;
        kernel[(i, (i + n - 1) % n)] += step;
    }
    let labels = (0..n).map(|i| format!("v{i}")).collect();
    Space::new(
        labels,
        Metric::GraphShortestPath,
        kernel,
        DVector::from_element(n, 1.0 / n as f64),
    )
    .expect("static cycle")
}

/// Block-diagonal union. Points in different parts are at distance
/// `max(1, largest diameter)`, which keeps the triangle inequality.
pub fn disjoint_union(parts: &[Space]) -> Space {
    assert!(!parts.is_empty());
    let n: usize = parts.iter().map(Space::len).sum();
    let gap = parts
        .iter()
        .map(|s| s.metric().amax())
        .fold(1.0_f64, f64::max);
    let mut kernel = DMatrix::zeros(n, n);
    let mut metric = DMatrix::from_element(n, n, gap);
    let mut measure = DVector::zeros(n);
    let mut labels = Vec::with_capacity(n);
    let mut off = 0;
    for (k, s) in parts.iter().enumerate() {
        let m = s.len();
        kernel.view_mut((off, off), (m, m)).copy_from(s.kernel());
        metric.view_mut((off, off), (m, m)).copy_from(s.metric());
        measure.rows_mut(off, m).copy_from(s.measure());
        labels.extend(s.labels().iter().map(|l| format!("{k}:{l}")));
        off += m;
    }
    Space::new(labels, Metric::Explicit(metric), kernel, measure).expect("union of valid parts")
}

/// Shape of a random reversible space.
#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    pub n: usize,
    /// Probability that an off-diagonal pair inside a block carries weight.
    pub density: f64,
    /// Probability that a vertex carries a loop.
    pub loop_prob: f64,
    /// Number of groups that never exchange weight.
    pub blocks: usize,
}

impl RandomSpec {
    pub fn connected(n: usize) -> Self {
        RandomSpec {
            n,
            density: 0.5,
            loop_prob: 0.2,
            blocks: 1,
        }
    }
}

/// Random symmetric weights `W`, `P = W / rowsum`, `ν ∝ rowsum`, graph
/// metric. Every vertex gets positive degree; blocks and sparse draws can
/// leave the result disconnected.
pub fn random_reversible<R: Rng + ?Sized>(rng: &mut R, spec: RandomSpec) -> Space {
    let n = spec.n.max(1);
    let blocks = spec.blocks.clamp(1, n);
    let group: Vec<usize> = (0..n).map(|i| i * blocks / n).collect();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        if rng.random_bool(spec.loop_prob.clamp(0.0, 1.0)) {
            w[(i, i)] = rng.random_range(0.1..1.0);
        }
        for j in (i + 1)..n {
            if group[i] == group[j] && rng.random_bool(spec.density.clamp(0.0, 1.0)) {
                let c = rng.random_range(0.1..2.0);
                w[(i, j)] = c;
                w[(j, i)] = c;
            }
        }
    }
    for i in 0..n {
        if w.row(i).sum() == 0.0 {
            let mates: Vec<usize> = (0..n).filter(|&j| j != i && group[j] == group[i]).collect();
            if mates.is_empty() {
                w[(i, i)] = 1.0;
            } else {
                let j = mates[rng.random_range(0..mates.len())];
                w[(i, j)] = 1.0;
                w[(j, i)] = 1.0;
            }
        }
    }
    let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let total: f64 = deg.iter().sum();
    let kernel = DMatrix::from_fn(n, n, |i, j| w[(i, j)] / deg[i]);
    let measure = DVector::from_iterator(n, deg.iter().map(|d| d / total));
    let labels = (0..n).map(|i| i.to_string()).collect();
    Space::new(labels, Metric::GraphShortestPath, kernel, measure).expect("generated space")
}

/// Field with entries uniform in `(−a, a)` for a random amplitude `a`.
pub fn random_field<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ScalarField {
    let amp = rng.random_range(0.1..10.0);
    ScalarField::from(DVector::from_fn(n, |_, _| amp * (2.0 * rng.random::<f64>() - 1.0)))
}

/// Random probability vector on `n` points (counting reference): either a
/// point mass or normalized exponentials.
pub fn random_probability<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    if rng.random_bool(0.25) {
        let mut v = DVector::zeros(n);
        v[rng.random_range(0..n)] = 1.0;
        return v;
    }
    let v = DVector::from_fn(n, |_, _| {
        let e: f64 = -rng.random::<f64>().max(1e-300).ln();
        if rng.random_bool(0.2) {
            0.0
        } else {
            e
        }
    });
    let s = v.sum();
    if s == 0.0 {
        let mut v = DVector::zeros(n);
        v[0] = 1.0;
        return v;
    }
    v / s
}

/// Random density `f = dμ/dν` with `∫ f dν = 1` for the normalized ν: point
/// masses, sparse mixtures, or smooth exponentials.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, space: &Space) -> ScalarField {
    let nu = space.probability();
    let mu = random_probability(rng, space.len());
    ScalarField::from(mu.component_div(&nu))
}
