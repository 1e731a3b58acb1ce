//! Carré du champ, Γ₂, Bakry-Émery best constants and Ollivier-Ricci
//! curvature, with numerical checks of the semigroup estimates they imply.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixtures::{random_field, random_probability};
use crate::heat::{laplacian_vec, HeatSemigroup};
use crate::linalg::sorted_eigen;
use crate::space::{matrix_power, ScalarField, Space};
use crate::transport::transport_plan;

/// Largest space accepted by the all-pairs Ollivier policy.
pub const ALL_PAIRS_LIMIT: usize = 300;
/// Eigenvalues of `B_x` above this span its range.
pub const RANGE_TOL: f64 = 1e-12;
/// Negative eigenvalues of `A_x` on `ker B_x` below this mark infeasibility.
pub const KERNEL_PSD_TOL: f64 = 1e-10;

/// Dimension parameter `n ∈ (1, ∞]` of BE(K, n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dimension {
    Finite(f64),
    Infinite,
}

impl Dimension {
    pub fn finite(n: f64) -> Result<Self> {
        if !(n.is_finite() && n > 1.0) {
            return Err(Error::arg(format!("dimension must exceed 1, got {n}")));
        }
        Ok(Dimension::Finite(n))
    }

    fn inverse(self) -> f64 {
        match self {
            Dimension::Finite(n) => 1.0 / n,
            Dimension::Infinite => 0.0,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dimension::Finite(n) => write!(f, "{n}"),
            Dimension::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Dimension::Infinite),
            t => {
                let n: f64 = t.parse().map_err(|_| Error::arg(format!("invalid dimension {t:?}")))?;
                Dimension::finite(n)
            }
        }
    }
}

/// `Γ(f, g)(x) = ½ Σ_y P_xy (f(y) − f(x))(g(y) − g(x))`.
pub fn gamma(space: &Space, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    space.check_field(f)?;
    space.check_field(g)?;
    Ok(ScalarField::from(gamma_vec(space.kernel(), f.values(), g.values())))
}

fn gamma_vec(p: &DMatrix<f64>, f: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
    let n = f.len();
    DVector::from_fn(n, |x, _| {
        let mut s = 0.0;
        for y in 0..n {
            s += p[(x, y)] * (f[y] - f[x]) * (g[y] - g[x]);
        }
        0.5 * s
    })
}

/// `Γ₂(f) = ½ ΔΓ(f) − Γ(f, Δf)`.
pub fn gamma2(space: &Space, f: &ScalarField) -> Result<ScalarField> {
    space.check_field(f)?;
    let p = space.kernel();
    let gf = gamma_vec(p, f.values(), f.values());
    let lf = laplacian_vec(p, f.values());
    let out = laplacian_vec(p, &gf) * 0.5 - gamma_vec(p, f.values(), &lf);
    Ok(ScalarField::from(out))
}

/// Quadratic forms of Γ, Γ₂ and Δ at one point, on a set of coordinates
/// that contains every point within two jumps.
#[derive(Debug, Clone)]
pub struct PointQuadraticForms {
    pub point: usize,
    /// Global indices of the local coordinates, ascending.
    pub indices: Vec<usize>,
    /// `fᵀ B f = Γ(f)(x)`.
    pub b: DMatrix<f64>,
    /// `fᵀ M2 f = Γ₂(f)(x)`.
    pub m2: DMatrix<f64>,
    /// `l · f = Δf(x)`.
    pub l: DVector<f64>,
}

impl PointQuadraticForms {
    /// Restricts a global field to the local coordinates.
    pub fn localize(&self, f: &ScalarField) -> DVector<f64> {
        DVector::from_iterator(self.indices.len(), self.indices.iter().map(|&i| f[i]))
    }
}

/// Forms at `x` on all `n` coordinates.
pub fn point_forms(space: &Space, x: usize) -> PointQuadraticForms {
    forms_on(space, x, (0..space.len()).collect())
}

/// Forms at `x` on the two-step neighbourhood of `x` only.
pub fn local_point_forms(space: &Space, x: usize) -> PointQuadraticForms {
    let n = space.len();
    let mut mark = vec![false; n];
    mark[x] = true;
    for y in space.neighbors(x) {
        mark[y] = true;
        for z in space.neighbors(y) {
            mark[z] = true;
        }
    }
    forms_on(space, x, (0..n).filter(|&i| mark[i]).collect())
}

fn forms_on(space: &Space, x: usize, indices: Vec<usize>) -> PointQuadraticForms {
    let n = space.len();
    let k = indices.len();
    let mut local = vec![usize::MAX; n];
    for (a, &i) in indices.iter().enumerate() {
        local[i] = a;
    }
    let p = space.kernel();

    let add_b = |m: &mut DMatrix<f64>, j: usize, weight: f64| {
        let lj = local[j];
        for y in space.neighbors(j) {
            if y == j {
                continue;
            }
            let ly = local[y];
            let c = 0.5 * weight * p[(j, y)];
            m[(ly, ly)] += c;
            m[(lj, lj)] += c;
            m[(ly, lj)] -= c;
            m[(lj, ly)] -= c;
        }
    };

    let mut b = DMatrix::zeros(k, k);
    add_b(&mut b, x, 1.0);

    // Rows of Δ for x and its neighbours; B_x vanishes outside them.
    let mut lap = DMatrix::zeros(k, k);
    let mut rows = vec![x];
    rows.extend(space.neighbors(x).filter(|&y| y != x));
    for &j in &rows {
        let lj = local[j];
        for y in space.neighbors(j) {
            lap[(lj, local[y])] += p[(j, y)];
        }
        lap[(lj, lj)] -= 1.0;
    }

    let mut m2 = DMatrix::zeros(k, k);
    for y in space.neighbors(x) {
        if y != x {
            add_b(&mut m2, y, 0.5 * p[(x, y)]);
        }
    }
    let stay: f64 = space.neighbors(x).filter(|&y| y != x).map(|y| p[(x, y)]).sum();
    m2 -= &b * (0.5 * stay);
    let bl = &b * &lap;
    m2 -= (&bl + bl.transpose()) * 0.5;

    let l = lap.row(local[x]).transpose();
    PointQuadraticForms {
        point: x,
        indices,
        b,
        m2,
        l,
    }
}

/// Largest `K` with `A − K·B ⪰ 0`, for symmetric `A` and PSD `B`.
///
/// Writing `f = R a + Z b` with `R` spanning `range B` and `Z` its kernel,
/// `b` is eliminated through the Schur complement of `A_ZZ`. Returns `+∞`
/// when `B = 0` and `−∞` when no `K` works.
pub fn best_pencil_constant(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let (bvals, bvecs) = sorted_eigen(b);
    let k = b.nrows();
    let range: Vec<usize> = (0..k).filter(|&i| bvals[i] > RANGE_TOL).collect();
    let kernel: Vec<usize> = (0..k).filter(|&i| bvals[i] <= RANGE_TOL).collect();
    if range.is_empty() {
        return if kernel.is_empty() || sorted_eigen(a).0[0] >= -KERNEL_PSD_TOL {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
    }
    let r = DMatrix::from_fn(k, range.len(), |i, c| bvecs[(i, range[c])]);
    let z = DMatrix::from_fn(k, kernel.len(), |i, c| bvecs[(i, kernel[c])]);
    let a_rr = r.transpose() * a * &r;
    let a_rz = r.transpose() * a * &z;
    let a_zz = z.transpose() * a * &z;

    let mut schur = a_rr;
    if !kernel.is_empty() {
        let (zvals, zvecs) = sorted_eigen(&a_zz);
        if zvals[0] < -KERNEL_PSD_TOL {
            return f64::NEG_INFINITY;
        }
        let mut pinv = DMatrix::zeros(kernel.len(), kernel.len());
        for c in 0..kernel.len() {
            let w = zvecs.column(c);
            if zvals[c] > KERNEL_PSD_TOL {
                pinv += (w * w.transpose()) / zvals[c];
            } else if (&a_rz * w).amax() > 1e-9 {
                // A null direction of A_ZZ coupled to the range makes the
                // form unbounded below for every K.
                return f64::NEG_INFINITY;
            }
        }
        schur -= &a_rz * pinv * a_rz.transpose();
    }
    let scale = DVector::from_iterator(range.len(), range.iter().map(|&i| 1.0 / bvals[i].sqrt()));
    let reduced = DMatrix::from_fn(range.len(), range.len(), |i, j| scale[i] * schur[(i, j)] * scale[j]);
    sorted_eigen(&reduced).0[0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct BEResult {
    pub dimension: Dimension,
    pub k_best_global: f64,
    pub k_best_per_point: Vec<f64>,
    pub feasible: bool,
}

/// Best constant `K` in `Γ₂(f) ≥ (1/n)(Δf)² + K Γ(f)` at every point.
pub fn be_best_constant(space: &Space, dimension: Dimension) -> Result<BEResult> {
    if let Dimension::Finite(n) = dimension {
        Dimension::finite(n)?;
    }
    let inv = dimension.inverse();
    let per_point: Vec<f64> = (0..space.len())
        .into_par_iter()
        .map(|x| {
            let forms = local_point_forms(space, x);
            let a = &forms.m2 - &forms.l * forms.l.transpose() * inv;
            best_pencil_constant(&a, &forms.b)
        })
        .collect();
    let k_best_global = per_point.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BEResult {
        dimension,
        feasible: per_point.iter().all(|&k| k > f64::NEG_INFINITY),
        k_best_global,
        k_best_per_point: per_point,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairPolicy {
    AllPairs,
    SupportEdges,
}

impl FromStr for PairPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" | "all_pairs" => Ok(PairPolicy::AllPairs),
            "edges" | "support_edges" => Ok(PairPolicy::SupportEdges),
            other => Err(Error::arg(format!("unknown pair policy {other:?}"))),
        }
    }
}

impl fmt::Display for PairPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairPolicy::AllPairs => "all_pairs",
            PairPolicy::SupportEdges => "support_edges",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OllivierResult {
    /// `(x, y, κ(x, y))` with `x < y`, in lexicographic order.
    pub kappa_pairs: Vec<(usize, usize, f64)>,
    /// Infimum over the pairs; `+∞` when there are none.
    pub kappa_global: f64,
    pub pair_policy: PairPolicy,
}

/// `κ(x, y) = 1 − W₁(m_x, m_y) / d(x, y)`.
pub fn ollivier_kappa(space: &Space, x: usize, y: usize) -> Result<f64> {
    let n = space.len();
    if x >= n || y >= n {
        return Err(Error::dim(format!("point index out of range for {n} points")));
    }
    if x == y {
        return Err(Error::arg("curvature needs two distinct points"));
    }
    let mx = space.kernel().row(x).transpose();
    let my = space.kernel().row(y).transpose();
    let plan = transport_plan(space.metric(), &mx, &my, 1)?;
    Ok(1.0 - plan.cost / space.metric()[(x, y)])
}

pub fn ollivier_global(space: &Space, policy: PairPolicy) -> Result<OllivierResult> {
    let n = space.len();
    if policy == PairPolicy::AllPairs && n > ALL_PAIRS_LIMIT {
        return Err(Error::arg(format!(
            "all-pairs curvature supports n <= {ALL_PAIRS_LIMIT}, got {n}; use support edges"
        )));
    }
    let p = space.kernel();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| ((x + 1)..n).map(move |y| (x, y)))
        .filter(|&(x, y)| policy == PairPolicy::AllPairs || p[(x, y)] > 0.0 || p[(y, x)] > 0.0)
        .collect();
    let kappa_pairs = pairs
        .par_iter()
        .map(|&(x, y)| ollivier_kappa(space, x, y).map(|k| (x, y, k)))
        .collect::<Result<Vec<_>>>()?;
    let kappa_global = kappa_pairs.iter().map(|t| t.2).fold(f64::INFINITY, f64::min);
    Ok(OllivierResult {
        kappa_pairs,
        kappa_global,
        pair_policy: policy,
    })
}

pub const GRADIENT_TIMES: [f64; 3] = [0.25, 1.0, 4.0];
pub const LIPSCHITZ_TIMES: [f64; 3] = [0.5, 2.0, 8.0];

/// Largest value of `Γ(T_t f)(x) − e^{−2kt} T_t(Γ(f))(x)` over random `f`,
/// all points and `t ∈ {0.25, 1, 4}`. Nonpositive means no violation.
pub fn gradient_estimate_check(space: &Space, k: f64, samples: usize, seed: u64) -> f64 {
    let sg = HeatSemigroup::new(space);
    let p = space.kernel();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let f = random_field(&mut rng, space.len());
        let gf = gamma_vec(p, f.values(), f.values());
        for &t in &GRADIENT_TIMES {
            let tf = sg.apply_vec(f.values(), t);
            let lhs = gamma_vec(p, &tf, &tf);
            let rhs = sg.apply_vec(&gf, t) * (-2.0 * k * t).exp();
            worst = worst.max((lhs - rhs).max());
        }
    }
    worst
}

/// `max_{x≠y} |f(x) − f(y)| / d(x, y)`.
pub fn lipschitz_norm(space: &Space, f: &DVector<f64>) -> f64 {
    let d = space.metric();
    let n = space.len();
    let mut best = 0.0_f64;
    for x in 0..n {
        for y in (x + 1)..n {
            best = best.max((f[x] - f[y]).abs() / d[(x, y)]);
        }
    }
    best
}

/// Largest `‖T_t f‖_Lip / (e^{−tκ} ‖f‖_Lip)` over random nonconstant `f`
/// and `t ∈ {0.5, 2, 8}`.
pub fn lipschitz_contraction_check(space: &Space, kappa: f64, samples: usize, seed: u64) -> f64 {
    let sg = HeatSemigroup::new(space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let f = random_field(&mut rng, space.len());
        let before = lipschitz_norm(space, f.values());
        if before <= 1e-14 {
            continue;
        }
        for &t in &LIPSCHITZ_TIMES {
            let after = lipschitz_norm(space, &sg.apply_vec(f.values(), t));
            worst = worst.max(after / ((-t * kappa).exp() * before));
        }
    }
    worst
}

/// Largest `W₁(μP^k, μ'P^k) − (1 − κ)^k W₁(μ, μ')` over random probability
/// pairs and `k ∈ {1, 2, 3}`.
pub fn w1_contraction_check(space: &Space, kappa: f64, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let powers: Vec<DMatrix<f64>> = (1..=3).map(|k| matrix_power(space.kernel(), k).transpose()).collect();
    let d = space.metric();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let mu = random_probability(&mut rng, space.len());
        let mu2 = random_probability(&mut rng, space.len());
        let base = transport_plan(d, &mu, &mu2, 1)?.cost;
        for (k, pt) in powers.iter().enumerate() {
            let moved = transport_plan(d, &(pt * &mu), &(pt * &mu2), 1)?.cost;
            worst = worst.max(moved - (1.0 - kappa).powi(k as i32 + 1) * base);
        }
    }
    Ok(worst)
}
