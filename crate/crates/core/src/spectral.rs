//! Dirichlet energy, variance, spectral gap and the Poincaré decay bound.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::connectivity::{invariant_blocks, kernel_dimension};
use crate::error::{Error, Result};
use crate::fixtures::random_field;
use crate::heat::HeatSemigroup;
use crate::linalg::{lanczos, pencil_min, sorted_eigen, sorted_eigenvalues, symmetrized_kernel, DENSE_LIMIT};
use crate::space::{ScalarField, Space, Subset};

/// Times at which the decay bound is checked.
pub const DECAY_TIMES: [f64; 3] = [0.5, 1.0, 5.0];

/// `H_m(f) = ½ Σ_{x,y} ν_x P_xy (f(y) − f(x))²` with the stored measure.
pub fn dirichlet_energy(space: &Space, f: &ScalarField) -> Result<f64> {
    space.check_field(f)?;
    Ok(energy_with(space, space.measure(), f.values()))
}

pub(crate) fn energy_with(space: &Space, nu: &DVector<f64>, f: &DVector<f64>) -> f64 {
    let n = space.len();
    let p = space.kernel();
    let mut s = 0.0;
    for x in 0..n {
        let mut row = 0.0;
        for y in 0..n {
            let d = f[y] - f[x];
            row += p[(x, y)] * d * d;
        }
        s += nu[x] * row;
    }
    0.5 * s
}

/// `Var_ν(f)` under the normalized measure.
pub fn variance(space: &Space, f: &ScalarField) -> Result<f64> {
    space.check_field(f)?;
    let nu = space.probability();
    let mean = f.values().dot(&nu);
    Ok(f.values().iter().zip(nu.iter()).map(|(v, w)| w * (v - mean) * (v - mean)).sum())
}

/// `H_m(f) / Var_ν(f)` with both sides under the normalized measure.
pub fn rayleigh_quotient(space: &Space, f: &ScalarField) -> Result<f64> {
    let var = variance(space, f)?;
    if var == 0.0 {
        return Err(Error::arg("rayleigh quotient of a constant field"));
    }
    Ok(energy_with(space, &space.probability(), f.values()) / var)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub gap: f64,
    /// Eigenvalues of `−Δ_m` on `L²(ν)`, ascending. Only the extreme Ritz
    /// values for spaces above the dense limit.
    pub spectrum: Vec<f64>,
    pub kernel_dim: usize,
    /// `inf ∫(Δf)² dν / H_m(f)` over mean-zero `f`; ergodic spaces only.
    pub gap_ibe: Option<f64>,
    /// Exponential rate fitted to a heat trajectory. Diagnostic only.
    pub decay_fit: Option<f64>,
}

pub fn spectral_gap(space: &Space) -> SpectralReport {
    let n = space.len();
    if n > DENSE_LIMIT {
        return spectral_gap_lanczos(space);
    }
    let s = symmetrized_kernel(space);
    let spectrum: Vec<f64> = sorted_eigenvalues(&(DMatrix::identity(n, n) - &s))
        .iter()
        .copied()
        .collect();
    let kernel_dim = kernel_dimension(space);
    let gap = if kernel_dim == 1 && n >= 2 { spectrum[1] } else { 0.0 };
    let gap_ibe = (kernel_dim == 1 && n >= 2).then(|| integrated_be_gap(space, &s)).flatten();
    let decay_fit = (kernel_dim == 1 && n >= 2).then(|| fit_decay(space)).flatten();
    SpectralReport {
        gap,
        spectrum,
        kernel_dim,
        gap_ibe,
        decay_fit,
    }
}

fn spectral_gap_lanczos(space: &Space) -> SpectralReport {
    let n = space.len();
    let kernel_dim = invariant_blocks(space).count;
    let s = symmetrized_kernel(space);
    let sq = space.probability().map(f64::sqrt);
    let apply = |v: &DVector<f64>| v - &s * v;
    let ritz = lanczos(n, apply, Some(&sq), 300, 0x5eed);
    let gap = if kernel_dim == 1 { ritz.first().copied().unwrap_or(0.0) } else { 0.0 };
    let mut spectrum = vec![0.0];
    spectrum.extend(ritz);
    SpectralReport {
        gap,
        spectrum,
        kernel_dim,
        gap_ibe: None,
        decay_fit: None,
    }
}

/// Minimizes `gᵀM²g / gᵀMg` over `g ⊥ √ν`, where `M = I − S`.
fn integrated_be_gap(space: &Space, s: &DMatrix<f64>) -> Option<f64> {
    let n = space.len();
    let m = DMatrix::identity(n, n) - s;
    let u = space.probability().map(f64::sqrt);
    let proj = DMatrix::identity(n, n) - &u * u.transpose();
    let (vals, vecs) = sorted_eigen(&proj);
    // The projector has eigenvalue 0 once (along √ν) and 1 otherwise.
    let cols: Vec<usize> = (0..n).filter(|&k| vals[k] > 0.5).collect();
    let q = DMatrix::from_fn(n, cols.len(), |i, c| vecs[(i, cols[c])]);
    let mq = q.transpose() * &m * &q;
    let m2q = q.transpose() * (&m * &m) * &q;
    pencil_min(&m2q, &mq)
}

/// Least-squares slope of `log ‖T_t f − ν(f)‖₂` over ten times in `[0.5, 5]`
/// for the field `f(x_i) = i`.
fn fit_decay(space: &Space) -> Option<f64> {
    let n = space.len();
    let semigroup = HeatSemigroup::new(space);
    let nu = space.probability();
    let f = DVector::from_fn(n, |i, _| i as f64);
    let mean = f.dot(&nu);
    let centered = f.map(|v| v - mean);
    let mut pts = Vec::with_capacity(10);
    for k in 0..10 {
        let t = 0.5 + 0.5 * k as f64;
        let norm = l2_norm(&semigroup.apply_vec(&centered, t), &nu);
        if norm <= 0.0 || !norm.is_finite() {
            return None;
        }
        pts.push((t, norm.ln()));
    }
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / 10.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 10.0;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    Some(-sxy / sxx)
}

pub(crate) fn l2_norm(f: &DVector<f64>, nu: &DVector<f64>) -> f64 {
    f.iter().zip(nu.iter()).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
}

/// `‖T_t f − ν(f)‖₂ / (e^{−gap·t} ‖f − ν(f)‖₂)`, or `None` for constant `f`.
pub fn poincare_decay_ratio(space: &Space, semigroup: &HeatSemigroup, gap: f64, f: &ScalarField, t: f64) -> Option<f64> {
    let nu = space.probability();
    let mean = f.values().dot(&nu);
    let centered = f.values().map(|v| v - mean);
    let before = l2_norm(&centered, &nu);
    if before <= 1e-14 * f.max_abs().max(1.0) {
        return None;
    }
    let after = l2_norm(&semigroup.apply_vec(&centered, t), &nu);
    Some(after / ((-gap * t).exp() * before))
}

/// `sup_A |μ(A) − ν(A)|` for `μ = g ν`: exhaustive over events when `n ≤ 12`,
/// otherwise the positive part of `g − 1`, which attains the supremum.
pub fn tv_distance(space: &Space, g: &DVector<f64>) -> f64 {
    let n = space.len();
    let nu = space.probability();
    let diff: Vec<f64> = (0..n).map(|i| (g[i] - 1.0) * nu[i]).collect();
    if n <= 12 {
        let mut best = 0.0_f64;
        for bits in 0..(1u64 << n) {
            let a = Subset::from_bits(n, bits);
            let s: f64 = a.indices().iter().map(|&i| diff[i]).sum();
            best = best.max(s.abs());
        }
        best
    } else {
        diff.iter().filter(|&&d| d > 0.0).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub gap: f64,
    pub max_ratio: f64,
    /// Largest `TV(μ_t, ν) / (‖g − 1‖₂ e^{−gap·t})` over the density trials.
    pub max_tv_ratio: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Checks the exponential decay bound over random fields and the total
/// variation bound over random nonnegative densities.
pub fn verify_poincare_decay(space: &Space, trials: usize, seed: u64) -> Result<DecayReport> {
    let report = spectral_gap(space);
    if report.kernel_dim != 1 || report.gap <= 0.0 {
        return Err(Error::Hypothesis("gap is 0; decay bound vacuous".into()));
    }
    let gap = report.gap;
    let semigroup = HeatSemigroup::new(space);
    let nu = space.probability();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio = 0.0_f64;
    let mut max_tv_ratio = 0.0_f64;
    let mut evaluated = 0;
    let mut skipped = 0;
    for _ in 0..trials {
        let f = random_field(&mut rng, space.len());
        let g = crate::fixtures::random_density(&mut rng, space);
        let g_dist = l2_norm(&g.values().map(|v| v - 1.0), &nu);
        for &t in &DECAY_TIMES {
            match poincare_decay_ratio(space, &semigroup, gap, &f, t) {
                Some(r) => {
                    max_ratio = max_ratio.max(r);
                    evaluated += 1;
                }
                None => skipped += 1,
            }
            if g_dist > 0.0 {
                let gt = semigroup.apply_vec(g.values(), t);
                let tv = tv_distance(space, &gt);
                max_tv_ratio = max_tv_ratio.max(tv / (g_dist * (-gap * t).exp()));
            }
        }
    }
    Ok(DecayReport {
        gap,
        max_ratio,
        max_tv_ratio,
        evaluated,
        skipped,
    })
}
