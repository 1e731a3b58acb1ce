//! Nonlocal interaction, perimeter, total variation, mean curvature,
//! medians and the Cheeger constant.
//!
//! Interaction, perimeter, total variation and curvature integrals use the
//! stored measure. Medians and the Cheeger constant normalize it first (the
//! Cheeger ratio is scale invariant anyway).

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::connectivity::invariant_blocks;
use crate::error::{Error, Result};
use crate::linalg::{sorted_eigen, symmetrized_kernel};
use crate::space::{ScalarField, Space, Subset};
use crate::spectral::spectral_gap;

/// Largest space for exhaustive Cheeger enumeration.
pub const EXACT_CHEEGER_LIMIT: usize = 24;

/// `L_m(A, B) = Σ_{x∈A} Σ_{y∈B} ν_x P_xy`.
pub fn interaction(space: &Space, a: &Subset, b: &Subset) -> Result<f64> {
    space.check_subset(a)?;
    space.check_subset(b)?;
    let nu = space.measure();
    let p = space.kernel();
    let bi = b.indices();
    Ok(a.indices()
        .iter()
        .map(|&x| nu[x] * bi.iter().map(|&y| p[(x, y)]).sum::<f64>())
        .sum())
}

/// `P_m(E) = L_m(E, X ∖ E)`.
pub fn perimeter(space: &Space, e: &Subset) -> Result<f64> {
    interaction(space, e, &e.complement())
}

/// `TV_m(u) = ½ Σ_{x,y} ν_x P_xy |u(y) − u(x)|`.
pub fn total_variation(space: &Space, u: &ScalarField) -> Result<f64> {
    space.check_field(u)?;
    let n = space.len();
    let nu = space.measure();
    let p = space.kernel();
    let mut s = 0.0;
    for x in 0..n {
        let mut row = 0.0;
        for y in 0..n {
            row += p[(x, y)] * (u[y] - u[x]).abs();
        }
        s += nu[x] * row;
    }
    Ok(0.5 * s)
}

/// One nontrivial superlevel set `E_t = {u > t}` of a finite-range field.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    pub threshold: f64,
    pub set: Subset,
    pub perimeter: f64,
    /// Length of the threshold interval on which `E_t` is constant.
    pub width: f64,
}

/// Level-set decomposition with `Σ P_m(E_t) · width = TV_m(u)`.
pub fn coarea_decompose(space: &Space, u: &ScalarField) -> Result<Vec<LevelSet>> {
    space.check_field(u)?;
    let mut values: Vec<f64> = u.as_slice().to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
        .windows(2)
        .map(|w| {
            let set = Subset::from_mask(u.as_slice().iter().map(|&v| v > w[0]).collect());
            Ok(LevelSet {
                threshold: w[0],
                perimeter: perimeter(space, &set)?,
                set,
                width: w[1] - w[0],
            })
        })
        .collect()
}

/// `H_{∂E}(x) = 1 − 2 m_x(E)` at every point.
pub fn mean_curvature(space: &Space, e: &Subset) -> Result<ScalarField> {
    space.check_subset(e)?;
    let p = space.kernel();
    let idx = e.indices();
    Ok(ScalarField::from(nalgebra::DVector::from_fn(space.len(), |x, _| {
        1.0 - 2.0 * idx.iter().map(|&y| p[(x, y)]).sum::<f64>()
    })))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianResult {
    /// Chosen median: the midpoint of the median interval.
    pub median: f64,
    pub interval: (f64, f64),
    pub shifted: ScalarField,
}

/// Median interval of `u` under the normalized measure, and `u − median`.
pub fn median_shift(space: &Space, u: &ScalarField) -> Result<MedianResult> {
    space.check_field(u)?;
    let nu = space.probability();
    let mut order: Vec<usize> = (0..space.len()).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    let half = 0.5 - 1e-12;
    // Smallest value with ν(u ≤ v) ≥ ½.
    let mut acc = 0.0;
    let mut lo = u[order[order.len() - 1]];
    for &i in &order {
        acc += nu[i];
        if acc >= half {
            lo = u[i];
            break;
        }
    }
    // Largest value with ν(u ≥ v) ≥ ½.
    let mut acc = 0.0;
    let mut hi = u[order[0]];
    for &i in order.iter().rev() {
        acc += nu[i];
        if acc >= half {
            hi = u[i];
            break;
        }
    }
    let median = 0.5 * (lo + hi);
    let shifted = ScalarField::from(u.values().map(|v| v - median));
    Ok(MedianResult {
        median,
        interval: (lo, hi),
        shifted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheegerMethod {
    Enumeration,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheegerMode {
    Exact,
    Sweep,
}

impl FromStr for CheegerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CheegerMode::Exact),
            "sweep" => Ok(CheegerMode::Sweep),
            other => Err(Error::arg(format!("unknown cheeger mode {other:?}"))),
        }
    }
}

impl fmt::Display for CheegerMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheegerMethod::Enumeration => "enumeration",
            CheegerMethod::Sweep => "sweep",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheegerResult {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
    /// Set achieving `upper`, with `0 < ν(witness) ≤ ν(X)/2`.
    pub witness: Subset,
    pub method: CheegerMethod,
}

/// `P_m(D) / min(ν(D), ν(X∖D))` with ν normalized.
pub fn cheeger_ratio(space: &Space, d: &Subset) -> Result<f64> {
    let nu = space.probability();
    let m = d.mass(&nu);
    let small = m.min(1.0 - m);
    if small <= 0.0 {
        return Err(Error::arg("cheeger ratio needs a proper nonempty subset"));
    }
    Ok(perimeter(space, d)? / space.total_mass() / small)
}

fn lighter_side(space: &Space, d: Subset) -> Subset {
    let nu = space.probability();
    if d.mass(&nu) > 0.5 {
        d.complement()
    } else {
        d
    }
}

pub fn cheeger(space: &Space, mode: CheegerMode) -> Result<CheegerResult> {
    let n = space.len();
    if n < 2 {
        return Err(Error::arg("cheeger constant needs at least two points"));
    }
    match mode {
        CheegerMode::Exact => cheeger_exact(space),
        CheegerMode::Sweep => cheeger_sweep(space),
    }
}

/// Gray-code walk over the `2^{n−1}` bipartitions that keep the last point
/// outside `D`, updating cut and mass in `O(n)` per step.
fn cheeger_exact(space: &Space) -> Result<CheegerResult> {
    let n = space.len();
    if n > EXACT_CHEEGER_LIMIT {
        return Err(Error::arg(format!(
            "exact cheeger enumeration supports n <= {EXACT_CHEEGER_LIMIT}, got {n}; use sweep mode"
        )));
    }
    let w = space.interaction_matrix();
    let nu = space.probability();
    let row: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let mut inside = vec![false; n];
    // wd[i] = Σ_{j∈D} W_ij.
    let mut wd = vec![0.0; n];
    let mut cut = 0.0_f64;
    let mut mass = 0.0_f64;
    let mut best = (f64::INFINITY, 0u64);
    let mut code = 0u64;
    let total = 1u64 << (n - 1);
    for step in 1..total {
        let i = step.trailing_zeros() as usize;
        if inside[i] {
            cut -= (row[i] - wd[i]) - (wd[i] - w[(i, i)]);
            mass -= nu[i];
            inside[i] = false;
            for (j, v) in wd.iter_mut().enumerate() {
                *v -= w[(j, i)];
            }
        } else {
            cut += (row[i] - w[(i, i)] - wd[i]) - wd[i];
            mass += nu[i];
            inside[i] = true;
            for (j, v) in wd.iter_mut().enumerate() {
                *v += w[(j, i)];
            }
        }
        code ^= 1u64 << i;
        let small = mass.min(1.0 - mass);
        if small > 0.0 {
            let r = cut.max(0.0) / small;
            if r < best.0 {
                best = (r, code);
            }
        }
    }
    let witness = lighter_side(space, Subset::from_bits(n, best.1));
    let h = cheeger_ratio(space, &witness)?;
    Ok(CheegerResult {
        lower: h,
        upper: h,
        exact: true,
        witness,
        method: CheegerMethod::Enumeration,
    })
}

/// Sweep cuts along the Fiedler vector give the upper bound; `gap/2` is the
/// lower bound.
fn cheeger_sweep(space: &Space) -> Result<CheegerResult> {
    let n = space.len();
    let gap = spectral_gap(space).gap;
    let blocks = invariant_blocks(space);
    if blocks.count > 1 {
        let witness = lighter_side(space, blocks.blocks[0].clone());
        let upper = cheeger_ratio(space, &witness)?;
        return Ok(CheegerResult {
            lower: 0.0,
            upper,
            exact: false,
            witness,
            method: CheegerMethod::Sweep,
        });
    }
    let (_, vecs) = sorted_eigen(&symmetrized_kernel(space));
    let sq = space.probability().map(f64::sqrt);
    let fiedler: Vec<f64> = (0..n).map(|i| vecs[(i, n - 2)] / sq[i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| fiedler[a].total_cmp(&fiedler[b]).then(a.cmp(&b)));
    let w = space.interaction_matrix();
    let nu = space.probability();
    let mut inside = vec![false; n];
    let mut cut = 0.0_f64;
    let mut mass = 0.0_f64;
    let mut best = (f64::INFINITY, 0usize);
    for (k, &i) in order.iter().take(n - 1).enumerate() {
        let to_inside: f64 = (0..n).filter(|&j| inside[j]).map(|j| w[(i, j)]).sum();
        let to_outside: f64 = (0..n).filter(|&j| j != i && !inside[j]).map(|j| w[(i, j)]).sum();
        cut += to_outside - to_inside;
        mass += nu[i];
        inside[i] = true;
        let small = mass.min(1.0 - mass);
        if small > 0.0 {
            let r = cut.max(0.0) / small;
            if r < best.0 {
                best = (r, k);
            }
        }
    }
    let prefix = Subset::from_indices(n, &order[..=best.1])?;
    let witness = lighter_side(space, prefix);
    let upper = cheeger_ratio(space, &witness)?;
    Ok(CheegerResult {
        lower: (gap / 2.0).min(upper),
        upper,
        exact: false,
        witness,
        method: CheegerMethod::Sweep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn set(n: usize, idx: &[usize]) -> Subset {
        Subset::from_indices(n, idx).unwrap()
    }

    #[test]
    fn p3_interaction_and_perimeter() {
        let p3 = fixtures::p3();
        assert_eq!(interaction(&p3, &set(3, &[0]), &set(3, &[1])).unwrap(), 0.25);
        let x = Subset::full(3);
        assert!((interaction(&p3, &x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(perimeter(&p3, &set(3, &[0])).unwrap(), 0.25);
        assert_eq!(perimeter(&p3, &Subset::empty(3)).unwrap(), 0.0);
        assert_eq!(perimeter(&p3, &x).unwrap(), 0.0);
    }

    #[test]
    fn two_block_blocks_do_not_interact() {
        let tb = fixtures::two_block(0.1);
        let (b1, b2) = fixtures::two_block_halves(&tb);
        assert_eq!(interaction(&tb, &b1, &b2).unwrap(), 0.0);
        assert_eq!(perimeter(&tb, &b1).unwrap(), 0.0);
        let h = mean_curvature(&tb, &b1).unwrap();
        let integral: f64 = b1.indices().iter().map(|&i| h[i] * tb.measure()[i]).sum();
        assert!((integral + b1.mass(tb.measure())).abs() < 1e-12);
    }

    #[test]
    fn total_variation_examples() {
        let p3 = fixtures::p3();
        let u = ScalarField::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(total_variation(&p3, &u).unwrap(), 0.25);
        assert_eq!(total_variation(&p3, &ScalarField::constant(3, 2.0)).unwrap(), 0.0);
        let levels = coarea_decompose(&p3, &u).unwrap();
        assert_eq!(levels.len(), 1);
        assert_eq!(levels[0].set, set(3, &[0]));
        assert_eq!(levels[0].perimeter * levels[0].width, 0.25);
        assert!(coarea_decompose(&p3, &ScalarField::constant(3, 1.0)).unwrap().is_empty());
    }

    #[test]
    fn curvature_examples() {
        let p3 = fixtures::p3();
        let h = mean_curvature(&p3, &set(3, &[0])).unwrap();
        assert_eq!(h.as_slice(), &[1.0, 0.0, 1.0]);
        let all = mean_curvature(&p3, &Subset::full(3)).unwrap();
        assert!(all.as_slice().iter().all(|&v| v == -1.0));
    }

    #[test]
    fn median_examples() {
        let p3 = fixtures::p3();
        let m = median_shift(&p3, &ScalarField::new(vec![1.0, 0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(m.median, 0.0);
        assert_eq!(m.interval, (0.0, 0.0));
        let c = median_shift(&p3, &ScalarField::constant(3, 4.0)).unwrap();
        assert_eq!((c.median, c.interval), (4.0, (4.0, 4.0)));
        assert!(c.shifted.max_abs() == 0.0);

        let two = fixtures::disjoint_union(&[
            crate::builders::grid_kernel_neumann(&[(0.0, 0.0)], 1.0, 1.0).unwrap(),
            crate::builders::grid_kernel_neumann(&[(0.0, 0.0)], 1.0, 1.0).unwrap(),
        ]);
        let m = median_shift(&two, &ScalarField::new(vec![0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(m.interval, (0.0, 1.0));
        assert_eq!(m.median, 0.5);
    }

    #[test]
    fn p3_cheeger_is_one() {
        let r = cheeger(&fixtures::p3(), CheegerMode::Exact).unwrap();
        assert!(r.exact);
        assert_eq!(r.lower, 1.0);
        assert_eq!(r.upper, 1.0);
        // Every proper bipartition of P3 has ratio 1.
        for bits in 1..7u64 {
            let d = Subset::from_bits(3, bits);
            assert_eq!(cheeger_ratio(&fixtures::p3(), &d).unwrap(), 1.0);
        }
    }

    #[test]
    fn two_block_cheeger_is_zero() {
        let tb = fixtures::two_block(0.1);
        let r = cheeger(&tb, CheegerMode::Exact).unwrap();
        assert_eq!(r.upper, 0.0);
        let (b1, b2) = fixtures::two_block_halves(&tb);
        assert!(r.witness == b1 || r.witness == b2);
        let s = cheeger(&tb, CheegerMode::Sweep).unwrap();
        assert_eq!((s.lower, s.upper), (0.0, 0.0));
    }

    #[test]
    fn linear_chain_sweep_shrinks() {
        let mut prev = f64::INFINITY;
        for n in [4, 8, 12] {
            let s = cheeger(&fixtures::linear_chain(n), CheegerMode::Sweep).unwrap();
            assert!(s.lower <= s.upper);
            assert!(s.upper < prev);
            prev = s.upper;
        }
        assert!(prev < 0.2);
    }

    #[test]
    fn sweep_dominates_exact_on_small_chains() {
        for n in 1..=7 {
            let s = fixtures::linear_chain(n);
            let exact = cheeger(&s, CheegerMode::Exact).unwrap();
            let sweep = cheeger(&s, CheegerMode::Sweep).unwrap();
            assert!(sweep.upper >= exact.upper - 1e-12);
            assert!(sweep.lower <= exact.lower + 1e-12);
        }
    }

    #[test]
    fn exact_mode_limits() {
        assert!(cheeger(&fixtures::two_block(0.04), CheegerMode::Exact).is_err());
        let one = crate::builders::grid_kernel_neumann(&[(0.0, 0.0)], 1.0, 1.0).unwrap();
        assert!(cheeger(&one, CheegerMode::Exact).is_err());
    }
}
