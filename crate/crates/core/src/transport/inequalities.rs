//! Transport-information and transport-entropy inequalities for `μ = fν`.
//!
//! * `ti_be`: `W₁(μ, ν) ≤ (√Θ_m / K) √I(μ)` under BE(K, ∞), `K > 0`.
//! * `ti_ollivier`: `W₁(μ, ν) ≤ (√(2Θ_m) / κ) √I(μ)` for `κ > 0`.
//! * `te`: `W₁(μ, ν) ≤ √(√(2Θ_m) · C · Ent(μ))`, where `C` is the sharpest
//!   transport-information constant available.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{divergences, transport_plan, transport_stats};
use crate::connectivity::invariant_blocks;
use crate::curvature::{be_best_constant, ollivier_global, Dimension, PairPolicy};
use crate::error::{Error, Result};
use crate::fixtures::random_density;
use crate::heat::HeatSemigroup;
use crate::space::{ScalarField, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    TiBe,
    TiOllivier,
    Te,
}

impl FromStr for InequalityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ti_be" => Ok(InequalityKind::TiBe),
            "ti_ollivier" => Ok(InequalityKind::TiOllivier),
            "te" => Ok(InequalityKind::Te),
            other => Err(Error::arg(format!("unknown inequality {other:?}"))),
        }
    }
}

impl fmt::Display for InequalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InequalityKind::TiBe => "ti_be",
            InequalityKind::TiOllivier => "ti_ollivier",
            InequalityKind::Te => "te",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub kind: InequalityKind,
    /// Transport-information constant `C` in `W₁ ≤ C √I`.
    pub ti_constant: f64,
    pub theta_m: f64,
    pub trials: usize,
    pub max_ratio: f64,
    /// Trials whose ratio exceeds `1 + 1e-9`.
    pub violations: usize,
}

fn w1_to_reference(space: &Space, f: &ScalarField) -> Result<f64> {
    let nu = space.probability();
    let mu = f.values().component_mul(&nu);
    // Absorb the rounding of ∫ f dν so the marginals balance exactly.
    let mu = &mu / mu.sum();
    Ok(transport_plan(space.metric(), &mu, &nu, 1)?.cost)
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs <= 1e-15 {
        0.0
    } else if rhs <= 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// `W₁(fν, ν) / (C √I(fν))`; infinite when the information vanishes but
/// the distance does not.
pub fn information_ratio(space: &Space, f: &ScalarField, constant: f64) -> Result<f64> {
    let w1 = w1_to_reference(space, f)?;
    let info = divergences(space, f)?.fisher;
    Ok(ratio(w1, constant * info.max(0.0).sqrt()))
}

/// `W₁(fν, ν) / √(√(2Θ_m) · C · Ent(fν))`.
pub fn entropy_ratio(space: &Space, f: &ScalarField, ti_constant: f64) -> Result<f64> {
    let w1 = w1_to_reference(space, f)?;
    let ent = divergences(space, f)?.entropy;
    let theta_m = transport_stats(space).theta_m;
    Ok(ratio(w1, ((2.0 * theta_m).sqrt() * ti_constant * ent.max(0.0)).sqrt()))
}

fn be_constant(space: &Space, theta_m: f64) -> Result<f64> {
    let k = be_best_constant(space, Dimension::Infinite)?.k_best_global;
    if !(k > 0.0) {
        return Err(Error::Hypothesis(format!(
            "ti_be needs a positive BE(K, inf) constant, best is {k}"
        )));
    }
    Ok(theta_m.sqrt() / k)
}

fn ollivier_constant(space: &Space, theta_m: f64) -> Result<f64> {
    let kappa = ollivier_global(space, PairPolicy::AllPairs)?.kappa_global;
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Hypothesis(format!(
            "ti_ollivier needs positive Ollivier curvature, got {kappa}"
        )));
    }
    Ok((2.0 * theta_m).sqrt() / kappa)
}

/// Runs `trials` random densities (point masses, sparse mixtures and
/// heat-smoothed versions) through the requested inequality. When the space
/// has several invariant blocks, the normalized indicator of each block is
/// tried as well and counted in `trials`.
pub fn verify_transport_inequality(space: &Space, kind: InequalityKind, trials: usize, seed: u64) -> Result<InequalityReport> {
    let theta_m = transport_stats(space).theta_m;
    let ti_constant = match kind {
        InequalityKind::TiBe => be_constant(space, theta_m)?,
        InequalityKind::TiOllivier => ollivier_constant(space, theta_m)?,
        InequalityKind::Te => {
            let be = be_constant(space, theta_m).ok();
            let oll = ollivier_constant(space, theta_m).ok();
            match (be, oll) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => {
                    return Err(Error::Hypothesis(
                        "te needs a transport-information constant: BE(K, inf) and Ollivier curvature are both nonpositive"
                            .into(),
                    ))
                }
            }
        }
    };
    let sg = HeatSemigroup::new(space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut densities: Vec<ScalarField> = (0..trials)
        .map(|k| {
            let f = random_density(&mut rng, space);
            if k % 3 == 2 {
                let smooth = sg.apply_vec(f.values(), 0.5).map(|v| v.max(0.0));
                let mass = smooth.dot(&space.probability());
                ScalarField::from(smooth / mass)
            } else {
                f
            }
        })
        .collect();
    let blocks = invariant_blocks(space);
    if blocks.count > 1 {
        let nu = space.probability();
        for b in &blocks.blocks {
            densities.push(ScalarField::from(ScalarField::indicator(b).values() / b.mass(&nu)));
        }
    }
    let ratios = densities
        .par_iter()
        .map(|f| match kind {
            InequalityKind::Te => entropy_ratio(space, f, ti_constant),
            _ => information_ratio(space, f, ti_constant),
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(InequalityReport {
        kind,
        ti_constant,
        theta_m,
        trials: densities.len(),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        violations: ratios.iter().filter(|&&r| r > 1.0 + 1e-9).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn k3_ollivier_bound_holds() {
        let r = verify_transport_inequality(&fixtures::k3(), InequalityKind::TiOllivier, 200, 4).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.max_ratio <= 1.0);
        assert!((r.ti_constant - 2.0).abs() < 1e-9);
    }

    #[test]
    fn p3_be_ratio_stays_below_root_two() {
        let p3 = fixtures::p3();
        let r = verify_transport_inequality(&p3, InequalityKind::TiBe, 200, 4).unwrap();
        assert!((r.ti_constant - 0.5_f64.sqrt()).abs() < 1e-9);
        assert!(r.max_ratio < 2.0_f64.sqrt() + 1e-9);
        // Densities near ν approach the limit √2.
        let f = ScalarField::new(vec![1.06, 0.9996, 0.9408]).unwrap();
        let near = information_ratio(&p3, &f, r.ti_constant).unwrap();
        assert!(near > 1.41 && near < 2.0_f64.sqrt());
        assert!(information_ratio(&p3, &f, 2.0_f64.sqrt() * r.ti_constant).unwrap() <= 1.0);
    }

    #[test]
    fn entropy_bound_on_k3() {
        let r = verify_transport_inequality(&fixtures::k3(), InequalityKind::Te, 100, 4).unwrap();
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn reference_density_has_ratio_zero() {
        let p3 = fixtures::p3();
        let one = ScalarField::constant(3, 1.0);
        assert_eq!(information_ratio(&p3, &one, 1.0).unwrap(), 0.0);
        assert_eq!(entropy_ratio(&p3, &one, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn hypotheses_are_checked() {
        let tb = fixtures::two_block(0.25);
        assert!(matches!(
            verify_transport_inequality(&tb, InequalityKind::TiOllivier, 1, 0),
            Err(Error::Hypothesis(_))
        ));
        assert!(matches!(
            verify_transport_inequality(&fixtures::p3(), InequalityKind::TiOllivier, 1, 0),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn local_curvature_does_not_rescue_two_block() {
        let tb = fixtures::two_block(0.25);
        let r = verify_transport_inequality(&tb, InequalityKind::TiBe, 5, 0).unwrap();
        assert_eq!(r.trials, 7);
        assert!(r.violations >= 2);
        assert_eq!(r.max_ratio, f64::INFINITY);
    }

    #[test]
    fn two_block_indicator_breaks_every_ti_constant() {
        let tb = fixtures::two_block(0.1);
        let (b1, _) = fixtures::two_block_halves(&tb);
        let mass = b1.mass(&tb.probability());
        let f = ScalarField::from(ScalarField::indicator(&b1).values() / mass);
        assert_eq!(divergences(&tb, &f).unwrap().fisher, 0.0);
        for c in [1.0, 1e3, 1e9] {
            assert!(information_ratio(&tb, &f, c).unwrap() > 1.0);
        }
    }
}
