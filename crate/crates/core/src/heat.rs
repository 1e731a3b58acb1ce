//! The m-Laplacian `Δ_m = M_m − I` and its heat semigroup `T_t = e^{tΔ_m}`.
//!
//! Three evaluators are provided: the Poisson series
//! `e^{−t} Σ_k t^k/k! · P^k u₀`, diagonalization of the ν-symmetrized kernel,
//! and a fixed-step RK4 integrator that shares no code with the other two.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::connectivity::invariant_blocks;
use crate::error::{Error, Result};
use crate::linalg::{sorted_eigen, symmetrized_kernel};
use crate::space::{ScalarField, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatMethod {
    Series,
    Spectral,
    Rk4,
}

impl fmt::Display for HeatMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeatMethod::Series => "series",
            HeatMethod::Spectral => "spectral",
            HeatMethod::Rk4 => "rk4",
        })
    }
}

impl FromStr for HeatMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(HeatMethod::Series),
            "spectral" => Ok(HeatMethod::Spectral),
            "rk4" => Ok(HeatMethod::Rk4),
            other => Err(Error::arg(format!("unknown heat method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ScalarField>,
    pub method: HeatMethod,
}

/// `(Δ_m f)(x) = Σ_y P_xy (f(y) − f(x))`.
pub fn apply_laplacian(space: &Space, f: &ScalarField) -> Result<ScalarField> {
    space.check_field(f)?;
    Ok(ScalarField::from(laplacian_vec(space.kernel(), f.values())))
}

pub(crate) fn laplacian_vec(p: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    let n = f.len();
    DVector::from_fn(n, |i, _| {
        let mut s = 0.0;
        for j in 0..n {
            s += p[(i, j)] * (f[j] - f[i]);
        }
        s
    })
}

/// `T_t u₀` by the requested method.
pub fn heat_evolve(space: &Space, u0: &ScalarField, t: f64, method: HeatMethod, tol: f64) -> Result<ScalarField> {
    space.check_field(u0)?;
    check_time(t)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::arg(format!("tolerance must be positive, got {tol}")));
    }
    if t == 0.0 {
        return Ok(u0.clone());
    }
    let out = match method {
        HeatMethod::Series => series(space.kernel(), u0.values(), t, tol),
        HeatMethod::Spectral => HeatSemigroup::new(space).apply_vec(u0.values(), t),
        HeatMethod::Rk4 => rk4(space.kernel(), u0.values(), t),
    };
    Ok(ScalarField::from(out))
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::arg(format!("time must be finite and nonnegative, got {t}")));
    }
    Ok(())
}

/// Longest time handled by one series expansion; longer times are split so
/// that `e^{−t}` stays representable.
const SERIES_CHUNK: f64 = 256.0;

fn series(p: &DMatrix<f64>, u0: &DVector<f64>, t: f64, tol: f64) -> DVector<f64> {
    let chunks = (t / SERIES_CHUNK).ceil().max(1.0) as usize;
    let dt = t / chunks as f64;
    let mut u = u0.clone();
    for _ in 0..chunks {
        u = series_once(p, &u, dt, tol / chunks as f64);
    }
    u
}

fn series_once(p: &DMatrix<f64>, u0: &DVector<f64>, t: f64, tol: f64) -> DVector<f64> {
    let scale = u0.amax();
    if scale == 0.0 {
        return u0.clone();
    }
    let mut weight = (-t).exp();
    let mut term = u0.clone();
    let mut acc = &term * weight;
    let mut k = 0usize;
    loop {
        let next_weight = weight * t / (k + 1) as f64;
        // Σ_{j>k} w_j ≤ w_{k+1} / (1 − t/(k+2)) once k + 2 > t.
        let ratio = t / (k + 2) as f64;
        let converged = ratio < 1.0 && scale * next_weight / (1.0 - ratio) < tol;
        let next = p * &term;
        // Past convergence, keep only terms that reach points still at 0.
        if converged
            && !(next_weight > 0.0 && acc.iter().zip(next.iter()).any(|(&a, &b)| a == 0.0 && b * next_weight != 0.0))
        {
            break;
        }
        term = next;
        k += 1;
        weight = next_weight;
        acc.axpy(weight, &term, 1.0);
    }
    acc
}

fn rk4(p: &DMatrix<f64>, u0: &DVector<f64>, t: f64) -> DVector<f64> {
    let n = u0.len();
    let rhs = |u: &DVector<f64>| -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += p[(i, j)] * u[j];
            }
            out[i] = s - u[i];
        }
        out
    };
    let steps = (t / 0.005_f64.min(t / 10.0)).ceil() as usize;
    let h = t / steps as f64;
    let mut u = u0.clone();
    for _ in 0..steps {
        let k1 = rhs(&u);
        let k2 = rhs(&(&u + &k1 * (h / 2.0)));
        let k3 = rhs(&(&u + &k2 * (h / 2.0)));
        let k4 = rhs(&(&u + &k3 * h));
        u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    u
}

/// Precomputed eigendecomposition for repeated evaluation of `T_t`.
#[derive(Debug, Clone)]
pub struct HeatSemigroup {
    /// Eigenvalues of `S − I`, ascending.
    rates: DVector<f64>,
    vectors: DMatrix<f64>,
    sqrt_nu: DVector<f64>,
}

impl HeatSemigroup {
    pub fn new(space: &Space) -> Self {
        let (vals, vectors) = sorted_eigen(&symmetrized_kernel(space));
        HeatSemigroup {
            rates: vals.map(|l| l - 1.0),
            vectors,
            sqrt_nu: space.probability().map(f64::sqrt),
        }
    }

    pub fn apply(&self, u: &ScalarField, t: f64) -> ScalarField {
        ScalarField::from(self.apply_vec(u.values(), t))
    }

    pub fn apply_vec(&self, u: &DVector<f64>, t: f64) -> DVector<f64> {
        let g = u.component_mul(&self.sqrt_nu);
        let mut c = self.vectors.tr_mul(&g);
        for (ci, r) in c.iter_mut().zip(self.rates.iter()) {
            *ci *= (t * r).exp();
        }
        (&self.vectors * c).component_div(&self.sqrt_nu)
    }
}

/// States at the given times. A leading `t = 0` is inserted when missing so
/// that the first state is always the initial condition.
pub fn heat_trajectory(
    space: &Space,
    u0: &ScalarField,
    times: &[f64],
    method: HeatMethod,
    tol: f64,
) -> Result<HeatTrajectory> {
    space.check_field(u0)?;
    let mut ts = Vec::with_capacity(times.len() + 1);
    if times.first() != Some(&0.0) {
        ts.push(0.0);
    }
    ts.extend_from_slice(times);
    for w in ts.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::arg("trajectory times must be strictly increasing"));
        }
    }
    for &t in &ts {
        check_time(t)?;
    }
    let states = ts
        .par_iter()
        .map(|&t| heat_evolve(space, u0, t, method, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(HeatTrajectory {
        times: ts,
        states,
        method,
    })
}

/// Projection onto `ker Δ_m`: the ν-average of `u₀` on each invariant block.
pub fn stationary_limit(space: &Space, u0: &ScalarField) -> Result<ScalarField> {
    space.check_field(u0)?;
    let nu = space.measure();
    let mut out = u0.values().clone();
    for block in invariant_blocks(space).blocks {
        let idx = block.indices();
        let mass: f64 = idx.iter().map(|&i| nu[i]).sum();
        let avg = idx.iter().map(|&i| nu[i] * u0[i]).sum::<f64>() / mass;
        for i in idx {
            out[i] = avg;
        }
    }
    Ok(ScalarField::from(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::space::Subset;

    fn field(v: &[f64]) -> ScalarField {
        ScalarField::new(v.to_vec()).unwrap()
    }

    #[test]
    fn laplacian_examples() {
        let p3 = fixtures::p3();
        let out = apply_laplacian(&p3, &field(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(out.as_slice(), &[-1.0, 0.5, 0.0]);
        let c = apply_laplacian(&p3, &field(&[3.0, 3.0, 3.0])).unwrap();
        assert_eq!(c.max_abs(), 0.0);
        assert!(apply_laplacian(&p3, &field(&[1.0])).is_err());
    }

    #[test]
    fn laplacian_integrates_to_zero() {
        let s = fixtures::lazy_cycle(7, 0.3);
        let f = field(&[1.0, -2.0, 0.5, 4.0, 0.0, 1.5, -1.0]);
        let lf = apply_laplacian(&s, &f).unwrap();
        assert!(lf.values().dot(s.measure()).abs() <= 1e-12 * f.max_abs() * s.total_mass());
    }

    #[test]
    fn p3_heat_at_one() {
        let p3 = fixtures::p3();
        let u0 = field(&[1.0, 0.0, 0.0]);
        let e = (-1.0_f64).exp();
        let expect = 0.25 + 0.5 * e + 0.25 * e * e;
        assert!((expect - 0.467_773_541).abs() < 1e-9);
        for m in [HeatMethod::Series, HeatMethod::Spectral, HeatMethod::Rk4] {
            let u = heat_evolve(&p3, &u0, 1.0, m, 1e-12).unwrap();
            assert!((u[0] - expect).abs() < 1e-10, "{m}: {}", u[0]);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let k3 = fixtures::k3();
        let u0 = field(&[0.3, -1.0, 2.0]);
        for m in [HeatMethod::Series, HeatMethod::Spectral, HeatMethod::Rk4] {
            assert_eq!(heat_evolve(&k3, &u0, 0.0, m, 1e-12).unwrap(), u0);
        }
        assert!(heat_evolve(&k3, &u0, -1.0, HeatMethod::Series, 1e-12).is_err());
        assert!(heat_evolve(&k3, &u0, 1.0, HeatMethod::Series, 0.0).is_err());
    }

    #[test]
    fn long_time_reaches_mean() {
        let p3 = fixtures::p3();
        let u0 = field(&[1.0, 0.0, 0.0]);
        for m in [HeatMethod::Series, HeatMethod::Spectral, HeatMethod::Rk4] {
            let u = heat_evolve(&p3, &u0, 64.0, m, 1e-12).unwrap();
            assert!(u.values().iter().all(|v| (v - 0.25).abs() < 1e-10), "{m}");
        }
        let far = heat_evolve(&p3, &u0, 1000.0, HeatMethod::Series, 1e-12).unwrap();
        assert!(far.values().iter().all(|v| (v - 0.25).abs() < 1e-10));
    }

    #[test]
    fn stationary_limits() {
        let p3 = fixtures::p3();
        let lim = stationary_limit(&p3, &field(&[1.0, 0.0, 0.0])).unwrap();
        assert!(lim.values().iter().all(|v| (v - 0.25).abs() < 1e-15));
        let c = field(&[2.0, 2.0, 2.0]);
        assert_eq!(stationary_limit(&p3, &c).unwrap(), c);

        let tb = fixtures::two_block(0.1);
        let ind = ScalarField::indicator(&fixtures::two_block_halves(&tb).0);
        assert_eq!(stationary_limit(&tb, &ind).unwrap(), ind);
    }

    #[test]
    fn no_heat_crosses_blocks() {
        let tb = fixtures::two_block(0.1);
        let (b1, b2) = fixtures::two_block_halves(&tb);
        let d = Subset::from_indices(tb.len(), &[b1.indices()[3]]).unwrap();
        for t in [0.01, 1.0, 10.0] {
            let u = heat_evolve(&tb, &ScalarField::indicator(&d), t, HeatMethod::Series, 1e-12).unwrap();
            assert!(b2.indices().iter().all(|&i| u[i] == 0.0));
            assert!(b1.indices().iter().all(|&i| u[i] > 0.0));
        }
    }

    #[test]
    fn trajectory_starts_at_initial_state() {
        let p3 = fixtures::p3();
        let u0 = field(&[1.0, 0.0, 0.0]);
        let tr = heat_trajectory(&p3, &u0, &[0.5, 1.0], HeatMethod::Spectral, 1e-12).unwrap();
        assert_eq!(tr.times, vec![0.0, 0.5, 1.0]);
        assert_eq!(tr.states[0], u0);
        assert!(heat_trajectory(&p3, &u0, &[1.0, 0.5], HeatMethod::Spectral, 1e-12).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in [HeatMethod::Series, HeatMethod::Spectral, HeatMethod::Rk4] {
            assert_eq!(m.to_string().parse::<HeatMethod>().unwrap(), m);
        }
        assert!("euler".parse::<HeatMethod>().is_err());
    }
}
