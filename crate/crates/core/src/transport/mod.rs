//! Exact Wasserstein distances with dual certificates, the jump statistics
//! Θ and J, relative entropy and Fisher information.

pub mod inequalities;
pub mod simplex;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{ScalarField, Space};
use crate::spectral::energy_with;

pub use inequalities::{
    entropy_ratio, information_ratio, verify_transport_inequality, InequalityKind, InequalityReport,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub coupling: DMatrix<f64>,
    /// `W_p`, the `p`-th root of the optimal objective.
    pub cost: f64,
    /// Optimal value of `Σ γ_xy d(x, y)^p`.
    pub objective: f64,
    pub dual_u: DVector<f64>,
    pub dual_v: DVector<f64>,
    /// `objective − (Σ u μ + Σ v ν)`.
    pub duality_gap: f64,
    pub p: u32,
}

/// Optimal transport between two masses on the points of a space.
pub fn wasserstein(space: &Space, mu: &ScalarField, nu2: &ScalarField, p: u32) -> Result<TransportPlan> {
    space.check_field(mu)?;
    space.check_field(nu2)?;
    transport_plan(space.metric(), mu.values(), nu2.values(), p)
}

/// Optimal transport for ground cost `d^p`, `p ∈ {1, 2}`.
pub fn transport_plan(d: &DMatrix<f64>, mu: &DVector<f64>, nu2: &DVector<f64>, p: u32) -> Result<TransportPlan> {
    if p != 1 && p != 2 {
        return Err(Error::arg(format!("p must be 1 or 2, got {p}")));
    }
    let n = d.nrows();
    if mu.len() != n || nu2.len() != n {
        return Err(Error::dim("marginals do not match the metric"));
    }
    if mu.iter().chain(nu2.iter()).any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::arg("transport marginals must be finite and nonnegative"));
    }
    let (ma, mb) = (mu.sum(), nu2.sum());
    if (ma - mb).abs() > 1e-12 * ma.max(mb).max(1.0) {
        return Err(Error::arg(format!("mass imbalance: {ma} against {mb}")));
    }
    let cost_of = |x: usize, y: usize| if p == 1 { d[(x, y)] } else { d[(x, y)] * d[(x, y)] };
    let rows: Vec<usize> = (0..n).filter(|&i| mu[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| nu2[j] > 0.0).collect();
    let mut coupling = DMatrix::zeros(n, n);
    if rows.is_empty() || cols.is_empty() {
        return Ok(TransportPlan {
            coupling,
            cost: 0.0,
            objective: 0.0,
            dual_u: DVector::zeros(n),
            dual_v: DVector::zeros(n),
            duality_gap: 0.0,
            p,
        });
    }
    let supply: Vec<f64> = rows.iter().map(|&i| mu[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| nu2[j]).collect();
    let cost = DMatrix::from_fn(rows.len(), cols.len(), |a, b| cost_of(rows[a], cols[b]));
    let sol = simplex::solve(&supply, &demand, &cost)?;
    for &(a, b, x) in &sol.basis {
        coupling[(rows[a], cols[b])] += x;
    }

    let (dual_u, dual_v) = if p == 1 {
        // g(x) = min_j (d(x, j) − v_j) is 1-Lipschitz and dominates u on the
        // source support, so (g, −g) is a Kantorovich-Rubinstein certificate.
        let g = DVector::from_fn(n, |x, _| {
            cols.iter()
                .zip(&sol.v)
                .map(|(&j, vj)| d[(x, j)] - vj)
                .fold(f64::INFINITY, f64::min)
        });
        let neg = -&g;
        (g, neg)
    } else {
        let mut v = DVector::zeros(n);
        for (b, &j) in cols.iter().enumerate() {
            v[j] = sol.v[b];
        }
        for j in (0..n).filter(|j| nu2[*j] <= 0.0) {
            v[j] = rows
                .iter()
                .zip(&sol.u)
                .map(|(&i, ui)| cost_of(i, j) - ui)
                .fold(f64::INFINITY, f64::min);
        }
        let mut u = DVector::zeros(n);
        for (a, &i) in rows.iter().enumerate() {
            u[i] = sol.u[a];
        }
        for i in (0..n).filter(|i| mu[*i] <= 0.0) {
            u[i] = (0..n).map(|j| cost_of(i, j) - v[j]).fold(f64::INFINITY, f64::min);
        }
        (u, v)
    };
    let dual = dual_u.dot(mu) + dual_v.dot(nu2);
    let objective = sol.objective;
    Ok(TransportPlan {
        coupling,
        cost: if p == 1 { objective } else { objective.max(0.0).sqrt() },
        objective,
        duality_gap: objective - dual,
        dual_u,
        dual_v,
        p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportStats {
    /// `Θ(x) = ½ Σ_y P_xy d(x, y)²`.
    pub theta: Vec<f64>,
    pub theta_m: f64,
    /// `J(x) = Σ_y P_xy d(x, y)`.
    pub jump: Vec<f64>,
}

pub fn transport_stats(space: &Space) -> TransportStats {
    let n = space.len();
    let p = space.kernel();
    let d = space.metric();
    let theta: Vec<f64> = (0..n)
        .map(|x| 0.5 * (0..n).map(|y| p[(x, y)] * d[(x, y)] * d[(x, y)]).sum::<f64>())
        .collect();
    let jump = (0..n)
        .map(|x| (0..n).map(|y| p[(x, y)] * d[(x, y)]).sum())
        .collect();
    TransportStats {
        theta_m: theta.iter().copied().fold(0.0, f64::max),
        theta,
        jump,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceStats {
    /// `∫ f log f dν`.
    pub entropy: f64,
    /// `2 H_m(√f)`.
    pub fisher: f64,
}

/// Entropy and Fisher information of the density `f = dμ/dν`, with ν
/// normalized.
pub fn divergences(space: &Space, f: &ScalarField) -> Result<DivergenceStats> {
    space.check_field(f)?;
    if f.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::arg("density must be nonnegative"));
    }
    let nu = space.probability();
    let mass = f.values().dot(&nu);
    if (mass - 1.0).abs() > 1e-10 {
        return Err(Error::arg(format!("density integrates to {mass}, expected 1")));
    }
    let entropy = f
        .as_slice()
        .iter()
        .zip(nu.iter())
        .map(|(&v, w)| if v > 0.0 { w * v * v.ln() } else { 0.0 })
        .sum();
    let root = f.values().map(f64::sqrt);
    Ok(DivergenceStats {
        entropy,
        fisher: 2.0 * energy_with(space, &nu, &root),
    })
}
