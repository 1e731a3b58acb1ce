//! Dense symmetric eigen-solvers used across the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::space::Space;

/// Above this size extreme eigenvalues come from Lanczos instead of a full
/// dense decomposition.
pub const DENSE_LIMIT: usize = 2000;

/// `S = D^{1/2} P D^{-1/2}` with `D = diag(ν)`, symmetrized to remove
/// rounding asymmetry. Similar to the kernel, and symmetric under
/// reversibility.
pub fn symmetrized_kernel(space: &Space) -> DMatrix<f64> {
    let n = space.len();
    let sq: Vec<f64> = space.probability().iter().map(|v| v.sqrt()).collect();
    let p = space.kernel();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = sq[i] * p[(i, j)] / sq[j];
        }
    }
    symmetrize(&s)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition with eigenvalues ascending and eigenvectors as the
/// matching columns.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &k) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    DVector::from_vec(v)
}

/// Smallest eigenvalue of the symmetric-definite pencil `(A, B)`, i.e.
/// `min xᵀAx / xᵀBx`. Returns `None` when `B` is not positive definite.
pub fn pencil_min(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<f64> {
    let chol = symmetrize(b).cholesky()?;
    let l = chol.l();
    let linv = l.clone().try_inverse()?;
    let c = &linv * symmetrize(a) * linv.transpose();
    sorted_eigenvalues(&c).iter().copied().next()
}

/// Extreme eigenvalues of a symmetric operator via Lanczos with full
/// reorthogonalization, optionally deflating a known unit eigenvector.
///
/// Returns the Ritz values in ascending order.
pub fn lanczos<F>(n: usize, apply: F, deflate: Option<&DVector<f64>>, steps: usize, seed: u64) -> Vec<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let project = |v: &mut DVector<f64>| {
        if let Some(u) = deflate {
            let c = u.dot(v);
            v.axpy(-c, u, 1.0);
        }
    };
    let mut q = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    project(&mut q);
    q /= q.norm();
    let steps = steps.min(n);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    for k in 0..steps {
        basis.push(q.clone());
        let mut w = apply(&q);
        project(&mut w);
        let a = q.dot(&w);
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let bnorm = w.norm();
        if k + 1 == steps || bnorm < 1e-12 {
            break;
        }
        beta.push(bnorm);
        q = w / bnorm;
    }
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    sorted_eigenvalues(&t).iter().copied().collect()
}
