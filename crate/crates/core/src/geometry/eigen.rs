//! Symmetric eigen-solvers for the lenses: dense decomposition for small
//! problems and a Lanczos iteration with full reorthogonalization for large
//! ones. Both are deterministic.

use nalgebra::{DMatrix, SymmetricEigen};

/// Problems up to this size are decomposed densely.
pub(crate) const DENSE_LIMIT: usize = 600;

const MAX_LANCZOS_STEPS: usize = 400;
const RESIDUAL_TOL: f64 = 1e-10;

/// Eigenpair with a unit-norm vector.
#[derive(Debug, Clone)]
pub(crate) struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// The `k` algebraically largest eigenpairs of a dense symmetric matrix,
/// sorted by descending eigenvalue (ties by original solver order).
pub(crate) fn dense_top(matrix: DMatrix<f64>, k: usize) -> Vec<EigenPair> {
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(k)
        .map(|i| EigenPair {
            value: eig.eigenvalues[i],
            vector: eig.eigenvectors.column(i).iter().copied().collect(),
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    // Two passes of classical Gram-Schmidt keep the basis orthogonal to
    // working precision.
    for _ in 0..2 {
        for q in basis {
            let c = dot(w, q);
            axpy(w, -c, q);
        }
    }
}

/// The `k` algebraically largest eigenpairs of the symmetric operator `op`
/// restricted to the orthogonal complement of `deflate` (orthonormal).
pub(crate) fn lanczos_top<F>(n: usize, k: usize, deflate: &[Vec<f64>], op: F) -> Vec<EigenPair>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let dim = n.saturating_sub(deflate.len());
    let k = k.min(dim);
    if k == 0 {
        return Vec::new();
    }
    let max_steps = dim.min(MAX_LANCZOS_STEPS.max(4 * k));

    // Fixed, non-symmetric start vector.
    let mut q: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
        .collect();
    orthogonalize(&mut q, deflate);
    let qn = norm(&q);
    q.iter_mut().for_each(|v| *v /= qn);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    loop {
        let j = basis.len() - 1;
        let mut w = op(&basis[j]);
        orthogonalize(&mut w, deflate);
        let alpha = dot(&w, &basis[j]);
        axpy(&mut w, -alpha, &basis[j]);
        if j > 0 {
            axpy(&mut w, -betas[j - 1], &basis[j - 1]);
        }
        orthogonalize(&mut w, &basis);
        orthogonalize(&mut w, deflate);
        alphas.push(alpha);
        let beta = norm(&w);

        let steps = alphas.len();
        let exhausted = beta <= 1e-12 * alphas.iter().fold(1.0f64, |m, a| m.max(a.abs())) || steps >= max_steps;
        let check = exhausted || (steps >= k && (steps - k) % 10 == 0);
        if check {
            let mut t = DMatrix::<f64>::zeros(steps, steps);
            for i in 0..steps {
                t[(i, i)] = alphas[i];
                if i + 1 < steps {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let ritz = dense_top(t, k);
            let scale = ritz.iter().fold(1.0f64, |m, p| m.max(p.value.abs()));
            let converged = ritz.len() == k
                && ritz.iter().all(|p| (beta * p.vector[steps - 1]).abs() <= RESIDUAL_TOL * scale);
            if converged || exhausted {
                return ritz
                    .into_iter()
                    .map(|p| {
                        let mut v = vec![0.0; n];
                        for (c, qv) in p.vector.iter().zip(&basis) {
                            axpy(&mut v, *c, qv);
                        }
                        let vn = norm(&v);
                        if vn > 0.0 {
                            v.iter_mut().for_each(|x| *x /= vn);
                        }
                        EigenPair { value: p.value, vector: v }
                    })
                    .collect();
            }
        }
        betas.push(beta);
        w.iter_mut().for_each(|v| *v /= beta);
        basis.push(w);
    }
}
