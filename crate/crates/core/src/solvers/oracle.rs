//! Ground-truth solvers for `(R + μI) p = μ y`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::operators::{dense_operator_matrix, OperatorKind, OperatorSpec};
use crate::vector::{check_len, norm2, ScoreVector};

/// Solves `(R + μI) p = μ y` by dense LU factorization.
pub fn dense_oracle(
    g: &Graph,
    spec: &OperatorSpec,
    mu: f64,
    y: &ScoreVector,
    dense_limit: usize,
) -> Result<ScoreVector> {
    let n = g.num_nodes();
    if n > dense_limit {
        return Err(Error::DenseLimitExceeded {
            kind: "dense oracle",
            num_nodes: n,
            limit: dense_limit,
        });
    }
    check_mu(mu)?;
    check_len(n, y.len())?;
    if spec.num_nodes() != n {
        return Err(Error::IncompatibleGraphs(spec.num_nodes(), n));
    }
    let mut a = dense_operator_matrix(spec, g);
    for i in 0..n {
        a[(i, i)] += mu;
    }
    let b = DVector::from_iterator(n, y.iter().map(|v| mu * v));
    let p = a.lu().solve(&b).ok_or(Error::Singular)?;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(ScoreVector::new(p.as_slice().to_vec()))
}

/// Accurate solution for graphs of any size: conjugate gradients on the
/// symmetrized system for the sparse kinds, the dense oracle otherwise.
///
/// Every sparse kind is similar to a power of the normalized Laplacian
/// `N = D^{-1/2} L D^{-1/2}` on the non-isolated nodes, `R = T N^m T⁻¹` with
/// `T = D^{1/2−σ}` (σ = 0 for the standard and iterated kinds), so
/// `(N^m + μI) q = μ T⁻¹ y` is symmetric positive definite and `p = T q`.
/// Isolated nodes decouple with `p_i = μ y_i / (1 + μ)`.
pub fn reference_solve(
    g: &Graph,
    spec: &OperatorSpec,
    mu: f64,
    y: &ScoreVector,
    dense_limit: usize,
) -> Result<ScoreVector> {
    let (sigma, m) = match spec.kind() {
        OperatorKind::Standard => (0.0, 1),
        OperatorKind::Dual { sigma } => (sigma, 1),
        OperatorKind::Iterated { m } => (0.0, m),
        _ => return dense_oracle(g, spec, mu, y, dense_limit),
    };
    check_mu(mu)?;
    let n = g.num_nodes();
    check_len(n, y.len())?;

    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| if g.is_isolated(i) { 0.0 } else { g.degree(i).powf(-0.5) })
        .collect();
    let normalized = |x: &[f64]| -> Vec<f64> {
        let mut out = x.to_vec();
        for u in 0..n {
            if g.is_isolated(u) {
                out[u] = 0.0;
                continue;
            }
            let s: f64 = g
                .neighbors(u)
                .iter()
                .map(|&(v, w)| w * inv_sqrt[v] * x[v])
                .sum();
            out[u] -= inv_sqrt[u] * s;
        }
        out
    };
    let system = |x: &[f64]| -> Vec<f64> {
        let mut v = x.to_vec();
        for _ in 0..m {
            v = normalized(&v);
        }
        v.iter().zip(x).map(|(a, b)| a + mu * b).collect()
    };

    let scale: Vec<f64> = (0..n)
        .map(|i| if g.is_isolated(i) { 0.0 } else { g.degree(i).powf(0.5 - sigma) })
        .collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| if g.is_isolated(i) { 0.0 } else { mu * y[i] / scale[i] })
        .collect();
    let q = conjugate_gradient(system, &rhs)?;
    let p = (0..n)
        .map(|i| {
            if g.is_isolated(i) {
                mu * y[i] / (1.0 + mu)
            } else {
                scale[i] * q[i]
            }
        })
        .collect();
    Ok(ScoreVector::new(p))
}

fn conjugate_gradient(apply: impl Fn(&[f64]) -> Vec<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let max_iterations = 10 * n + 1000;
    for _ in 0..max_iterations {
        if rr.sqrt() <= 1e-16 * b_norm {
            break;
        }
        let ap = apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            break;
        }
        let step = rr / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_next: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    let true_residual: f64 = {
        let ax = apply(&x);
        norm2(&ax.iter().zip(b).map(|(a, b)| a - b).collect::<Vec<_>>())
    };
    if true_residual > 1e-12 * b_norm {
        return Err(Error::NotConverged(format!(
            "conjugate gradient residual {true_residual:e}"
        )));
    }
    Ok(x)
}

pub(crate) fn check_mu(mu: f64) -> Result<()> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    Ok(())
}
