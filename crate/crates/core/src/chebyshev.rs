//! Chebyshev approximation of the PageRank kernel `h(R) = μ (R + μI)⁻¹` and
//! its distributed application to a vector.
//!
//! With `φ = λ_max/2` the shifted polynomials are
//!
//! ```text
//! T̄_0 y = y
//! T̄_1 y = ((R − φI)/φ) y
//! T̄_t y = (2/φ)(R − φI) T̄_{t−1} y − T̄_{t−2} y
//! ```
//!
//! and `h(R) y ≈ (c_0/2) y + Σ_{t=1..K} c_t T̄_t y`. Note `(R − φI)/φ` is the
//! normalized operator `S`, so each round is one application of `S`.

use std::f64::consts::PI;
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ledger::MessageLedger;
use crate::operators::{normalized_raw, OperatorSpec};
use crate::vector::{check_len, ScoreVector};

/// Minimum number of quadrature nodes used for the coefficient integrals.
pub const MIN_QUADRATURE_NODES: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct ChebyCoefficients {
    coeffs: Vec<f64>,
    phi: f64,
    mu: f64,
    lambda_max: f64,
}

impl ChebyCoefficients {
    /// `c_0 ..= c_K`
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// The truncated series evaluated at a scalar eigenvalue `x ∈ [0, λ_max]`.
    pub fn eval_scalar(&self, x: f64) -> f64 {
        let s = (x - self.phi) / self.phi;
        let (mut prev, mut cur) = (1.0, s);
        let mut total = 0.5 * self.coeffs[0];
        for (t, c) in self.coeffs.iter().enumerate().skip(1) {
            if t >= 2 {
                let next = 2.0 * s * cur - prev;
                prev = cur;
                cur = next;
            }
            total += c * cur;
        }
        total
    }
}

/// Coefficients of `h(x) = μ/(x + μ)` on `[0, λ_max]`, from the integral
/// `c_t = (2/π) ∫₀^π cos(tθ) h(φ(cos θ + 1)) dθ` evaluated by Gauss–Chebyshev
/// quadrature on `Q = max(1024, 8K)` nodes.
pub fn compute_coefficients(mu: f64, lambda_max: f64, order: usize) -> Result<ChebyCoefficients> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda_max must be positive, got {lambda_max}"
        )));
    }
    let phi = lambda_max / 2.0;
    let q = MIN_QUADRATURE_NODES.max(8 * order);
    let nodes: Vec<(f64, f64)> = (0..q)
        .map(|j| {
            let theta = PI * (j as f64 + 0.5) / q as f64;
            (theta, mu / (phi * (theta.cos() + 1.0) + mu))
        })
        .collect();
    let coeffs = (0..=order)
        .map(|t| {
            let sum: f64 = nodes
                .iter()
                .map(|&(theta, h)| (t as f64 * theta).cos() * h)
                .sum();
            2.0 * sum / q as f64
        })
        .collect();
    Ok(ChebyCoefficients {
        coeffs,
        phi,
        mu,
        lambda_max,
    })
}

/// Snapshot handed to observers after each order of an iterative solve.
#[derive(Debug, Clone, Copy)]
pub struct Progress<'a> {
    pub order: usize,
    pub estimate: &'a [f64],
    /// Messages spent so far.
    pub messages: u64,
}

/// `f^(K) = (c_0/2) y + Σ_{t=1..K} c_t T̄_t(R) y`.
///
/// Round `t` (for `t = 1..K`) transmits `T̄_{t−1} y`; the ledger charges every
/// node holding a value above its threshold once per incident edge.
pub fn cheby_apply(
    g: &Graph,
    spec: &OperatorSpec,
    coeffs: &ChebyCoefficients,
    y: &ScoreVector,
    ledger: &mut MessageLedger,
) -> Result<ScoreVector> {
    cheby_apply_observed(g, spec, coeffs, y, ledger, |_| ControlFlow::Continue(()))
}

/// As [`cheby_apply`], calling `observer` with the partial sum after every
/// order (starting at order 0). Returning `Break` stops the recurrence early;
/// the partial sum at that order is returned.
pub fn cheby_apply_observed(
    g: &Graph,
    spec: &OperatorSpec,
    coeffs: &ChebyCoefficients,
    y: &ScoreVector,
    ledger: &mut MessageLedger,
    mut observer: impl FnMut(Progress<'_>) -> ControlFlow<()>,
) -> Result<ScoreVector> {
    let n = g.num_nodes();
    if spec.num_nodes() != n {
        return Err(Error::IncompatibleGraphs(spec.num_nodes(), n));
    }
    check_len(n, y.len())?;
    if coeffs.lambda_max != spec.lambda_max() {
        return Err(Error::OperatorMismatch(format!(
            "coefficients built for lambda_max {} but operator has {}",
            coeffs.lambda_max,
            spec.lambda_max()
        )));
    }
    let c = &coeffs.coeffs;
    let start = ledger.total();
    let mut acc: Vec<f64> = y.iter().map(|v| 0.5 * c[0] * v).collect();
    fn report<'a>(order: usize, acc: &'a [f64], ledger: &MessageLedger, start: u64) -> Progress<'a> {
        Progress {
            order,
            estimate: acc,
            messages: ledger.total() - start,
        }
    }
    if observer(report(0, &acc, ledger, start)).is_break() || c.len() == 1 {
        return Ok(ScoreVector::new(acc));
    }

    let mut prev = y.as_slice().to_vec();
    ledger.record_vector(g, &prev);
    let mut cur = normalized_raw(spec, g, &prev);
    axpy(&mut acc, c[1], &cur);
    if observer(report(1, &acc, ledger, start)).is_break() {
        return Ok(ScoreVector::new(acc));
    }

    for (t, &ct) in c.iter().enumerate().skip(2) {
        ledger.record_vector(g, &cur);
        let mut next = normalized_raw(spec, g, &cur);
        for (nx, p) in next.iter_mut().zip(&prev) {
            *nx = 2.0 * *nx - p;
        }
        axpy(&mut acc, ct, &next);
        prev = std::mem::replace(&mut cur, next);
        if observer(report(t, &acc, ledger, start)).is_break() {
            break;
        }
    }
    Ok(ScoreVector::new(acc))
}

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    if a == 0.0 {
        return;
    }
    for (s, v) in acc.iter_mut().zip(x) {
        *s += a * v;
    }
}
