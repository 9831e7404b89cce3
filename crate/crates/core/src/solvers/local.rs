//! Chebyshev solves from scratch and the local update after a graph change.

use std::ops::ControlFlow;

use crate::chebyshev::{cheby_apply_observed, compute_coefficients, Progress};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ledger::MessageLedger;
use crate::operators::{
    make_diffusion_params, normalized_raw, operator_delta_apply, DiffusionParams, OperatorKind,
    OperatorSpec,
};
use crate::vector::{check_len, ScoreVector};

use super::oracle::check_mu;

/// Negative eigenvalues below this are rejected for the recentered kind.
const NEGATIVE_SPECTRUM_TOLERANCE: f64 = 1e-12;

/// Approximates `μ (R + μI)⁻¹ y` with an order-`K` Chebyshev expansion.
pub fn solve_scratch(
    g: &Graph,
    spec: &OperatorSpec,
    mu: f64,
    y: &ScoreVector,
    order: usize,
    ledger: &mut MessageLedger,
) -> Result<ScoreVector> {
    solve_scratch_observed(g, spec, mu, y, order, ledger, |_| ControlFlow::Continue(()))
}

pub fn solve_scratch_observed(
    g: &Graph,
    spec: &OperatorSpec,
    mu: f64,
    y: &ScoreVector,
    order: usize,
    ledger: &mut MessageLedger,
    observer: impl FnMut(Progress<'_>) -> ControlFlow<()>,
) -> Result<ScoreVector> {
    check_spectrum(spec)?;
    let coeffs = compute_coefficients(mu, spec.lambda_max(), order)?;
    cheby_apply_observed(g, spec, &coeffs, y, ledger, observer)
}

fn check_spectrum(spec: &OperatorSpec) -> Result<()> {
    if let (OperatorKind::Recentered, Some(min)) = (spec.kind(), spec.min_eigenvalue()) {
        if min < -NEGATIVE_SPECTRUM_TOLERANCE {
            return Err(Error::NegativeSpectrum(min));
        }
    }
    Ok(())
}

/// Residual `r = ψ (S̃ − S) pr` of the old scores in the new system.
pub fn compute_residual(
    old_spec: &OperatorSpec,
    new_spec: &OperatorSpec,
    g_old: &Graph,
    g_new: &Graph,
    params: &DiffusionParams,
    pr_old: &ScoreVector,
) -> Result<ScoreVector> {
    check_params(params, old_spec)?;
    let diff = operator_delta_apply(old_spec, new_spec, g_old, g_new, pr_old)?;
    Ok(diff.scaled(params.psi))
}

#[derive(Debug, Clone)]
pub struct UpdateResult {
    pub scores: ScoreVector,
    /// Number of nodes with a nonzero residual.
    pub residual_support_size: usize,
    pub ledger: MessageLedger,
    /// The operator bound to the new graph, reusable for the next update.
    pub operator: OperatorSpec,
}

/// Updates `pr_old` (the scores on `g_old` under `spec_old`) to the new graph
/// by solving for the correction `pr̃ − pr = (1/ρ) pr̃(r)` with an order-`K`
/// expansion seeded by the residual.
pub fn update_local(
    g_old: &Graph,
    g_new: &Graph,
    spec_old: &OperatorSpec,
    mu: f64,
    pr_old: &ScoreVector,
    order: usize,
    tau: f64,
) -> Result<UpdateResult> {
    update_local_observed(g_old, g_new, spec_old, mu, pr_old, order, tau, |_| {
        ControlFlow::Continue(())
    })
}

/// As [`update_local`], reporting the full updated estimate after every order.
#[allow(clippy::too_many_arguments)]
pub fn update_local_observed(
    g_old: &Graph,
    g_new: &Graph,
    spec_old: &OperatorSpec,
    mu: f64,
    pr_old: &ScoreVector,
    order: usize,
    tau: f64,
    observer: impl FnMut(Progress<'_>) -> ControlFlow<()>,
) -> Result<UpdateResult> {
    if !spec_old.kind().is_localizable() {
        return Err(Error::NotLocalizable(spec_old.kind().name()));
    }
    // The old operator was already built at this size, so no further limit applies.
    let spec_new = spec_old.rebind(g_new, usize::MAX)?;
    update_local_bound(g_old, g_new, spec_old, &spec_new, mu, pr_old, order, tau, observer)
}

/// As [`update_local_observed`] with the operator on the new graph supplied
/// by the caller. Both operators must share kind and spectral bound.
#[allow(clippy::too_many_arguments)]
pub fn update_local_bound(
    g_old: &Graph,
    g_new: &Graph,
    spec_old: &OperatorSpec,
    spec_new: &OperatorSpec,
    mu: f64,
    pr_old: &ScoreVector,
    order: usize,
    tau: f64,
    mut observer: impl FnMut(Progress<'_>) -> ControlFlow<()>,
) -> Result<UpdateResult> {
    check_mu(mu)?;
    if !spec_old.kind().is_localizable() {
        return Err(Error::NotLocalizable(spec_old.kind().name()));
    }
    check_len(g_old.num_nodes(), pr_old.len())?;
    let params = make_diffusion_params(mu, spec_old.lambda_max())?;
    let r = compute_residual(spec_old, spec_new, g_old, g_new, &params, pr_old)?;
    let residual_support_size = r.support().len();

    let mut ledger = MessageLedger::new(tau);
    let coeffs = compute_coefficients(mu, spec_new.lambda_max(), order)?;
    let inv_rho = 1.0 / params.rho;
    let mut composed = pr_old.as_slice().to_vec();
    let correction = cheby_apply_observed(g_new, spec_new, &coeffs, &r, &mut ledger, |p| {
        for ((c, base), v) in composed.iter_mut().zip(pr_old.iter()).zip(p.estimate) {
            *c = base + inv_rho * v;
        }
        observer(Progress {
            order: p.order,
            estimate: &composed,
            messages: p.messages,
        })
    })?;
    let scores = pr_old
        .iter()
        .zip(correction.iter())
        .map(|(base, v)| base + inv_rho * v)
        .collect::<Vec<_>>();
    Ok(UpdateResult {
        scores: ScoreVector::new(scores),
        residual_support_size,
        ledger,
        operator: spec_new.clone(),
    })
}

/// The stationary recursion `p ← ρ y + ψ S̃ p` started from `p0`, run for
/// `iterations` rounds.
pub fn warm_restart_power(
    g_new: &Graph,
    spec: &OperatorSpec,
    params: &DiffusionParams,
    y: &ScoreVector,
    p0: &ScoreVector,
    iterations: usize,
    ledger: &mut MessageLedger,
) -> Result<ScoreVector> {
    warm_restart_power_observed(g_new, spec, params, y, p0, iterations, ledger, |_| {
        ControlFlow::Continue(())
    })
}

#[allow(clippy::too_many_arguments)]
pub fn warm_restart_power_observed(
    g_new: &Graph,
    spec: &OperatorSpec,
    params: &DiffusionParams,
    y: &ScoreVector,
    p0: &ScoreVector,
    iterations: usize,
    ledger: &mut MessageLedger,
    mut observer: impl FnMut(Progress<'_>) -> ControlFlow<()>,
) -> Result<ScoreVector> {
    let n = g_new.num_nodes();
    if spec.num_nodes() != n {
        return Err(Error::IncompatibleGraphs(spec.num_nodes(), n));
    }
    check_len(n, y.len())?;
    check_len(n, p0.len())?;
    check_params(params, spec)?;
    check_spectrum(spec)?;
    let start = ledger.total();
    let mut p = p0.as_slice().to_vec();
    for t in 1..=iterations {
        ledger.record_vector(g_new, &p);
        let sp = normalized_raw(spec, g_new, &p);
        for ((pi, yi), si) in p.iter_mut().zip(y.iter()).zip(sp) {
            *pi = params.rho * yi + params.psi * si;
        }
        let progress = Progress {
            order: t,
            estimate: &p,
            messages: ledger.total() - start,
        };
        if observer(progress).is_break() {
            break;
        }
    }
    Ok(ScoreVector::new(p))
}

fn check_params(params: &DiffusionParams, spec: &OperatorSpec) -> Result<()> {
    let lambda = spec.lambda_max();
    if (2.0 * params.phi - lambda).abs() > 1e-12 * lambda {
        return Err(Error::OperatorMismatch(format!(
            "diffusion parameters built for lambda_max {} but operator has {}",
            2.0 * params.phi,
            lambda
        )));
    }
    Ok(())
}
