//! The generalized reference operators `R` and their normalized form
//! `S = (2/λ_max) R − I`.
//!
//! Every operator solves `R p + μ p = μ y` for a personalized PageRank variant.
//! Sparse kinds (standard, iterated, dual) are applied edge by edge; the
//! remaining kinds hold a dense `N × N` payload and are restricted to graphs
//! below a configurable dense limit.
//!
//! Isolated nodes follow the random-walk convention: `R δ_i = δ_i`, which is
//! what `x − Pᵀx` gives when `1/d_i = 0`. The recentered kernel is exempt.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{scatter_transition, Graph, NodeId};
use crate::vector::{check_len, ScoreVector};

pub const DEFAULT_DENSE_LIMIT: usize = 2000;

/// Multiplier applied to power-iteration spectral radius estimates.
pub const LAMBDA_INFLATION: f64 = 1.01;

/// Consecutive steps within tolerance before power iteration stops.
const SETTLED_STEPS: usize = 3;

/// Eigenvalues of `L` below this are taken as zero before fractional powers.
const EIGEN_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// `L D⁻¹ = I − Pᵀ`
    Standard,
    /// `L^γ D_γ⁻¹` with `D_γ = diag(L^γ)`
    Gamma { gamma: f64 },
    /// `(L D⁻¹)^m`
    Iterated { m: u32 },
    /// `D^{−σ} L D^{σ−1}`
    Dual { sigma: f64 },
    /// `D_γ^{−σ} L^γ D_γ^{σ−1}`
    GammaDual { gamma: f64, sigma: f64 },
    /// `−C W C` with the centering matrix `C = I − 𝟙𝟙ᵀ/N`
    Recentered,
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Standard => "standard",
            OperatorKind::Gamma { .. } => "gamma",
            OperatorKind::Iterated { .. } => "iterated",
            OperatorKind::Dual { .. } => "dual",
            OperatorKind::GammaDual { .. } => "gamma-dual",
            OperatorKind::Recentered => "recentered",
        }
    }

    /// Kinds that need an explicit `N × N` matrix.
    pub fn is_dense(&self) -> bool {
        matches!(
            self,
            OperatorKind::Gamma { .. } | OperatorKind::GammaDual { .. } | OperatorKind::Recentered
        )
    }

    pub fn is_localizable(&self) -> bool {
        !matches!(self, OperatorKind::Recentered)
    }

    pub fn analytic_bound(&self) -> Option<f64> {
        match *self {
            OperatorKind::Standard => Some(2.0),
            OperatorKind::Iterated { m } => Some(2f64.powi(m as i32)),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            OperatorKind::Gamma { gamma } | OperatorKind::GammaDual { gamma, .. }
                if !(gamma.is_finite() && gamma > 0.0) =>
            {
                bad(format!("gamma must be positive, got {gamma}"))
            }
            OperatorKind::Dual { sigma } | OperatorKind::GammaDual { sigma, .. }
                if !sigma.is_finite() =>
            {
                bad(format!("sigma must be finite, got {sigma}"))
            }
            OperatorKind::Iterated { m: 0 } => bad("m must be at least 1".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PowerIterationConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for PowerIterationConfig {
    fn default() -> Self {
        PowerIterationConfig {
            max_iterations: 200,
            tolerance: 1e-8,
        }
    }
}

/// A reference operator bound to one graph.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    kind: OperatorKind,
    lambda_max: f64,
    num_nodes: usize,
    dense: Option<DMatrix<f64>>,
    min_eigenvalue: Option<f64>,
}

/// Builds the operator for `g` and fixes its spectral bound: 2 for the
/// standard kind, `2^m` for the iterated kind, otherwise the inflated
/// power-iteration estimate.
pub fn make_operator(kind: OperatorKind, g: &Graph, dense_limit: usize) -> Result<OperatorSpec> {
    make_operator_with(kind, g, dense_limit, PowerIterationConfig::default())
}

pub fn make_operator_with(
    kind: OperatorKind,
    g: &Graph,
    dense_limit: usize,
    power: PowerIterationConfig,
) -> Result<OperatorSpec> {
    let mut spec = bind(kind, g, dense_limit)?;
    spec.lambda_max = match kind.analytic_bound() {
        Some(bound) => bound,
        None => LAMBDA_INFLATION * spec.estimate_spectral_radius(g, power)?,
    };
    if !(spec.lambda_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{} operator has zero spectral radius on this graph",
            kind.name()
        )));
    }
    Ok(spec)
}

/// Builds the operator with a caller-supplied spectral bound, skipping the
/// estimate. The bound must cover the spectrum of `R` on `g`.
pub fn make_operator_with_bound(
    kind: OperatorKind,
    g: &Graph,
    dense_limit: usize,
    lambda_max: f64,
) -> Result<OperatorSpec> {
    bind(kind, g, dense_limit)?.with_lambda_max(lambda_max)
}

fn bind(kind: OperatorKind, g: &Graph, dense_limit: usize) -> Result<OperatorSpec> {
    kind.validate()?;
    let n = g.num_nodes();
    let (dense, min_eigenvalue) = if kind.is_dense() {
        if n > dense_limit {
            return Err(Error::DenseLimitExceeded {
                kind: kind.name(),
                num_nodes: n,
                limit: dense_limit,
            });
        }
        let m = build_dense(kind, g);
        let min = match kind {
            OperatorKind::Recentered => m.clone().symmetric_eigenvalues().min(),
            _ => 0.0,
        };
        (Some(m), (kind == OperatorKind::Recentered).then_some(min))
    } else {
        (None, None)
    };
    Ok(OperatorSpec {
        kind,
        lambda_max: 0.0,
        num_nodes: n,
        dense,
        min_eigenvalue,
    })
}

impl OperatorSpec {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Smallest eigenvalue, known only for the (symmetric) recentered kernel.
    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.min_eigenvalue
    }

    pub fn dense_payload(&self) -> Option<&DMatrix<f64>> {
        self.dense.as_ref()
    }

    /// Overrides the spectral bound.
    pub fn with_lambda_max(mut self, lambda_max: f64) -> Result<Self> {
        if !(lambda_max.is_finite() && lambda_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda_max must be positive, got {lambda_max}"
            )));
        }
        self.lambda_max = lambda_max;
        Ok(self)
    }

    /// The same operator kind bound to an evolved graph, keeping this spectral
    /// bound so both graphs share one set of diffusion coefficients. Fails if a
    /// fresh estimate on `g_new` exceeds the stored bound.
    pub fn rebind(&self, g_new: &Graph, dense_limit: usize) -> Result<OperatorSpec> {
        self.rebind_with(g_new, dense_limit, PowerIterationConfig::default())
    }

    /// As [`OperatorSpec::rebind`] with explicit power-iteration settings.
    pub fn rebind_with(
        &self,
        g_new: &Graph,
        dense_limit: usize,
        power: PowerIterationConfig,
    ) -> Result<OperatorSpec> {
        if g_new.num_nodes() != self.num_nodes {
            return Err(Error::IncompatibleGraphs(self.num_nodes, g_new.num_nodes()));
        }
        let mut spec = bind(self.kind, g_new, dense_limit)?;
        if self.kind.analytic_bound().is_none() {
            let estimated = spec.estimate_spectral_radius(g_new, power)?;
            if estimated > self.lambda_max {
                return Err(Error::LambdaMaxViolation {
                    stored: self.lambda_max,
                    estimated,
                });
            }
        }
        spec.lambda_max = self.lambda_max;
        Ok(spec)
    }

    /// Power iteration on `R` from the normalized all-ones vector plus `δ_0`.
    pub fn estimate_spectral_radius(&self, g: &Graph, cfg: PowerIterationConfig) -> Result<f64> {
        power_iteration(self.num_nodes, |x| apply_raw(self, g, x), cfg)
    }

    fn check(&self, g: &Graph, x: &ScoreVector) -> Result<()> {
        if g.num_nodes() != self.num_nodes {
            return Err(Error::IncompatibleGraphs(self.num_nodes, g.num_nodes()));
        }
        check_len(self.num_nodes, x.len())
    }
}

/// Dominant eigenvalue magnitude of a linear map with real spectrum.
pub fn power_iteration(
    n: usize,
    apply: impl FnMut(&[f64]) -> Vec<f64>,
    cfg: PowerIterationConfig,
) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    x[0] += 1.0;
    power_iteration_from(x, apply, cfg)
}

/// Power iteration from a given nonzero start vector.
pub fn power_iteration_from(
    mut x: Vec<f64>,
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    cfg: PowerIterationConfig,
) -> Result<f64> {
    if normalize(&mut x) == 0.0 {
        return Ok(0.0);
    }
    // A single small change can be a transient plateau between two close
    // eigenvalues, so the tolerance must hold on consecutive steps.
    let mut previous = f64::NAN;
    let mut settled = 0;
    for _ in 0..cfg.max_iterations {
        let mut y = apply(&x);
        let estimate = normalize(&mut y);
        if estimate == 0.0 {
            return Ok(0.0);
        }
        if (estimate - previous).abs() <= cfg.tolerance * estimate {
            settled += 1;
            if settled == SETTLED_STEPS {
                return Ok(estimate);
            }
        } else {
            settled = 0;
        }
        previous = estimate;
        x = y;
    }
    Err(Error::PowerIterationNotConverged {
        iterations: cfg.max_iterations,
    })
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = crate::vector::norm2(x);
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

/// `R x`
pub fn operator_apply(spec: &OperatorSpec, g: &Graph, x: &ScoreVector) -> Result<ScoreVector> {
    spec.check(g, x)?;
    Ok(ScoreVector::new(apply_raw(spec, g, x.as_slice())))
}

/// `S x = (2/λ_max) R x − x`
pub fn normalized_apply(spec: &OperatorSpec, g: &Graph, x: &ScoreVector) -> Result<ScoreVector> {
    spec.check(g, x)?;
    Ok(ScoreVector::new(normalized_raw(spec, g, x.as_slice())))
}

pub(crate) fn normalized_raw(spec: &OperatorSpec, g: &Graph, x: &[f64]) -> Vec<f64> {
    let scale = 2.0 / spec.lambda_max;
    let mut out = apply_raw(spec, g, x);
    for (o, xi) in out.iter_mut().zip(x) {
        *o = scale * *o - xi;
    }
    out
}

pub(crate) fn apply_raw(spec: &OperatorSpec, g: &Graph, x: &[f64]) -> Vec<f64> {
    match spec.kind {
        OperatorKind::Standard => standard_apply(g, x),
        OperatorKind::Iterated { m } => {
            let mut v = x.to_vec();
            for _ in 0..m {
                v = standard_apply(g, &v);
            }
            v
        }
        OperatorKind::Dual { sigma } => dual_apply(g, sigma, x),
        _ => {
            let dense = spec.dense.as_ref().expect("dense kinds carry a payload");
            let y = dense * DVector::from_column_slice(x);
            y.as_slice().to_vec()
        }
    }
}

fn standard_apply(g: &Graph, x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    scatter_transition(g, x, -1.0, &mut out);
    out
}

fn dual_apply(g: &Graph, sigma: f64, x: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; x.len()];
    for (v, &xv) in x.iter().enumerate() {
        if xv == 0.0 || g.is_isolated(v) {
            continue;
        }
        let s = xv * g.degree(v).powf(sigma - 1.0);
        for &(u, w) in g.neighbors(v) {
            acc[u] += w * s;
        }
    }
    x.iter()
        .zip(acc)
        .enumerate()
        .map(|(u, (&xu, a))| {
            if a == 0.0 {
                xu
            } else {
                xu - a * g.degree(u).powf(-sigma)
            }
        })
        .collect()
}

/// Off-diagonal part of row `u` of a standard (σ = 0) or dual operator:
/// `d_u^{−σ} Σ_v W_uv d_v^{σ−1} x_v`, so that `(R x)_u = x_u − row`.
fn sparse_offdiag_row(g: &Graph, sigma: f64, u: NodeId, x: &[f64]) -> f64 {
    if g.is_isolated(u) {
        return 0.0;
    }
    if sigma == 0.0 {
        return crate::graph::transition_row(g, u, x);
    }
    let sum: f64 = g
        .neighbors(u)
        .iter()
        .map(|&(v, w)| w * g.degree(v).powf(sigma - 1.0) * x[v])
        .sum();
    sum * g.degree(u).powf(-sigma)
}

/// `(R̃ − R) x` for standard/dual kinds, computed on the changed nodes and their
/// neighbors in either graph only.
fn sparse_delta(g_old: &Graph, g_new: &Graph, sigma: f64, x: &[f64]) -> Result<Vec<f64>> {
    let changed = g_old.changed_nodes(g_new)?;
    let mut rows = g_old.closed_neighborhood(&changed);
    rows.extend(g_new.closed_neighborhood(&changed));
    let mut out = vec![0.0; x.len()];
    for u in rows {
        out[u] = sparse_offdiag_row(g_old, sigma, u, x) - sparse_offdiag_row(g_new, sigma, u, x);
    }
    Ok(out)
}

/// `(S̃ − S) x = (2/λ_max)(R̃ − R) x` where `old` is bound to `g_old` and `new`
/// to `g_new` with the same kind and spectral bound. For the standard and dual
/// kinds the result is supported on the changed nodes and their 1-hop
/// neighbors; for the iterated kind on their m-hop neighborhood.
pub fn operator_delta_apply(
    old: &OperatorSpec,
    new: &OperatorSpec,
    g_old: &Graph,
    g_new: &Graph,
    x: &ScoreVector,
) -> Result<ScoreVector> {
    old.check(g_old, x)?;
    new.check(g_new, x)?;
    if old.kind != new.kind {
        return Err(Error::OperatorMismatch(format!(
            "{} vs {}",
            old.kind.name(),
            new.kind.name()
        )));
    }
    if old.lambda_max != new.lambda_max {
        return Err(Error::OperatorMismatch(format!(
            "lambda_max {} vs {}",
            old.lambda_max, new.lambda_max
        )));
    }
    let x = x.as_slice();
    let mut diff = match old.kind {
        OperatorKind::Standard => sparse_delta(g_old, g_new, 0.0, x)?,
        OperatorKind::Dual { sigma } => sparse_delta(g_old, g_new, sigma, x)?,
        OperatorKind::Iterated { m } => {
            // R̃^m − R^m = Σ_k R̃^k (R̃ − R) R^{m−1−k}
            let mut powers = vec![x.to_vec()];
            for j in 1..m as usize {
                let next = standard_apply(g_old, &powers[j - 1]);
                powers.push(next);
            }
            let mut total = vec![0.0; x.len()];
            for k in 0..m as usize {
                let mut term = sparse_delta(g_old, g_new, 0.0, &powers[m as usize - 1 - k])?;
                for _ in 0..k {
                    term = standard_apply(g_new, &term);
                }
                total.iter_mut().zip(term).for_each(|(t, v)| *t += v);
            }
            total
        }
        OperatorKind::Gamma { .. } | OperatorKind::GammaDual { .. } => {
            let before = apply_raw(old, g_old, x);
            let after = apply_raw(new, g_new, x);
            after.iter().zip(before).map(|(a, b)| a - b).collect()
        }
        OperatorKind::Recentered => return Err(Error::NotLocalizable(old.kind.name())),
    };
    let scale = 2.0 / old.lambda_max;
    diff.iter_mut().for_each(|v| *v *= scale);
    Ok(ScoreVector::new(diff))
}

/// The operator as an explicit matrix, assembled from `W` and `D` directly
/// rather than through the sparse apply routines.
pub fn dense_operator_matrix(spec: &OperatorSpec, g: &Graph) -> DMatrix<f64> {
    match &spec.dense {
        Some(m) => m.clone(),
        None => build_dense(spec.kind, g),
    }
}

fn build_dense(kind: OperatorKind, g: &Graph) -> DMatrix<f64> {
    let n = g.num_nodes();
    let mut w = DMatrix::zeros(n, n);
    for (u, v, wt) in g.edges() {
        w[(u, v)] = wt;
        w[(v, u)] = wt;
    }
    let d: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let laplacian = DMatrix::from_diagonal(&DVector::from_column_slice(&d)) - &w;
    let isolated: Vec<NodeId> = (0..n).filter(|&i| g.is_isolated(i)).collect();
    let mut r = match kind {
        OperatorKind::Standard => &laplacian * diag_pow(&d, -1.0),
        OperatorKind::Dual { sigma } => {
            diag_pow(&d, -sigma) * &laplacian * diag_pow(&d, sigma - 1.0)
        }
        OperatorKind::Iterated { m } => {
            let mut base = &laplacian * diag_pow(&d, -1.0);
            patch_isolated(&mut base, &isolated);
            let mut acc = base.clone();
            for _ in 1..m {
                acc = &acc * &base;
            }
            acc
        }
        OperatorKind::Gamma { gamma } => {
            let lg = laplacian_power(laplacian, gamma);
            let dg = gamma_degrees(&lg);
            &lg * diag_pow(&dg, -1.0)
        }
        OperatorKind::GammaDual { gamma, sigma } => {
            let lg = laplacian_power(laplacian, gamma);
            let dg = gamma_degrees(&lg);
            diag_pow(&dg, -sigma) * &lg * diag_pow(&dg, sigma - 1.0)
        }
        OperatorKind::Recentered => {
            let c = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
            return -(&c * &w * &c);
        }
    };
    patch_isolated(&mut r, &isolated);
    r
}

/// `diag(L^γ)`, with rounding-level entries (nodes whose only edges are
/// self-loops) set to zero.
fn gamma_degrees(lg: &DMatrix<f64>) -> Vec<f64> {
    lg.diagonal()
        .iter()
        .map(|&x| if x > EIGEN_CLAMP { x } else { 0.0 })
        .collect()
}

fn patch_isolated(r: &mut DMatrix<f64>, isolated: &[NodeId]) {
    for &i in isolated {
        r.row_mut(i).fill(0.0);
        r.column_mut(i).fill(0.0);
        r[(i, i)] = 1.0;
    }
}

/// `diag(d_i^p)` with zero entries where `d_i = 0`.
fn diag_pow(d: &[f64], p: f64) -> DMatrix<f64> {
    let v: Vec<f64> = d
        .iter()
        .map(|&x| if x > 0.0 { x.powf(p) } else { 0.0 })
        .collect();
    DMatrix::from_diagonal(&DVector::from_vec(v))
}

/// `L^γ` from the symmetric eigendecomposition of `L`.
fn laplacian_power(laplacian: DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let eig = laplacian.symmetric_eigen();
    let powered: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l < EIGEN_CLAMP { 0.0 } else { l.powf(gamma) })
        .collect();
    let q = &eig.eigenvectors;
    q * DMatrix::from_diagonal(&DVector::from_vec(powered)) * q.transpose()
}

/// Scalar coefficients of the normalized recursion `p ← ρ y + ψ S p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionParams {
    pub mu: f64,
    pub alpha: f64,
    pub rho: f64,
    pub psi: f64,
    pub phi: f64,
}

pub fn make_diffusion_params(mu: f64, lambda_max: f64) -> Result<DiffusionParams> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda_max must be positive, got {lambda_max}"
        )));
    }
    let denom = 2.0 * mu + lambda_max;
    Ok(DiffusionParams {
        mu,
        alpha: 1.0 / (mu + 1.0),
        rho: 2.0 * mu / denom,
        psi: -lambda_max / denom,
        phi: lambda_max / 2.0,
    })
}

/// `μ = (1 − α)/α` for `α ∈ (0, 1]`.
pub fn mu_from_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok((1.0 - alpha) / alpha)
}

/// `α = 1/(μ + 1)` for `μ > 0`.
pub fn alpha_from_mu(mu: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    Ok(1.0 / (mu + 1.0))
}
