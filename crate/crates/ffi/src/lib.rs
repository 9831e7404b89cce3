//! C interface to the chebppr solvers.
//!
//! Graphs, operators and snapshot streams are opaque handles created by
//! `cppr_*_new`/`cppr_*_open` and released by the matching `cppr_*_free`.
//! Every fallible call returns a [`CpprStatus`]; on failure the message is
//! available from [`cppr_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use chebppr::ingest::{parse_edge_file, reverse_time, SnapshotStream};
use chebppr::synthetic::{synthetic_stream, SyntheticRecipe};
use chebppr::{
    build_graph, make_operator, mu_from_alpha, reference_solve, solve_scratch, update_local, Error,
    Graph, MessageLedger, OperatorKind, OperatorSpec, ScoreVector, DEFAULT_DENSE_LIMIT,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpprStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    /// Non-convergence, a violated spectral bound or a singular system.
    Numerical = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpprOperatorKind {
    Standard = 0,
    Gamma = 1,
    Iterated = 2,
    Dual = 3,
    GammaDual = 4,
    Recentered = 5,
}

pub struct CpprGraph(Graph);

pub struct CpprOperator(OperatorSpec);

pub struct CpprStream(SnapshotStream);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CpprStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => CpprStatus::Io,
            Error::Parse { .. } => CpprStatus::Parse,
            ref e if e.is_numerical() => CpprStatus::Numerical,
            _ => CpprStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CpprStatus::NullPointer, format!("{what} is null"))
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CpprStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CpprStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CpprStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CpprStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), Failure> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got }.into());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cppr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Converts a restart complement α in (0, 1] to μ = (1 − α)/α.
///
/// # Safety
/// `mu` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn cppr_mu_from_alpha(alpha: f64, mu: *mut f64) -> CpprStatus {
    guard(|| {
        let value = mu_from_alpha(alpha)?;
        *mu.as_mut().ok_or_else(|| null("mu"))? = value;
        Ok(())
    })
}

/// Builds an undirected graph from `num_edges` weighted pairs. A null
/// `weight` gives unit weights; repeated pairs accumulate.
///
/// # Safety
/// `src`, `dst` and a non-null `weight` must each hold `num_edges` elements.
#[no_mangle]
pub unsafe extern "C" fn cppr_graph_new(
    num_nodes: usize,
    src: *const usize,
    dst: *const usize,
    weight: *const f64,
    num_edges: usize,
    out: *mut *mut CpprGraph,
) -> CpprStatus {
    guard(|| {
        let src = slice(src, num_edges, "src")?;
        let dst = slice(dst, num_edges, "dst")?;
        let weight = if weight.is_null() {
            None
        } else {
            Some(slice(weight, num_edges, "weight")?)
        };
        let edges: Vec<_> = (0..num_edges)
            .map(|i| (src[i], dst[i], weight.map_or(1.0, |w| w[i])))
            .collect();
        put(out, CpprGraph(build_graph(&edges, num_nodes)?))
    })
}

/// # Safety
/// `graph` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cppr_graph_free(graph: *mut CpprGraph) {
    free(graph)
}

/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cppr_graph_num_nodes(graph: *const CpprGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_nodes())
}

/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cppr_graph_num_edges(graph: *const CpprGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_edges())
}

/// Builds an operator on `graph`. `gamma` applies to the gamma kinds, `sigma`
/// to the dual kinds and `m` to the iterated kind; the rest are ignored.
/// A `dense_limit` of 0 selects the default.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cppr_operator_new(
    graph: *const CpprGraph,
    kind: CpprOperatorKind,
    gamma: f64,
    sigma: f64,
    m: u32,
    dense_limit: usize,
    out: *mut *mut CpprOperator,
) -> CpprStatus {
    guard(|| {
        let g = borrow(graph, "graph")?;
        let kind = match kind {
            CpprOperatorKind::Standard => OperatorKind::Standard,
            CpprOperatorKind::Gamma => OperatorKind::Gamma { gamma },
            CpprOperatorKind::Iterated => OperatorKind::Iterated { m },
            CpprOperatorKind::Dual => OperatorKind::Dual { sigma },
            CpprOperatorKind::GammaDual => OperatorKind::GammaDual { gamma, sigma },
            CpprOperatorKind::Recentered => OperatorKind::Recentered,
        };
        let limit = if dense_limit == 0 { DEFAULT_DENSE_LIMIT } else { dense_limit };
        put(out, CpprOperator(make_operator(kind, &g.0, limit)?))
    })
}

/// The same operator on another graph, keeping its spectral bound.
///
/// # Safety
/// `op` and `graph` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cppr_operator_rebind(
    op: *const CpprOperator,
    graph: *const CpprGraph,
    out: *mut *mut CpprOperator,
) -> CpprStatus {
    guard(|| {
        let op = borrow(op, "operator")?;
        let g = borrow(graph, "graph")?;
        put(out, CpprOperator(op.0.rebind(&g.0, usize::MAX)?))
    })
}

/// Spectral bound of the operator, NaN for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cppr_operator_lambda_max(op: *const CpprOperator) -> f64 {
    op.as_ref().map_or(f64::NAN, |o| o.0.lambda_max())
}

/// # Safety
/// `op` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cppr_operator_free(op: *mut CpprOperator) {
    free(op)
}

/// Order-`order` Chebyshev solve of `(R + μI) p = μ y`. `y` and `scores`
/// hold `n` doubles, `n` being the node count; `messages` may be null.
///
/// # Safety
/// Handles must be live and buffers valid for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn cppr_solve(
    graph: *const CpprGraph,
    op: *const CpprOperator,
    mu: f64,
    y: *const f64,
    n: usize,
    order: usize,
    scores: *mut f64,
    messages: *mut u64,
) -> CpprStatus {
    guard(|| {
        let g = borrow(graph, "graph")?;
        let op = borrow(op, "operator")?;
        check_len(g.0.num_nodes(), n)?;
        let y = ScoreVector::new(slice(y, n, "y")?.to_vec());
        let mut ledger = MessageLedger::new(0.0);
        let p = solve_scratch(&g.0, &op.0, mu, &y, order, &mut ledger)?;
        slice_mut(scores, n, "scores")?.copy_from_slice(p.as_slice());
        if let Some(m) = messages.as_mut() {
            *m = ledger.total();
        }
        Ok(())
    })
}

/// Updates `pr_old`, the scores on `graph_old` under `op_old`, to
/// `graph_new` with an order-`order` local expansion.
///
/// # Safety
/// Handles must be live and buffers valid for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn cppr_update(
    graph_old: *const CpprGraph,
    graph_new: *const CpprGraph,
    op_old: *const CpprOperator,
    mu: f64,
    pr_old: *const f64,
    n: usize,
    order: usize,
    tau: f64,
    scores: *mut f64,
    messages: *mut u64,
) -> CpprStatus {
    guard(|| {
        let g_old = borrow(graph_old, "graph_old")?;
        let g_new = borrow(graph_new, "graph_new")?;
        let op = borrow(op_old, "op_old")?;
        check_len(g_old.0.num_nodes(), n)?;
        let pr = ScoreVector::new(slice(pr_old, n, "pr_old")?.to_vec());
        let result = update_local(&g_old.0, &g_new.0, &op.0, mu, &pr, order, tau)?;
        slice_mut(scores, n, "scores")?.copy_from_slice(result.scores.as_slice());
        if let Some(m) = messages.as_mut() {
            *m = result.ledger.total();
        }
        Ok(())
    })
}

/// Accurate solution of `(R + μI) p = μ y`, for checking approximations.
///
/// # Safety
/// Handles must be live and buffers valid for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn cppr_reference_solve(
    graph: *const CpprGraph,
    op: *const CpprOperator,
    mu: f64,
    y: *const f64,
    n: usize,
    scores: *mut f64,
) -> CpprStatus {
    guard(|| {
        let g = borrow(graph, "graph")?;
        let op = borrow(op, "operator")?;
        check_len(g.0.num_nodes(), n)?;
        let y = ScoreVector::new(slice(y, n, "y")?.to_vec());
        let p = reference_solve(&g.0, &op.0, mu, &y, DEFAULT_DENSE_LIMIT)?;
        slice_mut(scores, n, "scores")?.copy_from_slice(p.as_slice());
        Ok(())
    })
}

/// Reads a timestamped edge list, gzip or plain.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cppr_stream_open(path: *const c_char, out: *mut *mut CpprStream) -> CpprStatus {
    guard(|| {
        let path = text(path, "path")?;
        put(out, CpprStream(parse_edge_file(Path::new(path))?))
    })
}

/// A synthetic stream from a recipe such as `pa,2000,3` or `geo,1000,0.05`.
///
/// # Safety
/// `recipe` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cppr_stream_synthetic(
    recipe: *const c_char,
    seed: u64,
    out: *mut *mut CpprStream,
) -> CpprStatus {
    guard(|| {
        let recipe = SyntheticRecipe::parse(text(recipe, "recipe")?, seed)?;
        put(out, CpprStream(synthetic_stream(&recipe)?))
    })
}

/// The stream played backwards, so that events delete edges.
///
/// # Safety
/// `stream` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cppr_stream_reverse(stream: *const CpprStream, out: *mut *mut CpprStream) -> CpprStatus {
    guard(|| {
        let s = borrow(stream, "stream")?;
        put(out, CpprStream(reverse_time(&s.0)))
    })
}

/// # Safety
/// `stream` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cppr_stream_num_nodes(stream: *const CpprStream) -> usize {
    stream.as_ref().map_or(0, |s| s.0.num_nodes())
}

/// Snapshots are numbered `0..=count`, snapshot 0 holding no events.
///
/// # Safety
/// `stream` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cppr_stream_snapshot_count(stream: *const CpprStream) -> usize {
    stream.as_ref().map_or(0, |s| s.0.snapshot_count())
}

/// # Safety
/// `stream` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cppr_stream_snapshot(
    stream: *const CpprStream,
    k: usize,
    out: *mut *mut CpprGraph,
) -> CpprStatus {
    guard(|| {
        let s = borrow(stream, "stream")?;
        put(out, CpprGraph(s.0.snapshot_graph(k)?))
    })
}

/// External id of a dense node id, as written in the input file.
///
/// # Safety
/// `stream` must be a live handle and `id` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cppr_stream_external_id(stream: *const CpprStream, node: usize, id: *mut u64) -> CpprStatus {
    guard(|| {
        let s = borrow(stream, "stream")?;
        let value = s.0.external_id(node).ok_or(Error::NodeOutOfRange {
            id: node,
            num_nodes: s.0.num_nodes(),
        })?;
        *id.as_mut().ok_or_else(|| null("id"))? = value;
        Ok(())
    })
}

/// # Safety
/// `stream` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cppr_stream_free(stream: *mut CpprStream) {
    free(stream)
}
