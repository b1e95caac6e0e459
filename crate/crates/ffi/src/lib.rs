//! C ABI for the toolkit.
//!
//! Graphs live behind the opaque `NeGraph` handle. Every fallible function
//! returns an `NeStatus`; on failure `ne_last_error` describes the problem
//! until the next call on the same thread. Strings returned to C must be
//! released with `ne_string_free`.

use netecon::graph::load_edgelist;
use netecon::moments::{count_patterns, moment_covariance, parse_pattern, transitivity, transitivity_se, CovMode};
use netecon::strategic::{min_max_equilibria, MiyauchiParams, ShockDist, Shocks};
use netecon::{Error, Graph, Graphlet};
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NeStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad input or configuration.
    InvalidInput = 2,
    /// Estimation broke down numerically.
    Numerical = 3,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 4,
    /// Internal failure; the call had no effect.
    Panic = 5,
}

/// Shock law for the strategic model.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NeShockDist {
    Logistic = 0,
    Normal = 1,
}

/// Undirected or directed graph on `0..n`.
pub struct NeGraph {
    inner: Graph,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NeTransitivity {
    pub p_triangle: f64,
    pub p_two_star: f64,
    pub index: f64,
    pub index_injective: f64,
    /// Standard error from the exact covariance; NaN if not requested.
    pub se: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NeEquilibria {
    pub lower_edges: usize,
    pub upper_edges: usize,
    pub lower_sweeps: usize,
    pub upper_sweeps: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NeStatus {
    set_error(&e.to_string());
    if e.is_user_error() {
        NeStatus::InvalidInput
    } else {
        NeStatus::Numerical
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), NeStatus>) -> NeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NeStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            NeStatus::Panic
        }
    }
}

fn lift<T>(r: netecon::Result<T>) -> Result<T, NeStatus> {
    r.map_err(|e| status_of(&e))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), NeStatus> {
    if p.is_null() {
        set_error(&format!("{what} is null"));
        Err(NeStatus::NullPointer)
    } else {
        Ok(())
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, NeStatus> {
    non_null(p, what)?;
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not UTF-8"));
        NeStatus::InvalidUtf8
    })
}

unsafe fn graph_ref<'a>(g: *const NeGraph) -> Result<&'a Graph, NeStatus> {
    non_null(g, "graph")?;
    Ok(&(*g).inner)
}

unsafe fn emit_graph(g: Graph, out: *mut *mut NeGraph) {
    *out = Box::into_raw(Box::new(NeGraph { inner: g }));
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn ne_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a graph from `m` edges `(us[k], vs[k])`.
///
/// # Safety
/// `us` and `vs` must point to `m` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ne_graph_from_edges(
    n: usize,
    directed: bool,
    us: *const u32,
    vs: *const u32,
    m: usize,
    out: *mut *mut NeGraph,
) -> NeStatus {
    guard(|| {
        non_null(out, "out")?;
        if m > 0 {
            non_null(us, "us")?;
            non_null(vs, "vs")?;
        }
        let edges: Vec<(usize, usize)> = (0..m).map(|k| (*us.add(k) as usize, *vs.add(k) as usize)).collect();
        emit_graph(lift(Graph::from_edges(n, directed, &edges))?, out);
        Ok(())
    })
}

/// Parses an edge list (`u v` per line, `#` comments).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ne_graph_parse_edgelist(text_in: *const c_char, directed: bool, out: *mut *mut NeGraph) -> NeStatus {
    guard(|| {
        non_null(out, "out")?;
        let t = text(text_in, "text")?;
        emit_graph(lift(load_edgelist(t, directed, None))?.graph, out);
        Ok(())
    })
}

/// Erdos-Renyi draw.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ne_graph_sample_er(n: usize, rho: f64, seed: u64, out: *mut *mut NeGraph) -> NeStatus {
    guard(|| {
        non_null(out, "out")?;
        emit_graph(lift(netecon::graphon::sample_er(n, rho, seed))?, out);
        Ok(())
    })
}

/// Releases a graph; null is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ne_graph_free(g: *mut NeGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn ne_graph_node_count(g: *const NeGraph) -> usize {
    graph_ref(g).map_or(0, |g| g.n())
}

/// # Safety
/// `g` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn ne_graph_edge_count(g: *const NeGraph) -> usize {
    graph_ref(g).map_or(0, |g| g.edge_count())
}

/// Induced and injective density of a named pattern (`triangle`,
/// `twostar`, `edge`, `4cycle`, ...).
///
/// # Safety
/// `g` must be live; `pattern` NUL-terminated; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn ne_pattern_density(g: *const NeGraph, pattern: *const c_char, p_n: *mut f64, q_n: *mut f64) -> NeStatus {
    guard(|| {
        let g = graph_ref(g)?;
        non_null(p_n, "p_n")?;
        non_null(q_n, "q_n")?;
        let shape = lift(parse_pattern(text(pattern, "pattern")?))?;
        let est = lift(count_patterns(g, &[shape]))?;
        *p_n = est[0].p_n;
        *q_n = est[0].q_n;
        Ok(())
    })
}

/// Transitivity index; with `with_se` the exact covariance pass also runs.
///
/// # Safety
/// `g` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ne_transitivity(g: *const NeGraph, with_se: bool, out: *mut NeTransitivity) -> NeStatus {
    guard(|| {
        let g = graph_ref(g)?;
        non_null(out, "out")?;
        let t = lift(transitivity(g))?;
        let se = if with_se {
            let cov = lift(moment_covariance(g, &[Graphlet::triangle(), Graphlet::two_star()], CovMode::Exact))?;
            lift(transitivity_se(&cov))?
        } else {
            f64::NAN
        };
        *out = NeTransitivity {
            p_triangle: t.p_triangle,
            p_two_star: t.p_two_star,
            index: t.index,
            index_injective: t.index_injective,
            se,
        };
        Ok(())
    })
}

/// Minimum and maximum pairwise-stable networks for one shock draw.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ne_min_max_equilibria(
    n: usize,
    alpha: f64,
    beta: f64,
    dist: NeShockDist,
    seed: u64,
    replicate: u64,
    out: *mut NeEquilibria,
) -> NeStatus {
    guard(|| {
        non_null(out, "out")?;
        let dist = match dist {
            NeShockDist::Logistic => ShockDist::Logistic,
            NeShockDist::Normal => ShockDist::Normal,
        };
        let p = MiyauchiParams { alpha, beta, dist };
        let eq = lift(min_max_equilibria(&p, &Shocks::draw(n, dist, seed, replicate), replicate))?;
        *out = NeEquilibria {
            lower_edges: eq.lower.edge_count(),
            upper_edges: eq.upper.edge_count(),
            lower_sweeps: eq.sweeps_lower,
            upper_sweeps: eq.sweeps_upper,
        };
        Ok(())
    })
}

/// Runs a command-line invocation in process. `argv[0]` is the first
/// subcommand word (no program name). On success `*json_out` receives the
/// JSON document. Returns the command-line exit code (0, 2 or 3).
///
/// # Safety
/// `argv` must hold `argc` NUL-terminated strings; `json_out` writable.
#[no_mangle]
pub unsafe extern "C" fn ne_run_json(argc: c_int, argv: *const *const c_char, json_out: *mut *mut c_char) -> c_int {
    let r = catch_unwind(AssertUnwindSafe(|| -> Result<String, (c_int, String)> {
        if json_out.is_null() || (argc > 0 && argv.is_null()) {
            return Err((2, "null argument".into()));
        }
        *json_out = ptr::null_mut();
        let mut args = vec!["netecon".to_string()];
        for k in 0..argc.max(0) as usize {
            let a = text(*argv.add(k), "argument").map_err(|_| (2, "argument is not UTF-8".to_string()))?;
            args.push(a.to_string());
        }
        netecon::cli::run_capture(args)
    }));
    match r {
        Ok(Ok(doc)) => {
            *json_out = CString::new(doc).map_or(ptr::null_mut(), CString::into_raw);
            0
        }
        Ok(Err((code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            3
        }
    }
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ne_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
