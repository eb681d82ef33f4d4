//! C ABI over `rlnc_gossip`: scenario execution, graph metrics, analysis
//! helpers and validation suites.
//!
//! Every fallible call returns an [`RlncStatus`]; on failure a message is
//! kept per thread and read with [`rlnc_last_error_message`]. Handles are
//! opaque and released with their `_free` function. Strings returned by the
//! library are released with [`rlnc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rlnc_gossip::analysis::{negbin_tail_exact, pipelining_rounds, worst_case_pull_constants, PipelineConstants};
use rlnc_gossip::harness::validate::{validate, Suite};
use rlnc_gossip::harness::{run_prepared, write_aggregate_csv, write_raw_csv, ExperimentResult, Prepared, ScenarioConfig};
use rlnc_gossip::network::{
    conductance_lambda, induce_weighted, isoperimetric_h, min_cut_gamma, parse_edge_list, InduceModel, Topology,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlncStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Simulation = 4,
    Network = 5,
    Domain = 6,
    OutOfRange = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlncInduce {
    Push = 0,
    Pull = 1,
    Exchange = 2,
}

/// A validated scenario ready to run.
pub struct RlncScenario {
    inner: Prepared,
}

/// Outcome of running every trial of a scenario.
pub struct RlncResult {
    inner: ExperimentResult,
}

pub struct RlncGraph {
    inner: Topology,
}

/// Aggregate stopping-round statistics. Fields without a value (no trial
/// converged) are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlncStats {
    pub mean: f64,
    pub median: f64,
    pub p90: f64,
    pub p99: f64,
    pub min: f64,
    pub max: f64,
    pub stderr: f64,
    pub trials: u64,
    pub converged: u64,
    pub convergence_rate: f64,
    pub max_rounds: u64,
}

/// γ, h and λ of a graph; NaN when a metric is unavailable.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlncMetrics {
    pub n: usize,
    pub gamma: f64,
    pub h: f64,
    pub lambda: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(RlncStatus, String);

fn fail(status: RlncStatus, e: impl ToString) -> Fail {
    Fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RlncStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RlncStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            RlncStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(RlncStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(RlncStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| fail(RlncStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| fail(RlncStatus::NullPointer, format!("{name} is null")))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn rlnc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rlnc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a scenario config (flat `key = value` text).
/// `overrides` holds `n_overrides` strings of the form `key=value`.
///
/// # Safety
/// `text` is a NUL-terminated string; `overrides` points to `n_overrides`
/// such strings (or is NULL when `n_overrides` is 0); `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_scenario_new(
    text: *const c_char,
    overrides: *const *const c_char,
    n_overrides: usize,
    out: *mut *mut RlncScenario,
) -> RlncStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        let mut sets = Vec::with_capacity(n_overrides);
        if n_overrides > 0 {
            if overrides.is_null() {
                return Err(fail(RlncStatus::NullPointer, "overrides is null"));
            }
            for i in 0..n_overrides {
                sets.push(str_arg(*overrides.add(i), "override")?.to_string());
            }
        }
        let config = ScenarioConfig::from_text(text, &sets).map_err(|e| fail(RlncStatus::Config, e))?;
        let inner = Prepared::new(config).map_err(|e| fail(RlncStatus::Config, e))?;
        *out = Box::into_raw(Box::new(RlncScenario { inner }));
        Ok(())
    })
}

/// # Safety
/// `s` is NULL or a handle from [`rlnc_scenario_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rlnc_scenario_free(s: *mut RlncScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Round budget in effect for the scenario.
///
/// # Safety
/// `s` is a live scenario handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_scenario_max_rounds(s: *const RlncScenario, out: *mut u64) -> RlncStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(s, "scenario")?.inner.max_rounds;
        Ok(())
    })
}

/// Runs every trial. `threads` = 0 uses the config's setting.
///
/// # Safety
/// `s` is a live scenario handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_run(s: *const RlncScenario, threads: usize, out: *mut *mut RlncResult) -> RlncStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let s = handle(s, "scenario")?;
        let threads = if threads == 0 { s.inner.config.threads } else { Some(threads) };
        let inner = run_prepared(&s.inner, threads).map_err(|e| fail(RlncStatus::Simulation, e))?;
        *out = Box::into_raw(Box::new(RlncResult { inner }));
        Ok(())
    })
}

/// # Safety
/// `r` is NULL or a handle from [`rlnc_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rlnc_result_free(r: *mut RlncResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` is a live result handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_result_stats(r: *const RlncResult, out: *mut RlncStats) -> RlncStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let r = &handle(r, "result")?.inner;
        let s = &r.stats;
        let f = |v: Option<u64>| v.map_or(f64::NAN, |x| x as f64);
        *out = RlncStats {
            mean: s.mean.unwrap_or(f64::NAN),
            median: f(s.median),
            p90: f(s.p90),
            p99: f(s.p99),
            min: f(s.min),
            max: f(s.max),
            stderr: s.stderr.unwrap_or(f64::NAN),
            trials: s.trials,
            converged: s.converged,
            convergence_rate: s.convergence_rate,
            max_rounds: r.max_rounds,
        };
        Ok(())
    })
}

/// Stopping round of trial `trial`; `*converged` is false (and `*round`
/// 0) when the trial hit the round budget.
///
/// # Safety
/// `r` is a live result handle; `round` and `converged` are writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_result_stopping_round(
    r: *const RlncResult,
    trial: usize,
    round: *mut u64,
    converged: *mut bool,
) -> RlncStatus {
    guard(|| {
        let round = out_arg(round, "round")?;
        let converged = out_arg(converged, "converged")?;
        let recs = &handle(r, "result")?.inner.records;
        let rec = recs
            .get(trial)
            .ok_or_else(|| fail(RlncStatus::OutOfRange, format!("trial {trial} of {}", recs.len())))?;
        *round = rec.stopping_round.unwrap_or(0);
        *converged = rec.stopping_round.is_some();
        Ok(())
    })
}

/// Per-trial CSV; free with [`rlnc_string_free`].
///
/// # Safety
/// `r` is a live result handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_result_raw_csv(r: *const RlncResult, out: *mut *mut c_char) -> RlncStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let mut buf = Vec::new();
        write_raw_csv(&mut buf, &[&handle(r, "result")?.inner]).map_err(|e| fail(RlncStatus::Simulation, e))?;
        *out = owned_string(String::from_utf8_lossy(&buf).into_owned());
        Ok(())
    })
}

/// Aggregate CSV (header plus one row); free with [`rlnc_string_free`].
///
/// # Safety
/// `r` is a live result handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_result_aggregate_csv(r: *const RlncResult, out: *mut *mut c_char) -> RlncStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let mut buf = Vec::new();
        write_aggregate_csv(&mut buf, &[&handle(r, "result")?.inner]).map_err(|e| fail(RlncStatus::Simulation, e))?;
        *out = owned_string(String::from_utf8_lossy(&buf).into_owned());
        Ok(())
    })
}

/// Full result as JSON; free with [`rlnc_string_free`].
///
/// # Safety
/// `r` is a live result handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_result_json(r: *const RlncResult, out: *mut *mut c_char) -> RlncStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = serde_json::to_string(&handle(r, "result")?.inner).map_err(|e| fail(RlncStatus::Simulation, e))?;
        *out = owned_string(text);
        Ok(())
    })
}

/// Parses an edge list (`n <count> directed|undirected` header, then
/// `a b [p]` lines).
///
/// # Safety
/// `text` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_graph_parse(text: *const c_char, out: *mut *mut RlncGraph) -> RlncStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let inner = parse_edge_list(str_arg(text, "text")?).map_err(|e| fail(RlncStatus::Network, e))?;
        *out = Box::into_raw(Box::new(RlncGraph { inner }));
        Ok(())
    })
}

/// # Safety
/// `g` is NULL or a handle from [`rlnc_graph_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rlnc_graph_free(g: *mut RlncGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// γ, h and λ. Unweighted graphs get `induce` edge probabilities for γ and
/// λ; h and λ need at most 20 nodes and are NaN beyond that.
///
/// # Safety
/// `g` is a live graph handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_graph_metrics(g: *const RlncGraph, induce: RlncInduce, out: *mut RlncMetrics) -> RlncStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = &handle(g, "graph")?.inner;
        let model = match induce {
            RlncInduce::Push => InduceModel::Push,
            RlncInduce::Pull => InduceModel::Pull,
            RlncInduce::Exchange => InduceModel::Exchange,
        };
        let weighted = if g.is_weighted() {
            g.clone()
        } else {
            induce_weighted(g, model).map_err(|e| fail(RlncStatus::Network, e))?
        };
        let gamma = min_cut_gamma(&weighted).map_err(|e| fail(RlncStatus::Network, e))?.value;
        *out = RlncMetrics {
            n: g.n(),
            gamma,
            h: isoperimetric_h(g).map_or(f64::NAN, |m| m.value),
            lambda: conductance_lambda(&weighted).map_or(f64::NAN, |m| m.value),
        };
        Ok(())
    })
}

/// `P[at least t - T failures in t trials]` for failure probability `p`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_negbin_tail(t: u64, big_t: u64, p: f64, out: *mut f64) -> RlncStatus {
    guard(|| {
        *out_arg(out, "out")? = negbin_tail_exact(t, big_t, p).map_err(|e| fail(RlncStatus::Domain, e))?.value;
        Ok(())
    })
}

/// Round budget `coefficient·k + c·T + d` with `c` = 8.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_pipelining_rounds(k: u64, big_t: f64, p: f64, q: f64, d: u64, out: *mut u64) -> RlncStatus {
    guard(|| {
        *out_arg(out, "out")? =
            pipelining_rounds(k, big_t, p, q, d, PipelineConstants::default()).map_err(|e| fail(RlncStatus::Domain, e))?;
        Ok(())
    })
}

/// Lower and upper leading constants of worst-case PULL over `k`.
///
/// # Safety
/// `lower` and `upper` are writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_worst_case_pull_constants(i: f64, q: f64, lower: *mut f64, upper: *mut f64) -> RlncStatus {
    guard(|| {
        let lower = out_arg(lower, "lower")?;
        let upper = out_arg(upper, "upper")?;
        (*lower, *upper) = worst_case_pull_constants(i, q).map_err(|e| fail(RlncStatus::Domain, e))?;
        Ok(())
    })
}

/// Runs a validation suite by name (`lemma1`, `theorem1_dominance`,
/// `lemma9`, `lemma7`, `decode_equivalence`). `report_json` may be NULL;
/// otherwise it receives the report, freed with [`rlnc_string_free`].
///
/// # Safety
/// `suite` is a NUL-terminated string; `pass` is writable; `report_json`
/// is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn rlnc_validate(
    suite: *const c_char,
    seed: u64,
    pass: *mut bool,
    report_json: *mut *mut c_char,
) -> RlncStatus {
    guard(|| {
        let pass = out_arg(pass, "pass")?;
        let suite: Suite = str_arg(suite, "suite")?.parse().map_err(|e: String| fail(RlncStatus::Config, e))?;
        let report = validate(suite, seed).map_err(|e| fail(RlncStatus::Simulation, e))?;
        *pass = report.pass;
        if let Some(out) = report_json.as_mut() {
            *out = owned_string(serde_json::to_string(&report).map_err(|e| fail(RlncStatus::Simulation, e))?);
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    fn last_error() -> String {
        let p = rlnc_last_error_message();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
    }

    #[test]
    fn scenario_round_trip() {
        let text = c("n = 2\nk = 1\ncomm_model = \"sync_broadcast\"\ntrials = 200\nmax_rounds = 100\n");
        let set = c("seed=4");
        let sets = [set.as_ptr()];
        let mut s = ptr::null_mut();
        unsafe {
            assert_eq!(rlnc_scenario_new(text.as_ptr(), sets.as_ptr(), 1, &mut s), RlncStatus::Ok);
            assert!(rlnc_last_error_message().is_null());
            let mut m = 0;
            assert_eq!(rlnc_scenario_max_rounds(s, &mut m), RlncStatus::Ok);
            assert_eq!(m, 100);
            let mut r = ptr::null_mut();
            assert_eq!(rlnc_run(s, 1, &mut r), RlncStatus::Ok);
            let mut st = std::mem::zeroed::<RlncStats>();
            assert_eq!(rlnc_result_stats(r, &mut st), RlncStatus::Ok);
            assert_eq!((st.trials, st.converged), (200, 200));
            assert!(st.mean > 1.5 && st.mean < 2.5);
            let (mut round, mut conv) = (0, false);
            assert_eq!(rlnc_result_stopping_round(r, 0, &mut round, &mut conv), RlncStatus::Ok);
            assert!(conv && round >= 1);
            assert_eq!(rlnc_result_stopping_round(r, 200, &mut round, &mut conv), RlncStatus::OutOfRange);
            let mut csv = ptr::null_mut();
            assert_eq!(rlnc_result_raw_csv(r, &mut csv), RlncStatus::Ok);
            let text = CStr::from_ptr(csv).to_str().unwrap().to_string();
            assert!(text.starts_with("scenario_id,trial,seed,stopping_round,converged,innovative_total\n"));
            assert_eq!(text.lines().count(), 201);
            rlnc_string_free(csv);
            assert_eq!(rlnc_result_aggregate_csv(r, &mut csv), RlncStatus::Ok);
            rlnc_string_free(csv);
            assert_eq!(rlnc_result_json(r, &mut csv), RlncStatus::Ok);
            assert!(CStr::from_ptr(csv).to_str().unwrap().contains("chacha8"));
            rlnc_string_free(csv);
            rlnc_result_free(r);
            rlnc_scenario_free(s);
        }
    }

    #[test]
    fn errors_are_reported() {
        let mut s = ptr::null_mut();
        unsafe {
            assert_eq!(rlnc_scenario_new(ptr::null(), ptr::null(), 0, &mut s), RlncStatus::NullPointer);
            assert!(s.is_null());
            let bad = c("n = 2\nk = 0\ncomm_model = \"sync_push\"\n");
            assert_eq!(rlnc_scenario_new(bad.as_ptr(), ptr::null(), 0, &mut s), RlncStatus::Config);
            assert!(last_error().contains("`k`"), "{}", last_error());
            let bytes = [0xffu8, 0];
            assert_eq!(rlnc_scenario_new(bytes.as_ptr().cast(), ptr::null(), 0, &mut s), RlncStatus::InvalidUtf8);
            let mut v = 0.0;
            assert_eq!(rlnc_negbin_tail(1, 2, 0.5, &mut v), RlncStatus::Domain);
            assert_eq!(rlnc_negbin_tail(1, 0, 0.3, ptr::null_mut()), RlncStatus::NullPointer);
            rlnc_scenario_free(ptr::null_mut());
            rlnc_result_free(ptr::null_mut());
            rlnc_graph_free(ptr::null_mut());
            rlnc_string_free(ptr::null_mut());
        }
    }

    #[test]
    fn graph_metrics() {
        let text = c("n 4 undirected\n0 1\n1 2\n2 3\n3 0\n");
        let mut g = ptr::null_mut();
        unsafe {
            assert_eq!(rlnc_graph_parse(text.as_ptr(), &mut g), RlncStatus::Ok);
            let mut m = std::mem::zeroed::<RlncMetrics>();
            assert_eq!(rlnc_graph_metrics(g, RlncInduce::Exchange, &mut m), RlncStatus::Ok);
            assert_eq!((m.n, m.gamma, m.h, m.lambda), (4, 0.5, 1.0, 0.25));
            rlnc_graph_free(g);
            let bad = c("0 1\n");
            assert_eq!(rlnc_graph_parse(bad.as_ptr(), &mut g), RlncStatus::Network);
        }
    }

    #[test]
    fn analysis_helpers() {
        let (mut v, mut t, mut lo, mut up) = (0.0, 0u64, 0.0, 0.0);
        unsafe {
            assert_eq!(rlnc_negbin_tail(2, 1, 0.5, &mut v), RlncStatus::Ok);
            assert!((v - 0.75).abs() < 1e-15);
            assert_eq!(rlnc_pipelining_rounds(10, 3.0, 0.5, 2.0, 0, &mut t), RlncStatus::Ok);
            assert_eq!(t, 34);
            assert_eq!(rlnc_worst_case_pull_constants(1.0, 2.0, &mut lo, &mut up), RlncStatus::Ok);
            assert!((lo - 1.58197671).abs() < 1e-8 && (up - 1.82462135).abs() < 1e-8);
        }
    }

    #[test]
    fn validate_by_name() {
        let name = c("lemma7");
        let mut pass = false;
        let mut json = ptr::null_mut();
        unsafe {
            assert_eq!(rlnc_validate(name.as_ptr(), 0, &mut pass, &mut json), RlncStatus::Ok);
            assert!(pass);
            assert!(CStr::from_ptr(json).to_str().unwrap().contains("tail_bound_in_regime"));
            rlnc_string_free(json);
            let bad = c("lemma3");
            assert_eq!(rlnc_validate(bad.as_ptr(), 0, &mut pass, ptr::null_mut()), RlncStatus::Config);
        }
    }

    #[test]
    fn header_declares_api() {
        let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/rlnc_gossip.h")).unwrap();
        for name in ["rlnc_scenario_new", "rlnc_run", "rlnc_graph_metrics", "rlnc_last_error_message", "RlncStats"] {
            assert!(header.contains(name), "{name}");
        }
        assert!(header.contains("typedef struct RlncScenario RlncScenario;"));
    }
}
