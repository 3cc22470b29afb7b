//! C interface to the agreement-forest solvers.
//!
//! Trees and results are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`MafStatus`]; on failure, [`maf_last_error_message`] describes the error
//! raised most recently on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use maf::phylo::{parse_newick, PhyloTree, TreeKind};
use maf::{solve_min, Algorithm, MafError, SolveResult};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MafStatus {
    Ok = 0,
    /// No agreement forest within the requested number of cuts.
    Infeasible = 1,
    NullArgument = 2,
    InvalidUtf8 = 3,
    Parse = 4,
    /// Trees differ in kind or taxon set, or an argument is out of range.
    InvalidInput = 5,
    /// The oracle gave up or the solver hit an inconsistency.
    Internal = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MafKind {
    Rooted = 0,
    Unrooted = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MafAlgorithm {
    Improved = 0,
    Baseline = 1,
    Oracle = 2,
}

/// A parsed binary tree.
pub struct MafTree(PhyloTree);

/// The outcome of [`maf_solve`].
pub struct MafResult {
    tree: PhyloTree,
    result: SolveResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &MafError) -> MafStatus {
    match e {
        MafError::Parse { .. } | MafError::DuplicateLabel(_) | MafError::EmptyLabel | MafError::Degree(_) => {
            MafStatus::Parse
        }
        MafError::Internal(_) | MafError::NodeLimit(_) | MafError::Io(_) => MafStatus::Internal,
        _ => MafStatus::InvalidInput,
    }
}

/// Run `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<MafStatus, (MafStatus, String)>) -> MafStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside the solver".into());
            MafStatus::Panic
        }
    }
}

fn fail(e: MafError) -> (MafStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, (MafStatus, String)> {
    if p.is_null() {
        return Err((MafStatus::NullArgument, "null string argument".into()));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (MafStatus::InvalidUtf8, "string is not valid UTF-8".into()))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Parse one Newick tree. On success `*out` receives a handle to release
/// with [`maf_tree_free`].
///
/// # Safety
/// `newick` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn maf_tree_parse(newick: *const c_char, kind: MafKind, out: *mut *mut MafTree) -> MafStatus {
    guard(|| {
        if out.is_null() {
            return Err((MafStatus::NullArgument, "null output pointer".into()));
        }
        *out = ptr::null_mut();
        let s = text(newick)?;
        let kind = match kind {
            MafKind::Rooted => TreeKind::Rooted,
            MafKind::Unrooted => TreeKind::Unrooted,
        };
        let tree = parse_newick(s, kind).map_err(fail)?;
        *out = Box::into_raw(Box::new(MafTree(tree)));
        Ok(MafStatus::Ok)
    })
}

/// # Safety
/// `tree` must come from [`maf_tree_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn maf_tree_free(tree: *mut MafTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Number of taxa of a tree, or 0 for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn maf_tree_taxon_count(tree: *const MafTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.num_taxa())
}

/// Canonical Newick text of a tree; release with [`maf_string_free`].
/// Null for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn maf_tree_to_newick(tree: *const MafTree) -> *mut c_char {
    match tree.as_ref() {
        Some(t) => owned_string(t.0.to_newick()),
        None => ptr::null_mut(),
    }
}

/// Minimum number of cuts turning `second` into an agreement forest with
/// `first`. `max_k < 0` searches up to one less than the number of taxa.
/// Returns `Ok` or `Infeasible` with a result handle in `*out` either way.
///
/// # Safety
/// `first` and `second` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn maf_solve(
    first: *const MafTree,
    second: *const MafTree,
    algorithm: MafAlgorithm,
    max_k: i64,
    out: *mut *mut MafResult,
) -> MafStatus {
    guard(|| {
        if out.is_null() {
            return Err((MafStatus::NullArgument, "null output pointer".into()));
        }
        *out = ptr::null_mut();
        let (Some(t1), Some(t2)) = (first.as_ref(), second.as_ref()) else {
            return Err((MafStatus::NullArgument, "null tree handle".into()));
        };
        let algo = match algorithm {
            MafAlgorithm::Improved => Algorithm::Improved,
            MafAlgorithm::Baseline => Algorithm::Baseline,
            MafAlgorithm::Oracle => Algorithm::Oracle,
        };
        let cap = usize::try_from(max_k).ok();
        let result = solve_min(&t1.0, &t2.0, algo, cap).map_err(fail)?;
        let status = if result.min_cuts.is_some() { MafStatus::Ok } else { MafStatus::Infeasible };
        *out = Box::into_raw(Box::new(MafResult { tree: t1.0.clone(), result }));
        Ok(status)
    })
}

/// # Safety
/// `result` must come from [`maf_solve`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn maf_result_free(result: *mut MafResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Minimum number of cuts, or -1 if infeasible or the handle is null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn maf_result_min_cuts(result: *const MafResult) -> i64 {
    result.as_ref().and_then(|r| r.result.min_cuts).map_or(-1, |k| k as i64)
}

/// Number of forest components, or 0 if infeasible or the handle is null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn maf_result_component_count(result: *const MafResult) -> usize {
    result.as_ref().and_then(|r| r.result.components()).unwrap_or(0)
}

/// Search-tree nodes visited over all budgets tried.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn maf_result_recursion_nodes(result: *const MafResult) -> u64 {
    result.as_ref().map_or(0, |r| r.result.stats.nodes)
}

/// Labels of component `index`, comma separated; release with
/// [`maf_string_free`]. Null if out of range.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn maf_result_component(result: *const MafResult, index: usize) -> *mut c_char {
    let Some(r) = result.as_ref() else { return ptr::null_mut() };
    match r.result.forest.as_ref().and_then(|f| f.get(index)) {
        Some(block) => owned_string(r.tree.label_set(block).join(",")),
        None => ptr::null_mut(),
    }
}

/// Message of the last error raised on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn maf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn maf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
