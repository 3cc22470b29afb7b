use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use maf_ffi::*;

fn parse(s: &str, kind: MafKind) -> (MafStatus, *mut MafTree) {
    let c = CString::new(s).unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { maf_tree_parse(c.as_ptr(), kind, &mut out) };
    (st, out)
}

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { maf_string_free(s) };
    out
}

#[test]
fn solve_round_trip() {
    let (s1, a) = parse("((a,b),c);", MafKind::Rooted);
    let (s2, b) = parse("((b,c),a);", MafKind::Rooted);
    assert_eq!((s1, s2), (MafStatus::Ok, MafStatus::Ok));
    assert_eq!(unsafe { maf_tree_taxon_count(a) }, 3);
    assert_eq!(take(unsafe { maf_tree_to_newick(a) }), "((a,b),c);");
    for algo in [MafAlgorithm::Improved, MafAlgorithm::Baseline, MafAlgorithm::Oracle] {
        let mut r = ptr::null_mut();
        assert_eq!(unsafe { maf_solve(a, b, algo, -1, &mut r) }, MafStatus::Ok);
        assert_eq!(unsafe { maf_result_min_cuts(r) }, 1);
        assert_eq!(unsafe { maf_result_component_count(r) }, 2);
        let blocks: Vec<String> = (0..2).map(|i| take(unsafe { maf_result_component(r, i) })).collect();
        assert_eq!(blocks.iter().map(|b| b.split(',').count()).sum::<usize>(), 3);
        assert!(unsafe { maf_result_component(r, 2) }.is_null());
        unsafe { maf_result_free(r) };
    }
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { maf_solve(a, b, MafAlgorithm::Improved, 0, &mut r) }, MafStatus::Infeasible);
    assert_eq!(unsafe { maf_result_min_cuts(r) }, -1);
    assert_eq!(unsafe { maf_result_component_count(r) }, 0);
    unsafe {
        maf_result_free(r);
        maf_tree_free(a);
        maf_tree_free(b);
    }
}

#[test]
fn errors_are_reported() {
    let (st, t) = parse("((a,b),(a,c));", MafKind::Rooted);
    assert_eq!(st, MafStatus::Parse);
    assert!(t.is_null());
    let msg = unsafe { CStr::from_ptr(maf_last_error_message()) }.to_str().unwrap();
    assert!(msg.contains("duplicate"), "{msg}");

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { maf_tree_parse(ptr::null(), MafKind::Rooted, &mut out) }, MafStatus::NullArgument);

    let (_, a) = parse("((a,b),c);", MafKind::Rooted);
    let (_, b) = parse("((a,b),d);", MafKind::Rooted);
    let (_, u) = parse("((a,b),c);", MafKind::Unrooted);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { maf_solve(a, b, MafAlgorithm::Improved, -1, &mut r) }, MafStatus::InvalidInput);
    assert!(r.is_null());
    assert_eq!(unsafe { maf_solve(a, u, MafAlgorithm::Improved, -1, &mut r) }, MafStatus::InvalidInput);
    assert_eq!(unsafe { maf_solve(a, ptr::null(), MafAlgorithm::Improved, -1, &mut r) }, MafStatus::NullArgument);
    unsafe {
        maf_tree_free(a);
        maf_tree_free(b);
        maf_tree_free(u);
        maf_tree_free(ptr::null_mut());
        maf_result_free(ptr::null_mut());
        maf_string_free(ptr::null_mut());
    }
    assert_eq!(unsafe { maf_result_min_cuts(ptr::null()) }, -1);
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header().join("maf.h")).unwrap();
    for name in [
        "maf_tree_parse",
        "maf_tree_free",
        "maf_tree_taxon_count",
        "maf_tree_to_newick",
        "maf_solve",
        "maf_result_free",
        "maf_result_min_cuts",
        "maf_result_component_count",
        "maf_result_recursion_nodes",
        "maf_result_component",
        "maf_last_error_message",
        "maf_string_free",
        "typedef struct MafTree MafTree",
        "MAF_STATUS_INFEASIBLE",
    ] {
        assert!(h.contains(name), "{name} missing from maf.h");
    }
}

/// Compile and run a C program against the header and the static library,
/// when a C compiler is present.
#[test]
fn c_program_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libmaf_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let exe = std::env::temp_dir().join(format!("maf-ffi-smoke-{}", std::process::id()));
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-I")
        .arg(header())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    let _ = std::fs::remove_file(&exe);
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1);
}
