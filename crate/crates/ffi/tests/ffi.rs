use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use blindmatch_ffi::*;

fn matrices(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for k in i..n {
            let (x, y) = (next(), next());
            a[i * n + k] = x;
            a[k * n + i] = x;
            b[i * n + k] = y;
            b[k * n + i] = y;
        }
    }
    (a, b)
}

fn brute_force(a: &[f64], b: &[f64], n: usize) -> f64 {
    fn rec(a: &[f64], b: &[f64], n: usize, p: &mut Vec<usize>, used: &mut Vec<bool>, best: &mut f64) {
        if p.len() == n {
            let mut s = 0.0;
            for i in 0..n {
                for k in 0..n {
                    s += a[i * n + k] * b[p[i] * n + p[k]];
                }
            }
            *best = best.min(s);
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                p.push(j);
                rec(a, b, n, p, used, best);
                p.pop();
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(a, b, n, &mut Vec::new(), &mut vec![false; n], &mut best);
    best
}

unsafe fn build(a: &[f64], b: &[f64], n: usize, balanced: bool) -> *mut BmQap {
    let mut q = ptr::null_mut();
    assert_eq!(bm_qap_from_factors(a.as_ptr(), b.as_ptr(), n, 1.0, 0.0, balanced, &mut q), BmStatus::Ok);
    q
}

#[test]
fn solve_round_trip_brackets_optimum() {
    let n = 6;
    for seed in 0..4 {
        let (a, b) = matrices(n, seed);
        let opt = brute_force(&a, &b, n);
        unsafe {
            let q = build(&a, &b, n, seed % 2 == 1);
            assert_eq!(bm_qap_size(q), n);

            let cfg = bm_hahn_grant_config_default();
            let mut rep = ptr::null_mut();
            assert_eq!(bm_solve_hahn_grant(q, &cfg, &mut rep), BmStatus::Ok);
            assert_eq!(bm_report_size(rep), n);
            let primal = bm_report_primal_cost(rep);
            let dual = bm_report_dual_bound(rep);
            assert!(dual <= opt + 1e-9, "dual {dual} above {opt}");
            assert!(primal >= opt - 1e-9);

            let mut perm = vec![0usize; n];
            assert_eq!(bm_report_permutation(rep, perm.as_mut_ptr(), n), BmStatus::Ok);
            let mut value = 0.0;
            assert_eq!(bm_qap_objective(q, perm.as_ptr(), n, &mut value), BmStatus::Ok);
            assert!((value - primal).abs() < 1e-9);

            let json = bm_report_to_json(rep);
            assert!(!json.is_null());
            let text = CStr::from_ptr(json).to_str().unwrap();
            let parsed: serde_json::Value = serde_json::from_str(text).unwrap();
            assert_eq!(parsed["primal_perm"].as_array().unwrap().len(), n);
            bm_string_free(json);
            bm_report_free(rep);

            let mut exact = ptr::null_mut();
            assert_eq!(bm_solve_enumeration(q, &mut exact), BmStatus::Ok);
            assert!((bm_report_primal_cost(exact) - opt).abs() < 1e-9);
            assert!(bm_report_converged(exact));
            bm_report_free(exact);
            bm_qap_free(q);
        }
    }
}

#[test]
fn asymmetric_factors_are_solved_exactly() {
    let n = 5;
    let (mut a, b) = matrices(n, 21);
    for i in 0..n {
        for k in 0..i {
            a[i * n + k] = -a[i * n + k];
        }
    }
    let opt = brute_force(&a, &b, n);
    unsafe {
        let q = build(&a, &b, n, true);
        let mut exact = ptr::null_mut();
        assert_eq!(bm_solve_enumeration(q, &mut exact), BmStatus::Ok);
        assert!((bm_report_primal_cost(exact) - opt).abs() < 1e-9);
        let mut rep = ptr::null_mut();
        assert_eq!(bm_solve_hahn_grant(q, ptr::null(), &mut rep), BmStatus::Ok);
        assert!(bm_report_dual_bound(rep) <= opt + 1e-9);
        bm_report_free(rep);
        bm_report_free(exact);
        bm_qap_free(q);
    }
}

#[test]
fn null_config_uses_defaults() {
    let (a, b) = matrices(4, 9);
    unsafe {
        let q = build(&a, &b, 4, true);
        let mut rep = ptr::null_mut();
        assert_eq!(bm_solve_hahn_grant(q, ptr::null(), &mut rep), BmStatus::Ok);
        assert!(bm_report_iterations(rep) >= 1);
        bm_report_free(rep);
        bm_qap_free(q);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut q = ptr::null_mut();
        let status = bm_qap_from_factors(ptr::null(), ptr::null(), 3, 1.0, 0.0, false, &mut q);
        assert_eq!(status, BmStatus::NullPointer);
        assert!(q.is_null());
        let msg = CStr::from_ptr(bm_last_error_message()).to_str().unwrap();
        assert!(msg.contains("null"), "{msg}");

        let b = [0.0, 1.0, 1.0, 0.0];
        let nan = [0.0, f64::NAN, f64::NAN, 0.0];
        assert_eq!(bm_qap_from_factors(nan.as_ptr(), b.as_ptr(), 2, 1.0, 0.0, false, &mut q), BmStatus::NonFinite);

        let q = build(&b, &b, 2, false);
        let bad = [1usize, 1];
        let mut out = 0.0;
        assert_eq!(bm_qap_objective(q, bad.as_ptr(), 2, &mut out), BmStatus::InvalidPermutation);
        let mut rep = ptr::null_mut();
        assert_eq!(bm_solve_enumeration(q, &mut rep), BmStatus::Ok);
        let mut small = [0usize; 1];
        assert_eq!(bm_report_permutation(rep, small.as_mut_ptr(), 1), BmStatus::ShapeMismatch);
        assert!(!CStr::from_ptr(bm_last_error_message()).to_bytes().is_empty());
        bm_report_free(rep);
        bm_qap_free(q);
    }
}

#[test]
fn bad_config_is_rejected() {
    let (a, b) = matrices(4, 2);
    unsafe {
        let q = build(&a, &b, 4, false);
        let mut cfg = bm_hahn_grant_config_default();
        cfg.tol_gap = -1.0;
        let mut rep = ptr::null_mut();
        assert_eq!(bm_solve_hahn_grant(q, &cfg, &mut rep), BmStatus::Config);
        assert!(rep.is_null());
        bm_qap_free(q);
    }
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        bm_qap_free(ptr::null_mut());
        bm_report_free(ptr::null_mut());
        bm_string_free(ptr::null_mut());
        assert_eq!(bm_qap_size(ptr::null()), 0);
        assert!(bm_report_primal_cost(ptr::null()).is_nan());
        assert!(!bm_report_converged(ptr::null()));
        assert!(bm_report_to_json(ptr::null()).is_null());
        let mut rep = ptr::null_mut();
        assert_eq!(bm_solve_enumeration(ptr::null(), &mut rep), BmStatus::NullPointer);
    }
    let v = unsafe { CStr::from_ptr(bm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn lap_matches_brute_force() {
    let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
    let mut assignment = [0usize; 3];
    let mut objective = 0.0;
    let status = unsafe { bm_lap_jv(cost.as_ptr(), 3, assignment.as_mut_ptr(), &mut objective) };
    assert_eq!(status, BmStatus::Ok);
    assert_eq!(objective, 5.0);
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i * 3 + j]).sum();
    assert_eq!(total, objective);
}

#[test]
fn header_is_current_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/blindmatch.h")).unwrap();
    for name in [
        "bm_qap_from_factors",
        "bm_solve_hahn_grant",
        "bm_solve_enumeration",
        "bm_report_to_json",
        "bm_last_error_message",
        "bm_lap_jv",
        "typedef struct BmQap BmQap",
        "BM_STATUS_NULL_POINTER = 64",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", "-"])
        .arg(format!("-I{}", dir.join("include").display()))
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .and_then(|mut child| {
            use std::io::Write;
            child.stdin.take().unwrap().write_all(b"#include \"blindmatch.h\"\nint main(void) { BmHahnGrantConfig c = bm_hahn_grant_config_default(); return (int)c.lap; }\n")?;
            child.wait_with_output()
        })
    else {
        eprintln!("no C compiler available, skipping header compile");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
