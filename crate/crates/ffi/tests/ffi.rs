use std::ffi::{CStr, CString};
use std::ptr;

use copsl::config::RunConfig;
use copsl::problems::ProblemId;
use copsl_ffi::*;

fn small_toml(problem: ProblemId) -> CString {
    let mut c = RunConfig::default_for(problem);
    c.initial_evals = 8;
    c.n1 = 1;
    c.n2 = 1;
    c.b1 = 3;
    c.b2 = 3;
    c.med_count = 10;
    c.hidden = vec![8];
    c.train.steps = 5;
    c.train.candidates = 30;
    c.gp.restarts = 2;
    c.gp.warm_restarts = 1;
    c.gp.max_steps = 20;
    c.nsga2.population = 20;
    c.nsga2.generations = 5;
    CString::new(c.to_toml()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(copsl_last_error_message()) }.to_string_lossy().into_owned()
}

fn finished_session() -> *mut CopslSession {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(copsl_session_new(small_toml(ProblemId::Vlmop2).as_ptr(), &mut s), CopslStatus::Ok);
        let mut done = 0;
        while done == 0 {
            assert_eq!(copsl_session_step(s, &mut done), CopslStatus::Ok, "{}", last_error());
        }
    }
    s
}

#[test]
fn session_lifecycle() {
    let s = finished_session();
    unsafe {
        let (mut n, mut m) = (0, 0);
        assert_eq!(copsl_session_dims(s, &mut n, &mut m), CopslStatus::Ok);
        assert_eq!((n, m), (6, 2));
        let (mut used, mut remaining) = (0, 0);
        copsl_session_budget(s, &mut used, &mut remaining);
        assert_eq!((used, remaining), (14, 0));
        let mut hv = 0.0;
        assert_eq!(copsl_session_hypervolume(s, &mut hv), CopslStatus::Ok);
        assert!(hv > 0.0);

        let pref = [1.0, 3.0];
        let mut x = [0.0; 6];
        assert_eq!(copsl_session_solution(s, pref.as_ptr(), 2, x.as_mut_ptr(), 6), CopslStatus::Ok);
        assert!(x.iter().all(|v| (-2.0..=2.0).contains(v)));
        let mut x2 = [0.0; 6];
        let scaled = [0.25, 0.75];
        copsl_session_solution(s, scaled.as_ptr(), 2, x2.as_mut_ptr(), 6);
        assert_eq!(x, x2);

        let mut y = [0.0; 2];
        assert_eq!(copsl_session_evaluate(s, x.as_ptr(), 6, y.as_mut_ptr(), 2), CopslStatus::BudgetExhausted);
        assert!(last_error().contains("budget"));
        copsl_session_free(s);
    }
}

#[test]
fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("c.json").to_str().unwrap()).unwrap();
    let s = finished_session();
    unsafe {
        assert_eq!(copsl_session_save(s, path.as_ptr()), CopslStatus::Ok);
        let mut hv = 0.0;
        copsl_session_hypervolume(s, &mut hv);
        copsl_session_free(s);
        let mut t = ptr::null_mut();
        assert_eq!(copsl_session_open(path.as_ptr(), &mut t), CopslStatus::Ok, "{}", last_error());
        let mut hv2 = 0.0;
        copsl_session_hypervolume(t, &mut hv2);
        assert_eq!(hv.to_bits(), hv2.to_bits());
        copsl_session_free(t);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut s = ptr::null_mut();
        let missing = CString::new("/nonexistent/checkpoint.json").unwrap();
        assert_eq!(copsl_session_open(missing.as_ptr(), &mut s), CopslStatus::Io);
        assert!(s.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(copsl_session_open(ptr::null(), &mut s), CopslStatus::NullPointer);
        let bad = CString::new("problem = \"dtlz2\"").unwrap();
        assert_eq!(copsl_session_new(bad.as_ptr(), &mut s), CopslStatus::Config);

        assert_eq!(copsl_session_new(small_toml(ProblemId::Vlmop2).as_ptr(), &mut s), CopslStatus::Ok);
        assert!(last_error().is_empty());
        let pref = [0.5, 0.5];
        let mut x = [0.0; 6];
        assert_eq!(copsl_session_solution(s, pref.as_ptr(), 2, x.as_mut_ptr(), 6), CopslStatus::NoModel);
        let neg = [-1.0, 2.0];
        assert_eq!(copsl_session_solution(s, neg.as_ptr(), 2, x.as_mut_ptr(), 6), CopslStatus::InvalidArgument);
        let mut done = 0;
        copsl_session_step(s, &mut done);
        let far = [9.0; 6];
        let mut y = [0.0; 2];
        assert_eq!(copsl_session_evaluate(s, far.as_ptr(), 6, y.as_mut_ptr(), 2), CopslStatus::OutOfBounds);
        let inside = [0.0; 6];
        assert_eq!(copsl_session_evaluate(s, inside.as_ptr(), 6, y.as_mut_ptr(), 3), CopslStatus::InvalidArgument);
        assert_eq!(copsl_session_step(ptr::null_mut(), &mut done), CopslStatus::NullPointer);
        copsl_session_free(s);
        copsl_session_free(ptr::null_mut());
    }
}

#[test]
fn standalone_hypervolume() {
    let pts = [0.0, 1.0, 1.0, 0.0, 0.5, 0.5];
    let reference = [2.0, 2.0];
    let mut hv = 0.0;
    unsafe {
        assert_eq!(copsl_hypervolume(pts.as_ptr(), 3, 2, reference.as_ptr(), &mut hv), CopslStatus::Ok);
        assert!((hv - 3.25).abs() < 1e-12);
        assert_eq!(copsl_hypervolume(ptr::null(), 0, 2, reference.as_ptr(), &mut hv), CopslStatus::Ok);
        assert_eq!(hv, 0.0);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(copsl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/copsl.h");
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler on PATH; header check skipped");
        return;
    };
    assert!(status.success());
}
