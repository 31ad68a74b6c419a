use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use crowdvet_ffi::*;

fn last_error() -> String {
    let p = cv_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn fixture(name: &str, eps: f64) -> *mut CvWorld {
    let name = CString::new(name).unwrap();
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { cv_world_from_fixture(name.as_ptr(), eps, &mut w) }, CvStatus::Ok);
    assert!(!w.is_null());
    w
}

#[test]
fn bounds_through_the_c_abi() {
    let mut r = 0usize;
    let s = unsafe { cv_rounds_bound_theorem1(10, 115, 1.0 / 3.0, 5, 115, 0.5, &mut r) };
    assert_eq!((s, r), (CvStatus::Ok, 77));
    assert_eq!(unsafe { cv_rounds_bound_baseline((-2f64).exp(), 1.0 / 3.0, &mut r) }, CvStatus::Ok);
    assert_eq!(r, 9);
    assert_eq!(unsafe { cv_rounds_bound_theorem1(10, 115, 0.3, 0, 115, 0.5, &mut r) }, CvStatus::Domain);
    assert!(last_error().contains("τ"));
    assert_eq!(unsafe { cv_rounds_bound_baseline(0.1, 0.1, ptr::null_mut()) }, CvStatus::NullPointer);
}

#[test]
fn fixture_world_queries() {
    let w = fixture("fig3", 0.5);
    assert_eq!(unsafe { cv_world_size(w) }, 14);
    let mut tau = 0i64;
    assert_eq!(unsafe { cv_world_min_tau(w, &mut tau) }, CvStatus::Ok);
    assert!(tau >= 1);
    let mut l2 = 0.0;
    assert_eq!(unsafe { cv_world_algebraic_connectivity(w, &mut l2) }, CvStatus::Ok);
    assert!(l2 > 0.0);
    unsafe { cv_world_free(w) };

    let bad = CString::new("no-such-fixture").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { cv_world_from_fixture(bad.as_ptr(), 0.3, &mut out) }, CvStatus::InvalidInput);
    assert!(out.is_null());
    assert_eq!(unsafe { cv_world_from_fixture(ptr::null(), 0.3, &mut out) }, CvStatus::NullPointer);
}

#[test]
fn perfect_channel_trust_is_ground_truth() {
    let w = fixture("complete(l=4,h=1,s=2)", 0.5);
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { cv_find_spoofed_robots(w, 1, 7, &mut t) }, CvStatus::Ok);
    let mut ok = false;
    assert_eq!(unsafe { cv_trust_all_correct(t, w, &mut ok) }, CvStatus::Ok);
    assert!(ok);
    let mut e = 0i32;
    // Ordering is legitimate, hidden, spoofed.
    assert_eq!(unsafe { cv_trust_entry(t, 0, 4, &mut e) }, CvStatus::Ok);
    assert_eq!(e, CV_TRUST);
    assert_eq!(unsafe { cv_trust_entry(t, 0, 5, &mut e) }, CvStatus::Ok);
    assert_eq!(e, CV_DISTRUST);
    assert_eq!(unsafe { cv_trust_entry(t, 5, 0, &mut e) }, CvStatus::InvalidInput);
    assert_eq!(unsafe { cv_trust_entry(t, 0, 99, &mut e) }, CvStatus::InvalidInput);
    assert_eq!(unsafe { cv_find_spoofed_robots(w, 0, 7, &mut t) }, CvStatus::InvalidInput);
    unsafe {
        cv_trust_free(t);
        cv_world_free(w);
        cv_trust_free(ptr::null_mut());
        cv_world_free(ptr::null_mut());
    }
}

#[test]
fn edge_list_world() {
    let edges = [0usize, 1, 1, 2, 0, 2, 2, 3];
    let roles = [CV_ROLE_LEGITIMATE, CV_ROLE_LEGITIMATE, CV_ROLE_LEGITIMATE, CV_ROLE_SPOOFED];
    let mut w = ptr::null_mut();
    let s = unsafe { cv_world_from_edges(4, edges.as_ptr(), 4, roles.as_ptr(), 0.3, &mut w) };
    assert_eq!(s, CvStatus::Ok);
    let mut tau = 0;
    assert_eq!(unsafe { cv_world_min_tau(w, &mut tau) }, CvStatus::Ok);
    // Robot 2 and the spoofed robot 3 share only robot 2.
    assert_eq!(tau, 1);
    unsafe { cv_world_free(w) };
    let roles = [0u8, 0, 9, 0];
    assert_eq!(
        unsafe { cv_world_from_edges(4, edges.as_ptr(), 4, roles.as_ptr(), 0.3, &mut w) },
        CvStatus::InvalidInput
    );
    assert!(last_error().contains("role code"));
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(cv_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/crowdvet.h");
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header]).output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
