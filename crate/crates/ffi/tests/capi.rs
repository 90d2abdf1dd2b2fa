use std::ffi::{CStr, CString};
use std::ptr;

use salem_ffi::*;

fn build_fixture(seed: u64) -> *mut SalemTree {
    let x = [2u64, 4, 8, 10];
    let mut tree = ptr::null_mut();
    let status = unsafe { salem_tree_build_a(25, x.as_ptr(), x.len(), 0.4, 4, seed, &mut tree) };
    assert_eq!(status, SalemStatus::Ok);
    assert!(!tree.is_null());
    tree
}

fn last_error() -> String {
    let p = salem_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn fixture_round_trip_through_handles() {
    let tree = build_fixture(7);
    assert_eq!(unsafe { salem_tree_depth(tree) }, 4);

    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { salem_mu_hat(tree, 4, 0, &mut re, &mut im) }, SalemStatus::Ok);
    assert!((re - 1.0).abs() < 1e-12 && im.abs() < 1e-12);

    let ks = [-3i64, 0, 5, 17];
    let (mut res, mut ims) = ([0.0; 4], [0.0; 4]);
    let status = unsafe { salem_mu_hat_batch(tree, 4, ks.as_ptr(), ks.len(), res.as_mut_ptr(), ims.as_mut_ptr()) };
    assert_eq!(status, SalemStatus::Ok);
    for (i, &k) in ks.iter().enumerate() {
        unsafe { salem_mu_hat(tree, 4, k, &mut re, &mut im) };
        assert_eq!((re.to_bits(), im.to_bits()), (res[i].to_bits(), ims[i].to_bits()));
    }

    let mut certified = false;
    assert_eq!(unsafe { salem_verify_ap(tree, 4, false, &mut certified) }, SalemStatus::Ok);
    assert!(certified);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("t.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { salem_tree_save(tree, path.as_ptr(), false) }, SalemStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { salem_tree_load(path.as_ptr(), &mut loaded) }, SalemStatus::Ok);
    let (mut re2, mut im2) = (0.0, 0.0);
    unsafe {
        salem_mu_hat(tree, 4, 123, &mut re, &mut im);
        salem_mu_hat(loaded, 4, 123, &mut re2, &mut im2);
    }
    assert_eq!((re.to_bits(), im.to_bits()), (re2.to_bits(), im2.to_bits()));

    unsafe {
        salem_tree_free(loaded);
        salem_tree_free(tree);
    }
}

#[test]
fn ball_mass_is_exact() {
    let mut tree = ptr::null_mut();
    assert_eq!(unsafe { salem_tree_build_b(2, 0, &mut tree) }, SalemStatus::Ok);
    let mut mass = 0.0;
    let mut exact: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe { salem_ball_mass(tree, 2, 0, 1, 1, 2, true, &mut mass, &mut exact) };
    assert_eq!(status, SalemStatus::Ok);
    assert_eq!(mass, 1.0);
    assert_eq!(unsafe { CStr::from_ptr(exact) }.to_str().unwrap(), "1");
    unsafe {
        salem_string_free(exact);
        salem_tree_free(tree);
    }
}

#[test]
fn errors_map_to_codes() {
    let x = [2u64, 4, 8, 10];
    let mut tree = ptr::null_mut();
    let status = unsafe { salem_tree_build_a(25, x.as_ptr(), x.len(), 0.9, 3, 0, &mut tree) };
    assert_eq!(status, SalemStatus::Precondition);
    assert!(tree.is_null());
    assert!(last_error().contains("M^t"));

    let fixture = build_fixture(1);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { salem_mu_hat(fixture, 9, 1, &mut re, &mut im) }, SalemStatus::DepthExceeded);
    assert_eq!(unsafe { salem_mu_hat(ptr::null(), 0, 1, &mut re, &mut im) }, SalemStatus::NullPointer);

    let missing = CString::new("/nonexistent/tree.json").unwrap();
    assert_eq!(unsafe { salem_tree_load(missing.as_ptr(), &mut tree) }, SalemStatus::Io);

    // a successful call clears the message
    assert_eq!(unsafe { salem_mu_hat(fixture, 1, 1, &mut re, &mut im) }, SalemStatus::Ok);
    assert!(salem_last_error_message().is_null());
    unsafe { salem_tree_free(fixture) };
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/salem.h");
    for name in [
        "salem_tree_build_a",
        "salem_tree_build_b",
        "salem_tree_load",
        "salem_tree_save",
        "salem_tree_free",
        "salem_tree_depth",
        "salem_mu_hat",
        "salem_mu_hat_batch",
        "salem_verify_ap",
        "salem_ball_mass",
        "salem_string_free",
        "salem_last_error_message",
        "typedef struct SalemTree SalemTree",
        "SALEM_STATUS_NULL_POINTER = 6",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; header syntax check skipped");
        return;
    };
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include/salem.h");
    let out = std::process::Command::new(cc)
        .args(["-fsyntax-only", "-std=c99", "-Wall", "-Werror", "-x", "c", include])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
