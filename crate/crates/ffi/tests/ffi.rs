use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use frpc_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(frpc_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn synth_write_read_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = CString::new(tmp.path().join("s").to_str().unwrap()).unwrap();
    unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(frpc_synth_oracle(3, 4, 6.0, &mut set), FrpcStatus::Ok);
        assert_eq!(frpc_epochset_write(set, dir.as_ptr()), FrpcStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(frpc_epochset_read(dir.as_ptr(), &mut back), FrpcStatus::Ok);
        let (mut t, mut c, mut n, mut fs) = (0usize, 0usize, 0usize, 0.0f64);
        assert_eq!(frpc_epochset_dims(back, &mut t, &mut c, &mut n, &mut fs), FrpcStatus::Ok);
        assert_eq!((t, c, n, fs), (8, 3, 1750, 250.0));
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(frpc_epochset_signal(set, 5, 2, a.as_mut_ptr(), n), FrpcStatus::Ok);
        assert_eq!(frpc_epochset_signal(back, 5, 2, b.as_mut_ptr(), n), FrpcStatus::Ok);
        assert_eq!(a, b);
        assert_eq!(frpc_epochset_signal(back, 8, 0, a.as_mut_ptr(), n), FrpcStatus::InvalidArgument);
        frpc_epochset_free(set);
        frpc_epochset_free(back);
    }
}

#[test]
fn errors_have_codes_and_messages() {
    unsafe {
        let mut set = ptr::null_mut();
        let missing = CString::new("/no/such/set").unwrap();
        assert_eq!(frpc_epochset_read(missing.as_ptr(), &mut set), FrpcStatus::Io);
        assert!(set.is_null());
        assert!(last_error().contains("/no/such/set"), "{}", last_error());
        assert_eq!(frpc_epochset_read(ptr::null(), &mut set), FrpcStatus::NullPointer);
        assert_eq!(frpc_epochset_dims(ptr::null(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()), FrpcStatus::NullPointer);
        assert_eq!(frpc_synth_oracle(1, 2, -1.0, &mut set), FrpcStatus::InvalidArgument);
        let bad = [0xffu8, 0];
        assert_eq!(frpc_epochset_read(bad.as_ptr().cast(), &mut set), FrpcStatus::InvalidUtf8);
        // null handles are accepted by the free functions
        frpc_epochset_free(ptr::null_mut());
        frpc_report_free(ptr::null_mut());
        frpc_string_free(ptr::null_mut());
        assert!(frpc_report_channel(ptr::null()).is_null());
        assert!(!CStr::from_ptr(frpc_version()).to_bytes().is_empty());
    }
}

#[test]
fn analyze_oracle_subject() {
    let cfg = CString::new("[cv]\nrepeats = 2\n[adaboost]\nrounds = 30\n").unwrap();
    unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(frpc_synth_oracle(2, 40, 6.0, &mut set), FrpcStatus::Ok);
        let mut rep = ptr::null_mut();
        assert_eq!(frpc_analyze(set, cfg.as_ptr(), 5, &mut rep), FrpcStatus::Ok, "{}", last_error());
        assert_eq!(CStr::from_ptr(frpc_report_channel(rep)).to_str().unwrap(), "C3");
        let (mut n, mut acc) = (0usize, 0.0);
        assert_eq!(frpc_report_best(rep, &mut n, &mut acc), FrpcStatus::Ok);
        assert!((1..=6).contains(&n) && acc >= 90.0, "{n} {acc}");
        let (mut m, mut s) = (0.0, 0.0);
        assert_eq!(frpc_report_accuracy(rep, n, &mut m, &mut s), FrpcStatus::Ok);
        assert_eq!(m, acc);
        assert_eq!(frpc_report_accuracy(rep, 7, &mut m, &mut s), FrpcStatus::InvalidArgument);
        let mut json = ptr::null_mut();
        assert_eq!(frpc_report_json(rep, &mut json), FrpcStatus::Ok);
        assert!(CStr::from_ptr(json).to_str().unwrap().contains("\"best_n\""));
        frpc_string_free(json);
        frpc_report_free(rep);

        let bad_cfg = CString::new("n_max = \"six\"").unwrap();
        assert_eq!(frpc_analyze(set, bad_cfg.as_ptr(), 5, &mut rep), FrpcStatus::InvalidArgument);
        assert!(rep.is_null());
        frpc_epochset_free(set);
    }
}

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest_dir.join("include");
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let hdr = tmp.path().join("hdr.c");
    std::fs::write(&hdr, "#include \"frpc.h\"\nint main(void) { return FRPC_STATUS_OK; }\n").unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&hdr)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // `cargo test` does not refresh the static library; link only against a
    // build that is newer than the sources
    let lib = target_dir().join("libfrpc_ffi.a");
    let modified = |p: &std::path::Path| std::fs::metadata(p).and_then(|m| m.modified()).ok();
    let fresh = match (modified(&lib), modified(&manifest_dir.join("src/lib.rs"))) {
        (Some(l), Some(s)) => l >= s,
        _ => false,
    };
    if !fresh {
        eprintln!("skipping link step: run `cargo build -p frpc-ffi` first");
        return;
    }
    let src = tmp.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "frpc.h"
int main(void) {
    FrpcEpochSet *set = NULL;
    if (frpc_synth_oracle(1, 3, 6.0, &set) != FRPC_STATUS_OK) return 1;
    size_t t = 0, c = 0, n = 0;
    frpc_epochset_dims(set, &t, &c, &n, NULL);
    frpc_epochset_free(set);
    FrpcEpochSet *missing = NULL;
    if (frpc_epochset_read("/no/such", &missing) != FRPC_STATUS_IO) return 2;
    printf("%zu %zu %zu %s\n", t, c, n, frpc_version());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("main");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("6 3 1750 "));
}
