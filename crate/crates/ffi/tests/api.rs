use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use tropivol_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = tv_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn volume_and_integral_through_handles() {
    unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(tv_set_parse(c("(vfcell (n 1) (ordset (cell (ge (1) 1))))").as_ptr(), &mut set), TvStatus::Ok);
        let mut phi = ptr::null_mut();
        let src = c("(dimfun (profile 1 0 0) (piece all (form (-1) 0)))");
        assert_eq!(tv_dimfun_parse(src.as_ptr(), &mut phi), TvStatus::Ok);

        let mut z = TvZBar { kind: TvZBarKind::NegInf, value: 0 };
        assert_eq!(tv_set_vol(set, &mut z), TvStatus::Ok);
        assert_eq!(z, TvZBar { kind: TvZBarKind::Finite, value: -1 });
        assert_eq!(tv_integrate(set, phi, &mut z), TvStatus::Ok);
        assert_eq!(z, TvZBar { kind: TvZBarKind::Finite, value: -2 });
        assert!(tv_last_error().is_null());

        tv_dimfun_free(phi);
        tv_set_free(set);
    }
}

#[test]
fn infinite_volume() {
    unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(tv_set_parse(c("(vfcell (n 1))").as_ptr(), &mut set), TvStatus::Ok);
        let mut z = TvZBar { kind: TvZBarKind::Finite, value: 7 };
        assert_eq!(tv_set_vol(set, &mut z), TvStatus::Ok);
        assert_eq!(z.kind, TvZBarKind::PosInf);
        tv_set_free(set);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(tv_set_parse(c("(vfcell (n 1)").as_ptr(), &mut set), TvStatus::Parse);
        assert!(set.is_null());
        assert!(last_error().contains("not closed"), "{}", last_error());

        assert_eq!(tv_set_parse(ptr::null(), &mut set), TvStatus::NullPointer);
        let mut z = TvZBar { kind: TvZBarKind::NegInf, value: 0 };
        assert_eq!(tv_set_vol(ptr::null(), &mut z), TvStatus::NullPointer);

        let bad = [0xffu8, 0];
        assert_eq!(tv_set_parse(bad.as_ptr().cast(), &mut set), TvStatus::InvalidUtf8);

        // arity mismatch between the set and the function
        let mut phi = ptr::null_mut();
        assert_eq!(tv_set_parse(c("(vfcell (n 1))").as_ptr(), &mut set), TvStatus::Ok);
        let src = c("(dimfun (profile 2 0 0) (piece all (const 0)))");
        assert_eq!(tv_dimfun_parse(src.as_ptr(), &mut phi), TvStatus::Ok);
        assert_eq!(tv_integrate(set, phi, &mut z), TvStatus::Evaluation);
        assert!(last_error().contains("arity"));
        tv_dimfun_free(phi);
        tv_set_free(set);

        tv_set_free(ptr::null_mut());
        tv_string_free(ptr::null_mut());
    }
}

#[test]
fn conductor_of_the_swap_lattice() {
    unsafe {
        let mut m = ptr::null_mut();
        let src = c("(galmod (rank 2) (gen (mat (row 0 1) (row 1 0))) (filtration (g0 all) (g1 id)))");
        assert_eq!(tv_galmod_parse(src.as_ptr(), &mut m), TvStatus::Ok);
        let (mut num, mut den) = (0i64, 0i64);
        assert_eq!(tv_torus_conductor(m, &mut num, &mut den), TvStatus::Ok);
        assert_eq!((num, den), (1, 2));
        tv_galmod_free(m);
    }
}

#[test]
fn run_matches_the_command_line() {
    unsafe {
        let mut out = ptr::null_mut();
        let doc = c("(vol (vfcell (n 1) (ordset (cell (ge (1) 3)))))");
        assert_eq!(tv_run(c("vol").as_ptr(), doc.as_ptr(), false, &mut out), TvStatus::Ok);
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), "vol = -3\n");
        tv_string_free(out);

        let doc = c("(compare (weak-neron (dimx 1) (comp (poly (2 1)) (dim 1) (ord 0))) \
                     (vfcell (n 1) (ordset (cell (ge (1) 1)))) (dimfun (profile 1 0 0) (piece all (const 0))))");
        assert_eq!(tv_run(c("compare").as_ptr(), doc.as_ptr(), true, &mut out), TvStatus::Unequal);
        assert!(CStr::from_ptr(out).to_str().unwrap().contains("\"equal\": false"));
        tv_string_free(out);

        assert_eq!(tv_run(c("vol").as_ptr(), c("(vol").as_ptr(), false, &mut out), TvStatus::Parse);
        assert!(out.is_null());
        assert!(last_error().starts_with("1:5"), "{}", last_error());
        assert_eq!(
            tv_run(
                c("integrate").as_ptr(),
                c("(integrate (vfcell (n 1)) (dimfun (profile 2 0 0) (piece all (const 0))))").as_ptr(),
                false,
                &mut out,
            ),
            TvStatus::Evaluation
        );
        assert!(out.is_null());
    }
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libtropivol_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let exe = std::env::temp_dir().join(format!("tropivol_smoke_{}", std::process::id()));
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let out = Command::new(&exe).output().unwrap();
    let _ = std::fs::remove_file(&exe);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
