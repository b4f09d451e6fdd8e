use std::ffi::{CStr, CString};
use std::ptr;

use forge_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(forge_last_error()) }.to_string_lossy().into_owned()
}

fn matrix(rows: &[[f64; 3]]) -> *mut ForgeMatrix {
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    let name = CString::new("m").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { forge_matrix_new(name.as_ptr(), data.as_ptr(), rows.len(), &mut out) }, ForgeStatus::Ok);
    out
}

#[test]
fn normalize_round_trip() {
    let mut pp = ptr::null_mut();
    unsafe {
        assert_eq!(forge_preprocessor_new(&mut pp), ForgeStatus::Ok);
        let text = CString::new("@bob Sooooo COOL!!! https://t.co/x #peacelove").unwrap();
        let mut out = ptr::null_mut();
        let mut dropped = true;
        assert_eq!(forge_preprocessor_normalize(pp, text.as_ptr(), &mut out, &mut dropped), ForgeStatus::Ok);
        assert!(!dropped);
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), "so cool peace love");
        forge_string_free(out);

        let short = CString::new("@bob hi").unwrap();
        assert_eq!(forge_preprocessor_normalize(pp, short.as_ptr(), &mut out, &mut dropped), ForgeStatus::Ok);
        assert!(dropped && out.is_null());
        forge_preprocessor_free(pp);
    }
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        assert_eq!(forge_preprocessor_new(ptr::null_mut()), ForgeStatus::NullPointer);
        assert!(last_error().contains("out"));
        let mut out = ptr::null_mut();
        assert_eq!(forge_matrix_new(ptr::null(), ptr::null(), 0, &mut out), ForgeStatus::NullPointer);
        assert_eq!(forge_matrix_rows(ptr::null()), 0);
        forge_matrix_free(ptr::null_mut());
        forge_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_matrix_is_rejected() {
    let data = [0.5, 0.5, 0.5];
    let name = CString::new("bad").unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { forge_matrix_new(name.as_ptr(), data.as_ptr(), 1, &mut out) };
    assert_eq!(status, ForgeStatus::InvalidMatrix);
    assert!(out.is_null());
    assert!(last_error().contains("sums to"), "{}", last_error());
}

#[test]
fn combiners_fill_label_buffers() {
    let a = matrix(&[[0.6, 0.3, 0.1], [0.0, 0.4, 0.6]]);
    let b = matrix(&[[0.2, 0.5, 0.3], [0.1, 0.8, 0.1]]);
    let c = matrix(&[[0.1, 0.8, 0.1], [0.2, 0.2, 0.6]]);
    let members = [a as *const ForgeMatrix, b, c];
    let mut labels = [9u8; 2];
    unsafe {
        assert_eq!(forge_soft_vote(members.as_ptr(), 2, ptr::null(), labels.as_mut_ptr(), 2), ForgeStatus::Ok);
        assert_eq!(labels, [0, 1]);
        let w = [1.0, 3.0];
        assert_eq!(forge_soft_vote(members.as_ptr(), 2, w.as_ptr(), labels.as_mut_ptr(), 2), ForgeStatus::Ok);
        assert_eq!(labels, [1, 1]);
        assert_eq!(forge_max_value(members.as_ptr(), 2, labels.as_mut_ptr(), 2), ForgeStatus::Ok);
        assert_eq!(labels, [0, 1]);
        assert_eq!(forge_hard_vote(members.as_ptr(), 3, labels.as_mut_ptr(), 2), ForgeStatus::Ok);
        assert_eq!(labels, [1, 2]);

        assert_eq!(forge_hard_vote(members.as_ptr(), 2, labels.as_mut_ptr(), 2), ForgeStatus::Ensemble);
        assert!(last_error().contains("odd"));
        assert_eq!(forge_soft_vote(members.as_ptr(), 3, ptr::null(), labels.as_mut_ptr(), 1), ForgeStatus::InvalidArgument);

        let mut row = [0.0; 3];
        assert_eq!(forge_matrix_row(b, 1, row.as_mut_ptr()), ForgeStatus::Ok);
        assert_eq!(row, [0.1, 0.8, 0.1]);
        assert_eq!(forge_matrix_row(b, 2, row.as_mut_ptr()), ForgeStatus::InvalidArgument);
        for m in [a, b, c] {
            forge_matrix_free(m);
        }
    }
}

#[test]
fn prediction_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("p.pred").to_str().unwrap()).unwrap();
    let m = matrix(&[[0.25, 0.25, 0.5], [1.0, 0.0, 0.0]]);
    let ids = [CString::new("x:1").unwrap(), CString::new("x:2").unwrap()];
    let id_ptrs: Vec<_> = ids.iter().map(|s| s.as_ptr()).collect();
    unsafe {
        assert_eq!(forge_matrix_write(m, id_ptrs.as_ptr(), path.as_ptr()), ForgeStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(forge_matrix_read(path.as_ptr(), &mut back), ForgeStatus::Ok);
        assert_eq!(forge_matrix_rows(back), 2);
        let mut row = [0.0; 3];
        forge_matrix_row(back, 0, row.as_mut_ptr());
        assert_eq!(row, [0.25, 0.25, 0.5]);
        forge_matrix_free(back);
        forge_matrix_free(m);

        let missing = CString::new(dir.path().join("none").to_str().unwrap()).unwrap();
        assert_eq!(forge_matrix_read(missing.as_ptr(), &mut back), ForgeStatus::Io);
        std::fs::write(dir.path().join("bad"), "{\"format_version\":2}\n").unwrap();
        let bad = CString::new(dir.path().join("bad").to_str().unwrap()).unwrap();
        assert_eq!(forge_matrix_read(bad.as_ptr(), &mut back), ForgeStatus::Format);
    }
}

#[test]
fn evaluate_matches_hand_count() {
    let t = [0u8, 0, 1, 1, 2, 2];
    let p = [0u8, 1, 1, 1, 2, 0];
    let mut m = ForgeMetrics::default();
    unsafe {
        assert_eq!(forge_evaluate(t.as_ptr(), p.as_ptr(), 6, &mut m), ForgeStatus::Ok);
        assert!((m.accuracy - 4.0 / 6.0).abs() < 1e-12);
        assert!((m.macro_f1 - (0.5 + 0.8 + 2.0 / 3.0) / 3.0).abs() < 1e-12);
        assert_eq!(m.confusion, [[1, 1, 0], [0, 2, 0], [1, 0, 1]]);
        let bad = [3u8];
        assert_eq!(forge_evaluate(bad.as_ptr(), bad.as_ptr(), 1, &mut m), ForgeStatus::InvalidArgument);
    }
}

#[test]
fn model_checkpoint_predicts() {
    use forge_core::baselines::{Head, HeadLearner};
    use forge_core::ClassLabel;
    let texts = ["storm thunder lava", "waffle pickle toast", "garden river violin"];
    let mut tt = Vec::new();
    let mut tl = Vec::new();
    for _ in 0..10 {
        for (i, t) in texts.iter().enumerate() {
            tt.push(*t);
            tl.push(ClassLabel::from_index(i).unwrap());
        }
    }
    let model = HeadLearner::new(Head::Lstm).train(&tt, &tl, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    model.save(&path).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let inputs: Vec<CString> = texts.iter().map(|t| CString::new(*t).unwrap()).collect();
    let ptrs: Vec<_> = inputs.iter().map(|s| s.as_ptr()).collect();
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(forge_model_load(cpath.as_ptr(), &mut h), ForgeStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(forge_model_predict(h, ptrs.as_ptr(), 3, &mut out), ForgeStatus::Ok);
        for i in 0..3 {
            let mut row = [0.0; 3];
            forge_matrix_row(out, i, row.as_mut_ptr());
            let best = (0..3).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(best, i);
        }
        forge_matrix_free(out);
        forge_model_free(h);
        std::fs::write(&path, b"junk").unwrap();
        assert_eq!(forge_model_load(cpath.as_ptr(), &mut h), ForgeStatus::Model);
    }
}

#[test]
fn version_is_nonempty() {
    assert!(!unsafe { CStr::from_ptr(forge_version()) }.to_bytes().is_empty());
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header_path = concat!(env!("CARGO_MANIFEST_DIR"), "/include/forge.h");
    let header = std::fs::read_to_string(header_path).unwrap();
    for name in [
        "forge_last_error",
        "forge_preprocessor_normalize",
        "forge_matrix_new",
        "forge_soft_vote",
        "forge_hard_vote",
        "forge_max_value",
        "forge_model_predict",
        "forge_evaluate",
        "FORGE_STATUS_OK",
        "typedef struct ForgeMatrix ForgeMatrix;",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    // syntax-check with the system C compiler when one is installed
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"forge.h\"\nint main(void) { ForgeMetrics m; (void)m; return forge_version() == 0; }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    if let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-I", include]).arg(&src).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
