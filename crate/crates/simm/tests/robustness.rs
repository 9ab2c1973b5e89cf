//! Broader end-to-end coverage: rectangular regions, generalized pencils,
//! a mid-size matrix through the Matrix Market + CLI path, and the f32
//! instantiation of the generic core.

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use simm::oracle::synth_pencil;
use simm::scalar::sample_complex_normal;
use simm::search::{sim_m, Region, SearchConfig};
use simm::sparse::{MatrixPencil, SparseMatrix};
use simm::C64;

fn cx(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[test]
fn rectangular_region_with_wide_aspect() {
    // region twice as wide as tall; the coarse tiling is 4 x 2
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut eigs: Vec<C64> = Vec::new();
    while eigs.len() < 8 {
        let cand = cx(
            0.05 + 1.9 * rng.random::<f64>(),
            -0.45 + 0.9 * rng.random::<f64>(),
        );
        if eigs.iter().all(|p| (p - cand).norm() >= 2e-2) {
            eigs.push(cand);
        }
    }
    let sp = synth_pencil(&eigs, 150, 32, true, None);
    let config = SearchConfig::new(Region::new(0.0, 2.0, -0.5, 0.5));
    let out = sim_m(&sp.pencil, &config).unwrap();
    assert_eq!(out.records.len(), 8, "records {:?}", out.records);
    let tol = config.h0 * 2.0f64.sqrt();
    for p in &eigs {
        let nearest = out
            .records
            .iter()
            .map(|r| (r.value - p).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= tol, "{p} missed by {nearest}");
    }
}

#[test]
fn generalized_pencil_with_nontrivial_b() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut eigs: Vec<C64> = Vec::new();
    while eigs.len() < 6 {
        let cand = cx(
            0.05 + 0.9 * rng.random::<f64>(),
            -0.45 + 0.9 * rng.random::<f64>(),
        );
        if eigs.iter().all(|p| (p - cand).norm() >= 2e-2) {
            eigs.push(cand);
        }
    }
    let n = 120;
    let b_diag: Vec<C64> = (0..n)
        .map(|_| sample_complex_normal::<f64, _>(&mut rng) + cx(3.0, 0.0))
        .collect();
    let sp = synth_pencil(&eigs, n, 42, true, Some(&b_diag));
    assert!(sp.pencil.b().is_some());
    let config = SearchConfig::new(Region::new(0.0, 1.0, -0.5, 0.5));
    let out = sim_m(&sp.pencil, &config).unwrap();
    assert_eq!(out.records.len(), 6, "records {:?}", out.records);
    let tol = config.h0 * 2.0f64.sqrt();
    for p in &eigs {
        let nearest = out
            .records
            .iter()
            .map(|r| (r.value - p).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= tol, "{p} missed by {nearest}");
    }
}

#[test]
fn midsize_matrix_through_files_and_binary() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut eigs: Vec<C64> = Vec::new();
    while eigs.len() < 8 {
        let cand = cx(
            0.05 + 0.9 * rng.random::<f64>(),
            -0.45 + 0.9 * rng.random::<f64>(),
        );
        if eigs.iter().all(|p| (p - cand).norm() >= 2e-2) {
            eigs.push(cand);
        }
    }
    let sp = synth_pencil(&eigs, 400, 52, true, None);
    let tmp = tempfile::tempdir().unwrap();
    simm::mmio::write_matrix_market(tmp.path().join("a.mtx"), sp.pencil.a()).unwrap();

    let out = std::process::Command::new(env!("CARGO_BIN_EXE_simm"))
        .current_dir(tmp.path())
        .args([
            "--a",
            "a.mtx",
            "--region",
            "0",
            "1",
            "-0.5",
            "0.5",
            "--out",
            "manifest.json",
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap())
            .unwrap();
    let records = manifest["records"].as_array().unwrap();
    assert_eq!(records.len(), 8);
    let tol = 1e-6 * 2.0f64.sqrt();
    for p in &eigs {
        let nearest = records
            .iter()
            .map(|r| {
                let v = cx(r["re"].as_f64().unwrap(), r["im"].as_f64().unwrap());
                (v - p).norm()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= tol, "{p} missed by {nearest}");
    }
}

#[test]
fn real_matrix_full_spectrum_with_conjugate_pairs() {
    // a real non-symmetric matrix has real eigenvalues plus conjugate
    // pairs; real eigenvalues land on the grid line im = 0 and exercise
    // cross-square merging, like real-world graph matrices do
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let n = 60;
    let mut trip = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random::<f64>() < 0.12 {
                let v: f64 = simm::scalar::Scalar::sample_standard_normal(&mut rng);
                trip.push((i, j, cx(v, 0.0)));
            }
        }
    }
    let a = SparseMatrix::from_triplets(n, n, trip).unwrap();
    let pencil = MatrixPencil::standard(a).unwrap();
    let reference = simm::oracle::dense_eigs(&pencil).unwrap();

    let (mut re_min, mut re_max, mut im_max) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for v in &reference {
        re_min = re_min.min(v.re);
        re_max = re_max.max(v.re);
        im_max = im_max.max(v.im.abs());
    }
    let pad = 0.05 * (re_max - re_min);
    let region = Region::new(re_min - pad, re_max + pad, -im_max - pad, im_max + pad);
    let config = SearchConfig::new(region);
    let out = sim_m(&pencil, &config).unwrap();

    let tol = config.h0 * 2.0f64.sqrt();
    for v in &reference {
        let nearest = out
            .records
            .iter()
            .map(|r| (r.value - v).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(
            nearest <= tol,
            "reference eigenvalue {v} missed by {nearest}"
        );
    }
    for r in &out.records {
        let nearest = reference
            .iter()
            .map(|v| (r.value - v).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= tol, "spurious record {} at {nearest}", r.value);
    }
}

#[test]
fn single_precision_instantiation_runs() {
    // the core is generic over the scalar; f32 works at loose tolerances
    type C32 = Complex<f32>;
    let eigs: Vec<C32> = vec![Complex::new(0.4f32, 0.1), Complex::new(0.75, -0.2)];
    let a = SparseMatrix::<f32>::diagonal(&eigs);
    let pencil = MatrixPencil::standard(a).unwrap();
    let mut config = SearchConfig::<f32>::new(Region::new(0.0f32, 1.0, -0.5, 0.5));
    config.h0 = 1e-3;
    config.eps = 1e-4;
    config.m = 6;
    let out = sim_m(&pencil, &config).unwrap();
    assert_eq!(out.records.len(), 2, "records {:?}", out.records);
    for p in &eigs {
        let nearest = out
            .records
            .iter()
            .map(|r| (r.value - p).norm())
            .fold(f32::INFINITY, f32::min);
        assert!(nearest <= config.h0 * 2.0, "{p} missed by {nearest}");
    }
}
