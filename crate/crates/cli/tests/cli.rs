use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wqed_core::lattice::{build_pair_hamiltonian, oracle_full_space};
use wqed_core::spectral::{eig_dense, EigOptions};
use wqed_core::{ArrayConfig, PairBasis, PairSpectrum};

fn wqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wqed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = wqed(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Rows of a CSV file with a header, as strings.
fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = csv(path);
    let k = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn three_atom_spectrum_matches_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["spectrum", "--atoms", "3", "--phase", "0.7", "--out", p(tmp.path())]);
    let re = column(&tmp.path().join("spectrum.csv"), "re_eps");
    let im = column(&tmp.path().join("spectrum.csv"), "im_eps");
    assert_eq!(re.len(), 3);
    let oracle = eig_dense(
        &oracle_full_space(&ArrayConfig::new(3, 0.7)).unwrap(),
        &EigOptions::default(),
    )
    .unwrap();
    for (k, z) in oracle.values.iter().enumerate() {
        assert!((re[k] - z.re / 2.0).abs() < 1e-10 && (im[k] - z.im / 2.0).abs() < 1e-10);
    }
    for f in ["single.csv", "histogram.csv", "meta.json", "config.toml"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
}

#[test]
fn two_atom_spectrum_is_minus_i() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["spectrum", "--atoms", "2", "--out", p(tmp.path())]);
    let (_, rows) = csv(&tmp.path().join("spectrum.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), -1.0);
}

#[test]
fn single_sector_spectrum() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["spectrum", "--atoms", "9", "--sector", "one", "--out", p(tmp.path())]);
    let im = column(&tmp.path().join("spectrum.csv"), "im_eps");
    assert_eq!(im.len(), 9);
    assert!(im.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn indexed_wavefunction_matches_direct_eigensolve() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["wavefunction", "--atoms", "3", "--index", "0", "--out", p(tmp.path())]);
    let text = fs::read_to_string(tmp.path().join("psi2.csv")).unwrap();
    let grid: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();

    let cfg = ArrayConfig::new(3, 1.0);
    let basis = PairBasis::new(3);
    let eig = eig_dense(&build_pair_hamiltonian(&cfg, &basis).unwrap(), &EigOptions::default()).unwrap();
    let v = eig.vector(0);
    for (k, &(a, b)) in basis.pairs().iter().enumerate() {
        let expect = v[k].norm_sqr() / 2.0;
        assert!((grid[a][b] - expect).abs() < 1e-10);
        assert!((grid[b][a] - expect).abs() < 1e-10);
    }
    for (a, row) in grid.iter().enumerate() {
        assert_eq!(row[a], 0.0);
    }
    assert!(!tmp.path().join("svd.json").exists());
}

#[test]
fn most_distant_wavefunction_writes_decomposition() {
    let tmp = tempfile::tempdir().unwrap();
    let n = 40;
    ok(&[
        "wavefunction",
        "--atoms",
        "40",
        "--select",
        "most-distant",
        "--out",
        p(tmp.path()),
    ]);
    for f in [
        "psi2.csv",
        "meta.json",
        "svd.json",
        "truncated.csv",
        "vectors.csv",
        "single_mode.csv",
        "fourier.csv",
    ] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let meta = json(&tmp.path().join("meta.json"));
    let spectrum = PairSpectrum::solve(&ArrayConfig::new(n, 1.0), &EigOptions::default()).unwrap();
    let best = spectrum.distances().into_iter().fold(0.0, f64::max);
    assert!((meta["rho"].as_f64().unwrap() - best).abs() < 1e-12);
    assert!(meta["edge_mass"].as_f64().unwrap() > 0.0);

    let svd = json(&tmp.path().join("svd.json"));
    assert_eq!(svd["terms"].as_array().unwrap().len(), n);
    assert!(svd["orthonormality_defect"].as_f64().unwrap() < 1e-8);
    assert!(svd["reconstruction_error"].as_f64().unwrap() < 1e-8);
    assert_eq!(svd["truncate"], 4);

    let (header, rows) = csv(&tmp.path().join("fourier.csv"));
    assert_eq!(header.len(), n + 1);
    assert_eq!(rows.len(), n);
}

#[test]
fn brightest_single_mode_peaks_at_the_edges() {
    let tmp = tempfile::tempdir().unwrap();
    let n = 40;
    ok(&[
        "wavefunction",
        "--atoms",
        "40",
        "--sector",
        "one",
        "--select",
        "brightest",
        "--out",
        p(tmp.path()),
    ]);
    let abs2 = column(&tmp.path().join("psi.csv"), "abs2_psi");
    assert_eq!(abs2.len(), n);
    let centre = abs2[n / 2 - 1].min(abs2[n / 2]);
    assert!(abs2[0] > 5.0 * centre && abs2[n - 1] > 5.0 * centre);
}

#[test]
fn scaling_table() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["scaling", "--atoms", "16,32,64", "--out", p(tmp.path())]);
    let path = tmp.path().join("scaling.csv");
    let (header, _) = csv(&path);
    assert_eq!(
        header[..7],
        ["N", "minus_im_eps_numeric", "eq8", "eq9", "q", "qN", "decay_check"]
    );
    let numeric = column(&path, "minus_im_eps_numeric");
    assert!(numeric.windows(2).all(|w| w[1] > w[0]));
    let eq8 = column(&path, "eq8");
    assert!((numeric[2] - eq8[2]).abs() / numeric[2] < 0.1);
    let (_, waves) = csv(&tmp.path().join("wavefunctions.csv"));
    assert_eq!(waves.len(), 16 + 32 + 64);
}

#[test]
fn clean_disorder_row_is_the_sorted_clean_spectrum() {
    let tmp = tempfile::tempdir().unwrap();
    let (d, s) = (tmp.path().join("d"), tmp.path().join("s"));
    ok(&[
        "disorder",
        "--atoms",
        "10",
        "--strengths",
        "0",
        "--realizations",
        "1",
        "--out",
        p(&d),
    ]);
    ok(&["spectrum", "--atoms", "10", "--out", p(&s)]);
    let mut rho = column(&s.join("spectrum.csv"), "rho");
    rho.sort_by(f64::total_cmp);
    let (_, rows) = csv(&d.join("map.csv"));
    assert_eq!(rows.len(), 1);
    let mapped: Vec<f64> = rows[0][4..].iter().map(|x| x.parse().unwrap()).collect();
    assert_eq!(mapped.len(), rho.len());
    for (a, b) in mapped.iter().zip(&rho) {
        assert!((a - b).abs() < 1e-12);
    }
    let manifest = json(&d.join("manifest.json"));
    assert_eq!(manifest["kind"], "disorder");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn disorder_run_repeats_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&[
        "disorder",
        "--atoms",
        "40",
        "--strengths",
        "0,1,2,5",
        "--realizations",
        "10",
        "--seed",
        "11",
        "--out",
        p(&a),
    ]);
    ok(&["rerun", "--from", p(&a), "--out", p(&b)]);
    for f in ["map.csv", "summary.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let top = column(&a.join("summary.csv"), "mean_top_decile_rho");
    assert_eq!(top.len(), 4);
    assert!(top.iter().all(|x| x.is_finite() && *x > 0.0));
}

#[test]
fn config_file_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    fs::write(&cfg, format!("atoms = 6\nphase = 0.25\nbins = 7\nout = {:?}\n", p(&a))).unwrap();
    ok(&["spectrum", "--config", p(&cfg)]);
    ok(&[
        "spectrum",
        "--atoms",
        "6",
        "--phase",
        "0.25",
        "--bins",
        "7",
        "--out",
        p(&b),
    ]);
    for f in ["spectrum.csv", "histogram.csv", "single.csv", "meta.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (_, hist) = csv(&a.join("histogram.csv"));
    assert_eq!(hist.len(), 7);

    // flags override the file
    let c = tmp.path().join("c");
    ok(&["spectrum", "--config", p(&cfg), "--atoms", "5", "--out", p(&c)]);
    assert_eq!(column(&c.join("spectrum.csv"), "rho").len(), 10);

    fs::write(&cfg, "atoms = 6\ncolour = \"blue\"\n").unwrap();
    let out = wqed(&["spectrum", "--config", p(&cfg), "--out", p(&c)]);
    assert!(!out.status.success());
}

#[test]
fn resolved_config_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["wavefunction", "--atoms", "12", "--phase", "1.3", "--out", p(&a)]);
    let resolved = fs::read_to_string(a.join("config.toml")).unwrap();
    assert!(resolved.contains("command = \"wavefunction\""));
    assert!(resolved.contains("select = \"most-distant\""));
    ok(&["rerun", "--from", p(&a), "--out", p(&b)]);
}

#[test]
fn errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = wqed(&["spectrum", "--atoms", "300", "--out", p(tmp.path())]);
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("MiB"), "{msg}");

    let out = wqed(&["wavefunction", "--atoms", "4", "--index", "6", "--out", p(tmp.path())]);
    assert!(!out.status.success());
    let out = wqed(&["spectrum", "--out", p(tmp.path())]);
    assert!(!out.status.success());
    let out = wqed(&["disorder", "--atoms", "4", "--strengths", "2,1", "--out", p(tmp.path())]);
    assert!(!out.status.success());
    let out = wqed(&[
        "disorder",
        "--atoms",
        "4",
        "--max-failure-fraction",
        "1.5",
        "--out",
        p(tmp.path()),
    ]);
    assert!(!out.status.success());
}
