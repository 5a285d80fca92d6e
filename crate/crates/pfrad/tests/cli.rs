use std::path::Path;
use std::process::{Command, Output};

use pfrad::amplitudes::survival_terms;
use pfrad::Setup;
use serde_json::Value;

fn pfrad(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfrad")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn poles_document() {
    let dir = tempfile::tempdir().unwrap();
    let out = pfrad(&["poles", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["lambda_e"].as_f64().unwrap() - 16.726).abs() < 1e-3);
    assert!((doc["gamma_e"].as_f64().unwrap() - 0.0298).abs() < 1e-4);
    assert!((doc["gamma_e_literature"].as_f64().unwrap() - 0.06).abs() < 1e-12);
    assert!(doc["discrepancy"]["gamma_ratio"].as_f64().unwrap() > 1.9);
}

#[test]
fn uncoupled_poles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e0.cfg", "physical.e = 0\n");
    let out = pfrad(&["poles", "--config", &cfg, "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["gamma_e"].as_f64(), Some(0.0));
    assert_eq!(doc["omega_e"].as_f64(), Some(1.0));
    assert!(doc["lambda_e"].is_null());
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "physical.e = 0.3\ngrid.points = many\n");
    let target = dir.path().join("out.json");
    let out = pfrad(&["poles", "--config", &cfg, "--out", target.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!target.exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.points"));
    let usage = pfrad(&["poles", "--sweep", "nu:2:1:3"], dir.path());
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn survival_csv_is_deterministic_and_verified() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = pfrad(&["survival", "--verify", "--quiet", "--out", p.to_str().unwrap()], dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    assert!(!text.contains('\r'));
    let (header, body) = rows(&text);
    assert_eq!(body.len(), 100);
    let gap = column(&header, "oracle_gap");
    for r in &body {
        assert_eq!(r.last().unwrap(), "ok");
        assert!(r[gap].parse::<f64>().unwrap() < 1e-5);
        let mantissa = r[1].trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
    }
}

#[test]
fn single_row_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "one.cfg", "grid.units = time\ngrid.start = 0.75\ngrid.points = 1\n");
    let out = pfrad(&["survival", "--config", &cfg, "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (header, body) = rows(&String::from_utf8(out.stdout).unwrap());
    let b = survival_terms(0.75, &Setup::natural(0.3).unwrap()).unwrap();
    assert_eq!(body[0][column(&header, "re_s")].parse::<f64>().unwrap(), b.s.re);
    assert_eq!(body[0][column(&header, "im_s")].parse::<f64>().unwrap(), b.s.im);
}

#[test]
fn envelope_decays_past_three_lifetimes() {
    let dir = tempfile::tempdir().unwrap();
    let s = Setup::natural(0.3).unwrap();
    let g = s.spectral.gamma_e;
    let cfg = write(
        dir.path(),
        "late.cfg",
        &format!(
            "grid.units = time\ngrid.spacing = linear\ngrid.start = {}\ngrid.stop = {}\ngrid.points = 400\n",
            3.0 / g,
            12.0 / g
        ),
    );
    let out = pfrad(&["survival", "--config", &cfg, "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (header, body) = rows(&String::from_utf8(out.stdout).unwrap());
    let i = column(&header, "abs_s");
    let mags: Vec<f64> = body.iter().map(|r| r[i].parse().unwrap()).collect();
    for (k, w) in mags.windows(2).enumerate() {
        assert!(w[1] <= w[0] * (1.0 + 1e-6), "row {k}: {w:?}");
    }
    assert!(mags[mags.len() - 1] < 1e-3 * mags[0]);
}

#[test]
fn transition_needs_photon_block() {
    let dir = tempfile::tempdir().unwrap();
    let out = pfrad(&["transition", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn transition_eps_columns_approach_limit() {
    let dir = tempfile::tempdir().unwrap();
    let gap_at = |eps: f64| {
        let cfg = write(
            dir.path(),
            "t.cfg",
            &format!("photon.nu = 1.1\nphoton.eps = {eps}\ngrid.units = time\ngrid.start = 1\ngrid.stop = 4\ngrid.points = 4\n"),
        );
        let out = pfrad(&["transition", "--config", &cfg, "--quiet"], dir.path());
        assert_eq!(out.status.code(), Some(0));
        let (h, body) = rows(&String::from_utf8(out.stdout).unwrap());
        let f = |r: &Vec<String>, n: &str| r[column(&h, n)].parse::<f64>().unwrap();
        body.iter()
            .map(|r| ((f(r, "re_a") - f(r, "re_a_limit")).powi(2) + (f(r, "im_a") - f(r, "im_a_limit")).powi(2)).sqrt())
            .fold(0.0, f64::max)
    };
    let (g1, g2, g3) = (gap_at(0.04), gap_at(0.02), gap_at(0.01));
    assert!(g2 < g1 && g3 < g2, "{g1} {g2} {g3}");
}

#[test]
fn orthogonal_geometry_emits_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "z.cfg",
        "photon.nu = 1.1\nphoton.zeta = 0,0,1\nlevel.zeta = 0,0,1\ngrid.units = time\ngrid.start = 0.5\ngrid.stop = 2\ngrid.points = 3\n",
    );
    let out = pfrad(&["transition", "--config", &cfg, "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (h, body) = rows(&String::from_utf8(out.stdout).unwrap());
    for r in &body {
        for n in ["re_a", "im_a", "abs_a"] {
            assert_eq!(r[column(&h, n)].parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn sweep_peaks_near_emission_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let s = Setup::natural(0.3).unwrap().spectral;
    let (w, g) = (s.omega_e, s.gamma_e);
    let spec = format!("nu:{}:{}:201", w - 10.0 * g, w + 10.0 * g);
    let out = pfrad(&["transition", "--sweep", &spec, "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (h, body) = rows(&String::from_utf8(out.stdout).unwrap());
    let (nu, a) = (column(&h, "nu"), column(&h, "abs_c3"));
    let vals: Vec<(f64, f64)> = body.iter().map(|r| (r[nu].parse().unwrap(), r[a].parse().unwrap())).collect();
    let peak = vals.iter().cloned().fold((0.0, 0.0), |m, p| if p.1 > m.1 { p } else { m });
    assert!((peak.0 - w).abs() < g);
    let maxima = vals.windows(3).filter(|v| v[1].1 > v[0].1 && v[1].1 > v[2].1).count();
    assert_eq!(maxima, 1);
}

#[test]
fn verify_report_and_mutations() {
    let dir = tempfile::tempdir().unwrap();
    let out = pfrad(&["verify", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = doc["checks"].as_array().unwrap();
    let mut names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    let n = names.len();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), n);
    assert!(checks.iter().all(|c| c["passed"] == Value::Bool(true)));

    for fault in ["flip-q", "drop-j2"] {
        let out = pfrad(&["verify", "--quiet", "--inject-fault", fault], dir.path());
        assert_eq!(out.status.code(), Some(1), "{fault}");
        let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
        let stone = doc["checks"].as_array().unwrap().iter().find(|c| c["name"] == "oracle.stone_survival").unwrap();
        assert_eq!(stone["passed"], Value::Bool(false), "{fault}");
    }
}
