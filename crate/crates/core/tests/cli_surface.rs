use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use yent::document::{write_operator, MeasureRecord};
use yent::tensor::{CompositeStructure, OperatorMatrix};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn yent(config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yent"))
        .arg("--config")
        .arg(config)
        .arg("--output-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_record(dir: &Path) -> MeasureRecord {
    serde_json::from_str(&fs::read_to_string(dir.join("measure.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn measure_bell_and_product_documents() {
    let tmp = tempfile::tempdir().unwrap();
    for (doc, expected) in [("bell", 1.0), ("product", 0.0), ("classical", 1.0)] {
        let cfg = write_config(
            tmp.path(),
            &format!("{doc}.toml"),
            &format!(
                "mode = \"measure\"\ninput = \"{}\"\n",
                configs().join("data").join(format!("{doc}.json")).display()
            ),
        );
        let out = tmp.path().join(doc);
        let o = yent(&cfg, &out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let r = read_record(&out);
        assert!((r.epsilon_bits - expected).abs() < 1e-9, "{doc}: {}", r.epsilon_bits);
        assert_eq!(r.witnesses.numerator.left.len(), 2);
    }
}

#[test]
fn shipped_measure_config_resolves_relative_input() {
    let tmp = tempfile::tempdir().unwrap();
    let o = yent(&configs().join("measure_bell.toml"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((read_record(tmp.path()).epsilon_bits - 1.0).abs() < 1e-9);
}

#[test]
fn malformed_document_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.json"), r#"{"dims": [2, 0], "entries": []}"#).unwrap();
    let cfg = write_config(tmp.path(), "m.toml", "mode = \"measure\"\ninput = \"bad.json\"\n");
    let o = yent(&cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`dims`"), "{}", stderr(&o));
}

#[test]
fn config_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    for (text, field) in [
        ("mode = \"simulate\"\nt_end = 1.0\n", "`params`"),
        ("mode = \"verify\"\n[verify]\ncases = 0\n", "`verify.cases`"),
        ("mode = \"verify\"\nseed = \"x\"\n", "`seed`"),
    ] {
        let cfg = write_config(tmp.path(), "c.toml", text);
        let o = yent(&cfg, &tmp.path().join("out"));
        assert_eq!(o.status.code(), Some(1));
        assert!(stderr(&o).contains(field), "{field}: {}", stderr(&o));
    }
}

#[test]
fn optimizer_non_convergence_is_a_soft_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let s = CompositeStructure::new(vec![3, 3]).unwrap();
    let rows: Vec<Vec<f64>> = (0..9)
        .map(|i| (0..9).map(|j| (((i * 7 + j * 3) % 11) as f64 - 5.0) / 5.0).collect())
        .collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    write_operator(tmp.path().join("a.json"), &OperatorMatrix::from_real_rows(s, &refs).unwrap()).unwrap();
    let cfg = write_config(
        tmp.path(),
        "m.toml",
        "mode = \"measure\"\ninput = \"a.json\"\n[optimizer]\nrestarts = 0\nmax_iter = 1\ntol = 1e-15\n",
    );
    let o = yent(&cfg, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("did not converge"));
    assert!(tmp.path().join("out/measure.json").exists());
}

const SIM_HEAD: &str = "mode = \"simulate\"\np_order = 2\nsample_count = 101\n";

#[test]
fn zero_coupling_rows_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "s.toml",
        &format!(
            "{SIM_HEAD}t_end = 50.0\namplitudes = [[0.6, 0.0], [0.0, 0.64], [0.48, 0.0]]\n[params]\nb12 = 0.0\nb23 = 0.0\n"
        ),
    );
    let o = yent(&cfg, tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&tmp.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 101);
    for r in &rows {
        assert_eq!(&r[1..], &rows[0][1..]);
    }
}

#[test]
fn uniform_start_first_row_is_log2_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = yent(&configs().join("simulate_uniform.toml"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("peak epsilon"));
    let rows = csv_rows(&tmp.path().join("trajectory.csv"));
    assert!((rows[0][15] - 3f64.log2()).abs() < 1e-12);
}

#[test]
fn rabi_config_matches_analytic_populations() {
    let tmp = tempfile::tempdir().unwrap();
    let o = yent(&configs().join("simulate_rabi.toml"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for r in csv_rows(&tmp.path().join("trajectory.csv")) {
        assert!((r[2] - (0.5 * r[0] / 2.0).sin().powi(2)).abs() < 1e-6);
    }
}

const SWEEP_BASE: &str = "mode = \"sweep\"\nt_end = 20.0\nsample_count = 41\n\
    amplitudes = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]\n[params]\nb12 = 0.5\nb23 = 0.5\n";

#[test]
fn two_by_two_sweep_writes_four_files_and_index() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w.toml", &format!("{SWEEP_BASE}[sweep]\nb12 = [0.1, 0.2]\nb23 = [0.3, 0.4]\n"));
    let out = tmp.path().join("out");
    let o = yent(&cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let index: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("index.json")).unwrap()).unwrap();
    let points = index["points"].as_array().unwrap();
    assert_eq!(points.len(), 4);
    for p in points {
        assert_eq!(p["status"], "ok");
        assert!(out.join(p["file"].as_str().unwrap()).exists());
    }
    assert_eq!(points[2]["b12"], 0.2);
    assert_eq!(points[2]["b23"], 0.3);
    assert_eq!(fs::read_dir(&out).unwrap().count(), 5);
}

#[test]
fn one_point_sweep_equals_simulate() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = write_config(tmp.path(), "w.toml", &format!("{SWEEP_BASE}[sweep]\nb12 = [0.5]\n"));
    let sim = write_config(tmp.path(), "s.toml", &SWEEP_BASE.replace("\"sweep\"", "\"simulate\""));
    assert_eq!(yent(&sweep, &tmp.path().join("a")).status.code(), Some(0));
    assert_eq!(yent(&sim, &tmp.path().join("b")).status.code(), Some(0));
    let a = fs::read(tmp.path().join("a/sweep_b12-000_b23-000_d21-000_d32-000.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/trajectory.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn failing_grid_point_is_recorded_and_the_rest_continue() {
    let tmp = tempfile::tempdir().unwrap();
    // An unattainable abort threshold fails every point that moves.
    let text = format!("{SWEEP_BASE}[integrator]\nabort_residual = 1e-300\n[sweep]\nb12 = [0.0, 0.5]\nb23 = [0.0]\n");
    let cfg = write_config(tmp.path(), "w.toml", &text);
    let out = tmp.path().join("out");
    let o = yent(&cfg, &out);
    assert_eq!(o.status.code(), Some(1));
    let index: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("index.json")).unwrap()).unwrap();
    let points = index["points"].as_array().unwrap();
    assert_eq!(points[0]["status"], "ok");
    assert_eq!(points[1]["status"], "failed");
    assert!(points[1]["error"].as_str().unwrap().contains("exceeds abort threshold"));
}

#[test]
fn verify_passes_and_canary_fails_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = write_config(tmp.path(), "v.toml", "mode = \"verify\"\n[verify]\ncases = 3\n");
    let o = yent(&ok, &tmp.path().join("ok"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let bad = write_config(
        tmp.path(),
        "c.toml",
        "mode = \"verify\"\n[verify]\ncases = 3\ncanary = \"corrupted_norm\"\n",
    );
    let o = yent(&bad, &tmp.path().join("bad"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FAIL entanglement_measure::semipositivity"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("bad/verify.json")).unwrap()).unwrap();
    let failed: Vec<&str> = report["properties"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["passed"] == false)
        .map(|p| p["property"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["semipositivity"]);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "v.toml", "mode = \"verify\"\nseed = 1\n[verify]\ncases = 2\n");
    let run = |seed: &str, dir: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_yent"))
            .args(["--config", cfg.to_str().unwrap(), "--seed", seed, "--output-dir"])
            .arg(tmp.path().join(dir))
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        fs::read_to_string(tmp.path().join(dir).join("verify.json")).unwrap()
    };
    let a = run("5", "a");
    assert!(a.contains("\"seed\": 5"));
    assert_ne!(a, run("6", "b"));
    assert_eq!(a, run("5", "c"));
}
