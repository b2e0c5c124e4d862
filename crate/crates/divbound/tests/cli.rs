use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn divbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divbound")).args(args).output().expect("binary runs")
}

fn divbound_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divbound")).env("DIVBOUND_THREADS", threads).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

struct Files {
    dir: TempDir,
}

impl Files {
    fn new() -> Self {
        let files = Files { dir: tempfile::tempdir().unwrap() };
        files.write("hamming2.json", r#"{"labels":["0","1"],"metric":[[0,1],[1,0]]}"#);
        files.write("bern3.json", r#"{"weights":[0.7,0.3]}"#);
        files.write("bern5.json", r#"{"weights":[0.5,0.5]}"#);
        files.write("point.json", r#"{"weights":[1.0,0.0]}"#);
        files
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }
}

#[test]
fn divergence_of_bernoulli_files() {
    let f = Files::new();
    let out = divbound(&["divergence", "--kind", "kl", "--mu", &f.path("bern5.json"), "--nu", &f.path("bern3.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 0.082282).abs() < 1e-6);
    assert_eq!(v["kind"], "kl");
    assert_eq!(v["absolutely_continuous"], true);
    assert_eq!(v["config"]["kind"], "kl");

    let same = json(&divbound(&["divergence", "--kind", "kl", "--mu", &f.path("bern5.json"), "--nu", &f.path("bern5.json")]));
    assert_eq!(same["value"].as_f64(), Some(0.0));

    // ν charges a point μ does not
    let out = divbound(&["divergence", "--kind", "kl", "--mu", &f.path("point.json"), "--nu", &f.path("bern5.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!((v["value"].as_str(), v["absolutely_continuous"].as_bool()), (Some("inf"), Some(false)));

    let tv = json(&divbound(&["divergence", "--kind", "hellinger:2", "--mu", &f.path("bern5.json"), "--nu", &f.path("bern3.json")]));
    // (0.7²/0.5 + 0.3²/0.5)/2
    assert!((tv["value"].as_f64().unwrap() - 0.58).abs() < 1e-12);
}

#[test]
fn wasserstein_of_bernoulli_pair() {
    let f = Files::new();
    let args = ["wasserstein", "--space", &f.path("hamming2.json"), "--mu", &f.path("bern3.json"), "--nu", &f.path("bern5.json")];
    let out = divbound(&args);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["distance"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert!((v["dual_distance"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert!(v["duality_gap"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["gap_within_tolerance"], true);
    assert_eq!(v["plan"].as_array().unwrap().len(), 2);

    let same = json(&divbound(&["wasserstein", "--space", &f.path("hamming2.json"), "--mu", &f.path("bern3.json"), "--nu", &f.path("bern3.json")]));
    assert_eq!(same["distance"].as_f64(), Some(0.0));

    let w2 = json(&divbound(&["wasserstein", "--p", "2", "--space", &f.path("hamming2.json"), "--mu", &f.path("bern3.json"), "--nu", &f.path("bern5.json")]));
    assert!((w2["distance"].as_f64().unwrap() - 0.2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn input_errors_exit_2_without_output() {
    let f = Files::new();
    let broken = f.write("broken.json", r#"{"weights":[0.5,"#);
    let report = f.path("report.json");
    let out = divbound(&[
        "divergence", "--kind", "kl", "--mu", &f.path("bern5.json"), "--nu", broken.to_str().unwrap(), "--output", &report,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed JSON"));
    assert!(!Path::new(&report).exists());

    let unknown_flag = divbound(&["divergence", "--kind", "kl", "--mu", "a", "--nu", "b", "--fast"]);
    assert_eq!(unknown_flag.status.code(), Some(2));
    let unknown_kind = divbound(&["divergence", "--kind", "renyi", "--mu", &f.path("bern5.json"), "--nu", &f.path("bern3.json")]);
    assert_eq!(unknown_kind.status.code(), Some(2));
    let missing = divbound(&["divergence", "--kind", "kl", "--mu", &f.path("nope.json"), "--nu", &f.path("bern3.json")]);
    assert_eq!(missing.status.code(), Some(2));
    let mismatch = divbound(&[
        "wasserstein", "--space", &f.path("hamming2.json"), "--mu", &f.path("bern3.json"), "--nu",
        f.write("three.json", r#"{"weights":[0.2,0.3,0.5]}"#).to_str().unwrap(),
    ]);
    assert_eq!(mismatch.status.code(), Some(2));
    let extra_field = f.write("extra.json", r#"{"weights":[0.5,0.5],"mass":1}"#);
    let out = divbound(&["divergence", "--kind", "kl", "--mu", extra_field.to_str().unwrap(), "--nu", &f.path("bern3.json")]);
    assert_eq!(out.status.code(), Some(2));
    let bad_threads = divbound_threads("zero", &["tci-check", "--preset", "pinsker", "--trials", "1"]);
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn tci_check_contract() {
    let ok = divbound(&["tci-check", "--preset", "pinsker"]);
    assert_eq!(ok.status.code(), Some(0));
    let v = json(&ok);
    assert_eq!((v["trials"].as_u64(), v["violations"].as_u64()), (Some(1000), Some(0)));
    assert_eq!(v["config"]["phi"]["c"].as_f64(), Some(0.25));
    assert_eq!(v["config"]["seed"].as_u64(), Some(7));

    let halved = divbound(&["tci-check", "--preset", "pinsker", "--constant-scale", "0.5", "--trials", "100"]);
    assert_eq!(halved.status.code(), Some(3));
    let v = json(&halved);
    let w = &v["witnesses"][0];
    assert!(w["lhs"].as_f64().unwrap() > w["bound"].as_f64().unwrap());

    let empty = divbound(&["tci-check", "--preset", "pinsker", "--trials", "0"]);
    assert_eq!(empty.status.code(), Some(0));
    assert_eq!(json(&empty)["trials"].as_u64(), Some(0));
}

#[test]
fn tci_check_from_files_with_bare_auto() {
    let f = Files::new();
    let out = divbound(&[
        "tci-check", "--space", &f.path("hamming2.json"), "--mu", &f.path("bern3.json"), "--divergence", "kl",
        "--phi", r#"{"kind":"quadratic","c":auto}"#, "--trials", "300", "--seed", "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["config"]["constant_auto"], true);
    assert_eq!(v["config"]["phi"]["c"].as_f64(), Some(0.25));
    assert_eq!(v["config"]["mu"], serde_json::json!([0.7, 0.3]));

    let no_phi = divbound(&["tci-check", "--space", &f.path("hamming2.json"), "--mu", &f.path("bern3.json")]);
    assert_eq!(no_phi.status.code(), Some(2));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let args = ["tci-check", "--preset", "pinsker", "--constant-scale", "0.7", "--trials", "500"];
    let one = divbound_threads("1", &args);
    let four = divbound_threads("4", &args);
    let again = divbound_threads("4", &args);
    assert_eq!(one.status.code(), four.status.code());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(four.stdout, again.stdout);
}

#[test]
fn genexp_preset_and_csv() {
    let f = Files::new();
    let csv = f.path("rows.csv");
    let report = f.path("report.json");
    let out = divbound_threads("3", &["genexp", "--preset", "tiny-gibbs", "--csv", &csv, "--output", &report]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 108);
    assert!(v["violations"].as_array().unwrap().is_empty());
    assert_eq!(v["config"]["experiments"].as_array().unwrap().len(), 3);

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("experiment,gamma,n,gen_err,mi_bound,chi2_bound,ismi_bound,cmi_bound"));
    let mut count = 0;
    for line in rows {
        count += 1;
        let cells: Vec<&str> = line.split(',').collect();
        let gen_err: f64 = cells[3].parse().unwrap();
        if cells[1] == "0.0" {
            assert!(gen_err.abs() <= 1e-12, "{line}");
            // √(2σ²I/n) with I at rounding level
            assert!(cells[4].parse::<f64>().unwrap().abs() < 1e-7, "{line}");
        }
        for cell in &cells[4..] {
            if !cell.is_empty() {
                assert!(cell.parse::<f64>().unwrap() >= gen_err.abs() - 1e-12, "{line}");
            }
        }
    }
    assert_eq!(count, 108);

    let serial = divbound_threads("1", &["genexp", "--preset", "tiny-gibbs"]);
    assert_eq!(serial.stdout, std::fs::read(&report).unwrap());
}

#[test]
fn genexp_rejects_invalid_configs() {
    let f = Files::new();
    let huge = f.write(
        "huge.json",
        r#"{"problem":{"z_labels":["a","b","c","d"],"h_labels":["g"],"loss":[[0,1,0,1]],"p_z":[0.25,0.25,0.25,0.25],"n":20},
            "algorithm":{"gamma":1},"bounds":["mi"],"seed":1}"#,
    );
    let out = divbound(&["genexp", "--config", huge.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
    assert_eq!(divbound(&["genexp"]).status.code(), Some(2));
    assert_eq!(divbound(&["genexp", "--preset", "tiny-gibbs", "--config", "x.json"]).status.code(), Some(2));

    let single = f.write(
        "single.json",
        r#"{"problem":{"z_labels":["a","b"],"h_labels":["g","h"],"loss":[[0,1],[1,0]],"p_z":[0.5,0.5],"n":2},
            "algorithm":{"prior":[0.9,0.1],"gamma":2},"bounds":["mi","cmi"],"seed":3}"#,
    );
    let out = divbound(&["genexp", "--config", single.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["reports"][0]["chi2_bound"], Value::Null);
    assert!(v["reports"][0]["cmi_bound"]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(v["config"]["experiments"][0]["algorithm"]["prior"], serde_json::json!([0.9, 0.1]));
}

#[test]
fn conjugate_tables() {
    let out = divbound(&["conjugate", "--phi", r#"{"kind":"power","c":1.0,"beta":2.0}"#, "--t-max", "2", "--points", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let table = v["table"].as_array().unwrap();
    assert_eq!(table.len(), 5);
    // |λ|²/2 is self-conjugate
    for row in table {
        let t = row["t"].as_f64().unwrap();
        assert!((row["phi_star"].as_f64().unwrap() - t * t / 2.0).abs() < 1e-12);
        assert!((row["inverse"].as_f64().unwrap() - (2.0 * t).sqrt()).abs() < 1e-12);
    }
    let young = json(&divbound(&["conjugate", "--phi", r#"{"kind":"quadratic","c":2}"#, "--duality", "young", "--n", "8"]));
    assert_eq!(young["config"]["duality"], "young");
    assert!(young["table"][1]["inverse_via_base"].is_number());
    assert_eq!(divbound(&["conjugate", "--phi", r#"{"kind":"quadratic","c":auto}"#]).status.code(), Some(2));
    assert_eq!(divbound(&["conjugate", "--phi", r#"{"kind":"quadratic","c":-1}"#]).status.code(), Some(2));
}
