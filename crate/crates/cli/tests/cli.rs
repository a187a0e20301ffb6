use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_formres"));
    c.env_remove("FORMRES_OUT_DIR");
    c
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn sds(task: &str, numerics: &str) -> String {
    format!(
        r#"{{"version":"1","spacetime":{{"kind":"sds","n":4,"mass":1.0,"lambda":0.01}},"task":{task},"numerics":{numerics}}}"#
    )
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn result<'a>(s: &'a Value, op: &str) -> &'a Value {
    s["results"].as_array().unwrap().iter().find(|r| r["operation"] == op).map(|r| &r["value"]).unwrap()
}

#[test]
fn cohomology_csv_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &sds(r#"{"kind":"cohomology"}"#, "{}"));
    let out = tmp.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("cohomology.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "K,1,2,2,2,1"), "{csv}");
    assert!(csv.lines().any(|l| l == "H,1,0,2,0,1"), "{csv}");
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["schema_version"], "1");
    assert_eq!(m["status"], "ok");
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["inputs"]["spacetime"]["n"], 4);

    let ds = r#"{"version":"1","spacetime":{"kind":"ds","n":4},"task":{"kind":"cohomology"}}"#;
    let cfg = write_config(tmp.path(), "d.json", ds);
    assert!(run(&cfg, &out, &[]).status.success());
    let csv = fs::read_to_string(out.join("cohomology.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "K,1,1,0,1,1"), "{csv}");
}

#[test]
fn trapping_summary_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "t.json", &sds(r#"{"kind":"trapping"}"#, r#"{"escape_samples":400}"#));
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(run(&cfg, &a, &[]).status.success());
    assert!(run(&cfg, &b, &[]).status.success());
    assert!(run(&cfg, &c, &["--seed", "99"]).status.success());
    let rep = result(&summary(&a), "trapping::trapping_report").clone();
    assert!((rep["r_p"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    let nu = rep["nu_min"].as_f64().unwrap();
    // 2 r_p sqrt(3 / (1 - 3 * 9 * 0.01 * 3 / 3)) for n = 4
    assert!((nu - 6.0 * (3.0f64 / (1.0 - 0.27)).sqrt()).abs() < 1e-12, "{nu}");
    assert_eq!(rep["gap"]["holds"], true);
    assert_eq!(rep["escape"]["violations"], 0);

    let read = |d: &Path| fs::read(d.join("escape_samples.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let m: Value = serde_json::from_str(&fs::read_to_string(c.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 99);
}

#[test]
fn invalid_dimension_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let body = sds(r#"{"kind":"geometry"}"#, "{}").replace("\"n\":4", "\"n\":3");
    let cfg = write_config(tmp.path(), "bad.json", &body);
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("n = 3 must be >= 4"), "{err}");

    let o = run(&tmp.path().join("missing.json"), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let o = bin().arg("run").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let task = r#"{"kind":"mode-scan","sector":{"kind":"scalar","ell":0},"scan_box":{"re_min":0.1,"re_max":0.2,"im_min":0.1,"im_max":0.2,"step":0.1}}"#;
    let cfg = write_config(tmp.path(), "m.json", &sds(task, r#"{"frobenius":{"order":4,"series_tol":1e-300}}"#));
    let out = tmp.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("Frobenius"));
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let from_cfg = tmp.path().join("cfg");
    let body = sds(r#"{"kind":"geometry"}"#, r#"{"grid_points":11}"#)
        .replace(r#""numerics""#, &format!(r#""output":{{"directory":{:?}}},"numerics""#, from_cfg.to_str().unwrap()));
    let cfg = write_config(tmp.path(), "g.json", &body);
    assert!(bin().arg("run").arg(&cfg).status().unwrap().success());
    assert!(from_cfg.join("profile.csv").exists());

    let from_env = tmp.path().join("env");
    assert!(bin().arg("run").arg(&cfg).env("FORMRES_OUT_DIR", &from_env).status().unwrap().success());
    assert!(from_env.join("profile.csv").exists());

    let from_flag = tmp.path().join("flag");
    let st = bin().arg("run").arg(&cfg).arg("--out").arg(&from_flag).env("FORMRES_OUT_DIR", &from_env).status().unwrap();
    assert!(st.success());
    let csv = fs::read_to_string(from_flag.join("profile.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,mu,dmu,mu_tilde"));
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn every_task_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("zero-modes", sds(r#"{"kind":"zero-modes"}"#, r#"{"grid_points":21}"#), "u_pm.csv"),
        (
            "ds-table",
            r#"{"version":"1","spacetime":{"kind":"ds","n":4},"task":{"kind":"ds-table"}}"#.to_string(),
            "indicial_roots.csv",
        ),
        (
            "kds-verify",
            r#"{"version":"1","spacetime":{"kind":"kds","mass":1.0,"cosmo":0.03,"spin":0.1},
                "task":{"kind":"kds-verify","fields":["u1"],"checks":["closed"]},"numerics":{"sizes":[32,64]}}"#
                .to_string(),
            "kds_refinement.csv",
        ),
        (
            "evolve",
            sds(
                r#"{"kind":"evolve","sector":{"kind":"scalar","ell":0,"data":{"bump":{"center":0.0,"width":4.0,"amplitude":1.0}}}}"#,
                r#"{"fit_start":5.0,"tortoise":{"h":0.2,"t_max":20.0}}"#,
            ),
            "timeseries.csv",
        ),
        (
            "evolve-oneform",
            sds(
                r#"{"kind":"evolve","sector":{"kind":"one_form","data":{"kind":"zero_modes","c_plus":1.0,"c_minus":0.0}}}"#,
                r#"{"fit_start":2.0,"sliced":{"cells":64,"t_max":5.0}}"#,
            ),
            "final_state.csv",
        ),
        (
            "mode-scan",
            sds(
                r#"{"kind":"mode-scan","sector":{"kind":"scalar","ell":0},"scan_box":{"re_min":-0.2,"re_max":0.2,"im_min":0.1,"im_max":0.3,"step":0.1}}"#,
                "{}",
            ),
            "scan.csv",
        ),
    ];
    for (name, body, file) in cases {
        let cfg = write_config(tmp.path(), &format!("{name}.json"), &body);
        let out = tmp.path().join(name);
        let o = run(&cfg, &out, &[]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let csv = fs::read_to_string(out.join(file)).unwrap();
        assert!(csv.lines().count() > 1, "{name}");
        let s = summary(&out);
        assert!(s["results"].as_array().unwrap().iter().all(|r| r["operation"].is_string()));
    }
    let scan = fs::read_to_string(tmp.path().join("mode-scan/scan.csv")).unwrap();
    assert_eq!(scan.lines().next(), Some("re_sigma,im_sigma,abs_det,arg_det"));
}
