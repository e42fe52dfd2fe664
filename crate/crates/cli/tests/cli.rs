use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use woodbury_core::experiment::figure1_problem;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_woodbury"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("woodbury-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn solve_exact_and_sampled() {
    let dir = scratch("solve");
    let problem = dir.join("problem.json");
    fs::write(&problem, serde_json::to_string(&figure1_problem(3).unwrap()).unwrap()).unwrap();

    let out = run(bin().arg("solve").arg("--problem").arg(&problem).args(["--mode", "exact"]));
    let v = json(&out);
    assert!((v["overlap"][0].as_f64().unwrap() - 0.5).abs() < 1e-12, "{v}");

    let csv = dir.join("estimates.csv");
    let noise = dir.join("noise.json");
    fs::write(&noise, r#"{"p1":0.002,"p2":0.004,"readout":[[0.97,0.05],[0.03,0.95]]}"#).unwrap();
    run(bin()
        .arg("solve")
        .arg("--problem")
        .arg(&problem)
        .args(["--shots", "2000", "--mitigation", "mem+zne", "--seed", "4"])
        .arg("--noise")
        .arg(&noise)
        .arg("--out")
        .arg(&csv));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("label,re,im,shots,std_error\nz|b,"), "{text}");
    assert_eq!(text.lines().count(), 5);

    let out = run(bin().arg("solve").arg("--problem").arg(&problem).args(["--epsilon", "0.05"]));
    assert!(String::from_utf8_lossy(&out.stderr).contains("shot plan"));
    assert!((json(&out)["overlap"][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn figure1_output_is_reproducible() {
    let dir = scratch("figure1");
    let config = dir.join("config.json");
    fs::write(
        &config,
        r#"{"sizes":[2,4],"shots_per_inner_product":5000,"mitigations":["none","mem","mem_zne"],
            "noise":{"p1":0.004,"p2":0.004,"readout":[[0.97,0.05],[0.03,0.95]]},"seed":9}"#,
    )
    .unwrap();
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    run(bin().arg("figure1").arg("--config").arg(&config).arg("--out").arg(&a));
    run(bin().arg("figure1").arg("--config").arg(&config).arg("--out").arg(&b));
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("log2_n,mitigation,estimate,exact,relative_error,wall_time_s\n"));
    assert_eq!(text.lines().count(), 7);
    let plot: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("a.plot.json")).unwrap()).unwrap();
    assert_eq!(plot["mem_zne"].as_array().unwrap().len(), 2);
}

#[test]
fn figure1_rejects_oversized_statevector_runs() {
    let dir = scratch("too-big");
    let config = dir.join("config.json");
    fs::write(&config, r#"{"sizes":[24],"mode":"exact","backend":"statevector"}"#).unwrap();
    let out = bin().arg("figure1").arg("--config").arg(&config).arg("--out").arg(dir.join("x.csv")).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn verification_commands() {
    let v = json(&run(bin().args(["verify-conjecture", "--dim-max", "64", "--trials", "50", "--seed", "1"])));
    assert!(v["max_deviation"].as_f64().unwrap() < 1e-8);
    assert!((v["canonical_kappa_svd"].as_f64().unwrap() - 2.0).abs() < 1e-10);

    let v = json(&run(bin().args(["oracle-check", "--trials", "12", "--max-qubits", "3", "--max-rank", "2", "--seed", "1"])));
    assert!(v["max_delta"].as_f64().unwrap() < 1e-9);

    assert!(!bin().args(["oracle-check", "--max-qubits", "9"]).output().unwrap().status.success());
}
