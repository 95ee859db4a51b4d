use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Output, Stdio};

use serde_json::{json, Value};

use marll_core::params::Params;

const KARATE: &str = include_str!("../../core/data/karate.txt");

fn marll(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_marll"))
        .args(args)
        .env_remove("MARLL_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = marll(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json_out(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    csv_lines(text).into_iter().skip(1).collect()
}

fn csv_lines(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn layout_karate_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("karate.txt");
    std::fs::write(&path, KARATE).unwrap();
    let path = path.to_str().unwrap();
    let args = ["layout", "--algo", "fr", "--graph", path, "--seed", "7"];
    let first = ok(&args);
    let v: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["positions"].as_object().unwrap().len(), 34);
    assert_eq!((v["nodes"].clone(), v["edges"].clone()), (json!(34), json!(78)));
    for m in ["nc", "no", "ne", "na"] {
        let x = v["metrics"][m].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&x), "{m} = {x}");
    }
    assert_eq!(ok(&args), first, "same command, same bytes");
}

#[test]
fn seed_falls_back_to_environment() {
    let explicit = ok(&["layout", "--graph", "g2", "--seed", "5", "--max-iterations", "200"]);
    let out = Command::new(env!("CARGO_BIN_EXE_marll"))
        .args(["layout", "--graph", "g2", "--max-iterations", "200"])
        .env("MARLL_SEED", "5")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), explicit);
    assert_ne!(ok(&["layout", "--graph", "g2", "--max-iterations", "200"]), explicit);
}

#[test]
fn exit_codes() {
    let out = marll(&["layout", "--graph", "karate", "--algo", "nope"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage:") && err.contains("marl-hybrid"), "{err}");

    assert_eq!(marll(&["eval", "--graph", "karate", "--algo", "fr,bogus"]).status.code(), Some(3));
    assert_eq!(marll(&["layout", "--graph", "/no/such/file"]).status.code(), Some(2));
    assert_eq!(marll(&["layout"]).status.code(), Some(2));
    assert_eq!(marll(&["layout", "--graph", "karate", "--epsilon", "2"]).status.code(), Some(2));
    assert_eq!(marll(&["eval", "--runs", "many"]).status.code(), Some(2));
    assert_eq!(marll(&["layout", "--print-config", "--omega", "0.5,0.5"]).status.code(), Some(2));
    assert_eq!(marll(&["eval", "--runs", "0", "--graph", "karate"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.txt");
    std::fs::write(&broken, "a b\nc\n").unwrap();
    let out = marll(&["layout", "--graph", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn print_config_echoes_defaults_and_overrides() {
    let v = json_out(&["layout", "--print-config"]);
    assert_eq!(v["params"], serde_json::to_value(Params::default()).unwrap());
    assert_eq!(v["algorithm"], json!("marl-fr"));

    let v = json_out(&[
        "layout", "--print-config", "--k", "31", "--lambda", "32", "--zeta", "6", "--mu", "4000", "--p-hops", "4",
        "--omega", "0.2,0.2,0.2,0.2,0.2", "--length", "25", "--beta", "0.7", "--stress-unit", "20", "--radius", "8",
        "--frame", "800", "--epsilon", "0.2", "--alpha", "0.4", "--gamma", "0.6", "--metropolis", "false",
        "--metropolis-scale", "2", "--q-sharing", "per-agent", "--temperature", "12", "--cooling-factor", "0.8",
        "--cooling-period", "50", "--min-period", "10", "--max-iterations", "900", "--avg-displacement", "4",
        "--displacement-rate", "1.5", "--stress-ratio", "0.001", "--window", "25", "--metric-radius", "9",
        "--edge-length", "33",
    ]);
    let p: Params = serde_json::from_value(v["params"].clone()).unwrap();
    let mut expected = Params {
        k: 31.0,
        lambda: 32.0,
        zeta: 6.0,
        mu: 4000.0,
        p_hops: 4,
        omega: [0.2; 5],
        length: 25.0,
        beta: 0.7,
        stress_unit: 20.0,
        radius: 8.0,
        frame: 800.0,
        ..Params::default()
    };
    expected.learn.epsilon = 0.2;
    expected.learn.alpha = 0.4;
    expected.learn.gamma = 0.6;
    expected.learn.metropolis = false;
    expected.learn.metropolis_scale = 2.0;
    expected.learn.q_sharing = marll_core::engine::QSharing::PerAgent;
    expected.learn.cooling.initial = 12.0;
    expected.learn.cooling.factor = 0.8;
    expected.learn.cooling.period = marll_core::convergence::Period::Iterations(50);
    expected.learn.cooling.min_period = 10;
    expected.convergence.max_iterations = 900;
    expected.convergence.avg_displacement = 4.0;
    expected.convergence.displacement_rate = 1.5;
    expected.convergence.stress_ratio = 0.001;
    expected.convergence.window = marll_core::convergence::Window::Iterations(25);
    expected.metrics.radius = 9.0;
    expected.metrics.edge_length = marll_core::metrics::EdgeLength::Fixed(33.0);
    assert_eq!(p, expected);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("params.json");
    std::fs::write(&file, r#"{"k": 50, "learn": {"epsilon": 0.3, "alpha": 0.3, "gamma": 0.5,
        "cooling": {"initial": 10, "factor": 0.75, "period": "graph_size"}, "metropolis": true,
        "metropolis_scale": 1, "q_sharing": "shared"}}"#)
        .unwrap();
    let v = json_out(&["eval", "--print-config", "--params", file.to_str().unwrap(), "--k", "45"]);
    assert_eq!(v["params"]["k"], json!(45.0));
    assert_eq!(v["params"]["learn"]["epsilon"], json!(0.3));
    assert_eq!(v["params"]["learn"]["cooling"]["min_period"], json!(100));
}

#[test]
fn eval_single_run_matches_layout() {
    let fast = ["--max-iterations", "300"];
    let layout = json_out(&[&["layout", "--graph", "karate", "--algo", "marl-fr", "--seed", "9"][..], &fast].concat());
    let csv = ok(&[&["eval", "--graph", "karate", "--algo", "marl-fr", "--runs", "1", "--seed", "9"][..], &fast].concat());
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 1);
    let header = &csv_lines(&csv)[0];
    for m in ["nc", "no", "ne", "na"] {
        let col = header.iter().position(|h| h == m).unwrap();
        let got: f64 = rows[0][col].parse().unwrap();
        assert_eq!(got, layout["metrics"][m].as_f64().unwrap(), "{m}");
    }
    let col = header.iter().position(|h| h == "iterations").unwrap();
    assert_eq!(rows[0][col].parse::<f64>().unwrap(), layout["iterations"].as_f64().unwrap());
}

#[test]
fn eval_row_counts_and_outputs() {
    let out = ok(&["eval"]);
    assert_eq!(out.trim(), marll_core::eval::AGGREGATE_HEADER.join(","));
    assert_eq!(ok(&["eval", "--graph", ""]), out);

    let dir = tempfile::tempdir().unwrap();
    let agg = dir.path().join("agg.csv");
    let trials = dir.path().join("trials.csv");
    let summary = dir.path().join("summary.json");
    ok(&[
        "eval", "--graph", "path:6", "--algo", "fr", "--algo", "marl-fr", "--runs", "3", "--jobs", "2",
        "--output", agg.to_str().unwrap(), "--trials", trials.to_str().unwrap(),
        "--summary", summary.to_str().unwrap(),
    ]);
    let rows = marll_core::eval::import_csv(std::fs::File::open(&agg).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].algorithm.as_str(), rows[1].algorithm.as_str()), ("fr", "marl-fr"));
    assert!(rows.iter().all(|r| r.runs == 3 && r.graph == "path:6"));
    let per_trial = marll_core::metrics::read_csv(std::fs::File::open(&trials).unwrap()).unwrap();
    assert_eq!(per_trial.len(), 6);
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["ratios"].as_array().unwrap().len(), 1);
    assert_eq!(s["ratios"][0]["marl"], json!("marl-fr"));
    assert_eq!(s["ratios"][0]["classic"], json!("fr"));
}

#[test]
fn output_file_and_locked_incremental_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("laid.json");
    ok(&["layout", "--graph", "cycle:8", "--algo", "marl-fr", "--seed", "3", "--output", out.to_str().unwrap()]);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let nodes = doc["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 8);
    assert!(nodes.iter().all(|n| n["x"].is_f64() && n["y"].is_f64()));

    // Keep the first three nodes where they are and add a chord.
    let mut doc = doc;
    for n in doc["nodes"].as_array_mut().unwrap().iter_mut().skip(3) {
        let o = n.as_object_mut().unwrap();
        o.remove("x");
        o.remove("y");
    }
    doc["edges"].as_array_mut().unwrap().push(json!({"source": "0", "target": "4"}));
    let input = dir.path().join("partial.json");
    std::fs::write(&input, doc.to_string()).unwrap();
    let v = json_out(&["layout", "--graph", input.to_str().unwrap(), "--lock-given", "--seed", "4"]);
    for i in 0..3 {
        let id = doc["nodes"][i]["id"].as_str().unwrap();
        assert_eq!(v["positions"][id]["x"], doc["nodes"][i]["x"], "node {id}");
        assert_eq!(v["positions"][id]["y"], doc["nodes"][i]["y"], "node {id}");
    }
    assert_eq!(v["edges"], json!(9));
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn spawn_server(port: &str) -> (Server, u16) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_marll"))
        .args(["serve", "--port", port])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let port = line.trim().rsplit(':').next().unwrap().parse().unwrap();
    (Server(child), port)
}

#[test]
fn serve_ephemeral_port_health_and_conflict() {
    let (_server, port) = spawn_server("0");
    assert_ne!(port, 0);

    let mut s = TcpStream::connect(("127.0.0.1", port)).unwrap();
    s.write_all(b"GET /health HTTP/1.1\r\nHost: x\r\n\r\n").unwrap();
    let mut body = String::new();
    s.read_to_string(&mut body).unwrap();
    assert!(body.starts_with("HTTP/1.1 200 OK"), "{body}");

    let mut s = TcpStream::connect(("127.0.0.1", port)).unwrap();
    s.write_all(b"{\"protocol\":1,\"kind\":\"ping\",\"seq\":1}\n").unwrap();
    let mut line = String::new();
    BufReader::new(&s).read_line(&mut line).unwrap();
    let pong: Value = serde_json::from_str(&line).unwrap();
    assert_eq!(pong["kind"], json!("pong"));

    let out = marll(&["serve", "--port", &port.to_string()]);
    assert_eq!(out.status.code(), Some(4));
}
