use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hignn::oracle::{stokes_drag, Domain};
use hignn::surrogate::SurrogateParams;
use serde_json::json;
use tempfile::TempDir;

fn hignn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hignn")).args(args).output().expect("binary runs")
}

fn run_ok(sub: &str, config: &Path, extra: &[&str]) -> String {
    let mut args = vec![sub, "--config", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = hignn(&args);
    assert!(out.status.success(), "{sub} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_json(dir: &Path, name: &str, value: serde_json::Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    p
}

fn write_model(dir: &Path) -> PathBuf {
    let alpha = stokes_drag(1.0, 1.0, &Domain::Unbounded).unwrap()[(0, 0)];
    let params = SurrogateParams::initialize_scaled([alpha; 3], 5.0, 11, 1e-3).unwrap();
    let p = dir.join("model.json");
    params.save(&p).unwrap();
    p
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn gen_data_is_deterministic_and_seed_overridable() {
    let dir = TempDir::new().unwrap();
    let cfg = |out: &str| {
        json!({"command": "gen-data", "seed": 5, "count": 12,
               "sampler": {"particles": 3, "max_extent": 12.0}, "output": dir.path().join(out)})
    };
    let a = write_json(dir.path(), "a.json", cfg("a.csv"));
    let b = write_json(dir.path(), "b.json", cfg("b.csv"));
    let c = write_json(dir.path(), "c.json", cfg("c.csv"));
    let stdout = run_ok("gen-data", &a, &[]);
    assert!(stdout.contains("samples: 12"));
    run_ok("gen-data", &b, &[]);
    run_ok("gen-data", &c, &["--seed", "6"]);
    assert_eq!(read(&dir.path().join("a.csv")), read(&dir.path().join("b.csv")));
    assert_ne!(read(&dir.path().join("a.csv")), read(&dir.path().join("c.csv")));
}

#[test]
fn train_runs_end_to_end_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data.csv");
    let gen = write_json(
        dir.path(),
        "gen.json",
        json!({"command": "gen-data", "seed": 1, "count": 24,
               "sampler": {"particles": 3, "max_extent": 10.0}, "output": data}),
    );
    run_ok("gen-data", &gen, &[]);
    let cfg = |tag: &str| {
        json!({"command": "train", "seed": 3, "data": data,
               "model_output": dir.path().join(format!("m{tag}.json")),
               "history_output": dir.path().join(format!("h{tag}.csv")),
               "train": {"epochs": 3, "batch_size": 8}})
    };
    let c1 = write_json(dir.path(), "t1.json", cfg("1"));
    let c2 = write_json(dir.path(), "t2.json", cfg("2"));
    let stdout = run_ok("train", &c1, &[]);
    assert!(stdout.contains("best test loss"));
    run_ok("train", &c2, &[]);
    assert_eq!(read(&dir.path().join("m1.json")), read(&dir.path().join("m2.json")));
    let history = read(&dir.path().join("h1.csv"));
    assert_eq!(history.lines().next(), Some("epoch,lr,train_loss,test_loss"));
    assert_eq!(history.lines().count(), 4);
    SurrogateParams::load(&dir.path().join("m1.json")).unwrap();
}

#[test]
fn corrupt_csv_row_reports_its_line() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path());
    let pos = dir.path().join("pos.csv");
    let forces = dir.path().join("f.csv");
    std::fs::write(&pos, "x,y,z\n0,0,0\n5,0,0\n0,abc,0\n").unwrap();
    std::fs::write(&forces, "x,y,z\n0,0,-1\n0,0,-1\n0,0,-1\n").unwrap();
    let cfg = write_json(
        dir.path(),
        "p.json",
        json!({"command": "predict", "model": model, "positions": pos, "forces": forces,
               "output": dir.path().join("u.csv")}),
    );
    let out = hignn(&["predict", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("pos.csv:4:"), "{err}");
}

#[test]
fn wrong_command_echo_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_json(
        dir.path(),
        "x.json",
        json!({"command": "train", "count": 3, "output": dir.path().join("o.csv")}),
    );
    let out = hignn(&["gen-data", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("gen-data"));
}

#[test]
fn single_particle_prediction_is_isolated_mobility() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path());
    let pos = dir.path().join("pos.csv");
    let forces = dir.path().join("f.csv");
    std::fs::write(&pos, "x,y,z\n1.5,-2,3\n").unwrap();
    std::fs::write(&forces, "x,y,z\n0.5,-1,2\n").unwrap();
    let out = dir.path().join("u.csv");
    let cfg = write_json(
        dir.path(),
        "p.json",
        json!({"command": "predict", "model": model, "positions": pos, "forces": forces, "output": out}),
    );
    run_ok("predict", &cfg, &[]);
    let mut r = csv::Reader::from_path(&out).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["particle_id", "ux", "uy", "uz"]);
    let row: Vec<f64> = r.records().next().unwrap().unwrap().iter().map(|s| s.parse().unwrap()).collect();
    let alpha = stokes_drag(1.0, 1.0, &Domain::Unbounded).unwrap()[(0, 0)];
    for (u, f) in row[1..].iter().zip([0.5, -1.0, 2.0]) {
        assert_eq!(*u, alpha * f);
    }
}

#[test]
fn worker_count_does_not_change_predictions() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path());
    let mut pos = String::from("x,y,z\n");
    let mut forces = String::from("x,y,z\n");
    for i in 0..40 {
        let (x, y, z) = ((i % 4) as f64 * 2.6, ((i / 4) % 5) as f64 * 2.7, (i / 20) as f64 * 2.9);
        pos.push_str(&format!("{x},{y},{z}\n"));
        forces.push_str(&format!("{},{},-1\n", (i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
    }
    std::fs::write(dir.path().join("pos.csv"), pos).unwrap();
    std::fs::write(dir.path().join("f.csv"), forces).unwrap();
    let mut outputs = Vec::new();
    for w in ["1", "4"] {
        let out = dir.path().join(format!("u{w}.csv"));
        let cfg = write_json(
            dir.path(),
            &format!("p{w}.json"),
            json!({"command": "predict", "model": model, "positions": dir.path().join("pos.csv"),
                   "forces": dir.path().join("f.csv"), "output": out}),
        );
        run_ok("predict", &cfg, &["--workers", w]);
        outputs.push(read(&out));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].lines().count(), 41);
}

#[test]
fn simulate_cube_writes_every_frame_and_metadata() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("traj.csv");
    let cfg = write_json(
        dir.path(),
        "s.json",
        json!({"command": "simulate", "backend": {"type": "oracle", "order": 3},
               "force": {"uniform": [0.0, 0.0, -1.0]},
               "initial": {"type": "cubic_lattice", "n_side": 2, "spacing": 4.0},
               "dt": 0.1, "steps": 20, "output_every": 5, "output": out}),
    );
    run_ok("simulate", &cfg, &[]);
    let text = read(&out);
    assert_eq!(text.lines().next(), Some("t,particle_id,x,y,z"));
    assert_eq!(text.lines().count(), 1 + 8 * 5);
    let meta: serde_json::Value = serde_json::from_str(&read(&dir.path().join("traj.meta.json"))).unwrap();
    assert_eq!(meta["backend"], "oracle3");
    assert_eq!(meta["steps"], 20);
}

#[test]
fn simulate_surrogate_morse_cluster() {
    let dir = TempDir::new().unwrap();
    let model = write_model(dir.path());
    let out = dir.path().join("traj.csv");
    let cfg = write_json(
        dir.path(),
        "s.json",
        json!({"command": "simulate", "backend": {"type": "surrogate", "model": model},
               "force": {"uniform": [0.0, 0.0, -1.0], "morse": {"rho": 1.0, "depth": 1.0, "r_eq": 2.5}},
               "initial": {"type": "cubic_lattice", "n_side": 3, "spacing": 3.0},
               "dt": 0.05, "steps": 10, "output": out}),
    );
    run_ok("simulate", &cfg, &["--workers", "2"]);
    assert_eq!(read(&out).lines().count(), 1 + 27 * 11);
    let meta: serde_json::Value = serde_json::from_str(&read(&dir.path().join("traj.meta.json"))).unwrap();
    assert_eq!(meta["model_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn overlapping_start_aborts_with_pair() {
    let dir = TempDir::new().unwrap();
    let pos = dir.path().join("pos.csv");
    std::fs::write(&pos, "x,y,z\n0,0,0\n1.5,0,0\n").unwrap();
    let cfg = write_json(
        dir.path(),
        "s.json",
        json!({"command": "simulate", "backend": {"type": "oracle", "order": 1},
               "force": {"uniform": [0.0, 0.0, -1.0]}, "initial": {"type": "file", "path": pos},
               "dt": 0.1, "steps": 5, "output": dir.path().join("t.csv")}),
    );
    let out = hignn(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("overlap"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bench_writes_oracle_tables() {
    let dir = TempDir::new().unwrap();
    let lattice = dir.path().join("lattice.csv");
    let chain = dir.path().join("chain.csv");
    let cfg = write_json(
        dir.path(),
        "b.json",
        json!({"command": "bench",
               "lattice": {"ls": [2.5, 6.0], "output": lattice},
               "chain": {"ns": [2, 5], "l": 3.0, "output": chain}}),
    );
    run_ok("bench", &cfg, &[]);
    let table = read(&lattice);
    assert_eq!(table.lines().next(), Some("L,backend,variant,value"));
    assert_eq!(table.lines().count(), 5);
    assert!(read(&chain).starts_with("N,backend,variant,value"));
}
