use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netecon"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("netecon-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let dir = scratch("sim");
    let (a, b) = (dir.join("a.txt"), dir.join("b.txt"));
    let ja = json_of(&run(&["simulate", "--model", "er", "--n", "100", "--rho", "0.5", "--seed", "7", "--out", p(&a)]));
    let jb = json_of(&run(&["simulate", "--model", "er", "--n", "100", "--rho", "0.5", "--seed", "7", "--out", p(&b)]));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    for key in ["n", "edges", "density"] {
        assert_eq!(ja["results"][key], jb["results"][key]);
    }
    assert_eq!(ja["meta"]["seed"], 7);
    let jc = json_of(&run(&["simulate", "--model", "er", "--n", "100", "--rho", "0.5", "--seed", "8", "--threads", "1"]));
    assert_ne!(ja["results"]["edges"], jc["results"]["edges"]);
}

#[test]
fn user_errors_exit_two() {
    let out = run(&["moments", "--edges", "/no/such/file.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/file.txt"));
    let out = run(&["moments", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = run(&["simulate", "--model", "er", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn moments_match_library_and_rerun_round_trips() {
    let dir = scratch("moments");
    let edges = dir.join("g.txt");
    let g = netecon::graphon::sample_er(30, 0.2, 4).unwrap();
    std::fs::write(&edges, netecon::graph::write_edgelist(&g, None)).unwrap();
    let doc_path = dir.join("out.json");
    let out = run(&["moments", "--edges", p(&edges), "--n", "30", "--cov", "exact", "--json", p(&doc_path)]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&doc_path).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    let t = netecon::moments::transitivity(&g).unwrap();
    assert_eq!(doc["results"]["transitivity"]["index"].as_f64().unwrap(), t.index);
    assert!(doc["results"]["transitivity"]["se"].as_f64().unwrap() > 0.0);
    assert_eq!(doc["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    // Floats carry 17 significant digits.
    assert!(text.contains(&format!("{:.16e}", t.index)));

    let again = json_of(&run(&["rerun", "--from", p(&doc_path)]));
    assert_eq!(again["results"], doc["results"]);
    assert_eq!(again["meta"]["config"], doc["meta"]["config"]);
}

fn dyadic_files(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    use rand::Rng;
    let n = 20;
    let mut rng = netecon::rng::stream(3, "test/cli", &[]);
    let mut nodes = String::from("id,x,w,r,r2,s\n");
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    for i in 0..n {
        nodes += &format!("a{i},{},{},{},{},{}\n", x[i], i % 2, (i / 2) % 2, (i / 2) % 2, (i / 3) % 2);
    }
    let mut outcomes = String::from("i,j,y\n");
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let p = 1.0 / (1.0 + (-(0.3 - (x[i] - x[j]).abs() + 0.4 * (i % 2) as f64)).exp());
            outcomes += &format!("a{i},a{j},{}\n", (rng.random::<f64>() < p) as u8);
        }
    }
    let (np, op, rp) = (dir.join("nodes.csv"), dir.join("y.csv"), dir.join("recipe.txt"));
    std::fs::write(&np, nodes).unwrap();
    std::fs::write(&op, outcomes).unwrap();
    std::fs::write(&rp, "const\nabsdiff:x\n").unwrap();
    (np, op, rp)
}

#[test]
fn dyadic_fit_reports_estimators_and_bootstrap() {
    let dir = scratch("dyadic");
    let (np, op, rp) = dyadic_files(&dir);
    let doc = json_of(&run(&[
        "dyadic-fit", "--nodes", p(&np), "--outcomes", p(&op), "--recipe", p(&rp), "--family", "logit",
        "--vcov", "fg,jkbc", "--directed", "--bootstrap", "weighted:B=100", "--seed", "2",
    ]));
    let r = &doc["results"];
    assert_eq!(r["names"][1], "absdiff:x");
    let (fg, bc) = (&r["se"]["fg"], &r["se"]["jkbc"]);
    for k in 0..2 {
        assert!((fg[k].as_f64().unwrap() - bc[k].as_f64().unwrap()).abs() < 1e-10);
    }
    assert_eq!(r["bootstrap"]["replicates"], 100);
    assert_eq!(doc["inputs"].as_array().unwrap().len(), 3);
}

#[test]
fn asf_and_numeric_failure_exit_code() {
    let dir = scratch("asf");
    let (np, op, _) = dyadic_files(&dir);
    let basis = dir.join("basis.txt");
    std::fs::write(&basis, "1; w; x; r.r; s.s").unwrap();
    let base = ["asf", "--nodes", p(&np), "--outcomes", p(&op), "--recipe", p(&basis), "--x-col", "r", "--r-cols", "r,r2", "--s-cols", "s"];
    let doc = json_of(&run(&[&base[..], &["--w", "1", "--x", "0"]].concat()));
    let m = doc["results"]["estimate"].as_f64().unwrap();
    assert!(m > 0.0 && m < 1.0);
    let doc = json_of(&run(&[&base[..], &["--contrast", "ate"]].concat()));
    assert!(doc["results"]["se"].as_f64().unwrap() > 0.0);
    // Two copies of the same proxy leave the basis unidentified.
    std::fs::write(&basis, "1; w; x; r.r; r.r2").unwrap();
    let out = run(&base);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn triad_probit_runs() {
    let dir = scratch("triad");
    let (np, op, rp) = dyadic_files(&dir);
    let text = std::fs::read_to_string(&op).unwrap();
    let edges: String = text
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",1"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            format!("{} {}\n", f[0], f[1])
        })
        .collect();
    let ep = dir.join("edges.txt");
    std::fs::write(&ep, edges).unwrap();
    let doc = json_of(&run(&[
        "triad-probit", "--edges", p(&ep), "--covariates", p(&np), "--recipe", p(&rp), "--draws", "8", "--independent",
    ]));
    assert_eq!(doc["results"]["n"], 20);
    assert_eq!(doc["results"]["estimated"].as_array().unwrap().len(), 2);
}

#[test]
fn strategic_actions() {
    let dir = scratch("strategic");
    std::fs::write(dir.join("eq.json"), r#"{"alpha": -1.0, "beta": 0.02, "n": 40, "replicates": 3}"#).unwrap();
    let doc = json_of(&run(&["strategic", "equilibria", "--config", p(&dir.join("eq.json"))]));
    let reps = doc["results"]["replicates"].as_array().unwrap();
    assert_eq!(reps.len(), 3);
    for r in reps {
        assert!(r["lower"]["edges"].as_u64() <= r["upper"]["edges"].as_u64());
    }

    let g = netecon::graphon::sample_er(30, 0.2, 1).unwrap();
    std::fs::write(dir.join("g.txt"), netecon::graph::write_edgelist(&g, None)).unwrap();
    std::fs::write(
        dir.join("smd.json"),
        r#"{"edges": "g.txt", "n": 30, "alpha_grid": [-1.0, -0.5], "beta_grid": [0.0, 0.02], "mode": "inequality"}"#,
    )
    .unwrap();
    let doc = json_of(&run(&["strategic", "smd", "--config", p(&dir.join("smd.json"))]));
    assert_eq!(doc["results"]["criterion"].as_array().unwrap().len(), 4);
    assert!(doc["results"]["identified_set"].is_array());

    let mut nodes = String::from("id,x\n");
    for i in 0..4 {
        nodes += &format!("{i},{}\n", i % 2);
    }
    std::fs::write(dir.join("nodes.csv"), &nodes).unwrap();
    std::fs::write(
        dir.join("mele.json"),
        r#"{"nodes": "nodes.csv", "recipe": "const; same:x", "alpha": [-0.5, 0.5], "beta": 1.0, "steps": 200000, "burn_in": 1000}"#,
    )
    .unwrap();
    let doc = json_of(&run(&["strategic", "mele", "--config", p(&dir.join("mele.json"))]));
    assert!(doc["results"]["diagnostics"]["tv_to_exact"].as_f64().unwrap() < 0.05);

    let mut nodes = String::from("id,x\n");
    for i in 0..15 {
        nodes += &format!("n{i},{}\n", i % 3);
    }
    std::fs::write(dir.join("lnodes.csv"), &nodes).unwrap();
    let mut edges = String::new();
    for i in 0..15 {
        for j in 0..15 {
            if i != j && (i * 7 + j * 3) % 5 == 0 {
                edges += &format!("n{i} n{j}\n");
            }
        }
    }
    std::fs::write(dir.join("ledges.txt"), edges).unwrap();
    std::fs::write(
        dir.join("leung.json"),
        r#"{"edges": "ledges.txt", "nodes": "lnodes.csv", "recipe": "same:x", "interactions": false}"#,
    )
    .unwrap();
    let doc = json_of(&run(&["strategic", "leung", "--config", p(&dir.join("leung.json"))]));
    assert_eq!(doc["results"]["names"][0], "const");
    std::fs::write(dir.join("bad.json"), r#"{"alpha": 0.0, "beta": -1.0, "n": 5}"#).unwrap();
    assert_eq!(run(&["strategic", "equilibria", "--config", p(&dir.join("bad.json"))]).status.code(), Some(2));
}
