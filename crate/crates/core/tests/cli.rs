use std::path::PathBuf;
use std::process::{Command, Output};

fn maf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maf")).args(args).env("MAF_THREADS", "2").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("maf-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn identical_trees() {
    let p = write("same.nwk", "((a,b),(c,d));\n((b,a),(d,c));\n");
    let o = maf(&["solve", "--unrooted", p.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["min_cuts"], 0);
    assert_eq!(v["components"], 1);
    assert_eq!(v["schema_version"], 1);
    assert!(v.get("wall_ms").is_none());
    assert_eq!(v["inputs"]["first_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn quartet_from_two_files() {
    let a = write("q1.nwk", "((a,b),(c,d));\n");
    let b = write("q2.nwk", "# second tree\n((a,c),(b,d));\n");
    for algo in ["improved", "baseline", "oracle"] {
        let o = maf(&["solve", "--unrooted", "--algo", algo, a.to_str().unwrap(), b.to_str().unwrap(), "--json"]);
        assert_eq!(o.status.code(), Some(0), "{algo}");
        let v = json(&o);
        assert_eq!(v["min_cuts"], 1);
        assert_eq!(v["forest"].as_array().unwrap().len(), 2);
        assert_eq!(v["algorithm"], algo);
    }
    let o = maf(&["oracle", "--unrooted", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("min_cuts: 1"));
}

#[test]
fn budget_too_small_is_infeasible() {
    let p = write("trip.nwk", "((a,b),c);\n((b,c),a);\n");
    let o = maf(&["solve", "--rooted", p.to_str().unwrap(), "--max-k", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("infeasible"));
    let o = maf(&["solve", "--rooted", p.to_str().unwrap(), "--timing", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(json(&o)["wall_ms"].is_number());
}

#[test]
fn errors_exit_one() {
    let p = write("bad.nwk", "((a,b),(a,c));\n((a,b),c);\n");
    let o = maf(&["solve", "--rooted", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate"));
    let p = write("one.nwk", "((a,b),c);\n");
    assert_eq!(maf(&["solve", "--rooted", p.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(maf(&["gen", "--rooted", "--n", "1"]).status.code(), Some(1));
    // kind is mandatory
    assert_ne!(maf(&["gen", "--n", "5"]).status.code(), Some(0));
}

#[test]
fn gen_is_deterministic_and_bounded() {
    let a = maf(&["gen", "--unrooted", "--n", "9", "--moves", "3", "--seed", "11"]);
    let b = maf(&["gen", "--unrooted", "--n", "9", "--moves", "3", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let p = write("gen.nwk", &stdout(&a));
    let v = json(&maf(&["solve", "--unrooted", p.to_str().unwrap(), "--json"]));
    assert!(v["min_cuts"].as_u64().unwrap() <= 3);

    let z = maf(&["gen", "--rooted", "--n", "7", "--moves", "0", "--seed", "2"]);
    let text = stdout(&z);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], lines[1]);
}

#[test]
fn verify_small_corpus() {
    let o = maf(&["verify", "--rooted", "--count", "30", "--n-max", "8", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(&o);
    assert_eq!(v["instances"], 30);
    assert_eq!(v["mismatches"].as_array().unwrap().len(), 0);
}

#[test]
fn bench_reports() {
    let args = ["bench", "--unrooted", "--count", "6", "--n-min", "12", "--n-max", "14", "--moves-min", "2"];
    let a = maf(&args);
    let b = maf(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["items"].as_array().unwrap().len(), 6);
    assert!(v["summary"]["improved"]["median_nodes"].is_number());

    let csv = maf(&["bench", "--rooted", "--count", "3", "--format", "csv", "--algos", "baseline"]);
    let text = stdout(&csv);
    assert_eq!(text.lines().next().unwrap(), "index,seed,n,moves,baseline_min_cuts,baseline_nodes");
    assert_eq!(text.lines().count(), 4);

    let empty = maf(&["bench", "--rooted", "--count", "0"]);
    assert_eq!(empty.status.code(), Some(0));
    assert_eq!(json(&empty)["items"].as_array().unwrap().len(), 0);
}

#[test]
fn core_command() {
    let p = write("core.nwk", "((a,b),(c,d));\n");
    let o = maf(&["core", "--unrooted", p.to_str().unwrap(), "--side", "a,c"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["weight_ok"], true);
    assert_eq!(v["cuts"].as_array().unwrap().len(), 2);
    let o = maf(&["core", "--unrooted", p.to_str().unwrap(), "--side", "a,b,c,d"]);
    assert_eq!(o.status.code(), Some(1));
}
