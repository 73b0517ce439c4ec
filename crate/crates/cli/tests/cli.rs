use std::path::PathBuf;
use std::process::{Command, Output};

fn write_instance(name: &str, body: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("cli-{name}.json"));
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockstoch")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

const SQUARE3: &str = r#"{"blocks":[[1,2,3],[4,5,6],[7,8,9],[1,4,7],[2,5,8],[3,6,9]]}"#;

#[test]
fn classify_odd_cycle_at_one_half() {
    let p = write_instance(
        "triangle",
        r#"{"blocks":[[1,2],[2,3],[3,1]],"weights":{"1":"1/2","2":"1/2","3":"1/2"}}"#,
    );
    let o = run(&["classify", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert_eq!(doc["verdict"], "Extreme");
    assert_eq!(doc["components"][0]["kind"], "OddPrimitiveCycleHalf");
}

#[test]
fn vertices_of_three_by_three() {
    let p = write_instance("square3", SQUARE3);
    let o = run(&["vertices", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert_eq!(doc["count"], 6);
    assert_eq!(doc["vertices"].as_array().unwrap().len(), 6);
}

#[test]
fn decompose_outside_s_names_the_block() {
    let p = write_instance(
        "outside",
        r#"{"blocks":[[1,2],[2,3]],"weights":{"1":"1/2","2":"1/2","3":"3/4"}}"#,
    );
    let o = run(&["decompose", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("block 2 sums to 5/4"), "{}", stderr(&o));
}

#[test]
fn invalid_input_exits_with_one() {
    let p = write_instance("float", r#"{"blocks":[[1,2]],"weights":{"1":0.5,"2":"1/2"}}"#);
    assert_eq!(run(&["classify", p.to_str().unwrap()]).status.code(), Some(1));
    let p = write_instance("unknown-field", r#"{"blocks":[[1,2]],"colour":"red"}"#);
    assert_eq!(run(&["check", p.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["check", "/nonexistent/instance.json"]).status.code(), Some(1));
}

#[test]
fn budget_exhaustion_exits_with_three() {
    let p = write_instance("square3-budget", SQUARE3);
    let o = run(&["vertices", "--budget", "2", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn decompose_uniform_matrix() {
    let weights: Vec<String> = (1..=9).map(|g| format!("\"{g}\":\"1/3\"")).collect();
    let body = format!(
        r#"{{"blocks":[[1,2,3],[4,5,6],[7,8,9],[1,4,7],[2,5,8],[3,6,9]],"weights":{{{}}}}}"#,
        weights.join(",")
    );
    let p = write_instance("uniform3", &body);
    let o = run(&["decompose", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let terms = json(&o)["terms"].as_array().unwrap().clone();
    assert!(!terms.is_empty());
}

#[test]
fn witness_for_interior_point() {
    let p = write_instance(
        "path-half",
        r#"{"blocks":[[1,2],[2,3]],"weights":{"1":"1/2","2":"1/2","3":"1/2"}}"#,
    );
    let o = run(&["witness", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert!(doc["construction"].is_string());
    let p = write_instance("path-vertex", r#"{"blocks":[[1,2],[2,3]],"weights":{"1":"1","3":"1"}}"#);
    assert_eq!(run(&["witness", p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn graph_edge_list() {
    let p = write_instance("fan", r#"{"blocks":[[0,1,2],[0,2,3]]}"#);
    let o = run(&["graph", "--edges", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert!(lines.contains(&"0 2 : 1,2".to_string()), "{lines:?}");
    assert_eq!(lines.len(), 5);
    let census = json(&run(&["graph", p.to_str().unwrap()]));
    assert_eq!(census["odd_primitive_cycles"]["count"], 0);
}

#[test]
fn extend_path() {
    let o = run(&["extend", "--generator", "path", "--n", "1", "--horizon", "6", "--weights", "1=1,2=0"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert_eq!(doc["extended"]["7"], "1");
    assert_eq!(doc["verification"]["c3"], true);
    assert_eq!(doc["verification"]["violations"].as_array().unwrap().len(), 0);

    let bad = run(&["extend", "--generator", "path", "--n", "1", "--horizon", "6", "--weights", "1=1/2,2=1/4"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("block 1 sums to 3/4"));
}

#[test]
fn extend_finite_family_from_instance() {
    let p = write_instance("finite", r#"{"blocks":[[1,2],[2,3],[3,4]],"weights":{"1":"1"}}"#);
    let o = run(&["extend", "--generator", "finite", "--n", "1", "--horizon", "3", "--instance", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = json(&o);
    assert_eq!(doc["extended"]["3"], "1");
}

#[test]
fn every_demo_reproduces() {
    for name in ["ex1.1", "ex1.2", "ex2.5", "rem2.10", "rem3.7"] {
        let o = run(&["demo", name]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        assert_eq!(json(&o)["reproduced"], true);
    }
}

#[test]
fn gen_is_deterministic_and_feeds_back() {
    let args = ["gen", "--elements", "6", "--blocks", "4", "--kappa-max", "2", "--seed", "1"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc = json(&a);
    for g in doc["ground"].as_array().unwrap() {
        let count = doc["blocks"].as_array().unwrap().iter().filter(|blk| blk.as_array().unwrap().contains(g)).count();
        assert!(count <= 2);
    }
    let p = write_instance("generated", &stdout(&a));
    let check = json(&run(&["check", p.to_str().unwrap()]));
    if doc["infeasible"] == false {
        assert_eq!(check["membership"]["in_S"], true);
    }
}

#[test]
fn output_is_stable_across_thread_counts() {
    let p = write_instance("square3-jobs", SQUARE3);
    let one = run(&["--jobs", "1", "vertices", p.to_str().unwrap()]);
    let four = run(&["--jobs", "4", "vertices", p.to_str().unwrap()]);
    assert_eq!(one.stdout, four.stdout);
    let v = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(json(&v)["passed"], true);
}
