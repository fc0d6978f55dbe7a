use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{"format_version": 1, "seed": 3,
  "graph": {"type": "watts_strogatz", "n": 1000, "k": 4, "p_rewire": 0.1},
  "walk": {"n_rw": 2000, "lengths": {"type": "power_law", "b": 3.0}, "write_traces": true}}"#;

fn semwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semwalk")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&semwalk(&[])), 1);
    assert_eq!(code(&semwalk(&["frobnicate"])), 1);
    assert_eq!(code(&semwalk(&["run"])), 1);
    assert_eq!(code(&semwalk(&["--help"])), 0);

    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, SMALL).unwrap();
    // no --out and no out_dir
    assert_eq!(code(&semwalk(&["run", "--config", s(&cfg)])), 1);
    fs::write(&cfg, SMALL.replace("\"seed\": 3", "\"seed\": 3, \"sede\": 4")).unwrap();
    assert_eq!(code(&semwalk(&["run", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))])), 1);
    fs::write(&cfg, SMALL.replace("\"n_rw\": 2000", "\"n_rw\": 2000, \"origin\": 99999")).unwrap();
    assert_eq!(code(&semwalk(&["run", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))])), 1);
    assert_eq!(code(&semwalk(&["run", "--config", s(&tmp.path().join("missing.json")), "--out", "x"])), 1);
    assert_eq!(code(&semwalk(&["--threads", "0", "run", "--config", s(&cfg), "--out", "x"])), 1);
    assert_eq!(code(&semwalk(&["ingest", "--input", "x", "--out", "y"])), 1);
}

#[test]
fn runtime_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(code(&semwalk(&["stats", "--cooc", s(&tmp.path().join("none.tsv")), "--out", s(&out)])), 2);
    let log = tmp.path().join("log.jsonl");
    fs::write(&log, "{\"user\":\"u\",\"resource\":\"r\",\"ts\":1200000000,\"tags\":[\"a\",\"b\"]}\nnot json\n")
        .unwrap();
    let o = semwalk(&["ingest", "--input", s(&log), "--out", s(&out), "--focus", "a", "--strict"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = semwalk(&["ingest", "--input", s(&log), "--out", s(&out), "--focus", "A"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read_to_string(out.join("rejections.csv")).unwrap(),
        "reason,count\nmalformed,1\nno_tags,0\nbad_timestamp,0\n"
    );
}

#[test]
fn pipeline_subcommands_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, SMALL).unwrap();
    let run = tmp.path().join("run");
    assert_eq!(code(&semwalk(&["run", "--config", s(&cfg), "--out", s(&run)])), 0);

    let walk = tmp.path().join("walk");
    assert_eq!(code(&semwalk(&["walk", "--config", s(&cfg), "--out", s(&walk)])), 0);
    assert_eq!(fs::read(run.join("heaps.csv")).unwrap(), fs::read(walk.join("heaps.csv")).unwrap());
    assert_eq!(fs::read(run.join("traces.txt")).unwrap(), fs::read(walk.join("traces.txt")).unwrap());

    let gen = tmp.path().join("gen");
    assert_eq!(code(&semwalk(&["generate", "--config", s(&cfg), "--out", s(&gen)])), 0);
    assert_eq!(fs::read(run.join("substrate.tsv")).unwrap(), fs::read(gen.join("substrate.tsv")).unwrap());

    let cooc = tmp.path().join("cooc");
    assert_eq!(code(&semwalk(&["cooc", "--traces", s(&walk.join("traces.txt")), "--out", s(&cooc)])), 0);
    assert_eq!(fs::read(run.join("cooc.tsv")).unwrap(), fs::read(cooc.join("cooc.tsv")).unwrap());

    let stats = tmp.path().join("stats");
    let o = semwalk(&[
        "stats",
        "--cooc",
        s(&cooc.join("cooc.tsv")),
        "--traces",
        s(&walk.join("traces.txt")),
        "--seed",
        "3",
        "--out",
        s(&stats),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["p_k.csv", "knn.csv", "clustering.csv", "weight_vs_kikj.csv", "frequency_rank.csv"] {
        assert_eq!(fs::read(run.join(f)).unwrap(), fs::read(stats.join(f)).unwrap(), "{f}");
    }

    // the manifest alone reproduces the run; --seed overrides it
    let again = tmp.path().join("again");
    assert_eq!(code(&semwalk(&["run", "--config", s(&run.join("manifest.json")), "--out", s(&again)])), 0);
    assert_eq!(fs::read(run.join("manifest.json")).unwrap(), fs::read(again.join("manifest.json")).unwrap());
    let other = tmp.path().join("other");
    assert_eq!(code(&semwalk(&["run", "--config", s(&cfg), "--seed", "4", "--out", s(&other)])), 0);
    assert_ne!(fs::read(run.join("heaps.csv")).unwrap(), fs::read(other.join("heaps.csv")).unwrap());

    let cmp = tmp.path().join("cmp");
    assert_eq!(code(&semwalk(&["compare", "--empirical", s(&run), "--synthetic", s(&again), "--out", s(&cmp)])), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cmp.join("compare.json")).unwrap()).unwrap();
    assert!(report["warnings"].as_array().unwrap().is_empty());
    assert_eq!(code(&semwalk(&["compare", "--empirical", s(&cooc), "--synthetic", s(&run), "--out", s(&cmp)])), 1);
}

#[test]
fn theory_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("t.json");
    fs::write(
        &cfg,
        r#"{"format_version": 1, "n_rw_min": 1, "n_rw_max": 1000,
            "model": {"rings": {"type": "exponential_rings", "z": 2.0}, "lengths": {"type": "fixed", "l": 4}}}"#,
    )
    .unwrap();
    let out = tmp.path().join("theory.csv");
    assert_eq!(code(&semwalk(&["theory", "--config", s(&cfg), "--out", s(&out)])), 0);
    let text = fs::read_to_string(&out).unwrap();
    let last: f64 = text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last <= 31.0 && last > 30.0, "{last}");
}
