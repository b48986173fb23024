use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use batchida::formats::{read_instances, AnyInstance};
use batchida_core::{goal_distances, Domain, SlidingTile};

fn batchida(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_batchida")).args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read_rows(path: &Path) -> Vec<HashMap<String, String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.deserialize().map(|r| r.unwrap()).collect()
}

fn gen_stp3(dir: &Path, count: usize) -> String {
    let path = dir.join("stp3.txt");
    ok(&batchida(&["gen-instances", "--domain", "stp3", "--count", &count.to_string(), "--seed", "7", "--out", path.to_str().unwrap()]));
    path.to_str().unwrap().to_owned()
}

#[test]
fn grid_writes_one_row_per_run_with_oracle_costs() {
    let dir = tempfile::tempdir().unwrap();
    let instances = gen_stp3(dir.path(), 10);
    let out = dir.path().join("runs.csv");
    let iters = dir.path().join("iters.csv");
    let log = ok(&batchida(&[
        "run", "--domain", "stp3", "--instances", &instances,
        "--algo", "batch-idastar,batch-astar", "--batch-size", "1,8,64",
        "--threads", "2", "--work-num", "2", "--timeout-us", "500",
        "--out", out.to_str().unwrap(), "--iter-out", iters.to_str().unwrap(),
    ]));
    assert_eq!(log.lines().filter(|l| l.starts_with("algo=")).count(), 60);

    let d = SlidingTile::new(3).unwrap();
    let dist: HashMap<_, _> = goal_distances(&d, &d.goal(), 200_000).unwrap().into_iter().collect();
    let want: HashMap<String, u8> = read_instances(Path::new(&instances))
        .unwrap()
        .into_iter()
        .map(|i| match i {
            AnyInstance::Stp(i) => (i.label.clone(), dist[&i.start]),
            AnyInstance::Cube(_) => panic!("cube instance in a tile file"),
        })
        .collect();

    let rows = read_rows(&out);
    assert_eq!(rows.len(), 60);
    for r in &rows {
        assert_eq!(r["status"], "ok");
        assert_eq!(r["cost"].parse::<u8>().unwrap(), want[&r["instance"]], "{r:?}");
        assert!(r["max_batch"].parse::<usize>().unwrap() <= r["batch_size"].parse().unwrap());
    }
    for algo in ["batch-idastar", "batch-astar"] {
        for b in ["1", "8", "64"] {
            let n = rows.iter().filter(|r| r["algorithm"] == algo && r["batch_size"] == b).count();
            assert_eq!(n, 10, "{algo} B={b}");
        }
    }
    assert!(read_rows(&iters).iter().all(|r| r["algorithm"] == "batch-idastar" || r["algorithm"] == "batch-astar"));
}

#[test]
fn time_limit_marks_a_timeout_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.csv");
    let instances = gen_stp3(dir.path(), 2);
    // Korf's first instance is far beyond 1 ms with Manhattan distance; the
    // 8-puzzle run afterwards must still complete.
    let korf = dir.path().join("mixed.txt");
    let first = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/korf-10.txt"))
        .unwrap()
        .lines()
        .find(|l| !l.starts_with('#') && !l.trim().is_empty())
        .unwrap()
        .to_owned();
    std::fs::write(&korf, format!("{first}\n")).unwrap();
    ok(&batchida(&[
        "run", "--domain", "stp4", "--instances", korf.to_str().unwrap(), "--algo", "idastar,batch-idastar",
        "--heuristic", "manhattan", "--time-limit-s", "0.001", "--out", out.to_str().unwrap(),
    ]));
    let rows = read_rows(&out);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["status"] == "timeout" && r["cost"].is_empty()), "{rows:?}");

    let out2 = dir.path().join("runs2.csv");
    ok(&batchida(&["run", "--instances", &instances, "--algo", "idastar", "--out", out2.to_str().unwrap()]));
    assert!(self::read_rows(&out2).iter().all(|r| r["status"] == "ok"));
}

#[test]
fn single_thread_rows_repeat_without_timeouts() {
    let dir = tempfile::tempdir().unwrap();
    let instances = gen_stp3(dir.path(), 5);
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&batchida(&[
            "run", "--instances", &instances, "--algo", "batch-idastar,batch-astar",
            "--threads", "1", "--work-num", "4", "--batch-size", "16", "--timeout-us", "none", "--out", out.to_str().unwrap(),
        ]));
        read_rows(&out)
            .into_iter()
            .map(|mut r| {
                r.remove("wall_s");
                let mut v: Vec<_> = r.into_iter().collect();
                v.sort();
                v
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let instances = gen_stp3(dir.path(), 3);
    let out = dir.path().join("runs.csv");
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "domain = \"stp3\"\ninstances = \"{instances}\"\nalgo = [\"batch-idastar\"]\n\n[search]\nthreads = [1]\nbatch_size = [4]\n\n[output]\nout = \"{}\"\n",
            out.display()
        ),
    )
    .unwrap();
    ok(&batchida(&["run", "--config", config.to_str().unwrap(), "--batch-size", "2,3"]));
    let rows = read_rows(&out);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r["batch_size"] == "2" || r["batch_size"] == "3"));
}

#[test]
fn bad_input_fails_with_a_useful_message() {
    let missing = batchida(&["run", "--heuristic", "pdb:/nonexistent/table.bpdb", "--instances", "stp3"]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("build-pdb"));

    let bad = batchida(&["run", "--batch-size", "0"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("batch-size"));
}

#[test]
fn built_tables_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bpdb");
    let b = dir.path().join("b.bpdb");
    let line = ok(&batchida(&["build-pdb", "--domain", "stp3", "--pattern", "1,2,3", "--out", a.to_str().unwrap()]));
    ok(&batchida(&["build-pdb", "--domain", "stp3", "--pattern", "1,2,3", "--out", b.to_str().unwrap()]));
    // Three tiles plus the blank over nine cells.
    assert!(line.contains(&format!("entries={}", 9 * 8 * 7 * 6)), "{line}");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let out = dir.path().join("runs.csv");
    let spec = format!("pdb:{}", a.display());
    ok(&batchida(&["run", "--instances", "uniform:4", "--heuristic", &spec, "--out", out.to_str().unwrap()]));
    assert!(read_rows(&out).iter().all(|r| r["status"] == "ok"));

    let tight = batchida(&["build-pdb", "--domain", "stp3", "--pattern", "1,2,3", "--max-entries", "100", "--out", a.to_str().unwrap()]);
    assert!(!tight.status.success());
    assert!(String::from_utf8_lossy(&tight.stderr).contains("3024"));
}

#[test]
fn balance_names_the_dominant_side() {
    let text = ok(&batchida(&["balance", "--b-nn", "256", "--threads", "4", "--t-pdb-ns", "100", "--t-nn-us", "1000"]));
    assert!(!text.trim().is_empty());
}
