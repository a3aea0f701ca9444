use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TINY: &str = "CPDQS 1\n2\n2 2\nu 1 1 1\nu 1 2 2\nu 2 1 3\nu 2 2 4\n\
                    p 1 2 1 2 1\np 1 2 2 1 2\np 1 2 2 2 3\n";

const HEADER: &str = "instance,algorithm,seed,n,m,relaxed_objective,rounded_objective,\
                      iterations,time_seconds,termination_reason";

fn cpdqs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpdqs"))
        .args(args)
        .env_remove("CPDQS_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Parses a results CSV into (header, records).
fn rows(csv_text: &str) -> (String, Vec<Vec<String>>) {
    let header = csv_text.lines().next().unwrap().to_string();
    let rows = csv::Reader::from_reader(csv_text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

#[test]
fn solve_scsc_on_tiny_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "tiny.cpdqs", TINY);
    let out = cpdqs(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--algorithm",
        "scsc",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = rows(&stdout(&out));
    assert_eq!(header, HEADER);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "tiny");
    assert_eq!(rows[0][1], "scsc");
    assert_eq!(rows[0][6], "4");
}

#[test]
fn solve_scp_writes_results_and_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "tiny.cpdqs", TINY);
    let csv = dir.path().join("out.csv");
    let trace = dir.path().join("trace.csv");
    let out = cpdqs(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--algorithm",
        "scp",
        "--sigma",
        "100",
        "--restarts",
        "3",
        "--seed",
        "9",
        "--eps-a",
        "0",
        "--eps-b",
        "0",
        "--trace",
        trace.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).is_empty());
    let (_, rows) = rows(&std::fs::read_to_string(&csv).unwrap());
    assert_eq!(rows[0][6], "4");
    let trace_text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = trace_text.lines();
    assert_eq!(
        lines.next(),
        Some("iteration,f,residual,lambda,alpha,ls_trials")
    );
    let iterations: usize = rows[0][7].parse().unwrap();
    assert_eq!(lines.count(), iterations);
}

#[test]
fn exact_reports_optimum_and_choice() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "tiny.cpdqs", TINY);
    let out = cpdqs(&["exact", "--instance", inst.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "optimum 4\nchoice 1 1\n");
}

#[test]
fn bench_writes_one_row_per_instance_and_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    write(&data, "a.cpdqs", TINY);
    write(
        &data,
        "b.cpdqs",
        "CPDQS 1\n1\n3\nu 1 1 5\nu 1 2 1\nu 1 3 2\n",
    );
    write(&data, "c.cpdqs", "CPDQS 1\n3\n1 2 2\np 2 3 2 2 -4\n");
    write(&data, "notes.txt", "ignored");
    let csv = dir.path().join("bench.csv");
    let out = cpdqs(&[
        "bench",
        "--dir",
        data.to_str().unwrap(),
        "--algorithms",
        "scsc,scp,exact",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = rows(&std::fs::read_to_string(&csv).unwrap());
    assert_eq!(header, HEADER);
    assert_eq!(rows.len(), 9);
    for alg in ["scsc", "scp", "exact"] {
        assert_eq!(rows.iter().filter(|r| r[1] == alg).count(), 3);
    }
    let exact: Vec<&str> = rows
        .iter()
        .filter(|r| r[1] == "exact")
        .map(|r| r[6].as_str())
        .collect();
    assert_eq!(exact, ["4", "1", "-4"]);
}

#[test]
fn bench_keeps_going_past_a_bad_instance() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "good.cpdqs", TINY);
    write(dir.path(), "bad.cpdqs", "CPDQS 1\n2\n2 2\np 2 1 1 1 1\n");
    let out = cpdqs(&[
        "bench",
        "--dir",
        dir.path().to_str().unwrap(),
        "--algorithms",
        "scsc",
    ]);
    assert!(out.status.success());
    let (_, rows) = rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "bad");
    assert!(rows[0][9].starts_with("error: "));
    assert!(rows[0][2..9].iter().all(String::is_empty));
    assert_eq!(rows[1][0], "good");
    assert_eq!(rows[1][6], "4");
}

#[test]
fn convert_wcsp_to_canonical() {
    let dir = tempfile::tempdir().unwrap();
    // two variables with two values each: unary costs on x0, a binary table
    let wcsp = "demo 2 2 2 1000\n2 2\n1 0 0 2\n0 4\n1 9\n2 0 1 0 1\n1 1 6\n";
    let src = write(dir.path(), "demo.wcsp", wcsp);
    let dst = dir.path().join("demo.cpdqs");
    let out = cpdqs(&[
        "convert",
        "--in",
        src.to_str().unwrap(),
        "--out",
        dst.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let exact = cpdqs(&["exact", "--instance", dst.to_str().unwrap()]);
    assert_eq!(stdout(&exact), "optimum 4\nchoice 1 1\n");
}

#[test]
fn failures_map_to_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "tiny.cpdqs", TINY);
    let inst = inst.to_str().unwrap();
    let code = |args: &[&str]| cpdqs(args).status.code();

    assert_eq!(code(&["solve", "--instance", inst, "--bogus"]), Some(2));
    assert_eq!(
        code(&["solve", "--instance", inst, "--algorithm", "simplex"]),
        Some(2)
    );
    assert_eq!(
        code(&["solve", "--instance", inst, "--alpha0", "1.5"]),
        Some(2)
    );
    assert_eq!(
        code(&["solve", "--instance", inst, "--restarts", "0"]),
        Some(2)
    );

    let missing = dir.path().join("missing.cpdqs");
    assert_eq!(
        code(&["exact", "--instance", missing.to_str().unwrap()]),
        Some(3)
    );

    let bad = write(dir.path(), "bad.cpdqs", "CPDQS 1\n1\n2\nu 1 3 1\n");
    let out = cpdqs(&["solve", "--instance", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let unknown = write(dir.path(), "model.uai", "MARKOV\n2\n2 2\n");
    assert_eq!(
        code(&["exact", "--instance", unknown.to_str().unwrap()]),
        Some(4)
    );

    let huge_sizes = ["10"; 8].join(" ");
    let huge = write(
        dir.path(),
        "huge.cpdqs",
        &format!("CPDQS 1\n8\n{huge_sizes}\n"),
    );
    assert_eq!(
        code(&["exact", "--instance", huge.to_str().unwrap()]),
        Some(5)
    );
}
