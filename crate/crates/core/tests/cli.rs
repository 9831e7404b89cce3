use std::path::Path;
use std::process::{Command, Output};

fn chebppr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chebppr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn solve_writes_rows_and_scores() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("two.txt");
    std::fs::write(&input, "7 9 1 100\n").unwrap();
    let out = dir.path().join("run.csv");
    let res = chebppr(&[
        "solve",
        "--input",
        input.to_str().unwrap(),
        "--rng-seed",
        "1",
        "--seed-node",
        "7",
        "--order",
        "40",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(read_csv(&out).len(), 41);
    let scores = read_csv(&dir.path().join("run.vector.csv"));
    assert_eq!(scores[0][0], "7");
    assert!((scores[0][1].parse::<f64>().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(scores[1][0], "9");
    assert!((scores[1][1].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn update_reaches_triangle_scores() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tri.txt");
    std::fs::write(&input, "0 1 1\n1 2 1\n0 2 2\n").unwrap();
    let vector = dir.path().join("scores.csv");
    let res = chebppr(&[
        "update",
        "--input",
        input.to_str().unwrap(),
        "--rng-seed",
        "1",
        "--seed-node",
        "0",
        "--window",
        "1:2",
        "--target",
        "1e-12",
        "--vector-out",
        vector.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.starts_with("order,relative_error,messages_total"));
    let got: Vec<f64> = read_csv(&vector).iter().map(|r| r[1].parse().unwrap()).collect();
    for (a, b) in got.iter().zip([0.6, 0.2, 0.2]) {
        assert!((a - b).abs() < 1e-11);
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "# shared settings\nsynthetic = pa,100,2\norder=3\nreverse-time=false\n").unwrap();
    let out = dir.path().join("rows.csv");
    let run = |extra: &[&str]| {
        let mut args = vec!["solve", "--config", config.to_str().unwrap(), "--rng-seed", "2"];
        args.extend_from_slice(&["--out", out.to_str().unwrap()]);
        args.extend_from_slice(extra);
        let res = chebppr(&args);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        read_csv(&out).len()
    };
    assert_eq!(run(&[]), 4);
    assert_eq!(run(&["--order", "6"]), 7);
}

#[test]
fn configuration_errors_exit_with_two() {
    let res = chebppr(&["solve", "--input", "/no/such/file.txt", "--rng-seed", "1", "--order", "3"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("/no/such/file.txt"));

    let res = chebppr(&["solve", "--synthetic", "pa,50,2", "--rng-seed", "1", "--order", "3", "--target", "1e-3"]);
    assert_eq!(res.status.code(), Some(2));

    let res = chebppr(&["solve", "--synthetic", "pa,50,2", "--order", "3"]);
    assert_eq!(res.status.code(), Some(2));

    let res = chebppr(&["solve", "--synthetic", "pa,50,2", "--rng-seed", "1", "--order", "3", "--config", "/no/such.cfg"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("/no/such.cfg"));
}

#[test]
fn numerical_errors_exit_with_three() {
    let res = chebppr(&[
        "solve",
        "--synthetic",
        "pa,100,2",
        "--rng-seed",
        "1",
        "--target",
        "1e-12",
        "--max-order",
        "2",
    ]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn experiments_emit_their_columns() {
    let cases: [(&[&str], &str); 4] = [
        (&["exp1", "--order", "5", "--seeds", "2"], "method,operator,order,messages_budget,mean_rel_error,stderr"),
        (
            &["exp2", "--sizes", "0.01,0.05", "--seeds", "2"],
            "perturbation_edges,snapshot,messages_update,messages_scratch,crossover",
        ),
        (&["exp3", "--targets", "1e-2,1e-6", "--seeds", "2"], "method,error_target,messages,ratio_to_rwr,status"),
        (
            &["exp4", "--window", "20:25", "--seeds", "2"],
            "seed_node,snapshot_index,rel_error_tracked,rel_error_scratch_same_k,perturbation_size,num_edges,fallback",
        ),
    ];
    for (args, header) in cases {
        let mut all = vec!["--synthetic", "pa,150,2", "--rng-seed", "3"];
        all.splice(0..0, args.iter().copied());
        let res = chebppr(&all);
        assert!(res.status.success(), "{:?}: {}", args, String::from_utf8_lossy(&res.stderr));
        let stdout = String::from_utf8(res.stdout).unwrap();
        assert_eq!(stdout.lines().next(), Some(header));
        assert!(stdout.lines().count() > 1);
    }
}

#[test]
fn exp4_window_sets_the_horizon() {
    let res = chebppr(&["exp4", "--synthetic", "pa,150,2", "--rng-seed", "3", "--seeds", "1", "--window", "10:14"]);
    assert!(res.status.success());
    assert_eq!(String::from_utf8(res.stdout).unwrap().lines().count(), 1 + 5);
}
