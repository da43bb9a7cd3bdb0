use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dephase-lab"));
    cmd.env_remove("DEPHASE_LAB_SEED");
    cmd
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn files_with(dir: &Path, prefix: &str, suffix: &str) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_str().unwrap();
            name.starts_with(prefix) && name.ends_with(suffix)
        })
        .collect();
    out.sort();
    out
}

fn single_csv(dir: &Path, prefix: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let files = files_with(dir, prefix, ".csv");
    assert_eq!(files.len(), 1, "expected one {prefix} csv, found {files:?}");
    let text = fs::read_to_string(&files[0]).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| if c.is_empty() { f64::NAN } else { c.parse().unwrap() }).collect())
        .collect();
    (header, rows)
}

fn manifest(dir: &Path) -> Value {
    let files = files_with(dir, "", ".manifest.json");
    assert_eq!(files.len(), 1);
    serde_json::from_str(&fs::read_to_string(&files[0]).unwrap()).unwrap()
}

#[test]
fn negativity_sweep_has_one_column_per_bipartition() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--family", "ghz", "--n", "4", "--p", "0:1:0.05", "--out", "negativity"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = single_csv(dir.path(), "sweep_negativity_");
    assert_eq!(
        header,
        [
            "p",
            "negativity_1v234",
            "negativity_2v134",
            "negativity_3v124",
            "negativity_4v123",
            "negativity_12v34",
            "negativity_13v24",
            "negativity_14v23"
        ]
    );
    assert_eq!(rows.len(), 21);
    assert_eq!(rows[20][0], 1.0);
    for row in &rows {
        // Bare GHZ negativity is (1-p)^N / 2 across every cut.
        let expected = 0.5 * (1.0 - row[0]).powi(4);
        for v in &row[1..] {
            assert!((v - expected).abs() < 1e-12, "p = {}: {v} vs {expected}", row[0]);
        }
    }
}

#[test]
fn encoded_fringe_at_full_dephasing_starts_at_one_eighth() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["fringes", "--family", "ghz_encoded", "--p", "1", "--phi", "0:pi:0.01"]);
    assert!(out.status.success());
    let (header, rows) = single_csv(dir.path(), "fringes_");
    assert_eq!(header, ["phi", "expectation"]);
    assert_eq!(rows.len(), 315);
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[0][1] - 0.125).abs() < 1e-10);
    for row in &rows {
        let phi = row[0];
        let closed = ((4.0 * (2.0 * phi).cos() + (4.0 * phi).cos() + 11.0) / 128.0).clamp(0.0, 1.0);
        assert!((row[1] - closed).abs() < 1e-12);
    }
}

#[test]
fn qfi_table_shows_bare_decay_and_encoded_growth() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["qfi", "--family", "ghz", "--n", "2:8", "--p", "0.5"]);
    assert!(out.status.success());
    let (header, rows) = single_csv(dir.path(), "qfi_");
    assert_eq!(
        header,
        ["n", "p", "qfi_bare", "qfi_encoded", "qfi_bare_closed", "qfi_encoded_closed", "snl", "hl"]
    );
    assert_eq!(rows.len(), 7);
    for row in &rows {
        let n = row[0];
        assert!((row[2] - n * n * 2f64.powf(-2.0 * n)).abs() < 1e-12);
    }
    for w in rows.windows(2) {
        assert!(w[1][3] > w[0][3], "encoded QFI grows with N");
    }
}

#[test]
fn outputs_are_byte_identical_across_thread_counts() {
    let args = ["variance", "--family", "ghz_encoded", "--p", "0,0.3,1", "--seed", "17", "--resamples", "2000"];
    let read_all = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let mut full = args.to_vec();
        full.extend(["--threads", threads]);
        assert!(run_in(dir.path(), &full).status.success());
        files_with(dir.path(), "", ".csv")
            .into_iter()
            .map(|p| (p.file_name().unwrap().to_owned(), fs::read(&p).unwrap()))
            .collect::<Vec<_>>()
    };
    let one = read_all("1");
    assert_eq!(one.len(), 1);
    assert_eq!(one, read_all("4"));
    assert_eq!(one, read_all("4"));
}

#[test]
fn variance_intervals_bracket_the_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["variance", "--family", "ghz", "--p", "0,0.5", "--seed", "3"]);
    assert!(out.status.success());
    let (header, rows) = single_csv(dir.path(), "variance_");
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for row in &rows {
        assert!(row[col("eps_lower_3sigma")] <= row[col("eps_hat")]);
        assert!(row[col("eps_hat")] <= row[col("eps_upper_3sigma")]);
        assert!(row[col("var_phi")] >= row[col("cramer_rao")] * 0.95);
        assert_eq!(row[col("resamples")], 10000.0);
    }
    assert_eq!(manifest(dir.path())["seed"], 3);
}

#[test]
fn manifest_names_outputs_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--p", "0,1", "--out", "purity,entropy"]);
    assert!(out.status.success());
    let m = manifest(dir.path());
    let hash = m["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 12);
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(outputs, [format!("sweep_purity_{hash}.csv"), format!("sweep_entropy_{hash}.csv")]);
    for f in &outputs {
        assert!(dir.path().join(f).exists());
    }
    assert_eq!(m["config"]["family"], "ghz");
    assert_eq!(m["config"]["p"], serde_json::json!([0.0, 1.0]));
    assert_eq!(m["seed_source"], "default");
    assert_eq!(m["partial"], false);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(m["versions"]["dephase-lab"].is_string());
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["variance", "--p", "0.5", "--out-dir"])
        .arg(dir.path())
        .env("DEPHASE_LAB_SEED", "42")
        .output()
        .unwrap();
    assert!(out.status.success());
    let m = manifest(dir.path());
    assert_eq!(m["seed"], 42);
    assert_eq!(m["seed_source"], "environment");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "family = ghz_encoded\np = 0:1:0.5\nout = purity\n").unwrap();
    let out = run_in(dir.path(), &["sweep", "--config", cfg.to_str().unwrap(), "--p", "0.25"]);
    assert!(out.status.success());
    let (_, rows) = single_csv(dir.path(), "sweep_purity_");
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 0.25);
    assert_eq!(manifest(dir.path())["config"]["family"], "ghz_encoded");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["sweep", "--family", "w_state"][..],
        &["sweep", "--p", "0:1.5:0.5"],
        &["sweep", "--n", "4", "--partitions", "1v2"],
        &["sweep", "--mask", "10"],
        &["variance", "--phi", "0:pi:0.1"],
        &["sweep", "--no-such-flag"],
    ] {
        let out = run_in(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    assert!(files_with(dir.path(), "", ".json").is_empty());
}

#[test]
fn solver_failure_exits_with_three_and_flags_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    // p = 1 leaves a diagonal state that needs no iterations; p = 0.5 does not.
    let out = run_in(dir.path(), &["coherence", "--family", "ghz", "--p", "1,0.5", "--k", "2", "--max-iterations", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let (header, rows) = single_csv(dir.path(), "coherence_");
    assert_eq!(header, ["p", "robustness_k2", "dual_gap_k2"]);
    assert_eq!(rows, vec![vec![1.0, 0.0, 0.0]]);
    let m = manifest(dir.path());
    assert_eq!(m["partial"], true);
    assert!(m["failure"].as_str().unwrap().contains("did not converge"));
}

#[test]
fn coherence_levels_are_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["coherence", "--family", "ghz_encoded", "--p", "0,0.5", "--k", "1,2"]);
    assert!(out.status.success());
    let (header, rows) = single_csv(dir.path(), "coherence_");
    assert_eq!(header, ["p", "robustness_k1", "dual_gap_k1", "robustness_k2", "dual_gap_k2"]);
    for row in &rows {
        assert!(row[1] + 1e-6 >= row[3]);
        assert!(row[2].abs() < 1e-6 && row[4].abs() < 1e-6);
    }
    // The decoded encoded GHZ state keeps unit robustness at every noise strength.
    assert!((rows[0][1] - 1.0).abs() < 1e-6 && (rows[1][1] - 1.0).abs() < 1e-6);
}

#[test]
fn compare_reports_small_deviation_for_ghz() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["compare", "--family", "ghz", "--n", "6", "--p", "0:1:0.05"]);
    assert!(out.status.success());
    let (header, rows) = single_csv(dir.path(), "compare_");
    assert_eq!(&header[..7], ["p", "purity", "purity_closed", "entropy", "entropy_closed", "qfi", "qfi_closed"]);
    assert_eq!(rows.len(), 21);
    for row in &rows {
        assert!((row[1] - row[2]).abs() < 1e-10, "purity");
        assert!((row[5] - row[6]).abs() < 1e-8, "qfi");
    }
    let dev = manifest(dir.path())["max_abs_deviation"].as_f64().unwrap();
    assert!(dev < 1e-8, "{dev}");
}

#[test]
fn compare_on_cluster_is_numeric_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["compare", "--family", "cluster", "--p", "0,0.5"]);
    assert!(out.status.success());
    let (header, _) = single_csv(dir.path(), "compare_");
    assert!(header.iter().all(|h| !h.ends_with("_closed")));
    let m = manifest(dir.path());
    assert!(m["max_abs_deviation"].is_null());
    assert!(m["notes"].as_array().unwrap().iter().any(|n| n == "numeric only"));
}

#[test]
fn graph_family_reads_an_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("path.edges");
    fs::write(&graph, "# path on four vertices\n4\n1 2\n2 3\n3 4\n").unwrap();
    let out = run_in(
        dir.path(),
        &["sweep", "--family", "graph", "--graph", graph.to_str().unwrap(), "--p", "0,0.5", "--out", "purity"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let from_graph = single_csv(dir.path(), "sweep_purity_").1;

    let other = tempfile::tempdir().unwrap();
    assert!(run_in(other.path(), &["sweep", "--family", "cluster", "--p", "0,0.5", "--out", "purity"])
        .status
        .success());
    assert_eq!(from_graph, single_csv(other.path(), "sweep_purity_").1);
    assert_eq!(manifest(dir.path())["config"]["graph"]["n_qubits"], 4);
}
