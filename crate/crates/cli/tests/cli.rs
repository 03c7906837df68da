use std::path::Path;
use std::process::{Command, Output};

use dpsco::analysis::bounds;
use dpsco::PrivacyBudget;
use dpsco_cli::{emit_rate_table, read_csv, run_experiment, RawConfig, CSV_HEADER};
use tempfile::TempDir;

fn dpsco(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpsco")).args(args).current_dir(dir).output().expect("binary runs")
}

fn body(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.split_once('\n').unwrap().1.to_string()
}

#[test]
fn minimal_config_is_reproducible() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("min.cfg"), "algo = nsgd\nn = 250\ntrials = 2\nseed = 7\n").unwrap();
    for (out, extra) in [("a.csv", None), ("b.csv", None), ("c.csv", Some("--no-runtime")), ("d.csv", Some("--no-runtime"))] {
        let mut args = vec!["--config", "min.cfg", "--out", out];
        args.extend(extra);
        let res = dpsco(&args, dir.path());
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(body(&dir.path().join("c.csv")), body(&dir.path().join("d.csv")));

    // with runtimes recorded, everything but that column still matches
    let strip = |name: &str| {
        let mut rows = read_csv(&dir.path().join(name)).unwrap();
        for r in &mut rows {
            r.runtime_ms = 0.0;
        }
        rows
    };
    assert_eq!(strip("a.csv"), strip("b.csv"));
    assert_eq!(strip("a.csv"), strip("c.csv"));
    assert_eq!(strip("a.csv").len(), 2);
}

#[test]
fn loose_delta_is_rejected_with_its_precondition() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "algo = nsgd\nn = 100\ndelta = 1e-3\n").unwrap();
    let res = dpsco(&["--config", "bad.cfg"], dir.path());
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("delta <= 1/n^2"), "{err}");
    assert!(!dir.path().join("results.csv").exists());
}

#[test]
fn header_order_and_bounds() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let raw = RawConfig {
        algo: Some("nsgd".into()),
        n: Some(vec![300, 150]),
        d: Some(4),
        delta: Some(1e-5),
        trials: Some(3),
        seed: Some(1),
        out: Some(out.clone()),
        ..Default::default()
    };
    let summary = run_experiment(raw.resolve().unwrap()).unwrap();
    assert!(summary.all_completed());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let rows = read_csv(&out).unwrap();
    let keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.n, r.trial)).collect();
    assert_eq!(keys, vec![(150, 0), (150, 1), (150, 2), (300, 0), (300, 1), (300, 2)]);
    let budget = PrivacyBudget::new(1.0, 1e-5).unwrap();
    for r in &rows {
        // certified L of the squared distance on the unit ball is 2
        assert_eq!(r.theory_bound, bounds::nsgd_population(r.n, 4, budget, 2.0, 1.0));
        assert!(!r.non_private);
        assert!(r.excess_pop.is_finite() && r.excess_pop >= 0.0);
    }
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary.meta_path).unwrap()).unwrap();
    assert_eq!(meta["derived"].as_array().unwrap().len(), 2);
    assert_eq!(meta["loss"]["lipschitz"], 2.0);
    assert_eq!(meta["completed_trials"], 6);
}

#[test]
fn noise_off_tags_every_row() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("np.json"),
        r#"{"algo": "proxgd", "n": [100], "d": 3, "delta": 1e-5, "trials": 2, "prox_mode": "capped-gd:50"}"#,
    )
    .unwrap();
    let res = dpsco(&["--config", "np.json", "--noise-off", "--out", "np.csv"], dir.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stderr).contains("NON-PRIVATE"));
    let rows = read_csv(&dir.path().join("np.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.non_private && r.algo == "proxgd"));
}

#[test]
fn failed_trials_leave_rows_and_a_nonzero_exit() {
    let dir = TempDir::new().unwrap();
    // a solver tolerance far above what the privacy analysis needs
    let res = dpsco(
        &["--algo", "objpert", "--n", "100", "--d", "2", "--delta", "1e-5", "--trials", "2", "--objpert-tol", "1", "--out", "f.csv"],
        dir.path(),
    );
    assert_eq!(res.status.code(), Some(1));
    let rows = read_csv(&dir.path().join("f.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.excess_pop.is_nan()));
    let meta = std::fs::read_to_string(dir.path().join("f.csv.meta.json")).unwrap();
    assert!(meta.contains("\"failures\""));
}

#[test]
fn table_matches_independent_aggregation() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("t.csv");
    let raw = RawConfig {
        algo: Some("nsgd".into()),
        n: Some(vec![200, 400]),
        d: Some(3),
        delta: Some(1e-6),
        trials: Some(5),
        seed: Some(3),
        out: Some(out.clone()),
        ..Default::default()
    };
    run_experiment(raw.resolve().unwrap()).unwrap();
    let table = emit_rate_table(&out).unwrap();
    assert_eq!(table.rows.len(), 2);

    // recompute from the raw text, without the library's parser
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let records: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    for row in &table.rows {
        let xs: Vec<f64> = records
            .iter()
            .filter(|r| r[col("n")] == row.n.to_string())
            .map(|r| r[col("excess_pop")].parse().unwrap())
            .collect();
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        assert_eq!(row.trials, 5);
        assert!((row.mean_excess_pop - mean).abs() <= 1e-15 * mean.abs().max(1.0));
        assert!((row.std_error - (var / k).sqrt()).abs() <= 1e-12);
    }
    let lines: Vec<&str> = table.text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("algo"));
    assert!(table.plot_path.exists());
}

#[test]
fn table_edge_cases() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let res = dpsco(&["--emit-table", "empty.csv"], dir.path());
    assert!(res.status.success());
    assert_eq!(String::from_utf8_lossy(&res.stdout).lines().count(), 1);

    let single = dir.path().join("one.csv");
    std::fs::write(&single, format!("{}\nnsgd,250,10,1.0,1e-6,0,9,0.01,0.02,462,1.5,0.5,false\n", CSV_HEADER.join(","))).unwrap();
    let table = emit_rate_table(&single).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert!((table.rows[0].ratio() - 0.04).abs() < 1e-15);

    let broken = dir.path().join("broken.csv");
    std::fs::write(&broken, "algo,n,d\nnsgd,1,1\n").unwrap();
    let res = dpsco(&["--emit-table", "broken.csv"], dir.path());
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("missing column `epsilon`"));
}

#[test]
fn flags_override_the_config() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("c.cfg"), "algo = nsgd\nn = 100\ndelta = 1e-5\nd = 2\ntrials = 1\n").unwrap();
    let res = dpsco(&["--config", "c.cfg", "--algo", "erm-reduction:nsgd", "--trials", "2", "--out", "o.csv"], dir.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = read_csv(&dir.path().join("o.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.algo == "erm-reduction:nsgd"));
}
