use std::path::Path;
use std::process::Command as Proc;

use xchurn::dataio::{load_dataset, TaskKind};
use xchurn::report::rows_from_csv;
use xchurn_cli::commands::run_command;
use xchurn_cli::config::parse_pairs;
use xchurn_cli::RunConfig;

const SMALL: &str = "
synth.n = 80
synth.d = 4
hidden_dims = 8
epochs = 2
batch_size = 16
seeds = 0..3
canonical_seeds = 0
resamples = 200
";

fn small(extra: &str) -> RunConfig {
    RunConfig::from_layers(&[parse_pairs(SMALL).unwrap(), parse_pairs(extra).unwrap()]).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn footprint_table() {
    let dir = tempfile::tempdir().unwrap();
    run_command("footprint", &small(""), dir.path()).unwrap();
    let md = read(&dir.path().join("footprint.md"));
    for line in [
        "| ERM | 1 | 1 | 1 | 1× |",
        "| Deep ensemble K=5 | 5 | 5 | 5 | 5× (sequential) |",
        "| Bagging K=2 | 2 | 2 | 2 | 2× (sequential) |",
        "| Bagging K=5 | 5 | 5 | 5 | 5× (sequential) |",
        "| Twin-bootstrap (K=2, joint) | 4 | 1 (joint) | 2 | ~2× |",
    ] {
        assert!(md.contains(line), "missing `{line}` in\n{md}");
    }
}

#[test]
fn churn_on_two_seed_file() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("preds.csv");
    std::fs::write(
        &preds,
        "seed,id,p0,p1\n0,a,0.9,0.1\n0,b,0.2,0.8\n0,c,0.6,0.4\n0,d,0.3,0.7\n\
         1,a,0.8,0.2\n1,b,0.7,0.3\n1,c,0.6,0.4\n1,d,0.4,0.6\n",
    )
    .unwrap();
    let cfg = small(&format!("predictions = {}\n", preds.display()));
    run_command("churn", &cfg, dir.path()).unwrap();
    let csv = read(&dir.path().join("churn.csv"));
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 2, "one header and one pair:\n{csv}");
    assert!(body[1].starts_with("0,1,0.25,"), "{}", body[1]);
    let md = read(&dir.path().join("churn.md"));
    assert!(md.contains("| 2 | 1 | 25.0 [25.0, 25.0] |"), "{md}");
    let json: serde_json::Value = serde_json::from_str(&read(&dir.path().join("churn.json"))).unwrap();
    assert_eq!(json["result"]["pairs"], 1);
    assert_eq!(json["config_hash"].as_str().unwrap(), cfg.hash());
}

#[test]
fn synth_output_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    run_command("synth", &small(""), dir.path()).unwrap();
    let ds = load_dataset(dir.path().join("synth.csv"), TaskKind::BinaryClassification).unwrap();
    assert_eq!((ds.len(), ds.n_features()), (80, 4));
}

#[test]
fn compare_is_reproducible_and_reportable() {
    let cfg = small("methods = bagging:2,twin:1\n");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files = run_command("compare", &cfg, a.path()).unwrap();
    run_command("compare", &cfg, b.path()).unwrap();
    for f in &files {
        let name = f.file_name().unwrap();
        assert_eq!(read(f), read(&b.path().join(name)), "{name:?} differs between runs");
    }
    let csv = read(&a.path().join("compare.csv"));
    assert!(csv.starts_with(&format!("# command=compare config_hash={}", cfg.hash())));
    let rows = rows_from_csv(&csv).unwrap();
    let churn = rows
        .iter()
        .find(|r| r.method == "bagging:2" && r.replicate == "0" && r.metric == "delta_churn")
        .unwrap();
    assert!(churn.lo <= churn.mean && churn.mean <= churn.hi);
    assert!(rows.iter().any(|r| r.replicate == "mean" && r.method == "erm"));

    let stripes = read(&a.path().join("stripes.csv"));
    // 3 methods × 3 seeds × 16 test rows, plus header and stamp.
    assert_eq!(stripes.lines().count(), 3 * 3 * 16 + 2);

    let rep = tempfile::tempdir().unwrap();
    let rcfg = small(&format!("input = {}\n", a.path().display()));
    run_command("report", &rcfg, rep.path()).unwrap();
    let compare_md = read(&a.path().join("compare.md"));
    let report_md = read(&rep.path().join("report.md"));
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("<!--")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&compare_md), strip(&report_md));
}

#[test]
fn sweep_marks_selection_and_pareto() {
    let dir = tempfile::tempdir().unwrap();
    run_command("sweep-lambda", &small("lambda_grid = 0,1,10\n"), dir.path()).unwrap();
    let csv = read(&dir.path().join("sweep_lambda.csv"));
    let body: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(body.len(), 3);
    assert!(body.iter().any(|l| l.ends_with(",true,false") || l.ends_with(",true,true")));
    let json: serde_json::Value = serde_json::from_str(&read(&dir.path().join("sweep_lambda.json"))).unwrap();
    assert!(json["result"]["selected"].is_null() || json["result"]["selected"].as_f64().unwrap() > 0.0);
}

#[test]
fn triage_nscale_and_overlap_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("triage.sizes = 2,3\ntriage.subsets = 4\nnscale.m = 20,40\nlambda = 1\n");
    run_command("triage", &cfg, dir.path()).unwrap();
    let t = read(&dir.path().join("triage.csv"));
    assert_eq!(t.lines().count(), 2 + 2);
    let curves = read(&dir.path().join("triage_curves.csv"));
    assert!(curves.contains(",churn,0,0\n") && curves.contains(",entropy,1,1\n"));
    run_command("nscale", &cfg, dir.path()).unwrap();
    assert_eq!(read(&dir.path().join("nscale.csv")).lines().count(), 2 + 2);
    run_command("overlap", &cfg, dir.path()).unwrap();
    let o = read(&dir.path().join("overlap.csv"));
    let overlap: Vec<f64> = o.lines().skip(2).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(overlap[0], 0.0, "{o}");
    assert!(overlap[0] < overlap[1] && overlap[1] < overlap[2], "{o}");
}

#[test]
fn bo_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("bo.trials = 4\nbo.init_random = 2\nbo.grid_points = 32\n");
    run_command("bo-lambda", &cfg, dir.path()).unwrap();
    let log = read(&dir.path().join("bo_lambda.csv"));
    assert_eq!(log.lines().count(), 2 + 4);
    assert!(log.lines().nth(2).unwrap().starts_with("0,1,0,"));

    let reg = small(
        "task = regression\nmethods = erm,bagging:2\nloop.trajectories = 3\nloop.budget = 4\nloop.init_size = 20\n",
    );
    run_command("bo-loop", &reg, dir.path()).unwrap();
    let acq = read(&dir.path().join("bo_loop.csv"));
    assert_eq!(acq.lines().count(), 2 + 2 * 3 * 4);
    let md = read(&dir.path().join("bo_loop.md"));
    assert!(md.contains("| erm |") && md.contains("| bagging:2 |"));
}

#[test]
fn binary_reports_config_errors() {
    let exe = env!("CARGO_BIN_EXE_xchurn");
    let dir = tempfile::tempdir().unwrap();
    let out = Proc::new(exe)
        .args(["footprint", "--set", "bogus=1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`bogus`"));

    let ok = Proc::new(exe).args(["footprint", "--seed", "3", "--jobs", "1", "--out"]).arg(dir.path()).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let json = read(&dir.path().join("footprint.json"));
    assert!(json.contains("\"seed\": 3"));
}
