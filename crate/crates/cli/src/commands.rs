//! Subcommand implementations. Each writes `<name>.csv`, `<name>.md` and
//! `<name>.json` (plus any extra data files) into the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use xchurn::bo::{bo_lambda_search, bo_trajectory, median_lambda, trajectory_report, Trajectory};
use xchurn::dataio::{generate_synthetic, load_dataset, load_split_file, skip_line, Dataset};
use xchurn::methods::MethodSpec;
use xchurn::metrics::{id_index, pairwise_churn, regression_churn, FlipCurve, PredictionSet};
use xchurn::protocol::{
    canonical_replicates, entropy_vs_churn, footprint_csv, footprint_markdown, lambda_sweep, n_scaling, overlap_spectrum,
    pareto_front, run_comparison_on, standard_footprint, triage_convergence, Replicate,
};
use xchurn::report::{markdown_table, replicate_means, rows_from_csv, rows_to_csv, ReportRow, ROW_HEADER, MEAN_REPLICATE};
use xchurn::stats::paired_bootstrap_ci;

use crate::config::{DataSource, RunConfig};
use crate::CliError;

/// Subcommand names, in the order they appear in `--help`.
pub const COMMANDS: [&str; 11] = [
    "synth",
    "churn",
    "compare",
    "sweep-lambda",
    "bo-lambda",
    "bo-loop",
    "triage",
    "nscale",
    "overlap",
    "footprint",
    "report",
];

/// Writes stamped artifacts and remembers what it wrote.
pub struct Artifacts<'a> {
    dir: PathBuf,
    cfg: &'a RunConfig,
    command: &'a str,
    pub written: Vec<PathBuf>,
}

fn join(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

impl<'a> Artifacts<'a> {
    pub fn new(dir: &Path, cfg: &'a RunConfig, command: &'a str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            cfg,
            command,
            written: Vec::new(),
        })
    }

    fn stamp(&self) -> String {
        format!(
            "command={} config_hash={} seed={} seeds={} canonical_seeds={}",
            self.command,
            self.cfg.hash(),
            self.cfg.seed,
            join(&self.cfg.comparison.seeds),
            join(&self.cfg.comparison.canonical_seeds)
        )
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with a leading `#` stamp line; the library readers skip it.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("# {}\n{body}", self.stamp());
        self.write(name, &text)
    }

    pub fn md(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("{body}\n<!-- {} -->\n", self.stamp());
        self.write(name, &text)
    }

    pub fn json(&mut self, name: &str, result: Value) -> Result<(), CliError> {
        let config: Map<String, Value> = self
            .cfg
            .canonical()
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
            .collect();
        let doc = json!({
            "command": self.command,
            "config_hash": self.cfg.hash(),
            "seed": self.cfg.seed,
            "seeds": self.cfg.comparison.seeds,
            "canonical_seeds": self.cfg.comparison.canonical_seeds,
            "config": config,
            "result": result,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("json values serialize");
        text.push('\n');
        self.write(name, &text)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    Ok(match &cfg.data {
        DataSource::Synthetic(spec) => generate_synthetic(spec, cfg.seed)?,
        DataSource::File(p) => load_dataset(p, cfg.task)?,
    })
}

fn replicates(ds: &Dataset, cfg: &RunConfig) -> Result<Vec<Replicate>, CliError> {
    Ok(match &cfg.split {
        Some(p) => vec![Replicate {
            label: "split".into(),
            split: load_split_file(p, ds)?,
        }],
        None => canonical_replicates(ds, &cfg.comparison)?,
    })
}

fn rows_json(rows: &[ReportRow]) -> Value {
    serde_json::to_value(rows).expect("rows serialize")
}

fn metric_tables(rows: &[ReportRow], replicate: &str) -> String {
    let mut metrics: Vec<&str> = Vec::new();
    for r in rows.iter().filter(|r| r.replicate == replicate) {
        if !metrics.contains(&r.metric.as_str()) {
            metrics.push(&r.metric);
        }
    }
    let mut s = String::new();
    for m in metrics {
        let _ = write!(s, "## {m}\n\n{}\n", markdown_table(rows, m, replicate));
    }
    s
}

fn curve_json(c: &FlipCurve) -> Value {
    json!({
        "recall_at_10": c.recall_at_10,
        "recall_at_30": c.recall_at_30,
        "aupc_raw": c.aupc_raw,
        "aupc_norm": c.aupc_norm,
    })
}

pub fn synth(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let ds = dataset(cfg)?;
    let positives = ds.targets.iter().filter(|&&t| t == 1.0).count();
    out.csv("synth.csv", &ds.to_csv())?;
    let mut md = format!(
        "| Dataset | N | d | Task |\n|---|---:|---:|---|\n| {} | {} | {} | {} |\n",
        ds.name,
        ds.len(),
        ds.n_features(),
        ds.task
    );
    if ds.task.is_classification() {
        let _ = writeln!(md, "\nPositive fraction: {:.3}", positives as f64 / ds.len() as f64);
    }
    out.md("synth.md", &md)?;
    out.json(
        "synth.json",
        json!({"dataset": ds.name, "n": ds.len(), "d": ds.n_features(), "task": ds.task.to_string()}),
    )
}

pub fn churn(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let path = cfg
        .predictions
        .as_ref()
        .ok_or_else(|| CliError::config("predictions", "`churn` needs a prediction file"))?;
    let ps = PredictionSet::from_csv(&read(path)?, "input")?;
    let ci = |v: &[f64]| paired_bootstrap_ci(v, cfg.comparison.resamples, cfg.seed);
    let mut csv = String::from("seed_a,seed_b,churn,symkl\n");
    if ps.task.is_classification() {
        let pc = pairwise_churn(&ps)?;
        for (i, &(a, b)) in pc.pairs.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{},{}", ps.seeds[a], ps.seeds[b], pc.churn[i], pc.symkl[i]);
        }
        let mut ex = String::from("id,churn,flip_mass\n");
        for (i, id) in ps.ids.iter().enumerate() {
            let _ = writeln!(ex, "{id},{},{}", pc.per_example[i], pc.flip_mass[i]);
        }
        out.csv("churn.csv", &csv)?;
        out.csv("churn_examples.csv", &ex)?;
        let c = ci(&pc.churn)?;
        let k = ci(&pc.symkl)?;
        let md = format!(
            "| Seeds | Pairs | Churn (%) | Sym-KL |\n|---:|---:|---|---|\n| {} | {} | {:.1} [{:.1}, {:.1}] | {:.4} [{:.4}, {:.4}] |\n",
            ps.n_seeds(),
            pc.pairs.len(),
            100.0 * c.mean,
            100.0 * c.lo,
            100.0 * c.hi,
            k.mean,
            k.lo,
            k.hi
        );
        out.md("churn.md", &md)?;
        out.json(
            "churn.json",
            json!({"seeds": ps.seeds, "pairs": pc.pairs.len(), "churn": c, "symkl": k}),
        )
    } else {
        let ds = match &cfg.data {
            DataSource::File(_) => dataset(cfg)?,
            DataSource::Synthetic(_) => {
                return Err(CliError::config("dataset", "regression churn needs the dataset file for targets"))
            }
        };
        let index = id_index(&ds.ids);
        let targets = ps
            .ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .map(|&i| ds.targets[i])
                    .ok_or_else(|| CliError::config("predictions", format!("id `{id}` is not in the dataset")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rc = regression_churn(&ps, &targets)?;
        let mut csv = String::from("seed_a,seed_b,mean_abs_diff\n");
        for (i, &(a, b)) in xchurn::metrics::seed_pairs(ps.n_seeds()).iter().enumerate() {
            let _ = writeln!(csv, "{},{},{}", ps.seeds[a], ps.seeds[b], rc.per_pair[i]);
        }
        out.csv("churn.csv", &csv)?;
        let c = ci(&rc.per_pair)?;
        let md = format!(
            "| Seeds | Churn | MAE | Churn/MAE |\n|---:|---|---:|---:|\n| {} | {:.4} [{:.4}, {:.4}] | {:.4} | {:.3} |\n",
            ps.n_seeds(),
            c.mean,
            c.lo,
            c.hi,
            rc.mae,
            rc.ratio
        );
        out.md("churn.md", &md)?;
        out.json("churn.json", json!({"seeds": ps.seeds, "churn": c, "mae": rc.mae, "ratio": rc.ratio}))
    }
}

pub fn compare(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let ds = dataset(cfg)?;
    let reps = replicates(&ds, cfg)?;
    let cmp = run_comparison_on(&ds, &cfg.methods, &reps, &cfg.comparison)?;
    out.csv("compare.csv", &rows_to_csv(&cmp.rows)?)?;
    let mut stripes = String::from("method,replicate,seed,id,value\n");
    for cell in &cmp.cells {
        for (s, &seed) in cell.predictions.seeds.iter().enumerate() {
            let values = if ds.task.is_classification() {
                cell.predictions.argmaxes(s).into_iter().map(|v| v as f64).collect()
            } else {
                cell.predictions.scores(s)
            };
            for (id, v) in cell.predictions.ids.iter().zip(values) {
                let _ = writeln!(stripes, "{},{},{seed},{id},{v}", cell.method, cell.replicate);
            }
        }
    }
    out.csv("stripes.csv", &stripes)?;
    let means: Vec<ReportRow> = cmp.rows.iter().filter(|r| r.replicate == MEAN_REPLICATE).cloned().collect();
    out.md("compare.md", &metric_tables(&cmp.rows, MEAN_REPLICATE))?;
    out.json("compare.json", json!({"dataset": cmp.dataset, "n": cmp.n, "rows": rows_json(&means)}))
}

pub fn sweep_lambda(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let ds = dataset(cfg)?;
    let sweep = lambda_sweep(&ds, &cfg.lambda_grid, cfg.overlap, cfg.tolerance, &cfg.comparison)?;
    let cls = ds.task.is_classification();
    // Pareto in (quality up, churn down); MAE is negated so higher is better.
    let pts: Vec<(f64, f64)> = sweep
        .points
        .iter()
        .map(|p| (if cls { p.quality.mean } else { -p.quality.mean }, p.churn.mean))
        .collect();
    let front = pareto_front(&pts);
    let mut csv = String::from(
        "lambda,quality,quality_lo,quality_hi,churn,churn_lo,churn_hi,delta_churn,delta_churn_lo,delta_churn_hi,symkl,head_symkl,pareto,selected\n",
    );
    let mut md = String::from("| λ | Quality | Churn (%) | Δ-churn (pp) | Head sym-KL | Pareto |\n|---:|---|---|---|---:|:-:|\n");
    for (i, p) in sweep.points.iter().enumerate() {
        let opt = |r: &Option<ReportRow>| r.as_ref().map_or(String::new(), |r| r.mean.to_string());
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.lambda,
            p.quality.mean,
            p.quality.lo,
            p.quality.hi,
            p.churn.mean,
            p.churn.lo,
            p.churn.hi,
            p.delta_churn.mean,
            p.delta_churn.lo,
            p.delta_churn.hi,
            opt(&p.symkl),
            opt(&p.head_symkl),
            front.contains(&i),
            sweep.selected == Some(p.lambda)
        );
        let _ = writeln!(
            md,
            "| {} | {:.4} | {:.1} | {:+.1} [{:+.1}, {:+.1}] | {} | {} |",
            p.lambda,
            p.quality.mean,
            100.0 * p.churn.mean,
            100.0 * p.delta_churn.mean,
            100.0 * p.delta_churn.lo,
            100.0 * p.delta_churn.hi,
            p.head_symkl.as_ref().map_or("—".into(), |r| format!("{:.4}", r.mean)),
            if front.contains(&i) { "✓" } else { "" }
        );
    }
    let _ = write!(
        md,
        "\nERM quality {:.4}; selected λ = {}\n",
        sweep.erm_quality,
        sweep.selected.map_or("none".into(), |l| l.to_string())
    );
    out.csv("sweep_lambda.csv", &csv)?;
    out.md("sweep_lambda.md", &md)?;
    out.json(
        "sweep_lambda.json",
        json!({
            "erm_quality": sweep.erm_quality,
            "selected": sweep.selected,
            "lambdas": cfg.lambda_grid,
            "pareto": front.iter().map(|&i| sweep.points[i].lambda).collect::<Vec<_>>(),
        }),
    )
}

pub fn bo_lambda(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let ds = dataset(cfg)?;
    let reps = replicates(&ds, cfg)?;
    let results = reps
        .iter()
        .map(|r| bo_lambda_search(&ds, &r.split.train_pool, &cfg.comparison.train, cfg.seed, &cfg.bo))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("replicate,trial,lambda,val_acc,val_churn,score\n");
    let mut md = String::from("| Replicate | λ* | a₀ | Trials |\n|---|---:|---:|---:|\n");
    for (rep, res) in reps.iter().zip(&results) {
        for line in res.trial_log_csv().lines().skip(1) {
            let _ = writeln!(csv, "{},{line}", rep.label);
        }
        let _ = writeln!(md, "| {} | {} | {:.4} | {} |", rep.label, res.lambda_star, res.a0, res.trials.len());
    }
    let stars: Vec<f64> = results.iter().map(|r| r.lambda_star).collect();
    let median = median_lambda(&stars)?;
    let _ = write!(md, "\nMedian λ* across replicates: {median}\n");
    out.csv("bo_lambda.csv", &csv)?;
    out.md("bo_lambda.md", &md)?;
    out.json(
        "bo_lambda.json",
        json!({
            "replicates": reps.iter().map(|r| r.label.clone()).collect::<Vec<_>>(),
            "lambda_star": stars,
            "a0": results.iter().map(|r| r.a0).collect::<Vec<_>>(),
            "median_lambda_star": median,
        }),
    )
}

pub fn bo_loop(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let ds = dataset(cfg)?;
    let t = &cfg.trajectory;
    let jobs: Vec<(usize, u64)> = (0..cfg.methods.len())
        .flat_map(|m| (0..t.trajectories as u64).map(move |k| (m, k)))
        .collect();
    let trajs = jobs
        .par_iter()
        .map(|&(m, k)| {
            bo_trajectory(&ds, &cfg.methods[m], &cfg.comparison.train, k, t.budget, t.init_size, t.init_seed)
        })
        .collect::<Result<Vec<Trajectory>, _>>()?;
    let lo = ds.targets.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ds.targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut csv = String::from("method,k,step,id,y\n");
    let mut md = String::from(
        "| Method | Final best (mean) | Final best (std) | Std / range (%) | Acquired-set Jaccard |\n|---|---|---|---:|---:|\n",
    );
    let mut summary = Vec::new();
    for (m, spec) in cfg.methods.iter().enumerate() {
        let group = &trajs[m * t.trajectories..(m + 1) * t.trajectories];
        for tr in group {
            for (step, (&row, &y)) in tr.acquired.iter().zip(&tr.acquired_y).enumerate() {
                let _ = writeln!(csv, "{spec},{},{step},{},{y}", tr.k, ds.ids[row]);
            }
        }
        let rep = trajectory_report(group, hi - lo, cfg.seed)?;
        let _ = writeln!(
            md,
            "| {spec} | {:.4} [{:.4}, {:.4}] | {:.4} [{:.4}, {:.4}] | {:.2} | {:.3} |",
            rep.final_best_mean,
            rep.mean_ci.lo,
            rep.mean_ci.hi,
            rep.final_best_std,
            rep.std_ci.lo,
            rep.std_ci.hi,
            rep.std_over_range_pct,
            rep.mean_jaccard
        );
        summary.push(json!({"method": spec.to_string(), "report": rep}));
    }
    out.csv("bo_loop.csv", &csv)?;
    out.md("bo_loop.md", &md)?;
    out.json("bo_loop.json", Value::Array(summary))
}

pub fn triage(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let ds = dataset(cfg)?;
    let reps = replicates(&ds, cfg)?;
    // Two extra seeds give the independent pair scored against the gold set.
    let mut cc = cfg.comparison.clone();
    let top = cc.seeds.iter().copied().max().unwrap_or(0);
    let gold_n = cc.seeds.len();
    cc.seeds.extend([top + 1, top + 2]);
    let cmp = run_comparison_on(&ds, &[], &reps, &cc)?;
    let gold_pos: Vec<usize> = (0..gold_n).collect();
    let mut csv = String::from("replicate,k,mean_recall\n");
    let mut curves = String::from("replicate,score,reviewed,captured\n");
    let mut md = String::from("| Replicate | K′ | Recall@review |\n|---|---:|---:|\n");
    let mut summary = Vec::new();
    for cell in cmp.cells_of(MethodSpec::erm()) {
        let gold = cell.predictions.select_seeds(&gold_pos);
        let pair = cell.predictions.select_seeds(&[gold_n, gold_n + 1]);
        let rows = triage_convergence(&gold, &cfg.triage.sizes, cfg.triage.subsets, cfg.triage.review_frac, cfg.seed)?;
        for r in &rows {
            let _ = writeln!(csv, "{},{},{}", cell.replicate, r.k, r.mean_recall);
            let _ = writeln!(md, "| {} | {} | {:.3} |", cell.replicate, r.k, r.mean_recall);
        }
        let evc = entropy_vs_churn(&gold, &pair, gold.seed(0))?;
        for (name, c) in [("churn", &evc.churn), ("entropy", &evc.entropy)] {
            for (x, y) in &c.points {
                let _ = writeln!(curves, "{},{name},{x},{y}", cell.replicate);
            }
        }
        summary.push(json!({
            "replicate": cell.replicate,
            "convergence": rows.iter().map(|r| json!({"k": r.k, "mean_recall": r.mean_recall})).collect::<Vec<_>>(),
            "churn_curve": curve_json(&evc.churn),
            "entropy_curve": curve_json(&evc.entropy),
        }));
    }
    out.csv("triage.csv", &csv)?;
    out.csv("triage_curves.csv", &curves)?;
    out.md("triage.md", &md)?;
    out.json("triage.json", Value::Array(summary))
}

pub fn nscale(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let ds = dataset(cfg)?;
    let ns = n_scaling(&ds, &cfg.nscale_m, &cfg.comparison)?;
    let mut csv = String::from("m,churn,symkl\n");
    let mut md = String::from("| M | Churn (%) | Sym-KL |\n|---:|---:|---:|\n");
    for p in &ns.points {
        let _ = writeln!(csv, "{},{},{}", p.m, p.churn, p.symkl);
        let _ = writeln!(md, "| {} | {:.1} | {:.4} |", p.m, 100.0 * p.churn, p.symkl);
    }
    let _ = write!(
        md,
        "\nlog-log slope: sym-KL {:.3}, churn {}\n",
        ns.symkl_slope,
        ns.churn_slope.map_or("undefined".into(), |s| format!("{s:.3}"))
    );
    out.csv("nscale.csv", &csv)?;
    out.md("nscale.md", &md)?;
    out.json("nscale.json", serde_json::to_value(&ns).expect("scaling serializes"))
}

pub fn overlap(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let ds = dataset(cfg)?;
    let rows = overlap_spectrum(&ds, cfg.lambda, &cfg.overlap_modes, &cfg.comparison)?;
    let mut csv = String::from(
        "mode,measured_overlap,delta_churn,delta_churn_lo,delta_churn_hi,delta_acc,delta_acc_lo,delta_acc_hi,dagger\n",
    );
    let mut md = String::from("| Mode | Overlap | Δ-churn (pp) | Δ-acc (pp) |\n|---|---:|---|---|\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.mode.as_str(),
            r.measured_overlap,
            r.delta_churn.mean,
            r.delta_churn.lo,
            r.delta_churn.hi,
            r.delta_acc.mean,
            r.delta_acc.lo,
            r.delta_acc.hi,
            r.dagger
        );
        let _ = writeln!(
            md,
            "| {} | {:.3} | {:+.1} [{:+.1}, {:+.1}] | {:+.1}{} |",
            r.mode.as_str(),
            r.measured_overlap,
            100.0 * r.delta_churn.mean,
            100.0 * r.delta_churn.lo,
            100.0 * r.delta_churn.hi,
            100.0 * r.delta_acc.mean,
            if r.dagger { " †" } else { "" }
        );
    }
    out.csv("overlap.csv", &csv)?;
    out.md("overlap.md", &md)?;
    out.json(
        "overlap.json",
        json!({"lambda": cfg.lambda, "modes": rows.iter().map(|r| json!({
            "mode": r.mode.as_str(),
            "measured_overlap": r.measured_overlap,
            "delta_churn": r.delta_churn,
            "delta_acc": r.delta_acc,
            "dagger": r.dagger,
        })).collect::<Vec<_>>()}),
    )
}

pub fn footprint(_cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let rows = standard_footprint();
    out.csv("footprint.csv", &footprint_csv(&rows))?;
    out.md("footprint.md", &footprint_markdown(&rows))?;
    out.json("footprint.json", serde_json::to_value(&rows).expect("footprint serializes"))
}

/// Report rows from a CSV file, or from every CSV in a directory whose
/// header is the long row format.
fn collect_rows(input: &Path) -> Result<Vec<ReportRow>, CliError> {
    let files: Vec<PathBuf> = if input.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(input)
            .map_err(|e| CliError::io(input, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        v.sort();
        v
    } else {
        vec![input.to_path_buf()]
    };
    let mut rows = Vec::new();
    for f in files {
        let text = read(&f)?;
        let header = text.lines().find(|l| !skip_line(l)).map(str::trim);
        if header != Some(ROW_HEADER) {
            if !input.is_dir() {
                return Err(CliError::config("input", format!("{} is not a report-row CSV", f.display())));
            }
            continue;
        }
        rows.extend(rows_from_csv(&text)?);
    }
    if rows.is_empty() {
        return Err(CliError::config("input", "no report rows found"));
    }
    Ok(rows)
}

pub fn report(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::config("input", "`report` needs a CSV file or directory"))?;
    let rows = collect_rows(input)?;
    let mut means: Vec<ReportRow> = rows.iter().filter(|r| r.replicate == MEAN_REPLICATE).cloned().collect();
    if means.is_empty() {
        means = replicate_means(&rows);
    }
    out.csv("report.csv", &rows_to_csv(&means)?)?;
    out.md("report.md", &metric_tables(&means, MEAN_REPLICATE))?;
    out.json("report.json", json!({"rows": rows_json(&means)}))
}

/// Dispatch by subcommand name.
pub fn run_command(name: &str, cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Artifacts::new(out_dir, cfg, name)?;
    match name {
        "synth" => synth(cfg, &mut out),
        "churn" => churn(cfg, &mut out),
        "compare" => compare(cfg, &mut out),
        "sweep-lambda" => sweep_lambda(cfg, &mut out),
        "bo-lambda" => bo_lambda(cfg, &mut out),
        "bo-loop" => bo_loop(cfg, &mut out),
        "triage" => triage(cfg, &mut out),
        "nscale" => nscale(cfg, &mut out),
        "overlap" => overlap(cfg, &mut out),
        "footprint" => footprint(cfg, &mut out),
        "report" => report(cfg, &mut out),
        other => return Err(CliError::config("command", format!("unknown subcommand `{other}`"))),
    }?;
    Ok(out.written)
}

