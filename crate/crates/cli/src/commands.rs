use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use barrier_core::dynsys::{ReferenceResult, SystemSpec};
use barrier_core::neural::{load_model, save_model, ModelMeta, Network};
use barrier_core::trainer::{self, RunReport, TrainConfig};
use barrier_core::zeroset::enclose_zero_set;
use serde::Serialize;

use crate::options::{BenchArgs, ExportArgs, Loaded, TrainArgs, VerifyArgs};

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn file_stem(system: &SystemSpec, seed: u64) -> String {
    format!("{}-seed{seed}", system.name)
}

fn meta_for(system: &SystemSpec, cfg: &TrainConfig, verified: bool) -> ModelMeta {
    ModelMeta {
        benchmark: system.name.clone(),
        seed: cfg.seed,
        epsilon: cfg.epsilon,
        verified,
        config: serde_json::to_value(cfg).expect("serializable"),
    }
}

/// Runs one training job and writes `<name>-seed<k>.model.json` and
/// `.report.json` into `out`.
fn train_one(loaded: &Loaded, cfg: &TrainConfig, out: &Path) -> Result<RunReport> {
    let sys = &loaded.system;
    let (net, mut report) = trainer::train(sys, cfg)
        .with_context(|| format!("training {} with zero-set parameters {}", sys.name, cfg.zero))?;
    report.defaults = loaded.defaults.clone();
    let stem = file_stem(sys, cfg.seed);
    save_model(&out.join(format!("{stem}.model.json")), &net, &meta_for(sys, cfg, report.verified))?;
    write_json(&out.join(format!("{stem}.report.json")), &report)?;
    Ok(report)
}

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

pub fn train(args: &TrainArgs) -> Result<bool> {
    let loaded = args.system.load()?;
    let mut cfg = args.config.resolve(loaded.defaults.as_ref())?;
    cfg.seed = args.seed;
    cfg.validate(loaded.system.dim())?;
    create_dir(&args.out)?;
    let report = train_one(&loaded, &cfg, &args.out)?;
    println!(
        "{} seed {}: {} after {} epochs in {:.2}s",
        loaded.system.name,
        cfg.seed,
        if report.verified { "verified" } else { "not verified" },
        report.epochs_run,
        report.wall_time_s
    );
    Ok(report.verified)
}

/// The stored configuration of a model when readable, otherwise the
/// benchmark defaults; explicit flags win in both cases.
fn config_for_model(loaded: &Loaded, meta: &ModelMeta, args: &crate::options::ConfigArgs) -> Result<TrainConfig> {
    match serde_json::from_value::<TrainConfig>(meta.config.clone()) {
        Ok(stored) => Ok(args.apply(stored)),
        Err(_) => args.resolve(loaded.defaults.as_ref()),
    }
}

fn load_checked(path: &PathBuf, sys: &SystemSpec) -> Result<(Network, ModelMeta)> {
    let (net, meta) = load_model(path).with_context(|| format!("loading model {}", path.display()))?;
    if net.input_dim() != sys.dim() {
        bail!(
            "model {} expects {} inputs but {} is {}-dimensional",
            path.display(),
            net.input_dim(),
            sys.name,
            sys.dim()
        );
    }
    Ok((net, meta))
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    verified: bool,
    zero: String,
    cover_size: usize,
    #[serde(rename = "lU")]
    l_unsafe: f64,
    #[serde(rename = "lI")]
    l_init: f64,
    #[serde(rename = "l0")]
    l_zero: f64,
    total: f64,
    epsilon: f64,
    model: &'a Path,
}

pub fn verify(args: &VerifyArgs) -> Result<bool> {
    let loaded = args.system.load()?;
    let sys = &loaded.system;
    let (net, meta) = load_checked(&args.model, sys)?;
    let mut cfg = config_for_model(&loaded, &meta, &args.config)?;
    cfg.zero = cfg.zero.refined(args.refine);
    let mut report = trainer::verify(&net, sys, &cfg)?;
    report.defaults = loaded.defaults.clone();
    let loss = report.final_loss.as_ref().expect("verify records a loss");
    let summary = VerifySummary {
        verified: report.verified,
        zero: cfg.zero.to_string(),
        cover_size: report.loss_trace[0].cover_n,
        l_unsafe: loss.l_unsafe,
        l_init: loss.l_init,
        l_zero: loss.l_zero,
        total: loss.total,
        epsilon: loss.epsilon,
        model: &args.model,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if let Some(out) = &args.out {
        create_dir(out)?;
        write_json(&out.join(format!("{}-verify.report.json", sys.name)), &report)?;
    }
    Ok(report.verified)
}

#[derive(Serialize)]
struct SeedResult {
    seed: u64,
    verified: bool,
    epochs: Option<usize>,
    wall_time_s: Option<f64>,
    pretrain_time_s: Option<f64>,
    final_total: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct BenchSummary {
    benchmark: String,
    n: usize,
    config: TrainConfig,
    runs: Vec<SeedResult>,
    success_pct: f64,
    /// Statistics over verified runs.
    time_mean_s: Option<f64>,
    time_std_s: Option<f64>,
    epochs_mean: Option<f64>,
    epochs_std: Option<f64>,
    reference: Option<ReferenceResult>,
}

/// Mean and sample standard deviation.
fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (Some(mean), Some(0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

const SUMMARY_HEADER: [&str; 13] = [
    "benchmark",
    "n",
    "runs",
    "success_pct",
    "time_mean_s",
    "time_std_s",
    "epochs_mean",
    "epochs_std",
    "paper_success_pct",
    "paper_time_mean_s",
    "paper_time_std_s",
    "paper_epochs_mean",
    "paper_epochs_std",
];

fn write_summary_csv(path: &Path, s: &BenchSummary) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(SUMMARY_HEADER)?;
    let r = s.reference;
    w.write_record([
        s.benchmark.clone(),
        s.n.to_string(),
        s.runs.len().to_string(),
        s.success_pct.to_string(),
        opt(s.time_mean_s),
        opt(s.time_std_s),
        opt(s.epochs_mean),
        opt(s.epochs_std),
        opt(r.map(|r| r.success_pct)),
        opt(r.map(|r| r.time_mean_s)),
        opt(r.map(|r| r.time_std_s)),
        opt(r.map(|r| r.epochs_mean)),
        opt(r.map(|r| r.epochs_std)),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<bool> {
    let loaded = args.system.load()?;
    let sys = &loaded.system;
    let base = args.config.resolve(loaded.defaults.as_ref())?;
    base.validate(sys.dim())?;
    create_dir(&args.out)?;
    let mut runs = Vec::new();
    for seed in args.seeds.seeds() {
        let cfg = TrainConfig { seed, ..base.clone() };
        let run = match train_one(&loaded, &cfg, &args.out) {
            Ok(r) => SeedResult {
                seed,
                verified: r.verified,
                epochs: Some(r.epochs_run),
                wall_time_s: Some(r.wall_time_s),
                pretrain_time_s: Some(r.pretrain_time_s),
                final_total: r.final_loss.map(|l| l.total),
                error: None,
            },
            Err(e) => SeedResult {
                seed,
                verified: false,
                epochs: None,
                wall_time_s: None,
                pretrain_time_s: None,
                final_total: None,
                error: Some(format!("{e:#}")),
            },
        };
        println!(
            "{} seed {seed}: {}",
            sys.name,
            match (&run.error, run.verified) {
                (Some(e), _) => format!("error: {e}"),
                (None, true) => format!("verified after {} epochs", run.epochs.unwrap_or(0)),
                (None, false) => "not verified".to_string(),
            }
        );
        runs.push(run);
    }
    let ok: Vec<&SeedResult> = runs.iter().filter(|r| r.verified).collect();
    let times: Vec<f64> = ok.iter().filter_map(|r| r.wall_time_s).collect();
    let epochs: Vec<f64> = ok.iter().filter_map(|r| r.epochs.map(|e| e as f64)).collect();
    let (time_mean_s, time_std_s) = mean_std(&times);
    let (epochs_mean, epochs_std) = mean_std(&epochs);
    let all_verified = ok.len() == runs.len();
    let summary = BenchSummary {
        benchmark: sys.name.clone(),
        n: sys.dim(),
        config: base,
        success_pct: 100.0 * ok.len() as f64 / runs.len() as f64,
        runs,
        time_mean_s,
        time_std_s,
        epochs_mean,
        epochs_std,
        reference: loaded.reference,
    };
    write_json(&args.out.join(format!("{}-summary.json", sys.name)), &summary)?;
    write_summary_csv(&args.out.join(format!("{}-summary.csv", sys.name)), &summary)?;
    println!(
        "{}: {:.0}% verified, epochs {} ± {}",
        summary.benchmark,
        summary.success_pct,
        opt(summary.epochs_mean),
        opt(summary.epochs_std)
    );
    Ok(all_verified)
}

/// Evenly spaced samples of `[lo, hi]`; a single sample sits at the midpoint.
fn axis(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

fn box_record(prefix: Vec<String>, lo: &[f64], hi: &[f64]) -> Vec<String> {
    let mut rec = prefix;
    for (l, h) in lo.iter().zip(hi) {
        rec.push(l.to_string());
        rec.push(h.to_string());
    }
    rec
}

fn bound_header(prefix: &[&str], n: usize) -> Vec<String> {
    let mut h: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    for i in 1..=n {
        h.push(format!("lo{i}"));
        h.push(format!("hi{i}"));
    }
    h
}

pub fn export_levelset(args: &ExportArgs) -> Result<bool> {
    let loaded = args.system.load()?;
    let sys = &loaded.system;
    let n = sys.dim();
    let (i, j) = match (&args.dims, n) {
        (Some(d), _) => (d[0], d[1]),
        (None, 2) => (1, 2),
        (None, _) => bail!("--dims i j is required for a {n}-dimensional system"),
    };
    if i == j || !(1..=n).contains(&i) || !(1..=n).contains(&j) {
        bail!("--dims must name two distinct dimensions in 1..={n}");
    }
    if args.resolution == 0 {
        bail!("--resolution must be at least 1");
    }
    let (net, meta) = load_checked(&args.model, sys)?;
    let cfg = config_for_model(&loaded, &meta, &args.config)?;
    cfg.zero.validate(Some(n))?;
    create_dir(&args.out)?;

    let x = &sys.state_space;
    let (di, dj) = (&x.as_slice()[i - 1], &x.as_slice()[j - 1]);
    let mut point = x.center();
    let mut grid = csv::Writer::from_path(args.out.join("levelset_grid.csv"))?;
    grid.write_record([format!("x{i}"), format!("x{j}"), "B".to_string()])?;
    for a in axis(di.lo(), di.hi(), args.resolution) {
        for b in axis(dj.lo(), dj.hi(), args.resolution) {
            point[i - 1] = a;
            point[j - 1] = b;
            let v = net.forward(&point)?;
            grid.write_record([a.to_string(), b.to_string(), v.to_string()])?;
        }
    }
    grid.flush()?;

    let cover = enclose_zero_set(&net, x, &cfg.zero)?;
    let mut boxes = csv::Writer::from_path(args.out.join("levelset_cover.csv"))?;
    boxes.write_record(bound_header(&["index"], n))?;
    for (k, h) in cover.hulls().iter().enumerate() {
        boxes.write_record(box_record(vec![k.to_string()], &h.lower(), &h.upper()))?;
    }
    boxes.flush()?;

    let mut sets = csv::Writer::from_path(args.out.join("levelset_sets.csv"))?;
    sets.write_record(bound_header(&["kind", "index"], n))?;
    sets.write_record(box_record(vec!["state".into(), "0".into()], &x.lower(), &x.upper()))?;
    for (kind, list) in [("initial", &sys.initial_sets), ("unsafe", &sys.unsafe_sets)] {
        for (k, z) in list.iter().enumerate() {
            let h = z.interval_hull();
            sets.write_record(box_record(vec![kind.into(), k.to_string()], &h.lower(), &h.upper()))?;
        }
    }
    sets.flush()?;
    println!(
        "wrote {}² grid points and {} cover boxes to {}",
        args.resolution,
        cover.len(),
        args.out.display()
    );
    Ok(true)
}
