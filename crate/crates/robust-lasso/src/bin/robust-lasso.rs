//! Command-line driver: dataset generation, outlier detection, benchmarks.
//!
//! Exit codes: 0 success, 2 usage or configuration errors, 3 data shape or
//! content errors, 4 numerical failures. Every artifact embeds the fully
//! resolved configuration (CSV: `# key = value` comments, JSON: a config
//! object), so rerunning with an artifact's own header reproduces it;
//! `runtime_ms` inside benchmark JSON is the one field that varies.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::{concatenate, Array2, Axis};

use robust_lasso::bench::{
    run_path_experiment_on, run_pipeline_experiment, run_ratio_sweep, ClassifierStage,
    ExperimentResult, FeatureStage, PipelineConfig, RemovalStage,
};
use robust_lasso::config::Config;
use robust_lasso::dataset::io::{load_dataset, save_dataset, to_csv_string, FileFormat};
use robust_lasso::dataset::{generate_synthetic, Dataset, SyntheticConfig};
use robust_lasso::error::{Error, Result};
use robust_lasso::plasso::ipod::ipod_refine;
use robust_lasso::plasso::path::{lasso_path_with, PathOptions};
use robust_lasso::plasso::precondition::{precondition, Preconditioner};
use robust_lasso::plasso::report::{
    select_outliers_count, select_outliers_cv_with, CvOptions, OutlierReport,
};
use robust_lasso::tdca::embedding::{fit_embedding, EmbedOptions};
use robust_lasso::tdca::graph::build_graph;
use robust_lasso::tdca::walk::{lazy_random_walk, DEFAULT_WALK_MAX_ITER};

#[derive(Parser)]
#[command(
    name = "robust-lasso",
    version,
    about = "Outlier detection in labeled datasets via preconditioned sparse \
             regression, with diffusion-based dimensionality reduction"
)]
struct Cli {
    /// Flat `key = value` config file applied over built-in defaults;
    /// individual flags override both.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset with planted outliers.
    Generate(GenerateArgs),
    /// Rank and select outlier instances in a dataset file.
    Detect(DetectArgs),
    /// Run the bundled experiments and emit their data files.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args)]
struct GenerateArgs {
    /// Use the bundled benchmark preset: three diagonal class means,
    /// 100 inliers and 30 box outliers per class.
    #[arg(long)]
    paper_fig1: bool,

    #[arg(long)]
    seed: Option<u64>,

    /// Number of classes; means default to the diagonal (1,1),(2,2),…
    #[arg(long, default_value_t = 3)]
    classes: usize,

    /// Explicit class means, e.g. "1,1;2,2;3,3" (overrides --classes).
    #[arg(long)]
    means: Option<String>,

    #[arg(long, default_value_t = 100)]
    per_class: usize,

    #[arg(long, default_value_t = 30)]
    outliers_per_class: usize,

    #[arg(long, default_value_t = 0.01)]
    class_std: f64,

    #[arg(long, default_value_t = 0.5)]
    box_halfwidth: f64,

    /// Output file; format inferred from the extension (.json, else CSV).
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    /// Input dataset file (CSV or JSON; format inferred from extension).
    #[arg(short, long)]
    input: PathBuf,

    /// Detection method.
    #[arg(long, default_value = "plasso", value_parser = ["plasso", "ipod"])]
    method: String,

    /// Feature stage: detect on raw features or on a diffusion embedding.
    #[arg(long, default_value = "raw", value_parser = ["raw", "tdca"])]
    features: String,

    /// Selection rule: "count=K" (top K of the ranking) or "cv=F"
    /// (F-fold cross-validated choice of the cut).
    #[arg(long)]
    select: String,

    /// Append a constant column to the detection design; needed when the
    /// label values are not centered relative to the features.
    #[arg(long)]
    intercept: bool,

    /// Output prefix; writes PREFIX.json and PREFIX.csv.
    #[arg(short, long)]
    out: PathBuf,

    #[arg(long)]
    k_neighbors: Option<usize>,
    #[arg(long)]
    p_r: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reg_c: Option<f64>,
    #[arg(long)]
    lambda_min_ratio: Option<f64>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Path plot data plus the outlier-ratio sweep.
    Fig1(Fig1Args),
    /// Staged feature/removal/classifier comparison over repeated seeds.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct Fig1Args {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Output prefix; writes PREFIX_path.csv, PREFIX_sweep.csv,
    /// PREFIX_summary.json.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// Space- or comma-separated seed list, one pipeline run per seed.
    #[arg(long)]
    seeds: Option<String>,
    /// Output prefix; writes PREFIX_pipeline.csv and PREFIX_pipeline.json.
    #[arg(short, long)]
    out: PathBuf,
}

fn main() {
    if let Ok(v) = std::env::var("ROBUST_LASSO_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = Config::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)?;
        cfg.apply_file_text(&text)?;
    }
    match cli.command {
        Command::Generate(args) => cmd_generate(cfg, args),
        Command::Detect(args) => cmd_detect(cfg, args),
        Command::Bench(BenchCommand::Fig1(args)) => cmd_bench_fig1(cfg, args),
        Command::Bench(BenchCommand::Pipeline(args)) => cmd_bench_pipeline(cfg, args),
    }
}

fn parse_means(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .map(|group| {
            group
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidConfig(format!("bad mean coordinate '{}'", v.trim()))
                    })
                })
                .collect()
        })
        .collect()
}

fn comment_lines(map: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    for (k, v) in map {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out
}

fn cmd_generate(mut cfg: Config, args: GenerateArgs) -> Result<()> {
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let gen_cfg = if args.paper_fig1 {
        SyntheticConfig::paper_fig1(cfg.seed)
    } else {
        let means = match &args.means {
            Some(text) => parse_means(text)?,
            None => (1..=args.classes)
                .map(|c| vec![c as f64, c as f64])
                .collect(),
        };
        SyntheticConfig {
            class_means: means,
            class_std: args.class_std,
            per_class_count: args.per_class,
            outlier_count_per_class: args.outliers_per_class,
            outlier_box_halfwidth: args.box_halfwidth,
            rng_seed: cfg.seed,
        }
    };
    let ds = generate_synthetic(&gen_cfg)?;

    // The generation parameters are the artifact's resolved config.
    let mut params = BTreeMap::new();
    params.insert("classes".into(), gen_cfg.class_means.len().to_string());
    params.insert(
        "means".into(),
        gen_cfg
            .class_means
            .iter()
            .map(|m| {
                m.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join(";"),
    );
    params.insert("per_class".into(), gen_cfg.per_class_count.to_string());
    params.insert(
        "outliers_per_class".into(),
        gen_cfg.outlier_count_per_class.to_string(),
    );
    params.insert("class_std".into(), gen_cfg.class_std.to_string());
    params.insert(
        "box_halfwidth".into(),
        gen_cfg.outlier_box_halfwidth.to_string(),
    );

    match FileFormat::infer(&args.out) {
        FileFormat::Csv => {
            let body = to_csv_string(&ds);
            fs::write(&args.out, format!("{}{body}", comment_lines(&params)))?;
        }
        FileFormat::Json => save_dataset(&ds, &args.out, FileFormat::Json)?,
    }
    println!(
        "wrote {} ({} instances, {} features, {} outliers)",
        args.out.display(),
        ds.n(),
        ds.p(),
        ds.outlier_count()
    );
    Ok(())
}

enum SelectRule {
    Count(usize),
    Cv(usize),
}

fn parse_select(text: &str) -> Result<SelectRule> {
    let (kind, value) = text.split_once('=').ok_or_else(|| {
        Error::InvalidConfig(format!(
            "--select must be 'count=K' or 'cv=F', got '{text}'"
        ))
    })?;
    let n: usize = value.trim().parse().map_err(|_| {
        Error::InvalidConfig(format!("bad --select value '{}'", value.trim()))
    })?;
    match kind.trim() {
        "count" => Ok(SelectRule::Count(n)),
        "cv" => Ok(SelectRule::Cv(n)),
        other => Err(Error::InvalidConfig(format!(
            "unknown --select rule '{other}', expected count or cv"
        ))),
    }
}

/// Builds the detection design from the dataset per the feature stage.
fn detection_design(ds: &Dataset, features: &str, cfg: &Config) -> Result<Array2<f64>> {
    match features {
        "raw" => Ok(ds.features.clone()),
        "tdca" => {
            let graph = build_graph(ds.features.view(), cfg.k_neighbors)?;
            let states = lazy_random_walk(&graph, cfg.p_r, cfg.tol, DEFAULT_WALK_MAX_ITER)?;
            let emb = fit_embedding(
                states.matrix().view(),
                cfg.d,
                &EmbedOptions {
                    grad_tol: cfg.grad_tol,
                    seed: cfg.seed,
                    ..EmbedOptions::default()
                },
            )?;
            Ok(emb.reduced_features())
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown feature stage '{other}'"
        ))),
    }
}

fn run_detection(
    ds: &Dataset,
    pre: &Preconditioner,
    method: &str,
    rule: &SelectRule,
    cfg: &Config,
) -> Result<OutlierReport> {
    let path = lasso_path_with(
        pre,
        ds.labels.view(),
        PathOptions {
            lambda_min_factor: cfg.lambda_min_ratio,
            ..PathOptions::default()
        },
    )?;
    let mut report = match rule {
        SelectRule::Count(k) => select_outliers_count(&path, *k)?,
        SelectRule::Cv(folds) => select_outliers_cv_with(
            &path,
            ds,
            *folds,
            &CvOptions {
                reg_c: cfg.reg_c,
                shuffle_seed: cfg.seed,
            },
        )?,
    };
    if method == "ipod" && !report.selected.is_empty() {
        let refined = ipod_refine(pre, ds.labels.view(), &report.selected)?;
        report.selected = refined.support;
    }
    Ok(report)
}

fn cmd_detect(mut cfg: Config, args: DetectArgs) -> Result<()> {
    if let Some(v) = args.k_neighbors {
        cfg.k_neighbors = v;
    }
    if let Some(v) = args.p_r {
        cfg.p_r = v;
    }
    if let Some(v) = args.d {
        cfg.d = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.reg_c {
        cfg.reg_c = v;
    }
    if let Some(v) = args.lambda_min_ratio {
        cfg.lambda_min_ratio = v;
    }
    let rule = parse_select(&args.select)?;

    let ds = load_dataset(&args.input, FileFormat::infer(&args.input))?;
    if args.features == "raw" && ds.n() <= ds.p() {
        return Err(Error::InvalidInput(format!(
            "dataset has n = {} instances but p = {} features; residual \
             detection needs n > p. Re-run with --features tdca to reduce \
             the dimension first",
            ds.n(),
            ds.p()
        )));
    }

    let mut design = detection_design(&ds, &args.features, &cfg)?;
    if args.intercept {
        let ones = Array2::ones((design.nrows(), 1));
        design = concatenate(Axis(1), &[design.view(), ones.view()]).expect("row counts agree");
    }
    let pre = precondition(&design)?;
    let report = run_detection(&ds, &pre, &args.method, &rule, &cfg)?;

    let mut resolved = cfg.snapshot();
    resolved.insert("method".into(), args.method.clone());
    resolved.insert("features".into(), args.features.clone());
    resolved.insert("select".into(), args.select.clone());
    resolved.insert("intercept".into(), args.intercept.to_string());
    resolved.insert("input".into(), args.input.display().to_string());

    let json_path = args.out.with_extension("json");
    let csv_path = args.out.with_extension("csv");
    let doc = serde_json::json!({
        "tool": "detect",
        "config": resolved,
        "report": report,
    });
    fs::write(&json_path, serde_json::to_string_pretty(&doc)?)?;
    fs::write(
        &csv_path,
        format!("{}{}", comment_lines(&resolved), report.to_ranked_csv_string()),
    )?;
    println!(
        "wrote {} and {} ({} ranked, {} selected)",
        json_path.display(),
        csv_path.display(),
        report.ranking.len(),
        report.selected.len()
    );
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    prefix.with_file_name(name)
}

fn cmd_bench_fig1(mut cfg: Config, args: Fig1Args) -> Result<()> {
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.repeats {
        cfg.repeats = r;
    }
    let resolved = cfg.snapshot();

    let ds = generate_synthetic(&SyntheticConfig::paper_fig1(cfg.seed))?;
    let path_out = run_path_experiment_on(&ds)?;
    let path_file = with_suffix(&args.out, "_path.csv");
    fs::write(
        &path_file,
        format!("{}{}", comment_lines(&resolved), path_out.path_csv),
    )?;

    let sweep = run_ratio_sweep(&cfg.ratios, cfg.repeats, cfg.seed)?;
    let sweep_file = with_suffix(&args.out, "_sweep.csv");
    fs::write(
        &sweep_file,
        format!("{}{}", comment_lines(&resolved), sweep.to_csv_string()),
    )?;

    let summary_file = with_suffix(&args.out, "_summary.json");
    let doc = serde_json::json!({
        "tool": "bench fig1",
        "config": resolved,
        "path_detection_fraction": path_out.detection_fraction,
        "path_cutoff": path_out.cutoff,
        "sweep": sweep,
    });
    fs::write(&summary_file, serde_json::to_string_pretty(&doc)?)?;
    println!(
        "wrote {}, {}, {}",
        path_file.display(),
        sweep_file.display(),
        summary_file.display()
    );
    Ok(())
}

fn cmd_bench_pipeline(mut cfg: Config, args: PipelineArgs) -> Result<()> {
    if let Some(text) = &args.seeds {
        cfg.set("seeds", text)?;
    }
    let resolved = cfg.snapshot();

    let stages = [
        (FeatureStage::Raw, RemovalStage::None, ClassifierStage::Linear),
        (FeatureStage::Raw, RemovalStage::None, ClassifierStage::Lrw),
        (FeatureStage::Tdca, RemovalStage::None, ClassifierStage::Linear),
        (FeatureStage::Raw, RemovalStage::Plasso, ClassifierStage::Linear),
        (FeatureStage::Raw, RemovalStage::Ipod, ClassifierStage::Linear),
        (FeatureStage::Tdca, RemovalStage::Plasso, ClassifierStage::Linear),
    ];
    let mut results: Vec<ExperimentResult> = Vec::new();
    for (features, removal, classifier) in stages {
        let pipe_cfg = PipelineConfig {
            features,
            removal,
            classifier,
            k_neighbors: cfg.k_neighbors,
            restart_prob: cfg.p_r,
            embed_dim: cfg.d,
            test_fraction: cfg.test_fraction,
            reg_c: cfg.reg_c,
            seed: cfg.seed,
        };
        results.push(run_pipeline_experiment(&pipe_cfg, &cfg.seeds)?);
    }

    let csv_file = with_suffix(&args.out, "_pipeline.csv");
    let mut csv = comment_lines(&resolved);
    for (i, r) in results.iter().enumerate() {
        let body = r.to_csv_string();
        if i == 0 {
            csv.push_str(&body);
        } else {
            // Skip the repeated header.
            if let Some(pos) = body.find('\n') {
                csv.push_str(&body[pos + 1..]);
            }
        }
    }
    fs::write(&csv_file, csv)?;

    let json_file = with_suffix(&args.out, "_pipeline.json");
    let doc = serde_json::json!({
        "tool": "bench pipeline",
        "config": resolved,
        "results": results,
    });
    fs::write(&json_file, serde_json::to_string_pretty(&doc)?)?;
    println!("wrote {} and {}", csv_file.display(), json_file.display());
    for r in &results {
        let g = &r.groups[0];
        if let Some(acc) = g.classifier_accuracy {
            println!("  {:24} accuracy {:.3} +- {:.3}", g.group, acc.mean, acc.std);
        }
    }
    Ok(())
}
