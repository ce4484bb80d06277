use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use synthpriv::attacks::Grade;
use synthpriv::baselines::{gen_copy, gen_independent, gen_perturb, sample_population, PopulationSpec};
use synthpriv::dataset::{load_csv, write_csv, CsvOptions};
use synthpriv::filters::{outlier_filter, similarity_filter, SimilarityThreshold, DP_WARNING};
use synthpriv::report::{exit_code, render_report, run_audit, AuditConfig, Metric, ReportFormat, EXIT_RUNTIME_ERROR};

#[derive(Parser)]
#[command(
    name = "synthpriv",
    version,
    about = "Empirical privacy audits for tabular synthetic data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every enabled metric and write a privacy report.
    Audit(AuditArgs),
    /// Distance-threshold membership inference only.
    Mia(AuditArgs),
    /// KNN attribute inference only.
    Aia(AuditArgs),
    /// Distance to closest record only.
    Dcr(AuditArgs),
    /// Nearest-neighbor distance ratio only.
    Nndr(AuditArgs),
    /// Nearest-neighbor adversarial accuracy only.
    Nnaa(AuditArgs),
    /// Identical match share only.
    Ims(AuditArgs),
    /// k-anonymity and l-diversity of the real and synthetic tables.
    Kanon(AuditArgs),
    /// Drop synthetic rows that are too close to training rows or outliers.
    Filter(FilterArgs),
    /// Write a baseline table: population draws, copy, perturbation or
    /// column-wise bootstrap.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct AuditArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    synth: Option<PathBuf>,
    #[arg(long)]
    holdout: Option<PathBuf>,
    #[arg(long)]
    holdout_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Quasi-identifier columns, comma separated.
    #[arg(long, value_delimiter = ',')]
    qid: Option<Vec<String>>,
    /// Sensitive columns for l-diversity, comma separated.
    #[arg(long, value_delimiter = ',')]
    sensitive: Option<Vec<String>>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    format: Option<ReportFormat>,
    /// Exit with status 2 when the MIA grade is worse than this.
    #[arg(long)]
    min_grade: Option<Grade>,
    /// Verdicts that must pass, comma separated (e.g. dcr.share_closer_to_train).
    #[arg(long, value_delimiter = ',')]
    require: Option<Vec<String>>,
    /// Worker threads for neighbor searches.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    synth: PathBuf,
    /// Destination of the filtered synthetic table.
    #[arg(long)]
    output: PathBuf,
    /// Absolute similarity threshold in the encoded space.
    #[arg(long, conflicts_with = "similarity_quantile")]
    similarity: Option<f64>,
    /// Similarity threshold as a quantile of train-train distances.
    #[arg(long)]
    similarity_quantile: Option<f64>,
    /// Remove rows whose k-th neighbor distance exceeds this quantile of the training rows' own.
    #[arg(long)]
    outlier_quantile: Option<f64>,
    #[arg(long, default_value_t = 5)]
    outlier_k: usize,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Population,
    Copy,
    Perturb,
    Independent,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Baseline,
    /// Population spec (TOML) for `population`.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Source table for `copy`, `perturb` and `independent`.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Noise scale for `perturb`, in column standard deviations.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Overrides the seed in the population file.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the row count in the population file.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    output: PathBuf,
}

fn set_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn audit_config(args: AuditArgs, only: Option<Metric>) -> anyhow::Result<AuditConfig> {
    let mut cfg = match &args.config {
        Some(path) => AuditConfig::from_toml_file(path)?,
        None => AuditConfig::default(),
    };
    macro_rules! flag {
        ($field:ident) => {
            if let Some(v) = args.$field {
                cfg.$field = v.into();
            }
        };
    }
    flag!(train);
    flag!(synth);
    flag!(holdout);
    flag!(holdout_fraction);
    flag!(seed);
    flag!(qid);
    flag!(sensitive);
    flag!(report);
    flag!(format);
    if let Some(g) = args.min_grade {
        cfg.policy.min_grade = Some(g);
    }
    if let Some(v) = args.require {
        cfg.policy.required_verdicts = v;
    }
    if let Some(m) = only {
        cfg.metrics = Some(BTreeSet::from([m]));
    }
    Ok(cfg)
}

fn audit(args: AuditArgs, only: Option<Metric>) -> anyhow::Result<i32> {
    set_threads(args.threads)?;
    let cfg = audit_config(args, only)?;
    let report = run_audit(&cfg)?;
    let bytes = render_report(&report, cfg.format);
    match &cfg.report {
        Some(path) => fs::write(path, &bytes).with_context(|| format!("writing report to {}", path.display()))?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(exit_code(&report, &cfg.policy)?)
}

fn filter(args: FilterArgs) -> anyhow::Result<i32> {
    set_threads(args.threads)?;
    let opts = CsvOptions::default();
    let train = load_csv(&args.train, None, &opts).context("loading training table")?;
    let mut synth = load_csv(&args.synth, Some(train.schema()), &opts).context("loading synthetic table")?;
    let similarity = match (args.similarity, args.similarity_quantile) {
        (Some(t), _) => Some(SimilarityThreshold::Absolute(t)),
        (None, Some(q)) => Some(SimilarityThreshold::Quantile(q)),
        (None, None) if args.outlier_quantile.is_none() => Some(SimilarityThreshold::default()),
        (None, None) => None,
    };
    if let Some(threshold) = similarity {
        let r = similarity_filter(&synth, &train, threshold)?;
        eprintln!(
            "similarity filter: threshold {}, removed {} of {} rows",
            r.threshold_used,
            r.removed_indices.len(),
            synth.n_rows()
        );
        synth = r.filtered;
    }
    if let Some(q) = args.outlier_quantile {
        let r = outlier_filter(&synth, &train, args.outlier_k, q)?;
        eprintln!(
            "outlier filter: threshold {}, removed {} of {} rows",
            r.threshold_used,
            r.removed_indices.len(),
            synth.n_rows()
        );
        synth = r.filtered;
    }
    eprintln!("warning: {DP_WARNING}");
    write_csv(&synth, &args.output, &opts)?;
    Ok(0)
}

fn generate(args: GenerateArgs) -> anyhow::Result<i32> {
    let opts = CsvOptions::default();
    let source = || -> anyhow::Result<_> {
        let Some(path) = &args.train else {
            bail!("--train is required for this baseline");
        };
        Ok(load_csv(path, None, &opts)?)
    };
    let seed = args.seed.unwrap_or(0);
    let table = match args.kind {
        Baseline::Population => {
            let Some(path) = &args.spec else {
                bail!("--spec is required for population draws");
            };
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut spec: PopulationSpec = toml::from_str(&text).context("parsing population spec")?;
            if let Some(s) = args.seed {
                spec.seed = s;
            }
            if let Some(n) = args.rows {
                spec.n_rows = n;
            }
            sample_population(&spec)?
        }
        Baseline::Copy => gen_copy(&source()?),
        Baseline::Perturb => gen_perturb(&source()?, args.sigma, seed)?,
        Baseline::Independent => gen_independent(&source()?, seed)?,
    };
    write_csv(&table, &args.output, &opts)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_RUNTIME_ERROR as u8 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Audit(a) => audit(a, None),
        Command::Mia(a) => audit(a, Some(Metric::Mia)),
        Command::Aia(a) => audit(a, Some(Metric::Aia)),
        Command::Dcr(a) => audit(a, Some(Metric::Dcr)),
        Command::Nndr(a) => audit(a, Some(Metric::Nndr)),
        Command::Nnaa(a) => audit(a, Some(Metric::Nnaa)),
        Command::Ims(a) => audit(a, Some(Metric::Ims)),
        Command::Kanon(a) => audit(a, Some(Metric::Kanon)),
        Command::Filter(a) => filter(a),
        Command::Generate(a) => generate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME_ERROR as u8)
        }
    }
}
