//! Audit orchestration: configuration, the assembled report, its renderings
//! and the exit-code policy used to gate CI pipelines on privacy.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::anonymity::{k_anonymity, AnonymityResult, QuasiIdentifierSet};
use crate::attacks::{aia_run, mia_run, AiaConfig, AiaReport, Grade, MiaConfig, MiaReport, QidMode};
use crate::dataset::{
    encode, fit_encoder, load_csv, split_holdout, CsvOptions, EncodedMatrix, SplitConfig, Table, CLAMP_HIGH, CLAMP_LOW,
};
use crate::error::{Error, Result};
use crate::filters::{outlier_filter, similarity_filter, RemovalReason, SimilarityThreshold, DP_WARNING};
use crate::metrics::{
    dcr_suite, ims_test, nnaa_privacy_loss, nndr_suite, DcrReport, ImsResult, NnaaResult, NndrReport, Thresholds,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME_ERROR: i32 = 1;
pub const EXIT_POLICY_FAILURE: i32 = 2;

const QID_CAVEAT: &str = "k-anonymity and l-diversity only cover the declared quasi-identifiers; \
     other columns linked with outside data can still single out records";

trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Ims,
    Dcr,
    Nndr,
    Nnaa,
    Mia,
    Aia,
    Kanon,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Ims,
        Metric::Dcr,
        Metric::Nndr,
        Metric::Nnaa,
        Metric::Mia,
        Metric::Aia,
        Metric::Kanon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ims => "ims",
            Metric::Dcr => "dcr",
            Metric::Nndr => "nndr",
            Metric::Nnaa => "nnaa",
            Metric::Mia => "mia",
            Metric::Aia => "aia",
            Metric::Kanon => "kanon",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Structured,
    Human,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "structured" | "json" => Ok(ReportFormat::Structured),
            "human" | "text" => Ok(ReportFormat::Human),
            _ => Err(Error::InvalidConfig(format!("unknown report format `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiaSettings {
    pub train_sample_fractions: Vec<f64>,
    pub threshold_quantiles: Vec<f64>,
    pub n_trials: usize,
}

impl Default for MiaSettings {
    fn default() -> Self {
        let d = MiaConfig::default();
        Self {
            train_sample_fractions: d.train_sample_fractions,
            threshold_quantiles: d.threshold_quantiles,
            n_trials: d.n_trials,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AiaSettings {
    /// Quasi-identifiers drawn per attack record when none are declared.
    /// Defaults to half the columns.
    pub random_qids: Option<usize>,
    pub k: usize,
    pub numeric_match_tolerance: f64,
    pub n_attack_records: Option<usize>,
}

impl Default for AiaSettings {
    fn default() -> Self {
        let d = AiaConfig::new(QidMode::RandomQids(1));
        Self {
            random_qids: None,
            k: d.k,
            numeric_match_tolerance: d.numeric_match_tolerance,
            n_attack_records: d.n_attack_records,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSettings {
    pub similarity: Option<SimilarityThreshold>,
    pub outlier_quantile: Option<f64>,
    pub outlier_k: usize,
}

impl Default for FilterSettings {
    fn default() -> Self {
        Self {
            similarity: Some(SimilarityThreshold::default()),
            outlier_quantile: None,
            outlier_k: 5,
        }
    }
}

/// Pass/fail policy evaluated by [`exit_code`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Policy {
    pub min_grade: Option<Grade>,
    /// Verdict names such as `dcr.share_closer_to_train`.
    pub required_verdicts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub train: Option<PathBuf>,
    pub synth: Option<PathBuf>,
    pub holdout: Option<PathBuf>,
    /// Share of the training file held out when no holdout file is given.
    pub holdout_fraction: f64,
    pub seed: u64,
    pub qid: Vec<String>,
    pub sensitive: Vec<String>,
    /// Enabled metrics; `None` means all of them, with k-anonymity only when
    /// quasi-identifiers are declared.
    pub metrics: Option<BTreeSet<Metric>>,
    pub mia: MiaSettings,
    pub aia: AiaSettings,
    pub thresholds: Thresholds,
    pub nnaa_repetitions: usize,
    pub filters: Option<FilterSettings>,
    pub report: Option<PathBuf>,
    pub format: ReportFormat,
    pub policy: Policy,
    pub csv: CsvOptions,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            train: None,
            synth: None,
            holdout: None,
            holdout_fraction: SplitConfig::default().holdout_fraction,
            seed: 0,
            qid: Vec::new(),
            sensitive: Vec::new(),
            metrics: None,
            mia: MiaSettings::default(),
            aia: AiaSettings::default(),
            thresholds: Thresholds::default(),
            nnaa_repetitions: 5,
            filters: None,
            report: None,
            format: ReportFormat::default(),
            policy: Policy::default(),
            csv: CsvOptions::default(),
        }
    }
}

impl AuditConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn enabled_metrics(&self) -> BTreeSet<Metric> {
        match &self.metrics {
            Some(set) => set.clone(),
            None => Metric::ALL
                .into_iter()
                .filter(|m| *m != Metric::Kanon || !self.qid.is_empty())
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.holdout.is_none() && !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "holdout_fraction {} outside (0,1)",
                self.holdout_fraction
            )));
        }
        let enabled = self.enabled_metrics();
        if enabled.is_empty() {
            return Err(Error::InvalidConfig("no metric enabled".into()));
        }
        if enabled.contains(&Metric::Kanon) && self.qid.is_empty() {
            return Err(Error::InvalidConfig(
                "k-anonymity needs quasi-identifiers (--qid)".into(),
            ));
        }
        if enabled.contains(&Metric::Nnaa) && self.nnaa_repetitions == 0 {
            return Err(Error::InvalidConfig("nnaa_repetitions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowCounts {
    pub train: usize,
    pub holdout: usize,
    pub synth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KanonReport {
    pub real: AnonymityResult,
    pub synth: AnonymityResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub reason: RemovalReason,
    pub threshold: f64,
    pub n_removed: usize,
    pub n_remaining: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub config: AuditConfig,
    pub enabled_metrics: Vec<Metric>,
    pub rows: RowCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ims: Option<ImsResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dcr: Option<DcrReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nndr: Option<NndrReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nnaa: Option<NnaaResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mia: Option<MiaReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aia: Option<AiaReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kanon: Option<KanonReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filters: Vec<FilterSummary>,
    pub warnings: Vec<String>,
}

impl PrivacyReport {
    /// Number of metric blocks present.
    pub fn n_metric_blocks(&self) -> usize {
        [
            self.ims.is_some(),
            self.dcr.is_some(),
            self.nndr.is_some(),
            self.nnaa.is_some(),
            self.mia.is_some(),
            self.aia.is_some(),
            self.kanon.is_some(),
        ]
        .into_iter()
        .filter(|b| *b)
        .count()
    }

    fn has(&self, metric: Metric) -> bool {
        match metric {
            Metric::Ims => self.ims.is_some(),
            Metric::Dcr => self.dcr.is_some(),
            Metric::Nndr => self.nndr.is_some(),
            Metric::Nnaa => self.nnaa.is_some(),
            Metric::Mia => self.mia.is_some(),
            Metric::Aia => self.aia.is_some(),
            Metric::Kanon => self.kanon.is_some(),
        }
    }

    /// Every boolean verdict in the report, named `<metric>.<verdict>`.
    pub fn verdicts(&self) -> Vec<(String, bool)> {
        let mut out = Vec::new();
        if let Some(ims) = &self.ims {
            out.push(("ims.pass".to_string(), ims.pass));
        }
        if let Some(dcr) = &self.dcr {
            let v = dcr.verdicts;
            out.push((
                "dcr.train_train_below_train_synth".into(),
                v.train_train_below_train_synth,
            ));
            out.push(("dcr.no_model_collapse".into(), v.no_model_collapse));
            out.push(("dcr.share_closer_to_train".into(), v.share_closer_to_train));
        }
        if let Some(nndr) = &self.nndr {
            let v = nndr.verdicts;
            out.push(("nndr.train_holdout_consistent".into(), v.train_holdout_consistent));
            out.push(("nndr.no_model_collapse".into(), v.no_model_collapse));
            out.push(("nndr.no_leak_suspected".into(), !v.leak_suspected));
            out.push(("nndr.no_fidelity_loss_suspected".into(), !v.fidelity_loss_suspected));
        }
        out
    }
}

struct Inputs {
    train: Table,
    holdout: Table,
    synth: Table,
}

fn load_inputs(cfg: &AuditConfig, warnings: &mut Vec<String>) -> Result<Inputs> {
    let synth_path = cfg
        .synth
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("synthetic table required".into()))?;
    let train_path = cfg
        .train
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("training table required".into()))?;
    let real = load_csv(train_path, None, &cfg.csv).stage("loading training table")?;
    let synth = load_csv(synth_path, Some(real.schema()), &cfg.csv).stage("loading synthetic table")?;
    let (train, holdout) = match &cfg.holdout {
        Some(path) => {
            let holdout = load_csv(path, Some(real.schema()), &cfg.csv).stage("loading holdout table")?;
            (real, holdout)
        }
        None => {
            let split = SplitConfig {
                holdout_fraction: cfg.holdout_fraction,
                seed: cfg.seed,
            };
            let (train, holdout) = split_holdout(&real, split).stage("splitting holdout")?;
            warnings.push(format!(
                "no holdout table given: {} of {} training rows were held out; holdout comparisons assume the generator never saw them",
                holdout.n_rows(),
                real.n_rows()
            ));
            (train, holdout)
        }
    };
    Ok(Inputs { train, holdout, synth })
}

fn encoding_warnings(name: &str, m: &EncodedMatrix, warnings: &mut Vec<String>) {
    if m.clamped_cells > 0 {
        warnings.push(format!(
            "{} {name} cells fell outside the training range and were clamped to [{CLAMP_LOW}, {CLAMP_HIGH}]",
            m.clamped_cells
        ));
    }
    if m.missing_numeric_cells > 0 {
        warnings.push(format!(
            "{} missing numeric {name} cells were placed at the middle of the training range",
            m.missing_numeric_cells
        ));
    }
}

/// Runs every enabled metric. The encoder is fitted once on the training
/// table and shared by all distance-based metrics.
pub fn run_audit(cfg: &AuditConfig) -> Result<PrivacyReport> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let Inputs { train, holdout, synth } = load_inputs(cfg, &mut warnings)?;
    let mut enabled = cfg.enabled_metrics();
    let n_cols = train.schema().len();
    if cfg.metrics.is_none() && cfg.qid.is_empty() && n_cols < 2 {
        enabled.remove(&Metric::Aia);
        warnings.push("attribute inference skipped: it needs at least two columns".into());
    }

    let mut report = PrivacyReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        enabled_metrics: enabled.iter().copied().collect(),
        rows: RowCounts {
            train: train.n_rows(),
            holdout: holdout.n_rows(),
            synth: synth.n_rows(),
        },
        ims: None,
        dcr: None,
        nndr: None,
        nnaa: None,
        mia: None,
        aia: None,
        kanon: None,
        filters: Vec::new(),
        warnings: Vec::new(),
    };

    let needs_encoding = enabled
        .iter()
        .any(|m| matches!(m, Metric::Dcr | Metric::Nndr | Metric::Nnaa));
    if needs_encoding {
        let stats = fit_encoder(&train).stage("fitting encoder")?;
        let train_enc = encode(&train, &stats).stage("encoding training table")?;
        let holdout_enc = encode(&holdout, &stats).stage("encoding holdout table")?;
        let synth_enc = encode(&synth, &stats).stage("encoding synthetic table")?;
        encoding_warnings("training", &train_enc, &mut warnings);
        encoding_warnings("holdout", &holdout_enc, &mut warnings);
        encoding_warnings("synthetic", &synth_enc, &mut warnings);
        if enabled.contains(&Metric::Dcr) {
            report.dcr = Some(dcr_suite(&train_enc, &holdout_enc, &synth_enc, &cfg.thresholds, cfg.seed).stage("dcr")?);
            if train.n_rows() != holdout.n_rows() {
                warnings.push(format!(
                    "train ({}) and holdout ({}) differ in size, so share_closer_to_train is not centred on 0.5 for an ideal generator",
                    train.n_rows(),
                    holdout.n_rows()
                ));
            }
        }
        if enabled.contains(&Metric::Nndr) {
            report.nndr = Some(nndr_suite(&train_enc, &holdout_enc, &synth_enc, &cfg.thresholds).stage("nndr")?);
        }
        if enabled.contains(&Metric::Nnaa) {
            report.nnaa = Some(
                nnaa_privacy_loss(&train_enc, &holdout_enc, &synth_enc, cfg.nnaa_repetitions, cfg.seed)
                    .stage("nnaa")?,
            );
        }
    }
    if enabled.contains(&Metric::Ims) {
        report.ims = Some(ims_test(&train, &holdout, &synth).stage("ims")?);
    }
    if enabled.contains(&Metric::Mia) {
        let mia_cfg = MiaConfig {
            holdout_fraction: cfg.holdout_fraction,
            train_sample_fractions: cfg.mia.train_sample_fractions.clone(),
            threshold_quantiles: cfg.mia.threshold_quantiles.clone(),
            n_trials: cfg.mia.n_trials,
            seed: cfg.seed,
        };
        report.mia = Some(mia_run(&train, &holdout, &synth, &mia_cfg).stage("mia")?);
    }
    if enabled.contains(&Metric::Aia) {
        let mode = if cfg.qid.is_empty() {
            QidMode::RandomQids(cfg.aia.random_qids.unwrap_or((n_cols / 2).max(1)))
        } else {
            QidMode::FixedQids(cfg.qid.clone())
        };
        let aia_cfg = AiaConfig {
            mode,
            k: cfg.aia.k,
            numeric_match_tolerance: cfg.aia.numeric_match_tolerance,
            n_attack_records: cfg.aia.n_attack_records,
            seed: cfg.seed,
        };
        report.aia = Some(aia_run(&train, &synth, &aia_cfg).stage("aia")?);
    }
    if enabled.contains(&Metric::Kanon) {
        let qids = QuasiIdentifierSet::new(cfg.qid.clone(), cfg.sensitive.clone());
        report.kanon = Some(KanonReport {
            real: k_anonymity(&train, &qids).stage("k-anonymity of the training table")?,
            synth: k_anonymity(&synth, &qids).stage("k-anonymity of the synthetic table")?,
        });
        warnings.push(QID_CAVEAT.into());
    }
    if let Some(filters) = &cfg.filters {
        if let Some(threshold) = filters.similarity {
            let r = similarity_filter(&synth, &train, threshold).stage("similarity filter")?;
            report.filters.push(FilterSummary {
                reason: r.removal_reason,
                threshold: r.threshold_used,
                n_removed: r.removed_indices.len(),
                n_remaining: r.filtered.n_rows(),
            });
        }
        if let Some(q) = filters.outlier_quantile {
            let r = outlier_filter(&synth, &train, filters.outlier_k, q).stage("outlier filter")?;
            report.filters.push(FilterSummary {
                reason: r.removal_reason,
                threshold: r.threshold_used,
                n_removed: r.removed_indices.len(),
                n_remaining: r.filtered.n_rows(),
            });
        }
        if !report.filters.is_empty() {
            warnings.push(DP_WARNING.into());
        }
    }
    report.warnings = warnings;
    Ok(report)
}

pub fn parse_report(bytes: &[u8]) -> Result<PrivacyReport> {
    Ok(serde_json::from_slice(bytes)?)
}

pub fn render_report(report: &PrivacyReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Structured => {
            let mut out = serde_json::to_vec_pretty(report).expect("report fields serialize");
            out.push(b'\n');
            out
        }
        ReportFormat::Human => render_human(report).into_bytes(),
    }
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn render_human(r: &PrivacyReport) -> String {
    let mut s = String::new();
    let verdicts = r.verdicts();
    let verdict_lines = |s: &mut String, prefix: &str| {
        for (name, ok) in verdicts.iter().filter(|(n, _)| n.starts_with(prefix)) {
            let _ = writeln!(s, "{name}: {}", pass_fail(*ok));
        }
    };
    let _ = writeln!(
        s,
        "synthpriv {} privacy report (schema {})",
        r.tool_version, r.schema_version
    );
    let _ = writeln!(s, "seed: {}", r.seed);
    let _ = writeln!(
        s,
        "rows: train {}, holdout {}, synthetic {}",
        r.rows.train, r.rows.holdout, r.rows.synth
    );

    if let Some(ims) = &r.ims {
        let _ = writeln!(s, "\n[identical match share]");
        let _ = writeln!(s, "  {:<24}{:>10.4}", "train-synth share", ims.train_synth_share);
        let _ = writeln!(s, "  {:<24}{:>10.4}", "train-test share", ims.train_test_share);
        verdict_lines(&mut s, "ims.");
    }
    if let Some(dcr) = &r.dcr {
        let _ = writeln!(s, "\n[distance to closest record]");
        let _ = writeln!(
            s,
            "  {:<16}{:>10}{:>10}{:>10}{:>10}{:>8}",
            "", "median", "p5", "mean", "min", "n"
        );
        for (label, d) in [
            ("train-synth", &dcr.train_synth),
            ("holdout-synth", &dcr.holdout_synth),
            ("train-train", &dcr.train_train),
            ("within-real", &dcr.within_real),
            ("within-synth", &dcr.within_synth),
        ] {
            let _ = writeln!(
                s,
                "  {label:<16}{:>10.4}{:>10.4}{:>10.4}{:>10.4}{:>8}",
                d.median, d.p5, d.mean, d.min, d.n
            );
        }
        let _ = writeln!(
            s,
            "  {:<24}{:>10.4}",
            "share closer to train", dcr.share_closer_to_train
        );
        verdict_lines(&mut s, "dcr.");
    }
    if let Some(nndr) = &r.nndr {
        let _ = writeln!(s, "\n[nearest-neighbor distance ratio]");
        let _ = writeln!(
            s,
            "  {:<16}{:>10}{:>10}{:>10}{:>10}{:>8}",
            "", "median", "p5", "mean", "min", "n"
        );
        for (label, d) in [
            ("train-synth", &nndr.train_synth),
            ("holdout-synth", &nndr.holdout_synth),
            ("train-train", &nndr.train_train),
            ("synth-synth", &nndr.synth_synth),
        ] {
            let _ = writeln!(
                s,
                "  {label:<16}{:>10.4}{:>10.4}{:>10.4}{:>10.4}{:>8}",
                d.median, d.p5, d.mean, d.min, d.n
            );
        }
        verdict_lines(&mut s, "nndr.");
    }
    if let Some(n) = &r.nnaa {
        let _ = writeln!(s, "\n[nearest-neighbor adversarial accuracy]");
        let _ = writeln!(s, "  {:<24}{:>10.4}", "train AA", n.train_aa);
        let _ = writeln!(s, "  {:<24}{:>10.4}", "test AA", n.test_aa);
        let _ = writeln!(s, "  {:<24}{:>10.4}", "privacy loss", n.privacy_loss);
        let _ = writeln!(s, "  {:<24}{:>10}", "repetitions", n.n_repetitions);
        let _ = writeln!(s, "  {:<24}{:>10}", "sample size", n.sample_size);
    }
    if let Some(m) = &r.mia {
        let _ = writeln!(s, "\n[membership inference]");
        let _ = writeln!(s, "  {:<24}{:>10}", "trials", m.trials.len());
        let _ = writeln!(s, "  {:<24}{:>10.4}", "avg precision", m.avg_precision);
        let _ = writeln!(s, "  {:<24}{:>10.4}", "avg accuracy", m.avg_accuracy);
        let _ = writeln!(s, "  {:<24}{:>10.4}", "composite", m.composite_score);
        let _ = writeln!(s, "MIA grade: {}", m.grade);
        if let Some(min) = r.config.policy.min_grade {
            let _ = writeln!(
                s,
                "mia.grade_at_least_{}: {}",
                min.label().replace(' ', "_").to_ascii_lowercase(),
                pass_fail(m.grade.meets(min))
            );
        }
    }
    if let Some(a) = &r.aia {
        let _ = writeln!(s, "\n[attribute inference]");
        let _ = writeln!(
            s,
            "  {:<24}{:>10}{:>10}{:>10}{:>8}",
            "column", "accuracy", "entropy", "weight", "n"
        );
        for c in &a.per_column {
            let _ = writeln!(
                s,
                "  {:<24}{:>10.4}{:>10.4}{:>10.4}{:>8}",
                c.column, c.accuracy, c.entropy, c.entropy_weight, c.n_evaluated
            );
        }
        let _ = writeln!(s, "  {:<24}{:>10.4}", "overall", a.overall_unweighted);
        let _ = writeln!(s, "  {:<24}{:>10.4}", "entropy weighted", a.overall_entropy_weighted);
    }
    if let Some(k) = &r.kanon {
        let _ = writeln!(s, "\n[k-anonymity]");
        let _ = writeln!(s, "  {:<24}{:>10}{:>10}", "", "real", "synthetic");
        let _ = writeln!(s, "  {:<24}{:>10}{:>10}", "k", k.real.k, k.synth.k);
        let _ = writeln!(
            s,
            "  {:<24}{:>10}{:>10}",
            "classes", k.real.n_classes, k.synth.n_classes
        );
        for (col, l) in &k.real.l {
            let synth_l = k.synth.l.get(col).copied().unwrap_or(0);
            let _ = writeln!(s, "  {:<24}{:>10}{:>10}", format!("l ({col})"), l, synth_l);
        }
    }
    if !r.filters.is_empty() {
        let _ = writeln!(s, "\n[filters]");
        for f in &r.filters {
            let _ = writeln!(
                s,
                "  {:<16} threshold {:.6}, removed {}, kept {}",
                format!("{:?}", f.reason),
                f.threshold,
                f.n_removed,
                f.n_remaining
            );
        }
    }
    if !r.warnings.is_empty() {
        let _ = writeln!(s);
        for w in &r.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
    }
    s
}

/// 0 when the report satisfies the policy, 2 when it does not. A policy
/// that refers to a metric missing from the report is an error.
pub fn exit_code(report: &PrivacyReport, policy: &Policy) -> Result<i32> {
    let mut ok = true;
    if let Some(min) = policy.min_grade {
        let mia = report
            .mia
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("policy sets a minimum MIA grade but mia is disabled".into()))?;
        ok &= mia.grade.meets(min);
    }
    let verdicts = report.verdicts();
    for name in &policy.required_verdicts {
        let metric: Metric = name.split('.').next().unwrap_or_default().parse()?;
        if !report.has(metric) {
            return Err(Error::InvalidConfig(format!(
                "policy requires `{name}` but {metric} is disabled"
            )));
        }
        let (_, pass) = verdicts
            .iter()
            .find(|(v, _)| v == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown verdict `{name}`")))?;
        ok &= *pass;
    }
    Ok(if ok { EXIT_OK } else { EXIT_POLICY_FAILURE })
}
