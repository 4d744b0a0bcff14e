//! `rsa` — command-line surface over the analysis pipeline.
//!
//! Every command is deterministic: same inputs and options produce
//! byte-identical outputs regardless of thread count. Exit code 1 marks
//! I/O failures, 2 validation failures; either case prints one JSON error
//! line on standard error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use rsa_core::ingest::{
    aggregate_fixations, build_activity_matrix, build_feature_vector, ActivityMatrix, LayerId,
    SkipPolicy,
};
use rsa_core::io;
use rsa_core::lingfeat::{avg_log_frequency, avg_senses, yngve_sentence_score};
use rsa_core::orders::{
    group_anova, heatmap_grid, per_condition_agreement, rsm, third_order, RowStat,
};
use rsa_core::rdm::{build_rdm, estimate_covariance, DissimilarityMeasure};
use rsa_core::synth::{generate, SynthSpec};
use rsa_core::{ConditionSet, Error};

#[derive(Parser)]
#[command(
    name = "rsa",
    version,
    about = "Representational similarity analysis pipeline"
)]
struct Cli {
    /// Worker thread cap (env RSA_THREADS as fallback; default: all cores).
    /// Output is identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write a provenance manifest (`<output>.manifest.json`) next to every
    /// output file.
    #[arg(long, global = true)]
    manifest: bool,

    /// JSON config file supplying option defaults; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a first-order RDM from activations or a pooled matrix.
    Rdm(RdmArgs),
    /// Whole-RDM similarity matrix over two or more RDM files.
    Rsm(RsmArgs),
    /// Per-condition agreement/disagreement between two RDMs.
    Disagree(DisagreeArgs),
    /// Correlate a disagreement vector against a feature vector.
    Third(ThirdArgs),
    /// Extract per-sentence difficulty features.
    #[command(subcommand)]
    Features(FeaturesCmd),
    /// Layer-group ANOVA over per-pair coefficient values.
    Anova(AnovaArgs),
    /// Generate a deterministic synthetic dataset with planted difficulty.
    Synth(SynthArgs),
    /// Assemble a layer-pair coefficient grid from a report file.
    Heatmap(HeatmapArgs),
}

#[derive(Args)]
struct RdmArgs {
    /// Token activations (JSONL, one record per sentence).
    #[arg(long, conflicts_with = "pooled")]
    activations: Option<PathBuf>,
    /// Pooled sentence×dimension matrix (CSV).
    #[arg(long)]
    pooled: Option<PathBuf>,
    /// Layer tag (`model:index`) for a pooled matrix, which carries none.
    #[arg(long, default_value = "pooled:1")]
    layer: String,
    /// Dissimilarity measure: correlation | euclidean | mahalanobis.
    #[arg(long, visible_alias = "metric")]
    measure: Option<String>,
    /// Covariance ridge for mahalanobis. Absent: 0 (no regularization);
    /// bare `--ridge`: 1e-3; `--ridge X`: X.
    #[arg(long, num_args = 0..=1, default_missing_value = "1e-3")]
    ridge: Option<f64>,
    /// Also write the pooled matrix (CSV) used to build the RDM.
    #[arg(long)]
    emit_pooled: Option<PathBuf>,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct RsmArgs {
    /// Two or more RDM CSV files.
    #[arg(long = "rdm", required = true, num_args = 1..)]
    rdms: Vec<PathBuf>,
    /// Labels for the RDMs (default: file stems).
    #[arg(long = "label")]
    labels: Vec<String>,
    /// Row statistic: kendall_a | spearman.
    #[arg(long)]
    stat: Option<String>,
    /// Measure tag the input RDMs were built with.
    #[arg(long)]
    measure: Option<String>,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct DisagreeArgs {
    #[arg(long)]
    rdm_a: PathBuf,
    #[arg(long)]
    rdm_b: PathBuf,
    /// Row statistic: kendall_a | spearman.
    #[arg(long)]
    stat: Option<String>,
    /// Measure tag the input RDMs were built with.
    #[arg(long)]
    measure: Option<String>,
    /// Keep the zero self-dissimilarity cell in each row.
    #[arg(long)]
    include_self: bool,
    /// Pair label for downstream reports (default: `<stemA>-<stemB>`).
    #[arg(long)]
    label: Option<String>,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct ThirdArgs {
    /// Disagreement CSV from `rsa disagree`.
    #[arg(long)]
    disagreement: PathBuf,
    /// Feature CSV (`id,value`).
    #[arg(long)]
    feature: PathBuf,
    /// Feature name for the report (default: feature file stem).
    #[arg(long)]
    feature_name: Option<String>,
    /// Pair label (default: disagreement file stem).
    #[arg(long)]
    label: Option<String>,
    /// Bonferroni test count.
    #[arg(long)]
    n_tests: Option<usize>,
    /// Append to an existing report instead of overwriting.
    #[arg(long)]
    append: bool,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Subcommand)]
enum FeaturesCmd {
    /// Mean Yngve depth per sentence from bracketed parse trees.
    Yngve {
        /// One bracketed tree per line; ids are 1-based line numbers.
        #[arg(long)]
        trees: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Mean log(count+1) word frequency per sentence.
    Logfreq {
        /// `id<TAB>words` (or plain lines with line-number ids).
        #[arg(long)]
        sentences: PathBuf,
        /// `word<TAB>count` frequency table.
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Mean sense count per sentence.
    Senses {
        #[arg(long)]
        sentences: PathBuf,
        /// `word<TAB>sense_count` table.
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Per-sentence fixation scalar from an eye-tracking CSV.
    Fixation {
        /// `id,word_index,word,participant,duration_ms,measure` rows.
        #[arg(long)]
        fixations: PathBuf,
        /// Unfixated-word handling: zero | exclude.
        #[arg(long)]
        skip_policy: Option<String>,
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct AnovaArgs {
    /// `layer_i,layer_j,value` CSV of per-pair coefficients.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    n_layers: usize,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Number of conditions.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Representation dimensionality.
    #[arg(long, default_value_t = 16)]
    h: usize,
    #[arg(long, default_value_t = 3)]
    layers: usize,
    #[arg(long, default_value_t = 1.0)]
    noise_gain: f64,
    /// Directory receiving `layer_<i>.csv` files and `difficulty.csv`.
    #[arg(long, short)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct HeatmapArgs {
    /// Report TSV holding one `i-j:<form>` row per layer pair.
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    n_layers: usize,
    /// Which sign convention to plot: agreement | disagreement.
    #[arg(long, default_value = "disagreement")]
    form: String,
    /// Layer numbering of the report labels: top-down | bottom-up.
    /// bottom-up relabels index i to n_layers+1−i.
    #[arg(long)]
    layer_order: Option<String>,
    #[arg(long, short)]
    output: PathBuf,
}

/// Optional defaults file; command-line flags win over these.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    measure: Option<String>,
    stat: Option<String>,
    n_tests: Option<usize>,
    skip_policy: Option<String>,
    layer_order: Option<String>,
    seed: Option<u64>,
    ridge: Option<f64>,
    threads: Option<usize>,
}

/// Tracks inputs and outputs so `--manifest` can record provenance.
struct Ctx {
    manifest: bool,
    argv: Vec<String>,
    inputs: BTreeMap<String, String>,
}

impl Ctx {
    fn input(&mut self, path: &Path) -> Result<(), Error> {
        if self.manifest {
            let bytes = std::fs::read(path)?;
            let digest = Sha256::digest(&bytes);
            self.inputs.insert(
                path.display().to_string(),
                format!("sha256:{}", hex_string(&digest)),
            );
        }
        Ok(())
    }

    fn output(&self, path: &Path) -> Result<(), Error> {
        if !self.manifest {
            return Ok(());
        }
        let manifest = serde_json::json!({
            "tool": "rsa",
            "version": env!("CARGO_PKG_VERSION"),
            "args": self.argv,
            "inputs": self.inputs,
            "output": path.display().to_string(),
        });
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        let manifest_path = path.with_file_name(name);
        std::fs::write(&manifest_path, format!("{manifest:#}\n"))?;
        Ok(())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = if err.is_io() { "io" } else { "validation" };
            let line = serde_json::json!({"error": err.to_string(), "kind": kind});
            eprintln!("{line}");
            ExitCode::from(if err.is_io() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<ConfigFile>(&text)
                .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };

    let threads = cli
        .threads
        .or(config.threads)
        .or_else(|| std::env::var("RSA_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(threads) = threads {
        if threads == 0 {
            return Err(Error::Invalid("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Invalid(e.to_string()))?;
    }

    let mut ctx = Ctx {
        manifest: cli.manifest,
        argv: std::env::args().skip(1).collect(),
        inputs: BTreeMap::new(),
    };

    match cli.command {
        Command::Rdm(args) => cmd_rdm(args, &config, &mut ctx),
        Command::Rsm(args) => cmd_rsm(args, &config, &mut ctx),
        Command::Disagree(args) => cmd_disagree(args, &config, &mut ctx),
        Command::Third(args) => cmd_third(args, &config, &mut ctx),
        Command::Features(cmd) => cmd_features(cmd, &config, &mut ctx),
        Command::Anova(args) => cmd_anova(args, &mut ctx),
        Command::Synth(args) => cmd_synth(args, &config, &mut ctx),
        Command::Heatmap(args) => cmd_heatmap(args, &config, &mut ctx),
    }
}

fn resolve_measure(flag: &Option<String>, config: &ConfigFile) -> Result<DissimilarityMeasure, Error> {
    flag.as_deref()
        .or(config.measure.as_deref())
        .unwrap_or("correlation")
        .parse()
}

fn resolve_stat(flag: &Option<String>, config: &ConfigFile) -> Result<RowStat, Error> {
    flag.as_deref()
        .or(config.stat.as_deref())
        .unwrap_or("kendall_a")
        .parse()
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_rdm(args: RdmArgs, config: &ConfigFile, ctx: &mut Ctx) -> Result<(), Error> {
    let measure = resolve_measure(&args.measure, config)?;
    let matrix: ActivityMatrix = match (&args.activations, &args.pooled) {
        (Some(path), None) => {
            ctx.input(path)?;
            let records = io::read_activations_jsonl(path)?;
            let ids: Vec<String> = records.iter().map(|r| r.condition.clone()).collect();
            let conditions = ConditionSet::new(ids)?;
            build_activity_matrix(&records, &conditions)?
        }
        (None, Some(path)) => {
            ctx.input(path)?;
            let layer: LayerId = args.layer.parse()?;
            io::read_pooled_csv(path, layer)?
        }
        _ => {
            return Err(Error::Invalid(
                "exactly one of --activations or --pooled is required".into(),
            ))
        }
    };
    let cov = match measure {
        DissimilarityMeasure::Mahalanobis => {
            let ridge = args.ridge.or(config.ridge).unwrap_or(0.0);
            Some(estimate_covariance(&matrix, ridge)?)
        }
        _ => None,
    };
    let rdm = build_rdm(&matrix, measure, cov.as_ref())?;
    if let Some(path) = &args.emit_pooled {
        io::write_pooled_csv(path, &matrix)?;
        ctx.output(path)?;
    }
    io::write_rdm_csv(&args.output, &rdm)?;
    ctx.output(&args.output)
}

fn cmd_rsm(args: RsmArgs, config: &ConfigFile, ctx: &mut Ctx) -> Result<(), Error> {
    let measure = resolve_measure(&args.measure, config)?;
    let stat = resolve_stat(&args.stat, config)?;
    if !args.labels.is_empty() && args.labels.len() != args.rdms.len() {
        return Err(Error::Invalid(format!(
            "{} labels for {} RDMs",
            args.labels.len(),
            args.rdms.len()
        )));
    }
    let mut rdms = Vec::with_capacity(args.rdms.len());
    for path in &args.rdms {
        ctx.input(path)?;
        rdms.push(io::read_rdm_csv(path, measure)?);
    }
    let labels: Vec<String> = if args.labels.is_empty() {
        args.rdms.iter().map(|p| stem(p)).collect()
    } else {
        args.labels.clone()
    };
    let refs: Vec<&_> = rdms.iter().collect();
    let result = rsm(&refs, &labels, stat)?;
    io::write_rsm_csv(&args.output, &result)?;
    ctx.output(&args.output)
}

fn cmd_disagree(args: DisagreeArgs, config: &ConfigFile, ctx: &mut Ctx) -> Result<(), Error> {
    let measure = resolve_measure(&args.measure, config)?;
    let stat = resolve_stat(&args.stat, config)?;
    ctx.input(&args.rdm_a)?;
    ctx.input(&args.rdm_b)?;
    let rdm_a = io::read_rdm_csv(&args.rdm_a, measure)?;
    let rdm_b = io::read_rdm_csv(&args.rdm_b, measure)?;
    let label = args
        .label
        .clone()
        .unwrap_or_else(|| format!("{}-{}", stem(&args.rdm_a), stem(&args.rdm_b)));
    let vector = per_condition_agreement(&rdm_a, &rdm_b, stat, args.include_self, label)?;
    io::write_disagreement_csv(&args.output, &vector)?;
    ctx.output(&args.output)
}

fn cmd_third(args: ThirdArgs, config: &ConfigFile, ctx: &mut Ctx) -> Result<(), Error> {
    let n_tests = args.n_tests.or(config.n_tests).unwrap_or(1);
    ctx.input(&args.disagreement)?;
    ctx.input(&args.feature)?;
    let label = args
        .label
        .clone()
        .unwrap_or_else(|| stem(&args.disagreement));
    let feature_name = args
        .feature_name
        .clone()
        .unwrap_or_else(|| stem(&args.feature));
    let disagreement = io::read_disagreement_csv(&args.disagreement, label)?;
    let feature = io::read_feature_csv(&args.feature, feature_name)?;
    let report = third_order(&disagreement, &feature, n_tests)?;

    // Both sign conventions, one row each; the p-values are shared because
    // Spearman is invariant up to sign under the map a -> 1 - a.
    let mut rows = if args.append && args.output.exists() {
        io::read_report_tsv(&args.output)?
    } else {
        Vec::new()
    };
    rows.push(io::ReportRow::from_report(
        format!("{}:agreement", report.pair_label),
        &report.agreement,
    ));
    let mut flipped = io::ReportRow::from_report(
        format!("{}:disagreement", report.pair_label),
        &report.agreement,
    );
    flipped.coefficient = report.disagreement_coefficient;
    rows.push(flipped);
    io::write_report_tsv(&args.output, &rows)?;
    ctx.output(&args.output)
}

fn cmd_features(cmd: FeaturesCmd, config: &ConfigFile, ctx: &mut Ctx) -> Result<(), Error> {
    match cmd {
        FeaturesCmd::Yngve { trees, output } => {
            ctx.input(&trees)?;
            let parsed = io::read_trees(&trees)?;
            let pairs: Vec<(String, f64)> = parsed
                .into_iter()
                .map(|(id, tree)| (id, yngve_sentence_score(&tree)))
                .collect();
            let feature = io::feature_from_pairs(pairs, "yngve")?;
            io::write_feature_csv(&output, &feature)?;
            ctx.output(&output)
        }
        FeaturesCmd::Logfreq {
            sentences,
            lexicon,
            output,
        } => {
            ctx.input(&sentences)?;
            ctx.input(&lexicon)?;
            let lex = io::read_lexicon_tsv(&lexicon, true, 0.0)?;
            let mut pairs = Vec::new();
            for (id, words) in io::read_sentences(&sentences)? {
                let refs: Vec<&str> = words.iter().map(String::as_str).collect();
                pairs.push((id, avg_log_frequency(&refs, &lex)?));
            }
            let feature = io::feature_from_pairs(pairs, "logfreq")?;
            io::write_feature_csv(&output, &feature)?;
            ctx.output(&output)
        }
        FeaturesCmd::Senses {
            sentences,
            lexicon,
            output,
        } => {
            ctx.input(&sentences)?;
            ctx.input(&lexicon)?;
            let lex = io::read_lexicon_tsv(&lexicon, true, 1.0)?;
            let mut pairs = Vec::new();
            for (id, words) in io::read_sentences(&sentences)? {
                let refs: Vec<&str> = words.iter().map(String::as_str).collect();
                pairs.push((id, avg_senses(&refs, &lex)?));
            }
            let feature = io::feature_from_pairs(pairs, "senses")?;
            io::write_feature_csv(&output, &feature)?;
            ctx.output(&output)
        }
        FeaturesCmd::Fixation {
            fixations,
            skip_policy,
            output,
        } => {
            let policy: SkipPolicy = skip_policy
                .as_deref()
                .or(config.skip_policy.as_deref())
                .unwrap_or("zero")
                .parse()?;
            ctx.input(&fixations)?;
            let tables = io::read_fixations_csv(&fixations)?;
            let ids: Vec<String> = tables.iter().map(|t| t.condition.clone()).collect();
            let conditions = ConditionSet::new(ids)?;
            let feature = build_feature_vector(&tables, &conditions, policy)?;
            // the per-table scalar path and the batch builder must agree
            debug_assert!(tables
                .iter()
                .zip(&feature.values)
                .all(|(t, &v)| aggregate_fixations(t, policy).map(|a| a == v).unwrap_or(false)));
            io::write_feature_csv(&output, &feature)?;
            ctx.output(&output)
        }
    }
}

fn cmd_anova(args: AnovaArgs, ctx: &mut Ctx) -> Result<(), Error> {
    ctx.input(&args.pairs)?;
    let rows = io::read_pair_values_csv(&args.pairs)?;
    let pairs: Vec<(usize, usize)> = rows.iter().map(|&(p, _)| p).collect();
    let values: Vec<f64> = rows.iter().map(|&(_, v)| v).collect();
    let result = group_anova(&values, &pairs, args.n_layers)?;
    io::write_anova_tsv(&args.output, &result)?;
    ctx.output(&args.output)
}

fn cmd_synth(args: SynthArgs, config: &ConfigFile, ctx: &mut Ctx) -> Result<(), Error> {
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let spec = SynthSpec::linear(seed, args.n, args.h, args.layers, args.noise_gain);
    let (layers, difficulty) = generate(&spec)?;
    std::fs::create_dir_all(&args.out_dir)?;
    for matrix in &layers {
        let path = args.out_dir.join(format!("layer_{}.csv", matrix.layer.index));
        io::write_pooled_csv(&path, matrix)?;
        ctx.output(&path)?;
    }
    let feature_path = args.out_dir.join("difficulty.csv");
    io::write_feature_csv(&feature_path, &difficulty)?;
    ctx.output(&feature_path)
}

fn cmd_heatmap(args: HeatmapArgs, config: &ConfigFile, ctx: &mut Ctx) -> Result<(), Error> {
    if args.form != "agreement" && args.form != "disagreement" {
        return Err(Error::Invalid(format!(
            "unknown form `{}` (expected agreement or disagreement)",
            args.form
        )));
    }
    let layer_order = args
        .layer_order
        .as_deref()
        .or(config.layer_order.as_deref())
        .unwrap_or("top-down");
    let flip = match layer_order {
        "top-down" => false,
        "bottom-up" => true,
        other => {
            return Err(Error::Invalid(format!(
                "unknown layer order `{other}` (expected top-down or bottom-up)"
            )))
        }
    };
    ctx.input(&args.report)?;
    let rows = io::read_report_tsv(&args.report)?;
    let suffix = format!(":{}", args.form);
    let mut pairs = Vec::new();
    for row in &rows {
        let Some(pair) = row.pair.strip_suffix(&suffix) else {
            continue;
        };
        let (i, j) = parse_pair_label(pair)?;
        let (i, j) = if flip {
            (args.n_layers + 1 - i, args.n_layers + 1 - j)
        } else {
            (i, j)
        };
        pairs.push(((i, j), row.coefficient));
    }
    let grid = heatmap_grid(&pairs, args.n_layers)?;
    io::write_heatmap_csv(&args.output, &grid)?;
    ctx.output(&args.output)
}

/// Pulls 1-based layer indices from a pair label: the trailing digit runs
/// on either side of the last `-`, so `layer_3-layer_11` gives (3, 11).
fn parse_pair_label(label: &str) -> Result<(usize, usize), Error> {
    let err = || Error::Invalid(format!("pair label `{label}` has no i-j layer indices"));
    let (left, right) = label.rsplit_once('-').ok_or_else(err)?;
    let trailing = |s: &str| -> Option<usize> {
        let digits: String = s
            .chars()
            .rev()
            .take_while(|c| c.is_ascii_digit())
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        digits.parse().ok()
    };
    match (trailing(left), trailing(right)) {
        (Some(i), Some(j)) => Ok((i, j)),
        _ => Err(err()),
    }
}
