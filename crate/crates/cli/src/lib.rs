//! Command implementations behind the `morphlex` binary.
//!
//! Every command writes its artifacts to files, prints a JSON summary on
//! stdout and logs progress on stderr. Summaries and reports carry the
//! effective configuration but no timestamps, so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use morphlex::bpe::{self, BpeModel};
use morphlex::curve::{recommend_range, GainMode, IpsCurve, DEFAULT_SENSITIVITY};
use morphlex::imdp::run_pipeline;
use morphlex::ingest::{load_wordlist, merge_candidates, parse_aff, parse_dic, AffixKind};
use morphlex::lexicon::{
    read_candidate_file, read_lexicon, write_candidate_file, write_lexicon, write_score_table,
    PipelineConfig,
};
use morphlex::metrics::{evaluate, MarkerRule};
use morphlex::Error;

#[derive(Debug, Parser)]
#[command(
    name = "morphlex",
    version,
    about = "Morpheme lexicon refinement and BPE evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a candidate list from Hunspell .dic/.aff files.
    Ingest(IngestArgs),
    /// Refine a candidate list into a morpheme lexicon.
    Refine(RefineArgs),
    /// Train a character-level BPE model.
    TrainBpe(TrainArgs),
    /// Score one model against a lexicon.
    Evaluate(EvaluateArgs),
    /// Evaluate a series of vocabulary sizes and write the IPS curve.
    Sweep(SweepArgs),
    /// Find the elbow, q90 and max-gain points of an IPS curve.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub dic: PathBuf,
    #[arg(long)]
    pub aff: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Candidate file, one per line, `-` marking affixes.
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub lang: String,
    /// Pipeline config JSON; defaults to the bundled preset for `--lang`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub support_m: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub otsu_bins: Option<usize>,
    #[arg(long)]
    pub min_length: Option<usize>,
    #[arg(long)]
    pub max_length: Option<usize>,
    /// Receives lexicon.txt, scores.csv and report.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Plain-text training corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub min_frequency: u64,
    /// Count words as written instead of lowercasing them.
    #[arg(long)]
    pub keep_case: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub vocab_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalInputs {
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Text whose words are tokenized for the over-split rate.
    #[arg(long)]
    pub words: PathBuf,
    /// Use at most this many unique evaluation words.
    #[arg(long, default_value_t = 1_000_000)]
    pub word_cap: usize,
    /// Marker stripped from the start of every vocabulary token.
    #[arg(long)]
    pub strip_prefix: Option<String>,
    /// Marker stripped from the end of every vocabulary token.
    #[arg(long)]
    pub strip_suffix: Option<String>,
    /// Keep evaluation words as written instead of lowercasing them.
    #[arg(long)]
    pub keep_case: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model or vocabulary JSON.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub eval: EvalInputs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Training corpus; ignored with `--import-dir`.
    #[arg(long, required_unless_present = "import_dir")]
    pub corpus: Option<PathBuf>,
    /// Directory of vocabulary JSONs to evaluate instead of training.
    #[arg(long, conflicts_with = "corpus")]
    pub import_dir: Option<PathBuf>,
    /// Comma-separated, strictly increasing vocabulary sizes.
    #[arg(long, value_delimiter = ',', required_unless_present = "import_dir")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub min_frequency: u64,
    #[command(flatten)]
    pub eval: EvalInputs,
    /// Output curve CSV (`k,lmc,osr,ips`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Curve CSV with `k,ips` or `k,lmc,osr` columns.
    #[arg(long, required_unless_present = "builtin", conflicts_with = "builtin")]
    pub curve: Option<PathBuf>,
    /// Bundled reference grid: hu, et or fi.
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SENSITIVITY)]
    pub sensitivity: f64,
    /// absolute or per-unit.
    #[arg(long, default_value = "absolute")]
    pub gain_mode: GainMode,
    /// Also write the analysis JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Process exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Empty(_) | Error::Degenerate(_)) => 3,
        Some(Error::Config(_)) => 4,
        _ => 2,
    }
}

pub fn run(cli: Cli) -> Result<String> {
    let summary = match cli.command {
        Command::Ingest(a) => to_json(&ingest(&a)?),
        Command::Refine(a) => to_json(&refine(&a)?),
        Command::TrainBpe(a) => to_json(&train_bpe(&a)?),
        Command::Evaluate(a) => to_json(&evaluate_model(&a)?),
        Command::Sweep(a) => to_json(&sweep(&a)?),
        Command::Analyze(a) => to_json(&analyze(&a)?),
    };
    Ok(summary)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("summary serializes") + "\n"
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct IngestSummary {
    pub dic: PathBuf,
    pub aff: Option<PathBuf>,
    pub stems: usize,
    pub prefix_rules: usize,
    pub suffix_rules: usize,
    pub candidates: usize,
}

pub fn ingest(a: &IngestArgs) -> Result<IngestSummary> {
    let stems = parse_dic(&a.dic)?;
    let rules = match &a.aff {
        Some(p) => parse_aff(p)?,
        None => Vec::new(),
    };
    let candidates = merge_candidates(&stems, &rules);
    write_candidate_file(&candidates, &a.out)?;
    let count = |k| rules.iter().filter(|r| r.kind == k).count();
    let summary = IngestSummary {
        dic: a.dic.clone(),
        aff: a.aff.clone(),
        stems: stems.len(),
        prefix_rules: count(AffixKind::Prefix),
        suffix_rules: count(AffixKind::Suffix),
        candidates: candidates.len(),
    };
    log::info!(
        "wrote {} candidates to {}",
        candidates.len(),
        a.out.display()
    );
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct RefineReport {
    pub language_tag: String,
    pub candidates: PathBuf,
    pub config: PipelineConfig,
    pub lexicon_size: usize,
    #[serde(flatten)]
    pub run: morphlex::imdp::RunReport,
}

fn effective_config(a: &RefineArgs) -> Result<PipelineConfig> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::preset(&a.lang).ok_or_else(|| {
            Error::Config(format!("no bundled preset for `{}`; pass --config", a.lang))
        })?,
    };
    macro_rules! apply {
        ($($f:ident),*) => { $(if let Some(v) = a.$f { cfg.$f = v; })* };
    }
    apply!(
        support_m,
        epsilon,
        max_iterations,
        otsu_bins,
        min_length,
        max_length
    );
    cfg.validate()?;
    Ok(cfg)
}

pub fn refine(a: &RefineArgs) -> Result<RefineReport> {
    let cfg = effective_config(a)?;
    let raw = read_candidate_file(&a.candidates)?;
    log::info!("loaded {} candidates", raw.len());
    let out = run_pipeline(&raw, &cfg, &a.lang)?;

    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    write_lexicon(&out.lexicon, &a.out_dir.join("lexicon.txt"))?;
    write_score_table(&out.refinement.state.scores, &a.out_dir.join("scores.csv"))?;
    let report = RefineReport {
        language_tag: a.lang.clone(),
        candidates: a.candidates.clone(),
        config: cfg,
        lexicon_size: out.lexicon.len(),
        run: out.report(),
    };
    write(&a.out_dir.join("report.json"), &to_json(&report))?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct TrainSummary {
    pub corpus: PathBuf,
    pub vocab_size: usize,
    pub min_frequency: u64,
    pub lowercase: bool,
    pub distinct_words: usize,
    pub tokens: usize,
    pub merges: usize,
}

fn count_corpus(c: &CorpusArgs) -> Result<bpe::WordCounts> {
    let counts = bpe::count_words_file(&c.corpus, !c.keep_case)?;
    if counts.is_empty() {
        return Err(Error::Empty(format!("{} has no words", c.corpus.display())).into());
    }
    log::info!("{} distinct words in {}", counts.len(), c.corpus.display());
    Ok(counts)
}

pub fn train_bpe(a: &TrainArgs) -> Result<TrainSummary> {
    let counts = count_corpus(&a.corpus)?;
    let model = bpe::train(&counts, a.vocab_size, a.corpus.min_frequency)?;
    model.save(&a.out)?;
    Ok(TrainSummary {
        corpus: a.corpus.corpus.clone(),
        vocab_size: a.vocab_size,
        min_frequency: a.corpus.min_frequency,
        lowercase: !a.corpus.keep_case,
        distinct_words: counts.len(),
        tokens: model.vocab_len(),
        merges: model.merges().map_or(0, |m| m.len()),
    })
}

struct EvalData {
    lexicon: morphlex::lexicon::MorphemeLexicon,
    words: Vec<String>,
    markers: MarkerRule,
}

fn load_eval(e: &EvalInputs) -> Result<EvalData> {
    let lexicon = read_lexicon(&e.lexicon, "")?;
    let mut words = load_wordlist(&e.words, None)?;
    if !e.keep_case {
        let mut seen = std::collections::HashSet::new();
        words = words
            .into_iter()
            .map(|w| w.to_lowercase())
            .filter(|w| seen.insert(w.clone()))
            .collect();
    }
    words.truncate(e.word_cap);
    log::info!(
        "{} morphemes, {} evaluation words",
        lexicon.len(),
        words.len()
    );
    Ok(EvalData {
        lexicon,
        words,
        markers: MarkerRule {
            strip_prefix: e.strip_prefix.clone(),
            strip_suffix: e.strip_suffix.clone(),
        },
    })
}

#[derive(Debug, Serialize)]
pub struct EvalSettings {
    pub lexicon: PathBuf,
    pub words: PathBuf,
    pub word_cap: usize,
    pub lowercase: bool,
    pub markers: MarkerRule,
}

impl EvalSettings {
    fn new(e: &EvalInputs) -> Self {
        EvalSettings {
            lexicon: e.lexicon.clone(),
            words: e.words.clone(),
            word_cap: e.word_cap,
            lowercase: !e.keep_case,
            markers: MarkerRule {
                strip_prefix: e.strip_prefix.clone(),
                strip_suffix: e.strip_suffix.clone(),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EvaluateSummary {
    pub model: PathBuf,
    pub settings: EvalSettings,
    pub result: morphlex::metrics::EvalReport,
}

pub fn evaluate_model(a: &EvaluateArgs) -> Result<EvaluateSummary> {
    let model = bpe::import_vocab(&a.model)?;
    let data = load_eval(&a.eval)?;
    let result = evaluate(
        model.vocab_len(),
        &data.lexicon,
        &model,
        &data.words,
        &data.markers,
    )?;
    Ok(EvaluateSummary {
        model: a.model.clone(),
        settings: EvalSettings::new(&a.eval),
        result,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub lmc: f64,
    pub osr: f64,
    pub ips: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub corpus: Option<PathBuf>,
    pub import_dir: Option<PathBuf>,
    pub min_frequency: Option<u64>,
    pub settings: EvalSettings,
    pub rows: Vec<SweepRow>,
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::Config("no vocabulary sizes given".into()).into());
    }
    if let Some(w) = sizes.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "vocabulary sizes must be strictly increasing ({} then {})",
            w[0], w[1]
        ))
        .into());
    }
    Ok(())
}

fn imported_models(dir: &Path) -> Result<Vec<(usize, BpeModel)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .with_context(|| format!("reading {}", dir.display()))?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    let mut models = paths
        .iter()
        .map(|p| Ok((0, bpe::import_vocab(p)?)))
        .collect::<Result<Vec<(usize, BpeModel)>>>()?;
    for m in &mut models {
        m.0 = m.1.vocab_size_target();
    }
    models.sort_by_key(|m| m.0);
    Ok(models)
}

pub fn sweep(a: &SweepArgs) -> Result<SweepSummary> {
    let models: Vec<(usize, BpeModel)> = match (&a.import_dir, &a.corpus) {
        (Some(dir), _) => {
            let models = imported_models(dir)?;
            if models.is_empty() {
                return Err(Error::Empty(format!("no .json models in {}", dir.display())).into());
            }
            let sizes: Vec<usize> = models.iter().map(|m| m.0).collect();
            check_sizes(&sizes)?;
            models
        }
        (None, Some(corpus)) => {
            check_sizes(&a.sizes)?;
            let counts = count_corpus(&CorpusArgs {
                corpus: corpus.clone(),
                min_frequency: a.min_frequency,
                keep_case: a.eval.keep_case,
            })?;
            let largest = *a.sizes.last().expect("checked non-empty");
            log::info!("training to {largest} tokens");
            let full = bpe::train(&counts, largest, a.min_frequency)?;
            a.sizes
                .iter()
                .map(|&k| Ok((k, full.truncated(k)?)))
                .collect::<Result<_>>()?
        }
        (None, None) => {
            return Err(Error::Config("either --corpus or --import-dir is required".into()).into())
        }
    };

    let data = load_eval(&a.eval)?;
    let mut rows = Vec::with_capacity(models.len());
    let mut csv = String::from("k,lmc,osr,ips\n");
    for (k, model) in &models {
        let r = evaluate(*k, &data.lexicon, model, &data.words, &data.markers)?;
        log::info!(
            "k = {k}: LMC {:.4}, OSR {:.4}, IPS {:.4}",
            r.lmc,
            r.osr,
            r.ips
        );
        csv.push_str(&format!("{},{},{},{}\n", r.k, r.lmc, r.osr, r.ips));
        rows.push(SweepRow {
            k: r.k,
            lmc: r.lmc,
            osr: r.osr,
            ips: r.ips,
        });
    }
    write(&a.out, &csv)?;
    Ok(SweepSummary {
        corpus: a.corpus.clone(),
        import_dir: a.import_dir.clone(),
        min_frequency: a.import_dir.is_none().then_some(a.min_frequency),
        settings: EvalSettings::new(&a.eval),
        rows,
    })
}

#[derive(Debug, Serialize)]
pub struct AnalyzeSummary {
    pub source: String,
    pub points: usize,
    #[serde(flatten)]
    pub analysis: morphlex::curve::CurveAnalysis,
}

pub fn analyze(a: &AnalyzeArgs) -> Result<AnalyzeSummary> {
    let (source, curve) = match (&a.curve, &a.builtin) {
        (Some(p), _) => (p.display().to_string(), IpsCurve::read_csv(p)?),
        (None, Some(lang)) => (format!("builtin:{lang}"), IpsCurve::builtin(lang)?),
        (None, None) => return Err(Error::Config("pass --curve or --builtin".into()).into()),
    };
    let analysis = recommend_range(&curve, a.sensitivity, a.gain_mode)?;
    let summary = AnalyzeSummary {
        source,
        points: curve.len(),
        analysis,
    };
    if let Some(out) = &a.out {
        write(out, &to_json(&summary))?;
    }
    Ok(summary)
}
