//! Command-line entry point: inference episodes, scoring, dataset builds,
//! packing, toy policy training, and report emission.
//!
//! Exit codes: 0 on success, 1 on a domain error (printed with the module
//! error name), 2 on a usage error. Configuration precedence is flags over
//! the TOML config file over built-in defaults; endpoints may come from
//! flags or the environment, tokens only ever from the environment.

use crate::dataset::{
    self, AnnotationCache, AnnotatorClient, AnnotatorError, ApproxTokenizer, CachedAnnotator,
    DatasetError, DatasetSample, HttpAnnotator, MockAnnotator, MockDegrader,
};
use crate::engine::{
    run_episode, simulated_backend, EngineConfig, EngineError, EpisodeTrace, GenerationBackend,
    HttpGenerationBackend, ImageRef, Prompt, SimSpec, VisualContext,
};
use crate::grpo::{
    train_toy, GrpoConfig, GrpoError, OptimizerSettings, ToyFlowEnv, TrainingReport,
};
use crate::plan::{Checklist, PlanError};
use crate::report::{render_reports, ReportError};
use crate::reward::{
    http::HttpScorerSuite, mock_suite, total_reward, visual_reward, RewardError, RewardEvaluator,
    RewardWeights, ScorerError, ScorerSuite,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("PlanError: {0}")]
    Plan(#[from] PlanError),
    #[error("EngineError: {0}")]
    Engine(#[from] EngineError),
    #[error("RewardError: {0}")]
    Reward(#[from] RewardError),
    #[error("ScorerError: {0}")]
    Scorer(#[from] ScorerError),
    #[error("GrpoError: {0}")]
    Grpo(#[from] GrpoError),
    #[error("DatasetError: {0}")]
    Dataset(#[from] DatasetError),
    #[error("AnnotatorError: {0}")]
    Annotator(#[from] AnnotatorError),
    #[error("ReportError: {0}")]
    Report(#[from] ReportError),
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Parser, Debug)]
#[command(
    name = "vacot",
    version,
    about = "Visual-aware chain-of-thought engine: iterative refinement inference, consistency rewards, dataset construction, and toy flow-GRPO training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one plan/evaluate/refine episode and write its trace
    Infer(InferArgs),
    /// Score an image against a checklist and prompt
    Score(ScoreArgs),
    /// Dataset construction and packing
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Train the toy flow policy with group-relative optimization
    TrainGrpoToy(TrainArgs),
    /// Render tables and plots from traces and training reports
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum BackendKind {
    Sim,
    Http,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum SuiteKind {
    Mock,
    Http,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum AnnotatorKind {
    Mock,
    Http,
}

#[derive(Args, Debug)]
struct InferArgs {
    /// Text prompt
    #[arg(long)]
    prompt: String,
    /// Context images: file paths or comma-separated vector literals
    #[arg(long, num_args = 0.., value_name = "IMAGE")]
    context: Vec<String>,
    /// Maximum refinement iterations
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    #[arg(long, value_enum, default_value_t = BackendKind::Sim)]
    backend: BackendKind,
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the episode trace document
    #[arg(long = "trace-out")]
    trace_out: PathBuf,
    /// Attach reward breakdowns to every step
    #[arg(long = "record-rewards", default_value_t = false)]
    record_rewards: bool,
    /// Scorer suite used when recording rewards
    #[arg(long, value_enum, default_value_t = SuiteKind::Mock)]
    suite: SuiteKind,
    /// Reward weights file (JSON)
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Backend endpoint (http backend; otherwise VACOT_BACKEND_URL)
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Checklist document
    #[arg(long)]
    plan: PathBuf,
    /// Context images: file paths or comma-separated vector literals
    #[arg(long, num_args = 0.., value_name = "IMAGE")]
    context: Vec<String>,
    /// The generated image to score
    #[arg(long)]
    image: String,
    #[arg(long, value_enum, default_value_t = SuiteKind::Mock)]
    suite: SuiteKind,
    /// Reward weights file (JSON)
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Prompt for the text reward; omit to score the visual side only
    #[arg(long)]
    prompt: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the breakdown here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum DatasetCommand {
    /// Annotate raw triples into planning samples
    BuildPlanning(BuildPlanningArgs),
    /// Extend planning samples with negatives and evaluation feedback
    BuildCorrection(BuildCorrectionArgs),
    /// Render samples to sequences and pack them under a token budget
    Pack(PackArgs),
}

#[derive(Args, Debug)]
struct BuildPlanningArgs {
    /// Raw triples (JSONL)
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Record/replay cache directory
    #[arg(long)]
    cache: PathBuf,
    #[arg(long, value_enum, default_value_t = AnnotatorKind::Mock)]
    annotator: AnnotatorKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct BuildCorrectionArgs {
    /// Planning corpus (JSONL)
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Record/replay cache directory
    #[arg(long)]
    cache: PathBuf,
    #[arg(long, value_enum, default_value_t = AnnotatorKind::Mock)]
    annotator: AnnotatorKind,
    /// Probability of emitting an additional perfect sample per input
    #[arg(long = "perfect-fraction")]
    perfect_fraction: Option<f64>,
    /// Vector-image degradation noise scale
    #[arg(long = "degrade-strength", default_value_t = 0.5)]
    degrade_strength: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum PackInputKind {
    /// JSONL of dataset samples, rendered to sequences first
    Corpus,
    /// JSONL of pre-rendered training sequences
    Sequences,
}

#[derive(Args, Debug)]
struct PackArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Token cost charged per image segment
    #[arg(long = "image-tokens")]
    image_tokens: Option<usize>,
    #[arg(long = "input-kind", value_enum, default_value_t = PackInputKind::Corpus)]
    input_kind: PackInputKind,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Episode trace documents
    #[arg(long, num_args = 0.., value_name = "FILE")]
    traces: Vec<PathBuf>,
    /// Training report (delimited text)
    #[arg(long)]
    training: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// The TOML config file. Every section and field is optional; flags override.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AppConfig {
    engine: EngineSection,
    sim: SimSection,
    reward: Option<RewardWeights>,
    grpo: GrpoSection,
    train: TrainSection,
    env: EnvSection,
    dataset: DatasetSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EngineSection {
    max_iterations: usize,
    seed: u64,
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection {
            max_iterations: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimSection {
    dimension: Option<usize>,
    refinement_rate: f64,
    satisfaction_threshold: f64,
    noise_scale: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dimension: None,
            refinement_rate: 0.5,
            satisfaction_threshold: 0.9,
            noise_scale: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GrpoSection {
    group_size: usize,
    num_steps: usize,
    clip_epsilon: f64,
    kl_beta: f64,
    std_floor: f64,
}

impl Default for GrpoSection {
    fn default() -> Self {
        let base = GrpoConfig::default();
        GrpoSection {
            group_size: base.group_size,
            num_steps: 4,
            clip_epsilon: base.clip_epsilon,
            kl_beta: base.kl_beta,
            std_floor: base.std_floor,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainSection {
    learning_rate: f64,
    iterations: usize,
    groups_per_iteration: usize,
    eval_groups: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let base = OptimizerSettings::default();
        TrainSection {
            learning_rate: base.learning_rate,
            iterations: base.iterations,
            groups_per_iteration: base.groups_per_iteration,
            eval_groups: base.eval_groups,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EnvSection {
    state_dim: usize,
    prompt_dim: usize,
    context_dim: usize,
    condition_scale: f64,
    init_scale: f64,
    sigma: f64,
}

impl Default for EnvSection {
    fn default() -> Self {
        let base = ToyFlowEnv::default();
        EnvSection {
            state_dim: base.state_dim,
            prompt_dim: base.prompt_dim,
            context_dim: base.context_dim,
            condition_scale: base.condition_scale,
            init_scale: base.init_scale,
            sigma: base.sigma,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DatasetSection {
    budget: usize,
    image_tokens: usize,
    perfect_fraction: f64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            budget: dataset::DEFAULT_PACK_BUDGET,
            image_tokens: 1024,
            perfect_fraction: 0.3,
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<AppConfig, CliError> {
    match path {
        None => Ok(AppConfig::default()),
        Some(path) => {
            let raw = std::fs::read_to_string(path)?;
            toml::from_str(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }
}

/// A context/image argument: a comma-separated float list is a vector image,
/// anything else a file path.
fn parse_image_spec(spec: &str) -> ImageRef {
    let parts: Vec<&str> = spec.split(',').collect();
    let floats: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse::<f64>().ok()).collect();
    match floats {
        Some(values) if !values.is_empty() => ImageRef::Vector(values),
        _ => ImageRef::Path(PathBuf::from(spec)),
    }
}

fn parse_context(specs: &[String]) -> VisualContext {
    VisualContext::new(specs.iter().map(|s| parse_image_spec(s)).collect())
}

fn load_weights(path: Option<&Path>, config: &AppConfig) -> Result<RewardWeights, CliError> {
    if let Some(path) = path {
        let raw = std::fs::read_to_string(path)?;
        return serde_json::from_str(&raw)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())));
    }
    Ok(config.reward.clone().unwrap_or_default())
}

/// Either concrete annotator, so cache wrapping works uniformly.
enum AnyAnnotator {
    Mock(MockAnnotator),
    Http(HttpAnnotator),
}

impl AnnotatorClient for AnyAnnotator {
    fn annotate_plan(
        &self,
        prompt: &Prompt,
        context: &VisualContext,
    ) -> Result<Checklist, AnnotatorError> {
        match self {
            AnyAnnotator::Mock(a) => a.annotate_plan(prompt, context),
            AnyAnnotator::Http(a) => a.annotate_plan(prompt, context),
        }
    }

    fn annotate_eval(
        &self,
        prompt: &Prompt,
        context: &VisualContext,
        plan: &Checklist,
        negative: &ImageRef,
        final_gt: &ImageRef,
    ) -> Result<crate::plan::EvalFeedback, AnnotatorError> {
        match self {
            AnyAnnotator::Mock(a) => a.annotate_eval(prompt, context, plan, negative, final_gt),
            AnyAnnotator::Http(a) => a.annotate_eval(prompt, context, plan, negative, final_gt),
        }
    }
}

fn build_annotator(
    kind: AnnotatorKind,
    seed: u64,
    cache_dir: &Path,
) -> Result<CachedAnnotator<AnyAnnotator>, CliError> {
    let cache = AnnotationCache::open(cache_dir)?;
    let inner = match kind {
        AnnotatorKind::Mock => AnyAnnotator::Mock(MockAnnotator::new(seed)),
        AnnotatorKind::Http => {
            AnyAnnotator::Http(HttpAnnotator::from_env()?)
        }
    };
    Ok(CachedAnnotator::recording(cache, inner))
}

/// Runs the CLI; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Infer(args) => infer(args),
        Command::Score(args) => score(args),
        Command::Dataset(command) => match command {
            DatasetCommand::BuildPlanning(args) => build_planning(args),
            DatasetCommand::BuildCorrection(args) => build_correction(args),
            DatasetCommand::Pack(args) => pack(args),
        },
        Command::TrainGrpoToy(args) => train_grpo_toy(args),
        Command::Report(args) => report(args),
    }
}

fn infer(args: InferArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref())?;
    let prompt = Prompt::new(&args.prompt)?;
    let context = parse_context(&args.context);
    let seed = args.seed.unwrap_or(config.engine.seed);
    let engine_config = EngineConfig {
        max_iterations: args.max_iter.unwrap_or(config.engine.max_iterations),
        record_rewards: args.record_rewards,
        seed,
    };

    let mut backend: Box<dyn GenerationBackend> = match args.backend {
        BackendKind::Sim => {
            let dimension = config
                .sim
                .dimension
                .or_else(|| {
                    context
                        .images()
                        .iter()
                        .find_map(|image| image.as_vector().map(<[f64]>::len))
                })
                .unwrap_or(8);
            Box::new(simulated_backend(SimSpec {
                dimension,
                refinement_rate: config.sim.refinement_rate,
                satisfaction_threshold: config.sim.satisfaction_threshold,
                noise_scale: config.sim.noise_scale,
                seed,
            })?)
        }
        BackendKind::Http => Box::new(match &args.endpoint {
            Some(endpoint) => HttpGenerationBackend::new(
                endpoint.clone(),
                std::env::var(crate::engine::http::BACKEND_TOKEN_ENV).ok(),
            ),
            None => HttpGenerationBackend::from_env().map_err(|e| {
                EngineError::BackendFailure {
                    iteration: 0,
                    source: e,
                }
            })?,
        }),
    };

    let weights = load_weights(args.weights.as_deref(), &config)?;
    let mock_evaluator;
    let http_evaluator;
    let scorer: Option<&dyn crate::reward::EpisodeScorer> = if args.record_rewards {
        match args.suite {
            SuiteKind::Mock => {
                mock_evaluator = RewardEvaluator::new(mock_suite(seed), weights);
                Some(&mock_evaluator)
            }
            SuiteKind::Http => {
                http_evaluator = RewardEvaluator::new(HttpScorerSuite::from_env()?, weights);
                Some(&http_evaluator)
            }
        }
    } else {
        None
    };

    let trace = run_episode(backend.as_mut(), &prompt, &context, &engine_config, scorer)?;
    if let Some(parent) = args.trace_out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&args.trace_out, trace.to_document())?;
    println!(
        "episode: steps={} terminated_by={:?} trace={}",
        trace.steps.len(),
        trace.terminated_by,
        args.trace_out.display()
    );
    Ok(())
}

fn score(args: ScoreArgs) -> Result<(), CliError> {
    let config = AppConfig::default();
    let raw_plan = std::fs::read_to_string(&args.plan)?;
    let plan = Checklist::parse(&raw_plan)?;
    let context = parse_context(&args.context);
    let violations = plan.validate_against_context(context.len());
    if !violations.is_empty() {
        return Err(EngineError::PlanInvalid { violations }.into());
    }
    let image = parse_image_spec(&args.image);
    let weights = load_weights(args.weights.as_deref(), &config)?;

    let suite: Box<dyn ScorerSuite> = match args.suite {
        SuiteKind::Mock => Box::new(mock_suite(args.seed)),
        SuiteKind::Http => Box::new(HttpScorerSuite::from_env()?),
    };

    let document = match &args.prompt {
        Some(prompt) => {
            let prompt = Prompt::new(prompt)?;
            let breakdown =
                total_reward(&plan, &context, &image, &prompt, suite.as_ref(), &weights)?;
            serde_json::to_string_pretty(&breakdown).expect("breakdown serializes")
        }
        None => {
            let (r_visual, per_item) = visual_reward(&plan, &context, &image, suite.as_ref())?;
            serde_json::to_string_pretty(&serde_json::json!({
                "r_visual": r_visual,
                "per_item": per_item,
            }))
            .expect("summary serializes")
        }
    };

    match &args.out {
        Some(path) => std::fs::write(path, format!("{document}\n"))?,
        None => println!("{document}"),
    }
    Ok(())
}

fn build_planning(args: BuildPlanningArgs) -> Result<(), CliError> {
    let triples = dataset::read_triples(&args.input)?;
    let annotator = build_annotator(args.annotator, args.seed, &args.cache)?;
    let report = dataset::build_planning(&triples, &annotator)?;

    std::fs::create_dir_all(&args.out)?;
    let samples: Vec<DatasetSample> = report
        .samples
        .into_iter()
        .map(DatasetSample::Planning)
        .collect();
    dataset::write_corpus(&args.out.join("planning.jsonl"), &samples)?;
    dataset::write_quarantine(&args.out.join("quarantine.jsonl"), &report.quarantined)?;
    println!(
        "planning: samples={} quarantined={} cache_hits={} cache_misses={}",
        samples.len(),
        report.quarantined.len(),
        annotator.hits(),
        annotator.misses()
    );
    Ok(())
}

fn build_correction(args: BuildCorrectionArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref())?;
    let corpus = dataset::read_corpus(&args.input)?;
    let planning: Vec<_> = corpus
        .into_iter()
        .filter_map(|sample| match sample {
            DatasetSample::Planning(p) => Some(p),
            DatasetSample::Correction(_) => None,
        })
        .collect();
    if planning.is_empty() {
        return Err(CliError::Config(format!(
            "{} contains no planning samples",
            args.input.display()
        )));
    }

    let annotator = build_annotator(args.annotator, args.seed, &args.cache)?;
    let degrader = MockDegrader {
        strength: args.degrade_strength,
    };
    let fraction = args
        .perfect_fraction
        .unwrap_or(config.dataset.perfect_fraction);
    let report = dataset::build_correction(&planning, &degrader, &annotator, fraction, args.seed)?;

    std::fs::create_dir_all(&args.out)?;
    let samples: Vec<DatasetSample> = report
        .samples
        .into_iter()
        .map(DatasetSample::Correction)
        .collect();
    dataset::write_corpus(&args.out.join("correction.jsonl"), &samples)?;
    dataset::write_quarantine(&args.out.join("quarantine.jsonl"), &report.quarantined)?;
    println!(
        "correction: samples={} quarantined={} cache_hits={} cache_misses={}",
        samples.len(),
        report.quarantined.len(),
        annotator.hits(),
        annotator.misses()
    );
    Ok(())
}

fn pack(args: PackArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref())?;
    let budget = args.budget.unwrap_or(config.dataset.budget);
    let image_tokens = args.image_tokens.unwrap_or(config.dataset.image_tokens);

    let sequences = match args.input_kind {
        PackInputKind::Sequences => dataset::read_sequences(&args.input)?,
        PackInputKind::Corpus => {
            let corpus = dataset::read_corpus(&args.input)?;
            let tokenizer = ApproxTokenizer::default();
            corpus
                .iter()
                .map(|sample| dataset::to_training_sequence(sample, &tokenizer, image_tokens))
                .collect::<Result<Vec<_>, _>>()?
        }
    };

    let batches = dataset::pack(sequences, budget)?;
    std::fs::create_dir_all(&args.out)?;
    let mut manifest = String::from("batch,sequences,total_tokens\n");
    for (index, batch) in batches.iter().enumerate() {
        let name = format!("batch_{index:04}.json");
        let mut document =
            serde_json::to_string_pretty(batch).expect("batch serializes");
        document.push('\n');
        std::fs::write(args.out.join(&name), document)?;
        manifest.push_str(&format!(
            "{index},{},{}\n",
            batch.sequences.len(),
            batch.total_tokens
        ));
    }
    std::fs::write(args.out.join("pack_manifest.csv"), manifest)?;
    println!("pack: batches={} budget={budget}", batches.len());
    Ok(())
}

fn train_grpo_toy(args: TrainArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref())?;
    let seed = args.seed.unwrap_or(config.engine.seed);

    let grpo_config = GrpoConfig {
        group_size: config.grpo.group_size,
        num_steps: config.grpo.num_steps,
        clip_epsilon: config.grpo.clip_epsilon,
        kl_beta: config.grpo.kl_beta,
        std_floor: config.grpo.std_floor,
    };
    let settings = OptimizerSettings {
        learning_rate: config.train.learning_rate,
        iterations: config.train.iterations,
        groups_per_iteration: config.train.groups_per_iteration,
        eval_groups: config.train.eval_groups,
    };
    let env = ToyFlowEnv {
        state_dim: config.env.state_dim,
        prompt_dim: config.env.prompt_dim,
        context_dim: config.env.context_dim,
        condition_scale: config.env.condition_scale,
        init_scale: config.env.init_scale,
        sigma: config.env.sigma,
    };

    let outcome = train_toy(
        &env,
        &grpo_config,
        &settings,
        &|x0, c| env.default_reward(x0, c),
        seed,
    )?;

    std::fs::create_dir_all(&args.out)?;
    std::fs::write(
        args.out.join("training_report.csv"),
        outcome.report.to_delimited(),
    )?;
    let mut policy_doc =
        serde_json::to_string_pretty(&outcome.policy).expect("policy serializes");
    policy_doc.push('\n');
    std::fs::write(args.out.join("policy.json"), policy_doc)?;
    println!(
        "train-grpo-toy: iterations={} reward {:.4} -> {:.4}",
        outcome.report.rows.len(),
        outcome.report.initial_mean_reward(),
        outcome.report.final_mean_reward()
    );
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), CliError> {
    let mut traces = Vec::with_capacity(args.traces.len());
    for path in &args.traces {
        let raw = std::fs::read_to_string(path)?;
        let trace = EpisodeTrace::parse(&raw).map_err(|e| {
            CliError::Report(ReportError::MalformedInput {
                path: path.display().to_string(),
                message: e.to_string(),
            })
        })?;
        traces.push(trace);
    }
    let training = match &args.training {
        Some(path) => {
            let raw = std::fs::read_to_string(path)?;
            Some(TrainingReport::parse_delimited(&raw).map_err(|e| {
                CliError::Report(ReportError::MalformedInput {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })
            })?)
        }
        None => None,
    };

    let written = render_reports(&traces, training.as_ref(), &args.out)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
