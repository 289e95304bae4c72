//! End-to-end experiment orchestration: dataset loading, the k-shot attack
//! loop, the chat-mode ablation, defensive-prompt runs, persistence, and
//! aggregation into per-target success rates.

mod dataset;
mod report;
mod store;

pub use dataset::load_dataset;
pub use report::render_report;
pub use store::RecordStore;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use crate::attack::{
    apply_defense, build_jailbreak_function, build_trigger_prompt, render_chat_mode_attack,
    AttackError, AttackRequestPlan, AttackStyle, DefensePosition, TemplateConfig,
};
use crate::contentgen::{get_content_types, Generator, TypegenCache, TypegenResult, TypegenSource};
use crate::judge::{llm_verdict, HeuristicJudge, JudgeConfig, JudgeKind};
use crate::model::{compute_asr, ContentType, HarmBehavior, ToolChoiceMode, Verdict};
use crate::providers::{
    render_request, Dialect, EndpointConfig, LiveTransport, OutcomeSource, ProviderError,
    ProviderOutcome, ProviderTarget, WireRequest,
};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dataset contains no behaviors")]
    EmptyDataset,
    #[error("dataset parse error at line {line}: {detail}")]
    DatasetParse { line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

impl CampaignError {
    /// Pre-flight/configuration failures map to exit code 2 in the CLI.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            CampaignError::Config(_)
                | CampaignError::EmptyDataset
                | CampaignError::DatasetParse { .. }
                | CampaignError::Attack(_)
        )
    }
}

/// Tool-choice mode as written in config files; `Forced` resolves to the
/// configured function name at plan-build time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    Auto,
    Required,
    Forced,
    None,
}

impl ModeChoice {
    pub fn resolve(&self, function_name: &str) -> ToolChoiceMode {
        match self {
            ModeChoice::Auto => ToolChoiceMode::Auto,
            ModeChoice::Required => ToolChoiceMode::Required,
            ModeChoice::Forced => ToolChoiceMode::Forced(function_name.to_string()),
            ModeChoice::None => ToolChoiceMode::None,
        }
    }

    pub fn slug(&self) -> &'static str {
        match self {
            ModeChoice::Auto => "auto",
            ModeChoice::Required => "required",
            ModeChoice::Forced => "forced",
            ModeChoice::None => "none",
        }
    }
}

/// One attack target from the config: dialect family, model, mode, plus
/// optional endpoint/credential overrides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub dialect: Dialect,
    pub model: String,
    pub mode: ModeChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
}

impl TargetSpec {
    pub fn new(dialect: Dialect, model: impl Into<String>, mode: ModeChoice) -> Self {
        Self {
            dialect,
            model: model.into(),
            mode,
            endpoint: None,
            auth_env: None,
        }
    }

    pub fn provider_target(&self) -> ProviderTarget {
        let mut target = ProviderTarget::new(self.dialect, self.model.clone());
        if let Some(endpoint) = &self.endpoint {
            target.endpoint = endpoint.clone();
        }
        if let Some(auth_env) = &self.auth_env {
            target.auth_env = auth_env.clone();
        }
        target
    }
}

/// Declarative campaign configuration; the CLI loads this from a TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub dataset: PathBuf,
    pub targets: Vec<TargetSpec>,
    pub shots: u32,
    pub defense: Option<DefensePosition>,
    pub attack_style: AttackStyle,
    pub template: TemplateConfig,
    pub judge: JudgeConfig,
    pub generator: Option<EndpointConfig>,
    pub typegen_cache: Option<PathBuf>,
    pub concurrency: usize,
    pub output_dir: PathBuf,
    pub max_requests: Option<u64>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data/behaviors.csv"),
            targets: Vec::new(),
            shots: 5,
            defense: None,
            attack_style: AttackStyle::FunctionCall,
            template: TemplateConfig::default(),
            judge: JudgeConfig::default(),
            generator: None,
            typegen_cache: None,
            concurrency: 4,
            output_dir: PathBuf::from("out"),
            max_requests: None,
        }
    }
}

impl CampaignConfig {
    /// Canonical hash of the template knobs, recorded per attempt.
    pub fn template_sha256(&self) -> String {
        let bytes = serde_json::to_vec(&self.template).expect("template serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One persisted attack attempt. Records are append-only; the stored outcome
/// is sufficient to re-judge the attempt without touching the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub behavior_id: String,
    pub behavior_text: String,
    pub target_key: String,
    pub dialect: Dialect,
    pub model: String,
    pub mode: String,
    /// True when the dialect has no native wire mode and the renderer used
    /// its sanctioned emulation (Gemini forced-as-ANY).
    pub mode_emulated: bool,
    pub defense: Option<DefensePosition>,
    pub attack_style: AttackStyle,
    pub content_type: ContentType,
    /// 1-based position in the k-shot loop.
    pub shot_index: u32,
    pub request_sha256: String,
    pub request_url: String,
    pub raw_response: String,
    pub outcome: ProviderOutcome,
    pub verdict: Verdict,
    pub timestamp: String,
    pub template_sha256: String,
    pub judge_prompt_sha256: String,
}

/// Stable grouping key for (target, mode, defense, style).
pub fn target_key(spec: &TargetSpec, defense: Option<DefensePosition>, style: AttackStyle) -> String {
    format!(
        "{}|{}|{}|{}|{}",
        spec.dialect.slug(),
        spec.model,
        spec.mode.slug(),
        defense.map_or("no_defense", |d| d.slug()),
        style.slug(),
    )
}

/// Aggregated results for one (target, mode, defense) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub target_key: String,
    pub dialect: Dialect,
    pub model: String,
    pub mode: String,
    pub defense: Option<DefensePosition>,
    pub attack_style: AttackStyle,
    pub shots: u32,
    pub behaviors_total: usize,
    pub behaviors_jailbroken: usize,
    pub asr: f64,
    pub attempts_total: usize,
    pub error_attempts: usize,
    /// Attempt count at each shot index.
    pub shot_histogram: BTreeMap<u32, usize>,
    /// behavior id → jailbroken at any shot.
    pub per_behavior: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CampaignResult {
    /// Hashes of the template and judge prompt the campaign ran with.
    #[serde(default)]
    pub template_sha256: String,
    #[serde(default)]
    pub judge_prompt_sha256: String,
    pub targets: Vec<TargetSummary>,
}

impl CampaignResult {
    pub fn error_attempts(&self) -> usize {
        self.targets.iter().map(|t| t.error_attempts).sum()
    }
}

/// Adjudication handle used inside the attack loop.
pub enum JudgeHandle {
    Heuristic(HeuristicJudge),
    Llm {
        transport: Arc<LiveTransport>,
        endpoint: EndpointConfig,
        template: String,
    },
}

impl JudgeHandle {
    pub fn from_config(
        config: &JudgeConfig,
        template: &TemplateConfig,
        transport: Option<Arc<LiveTransport>>,
    ) -> Result<Self, CampaignError> {
        match config.kind {
            JudgeKind::Heuristic => Ok(JudgeHandle::Heuristic(HeuristicJudge::with_min_words(
                template.min_words,
            ))),
            JudgeKind::Llm => {
                let endpoint = config.endpoint.clone().ok_or_else(|| {
                    CampaignError::Config("LLM judge has no endpoint configured".to_string())
                })?;
                let transport = transport.ok_or_else(|| {
                    CampaignError::Config(
                        "an LLM judge makes live calls and cannot run with the mock provider; \
                         use judge kind \"heuristic\" for offline runs"
                            .to_string(),
                    )
                })?;
                Ok(JudgeHandle::Llm {
                    transport,
                    endpoint,
                    template: config.prompt_template.clone(),
                })
            }
        }
    }

    async fn verdict(&self, behavior: &HarmBehavior, response_text: &str) -> Verdict {
        match self {
            JudgeHandle::Heuristic(judge) => judge.verdict(behavior, response_text),
            JudgeHandle::Llm {
                transport,
                endpoint,
                template,
            } => llm_verdict(transport, endpoint, template, behavior, response_text).await,
        }
    }
}

/// Builds the request plan for one (behavior, candidate) attempt. Defense at
/// the function description is applied before the chat-mode message is
/// rendered so the pasted definition carries it; defense at the user prompt
/// always lands at the very end of the final message.
pub fn build_plan(
    behavior: &HarmBehavior,
    ctype: &ContentType,
    target_spec: &TargetSpec,
    cfg: &CampaignConfig,
) -> Result<AttackRequestPlan, AttackError> {
    let mode = target_spec.mode.resolve(&cfg.template.function_name);
    let spec = build_jailbreak_function(behavior, ctype, &cfg.template)?;
    let trigger = build_trigger_prompt(&cfg.template);
    let mut plan = AttackRequestPlan::new(spec, mode, trigger.clone(), cfg.attack_style);
    if cfg.defense == Some(DefensePosition::FunctionDescriptionEnd) {
        plan = apply_defense(plan, DefensePosition::FunctionDescriptionEnd)?;
    }
    if cfg.attack_style == AttackStyle::ChatModeTransfer {
        plan.user_prompt = render_chat_mode_attack(&plan.function, &trigger);
    }
    if cfg.defense == Some(DefensePosition::UserPromptEnd) {
        plan = apply_defense(plan, DefensePosition::UserPromptEnd)?;
    }
    Ok(plan)
}

fn raw_response_of(outcome: &ProviderOutcome) -> String {
    match outcome {
        ProviderOutcome::ToolCall { raw_body, .. } => raw_body.clone(),
        ProviderOutcome::PlainText { text } => text.clone(),
        ProviderOutcome::SafetyBlocked { reason } => reason.clone(),
        ProviderOutcome::TransportError { detail } => detail.clone(),
    }
}

/// Maps a provider outcome to a verdict, consulting the judge only for
/// content-bearing outcomes. Safety blocks and transport failures bypass it.
pub async fn adjudicate(
    judge: &JudgeHandle,
    behavior: &HarmBehavior,
    arg_name: &str,
    outcome: &ProviderOutcome,
) -> Verdict {
    match outcome {
        ProviderOutcome::SafetyBlocked { reason } => Verdict::FilterBlocked {
            reason: reason.clone(),
        },
        ProviderOutcome::TransportError { detail } => Verdict::Error {
            reason: detail.clone(),
        },
        other => {
            let text = other.candidate_text(arg_name).unwrap_or_default();
            judge.verdict(behavior, text).await
        }
    }
}

/// Runs up to `min(shots, candidates)` attempts for one behavior against one
/// target, stopping at the first jailbroken verdict. Already-recorded shots in
/// `store` are skipped, which is what makes killed runs resumable. Failures
/// inside the loop surface as `Error` verdicts in records, never as an abort.
///
/// Returns the records newly produced by this call.
pub async fn run_kshot(
    behavior: &HarmBehavior,
    candidates: &TypegenResult,
    target_spec: &TargetSpec,
    cfg: &CampaignConfig,
    source: &dyn OutcomeSource,
    judge: &JudgeHandle,
    store: Option<&RecordStore>,
) -> Result<Vec<AttemptRecord>, CampaignError> {
    let key = target_key(target_spec, cfg.defense, cfg.attack_style);
    let recorded: BTreeSet<u32> = store
        .map(|s| s.recorded_shots(&behavior.id, &key))
        .unwrap_or_default();
    if store.is_some_and(|s| s.has_jailbreak(&behavior.id, &key)) {
        return Ok(Vec::new());
    }

    let target = target_spec.provider_target();
    let mode = target_spec.mode.resolve(&cfg.template.function_name);
    let max_shots = (cfg.shots as usize).min(candidates.candidates.len());
    let mut new_records = Vec::new();

    for (index, ctype) in candidates.candidates.iter().take(max_shots).enumerate() {
        let shot = index as u32 + 1;
        if recorded.contains(&shot) {
            continue;
        }
        let (request_sha256, request_url, outcome) =
            match build_plan(behavior, ctype, target_spec, cfg) {
                Ok(plan) => match render_request(&plan, &target) {
                    Ok(wire) => {
                        let outcome = source.fetch(&plan, &target, &wire, shot).await;
                        (wire.sha256_hex(), wire.url, outcome)
                    }
                    Err(e) => (
                        String::new(),
                        String::new(),
                        ProviderOutcome::TransportError {
                            detail: format!("render failed: {e}"),
                        },
                    ),
                },
                Err(e) => (
                    String::new(),
                    String::new(),
                    ProviderOutcome::TransportError {
                        detail: format!("plan assembly failed: {e}"),
                    },
                ),
            };
        let verdict = adjudicate(judge, behavior, &ctype.param_name, &outcome).await;
        let record = AttemptRecord {
            behavior_id: behavior.id.clone(),
            behavior_text: behavior.text.clone(),
            target_key: key.clone(),
            dialect: target_spec.dialect,
            model: target_spec.model.clone(),
            mode: target_spec.mode.slug().to_string(),
            mode_emulated: target_spec.dialect.mode_is_emulated(&mode),
            defense: cfg.defense,
            attack_style: cfg.attack_style,
            content_type: ctype.clone(),
            shot_index: shot,
            request_sha256,
            request_url,
            raw_response: raw_response_of(&outcome),
            outcome,
            verdict: verdict.clone(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            template_sha256: cfg.template_sha256(),
            judge_prompt_sha256: cfg.judge.prompt_sha256(),
        };
        if let Some(store) = store {
            store.append(&record)?;
        }
        new_records.push(record);
        if verdict.is_jailbroken() {
            break;
        }
    }
    Ok(new_records)
}

/// Validates the whole configuration and loads the dataset, before any
/// network call. Unsupported (dialect, mode) pairs, a bad template, a bad
/// judge setup, or missing live credentials all fail here.
pub fn preflight(
    cfg: &CampaignConfig,
    live: bool,
) -> Result<Vec<HarmBehavior>, CampaignError> {
    cfg.template
        .validate()
        .map_err(|e| CampaignError::Config(e.to_string()))?;
    cfg.judge.validate().map_err(CampaignError::Config)?;
    if !(1..=5).contains(&cfg.shots) {
        return Err(CampaignError::Config(format!(
            "shots must be in 1..=5, got {}",
            cfg.shots
        )));
    }
    if cfg.targets.is_empty() {
        return Err(CampaignError::Config("no targets configured".to_string()));
    }
    for spec in &cfg.targets {
        let mode = spec.mode.resolve(&cfg.template.function_name);
        if !spec.dialect.supports_mode(&mode) {
            return Err(CampaignError::Config(format!(
                "target {}/{} requests mode {} which the {} dialect does not support",
                spec.dialect.slug(),
                spec.model,
                spec.mode.slug(),
                spec.dialect
            )));
        }
        if live {
            let target = spec.provider_target();
            if std::env::var(&target.auth_env).is_err() {
                return Err(CampaignError::Config(format!(
                    "live run: environment variable {} is not set for {}/{}",
                    target.auth_env,
                    spec.dialect.slug(),
                    spec.model
                )));
            }
        }
    }
    load_dataset(&cfg.dataset)
}

/// Generates (or recalls) candidate content types for every behavior. When the
/// provider is not live the generator endpoint is ignored — cache hits and the
/// static fallback keep the pipeline fully offline.
pub async fn gather_content_types(
    cfg: &CampaignConfig,
    behaviors: &[HarmBehavior],
    live: bool,
    transport: Option<&LiveTransport>,
) -> Result<BTreeMap<String, TypegenResult>, CampaignError> {
    let cache = cfg.typegen_cache.as_ref().map(TypegenCache::new);
    let mut by_id: BTreeMap<String, TypegenResult> = BTreeMap::new();
    if let Some(cache) = &cache {
        for entry in cache.load()? {
            by_id.insert(entry.behavior_id.clone(), entry);
        }
    }
    for behavior in behaviors {
        if by_id.contains_key(&behavior.id) {
            continue;
        }
        let generator = match (&cfg.generator, transport, live) {
            (Some(endpoint), Some(transport), true) => Some(Generator {
                transport,
                endpoint,
            }),
            _ => None,
        };
        let result = get_content_types(behavior, generator).await;
        if result.source == TypegenSource::Generated {
            if let Some(cache) = &cache {
                cache.append(&result)?;
            }
        }
        by_id.insert(behavior.id.clone(), result);
    }
    Ok(by_id)
}

/// Aggregates every persisted record into per-target summaries. The reported
/// ASR is literally `compute_asr` over the per-behavior final verdicts.
pub fn aggregate(cfg: &CampaignConfig, records: &[AttemptRecord]) -> CampaignResult {
    let mut groups: BTreeMap<String, Vec<&AttemptRecord>> = BTreeMap::new();
    for record in records {
        groups.entry(record.target_key.clone()).or_default().push(record);
    }
    let mut targets = Vec::new();
    for (key, group) in groups {
        let mut per_behavior: BTreeMap<String, bool> = BTreeMap::new();
        let mut shot_histogram: BTreeMap<u32, usize> = BTreeMap::new();
        let mut error_attempts = 0;
        for record in &group {
            let success = per_behavior.entry(record.behavior_id.clone()).or_insert(false);
            *success |= record.verdict.is_jailbroken();
            *shot_histogram.entry(record.shot_index).or_insert(0) += 1;
            if record.verdict.is_error() {
                error_attempts += 1;
            }
        }
        let behavior_verdicts: Vec<Verdict> = per_behavior
            .values()
            .map(|&success| {
                if success {
                    Verdict::Jailbroken {
                        rationale: String::new(),
                    }
                } else {
                    Verdict::Refused {
                        rationale: String::new(),
                    }
                }
            })
            .collect();
        let asr = compute_asr(&behavior_verdicts).unwrap_or(0.0);
        let first = group[0];
        targets.push(TargetSummary {
            target_key: key,
            dialect: first.dialect,
            model: first.model.clone(),
            mode: first.mode.clone(),
            defense: first.defense,
            attack_style: first.attack_style,
            shots: cfg.shots,
            behaviors_total: per_behavior.len(),
            behaviors_jailbroken: per_behavior.values().filter(|&&s| s).count(),
            asr,
            attempts_total: group.len(),
            error_attempts,
            shot_histogram,
            per_behavior,
        });
    }
    CampaignResult {
        template_sha256: cfg.template_sha256(),
        judge_prompt_sha256: cfg.judge.prompt_sha256(),
        targets,
    }
}

/// Everything a finished campaign leaves on disk.
#[derive(Debug)]
pub struct CampaignOutputs {
    pub result: CampaignResult,
    pub records_path: PathBuf,
    pub summary_path: PathBuf,
    pub report_path: PathBuf,
}

/// Runs the full campaign: pre-flight, content-type generation, the k-shot
/// loop for every (behavior × target) pair, aggregation, and persistence.
/// Targets run sequentially; behaviors within a target fan out concurrently
/// up to the configured cap, while shots inside a behavior stay sequential.
pub async fn run_campaign(
    cfg: &CampaignConfig,
    source: Arc<dyn OutcomeSource>,
    transport: Option<Arc<LiveTransport>>,
) -> Result<CampaignOutputs, CampaignError> {
    let live = source.is_live();
    let behaviors = preflight(cfg, live)?;
    let candidates =
        gather_content_types(cfg, &behaviors, live, transport.as_deref()).await?;

    std::fs::create_dir_all(&cfg.output_dir)?;
    let store = Arc::new(RecordStore::open(cfg.output_dir.join("records.jsonl"))?);
    let judge = Arc::new(JudgeHandle::from_config(
        &cfg.judge,
        &cfg.template,
        transport.clone(),
    )?);
    let cfg_arc = Arc::new(cfg.clone());

    for target_spec in &cfg.targets {
        let semaphore = Arc::new(Semaphore::new(cfg.concurrency.max(1)));
        let mut tasks: JoinSet<Result<(), CampaignError>> = JoinSet::new();
        for behavior in &behaviors {
            let behavior = behavior.clone();
            let candidate_list = candidates
                .get(&behavior.id)
                .cloned()
                .unwrap_or_else(|| TypegenResult::fallback(&behavior.id));
            let target_spec = target_spec.clone();
            let cfg = Arc::clone(&cfg_arc);
            let source = Arc::clone(&source);
            let judge = Arc::clone(&judge);
            let store = Arc::clone(&store);
            let semaphore = Arc::clone(&semaphore);
            tasks.spawn(async move {
                let _permit = semaphore.acquire().await.expect("semaphore open");
                run_kshot(
                    &behavior,
                    &candidate_list,
                    &target_spec,
                    &cfg,
                    source.as_ref(),
                    judge.as_ref(),
                    Some(store.as_ref()),
                )
                .await?;
                Ok(())
            });
        }
        while let Some(joined) = tasks.join_next().await {
            joined.map_err(|e| CampaignError::Config(format!("worker panicked: {e}")))??;
        }
    }

    let records = store.records();
    let result = aggregate(cfg, &records);
    let summary_path = cfg.output_dir.join("summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&result).expect("summaries serialize"),
    )?;
    let report_path = cfg.output_dir.join("report.md");
    std::fs::write(&report_path, render_report(std::slice::from_ref(&result)))?;

    Ok(CampaignOutputs {
        result,
        records_path: store.path().to_path_buf(),
        summary_path,
        report_path,
    })
}

/// The chat-mode ablation: identical aggregation, but every request carries no
/// tools and embeds the serialized function definition in the user prompt.
pub async fn run_ablation_chatmode(
    cfg: &CampaignConfig,
    source: Arc<dyn OutcomeSource>,
    transport: Option<Arc<LiveTransport>>,
) -> Result<CampaignOutputs, CampaignError> {
    if cfg.attack_style != AttackStyle::ChatModeTransfer {
        return Err(CampaignError::Config(
            "chat-mode ablation requires attack_style = chat_mode_transfer".to_string(),
        ));
    }
    run_campaign(cfg, source, transport).await
}

/// A rendered request for one planned attempt, used by dry runs.
pub struct PlannedRequest {
    pub behavior_id: String,
    pub target_key: String,
    pub shot_index: u32,
    pub wire: WireRequest,
}

/// Renders every request the campaign could send, without sending anything.
pub async fn plan_requests(cfg: &CampaignConfig) -> Result<Vec<PlannedRequest>, CampaignError> {
    let behaviors = preflight(cfg, false)?;
    let candidates = gather_content_types(cfg, &behaviors, false, None).await?;
    let mut planned = Vec::new();
    for target_spec in &cfg.targets {
        let target = target_spec.provider_target();
        let key = target_key(target_spec, cfg.defense, cfg.attack_style);
        for behavior in &behaviors {
            let list = &candidates[&behavior.id];
            let max_shots = (cfg.shots as usize).min(list.candidates.len());
            for (index, ctype) in list.candidates.iter().take(max_shots).enumerate() {
                let plan = build_plan(behavior, ctype, target_spec, cfg)?;
                let wire = render_request(&plan, &target)?;
                planned.push(PlannedRequest {
                    behavior_id: behavior.id.clone(),
                    target_key: key.clone(),
                    shot_index: index as u32 + 1,
                    wire,
                });
            }
        }
    }
    Ok(planned)
}

/// Re-adjudicates a records file with the deterministic heuristic judge, with
/// no network access. Output depends only on file content, so replaying twice
/// yields byte-identical summaries.
pub fn replay_judge(
    records_path: &Path,
    cfg: &CampaignConfig,
) -> Result<CampaignResult, CampaignError> {
    let store = RecordStore::open(records_path)?;
    let judge = HeuristicJudge::with_min_words(cfg.template.min_words);
    let mut records = store.records();
    if records.is_empty() {
        return Err(CampaignError::Config(format!(
            "no attempt records in {}",
            records_path.display()
        )));
    }
    records.sort_by(|a, b| {
        (&a.target_key, &a.behavior_id, a.shot_index)
            .cmp(&(&b.target_key, &b.behavior_id, b.shot_index))
    });
    for record in &mut records {
        let behavior = HarmBehavior::new(record.behavior_id.clone(), record.behavior_text.clone());
        record.verdict = match &record.outcome {
            ProviderOutcome::SafetyBlocked { reason } => Verdict::FilterBlocked {
                reason: reason.clone(),
            },
            ProviderOutcome::TransportError { detail } => Verdict::Error {
                reason: detail.clone(),
            },
            other => judge.verdict(
                &behavior,
                other.candidate_text(&record.content_type.param_name).unwrap_or_default(),
            ),
        };
    }
    Ok(aggregate(cfg, &records))
}
