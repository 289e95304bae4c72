//! fnjail-core: a red-teaming harness for the function/tool-calling surface of
//! LLM provider APIs.
//!
//! The pipeline assembles a crafted "write a novel" function definition whose
//! argument description coerces harmful text into the generated argument,
//! renders it into each provider dialect's native tool format under a chosen
//! tool-choice mode, executes k-shot campaigns over a behavior dataset,
//! adjudicates outcomes, and aggregates attack success rates — fully offline
//! against a deterministic mock provider, or live with explicit opt-in.

pub mod attack;
pub mod campaign;
pub mod contentgen;
pub mod judge;
pub mod model;
pub mod providers;

pub use attack::{
    apply_defense, build_jailbreak_function, build_trigger_prompt, render_chat_mode_attack,
    AttackError, AttackRequestPlan, AttackStyle, DefensePosition, JailbreakFunctionSpec,
    TemplateConfig, DEFENSIVE_PROMPT,
};
pub use campaign::{
    aggregate, load_dataset, render_report, replay_judge, run_ablation_chatmode, run_campaign,
    run_kshot, AttemptRecord, CampaignConfig, CampaignError, CampaignOutputs, CampaignResult,
    JudgeHandle, ModeChoice, RecordStore, TargetSpec, TargetSummary,
};
pub use contentgen::{
    build_typegen_prompt, get_content_types, parse_typegen_response, ContentGenError,
    TypegenCache, TypegenResult, TypegenSource,
};
pub use judge::{heuristic_verdict, llm_verdict, parse_judge_reply, HeuristicJudge, JudgeConfig, JudgeKind};
pub use model::{
    compute_asr, normalize_param_name, ContentType, HarmBehavior, ModelError, ToolChoiceMode,
    Verdict,
};
pub use providers::{
    mock_send, parse_outcome, render_request, Dialect, EndpointConfig, LiveTransport, MockPolicy,
    MockTransport, OutcomeSource, ProviderError, ProviderOutcome, ProviderTarget, WireRequest,
};
