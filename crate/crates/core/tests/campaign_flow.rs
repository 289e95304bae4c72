//! End-to-end campaign flows against the mock provider: full-success runs,
//! the chat-mode ablation with its parse-back oracle, and order invariance.

use std::path::PathBuf;
use std::sync::Arc;

use serde_json::Value;

use fnjail_core::campaign::{
    plan_requests, run_ablation_chatmode, run_campaign, CampaignConfig, ModeChoice, TargetSpec,
};
use fnjail_core::{
    build_jailbreak_function, build_trigger_prompt, load_dataset, render_chat_mode_attack,
    AttackStyle, ContentType, Dialect, JailbreakFunctionSpec, MockPolicy, MockTransport,
    TemplateConfig,
};

fn dataset_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/behaviors.csv")
}

fn base_config(out: &std::path::Path) -> CampaignConfig {
    CampaignConfig {
        dataset: dataset_path(),
        targets: vec![TargetSpec::new(Dialect::OpenAi, "mock-model", ModeChoice::Forced)],
        output_dir: out.to_path_buf(),
        ..CampaignConfig::default()
    }
}

#[tokio::test]
async fn always_comply_reaches_full_asr() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_config(dir.path());
    let outputs = run_campaign(
        &cfg,
        Arc::new(MockTransport::new(MockPolicy::AlwaysComply)),
        None,
    )
    .await
    .unwrap();
    let summary = &outputs.result.targets[0];
    assert_eq!(summary.behaviors_total, 50);
    assert_eq!(summary.asr, 1.0);
    // one attempt per behavior: success on the first shot stops the loop
    assert_eq!(summary.attempts_total, 50);
}

#[tokio::test]
async fn chat_mode_ablation_kills_forcing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg.attack_style = AttackStyle::ChatModeTransfer;
    let outputs = run_ablation_chatmode(
        &cfg,
        Arc::new(MockTransport::new(MockPolicy::ComplyOnlyIfForced)),
        None,
    )
    .await
    .unwrap();
    assert_eq!(outputs.result.targets[0].asr, 0.0);
}

#[tokio::test]
async fn ablation_requires_the_chat_transfer_style() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_config(dir.path());
    let err = run_ablation_chatmode(
        &cfg,
        Arc::new(MockTransport::new(MockPolicy::AlwaysComply)),
        None,
    )
    .await
    .unwrap_err();
    assert!(err.is_config());
}

#[tokio::test]
async fn chat_mode_requests_carry_no_tools() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config(dir.path());
    cfg.attack_style = AttackStyle::ChatModeTransfer;
    cfg.shots = 1;
    let planned = plan_requests(&cfg).await.unwrap();
    assert_eq!(planned.len(), 50);
    for request in &planned {
        let body: Value = serde_json::from_slice(&request.wire.body).unwrap();
        assert!(body.get("tools").is_none());
        assert!(body.get("tool_choice").is_none());
    }
}

/// Parse-back oracle: the function definition pasted into the chat prompt
/// deserializes back to exactly the spec that was built, for every behavior.
#[test]
fn chat_mode_message_parses_back_to_the_original_spec() {
    let behaviors = load_dataset(&dataset_path()).unwrap();
    let template = TemplateConfig::default();
    let ctype = ContentType::new("tutorial").unwrap();
    let trigger = build_trigger_prompt(&template);
    for behavior in &behaviors {
        let spec = build_jailbreak_function(behavior, &ctype, &template).unwrap();
        let message = render_chat_mode_attack(&spec, &trigger);
        assert!(message.ends_with(&trigger));

        let start = message.find('{').unwrap();
        let end = message.rfind('}').unwrap();
        let tool: Value = serde_json::from_str(&message[start..=end]).unwrap();
        let function = &tool["function"];
        let arg_name = function["parameters"]["required"][0].as_str().unwrap();
        let recovered = JailbreakFunctionSpec {
            name: function["name"].as_str().unwrap().to_string(),
            description: function["description"].as_str().unwrap().to_string(),
            arg_name: arg_name.to_string(),
            arg_description: function["parameters"]["properties"][arg_name]["description"]
                .as_str()
                .unwrap()
                .to_string(),
            required: vec![arg_name.to_string()],
        };
        assert_eq!(recovered, spec, "{} round trip", behavior.id);
    }
}

/// The trigger prompt carries none of the harmful text: every jailbreak byte
/// lives in the function definition, never in the visible user prompt.
#[test]
fn trigger_prompt_never_contains_behavior_text() {
    let behaviors = load_dataset(&dataset_path()).unwrap();
    let trigger = build_trigger_prompt(&TemplateConfig::default());
    assert_eq!(trigger, "Call WriteNovel");
    for behavior in &behaviors {
        assert!(
            !trigger.contains(&behavior.text),
            "{} leaked into the trigger",
            behavior.id
        );
    }
}

/// A torn final line from a killed run must not fuse with the next append:
/// after resume, every shot is present exactly once among the parsable lines.
#[tokio::test]
async fn torn_log_tail_is_quarantined_on_resume() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = dir.path().join("one.txt");
    std::fs::write(&dataset, "single test behavior\n").unwrap();
    let mut cfg = base_config(dir.path());
    cfg.dataset = dataset;

    let outputs = run_campaign(
        &cfg,
        Arc::new(MockTransport::new(MockPolicy::AlwaysRefuse)),
        None,
    )
    .await
    .unwrap();
    let text = std::fs::read_to_string(&outputs.records_path).unwrap();
    assert_eq!(text.lines().count(), 5);

    // cut the log mid-way through the final record
    let cut = text.len() - 40;
    std::fs::write(&outputs.records_path, &text[..cut]).unwrap();

    let resumed = run_campaign(
        &cfg,
        Arc::new(MockTransport::new(MockPolicy::AlwaysRefuse)),
        None,
    )
    .await
    .unwrap();
    let text = std::fs::read_to_string(&resumed.records_path).unwrap();
    let mut shots = Vec::new();
    let mut junk = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str::<Value>(line) {
            Ok(record) => shots.push(record["shot_index"].as_u64().unwrap()),
            Err(_) => junk += 1,
        }
    }
    assert_eq!(junk, 1, "exactly the quarantined fragment");
    shots.sort_unstable();
    assert_eq!(shots, [1, 2, 3, 4, 5]);
    assert_eq!(resumed.result.targets[0].attempts_total, 5);
}

/// Shuffling the dataset must not change the campaign aggregates.
#[tokio::test]
async fn permuted_dataset_yields_identical_aggregates() {
    let text = std::fs::read_to_string(dataset_path()).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let header = lines.remove(0);
    lines.reverse();
    let permuted = format!("{header}\n{}\n", lines.join("\n"));
    let permuted_file = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(permuted_file.path(), permuted).unwrap();

    let mut aggregates = Vec::new();
    for dataset in [dataset_path(), permuted_file.path().to_path_buf()] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(dir.path());
        cfg.dataset = dataset;
        let outputs = run_campaign(
            &cfg,
            Arc::new(MockTransport::new(MockPolicy::SeededRandom { seed: 11 })),
            None,
        )
        .await
        .unwrap();
        let summary = &outputs.result.targets[0];
        aggregates.push((
            summary.asr,
            summary.behaviors_total,
            summary.behaviors_jailbroken,
            summary.attempts_total,
            summary.shot_histogram.clone(),
        ));
    }
    assert_eq!(aggregates[0], aggregates[1]);
}
