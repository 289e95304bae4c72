//! fnjail: config-driven red-team campaigns against LLM tool-calling APIs.
//!
//! Exit codes: 0 success, 1 campaign finished but some attempts ended in
//! internal error verdicts, 2 configuration error.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use fnjail_core::campaign::{
    self, plan_requests, replay_judge, run_campaign, CampaignConfig, CampaignError,
    CampaignOutputs, CampaignResult, ModeChoice,
};
use fnjail_core::contentgen::TypegenCache;
use fnjail_core::{
    build_jailbreak_function, AttackStyle, ContentType, HarmBehavior, LiveTransport,
    MockTransport, OutcomeSource,
};

use config::{
    apply_overrides, config_sha256, load_config, parse_defense, parse_mode, LoadedConfig,
    Overrides, ProviderKind,
};

#[derive(Parser)]
#[command(name = "fnjail", version, about = "Red-team harness for LLM tool-calling APIs")]
struct Cli {
    /// Campaign configuration file (TOML).
    #[arg(long, global = true, default_value = "configs/mock.toml")]
    config: PathBuf,
    /// Render every request to disk and send nothing.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Force the mock provider with the given policy.
    #[arg(long, global = true, value_name = "POLICY")]
    mock: Option<String>,
    /// Override the number of content-type shots (1..=5).
    #[arg(long, global = true)]
    shots: Option<u32>,
    /// Override the tool-choice mode for every target.
    #[arg(long, global = true, value_name = "MODE")]
    mode: Option<String>,
    /// Override the defensive prompt position (user-prompt|function-description|none).
    #[arg(long, global = true, value_name = "POSITION")]
    defense_position: Option<String>,
    /// Hard cap on live provider requests for this run.
    #[arg(long, global = true)]
    max_requests: Option<u64>,
    /// Required acknowledgement before any live (non-mock) traffic is sent.
    #[arg(long, global = true)]
    i_understand_live: bool,
    /// Output directory (campaign runs) or output file (report/replay-judge).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate (or recall) candidate content types for every behavior.
    GenTypes,
    /// Print the assembled function definition for one behavior.
    Build {
        /// Behavior id (default: first in the dataset).
        #[arg(long)]
        behavior: Option<String>,
        /// Content-type label (default: first candidate).
        #[arg(long)]
        content_type: Option<String>,
    },
    /// Run the configured attack campaign.
    Attack,
    /// Run an ablation: chat-mode transfer or all-targets-auto.
    Ablate {
        #[arg(long, value_enum, default_value_t = AblationKind::ChatMode)]
        kind: AblationKind,
    },
    /// Run the campaign with the defensive prompt inserted.
    Defend {
        /// user-prompt | function-description
        #[arg(long)]
        position: String,
    },
    /// Render a markdown report from one or more summary.json files.
    Report {
        /// summary.json paths.
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
    },
    /// Re-adjudicate a records file with the heuristic judge (no network).
    ReplayJudge {
        records: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AblationKind {
    ChatMode,
    AutoMode,
}

#[derive(Parser)]
struct Invocation {
    #[command(flatten)]
    cli: Cli,
    #[command(subcommand)]
    command: Command,
}

/// Die silently on a closed pipe (`fnjail ... | head`) instead of panicking.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let invocation = Invocation::parse();
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("tokio runtime builds");
    match runtime.block_on(dispatch(invocation)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Config/pre-flight problems exit 2; everything else is also a
            // pre-run failure from the operator's point of view.
            ExitCode::from(2)
        }
    }
}

async fn dispatch(invocation: Invocation) -> Result<ExitCode> {
    let cli = invocation.cli;
    // `report` renders from summaries alone; no campaign config involved.
    if let Command::Report { summaries } = invocation.command {
        return report(&cli, summaries);
    }
    let mut loaded = load_config(&cli.config)?;
    let overrides = Overrides {
        shots: cli.shots,
        mode: cli.mode.as_deref().map(parse_mode).transpose()?,
        defense_position: cli
            .defense_position
            .as_deref()
            .map(parse_defense)
            .transpose()?,
        out: cli.out.clone(),
        max_requests: cli.max_requests,
        mock: cli.mock.clone(),
    };
    apply_overrides(&mut loaded, &overrides)?;

    match invocation.command {
        Command::GenTypes => gen_types(&cli, loaded).await,
        Command::Build {
            behavior,
            content_type,
        } => build_spec(loaded, behavior, content_type).await,
        Command::Attack => run(&cli, loaded).await,
        Command::Ablate { kind } => {
            match kind {
                AblationKind::ChatMode => loaded.campaign.attack_style = AttackStyle::ChatModeTransfer,
                AblationKind::AutoMode => {
                    for target in &mut loaded.campaign.targets {
                        target.mode = ModeChoice::Auto;
                    }
                }
            }
            run(&cli, loaded).await
        }
        Command::Defend { position } => {
            let position = parse_defense(&position)?
                .ok_or_else(|| anyhow::anyhow!("defend requires a concrete position"))?;
            loaded.campaign.defense = Some(position);
            run(&cli, loaded).await
        }
        Command::Report { .. } => unreachable!("handled before config load"),
        Command::ReplayJudge { records } => replay(&cli, loaded, records),
    }
}

/// Builds the outcome source, enforcing the live-traffic guard.
fn make_source(
    cli: &Cli,
    loaded: &LoadedConfig,
) -> Result<(Arc<dyn OutcomeSource>, Option<Arc<LiveTransport>>)> {
    match loaded.provider.kind {
        ProviderKind::Mock => {
            let policy = loaded.provider.mock_policy()?;
            Ok((Arc::new(MockTransport::new(policy)), None))
        }
        ProviderKind::Live => {
            if !cli.i_understand_live {
                bail!(
                    "this configuration sends live API traffic; re-run with --i-understand-live \
                     (and consider --max-requests)"
                );
            }
            let transport = Arc::new(LiveTransport::new(
                loaded.campaign.concurrency,
                loaded.campaign.max_requests,
            ));
            Ok((transport.clone(), Some(transport)))
        }
    }
}

fn write_manifest(campaign: &CampaignConfig) -> Result<()> {
    std::fs::create_dir_all(&campaign.output_dir)?;
    let manifest = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_sha256": config_sha256(campaign),
        "template_sha256": campaign.template_sha256(),
        "judge_prompt_sha256": campaign.judge.prompt_sha256(),
    });
    std::fs::write(
        campaign.output_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

fn exit_for(outputs: &CampaignOutputs) -> ExitCode {
    if outputs.result.error_attempts() > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

async fn run(cli: &Cli, loaded: LoadedConfig) -> Result<ExitCode> {
    if cli.dry_run {
        return dry_run(&loaded.campaign).await;
    }
    let (source, transport) = make_source(cli, &loaded)?;
    write_manifest(&loaded.campaign)?;
    let outputs = run_campaign(&loaded.campaign, source, transport)
        .await
        .map_err(map_campaign_error)?;
    for target in &outputs.result.targets {
        println!(
            "{}: ASR {:.0}% ({}/{} behaviors, {} attempts)",
            target.target_key,
            target.asr * 100.0,
            target.behaviors_jailbroken,
            target.behaviors_total,
            target.attempts_total,
        );
    }
    println!("records: {}", outputs.records_path.display());
    println!("summary: {}", outputs.summary_path.display());
    println!("report:  {}", outputs.report_path.display());
    Ok(exit_for(&outputs))
}

async fn dry_run(campaign: &CampaignConfig) -> Result<ExitCode> {
    write_manifest(campaign)?;
    let planned = plan_requests(campaign).await.map_err(map_campaign_error)?;
    let dir = campaign.output_dir.join("requests");
    std::fs::create_dir_all(&dir)?;
    let mut count = 0usize;
    for request in planned {
        let name = format!(
            "{}_{}_shot{}.json",
            request.target_key.replace(['|', '/'], "_"),
            request.behavior_id,
            request.shot_index
        );
        let body: serde_json::Value = serde_json::from_slice(&request.wire.body)?;
        let rendered = json!({
            "url": request.wire.url,
            "auth_header": request.wire.auth_header,
            "auth_env": request.wire.auth_env,
            "static_headers": request.wire.static_headers,
            "body": body,
        });
        std::fs::write(dir.join(name), serde_json::to_string_pretty(&rendered)?)?;
        count += 1;
    }
    println!("dry run: rendered {count} requests under {}", dir.display());
    Ok(ExitCode::SUCCESS)
}

async fn gen_types(cli: &Cli, loaded: LoadedConfig) -> Result<ExitCode> {
    let campaign = &loaded.campaign;
    let behaviors = campaign::preflight(campaign, false).map_err(map_campaign_error)?;
    let live = loaded.provider.kind == ProviderKind::Live;
    let transport = if live {
        if !cli.i_understand_live {
            bail!("generating content types against a live endpoint requires --i-understand-live");
        }
        Some(Arc::new(LiveTransport::new(
            campaign.concurrency,
            campaign.max_requests,
        )))
    } else {
        None
    };
    let by_id =
        campaign::gather_content_types(campaign, &behaviors, live, transport.as_deref())
            .await
            .map_err(map_campaign_error)?;
    write_manifest(campaign)?;
    let path = campaign.output_dir.join("typegen.jsonl");
    let cache = TypegenCache::new(&path);
    for behavior in &behaviors {
        let entry = &by_id[&behavior.id];
        cache.append(entry)?;
        println!(
            "{}: {} [{}]",
            behavior.id,
            entry
                .candidates
                .iter()
                .map(|c| c.param_name.as_str())
                .collect::<Vec<_>>()
                .join(", "),
            match entry.source {
                fnjail_core::TypegenSource::Generated => "generated",
                fnjail_core::TypegenSource::StaticFallback => "fallback",
            }
        );
    }
    println!("written: {}", path.display());
    Ok(ExitCode::SUCCESS)
}

async fn build_spec(
    loaded: LoadedConfig,
    behavior_id: Option<String>,
    content_type: Option<String>,
) -> Result<ExitCode> {
    let campaign = &loaded.campaign;
    let behaviors = campaign::preflight(campaign, false).map_err(map_campaign_error)?;
    let behavior: &HarmBehavior = match &behavior_id {
        Some(id) => behaviors
            .iter()
            .find(|b| &b.id == id)
            .with_context(|| format!("behavior {id:?} not in dataset"))?,
        None => &behaviors[0],
    };
    let candidates =
        campaign::gather_content_types(campaign, std::slice::from_ref(behavior), false, None)
            .await
            .map_err(map_campaign_error)?;
    let ctype = match &content_type {
        Some(label) => ContentType::new(label.clone())
            .map_err(|e| anyhow::anyhow!("invalid content type label: {e}"))?,
        None => candidates[&behavior.id].candidates[0].clone(),
    };
    let spec = build_jailbreak_function(behavior, &ctype, &campaign.template)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    println!("{}", serde_json::to_string_pretty(&spec)?);
    Ok(ExitCode::SUCCESS)
}

fn report(cli: &Cli, summaries: Vec<PathBuf>) -> Result<ExitCode> {
    let mut results = Vec::new();
    for path in &summaries {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read summary {}", path.display()))?;
        let result: CampaignResult = serde_json::from_str(&text)
            .with_context(|| format!("summary {} does not parse", path.display()))?;
        results.push(result);
    }
    let markdown = fnjail_core::render_report(&results);
    match &cli.out {
        Some(path) => std::fs::write(path, markdown)?,
        None => print!("{markdown}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn replay(cli: &Cli, loaded: LoadedConfig, records: PathBuf) -> Result<ExitCode> {
    let result = replay_judge(&records, &loaded.campaign).map_err(map_campaign_error)?;
    let summary = serde_json::to_string_pretty(&result)?;
    match &cli.out {
        Some(path) => std::fs::write(path, summary)?,
        None => println!("{summary}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn map_campaign_error(e: CampaignError) -> anyhow::Error {
    anyhow::anyhow!("{e}")
}
