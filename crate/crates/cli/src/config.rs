//! Config-file loading and flag overrides. Campaigns are experiments: the
//! config file is the replayable artifact, flags are one-off tweaks on top.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fnjail_core::campaign::{CampaignConfig, ModeChoice};
use fnjail_core::{DefensePosition, MockPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Mock,
    Live,
}

/// The `[provider]` section of the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSection {
    pub kind: ProviderKind,
    /// Mock policy spelling, e.g. `comply-only-if-forced`.
    pub policy: String,
}

impl Default for ProviderSection {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Mock,
            policy: "always-refuse".to_string(),
        }
    }
}

impl ProviderSection {
    pub fn mock_policy(&self) -> Result<MockPolicy> {
        self.policy
            .parse::<MockPolicy>()
            .map_err(|e| anyhow::anyhow!("invalid mock policy: {e}"))
    }
}

#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub campaign: CampaignConfig,
    pub provider: ProviderSection,
}

/// Reads the TOML config file; the `[provider]` section is CLI-level, the
/// rest is the campaign configuration.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut value: toml::Value = toml::from_str(&text)
        .with_context(|| format!("config {} is not valid TOML", path.display()))?;
    let provider = match value.as_table_mut().and_then(|t| t.remove("provider")) {
        Some(section) => section
            .try_into::<ProviderSection>()
            .context("invalid [provider] section")?,
        None => ProviderSection::default(),
    };
    let campaign: CampaignConfig = value
        .try_into()
        .context("invalid campaign configuration")?;
    Ok(LoadedConfig { campaign, provider })
}

/// Flag overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub shots: Option<u32>,
    pub mode: Option<ModeChoice>,
    pub defense_position: Option<Option<DefensePosition>>,
    pub out: Option<PathBuf>,
    pub max_requests: Option<u64>,
    pub mock: Option<String>,
}

pub fn apply_overrides(loaded: &mut LoadedConfig, overrides: &Overrides) -> Result<()> {
    if let Some(shots) = overrides.shots {
        loaded.campaign.shots = shots;
    }
    if let Some(mode) = overrides.mode {
        for target in &mut loaded.campaign.targets {
            target.mode = mode;
        }
    }
    if let Some(defense) = overrides.defense_position {
        loaded.campaign.defense = defense;
    }
    if let Some(out) = &overrides.out {
        loaded.campaign.output_dir = out.clone();
    }
    if let Some(max_requests) = overrides.max_requests {
        loaded.campaign.max_requests = Some(max_requests);
    }
    if let Some(policy) = &overrides.mock {
        loaded.provider.kind = ProviderKind::Mock;
        loaded.provider.policy = policy.clone();
        loaded.provider.mock_policy()?;
    }
    Ok(())
}

pub fn parse_mode(s: &str) -> Result<ModeChoice> {
    match s {
        "auto" => Ok(ModeChoice::Auto),
        "required" => Ok(ModeChoice::Required),
        "forced" => Ok(ModeChoice::Forced),
        "none" => Ok(ModeChoice::None),
        other => bail!("unknown mode {other:?}; expected auto|required|forced|none"),
    }
}

pub fn parse_defense(s: &str) -> Result<Option<DefensePosition>> {
    match s {
        "none" => Ok(None),
        "user-prompt" | "user-prompt-end" => Ok(Some(DefensePosition::UserPromptEnd)),
        "function-description" | "function-description-end" => {
            Ok(Some(DefensePosition::FunctionDescriptionEnd))
        }
        other => bail!(
            "unknown defense position {other:?}; expected user-prompt|function-description|none"
        ),
    }
}

/// Hash of the effective (post-override) campaign configuration.
pub fn config_sha256(campaign: &CampaignConfig) -> String {
    let bytes = serde_json::to_vec(campaign).expect("configs serialize");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(
            file,
            r#"
dataset = "data/behaviors.csv"

[[targets]]
dialect = "openai"
model = "gpt-4o"
mode = "forced"

[provider]
kind = "mock"
policy = "comply-only-if-forced"
"#
        )
        .unwrap();
        let loaded = load_config(file.path()).unwrap();
        assert_eq!(loaded.campaign.shots, 5);
        assert_eq!(loaded.campaign.targets.len(), 1);
        assert_eq!(loaded.provider.kind, ProviderKind::Mock);
        loaded.provider.mock_policy().unwrap();
    }

    #[test]
    fn overrides_take_effect() {
        let mut loaded = LoadedConfig {
            campaign: CampaignConfig::default(),
            provider: ProviderSection::default(),
        };
        let overrides = Overrides {
            shots: Some(1),
            defense_position: Some(Some(DefensePosition::UserPromptEnd)),
            mock: Some("always-comply".to_string()),
            ..Overrides::default()
        };
        apply_overrides(&mut loaded, &overrides).unwrap();
        assert_eq!(loaded.campaign.shots, 1);
        assert_eq!(
            loaded.campaign.defense,
            Some(DefensePosition::UserPromptEnd)
        );
        assert_eq!(loaded.provider.policy, "always-comply");
    }
}
