//! Behavior dataset loading: CSV with a `goal` column (AdvBench layout) or a
//! plain one-behavior-per-line text file.

use std::path::Path;

use crate::campaign::CampaignError;
use crate::model::HarmBehavior;

/// Loads behaviors with stable ids assigned by data-row index (`b001`, ...).
/// Exact duplicate texts are dropped, keeping the first occurrence.
pub fn load_dataset(path: &Path) -> Result<Vec<HarmBehavior>, CampaignError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CampaignError::Config(format!("cannot read dataset {}: {e}", path.display()))
    })?;
    let first_line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let is_csv = first_line
        .split(',')
        .any(|field| field.trim().trim_matches('"').eq_ignore_ascii_case("goal"));

    let raw = if is_csv {
        parse_csv(&text)?
    } else {
        parse_lines(&text)
    };

    let mut behaviors: Vec<HarmBehavior> = Vec::with_capacity(raw.len());
    for (index, text) in raw.into_iter().enumerate() {
        if behaviors.iter().any(|b| b.text == text) {
            continue;
        }
        behaviors.push(HarmBehavior::new(format!("b{:03}", index + 1), text));
    }
    if behaviors.is_empty() {
        return Err(CampaignError::EmptyDataset);
    }
    Ok(behaviors)
}

fn parse_csv(text: &str) -> Result<Vec<String>, CampaignError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CampaignError::DatasetParse {
            line: 1,
            detail: e.to_string(),
        })?
        .clone();
    let goal_index = headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case("goal"))
        .ok_or_else(|| CampaignError::DatasetParse {
            line: 1,
            detail: "no `goal` column in header".to_string(),
        })?;

    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2; // header is line 1
        let record = record.map_err(|e| CampaignError::DatasetParse {
            line,
            detail: e.to_string(),
        })?;
        let goal = record
            .get(goal_index)
            .ok_or_else(|| CampaignError::DatasetParse {
                line,
                detail: "row is missing the goal column".to_string(),
            })?
            .trim()
            .to_string();
        if goal.is_empty() {
            return Err(CampaignError::DatasetParse {
                line,
                detail: "empty goal".to_string(),
            });
        }
        out.push(goal);
    }
    Ok(out)
}

fn parse_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}
