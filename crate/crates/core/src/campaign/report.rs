//! Markdown report rendering: a methods × models success-rate table, plus an
//! insertion-position × models table when defensive runs are present.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::attack::{AttackStyle, DefensePosition};
use crate::campaign::{CampaignResult, TargetSummary};

fn percent(asr: f64) -> String {
    format!("{}%", (asr * 100.0).round() as i64)
}

fn style_label(style: AttackStyle) -> &'static str {
    match style {
        AttackStyle::FunctionCall => "function-call",
        AttackStyle::ChatModeTransfer => "chat-transfer",
    }
}

fn defense_row_label(defense: Option<DefensePosition>) -> &'static str {
    match defense {
        None => "No defensive prompt",
        Some(position) => position.report_label(),
    }
}

fn markdown_table(header: &[String], rows: &[(String, Vec<String>)]) -> String {
    let mut out = String::new();
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for (label, cells) in rows {
        out.push_str(&format!("| {} | {} |\n", label, cells.join(" | ")));
    }
    out
}

fn collect_models(summaries: &[&TargetSummary]) -> Vec<String> {
    let set: BTreeSet<String> = summaries.iter().map(|s| s.model.clone()).collect();
    set.into_iter().collect()
}

/// Renders one markdown report over any number of campaign results.
/// Percentages are rounded to whole percent.
pub fn render_report(results: &[CampaignResult]) -> String {
    let summaries: Vec<&TargetSummary> =
        results.iter().flat_map(|r| r.targets.iter()).collect();
    let mut out = String::from("# Attack campaign report\n");

    // Methods × models. One row per (style, shots, mode) over undefended runs.
    let undefended: Vec<&TargetSummary> = summaries
        .iter()
        .copied()
        .filter(|s| s.defense.is_none())
        .collect();
    if !undefended.is_empty() {
        let models = collect_models(&undefended);
        let mut rows: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for summary in &undefended {
            let label = format!(
                "{} ({}-shot, {} mode)",
                style_label(summary.attack_style),
                summary.shots,
                summary.mode
            );
            rows.entry(label)
                .or_default()
                .insert(summary.model.clone(), summary.asr);
        }
        let mut header = vec!["Method".to_string()];
        header.extend(models.clone());
        let table_rows: Vec<(String, Vec<String>)> = rows
            .into_iter()
            .map(|(label, cells)| {
                let row = models
                    .iter()
                    .map(|m| cells.get(m).map_or("-".to_string(), |&a| percent(a)))
                    .collect();
                (label, row)
            })
            .collect();
        out.push_str("\n## Attack success rate\n\n");
        out.push_str(&markdown_table(&header, &table_rows));
    }

    // Insertion-position table, only when defended runs exist.
    if summaries.iter().any(|s| s.defense.is_some()) {
        let models = collect_models(&summaries);
        let positions = [
            None,
            Some(DefensePosition::UserPromptEnd),
            Some(DefensePosition::FunctionDescriptionEnd),
        ];
        let mut table_rows = Vec::new();
        for defense in positions {
            let matching: Vec<&TargetSummary> = summaries
                .iter()
                .copied()
                .filter(|s| s.defense == defense)
                .collect();
            if matching.is_empty() {
                continue;
            }
            let cells = models
                .iter()
                .map(|model| {
                    matching
                        .iter()
                        .find(|s| &s.model == model)
                        .map_or("-".to_string(), |s| percent(s.asr))
                })
                .collect();
            table_rows.push((defense_row_label(defense).to_string(), cells));
        }
        let mut header = vec!["Insert position".to_string()];
        header.extend(models);
        out.push_str("\n## Defensive prompt insertion positions\n\n");
        out.push_str(&markdown_table(&header, &table_rows));
    }

    out
}
