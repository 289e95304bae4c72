//! Response-body → outcome parsers for the three dialects.

use std::collections::BTreeMap;

use serde_json::Value;

use super::{Dialect, ProviderError, ProviderOutcome};

/// Reduces a raw provider response to a [`ProviderOutcome`].
///
/// Only the first tool/function call is considered — the crafted function is
/// always the sole tool offered. Dialect-specific safety-block signals map to
/// `SafetyBlocked`; ordinary messages fall back to `PlainText`. Non-2xx
/// statuses become `TransportError` outcomes; a 2xx body that is not JSON is
/// a `MalformedResponse` error.
pub fn parse_outcome(
    dialect: Dialect,
    body: &[u8],
    http_status: u16,
) -> Result<ProviderOutcome, ProviderError> {
    if !(200..300).contains(&http_status) {
        let snippet = String::from_utf8_lossy(&body[..body.len().min(300)]).into_owned();
        return Ok(ProviderOutcome::TransportError {
            detail: format!("http {http_status}: {snippet}"),
        });
    }
    let value: Value =
        serde_json::from_slice(body).map_err(|e| ProviderError::MalformedResponse {
            dialect,
            status: http_status,
            detail: e.to_string(),
        })?;
    let raw_body = String::from_utf8_lossy(body).into_owned();
    let outcome = match dialect {
        Dialect::OpenAi => parse_openai(&value, raw_body),
        Dialect::Claude => parse_claude(&value, raw_body),
        Dialect::Gemini => parse_gemini(&value, raw_body),
    };
    Ok(outcome)
}

/// Stringify a JSON argument value: strings pass through, everything else is
/// kept as its JSON text so nothing is lost for the judge.
fn argument_to_string(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn arguments_from_object(object: &Value) -> BTreeMap<String, String> {
    object
        .as_object()
        .map(|map| {
            map.iter()
                .map(|(k, v)| (k.clone(), argument_to_string(v)))
                .collect()
        })
        .unwrap_or_default()
}

fn parse_openai(value: &Value, raw_body: String) -> ProviderOutcome {
    let message = &value["choices"][0]["message"];
    let finish_reason = value["choices"][0]["finish_reason"].as_str().unwrap_or("");
    if finish_reason == "content_filter" {
        return ProviderOutcome::SafetyBlocked {
            reason: "content_filter".to_string(),
        };
    }
    if let Some(call) = message["tool_calls"].as_array().and_then(|c| c.first()) {
        let function = &call["function"];
        let name = function["name"].as_str().unwrap_or_default().to_string();
        // `arguments` is a JSON document inside a string. Models occasionally
        // emit broken JSON there; surface it as plain text so the judge still
        // sees the content instead of the attempt dying as an error.
        let arguments_raw = function["arguments"].as_str().unwrap_or_default();
        return match serde_json::from_str::<Value>(arguments_raw) {
            Ok(parsed) if parsed.is_object() => ProviderOutcome::ToolCall {
                name,
                arguments: arguments_from_object(&parsed),
                raw_body,
            },
            _ => ProviderOutcome::PlainText {
                text: arguments_raw.to_string(),
            },
        };
    }
    ProviderOutcome::PlainText {
        text: message["content"].as_str().unwrap_or_default().to_string(),
    }
}

fn parse_claude(value: &Value, raw_body: String) -> ProviderOutcome {
    let stop_reason = value["stop_reason"].as_str().unwrap_or("");
    if stop_reason == "refusal" {
        // API-level classifier stop, distinct from a polite in-text refusal.
        return ProviderOutcome::SafetyBlocked {
            reason: "refusal".to_string(),
        };
    }
    let blocks = value["content"].as_array().cloned().unwrap_or_default();
    if let Some(tool_use) = blocks.iter().find(|b| b["type"] == "tool_use") {
        return ProviderOutcome::ToolCall {
            name: tool_use["name"].as_str().unwrap_or_default().to_string(),
            arguments: arguments_from_object(&tool_use["input"]),
            raw_body,
        };
    }
    let text: Vec<&str> = blocks
        .iter()
        .filter(|b| b["type"] == "text")
        .filter_map(|b| b["text"].as_str())
        .collect();
    ProviderOutcome::PlainText {
        text: text.join("\n"),
    }
}

fn parse_gemini(value: &Value, raw_body: String) -> ProviderOutcome {
    if let Some(reason) = value["promptFeedback"]["blockReason"].as_str() {
        return ProviderOutcome::SafetyBlocked {
            reason: reason.to_string(),
        };
    }
    let candidate = &value["candidates"][0];
    let finish_reason = candidate["finishReason"].as_str().unwrap_or("");
    if matches!(finish_reason, "SAFETY" | "PROHIBITED_CONTENT" | "BLOCKLIST") {
        return ProviderOutcome::SafetyBlocked {
            reason: finish_reason.to_string(),
        };
    }
    let parts = candidate["content"]["parts"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    if let Some(call) = parts.iter().find_map(|p| p.get("functionCall")) {
        return ProviderOutcome::ToolCall {
            name: call["name"].as_str().unwrap_or_default().to_string(),
            arguments: arguments_from_object(&call["args"]),
            raw_body,
        };
    }
    let text: Vec<&str> = parts.iter().filter_map(|p| p["text"].as_str()).collect();
    ProviderOutcome::PlainText {
        text: text.join("\n"),
    }
}
