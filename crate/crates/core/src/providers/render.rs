//! Plan → wire-request renderers for the three dialects.
//!
//! Bodies are built as `serde_json` values; the default map keeps keys in
//! sorted order, so serialization is canonical and byte-stable for a given
//! (plan, target) pair.

use serde_json::{json, Value};

use super::{Dialect, ProviderError, ProviderTarget, WireRequest};
use crate::attack::{AttackRequestPlan, AttackStyle, JailbreakFunctionSpec};
use crate::model::ToolChoiceMode;

/// Anthropic API version header sent with every Claude-dialect request.
const ANTHROPIC_VERSION: &str = "2023-06-01";
/// Claude requires an explicit completion budget; generous enough for the
/// minimum word count the template demands.
const CLAUDE_MAX_TOKENS: u64 = 1024;

/// The spec in OpenAI tool format. Also used by the chat-mode ablation, which
/// pastes this exact JSON into the user prompt.
pub fn openai_tool_json(spec: &JailbreakFunctionSpec) -> Value {
    json!({
        "type": "function",
        "function": {
            "name": spec.name,
            "description": spec.description,
            "parameters": {
                "type": "object",
                "properties": {
                    &spec.arg_name: {
                        "type": "string",
                        "description": spec.arg_description,
                    }
                },
                "required": spec.required,
            }
        }
    })
}

fn claude_tool_json(spec: &JailbreakFunctionSpec) -> Value {
    json!({
        "name": spec.name,
        "description": spec.description,
        "input_schema": {
            "type": "object",
            "properties": {
                &spec.arg_name: {
                    "type": "string",
                    "description": spec.arg_description,
                }
            },
            "required": spec.required,
        }
    })
}

fn gemini_tool_json(spec: &JailbreakFunctionSpec) -> Value {
    json!({
        "function_declarations": [{
            "name": spec.name,
            "description": spec.description,
            "parameters": {
                "type": "OBJECT",
                "properties": {
                    &spec.arg_name: {
                        "type": "STRING",
                        "description": spec.arg_description,
                    }
                },
                "required": spec.required,
            }
        }]
    })
}

fn openai_tool_choice(mode: &ToolChoiceMode) -> Value {
    match mode {
        ToolChoiceMode::Auto => json!("auto"),
        ToolChoiceMode::Required => json!("required"),
        ToolChoiceMode::Forced(name) => {
            json!({"type": "function", "function": {"name": name}})
        }
        ToolChoiceMode::None => json!("none"),
    }
}

fn claude_tool_choice(mode: &ToolChoiceMode) -> Result<Value, ProviderError> {
    match mode {
        ToolChoiceMode::Auto => Ok(json!({"type": "auto"})),
        ToolChoiceMode::Required => Ok(json!({"type": "any"})),
        ToolChoiceMode::Forced(name) => Ok(json!({"type": "tool", "name": name})),
        // Claude's API offers auto/any/tool only; refusing beats pretending.
        ToolChoiceMode::None => Err(ProviderError::UnsupportedMode {
            dialect: Dialect::Claude,
            mode: "none".to_string(),
        }),
    }
}

fn gemini_tool_config(mode: &ToolChoiceMode) -> Value {
    // Gemini has no dedicated forced mode; ANY restricted to the single
    // offered function is the sanctioned emulation.
    let config = match mode {
        ToolChoiceMode::Auto => json!({"mode": "AUTO"}),
        ToolChoiceMode::Required => json!({"mode": "ANY"}),
        ToolChoiceMode::Forced(name) => {
            json!({"mode": "ANY", "allowed_function_names": [name]})
        }
        ToolChoiceMode::None => json!({"mode": "NONE"}),
    };
    json!({ "function_calling_config": config })
}

fn build_body(plan: &AttackRequestPlan, target: &ProviderTarget) -> Result<Value, ProviderError> {
    let attach_tools = plan.style == AttackStyle::FunctionCall;
    let body = match target.dialect {
        Dialect::OpenAi => {
            let mut body = json!({
                "model": target.model,
                "messages": [{"role": "user", "content": plan.user_prompt}],
            });
            if attach_tools {
                body["tools"] = json!([openai_tool_json(&plan.function)]);
                body["tool_choice"] = openai_tool_choice(&plan.mode);
            }
            body
        }
        Dialect::Claude => {
            let mut body = json!({
                "model": target.model,
                "max_tokens": CLAUDE_MAX_TOKENS,
                "messages": [{"role": "user", "content": plan.user_prompt}],
            });
            if attach_tools {
                body["tools"] = json!([claude_tool_json(&plan.function)]);
                body["tool_choice"] = claude_tool_choice(&plan.mode)?;
            }
            body
        }
        Dialect::Gemini => {
            let mut body = json!({
                "contents": [{"role": "user", "parts": [{"text": plan.user_prompt}]}],
            });
            if attach_tools {
                body["tools"] = json!([gemini_tool_json(&plan.function)]);
                body["tool_config"] = gemini_tool_config(&plan.mode);
            }
            body
        }
    };
    Ok(body)
}

/// Renders a plan into the dialect's native wire format. Deterministic: the
/// same (plan, target) renders to identical bytes every time.
pub fn render_request(
    plan: &AttackRequestPlan,
    target: &ProviderTarget,
) -> Result<WireRequest, ProviderError> {
    // Reject unsupported modes even in chat-mode ablations, so a target list
    // is either valid for every style or rejected up front.
    if !target.dialect.supports_mode(&plan.mode) {
        return Err(ProviderError::UnsupportedMode {
            dialect: target.dialect,
            mode: plan.mode.slug().to_string(),
        });
    }
    let body = build_body(plan, target)?;
    let body_bytes = serde_json::to_vec(&body).expect("request bodies serialize");

    let (url, auth_header, auth_prefix, mut static_headers) = match target.dialect {
        Dialect::OpenAi => (
            target.endpoint.clone(),
            "authorization",
            "Bearer ",
            Vec::new(),
        ),
        Dialect::Claude => (
            target.endpoint.clone(),
            "x-api-key",
            "",
            vec![(
                "anthropic-version".to_string(),
                ANTHROPIC_VERSION.to_string(),
            )],
        ),
        Dialect::Gemini => (
            format!(
                "{}/models/{}:generateContent",
                target.endpoint.trim_end_matches('/'),
                target.model
            ),
            "x-goog-api-key",
            "",
            Vec::new(),
        ),
    };
    static_headers.push(("content-type".to_string(), "application/json".to_string()));

    Ok(WireRequest {
        url,
        body: body_bytes,
        auth_header: auth_header.to_string(),
        auth_prefix: auth_prefix.to_string(),
        auth_env: target.auth_env.clone(),
        static_headers,
    })
}
