//! Live HTTP transport: credential injection, retry with backoff on transient
//! statuses, a per-provider in-flight cap, and an optional request budget.

use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;

use super::{parse_outcome, ProviderError, ProviderOutcome, ProviderTarget, WireRequest};
use crate::attack::AttackRequestPlan;

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
const MAX_RETRIES: u32 = 3;
const BASE_BACKOFF: Duration = Duration::from_millis(500);

/// Anything that can turn a rendered request into an outcome: the live
/// transport or the offline mock. `call_index` is the 1-based position of
/// this call within one behavior's shot loop.
#[async_trait]
pub trait OutcomeSource: Send + Sync {
    async fn fetch(
        &self,
        plan: &AttackRequestPlan,
        target: &ProviderTarget,
        wire: &WireRequest,
        call_index: u32,
    ) -> ProviderOutcome;

    fn is_live(&self) -> bool;
}

/// An OpenAI-compatible chat endpoint used for auxiliary calls (content-type
/// generation, LLM judging).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub endpoint: String,
    pub model: String,
    pub auth_env: String,
}

pub struct LiveTransport {
    client: reqwest::Client,
    permits: Arc<Semaphore>,
    /// Remaining request budget; `None` means unlimited.
    budget: Option<AtomicI64>,
}

impl LiveTransport {
    pub fn new(max_in_flight: usize, max_requests: Option<u64>) -> Self {
        let client = reqwest::Client::builder()
            .timeout(DEFAULT_TIMEOUT)
            .build()
            .expect("reqwest client builds");
        Self {
            client,
            permits: Arc::new(Semaphore::new(max_in_flight.max(1))),
            budget: max_requests.map(|n| AtomicI64::new(n as i64)),
        }
    }

    fn take_budget(&self) -> Result<(), ProviderError> {
        if let Some(budget) = &self.budget {
            if budget.fetch_sub(1, Ordering::SeqCst) <= 0 {
                return Err(ProviderError::Transport(
                    "request budget exhausted".to_string(),
                ));
            }
        }
        Ok(())
    }

    async fn send_raw(&self, wire: &WireRequest) -> Result<(u16, Vec<u8>), ProviderError> {
        let key = std::env::var(&wire.auth_env)
            .map_err(|_| ProviderError::MissingApiKey(wire.auth_env.clone()))?;
        let _permit = self
            .permits
            .acquire()
            .await
            .map_err(|e| ProviderError::Transport(e.to_string()))?;

        let mut last_err = String::new();
        for attempt in 0..=MAX_RETRIES {
            if attempt > 0 {
                tokio::time::sleep(BASE_BACKOFF * 2u32.pow(attempt - 1)).await;
            }
            let mut request = self
                .client
                .post(&wire.url)
                .header(
                    wire.auth_header.as_str(),
                    format!("{}{}", wire.auth_prefix, key),
                )
                .body(wire.body.clone());
            for (name, value) in &wire.static_headers {
                request = request.header(name.as_str(), value.as_str());
            }
            match request.send().await {
                Ok(response) => {
                    let status = response.status().as_u16();
                    let retryable = status == 429 || (500..600).contains(&status);
                    let bytes = response
                        .bytes()
                        .await
                        .map(|b| b.to_vec())
                        .unwrap_or_default();
                    if retryable && attempt < MAX_RETRIES {
                        last_err = format!("http {status}");
                        continue;
                    }
                    return Ok((status, bytes));
                }
                Err(e) => {
                    last_err = e.to_string();
                    if attempt < MAX_RETRIES {
                        continue;
                    }
                }
            }
        }
        Err(ProviderError::Transport(format!(
            "gave up after {MAX_RETRIES} retries: {last_err}"
        )))
    }
}

#[async_trait]
impl OutcomeSource for LiveTransport {
    async fn fetch(
        &self,
        _plan: &AttackRequestPlan,
        target: &ProviderTarget,
        wire: &WireRequest,
        _call_index: u32,
    ) -> ProviderOutcome {
        if let Err(e) = self.take_budget() {
            return ProviderOutcome::TransportError { detail: e.to_string() };
        }
        match self.send_raw(wire).await {
            Ok((status, body)) => match parse_outcome(target.dialect, &body, status) {
                Ok(outcome) => outcome,
                Err(e) => ProviderOutcome::TransportError { detail: e.to_string() },
            },
            Err(e) => ProviderOutcome::TransportError { detail: e.to_string() },
        }
    }

    fn is_live(&self) -> bool {
        true
    }
}

/// One-shot completion against an OpenAI-compatible chat endpoint. Used by
/// the content-type generator and the LLM judge; attack traffic goes through
/// [`OutcomeSource`] instead.
pub async fn chat_complete(
    transport: &LiveTransport,
    endpoint: &EndpointConfig,
    prompt: &str,
) -> Result<String, ProviderError> {
    let body = json!({
        "model": endpoint.model,
        "messages": [{"role": "user", "content": prompt}],
    });
    let wire = WireRequest {
        url: endpoint.endpoint.clone(),
        body: serde_json::to_vec(&body).expect("chat body serializes"),
        auth_header: "authorization".to_string(),
        auth_prefix: "Bearer ".to_string(),
        auth_env: endpoint.auth_env.clone(),
        static_headers: vec![("content-type".to_string(), "application/json".to_string())],
    };
    transport.take_budget()?;
    let (status, bytes) = transport.send_raw(&wire).await?;
    if !(200..300).contains(&status) {
        return Err(ProviderError::Transport(format!(
            "chat endpoint returned http {status}"
        )));
    }
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| ProviderError::Transport(e.to_string()))?;
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| ProviderError::Transport("chat reply carried no content".to_string()))
}
