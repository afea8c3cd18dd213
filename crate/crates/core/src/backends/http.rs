//! Blocking HTTP clients for the backend protocol.

use std::time::Duration;

use serde::Serialize;

use super::protocol::{self, ClassifyRequest, FillRequest, GenerateRequest, TextsRequest};
use super::{ClassifyResult, Classifier, Embedder, Filler, GenerationParams, Generator, PerplexityScorer, ScoreKind};
use crate::error::{Error, Result};
use crate::masking::MaskedText;
use crate::text::{StyleLabel, TokenSeq};

#[derive(Debug, Clone)]
pub struct HttpEndpoint {
    base_url: String,
    bearer_token: Option<String>,
    client: reqwest::blocking::Client,
    backend: &'static str,
}

impl HttpEndpoint {
    pub fn new(backend: &'static str, base_url: &str, bearer_token: Option<String>, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Config(format!("cannot build HTTP client: {e}")))?;
        Ok(HttpEndpoint {
            base_url: base_url.trim_end_matches('/').to_string(),
            bearer_token,
            client,
            backend,
        })
    }

    /// POSTs `body` as JSON and returns the response text. Transport
    /// failures are retried once; a non-2xx status is not retried.
    pub fn post<T: Serialize>(&self, path: &str, body: &T) -> Result<String> {
        let url = format!("{}{}", self.base_url, path);
        let send = || {
            let mut req = self.client.post(&url).json(body);
            if let Some(token) = &self.bearer_token {
                req = req.bearer_auth(token);
            }
            req.send()
        };
        let response = match send() {
            Ok(r) => r,
            Err(first) => {
                log::warn!("{} request to {url} failed ({first}); retrying once", self.backend);
                send().map_err(|e| Error::BackendUnreachable {
                    backend: self.backend,
                    reason: e.to_string(),
                })?
            }
        };
        let status = response.status();
        let text = response.text().map_err(|e| Error::BackendUnreachable {
            backend: self.backend,
            reason: e.to_string(),
        })?;
        if !status.is_success() {
            return Err(Error::MalformedResponse {
                backend: self.backend,
                index: None,
                reason: format!("HTTP {status}: {}", text.chars().take(200).collect::<String>()),
            });
        }
        Ok(text)
    }
}

pub struct HttpClassifier {
    endpoint: HttpEndpoint,
    score_kind: ScoreKind,
}

impl HttpClassifier {
    pub fn new(endpoint: HttpEndpoint, score_kind: ScoreKind) -> Self {
        HttpClassifier { endpoint, score_kind }
    }
}

impl Classifier for HttpClassifier {
    fn classify(&self, texts: &[TokenSeq], styles: (&StyleLabel, &StyleLabel)) -> Result<Vec<ClassifyResult>> {
        let body = self
            .endpoint
            .post(protocol::CLASSIFY_PATH, &ClassifyRequest::new(texts, styles))?;
        protocol::decode_classify_response(&body)
    }

    fn score_kind(&self) -> ScoreKind {
        self.score_kind
    }
}

pub struct HttpFiller(pub HttpEndpoint);

impl Filler for HttpFiller {
    fn fill(&self, items: &[(MaskedText, StyleLabel)]) -> Result<Vec<TokenSeq>> {
        let body = self.0.post(protocol::FILL_PATH, &FillRequest::new(items))?;
        protocol::decode_fill_response(&body)
    }
}

pub struct HttpGenerator(pub HttpEndpoint);

impl Generator for HttpGenerator {
    fn generate(&self, prompts: &[String], params: &GenerationParams) -> Result<Vec<String>> {
        let req = GenerateRequest {
            prompts: prompts.to_vec(),
            temperature: params.temperature,
            max_tokens: params.max_tokens,
        };
        let body = self.0.post(protocol::GENERATE_PATH, &req)?;
        protocol::decode_generate_response(&body)
    }
}

pub struct HttpEmbedder(pub HttpEndpoint);

impl Embedder for HttpEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let req = TextsRequest { texts: texts.to_vec() };
        let body = self.0.post(protocol::EMBED_PATH, &req)?;
        protocol::decode_embed_response(&body)
    }
}

pub struct HttpPerplexity(pub HttpEndpoint);

impl PerplexityScorer for HttpPerplexity {
    fn perplexity(&self, texts: &[String]) -> Result<Vec<f64>> {
        let req = TextsRequest { texts: texts.to_vec() };
        let body = self.0.post(protocol::PERPLEXITY_PATH, &req)?;
        protocol::decode_perplexity_response(&body)
    }
}
