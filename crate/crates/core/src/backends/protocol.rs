//! JSON wire format of the five-endpoint backend protocol.
//!
//! | endpoint         | request                                   | response item            |
//! |------------------|-------------------------------------------|--------------------------|
//! | `/v1/classify`   | `{"texts":[..],"styles":[a,b]}`           | `{"probs":{..},"token_scores":[{"token","score"}]}` |
//! | `/v1/fill`       | `{"items":[{"masked","target_style"}]}`   | `{"text"}`               |
//! | `/v1/generate`   | `{"prompts":[..],"temperature","max_tokens"}` | `{"text"}`           |
//! | `/v1/embed`      | `{"texts":[..]}`                          | `{"vector":[..]}`        |
//! | `/v1/perplexity` | `{"texts":[..]}`                          | `{"ppl"}`                |
//!
//! Every response is `{"results":[item, ...]}`, one item per input, in order.
//! Classify texts are sent as their tokens joined by single spaces so the
//! server's whitespace words line up with the engine's tokens.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ClassifyResult, TokenScore};
use crate::error::{Error, Result};
use crate::masking::MaskedText;
use crate::text::{tokenize, StyleLabel, TokenSeq};

pub const CLASSIFY_PATH: &str = "/v1/classify";
pub const FILL_PATH: &str = "/v1/fill";
pub const GENERATE_PATH: &str = "/v1/generate";
pub const EMBED_PATH: &str = "/v1/embed";
pub const PERPLEXITY_PATH: &str = "/v1/perplexity";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyRequest {
    pub texts: Vec<String>,
    pub styles: [String; 2],
}

impl ClassifyRequest {
    pub fn new(texts: &[TokenSeq], styles: (&StyleLabel, &StyleLabel)) -> Self {
        ClassifyRequest {
            texts: texts.iter().map(|t| t.tokens().join(" ")).collect(),
            styles: [styles.0.to_string(), styles.1.to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyItem {
    pub probs: BTreeMap<String, f64>,
    pub token_scores: Vec<TokenScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FillRequest {
    pub items: Vec<FillRequestItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FillRequestItem {
    pub masked: String,
    pub target_style: String,
}

impl FillRequest {
    pub fn new(items: &[(MaskedText, StyleLabel)]) -> Self {
        FillRequest {
            items: items
                .iter()
                .map(|(m, style)| FillRequestItem {
                    masked: m.rendered(),
                    target_style: style.to_string(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRequest {
    pub prompts: Vec<String>,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextsRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextItem {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorItem {
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PplItem {
    pub ppl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results<T> {
    pub results: Vec<T>,
}

fn decode<T: DeserializeOwned>(backend: &'static str, body: &str) -> Result<Vec<T>> {
    serde_json::from_str::<Results<T>>(body)
        .map(|r| r.results)
        .map_err(|e| Error::MalformedResponse {
            backend,
            index: None,
            reason: e.to_string(),
        })
}

pub fn decode_classify_response(body: &str) -> Result<Vec<ClassifyResult>> {
    decode::<ClassifyItem>("classifier", body)?
        .into_iter()
        .enumerate()
        .map(|(index, item)| {
            let probs = item
                .probs
                .into_iter()
                .map(|(k, v)| StyleLabel::new(k).map(|k| (k, v)))
                .collect::<Result<BTreeMap<_, _>>>()
                .map_err(|e| Error::MalformedResponse {
                    backend: "classifier",
                    index: Some(index),
                    reason: e.to_string(),
                })?;
            Ok(ClassifyResult {
                probs,
                token_scores: item.token_scores,
            })
        })
        .collect()
}

pub fn decode_fill_response(body: &str) -> Result<Vec<TokenSeq>> {
    Ok(decode::<TextItem>("filler", body)?
        .into_iter()
        .map(|item| tokenize(&item.text))
        .collect())
}

pub fn decode_generate_response(body: &str) -> Result<Vec<String>> {
    Ok(decode::<TextItem>("generator", body)?
        .into_iter()
        .map(|item| item.text)
        .collect())
}

pub fn decode_embed_response(body: &str) -> Result<Vec<Vec<f64>>> {
    Ok(decode::<VectorItem>("embedder", body)?
        .into_iter()
        .map(|item| item.vector)
        .collect())
}

pub fn decode_perplexity_response(body: &str) -> Result<Vec<f64>> {
    Ok(decode::<PplItem>("ppl_scorer", body)?
        .into_iter()
        .map(|item| item.ppl)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_wire_example() {
        let body = r#"{"results":[{"probs":{"positive":0.119,"negative":0.881},"token_scores":[{"token":"it","score":0.0},{"token":"is","score":0.0},{"token":"awful","score":2.0}]}]}"#;
        let r = decode_classify_response(body).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].prob(&StyleLabel::new("negative").unwrap()), 0.881);
        assert_eq!(r[0].token_scores[2].score, 2.0);

        let req = ClassifyRequest::new(
            &[tokenize("it is awful")],
            (&StyleLabel::new("positive").unwrap(), &StyleLabel::new("negative").unwrap()),
        );
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"texts":["it is awful"],"styles":["positive","negative"]}"#
        );
    }

    #[test]
    fn fill_and_generate_wire_examples() {
        let req = FillRequest::new(&[(MaskedText::parse("it is [SLOT]"), StyleLabel::new("positive").unwrap())]);
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"items":[{"masked":"it is [SLOT]","target_style":"positive"}]}"#
        );
        let out = decode_fill_response(r#"{"results":[{"text":"it is wonderful"}]}"#).unwrap();
        assert_eq!(out[0].tokens(), ["it", "is", "wonderful"]);

        let req = GenerateRequest {
            prompts: vec!["...".into()],
            temperature: 0.0,
            max_tokens: 128,
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"prompts":["..."],"temperature":0.0,"max_tokens":128}"#
        );
    }

    #[test]
    fn malformed_bodies_are_backend_errors() {
        for body in ["", "{}", r#"{"results":{}}"#, r#"{"results":[{"ppl":"x"}]}"#] {
            assert!(matches!(
                decode_perplexity_response(body),
                Err(Error::MalformedResponse { .. })
            ));
        }
        assert!(decode_classify_response(r#"{"results":[{"probs":{"Bad Style":1.0},"token_scores":[]}]}"#).is_err());
        assert_eq!(decode_embed_response(r#"{"results":[{"vector":[0.1,0.2]}]}"#).unwrap()[0], [0.1, 0.2]);
    }
}
