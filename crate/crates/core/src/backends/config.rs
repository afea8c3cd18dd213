use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::http::{HttpClassifier, HttpEmbedder, HttpEndpoint, HttpFiller, HttpGenerator, HttpPerplexity};
use super::mock::{
    train_mock_mask_predictor, AntonymGenerator, HashEmbedder, LexiconClassifier, Lexicon, SubstitutionTable,
    TemplateFiller, UnigramScorer,
};
use super::{BackendSet, Classifier, Embedder, Filler, Generator, PerplexityScorer, ScoreKind};
use crate::align::SignalItem;
use crate::error::{Error, Result};
use crate::text::{StyleLabel, TokenSeq};
use crate::toyvolt;

/// One role's endpoint: `{"kind":"http","url":...}` or `{"kind":"<mock>", ...params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub classifier: EndpointConfig,
    pub filler: EndpointConfig,
    pub generator: EndpointConfig,
    pub embedder: EndpointConfig,
    pub ppl_scorer: EndpointConfig,
}

impl BackendConfig {
    /// All-mock configuration over the bundled toyvolt lexicon and corpus.
    pub fn toyvolt() -> Self {
        let preset = |kind: &str| EndpointConfig {
            kind: kind.to_string(),
            url: None,
            params: Map::from_iter([("preset".to_string(), Value::from("toyvolt"))]),
        };
        BackendConfig {
            classifier: preset("lexicon"),
            filler: preset("template"),
            generator: preset("antonym"),
            embedder: EndpointConfig {
                kind: "hash".into(),
                url: None,
                params: Map::new(),
            },
            ppl_scorer: preset("unigram"),
        }
    }
}

pub fn parse_backend_config(text: &str) -> Result<BackendConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("backend config: {e}")))
}

struct Params<'a> {
    role: &'static str,
    cfg: &'a EndpointConfig,
    base: &'a Path,
}

impl Params<'_> {
    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Config(format!("{} ({}): {msg}", self.role, self.cfg.kind))
    }

    fn str(&self, key: &str) -> Result<Option<&str>> {
        match self.cfg.params.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(self.err(format!("{key} must be a string"))),
        }
    }

    fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.str(key)?.map(|p| self.base.join(p)))
    }

    fn bool(&self, key: &str) -> Result<bool> {
        match self.cfg.params.get(key) {
            None => Ok(false),
            Some(Value::Bool(b)) => Ok(*b),
            Some(_) => Err(self.err(format!("{key} must be a boolean"))),
        }
    }

    fn uint(&self, key: &str) -> Result<Option<u64>> {
        match self.cfg.params.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(Some)
                .ok_or_else(|| self.err(format!("{key} must be a non-negative integer"))),
        }
    }

    fn pairs(&self, key: &str) -> Result<Vec<(String, String)>> {
        let Some(value) = self.cfg.params.get(key) else {
            return Ok(Vec::new());
        };
        let parsed: Vec<(String, String)> =
            serde_json::from_value(value.clone()).map_err(|e| self.err(format!("{key}: {e}")))?;
        Ok(parsed)
    }

    fn read(&self, path: &Path) -> Result<String> {
        std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
    }

    fn lexicon(&self) -> Result<Lexicon> {
        match self.str("preset")? {
            Some("toyvolt") => return Ok(toyvolt::lexicon()),
            Some("demo") => return Ok(Lexicon::demo()),
            Some(other) => return Err(self.err(format!("unknown preset {other:?}"))),
            None => {}
        }
        let pole = self
            .str("pole")?
            .ok_or_else(|| self.err("needs \"preset\" or \"pole\" + \"weights\""))?;
        let pole = StyleLabel::new(pole)?;
        let weights: BTreeMap<String, f64> = self
            .cfg
            .params
            .get("weights")
            .map(|v| serde_json::from_value(v.clone()))
            .transpose()
            .map_err(|e| self.err(format!("weights: {e}")))?
            .ok_or_else(|| self.err("missing weights"))?;
        Ok(Lexicon::new(pole, weights))
    }

    fn endpoint(&self) -> Result<HttpEndpoint> {
        let url = self.cfg.url.as_deref().ok_or_else(|| self.err("http backend needs a url"))?;
        let token = match self.str("bearer_token_env")? {
            Some(var) => Some(std::env::var(var).map_err(|_| self.err(format!("environment variable {var} is not set")))?),
            None => None,
        };
        let timeout = Duration::from_secs(self.uint("timeout_secs")?.unwrap_or(120));
        HttpEndpoint::new(self.role, url, token, timeout)
    }
}

fn classifier(p: &Params) -> Result<Arc<dyn Classifier>> {
    Ok(match p.cfg.kind.as_str() {
        "http" => {
            let kind = match p.str("score_kind")? {
                None | Some("attention") => ScoreKind::Attention,
                Some("mask-probability") => ScoreKind::MaskProbability,
                Some(other) => return Err(p.err(format!("unknown score_kind {other:?}"))),
            };
            Arc::new(HttpClassifier::new(p.endpoint()?, kind))
        }
        "lexicon" => Arc::new(LexiconClassifier::new(p.lexicon()?)),
        "mask-predictor" => {
            let path = p.path("d1")?.ok_or_else(|| p.err("needs a \"d1\" JSONL path"))?;
            let items = SignalItem::read_jsonl(&p.read(&path)?)?;
            Arc::new(train_mock_mask_predictor(&items)?)
        }
        other => return Err(p.err(format!("unknown classifier kind {other:?}"))),
    })
}

fn filler(p: &Params) -> Result<Arc<dyn Filler>> {
    Ok(match p.cfg.kind.as_str() {
        "http" => Arc::new(HttpFiller(p.endpoint()?)),
        "template" => Arc::new(TemplateFiller::new(p.lexicon()?)),
        other => return Err(p.err(format!("unknown filler kind {other:?}"))),
    })
}

fn generator(p: &Params) -> Result<Arc<dyn Generator>> {
    Ok(match p.cfg.kind.as_str() {
        "http" => Arc::new(HttpGenerator(p.endpoint()?)),
        "antonym" => {
            let mut g = match p.str("preset")? {
                Some("toyvolt") => toyvolt::generator(),
                Some("demo") => AntonymGenerator::demo(),
                Some(other) => return Err(p.err(format!("unknown preset {other:?}"))),
                None => AntonymGenerator::default(),
            };
            for (a, b) in p.pairs("pairs")? {
                g.table.insert_pair(&a, &b);
            }
            for (a, b) in p.pairs("oneway")? {
                g.table.insert(&a, &b);
            }
            let mut refine = SubstitutionTable::new();
            for (a, b) in p.pairs("refine")? {
                refine.insert(&a, &b);
            }
            if !refine.is_empty() {
                g.refine = refine;
            }
            g.echo = p.bool("echo")?;
            Arc::new(g)
        }
        other => return Err(p.err(format!("unknown generator kind {other:?}"))),
    })
}

fn embedder(p: &Params) -> Result<Arc<dyn Embedder>> {
    Ok(match p.cfg.kind.as_str() {
        "http" => Arc::new(HttpEmbedder(p.endpoint()?)),
        "hash" => {
            let dim = p.uint("dim")?.unwrap_or(HashEmbedder::DEFAULT_DIM as u64);
            Arc::new(HashEmbedder::new(dim as usize)?)
        }
        other => return Err(p.err(format!("unknown embedder kind {other:?}"))),
    })
}

fn ppl_scorer(p: &Params) -> Result<Arc<dyn PerplexityScorer>> {
    Ok(match p.cfg.kind.as_str() {
        "http" => Arc::new(HttpPerplexity(p.endpoint()?)),
        "unigram" => {
            if let Some(preset) = p.str("preset")? {
                if preset != "toyvolt" {
                    return Err(p.err(format!("unknown preset {preset:?}")));
                }
                let train = toyvolt::train_corpora();
                let all: Vec<&TokenSeq> = train.iter().flat_map(|c| &c.sentences).collect();
                Arc::new(UnigramScorer::fit(all))
            } else if let Some(path) = p.path("corpus")? {
                Arc::new(UnigramScorer::fit_text(&p.read(&path)?))
            } else if let Some(text) = p.str("text")? {
                Arc::new(UnigramScorer::fit_text(text))
            } else {
                return Err(p.err("needs \"preset\", \"corpus\" or \"text\""));
            }
        }
        other => return Err(p.err(format!("unknown ppl_scorer kind {other:?}"))),
    })
}

pub(super) fn resolve(config: &BackendConfig, base: &Path) -> Result<BackendSet> {
    let p = |role, cfg| Params { role, cfg, base };
    let mut set = BackendSet::new(
        classifier(&p("classifier", &config.classifier))?,
        filler(&p("filler", &config.filler))?,
        generator(&p("generator", &config.generator))?,
        embedder(&p("embedder", &config.embedder))?,
        ppl_scorer(&p("ppl_scorer", &config.ppl_scorer))?,
    );
    set.set_kinds(BTreeMap::from([
        ("classifier", config.classifier.kind.clone()),
        ("filler", config.filler.kind.clone()),
        ("generator", config.generator.kind.clone()),
        ("embedder", config.embedder.kind.clone()),
        ("ppl_scorer", config.ppl_scorer.kind.clone()),
    ]));
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_config() {
        let text = r#"{
            "classifier": {"kind": "http", "url": "http://localhost:8080", "score_kind": "attention"},
            "filler": {"kind": "template", "pole": "positive", "weights": {"awful": -2, "wonderful": 2}},
            "generator": {"kind": "antonym", "preset": "demo", "refine": [["good", "wonderful"]]},
            "embedder": {"kind": "hash", "dim": 32},
            "ppl_scorer": {"kind": "unigram", "text": "a a a b"}
        }"#;
        let cfg = parse_backend_config(text).unwrap();
        assert_eq!(cfg.classifier.url.as_deref(), Some("http://localhost:8080"));
        assert_eq!(cfg.filler.params["pole"], "positive");
        let set = BackendSet::from_config(&cfg, Path::new(".")).unwrap();
        assert_eq!(set.kinds()["classifier"], "http");
        assert_eq!(set.kinds()["embedder"], "hash");
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(parse_backend_config("{}").is_err());
        let mut cfg = BackendConfig::toyvolt();
        cfg.embedder.kind = "nope".into();
        assert!(BackendSet::from_config(&cfg, Path::new(".")).unwrap_err().is_config());
        let mut cfg = BackendConfig::toyvolt();
        cfg.classifier = EndpointConfig {
            kind: "http".into(),
            url: None,
            params: Map::new(),
        };
        assert!(BackendSet::from_config(&cfg, Path::new(".")).is_err());
        let text = serde_json::to_string(&BackendConfig::toyvolt()).unwrap().replace("}}", "},\"extra\":{}}");
        assert!(parse_backend_config(&text).is_err());
    }

    #[test]
    fn toyvolt_config_round_trips() {
        let cfg = BackendConfig::toyvolt();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(parse_backend_config(&text).unwrap(), cfg);
        BackendSet::from_config(&cfg, Path::new(".")).unwrap();
    }
}
