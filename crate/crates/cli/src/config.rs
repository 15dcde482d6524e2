//! Settings from the config file, environment and flags.
//!
//! Flags and environment variables are resolved by clap (a flag beats its
//! variable); whatever is still unset falls back to the TOML file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use accnote::gateway::{EndpointConfig, RetryPolicy};
use accnote::PipelineConfig;
use anyhow::{bail, Context};
use serde::Deserialize;

pub const DEFAULT_CACHE: &str = "accnote_cache.jsonl";

/// Keys accepted in the `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    pub chat_model: Option<String>,
    pub embed_model: Option<String>,
    pub organizer_model: Option<String>,
    pub reasoner_model: Option<String>,
    pub judge_model: Option<String>,
    pub temperature: Option<f32>,
    pub reasoner_max_tokens: Option<u32>,
    pub max_retries: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub max_concurrent_entries: Option<usize>,
    pub reasoner_fanout: Option<usize>,
    pub empty_context_always: Option<bool>,
    pub cache: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

/// Endpoint-related values after flags and environment were applied.
#[derive(Debug, Clone, Default)]
pub struct EndpointArgs {
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    pub chat_model: Option<String>,
    pub embed_model: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    pub chat_model: Option<String>,
    pub embed_model: Option<String>,
    pub file: FileConfig,
}

impl Resolved {
    pub fn new(args: EndpointArgs, file: FileConfig) -> Self {
        Self {
            base_url: args.base_url.or_else(|| file.base_url.clone()),
            api_key: args.api_key.or_else(|| file.api_key.clone()),
            chat_model: args.chat_model.or_else(|| file.chat_model.clone()),
            embed_model: args.embed_model.or_else(|| file.embed_model.clone()),
            file,
        }
    }

    pub fn endpoint(&self) -> anyhow::Result<EndpointConfig> {
        let Some(base) = &self.base_url else {
            bail!("no endpoint configured: set --base-url, ACCNOTE_BASE_URL or base_url in the config file");
        };
        let defaults = RetryPolicy::default();
        Ok(EndpointConfig {
            api_key: self.api_key.clone(),
            timeout: Duration::from_secs(self.file.timeout_secs.unwrap_or(120)),
            retry: RetryPolicy {
                max_retries: self.file.max_retries.unwrap_or(defaults.max_retries),
                ..defaults
            },
            ..EndpointConfig::new(base.clone())
        })
    }

    /// Pipeline settings; `fallback_model` names the model when none is set.
    pub fn pipeline(&self, fallback_model: &str) -> PipelineConfig {
        let f = &self.file;
        let chat = self.chat_model.as_deref().unwrap_or(fallback_model);
        let mut config = PipelineConfig::for_model(chat);
        if let Some(m) = &f.organizer_model {
            config.organizer.model_id = m.clone();
        }
        if let Some(m) = &f.reasoner_model {
            config.reasoner.model_id = m.clone();
        }
        if let Some(m) = &f.judge_model {
            config.judge.model_id = m.clone();
        }
        if let Some(t) = f.temperature {
            for s in [&mut config.organizer, &mut config.reasoner, &mut config.judge] {
                s.temperature = t;
            }
        }
        if let Some(n) = f.reasoner_max_tokens {
            config.reasoner.max_tokens = n;
        }
        if let Some(n) = f.max_concurrent_entries {
            config.max_concurrent_entries = n;
        }
        if let Some(n) = f.reasoner_fanout {
            config.reasoner_fanout = n;
        }
        if let Some(b) = f.empty_context_always {
            config.empty_context_always = b;
        }
        config
    }
}
