//! Embedding and entailment providers.
//!
//! The engine never loads models itself. It talks to an [`EmbeddingProvider`]
//! and an [`EntailmentProvider`], selected by name from a
//! [`ProviderRegistry`]. Two backends ship built in:
//!
//! * `offline`: deterministic hash-seeded token embeddings and a
//!   token-recall entailment heuristic, usable without any model.
//! * `http`: a blocking client for the model sidecar (`POST /embed`,
//!   `POST /entail`).

mod http;
mod offline;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use crate::error::{Error, Result};

pub use http::{EmbedRequest, EmbedResponse, EntailRequest, EntailResponse, HttpClient};
pub use offline::{LexicalEntailment, OfflineEmbedding};

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Output dimension, once known. Remote providers learn it from their
    /// first response.
    fn dimension(&self) -> Option<usize>;

    fn embed(&self, text: &str) -> Result<Vec<f64>>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

pub trait EntailmentProvider: Send + Sync {
    fn name(&self) -> &str;

    /// P(entail | premise, hypothesis), in [0, 1].
    fn prob_entail(&self, premise: &str, hypothesis: &str) -> Result<f64>;

    fn prob_entail_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>> {
        pairs
            .iter()
            .map(|(p, h)| self.prob_entail(p, h))
            .collect()
    }
}

pub(crate) fn require_text(text: &str) -> Result<()> {
    if text.trim().is_empty() {
        return Err(Error::Input("provider input text is empty".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProviderConfig {
    pub embedding_dim: usize,
    pub seed: u64,
    pub base_url: Option<String>,
    pub timeout: Duration,
    pub retries: u32,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 64,
            seed: 0,
            base_url: None,
            timeout: Duration::from_secs(30),
            retries: 2,
        }
    }
}

/// A matched embedding/entailment pair built from one configuration.
#[derive(Clone)]
pub struct Providers {
    pub embedder: Arc<dyn EmbeddingProvider>,
    pub entailer: Arc<dyn EntailmentProvider>,
}

impl std::fmt::Debug for Providers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Providers")
            .field("embedder", &self.embedder.name())
            .field("entailer", &self.entailer.name())
            .finish()
    }
}

pub type ProviderFactory = fn(&ProviderConfig) -> Result<Providers>;

pub struct ProviderRegistry {
    factories: BTreeMap<&'static str, ProviderFactory>,
}

impl ProviderRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("offline", offline_providers);
        reg.register("http", http_providers);
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: ProviderFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn create(&self, name: &str, cfg: &ProviderConfig) -> Result<Providers> {
        let factory = self.factories.get(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown provider {name:?} (available: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(cfg)
    }
}

fn offline_providers(cfg: &ProviderConfig) -> Result<Providers> {
    Ok(Providers {
        embedder: Arc::new(OfflineEmbedding::new(cfg.embedding_dim, cfg.seed)?),
        entailer: Arc::new(LexicalEntailment),
    })
}

fn http_providers(cfg: &ProviderConfig) -> Result<Providers> {
    let url = cfg
        .base_url
        .as_deref()
        .ok_or_else(|| Error::Config("http provider requires a base URL".into()))?;
    let client = Arc::new(HttpClient::new(url, cfg.timeout, cfg.retries));
    Ok(Providers {
        embedder: client.clone(),
        entailer: client,
    })
}
