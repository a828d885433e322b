use std::sync::OnceLock;
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{require_text, EmbeddingProvider, EntailmentProvider};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntailRequest {
    pub pairs: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntailResponse {
    pub probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

/// Blocking client for the model sidecar. Implements both provider traits
/// over one connection pool.
pub struct HttpClient {
    base_url: String,
    agent: Agent,
    retries: u32,
    dim: OnceLock<usize>,
}

impl HttpClient {
    pub fn new(base_url: &str, timeout: Duration, retries: u32) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        Self {
            base_url: base_url.trim_end_matches('/').to_owned(),
            agent,
            retries,
            dim: OnceLock::new(),
        }
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp> {
        let url = format!("{}{path}", self.base_url);
        // compact bytes; the sidecar schema is byte-exact
        let payload = serde_json::to_vec(body).map_err(std::io::Error::from)?;
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(50 * u64::from(attempt)));
            }
            match self
                .agent
                .post(&url)
                .header("Content-Type", "application/json")
                .send(&payload[..])
            {
                Ok(mut resp) => {
                    return resp.body_mut().read_json::<Resp>().map_err(|e| {
                        Error::Input(format!("malformed response from {url}: {e}"))
                    });
                }
                // 4xx means the request itself is wrong; retrying will not help
                Err(ureq::Error::StatusCode(code)) if (400..500).contains(&code) => {
                    return Err(Error::Input(format!("{url} rejected request with status {code}")));
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(Error::ProviderUnavailable {
            retries: self.retries,
            reason: format!("{url}: {last}"),
        })
    }
}

impl EmbeddingProvider for HttpClient {
    fn name(&self) -> &str {
        "http"
    }

    fn dimension(&self) -> Option<usize> {
        self.dim.get().copied()
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut out = self.embed_batch(&[text])?;
        Ok(out.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        for t in texts {
            require_text(t)?;
        }
        let req = EmbedRequest {
            texts: texts.iter().map(|t| (*t).to_owned()).collect(),
        };
        let resp: EmbedResponse = self.post("/embed", &req)?;
        if resp.vectors.len() != texts.len() {
            return Err(Error::Input(format!(
                "/embed returned {} vectors for {} texts",
                resp.vectors.len(),
                texts.len()
            )));
        }
        let dim = *self.dim.get_or_init(|| resp.dim);
        if resp.dim != dim {
            return Err(Error::Input(format!(
                "/embed changed dimension from {dim} to {}",
                resp.dim
            )));
        }
        for v in &resp.vectors {
            if v.len() != dim || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Input(format!(
                    "/embed returned a malformed vector (len {}, dim {dim})",
                    v.len()
                )));
            }
        }
        Ok(resp.vectors)
    }
}

impl EntailmentProvider for HttpClient {
    fn name(&self) -> &str {
        "http"
    }

    fn prob_entail(&self, premise: &str, hypothesis: &str) -> Result<f64> {
        Ok(self.prob_entail_batch(&[(premise, hypothesis)])?[0])
    }

    fn prob_entail_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        for (p, h) in pairs {
            require_text(p)?;
            require_text(h)?;
        }
        let req = EntailRequest {
            pairs: pairs
                .iter()
                .map(|(p, h)| ((*p).to_owned(), (*h).to_owned()))
                .collect(),
        };
        let resp: EntailResponse = self.post("/entail", &req)?;
        if resp.probs.len() != pairs.len() {
            return Err(Error::Input(format!(
                "/entail returned {} probabilities for {} pairs",
                resp.probs.len(),
                pairs.len()
            )));
        }
        if let Some(p) = resp.probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Input(format!("/entail returned probability {p}")));
        }
        Ok(resp.probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_schema_is_exact() {
        let req = EmbedRequest {
            texts: vec!["a".into(), "b c".into()],
        };
        assert_eq!(serde_json::to_string(&req).unwrap(), r#"{"texts":["a","b c"]}"#);
        let req = EntailRequest {
            pairs: vec![("p".into(), "h".into())],
        };
        assert_eq!(serde_json::to_string(&req).unwrap(), r#"{"pairs":[["p","h"]]}"#);
        let resp: EmbedResponse =
            serde_json::from_str(r#"{"vectors":[[0.6,0.8]],"dim":2,"model":"m"}"#).unwrap();
        assert_eq!(resp.dim, 2);
        let resp: EntailResponse = serde_json::from_str(r#"{"probs":[0.25]}"#).unwrap();
        assert_eq!(resp.probs, vec![0.25]);
    }

    #[test]
    fn unreachable_sidecar_reports_retries() {
        let port = std::net::TcpListener::bind("127.0.0.1:0")
            .unwrap()
            .local_addr()
            .unwrap()
            .port();
        let c = HttpClient::new(&format!("http://127.0.0.1:{port}"), Duration::from_millis(200), 1);
        match c.embed("hello") {
            Err(Error::ProviderUnavailable { retries, .. }) => assert_eq!(retries, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
