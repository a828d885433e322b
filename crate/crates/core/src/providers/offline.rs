use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::{require_text, EmbeddingProvider, EntailmentProvider};
use crate::error::{Error, Result};
use crate::text::{token_set, tokens};

/// Mean of per-token Gaussian vectors, L2-normalized. Each token's vector is
/// drawn from a ChaCha stream seeded by SHA-256 of (seed, token), so shared
/// tokens give correlated embeddings and results are stable across runs and
/// platforms.
#[derive(Clone, Debug)]
pub struct OfflineEmbedding {
    dim: usize,
    seed: u64,
}

impl OfflineEmbedding {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(Self { dim, seed })
    }

    fn token_vector(&self, token: &str) -> impl Iterator<Item = f64> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(token.as_bytes());
        let digest: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(digest);
        (0..self.dim).map(move |_| StandardNormal.sample(&mut rng))
    }
}

impl EmbeddingProvider for OfflineEmbedding {
    fn name(&self) -> &str {
        "offline-hash"
    }

    fn dimension(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        require_text(text)?;
        let toks = tokens(text);
        let mut acc = vec![0.0; self.dim];
        for tok in &toks {
            for (a, v) in acc.iter_mut().zip(self.token_vector(tok)) {
                *a += v;
            }
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::DegenerateEmbedding(format!(
                "offline embedding of {text:?} has norm {norm}"
            )));
        }
        // dividing the sum by its norm is the same as normalizing the mean
        Ok(acc.into_iter().map(|v| v / norm).collect())
    }
}

/// Directional token recall |P ∩ H| / |H| over token sets.
#[derive(Clone, Copy, Debug, Default)]
pub struct LexicalEntailment;

impl EntailmentProvider for LexicalEntailment {
    fn name(&self) -> &str {
        "offline-lexical"
    }

    fn prob_entail(&self, premise: &str, hypothesis: &str) -> Result<f64> {
        require_text(premise)?;
        require_text(hypothesis)?;
        let p = token_set(premise);
        let h = token_set(hypothesis);
        if h.is_empty() {
            return Ok(0.0);
        }
        Ok(h.intersection(&p).count() as f64 / h.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn embedding_has_requested_dimension_and_unit_norm() {
        let p = OfflineEmbedding::new(8, 0).unwrap();
        let v = p.embed("oxygen helps fire burn").unwrap();
        assert_eq!(v.len(), 8);
        assert!((dot(&v, &v).sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn embedding_is_deterministic() {
        let p = OfflineEmbedding::new(32, 7).unwrap();
        let first = p.embed("penguins are birds").unwrap();
        for _ in 0..1000 {
            assert_eq!(p.embed("penguins are birds").unwrap(), first);
        }
        let other = OfflineEmbedding::new(32, 7).unwrap();
        assert_eq!(other.embed("penguins are birds").unwrap(), first);
    }

    #[test]
    fn shared_tokens_raise_similarity() {
        let p = OfflineEmbedding::new(64, 0).unwrap();
        let a = p.embed("oxygen helps fire burn").unwrap();
        let b = p.embed("fire needs oxygen to burn").unwrap();
        let c = p.embed("penguins are birds").unwrap();
        assert!(dot(&a, &b) > dot(&a, &c));
        // casing and punctuation do not matter
        assert_eq!(a, p.embed("Oxygen helps FIRE burn!").unwrap());
    }

    #[test]
    fn seed_changes_vectors() {
        let a = OfflineEmbedding::new(16, 1).unwrap().embed("cat").unwrap();
        let b = OfflineEmbedding::new(16, 2).unwrap().embed("cat").unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn empty_text_is_input_error() {
        let p = OfflineEmbedding::new(8, 0).unwrap();
        assert!(matches!(p.embed("  \t"), Err(Error::Input(_))));
        assert!(matches!(LexicalEntailment.prob_entail("", "x"), Err(Error::Input(_))));
        assert!(OfflineEmbedding::new(0, 0).is_err());
    }

    #[test]
    fn lexical_entailment_values() {
        let e = LexicalEntailment;
        assert_eq!(e.prob_entail("all birds fly", "all birds fly").unwrap(), 1.0);
        assert_eq!(e.prob_entail("cats purr", "dogs bark").unwrap(), 0.0);
        assert_eq!(e.prob_entail("a b c", "a b").unwrap(), 1.0);
        assert!((e.prob_entail("a b", "a b c").unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }
}
