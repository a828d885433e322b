//! End-to-end driver.
//!
//! Stages are looked up by name in a [`StageRegistry`] and chained through
//! [`Artifact`]s. The full run is
//! embed → merge → score → filter → align → spectral → threshold; each stage
//! can also be run alone on an artifact file, and chaining the standalone runs
//! reproduces the full run exactly.

mod artifact;
mod report;
mod stages;

use std::collections::BTreeMap;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::Deserialize;

use crate::align::{read_kg, AlignConfig, KnowledgeGraph};
use crate::error::{Error, Result};
use crate::graph::{LaplacianKind, ReasoningGraph};
use crate::providers::{ProviderConfig, ProviderRegistry, Providers};
use crate::spectral::{ChebFilter, PropagatorRegistry};

pub use artifact::{Artifact, ArtifactKind, ConclusionSet, MatrixArtifact, SignalArtifact};
pub use report::{PipelineReport, StageFailure, StageRecord};
pub use stages::{
    AlignStage, EmbedStage, FilterStage, LaplacianStage, MergeStage, ScoreStage, SpectralStage,
    ThresholdStage,
};

/// Stage names of a full run, in order.
pub const PIPELINE_ORDER: [&str; 7] = [
    "embed", "merge", "score", "filter", "align", "spectral", "threshold",
];

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub merge_threshold: f64,
    pub entail_threshold: f64,
    pub align_lambda: f64,
    pub align_radius: usize,
    pub align_min_match: f64,
    pub cheb_order: usize,
    /// Fixed output threshold. When absent it is selected from the fit
    /// labels, or defaults to 0.5.
    pub tau_out: Option<f64>,
    pub laplacian: LaplacianKind,
    pub propagator: String,
    pub provider: String,
    pub provider_url: Option<String>,
    pub embedding_dim: usize,
    pub seed: u64,
    pub kg: Option<PathBuf>,
    pub filter_file: Option<PathBuf>,
    pub fit_labels: Option<PathBuf>,
    pub fit_steps: usize,
    pub fit_lr: f64,
}

pub const DEFAULT_TAU_OUT: f64 = 0.5;

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            merge_threshold: 0.85,
            entail_threshold: 0.5,
            align_lambda: 0.5,
            align_radius: 1,
            align_min_match: 0.5,
            cheb_order: 4,
            tau_out: None,
            laplacian: LaplacianKind::Unnormalized,
            propagator: "exact".into(),
            provider: "offline".into(),
            provider_url: None,
            embedding_dim: 64,
            seed: 0,
            kg: None,
            filter_file: None,
            fit_labels: None,
            fit_steps: 2000,
            fit_lr: 0.5,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("merge-threshold", self.merge_threshold),
            ("entail-threshold", self.entail_threshold),
            ("align-lambda", self.align_lambda),
            ("align-min-match", self.align_min_match),
            ("tau-out", self.tau_out.unwrap_or(DEFAULT_TAU_OUT)),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        match (self.provider.as_str(), &self.provider_url) {
            ("http", None) => {
                return Err(Error::Config("provider http needs a provider-url".into()))
            }
            ("offline", Some(_)) => {
                return Err(Error::Config(
                    "provider-url is only meaningful with provider http".into(),
                ))
            }
            _ => {}
        }
        if self.filter_file.is_some() && self.fit_labels.is_some() {
            return Err(Error::Config(
                "filter-file and fit-labels are mutually exclusive".into(),
            ));
        }
        if !(self.fit_lr.is_finite() && self.fit_lr >= 0.0) {
            return Err(Error::Config(format!("fit-lr = {} is invalid", self.fit_lr)));
        }
        if self.embedding_dim == 0 {
            return Err(Error::Config("embedding-dim must be positive".into()));
        }
        if !PropagatorRegistry::builtin().names().any(|n| n == self.propagator) {
            return Err(Error::Config(format!("unknown propagator {:?}", self.propagator)));
        }
        if !ProviderRegistry::builtin().names().any(|n| n == self.provider) {
            return Err(Error::Config(format!("unknown provider {:?}", self.provider)));
        }
        Ok(())
    }

    pub fn align_config(&self) -> Result<AlignConfig> {
        AlignConfig::new(self.align_lambda, self.align_radius, self.align_min_match)
    }

    pub fn provider_config(&self) -> ProviderConfig {
        ProviderConfig {
            embedding_dim: self.embedding_dim,
            seed: self.seed,
            base_url: self.provider_url.clone(),
            ..ProviderConfig::default()
        }
    }
}

/// Configuration plus every side input a stage may need, loaded once.
pub struct StageContext {
    pub config: PipelineConfig,
    pub kg: Option<KnowledgeGraph>,
    pub filter: Option<ChebFilter>,
    pub labels: Option<BTreeMap<String, bool>>,
    providers: OnceLock<Providers>,
}

impl StageContext {
    /// Validates the configuration and reads the KG, filter and label files.
    /// Configuration problems surface as [`Error::Config`].
    pub fn load(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let kg = config.kg.as_deref().map(read_kg).transpose()?;
        let filter = config
            .filter_file
            .as_deref()
            .map(read_filter)
            .transpose()?;
        let labels = config.fit_labels.as_deref().map(read_labels).transpose()?;
        Ok(Self {
            config,
            kg,
            filter,
            labels,
            providers: OnceLock::new(),
        })
    }

    /// Providers are built on first use, so stages that never call a model
    /// work without a reachable sidecar.
    pub fn providers(&self) -> Result<&Providers> {
        if let Some(p) = self.providers.get() {
            return Ok(p);
        }
        let built = ProviderRegistry::builtin()
            .create(&self.config.provider, &self.config.provider_config())?;
        Ok(self.providers.get_or_init(|| built))
    }
}

pub fn read_filter(path: &Path) -> Result<ChebFilter> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        reason: e.to_string(),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelRecord {
    id: String,
    label: bool,
}

/// JSONL of `{"id": ..., "label": true|false}`.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, bool>> {
    let file = fs::File::open(path)?;
    let source = path.display().to_string();
    let mut labels = BTreeMap::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: source.clone(),
            line: idx + 1,
            reason,
        };
        let rec: LabelRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if labels.insert(rec.id.clone(), rec.label).is_some() {
            return Err(parse_err(format!("duplicate label for {}", rec.id)));
        }
    }
    Ok(labels)
}

pub trait Stage: Send + Sync {
    fn name(&self) -> &'static str;

    /// Runs the stage, returning its output and report details.
    fn run(&self, input: Artifact, ctx: &StageContext) -> Result<(Artifact, serde_json::Value)>;
}

/// Stages by name.
pub struct StageRegistry {
    stages: BTreeMap<&'static str, Box<dyn Stage>>,
}

impl StageRegistry {
    pub fn empty() -> Self {
        Self {
            stages: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(EmbedStage));
        reg.register(Box::new(MergeStage));
        reg.register(Box::new(ScoreStage));
        reg.register(Box::new(FilterStage));
        reg.register(Box::new(AlignStage));
        reg.register(Box::new(LaplacianStage));
        reg.register(Box::new(SpectralStage));
        reg.register(Box::new(ThresholdStage));
        reg
    }

    pub fn register(&mut self, stage: Box<dyn Stage>) {
        self.stages.insert(stage.name(), stage);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.stages.keys().copied()
    }

    pub fn get(&self, name: &str) -> Option<&dyn Stage> {
        self.stages.get(name).map(|s| s.as_ref())
    }

    pub fn run(&self, name: &str, input: Artifact, ctx: &StageContext) -> Result<(Artifact, StageRecord)> {
        let stage = self.get(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown stage {name:?} (available: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        let (out, details) = stage.run(input, ctx)?;
        let record = StageRecord::new(name, &out, details);
        Ok((out, record))
    }
}

/// Artifacts of a completed run.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineRun {
    /// Refined graph after alignment.
    pub graph: ReasoningGraph,
    pub signal: SignalArtifact,
    pub conclusions: ConclusionSet,
    pub report: PipelineReport,
}

impl PipelineRun {
    /// File name and contents of every output, in write order.
    pub fn outputs(&self) -> Result<Vec<(&'static str, Vec<u8>)>> {
        let filter = serde_json::to_vec(&self.signal.filter).map_err(std::io::Error::from)?;
        Ok(vec![
            ("graph.jsonl", Artifact::Graph(self.graph.clone()).to_bytes()?),
            ("filter.json", [filter, b"\n".to_vec()].concat()),
            ("signal.json", Artifact::Signal(self.signal.clone()).to_bytes()?),
            (
                "conclusions.jsonl",
                Artifact::Conclusions(self.conclusions.clone()).to_bytes()?,
            ),
            ("report.json", self.report.to_json().into_bytes()),
        ])
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir)?;
        for (name, bytes) in self.outputs()? {
            fs::write(out_dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// A stage failed; `report` covers the stages that completed.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: String,
    pub error: Error,
    pub report: PipelineReport,
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage {} failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

pub fn run_pipeline(
    graph: ReasoningGraph,
    ctx: &StageContext,
) -> std::result::Result<PipelineRun, Box<PipelineError>> {
    let registry = StageRegistry::builtin();
    let mut report = PipelineReport::default();
    let mut artifact = Artifact::Graph(graph);
    let (mut refined, mut signal) = (None, None);
    for name in PIPELINE_ORDER {
        match registry.run(name, artifact, ctx) {
            Ok((out, record)) => {
                report.stages.push(record);
                match &out {
                    Artifact::Graph(g) if name == "align" => refined = Some(g.clone()),
                    Artifact::Signal(s) => signal = Some(s.clone()),
                    _ => {}
                }
                artifact = out;
            }
            Err(error) => {
                report.failure = Some(StageFailure {
                    stage: name.to_owned(),
                    error: error.to_string(),
                });
                return Err(Box::new(PipelineError {
                    stage: name.to_owned(),
                    error,
                    report,
                }));
            }
        }
    }
    let Artifact::Conclusions(conclusions) = artifact else {
        unreachable!("threshold emits conclusions")
    };
    Ok(PipelineRun {
        graph: refined.expect("align ran"),
        signal: signal.expect("spectral ran"),
        conclusions,
        report,
    })
}
