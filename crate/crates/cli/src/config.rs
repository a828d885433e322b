//! Flags and the flat TOML config file. File keys are the flag names; flags
//! given on the command line win.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use nsr_core::graph::LaplacianKind;
use nsr_core::pipeline::PipelineConfig;
use nsr_core::{Error, Result};
use serde::Deserialize;

#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// Flat TOML file whose keys are flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Knowledge graph JSONL (entities and relations).
    #[arg(long)]
    pub kg: Option<PathBuf>,
    #[arg(long)]
    pub merge_threshold: Option<f64>,
    #[arg(long)]
    pub entail_threshold: Option<f64>,
    #[arg(long)]
    pub align_lambda: Option<f64>,
    #[arg(long)]
    pub align_radius: Option<usize>,
    #[arg(long)]
    pub align_min_match: Option<f64>,
    #[arg(long)]
    pub cheb_order: Option<usize>,
    /// Chebyshev filter JSON {"coeffs": [...], "lambda_max": v}.
    #[arg(long)]
    pub filter_file: Option<PathBuf>,
    /// Labels JSONL {"id": ..., "label": bool}; switches to fit mode.
    #[arg(long)]
    pub fit_labels: Option<PathBuf>,
    #[arg(long)]
    pub fit_steps: Option<usize>,
    #[arg(long)]
    pub fit_lr: Option<f64>,
    #[arg(long)]
    pub tau_out: Option<f64>,
    #[arg(long, value_parser = ["unnorm", "norm"])]
    pub laplacian: Option<String>,
    #[arg(long, value_parser = ["exact", "chebyshev"])]
    pub propagator: Option<String>,
    #[arg(long, value_parser = ["offline", "http"])]
    pub provider: Option<String>,
    #[arg(long)]
    pub provider_url: Option<String>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    input: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    kg: Option<PathBuf>,
    merge_threshold: Option<f64>,
    entail_threshold: Option<f64>,
    align_lambda: Option<f64>,
    align_radius: Option<usize>,
    align_min_match: Option<f64>,
    cheb_order: Option<usize>,
    filter_file: Option<PathBuf>,
    fit_labels: Option<PathBuf>,
    fit_steps: Option<usize>,
    fit_lr: Option<f64>,
    tau_out: Option<f64>,
    laplacian: Option<LaplacianKind>,
    propagator: Option<String>,
    provider: Option<String>,
    provider_url: Option<String>,
    embedding_dim: Option<usize>,
    seed: Option<u64>,
}

/// Resolved settings. Paths from the config file are relative to the file.
#[derive(Debug)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg: FileConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [
        &mut cfg.input,
        &mut cfg.out_dir,
        &mut cfg.kg,
        &mut cfg.filter_file,
        &mut cfg.fit_labels,
    ]
    .into_iter()
    .flatten()
    {
        *p = base.join(&*p);
    }
    Ok(cfg)
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<Settings> {
        let file = match &self.config {
            Some(p) => read_file_config(p)?,
            None => FileConfig::default(),
        };
        let d = PipelineConfig::default();
        let laplacian = match &self.laplacian {
            Some(s) => s.parse()?,
            None => file.laplacian.unwrap_or(d.laplacian),
        };
        let pipeline = PipelineConfig {
            merge_threshold: self.merge_threshold.or(file.merge_threshold).unwrap_or(d.merge_threshold),
            entail_threshold: self.entail_threshold.or(file.entail_threshold).unwrap_or(d.entail_threshold),
            align_lambda: self.align_lambda.or(file.align_lambda).unwrap_or(d.align_lambda),
            align_radius: self.align_radius.or(file.align_radius).unwrap_or(d.align_radius),
            align_min_match: self.align_min_match.or(file.align_min_match).unwrap_or(d.align_min_match),
            cheb_order: self.cheb_order.or(file.cheb_order).unwrap_or(d.cheb_order),
            tau_out: self.tau_out.or(file.tau_out),
            laplacian,
            propagator: self.propagator.clone().or(file.propagator).unwrap_or(d.propagator),
            provider: self.provider.clone().or(file.provider).unwrap_or(d.provider),
            provider_url: self.provider_url.clone().or(file.provider_url),
            embedding_dim: self.embedding_dim.or(file.embedding_dim).unwrap_or(d.embedding_dim),
            seed: self.seed.or(file.seed).unwrap_or(d.seed),
            kg: self.kg.clone().or(file.kg),
            filter_file: self.filter_file.clone().or(file.filter_file),
            fit_labels: self.fit_labels.clone().or(file.fit_labels),
            fit_steps: self.fit_steps.or(file.fit_steps).unwrap_or(d.fit_steps),
            fit_lr: self.fit_lr.or(file.fit_lr).unwrap_or(d.fit_lr),
        };
        pipeline.validate()?;
        Ok(Settings {
            pipeline,
            input: file.input,
            out_dir: file.out_dir,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_paths_are_file_relative() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "merge-threshold = 0.7\ncheb-order = 6\nkg = \"kg.jsonl\"\nlaplacian = \"norm\"\n").unwrap();
        let args = ConfigArgs {
            config: Some(path),
            cheb_order: Some(2),
            ..Default::default()
        };
        let s = args.resolve().unwrap();
        assert_eq!(s.pipeline.merge_threshold, 0.7);
        assert_eq!(s.pipeline.cheb_order, 2);
        assert_eq!(s.pipeline.laplacian, LaplacianKind::Normalized);
        assert_eq!(s.pipeline.kg, Some(dir.path().join("kg.jsonl")));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "merge-treshold = 0.7\n").unwrap();
        let args = ConfigArgs {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(args.resolve(), Err(Error::Config(_))));
        let args = ConfigArgs {
            merge_threshold: Some(1.5),
            ..Default::default()
        };
        assert!(matches!(args.resolve(), Err(Error::Config(_))));
    }
}
