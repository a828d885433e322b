use serde_json::{json, Value};

use super::artifact::{Artifact, ConclusionSet, MatrixArtifact, SignalArtifact};
use super::{Stage, StageContext, DEFAULT_TAU_OUT};
use crate::align::augment_with_report;
use crate::entail::{partition_edges, score_edges, FilterConfig};
use crate::error::{Error, Result};
use crate::graph::{build_matrices, NodeRecord};
use crate::inference::{select_tau, threshold};
use crate::merge::{apply_merge, plan_merge, similarity_matrix};
use crate::spectral::{
    eigendecompose, fit_filter_detailed, ChebFilter, FitOptions, PropagatorRegistry,
};

/// Fills in embeddings for nodes that lack one.
pub struct EmbedStage;

impl Stage for EmbedStage {
    fn name(&self) -> &'static str {
        "embed"
    }

    fn run(&self, input: Artifact, ctx: &StageContext) -> Result<(Artifact, Value)> {
        let graph = input.into_graph(self.name())?;
        let missing: Vec<&NodeRecord> = graph.nodes().filter(|n| n.embedding.is_none()).collect();
        if missing.is_empty() {
            let details = json!({ "embedded": 0, "dimension": graph.embedding_dim() });
            return Ok((Artifact::Graph(graph), details));
        }
        let embedder = &ctx.providers()?.embedder;
        let texts: Vec<&str> = missing.iter().map(|n| n.text.as_str()).collect();
        let vectors = embedder.embed_batch(&texts)?;
        if vectors.len() != missing.len() {
            return Err(Error::Input(format!(
                "embedding provider returned {} vectors for {} texts",
                vectors.len(),
                missing.len()
            )));
        }

        let mut out = crate::graph::ReasoningGraph::new();
        let mut fresh = missing.iter().map(|n| n.id.as_str()).zip(vectors).peekable();
        for node in graph.nodes() {
            let mut node = node.clone();
            if fresh.peek().is_some_and(|(id, _)| *id == node.id) {
                node.embedding = fresh.next().map(|(_, v)| v);
            }
            out.insert_node(node)?;
        }
        for e in graph.entailment_edges() {
            out.add_scored_entailment(&e.premise, &e.hypothesis, e.score)?;
        }
        for e in graph.structural_edges() {
            out.add_structural(&e.a, &e.b, e.weight)?;
        }
        out.validate()?;
        let details = json!({
            "provider": embedder.name(),
            "embedded": missing.len(),
            "dimension": out.embedding_dim(),
        });
        Ok((Artifact::Graph(out), details))
    }
}

pub struct MergeStage;

impl Stage for MergeStage {
    fn name(&self) -> &'static str {
        "merge"
    }

    fn run(&self, input: Artifact, ctx: &StageContext) -> Result<(Artifact, Value)> {
        let graph = input.into_graph(self.name())?;
        let sim = similarity_matrix(&graph)?;
        let plan = plan_merge(&sim, ctx.config.merge_threshold)?;
        let out = apply_merge(&graph, &plan)?;
        let merged: Vec<&Vec<String>> = plan.multi_member().collect();
        let details = json!({
            "threshold": plan.threshold,
            "nodes_before": graph.node_count(),
            "nodes_after": out.node_count(),
            "clusters": plan.cluster_count(),
            "merged": merged,
        });
        Ok((Artifact::Graph(out), details))
    }
}

/// Attaches an entailment probability to every edge.
pub struct ScoreStage;

impl Stage for ScoreStage {
    fn name(&self) -> &'static str {
        "score"
    }

    fn run(&self, input: Artifact, ctx: &StageContext) -> Result<(Artifact, Value)> {
        let graph = input.into_graph(self.name())?;
        if graph.entailment_count() == 0 {
            return Ok((Artifact::Graph(graph), json!({ "scored": 0 })));
        }
        let entailer = &ctx.providers()?.entailer;
        let out = score_edges(&graph, entailer.as_ref())?;
        let details = json!({ "provider": entailer.name(), "scored": out.entailment_count() });
        Ok((Artifact::Graph(out), details))
    }
}

pub struct FilterStage;

impl Stage for FilterStage {
    fn name(&self) -> &'static str {
        "filter"
    }

    fn run(&self, input: Artifact, ctx: &StageContext) -> Result<(Artifact, Value)> {
        let graph = input.into_graph(self.name())?;
        let cfg = FilterConfig::new(ctx.config.entail_threshold)?;
        let (out, dropped) = partition_edges(&graph, cfg)?;
        let details = json!({
            "threshold": cfg.tau_nli,
            "kept": out.entailment_count(),
            "dropped": dropped,
        });
        Ok((Artifact::Graph(out), details))
    }
}

/// Imports KG neighbourhoods. Without a KG the graph passes through.
pub struct AlignStage;

impl Stage for AlignStage {
    fn name(&self) -> &'static str {
        "align"
    }

    fn run(&self, input: Artifact, ctx: &StageContext) -> Result<(Artifact, Value)> {
        let graph = input.into_graph(self.name())?;
        let Some(kg) = &ctx.kg else {
            return Ok((Artifact::Graph(graph), json!({ "kg": false })));
        };
        let cfg = ctx.config.align_config()?;
        let (out, report) = if kg.is_empty() || graph.is_empty() {
            (graph, Default::default())
        } else {
            augment_with_report(&graph, kg, &cfg, ctx.providers()?.embedder.as_ref())?
        };
        let details = json!({
            "kg": true,
            "lambda": cfg.lambda_mix,
            "radius": cfg.radius,
            "min_match": cfg.min_match,
            "matches": report.matches,
            "unmatched": report.unmatched,
            "imported_entities": report.imported_entities,
            "imported_relations": report.imported_relations,
        });
        Ok((Artifact::Graph(out), details))
    }
}

/// Emits the dense Laplacian of the configured variant.
pub struct LaplacianStage;

impl Stage for LaplacianStage {
    fn name(&self) -> &'static str {
        "laplacian"
    }

    fn run(&self, input: Artifact, ctx: &StageContext) -> Result<(Artifact, Value)> {
        let graph = input.into_graph(self.name())?;
        let m = build_matrices(&graph)?;
        let l = m.laplacian(ctx.config.laplacian);
        let rows = l.row_iter().map(|r| r.iter().copied().collect()).collect();
        let details = json!({ "variant": ctx.config.laplacian });
        let out = MatrixArtifact {
            variant: ctx.config.laplacian,
            node_order: m.node_order,
            rows,
        };
        Ok((Artifact::Matrix(out), details))
    }
}

/// Propagates the belief signal through a Chebyshev filter.
///
/// The filter comes from the filter file, from fitting against labels, or
/// defaults to a heat kernel e^{−λ} of the configured order.
pub struct SpectralStage;

impl Stage for SpectralStage {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn run(&self, input: Artifact, ctx: &StageContext) -> Result<(Artifact, Value)> {
        let cfg = &ctx.config;
        let graph = input.into_graph(self.name())?;
        let m = build_matrices(&graph)?;
        let l = m.laplacian(cfg.laplacian);
        let propagator = PropagatorRegistry::builtin().create(&cfg.propagator, &l)?;

        let nodes: Vec<&NodeRecord> = graph.nodes().collect();
        let x: Vec<f64> = nodes.iter().map(|n| n.belief).collect();
        let mut details = json!({
            "n": nodes.len(),
            "laplacian": cfg.laplacian,
            "propagator": propagator.name(),
            "lambda_max": propagator.lambda_max(),
        });

        let labelled: Vec<(usize, bool)> = match &ctx.labels {
            Some(labels) => nodes
                .iter()
                .enumerate()
                .filter_map(|(i, n)| labels.get(&n.id).map(|&l| (i, l)))
                .collect(),
            None => Vec::new(),
        };

        let filter = if let Some(f) = &ctx.filter {
            details["filter_source"] = json!("file");
            f.clone()
        } else if ctx.labels.is_some() {
            let mut targets = x.clone();
            for &(i, label) in &labelled {
                targets[i] = if label { 1.0 } else { 0.0 };
            }
            let basis = eigendecompose(&l)?;
            let opts = FitOptions {
                order: cfg.cheb_order,
                steps: cfg.fit_steps,
                learning_rate: cfg.fit_lr,
                init: None,
            };
            let fit = fit_filter_detailed(&basis, &x, &targets, &opts)?;
            details["filter_source"] = json!("fit");
            details["labels_used"] = json!(labelled.len());
            details["fit_initial_loss"] = json!(fit.initial_loss);
            details["fit_final_loss"] = json!(fit.final_loss);
            fit.filter
        } else {
            details["filter_source"] = json!("heat-kernel");
            ChebFilter::heat_kernel(1.0, cfg.cheb_order, propagator.lambda_max())?
        };
        details["order"] = json!(filter.order());
        details["coeffs"] = json!(filter.coeffs());

        let y = propagator.propagate(&filter, &x)?;

        let (tau_out, source) = match cfg.tau_out {
            Some(t) => (t, "fixed"),
            None => {
                let ys: Vec<f64> = labelled.iter().map(|&(i, _)| y[i]).collect();
                let ls: Vec<bool> = labelled.iter().map(|&(_, l)| l).collect();
                match select_tau(&ys, &ls) {
                    Ok(t) => (t, "selected"),
                    Err(_) => (DEFAULT_TAU_OUT, "default"),
                }
            }
        };
        details["tau_out"] = json!(tau_out);
        details["tau_source"] = json!(source);

        let out = SignalArtifact {
            node_order: m.node_order,
            texts: nodes.iter().map(|n| n.text.clone()).collect(),
            belief_in: x,
            belief_out: y,
            filter,
            laplacian: cfg.laplacian,
            propagator: propagator.name().to_owned(),
            tau_out,
        };
        Ok((Artifact::Signal(out), details))
    }
}

pub struct ThresholdStage;

impl Stage for ThresholdStage {
    fn name(&self) -> &'static str {
        "threshold"
    }

    fn run(&self, input: Artifact, ctx: &StageContext) -> Result<(Artifact, Value)> {
        let signal = input.into_signal(self.name())?;
        let tau_out = ctx.config.tau_out.unwrap_or(signal.tau_out);
        let conclusions = threshold(
            &signal.belief_out,
            &signal.node_order,
            &signal.texts,
            &signal.belief_in,
            tau_out,
        )?;
        let set = ConclusionSet {
            conclusions,
            tau_out,
        };
        let asserted: Vec<&str> = set
            .conclusions
            .iter()
            .filter(|c| c.asserted)
            .map(|c| c.node_id.as_str())
            .collect();
        let details = json!({ "tau_out": tau_out, "asserted": asserted });
        Ok((Artifact::Conclusions(set), details))
    }
}
