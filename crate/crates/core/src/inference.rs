//! Thresholded symbolic inference over the filtered belief vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conclusion {
    pub node_id: String,
    pub text: String,
    pub belief_in: f64,
    pub belief_out: f64,
    pub asserted: bool,
}

/// One conclusion per node; asserted iff `y_i > tau_out`.
///
/// `texts` and `belief_in` are aligned with `node_order`.
pub fn threshold(
    y: &[f64],
    node_order: &[String],
    texts: &[String],
    belief_in: &[f64],
    tau_out: f64,
) -> Result<Vec<Conclusion>> {
    let n = node_order.len();
    if y.len() != n || texts.len() != n || belief_in.len() != n {
        return Err(Error::Shape(format!(
            "threshold over {n} nodes with {} outputs, {} texts, {} inputs",
            y.len(),
            texts.len(),
            belief_in.len()
        )));
    }
    Ok((0..n)
        .map(|i| Conclusion {
            node_id: node_order[i].clone(),
            text: texts[i].clone(),
            belief_in: belief_in[i],
            belief_out: y[i],
            asserted: y[i] > tau_out,
        })
        .collect())
}

/// Accuracy-maximizing threshold. Candidates are the midpoints between
/// consecutive distinct sorted outputs plus one point below the minimum and
/// one above the maximum; ties go to the smallest candidate.
pub fn select_tau(y: &[f64], labels: &[bool]) -> Result<f64> {
    if y.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} outputs but {} labels",
            y.len(),
            labels.len()
        )));
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(Error::Config(
            "threshold selection needs at least one positive and one negative label".into(),
        ));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite output in threshold selection".into()));
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut candidates = vec![sorted[0] - 1.0];
    candidates.extend(sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    candidates.push(sorted[sorted.len() - 1] + 1.0);

    let correct = |tau: f64| {
        y.iter()
            .zip(labels)
            .filter(|(v, l)| (**v > tau) == **l)
            .count()
    };
    let mut best = (correct(candidates[0]), candidates[0]);
    for &c in &candidates[1..] {
        let score = correct(c);
        if score > best.0 {
            best = (score, c);
        }
    }
    Ok(best.1)
}

pub fn accuracy(y: &[f64], labels: &[bool], tau: f64) -> f64 {
    let hits = y.iter().zip(labels).filter(|(v, l)| (**v > tau) == **l).count();
    hits as f64 / y.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> (Vec<String>, Vec<String>) {
        let ids: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        (ids.clone(), ids)
    }

    #[test]
    fn threshold_examples() {
        let (order, texts) = ids(3);
        let y = [0.2, 0.6, 0.9];
        let c = threshold(&y, &order, &texts, &y, 0.5).unwrap();
        assert_eq!(c.iter().map(|c| c.asserted).collect::<Vec<_>>(), vec![false, true, true]);
        assert!(threshold(&y, &order, &texts, &y, 1.0).unwrap().iter().all(|c| !c.asserted));
        assert!(threshold(&y, &order, &texts, &y, 0.1).unwrap().iter().all(|c| c.asserted));
        // strict at the boundary
        assert!(!threshold(&y, &order, &texts, &y, 0.6).unwrap()[1].asserted);
    }

    #[test]
    fn threshold_length_mismatch() {
        let (order, texts) = ids(2);
        assert!(matches!(
            threshold(&[0.1], &order, &texts, &[0.1, 0.2], 0.5),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn separable_case_is_perfect() {
        let y = [0.1, 0.3, 0.35, 0.7, 0.8];
        let labels = [false, false, false, true, true];
        let tau = select_tau(&y, &labels).unwrap();
        assert_eq!(accuracy(&y, &labels, tau), 1.0);
        assert!(tau > 0.35 && tau < 0.7);
    }

    #[test]
    fn single_pair_threshold_between() {
        let tau = select_tau(&[0.9, 0.2], &[true, false]).unwrap();
        assert!(tau > 0.2 && tau < 0.9);
    }

    #[test]
    fn degenerate_labels_rejected() {
        assert!(matches!(select_tau(&[0.1, 0.2], &[true, true]), Err(Error::Config(_))));
        assert!(matches!(select_tau(&[0.1], &[false]), Err(Error::Config(_))));
    }

    #[test]
    fn non_separable_prefers_smallest_best() {
        // candidates: -0.9, 0.15, 0.25, 0.35, 1.4 → correct counts 2, 3, 2, 3, 2
        let y = [0.1, 0.2, 0.3, 0.4];
        let labels = [false, true, false, true];
        assert_eq!(select_tau(&y, &labels).unwrap(), 0.5 * (0.1 + 0.2));
    }
}
