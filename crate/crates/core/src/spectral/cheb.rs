use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How far outside [−1, 1] a rescaled eigenvalue may drift before it is no
/// longer clamped.
const CLAMP_TOL: f64 = 1e-9;

/// h(λ) = Σ_k θ_k T_k(λ̃), with λ̃ = 2λ/λ_max − 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FilterSpec")]
pub struct ChebFilter {
    coeffs: Vec<f64>,
    lambda_max: f64,
}

#[derive(Deserialize)]
struct FilterSpec {
    coeffs: Vec<f64>,
    lambda_max: f64,
}

impl TryFrom<FilterSpec> for ChebFilter {
    type Error = Error;

    fn try_from(spec: FilterSpec) -> Result<Self> {
        ChebFilter::new(spec.coeffs, spec.lambda_max)
    }
}

impl ChebFilter {
    pub fn new(coeffs: Vec<f64>, lambda_max: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Config("Chebyshev filter needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("Chebyshev coefficients must be finite".into()));
        }
        if !(lambda_max.is_finite() && lambda_max > 0.0) {
            return Err(Error::DegenerateSpectrum(lambda_max));
        }
        Ok(Self { coeffs, lambda_max })
    }

    /// h ≡ 1.
    pub fn identity(lambda_max: f64) -> Result<Self> {
        Self::new(vec![1.0], lambda_max)
    }

    /// Chebyshev interpolant of `f` on [0, λ_max] through the K+1
    /// Chebyshev–Gauss nodes.
    pub fn interpolate(f: impl Fn(f64) -> f64, order: usize, lambda_max: f64) -> Result<Self> {
        if !(lambda_max.is_finite() && lambda_max > 0.0) {
            return Err(Error::DegenerateSpectrum(lambda_max));
        }
        let m = order + 1;
        let nodes: Vec<f64> = (0..m)
            .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / m as f64).cos())
            .collect();
        let values: Vec<f64> = nodes.iter().map(|&t| f((t + 1.0) * lambda_max / 2.0)).collect();
        let coeffs = (0..m)
            .map(|k| {
                let s: f64 = nodes
                    .iter()
                    .zip(&values)
                    .map(|(&t, &v)| v * chebyshev_t(k, t))
                    .sum();
                let c = 2.0 * s / m as f64;
                if k == 0 {
                    c / 2.0
                } else {
                    c
                }
            })
            .collect();
        Self::new(coeffs, lambda_max)
    }

    /// Low-pass heat kernel e^{−tλ}, approximated to the given order.
    pub fn heat_kernel(t: f64, order: usize, lambda_max: f64) -> Result<Self> {
        Self::interpolate(|l| (-t * l).exp(), order, lambda_max)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// h(0) = Σ θ_k T_k(−1) = Σ θ_k (−1)^k.
    pub fn at_zero(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 0 { *c } else { -c })
            .sum()
    }

    /// Evaluates the series at an already rescaled point.
    pub fn eval_rescaled(&self, t: f64) -> f64 {
        let mut prev = 1.0;
        let mut cur = t;
        let mut acc = self.coeffs[0];
        if let Some(c1) = self.coeffs.get(1) {
            acc += c1 * cur;
        }
        for c in self.coeffs.iter().skip(2) {
            let next = 2.0 * t * cur - prev;
            prev = cur;
            cur = next;
            acc += c * cur;
        }
        acc
    }
}

pub fn rescale(lambda: f64, lambda_max: f64) -> Result<f64> {
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(Error::DegenerateSpectrum(lambda_max));
    }
    Ok(2.0 * lambda / lambda_max - 1.0)
}

/// h(λ) for an eigenvalue in [0, λ_max]. Rescaled values within 1e−9 of the
/// interval are clamped onto it.
pub fn cheb_eval(filter: &ChebFilter, lambda: f64) -> f64 {
    let mut t = 2.0 * lambda / filter.lambda_max - 1.0;
    if t.abs() > 1.0 && t.abs() <= 1.0 + CLAMP_TOL {
        t = t.signum();
    }
    filter.eval_rescaled(t)
}

/// T_k(t) by the three-term recurrence.
pub fn chebyshev_t(k: usize, t: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => t,
        _ => {
            let (mut prev, mut cur) = (1.0, t);
            for _ in 1..k {
                let next = 2.0 * t * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Rule-specific filters applied side by side to one signal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TemplateBank {
    templates: Vec<(String, ChebFilter)>,
}

#[derive(Serialize, Deserialize)]
struct TemplateEntry {
    rule: String,
    coeffs: Vec<f64>,
    lambda_max: f64,
}

impl TemplateBank {
    pub fn new(templates: Vec<(String, ChebFilter)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (rule, _) in &templates {
            if !seen.insert(rule.as_str()) {
                return Err(Error::Config(format!("duplicate rule id {rule:?} in template bank")));
            }
        }
        Ok(Self { templates })
    }

    pub fn templates(&self) -> &[(String, ChebFilter)] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn to_json(&self) -> String {
        let entries: Vec<TemplateEntry> = self
            .templates
            .iter()
            .map(|(rule, f)| TemplateEntry {
                rule: rule.clone(),
                coeffs: f.coeffs.clone(),
                lambda_max: f.lambda_max,
            })
            .collect();
        serde_json::to_string(&entries).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<TemplateEntry> = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("template bank: {e}")))?;
        let templates = entries
            .into_iter()
            .map(|e| Ok((e.rule, ChebFilter::new(e.coeffs, e.lambda_max)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(templates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescale_endpoints() {
        assert_eq!(rescale(0.0, 4.0).unwrap(), -1.0);
        assert_eq!(rescale(4.0, 4.0).unwrap(), 1.0);
        assert_eq!(rescale(2.0, 4.0).unwrap(), 0.0);
        assert!(matches!(rescale(1.0, 0.0), Err(Error::DegenerateSpectrum(_))));
    }

    #[test]
    fn eval_examples() {
        let c = ChebFilter::new(vec![0.7], 3.0).unwrap();
        for l in [0.0, 1.0, 3.0] {
            assert_eq!(cheb_eval(&c, l), 0.7);
        }
        let t1 = ChebFilter::new(vec![0.0, 1.0], 3.0).unwrap();
        assert_eq!(cheb_eval(&t1, 3.0), 1.0);
        // λ̃ = 0.5 at λ = 0.75 λ_max
        let t2 = ChebFilter::new(vec![0.0, 0.0, 1.0], 4.0).unwrap();
        assert!((cheb_eval(&t2, 3.0) - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn tiny_overshoot_is_clamped() {
        let t3 = ChebFilter::new(vec![0.0, 0.0, 0.0, 1.0], 2.0).unwrap();
        assert_eq!(cheb_eval(&t3, 2.0 + 1e-10), 1.0);
    }

    #[test]
    fn recurrence_matches_trig_form() {
        for k in 0..10 {
            for &t in &[-1.0, -0.3, 0.0, 0.42, 1.0] {
                let trig = (k as f64 * f64::acos(t)).cos();
                assert!((chebyshev_t(k, t) - trig).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn at_zero_matches_eval() {
        let f = ChebFilter::new(vec![0.3, -1.2, 0.5, 2.0], 5.0).unwrap();
        assert!((f.at_zero() - cheb_eval(&f, 0.0)).abs() < 1e-14);
    }

    #[test]
    fn interpolation_approximates_heat_kernel() {
        let f = ChebFilter::heat_kernel(1.0, 10, 4.0).unwrap();
        for i in 0..=40 {
            let l = 0.1 * i as f64;
            assert!((cheb_eval(&f, l) - (-l).exp()).abs() < 1e-7);
        }
    }

    #[test]
    fn invalid_filters_rejected() {
        assert!(ChebFilter::new(vec![], 1.0).is_err());
        assert!(ChebFilter::new(vec![f64::NAN], 1.0).is_err());
        assert!(ChebFilter::new(vec![1.0], 0.0).is_err());
        assert!(serde_json::from_str::<ChebFilter>(r#"{"coeffs":[],"lambda_max":1.0}"#).is_err());
    }

    #[test]
    fn filter_json_format() {
        let f = ChebFilter::new(vec![0.5, -0.25], 2.0).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"coeffs":[0.5,-0.25],"lambda_max":2.0}"#);
        assert_eq!(serde_json::from_str::<ChebFilter>(&s).unwrap(), f);
    }

    #[test]
    fn bank_json_and_uniqueness() {
        let f = ChebFilter::identity(2.0).unwrap();
        let bank = TemplateBank::new(vec![("r1".into(), f.clone()), ("r2".into(), f.clone())]).unwrap();
        let s = bank.to_json();
        assert_eq!(
            s,
            r#"[{"rule":"r1","coeffs":[1.0],"lambda_max":2.0},{"rule":"r2","coeffs":[1.0],"lambda_max":2.0}]"#
        );
        assert_eq!(TemplateBank::from_json(&s).unwrap(), bank);
        assert!(TemplateBank::new(vec![("r".into(), f.clone()), ("r".into(), f)]).is_err());
    }
}
