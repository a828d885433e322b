//! Full-batch gradient descent on Chebyshev coefficients.
//!
//! The filtered signal is linear in θ: y = Σ_k θ_k z_k with
//! z_k = U T_k(Λ̃) Uᵀ x. The loss is mean((σ(y) − t)²), so each step only
//! needs the K+1 precomputed responses z_k.

use super::basis::SpectralBasis;
use super::cheb::{chebyshev_t, ChebFilter};
use super::propagate::{effective_lambda_max, ZERO_SPECTRUM};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Polynomial order K (K+1 coefficients).
    pub order: usize,
    pub steps: usize,
    pub learning_rate: f64,
    /// Starting coefficients; zeros when absent.
    pub init: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOutcome {
    pub filter: ChebFilter,
    pub initial_loss: f64,
    pub final_loss: f64,
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// z_k = U T_k(Λ̃) Uᵀ x for k = 0..=order.
pub fn order_responses(basis: &SpectralBasis, x: &[f64], order: usize) -> Result<Vec<Vec<f64>>> {
    let x_hat = basis.forward(x)?;
    let lambda_max = effective_lambda_max(basis.lambda_max);
    let zero = basis.lambda_max.abs() <= ZERO_SPECTRUM;
    (0..=order)
        .map(|k| {
            let y_hat: Vec<f64> = x_hat
                .iter()
                .zip(&basis.eigenvalues)
                .map(|(c, &l)| {
                    let t = if zero { -1.0 } else { (2.0 * l / lambda_max - 1.0).clamp(-1.0, 1.0) };
                    chebyshev_t(k, t) * c
                })
                .collect();
            basis.inverse(&y_hat)
        })
        .collect()
}

/// Loss and its analytic gradient with respect to the coefficients.
pub fn loss_and_gradient(responses: &[Vec<f64>], targets: &[f64], coeffs: &[f64]) -> (f64, Vec<f64>) {
    let n = targets.len();
    let mut loss = 0.0;
    let mut grad = vec![0.0; coeffs.len()];
    for i in 0..n {
        let y: f64 = coeffs.iter().zip(responses).map(|(c, z)| c * z[i]).sum();
        let s = sigmoid(y);
        let r = s - targets[i];
        loss += r * r;
        let dy = 2.0 * r * s * (1.0 - s);
        for (g, z) in grad.iter_mut().zip(responses) {
            *g += dy * z[i];
        }
    }
    let scale = 1.0 / n.max(1) as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    (loss * scale, grad)
}

pub fn fit_filter(
    basis: &SpectralBasis,
    x: &[f64],
    targets: &[f64],
    opts: &FitOptions,
) -> Result<ChebFilter> {
    Ok(fit_filter_detailed(basis, x, targets, opts)?.filter)
}

/// Returns the best coefficients seen, so the final loss never exceeds the
/// initial one.
pub fn fit_filter_detailed(
    basis: &SpectralBasis,
    x: &[f64],
    targets: &[f64],
    opts: &FitOptions,
) -> Result<FitOutcome> {
    let n = basis.dim();
    if x.len() != n || targets.len() != n {
        return Err(Error::Shape(format!(
            "fit with basis of dimension {n}, signal {} and targets {}",
            x.len(),
            targets.len()
        )));
    }
    if let Some(t) = targets.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Input(format!("fit target {t} outside [0, 1]")));
    }
    if !(opts.learning_rate.is_finite() && opts.learning_rate >= 0.0) {
        return Err(Error::Config(format!("learning rate {} is invalid", opts.learning_rate)));
    }
    let mut coeffs = match &opts.init {
        Some(c) if c.len() != opts.order + 1 => {
            return Err(Error::Shape(format!(
                "initial coefficients have length {}, order {} needs {}",
                c.len(),
                opts.order,
                opts.order + 1
            )))
        }
        Some(c) => c.clone(),
        None => vec![0.0; opts.order + 1],
    };
    let responses = order_responses(basis, x, opts.order)?;

    let (initial_loss, mut grad) = loss_and_gradient(&responses, targets, &coeffs);
    if !initial_loss.is_finite() {
        return Err(Error::Divergence { step: 0, loss: initial_loss });
    }
    let mut best = (initial_loss, coeffs.clone());
    for step in 1..=opts.steps {
        for (c, g) in coeffs.iter_mut().zip(&grad) {
            *c -= opts.learning_rate * g;
        }
        let (loss, g) = loss_and_gradient(&responses, targets, &coeffs);
        if !loss.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Divergence { step, loss });
        }
        if loss < best.0 {
            best = (loss, coeffs.clone());
        }
        grad = g;
    }
    Ok(FitOutcome {
        filter: ChebFilter::new(best.1, effective_lambda_max(basis.lambda_max))?,
        initial_loss,
        final_loss: best.0,
    })
}
