//! Spectral engine: graph Fourier basis, Chebyshev filters, propagation
//! strategies, template banks and coefficient fitting.

mod basis;
mod cheb;
mod fit;
mod propagate;

pub use basis::{eigendecompose, SpectralBasis};
pub use cheb::{cheb_eval, chebyshev_t, rescale, ChebFilter, TemplateBank};
pub use fit::{
    fit_filter, fit_filter_detailed, loss_and_gradient, order_responses, sigmoid, FitOptions,
    FitOutcome,
};
pub use propagate::{
    apply_bank, effective_lambda_max, estimate_lambda_max, filter_exact, filter_fast,
    ChebyshevPropagator, ExactPropagator, LinearOperator, Propagator, PropagatorFactory,
    PropagatorRegistry, ZERO_SPECTRUM,
};

/// Rayleigh quotient xᵀLx / xᵀx, a smoothness measure of `x` over the graph.
pub fn rayleigh_quotient<Op: LinearOperator + ?Sized>(op: &Op, x: &[f64]) -> f64 {
    let mut lx = vec![0.0; x.len()];
    op.apply_into(x, &mut lx);
    let num: f64 = x.iter().zip(&lx).map(|(a, b)| a * b).sum();
    let den: f64 = x.iter().map(|a| a * a).sum();
    num / den
}
