//! Economic capital from the single-factor model with beta-distributed
//! loss severity.

pub mod beta;
pub mod ec;
pub mod normal;
pub mod quadrature;
pub mod tasche;

pub use beta::{fit_beta, regularized_incomplete_beta, BetaLossFit};
pub use ec::{ec_vector, recovery_basis, CapitalModel, EcBasis, EcMode, EcProvider, EcVector, TascheEcProvider};
pub use quadrature::{GaussLegendre, QuadratureRule, UnitIntervalRule};
pub use tasche::{
    conditional_loss, conditional_loss_with, unexpected_loss_rate, unexpected_loss_rate_with, TascheParams,
    UnexpectedLoss,
};

/// `F_D^{-1}(q)` for a fitted loss distribution.
pub fn beta_inverse_cdf(fit: &BetaLossFit, q: f64) -> f64 {
    fit.inverse_cdf(q)
}
