//! Closed-form European call pricing in the completed market: the
//! Black-Scholes kernel, the spending-time series-quadrature formula, and
//! its no-jump specialization.
//!
//! The pricing integral runs over the time the flow spends in state 0 up to
//! maturity, weighted by the per-switch-count spending-time densities taken
//! at the risk-neutral intensities. Only starred quantities enter: the
//! physical switching intensities never appear, so the price is unchanged by
//! perturbing them while the risk-neutral intensities are held fixed.

use crate::error::{JtdError, Result};
use crate::model::{MarketModel, MeasureShift, State};
use crate::quad::{pairwise_sum, GaussLegendre};
use crate::regime::{
    spending_time_pdf_n_unchecked, switch_count_cutoff, SpendingTimeDensity, DEFAULT_TAIL_TOL,
};
use crate::special::{normal_cdf, poisson_tail};
use serde::Serialize;

/// Black-Scholes kernel: E[x e^{Z - sigma^2/2} - K]^+ for Z ~ N(0, sigma^2),
/// equal to x F(d+) - K F(d-) with d+- = ln(x/K)/sigma +- sigma/2.
/// Degenerates to (x - K)^+ at sigma = 0.
pub fn bs_kernel(x: f64, strike: f64, sigma: f64) -> f64 {
    debug_assert!(x > 0.0 && strike > 0.0 && sigma >= 0.0);
    if sigma == 0.0 {
        return (x - strike).max(0.0);
    }
    let log_moneyness = (x / strike).ln();
    let d_plus = log_moneyness / sigma + 0.5 * sigma;
    let d_minus = d_plus - sigma;
    x * normal_cdf(d_plus) - strike * normal_cdf(d_minus)
}

/// Everything the closed-form pricer consumes: asset-1 volatilities and jump
/// sizes, bond rates, and the risk-neutral switching intensities. Physical
/// intensities deliberately do not appear.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CallPricingRequest {
    pub initial_price: f64,
    pub strike: f64,
    pub maturity: f64,
    pub start: State,
    pub rate: [f64; 2],
    pub sigma: [f64; 2],
    pub jump: [f64; 2],
    pub lambda_star: [f64; 2],
    pub quad_nodes: usize,
    pub tail_tol: f64,
}

pub const DEFAULT_PRICER_NODES: usize = 256;

impl CallPricingRequest {
    /// Price under an explicitly given risk-neutral shift. The shift must
    /// actually be risk-neutral for the first asset (its discounted drift
    /// condition must hold), which is checked here.
    pub fn new(
        market: &MarketModel,
        shift: &MeasureShift,
        strike: f64,
        maturity: f64,
        start: State,
    ) -> Result<Self> {
        if !shift.consistent_with(market.lambda) {
            return Err(JtdError::MeasureNotEquivalent(
                "shift parameters are inconsistent with the model's switching intensities".into(),
            ));
        }
        let a = &market.asset1;
        for i in 0..2 {
            let residual = a.drift[i] - market.rate[i]
                + a.sigma[i] * shift.brownian_shift[i]
                + shift.lambda_star[i] * a.jump[i];
            let scale = a.drift[i].abs().max(market.rate[i].abs()).max(1.0);
            if residual.abs() > 1e-9 * scale {
                return Err(JtdError::MeasureNotEquivalent(format!(
                    "shift is not risk-neutral for asset 1 in state {i} (residual {residual:e})"
                )));
            }
        }
        let req = CallPricingRequest {
            initial_price: a.initial_price,
            strike,
            maturity,
            start,
            rate: market.rate,
            sigma: a.sigma,
            jump: a.jump,
            lambda_star: shift.lambda_star,
            quad_nodes: DEFAULT_PRICER_NODES,
            tail_tol: DEFAULT_TAIL_TOL,
        };
        req.validate()?;
        Ok(req)
    }

    /// Price under the unique measure of the completed two-asset market.
    pub fn from_completed_market(
        market: &MarketModel,
        strike: f64,
        maturity: f64,
        start: State,
    ) -> Result<Self> {
        let shift = crate::measure::complete_two_asset_measure(market)?;
        Self::new(market, &shift, strike, maturity, start)
    }

    pub fn with_quad_nodes(mut self, nodes: usize) -> Self {
        self.quad_nodes = nodes;
        self
    }

    pub fn with_tail_tol(mut self, tol: f64) -> Self {
        self.tail_tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0) || !(self.initial_price > 0.0) {
            return Err(JtdError::Domain(format!(
                "strike {} and initial price {} must be positive",
                self.strike, self.initial_price
            )));
        }
        if !(self.maturity > 0.0) {
            return Err(JtdError::Domain(format!("maturity {} must be positive", self.maturity)));
        }
        if self.sigma[0] == 0.0 && self.sigma[1] == 0.0 {
            return Err(JtdError::InvalidModel(
                "sigma0 = sigma1 = 0 is the pure jump-telegraph market, priced by a different \
                 formula not covered here"
                    .into(),
            ));
        }
        if self.jump.iter().any(|h| !(*h > -1.0)) {
            return Err(JtdError::InvalidModel(format!("jump sizes must exceed -1, got {:?}", self.jump)));
        }
        if self.lambda_star.iter().any(|l| !(*l > 0.0)) {
            return Err(JtdError::MeasureNotEquivalent(format!(
                "risk-neutral intensities must be positive, got {:?}",
                self.lambda_star
            )));
        }
        if self.quad_nodes < 2 || !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(JtdError::Domain("bad quadrature/series controls".into()));
        }
        Ok(())
    }
}

/// Call price with its decomposition over switch counts.
#[derive(Debug, Clone, Serialize)]
pub struct PricingBreakdown {
    pub price: f64,
    /// Contribution of the no-switch atom.
    pub atom_contribution: f64,
    /// Contribution of n = 1, 2, ... switches.
    pub per_n_contributions: Vec<f64>,
    /// Envelope bound on the truncated series remainder.
    pub truncation_bound: f64,
    pub quadrature_nodes_used: usize,
}

/// Jump factor kappa after n switches from `start`: ceil(n/2) factors of
/// (1 + h_start) and floor(n/2) of the other state's.
fn jump_factor(jump: [f64; 2], start: State, n: usize) -> f64 {
    let i = start.idx();
    (1.0 + jump[i]).powi(((n + 1) / 2) as i32) * (1.0 + jump[1 - i]).powi((n / 2) as i32)
}

/// European call on the first asset by the series-quadrature formula.
///
/// The n = 0 Dirac atoms of the spending time contribute analytically; each
/// n >= 1 term is a Gauss-Legendre integral (after the sin^2 substitution)
/// of the per-count spending-time density at the risk-neutral intensities
/// times the Black-Scholes kernel.
pub fn price_call(req: &CallPricingRequest) -> Result<PricingBreakdown> {
    req.validate()?;
    let t_mat = req.maturity;
    let lambda = req.lambda_star;
    let ct = [-lambda[0] * req.jump[0], -lambda[1] * req.jump[1]];
    let i = req.start.idx();

    let atom_contribution = (-lambda[i] * t_mat).exp()
        * bs_kernel(
            req.initial_price * (ct[i] * t_mat).exp(),
            req.strike * (-req.rate[i] * t_mat).exp(),
            req.sigma[i] * t_mat.sqrt(),
        );

    let n_max = switch_count_cutoff(lambda, t_mat, req.tail_tol);
    let rule = GaussLegendre::new(req.quad_nodes);
    let mut per_n_contributions = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let kappa = jump_factor(req.jump, req.start, n);
        let term = rule.integrate_sin_sq(t_mat, |tau| {
            let density = spending_time_pdf_n_unchecked(lambda, req.start, tau, t_mat, n);
            if density == 0.0 {
                return 0.0;
            }
            let x = req.initial_price * kappa * (ct[0] * tau + ct[1] * (t_mat - tau)).exp();
            let discounted_strike = req.strike * (-req.rate[0] * tau - req.rate[1] * (t_mat - tau)).exp();
            let vol = (req.sigma[0] * req.sigma[0] * tau + req.sigma[1] * req.sigma[1] * (t_mat - tau)).sqrt();
            density * bs_kernel(x, discounted_strike, vol)
        });
        per_n_contributions.push(term);
    }

    let price = atom_contribution + pairwise_sum(&per_n_contributions);
    let truncation_bound = series_tail_bound(req, ct, n_max);
    Ok(PricingBreakdown {
        price,
        atom_contribution,
        per_n_contributions,
        truncation_bound,
        quadrature_nodes_used: req.quad_nodes,
    })
}

/// Envelope on the dropped series tail: the kernel is bounded by its first
/// argument, switch-count mass beyond n by the dominating Poisson tail.
fn series_tail_bound(req: &CallPricingRequest, ct: [f64; 2], n_max: usize) -> f64 {
    let rate = req.lambda_star[0].max(req.lambda_star[1]) * req.maturity;
    let growth = [
        (1.0 + req.jump[req.start.idx()]).max(1.0),
        (1.0 + req.jump[1 - req.start.idx()]).max(1.0),
    ];
    let drift_env = (ct[0].max(ct[1]).max(0.0) * req.maturity).exp();
    let mut bound = 0.0;
    for n in n_max + 1..n_max + 400 {
        let kappa_env = growth[0].powi(((n + 1) / 2) as i32) * growth[1].powi((n / 2) as i32);
        let term = poisson_tail(rate, n - 1) * req.initial_price * kappa_env * drift_env;
        bound += term;
        if term < 1e-3 * f64::MIN_POSITIVE || term < 1e-6 * bound {
            break;
        }
    }
    bound
}

/// No-jump specialization: with h = 0 the jump factor and the starred
/// velocities vanish, and the series collapses onto the aggregated
/// spending-time density in Bessel closed form.
pub fn price_call_nojump(req: &CallPricingRequest) -> Result<f64> {
    req.validate()?;
    if req.jump.iter().any(|h| h.abs() > 1e-15) {
        return Err(JtdError::InvalidModel(format!(
            "no-jump pricing requires h = 0 on asset 1, got {:?}",
            req.jump
        )));
    }
    let t_mat = req.maturity;
    let i = req.start.idx();
    let atom = (-req.lambda_star[i] * t_mat).exp()
        * bs_kernel(
            req.initial_price,
            req.strike * (-req.rate[i] * t_mat).exp(),
            req.sigma[i] * t_mat.sqrt(),
        );
    let spending = SpendingTimeDensity::new(req.lambda_star, req.start, t_mat)?;
    let rule = GaussLegendre::new(req.quad_nodes);
    let ac = rule.integrate_sin_sq(t_mat, |tau| {
        let discounted_strike = req.strike * (-req.rate[0] * tau - req.rate[1] * (t_mat - tau)).exp();
        let vol = (req.sigma[0] * req.sigma[0] * tau + req.sigma[1] * req.sigma[1] * (t_mat - tau)).sqrt();
        spending.ac(tau) * bs_kernel(req.initial_price, discounted_strike, vol)
    });
    Ok(atom + ac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_degenerates_to_intrinsic_value() {
        assert_eq!(bs_kernel(3.0, 2.0, 0.0), 1.0);
        assert_eq!(bs_kernel(2.0, 3.0, 0.0), 0.0);
    }

    #[test]
    fn kernel_at_the_money_matches_cdf_identity() {
        // phi(1, 1, sigma) = F(sigma/2) - F(-sigma/2) = 2 F(sigma/2) - 1.
        let v = bs_kernel(1.0, 1.0, 0.2);
        assert_relative_eq!(v, 2.0 * normal_cdf(0.1) - 1.0, max_relative = 1e-14);
        assert_relative_eq!(v, 0.079_655_674_554_058, max_relative = 1e-12);
    }

    #[test]
    fn kernel_is_monotone() {
        let mut prev = 0.0;
        for k in 1..40 {
            let x = 0.5 + 0.05 * k as f64;
            let v = bs_kernel(x, 1.0, 0.3);
            assert!(v >= prev, "not increasing in x at {x}");
            prev = v;
        }
        prev = f64::INFINITY;
        for k in 1..40 {
            let strike = 0.2 + 0.1 * k as f64;
            let v = bs_kernel(1.0, strike, 0.3);
            assert!(v <= prev, "not decreasing in strike at {strike}");
            prev = v;
        }
        prev = 0.0;
        for k in 0..40 {
            let sigma = 0.05 * k as f64;
            let v = bs_kernel(1.0, 1.1, sigma);
            assert!(v >= prev, "not increasing in sigma at {sigma}");
            prev = v;
        }
    }

    fn bs_collapse_request(lambda_star: [f64; 2]) -> CallPricingRequest {
        CallPricingRequest {
            initial_price: 100.0,
            strike: 100.0,
            maturity: 1.0,
            start: State::S0,
            rate: [0.05, 0.05],
            sigma: [0.2, 0.2],
            jump: [0.0, 0.0],
            lambda_star,
            quad_nodes: 256,
            tail_tol: 1e-14,
        }
    }

    #[test]
    fn black_scholes_collapse_is_exact_and_intensity_free() {
        let expected = bs_kernel(100.0, 100.0 * (-0.05f64).exp(), 0.2);
        assert_relative_eq!(expected, 10.450_583_572_185, max_relative = 1e-10);
        for lambda_star in [[0.7, 1.3], [3.0, 0.1], [1e-6, 1e-6]] {
            let b = price_call(&bs_collapse_request(lambda_star)).unwrap();
            assert_relative_eq!(b.price, expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn breakdown_is_internally_consistent() {
        let req = CallPricingRequest {
            initial_price: 100.0,
            strike: 95.0,
            maturity: 1.5,
            start: State::S1,
            rate: [0.05, 0.02],
            sigma: [0.25, 0.4],
            jump: [-0.15, 0.25],
            lambda_star: [0.9, 1.7],
            quad_nodes: 256,
            tail_tol: 1e-14,
        };
        let b = price_call(&req).unwrap();
        let total = b.atom_contribution + pairwise_sum(&b.per_n_contributions);
        assert_relative_eq!(b.price, total, max_relative = 1e-15);
        assert!(b.truncation_bound > 0.0 && b.truncation_bound < 1e-8);
        assert!(b.per_n_contributions.iter().all(|c| *c >= 0.0));
        assert!(b.price > 0.0 && b.price < 100.0);
    }

    #[test]
    fn deep_out_of_the_money_price_vanishes_monotonically() {
        let mut prev = f64::INFINITY;
        for &strike in &[100.0, 200.0, 400.0, 800.0, 1600.0] {
            let mut req = bs_collapse_request([0.7, 1.3]);
            req.strike = strike;
            let price = price_call(&req).unwrap().price;
            assert!(price < prev);
            prev = price;
        }
        assert!(prev < 1e-8);
    }

    #[test]
    fn general_formula_matches_nojump_specialization() {
        let req = CallPricingRequest {
            initial_price: 100.0,
            strike: 95.0,
            maturity: 1.0,
            start: State::S0,
            rate: [0.05, 0.03],
            sigma: [0.2, 0.35],
            jump: [0.0, 0.0],
            lambda_star: [0.6, 0.4],
            quad_nodes: 256,
            tail_tol: 1e-14,
        };
        let general = price_call(&req).unwrap().price;
        let special = price_call_nojump(&req).unwrap();
        assert!(
            (general - special).abs() < 1e-8,
            "general {general} vs specialization {special}"
        );
    }

    #[test]
    fn vanishing_intensities_leave_the_start_regime_price() {
        let mut req = bs_collapse_request([1e-9, 1e-9]);
        req.sigma = [0.2, 0.45];
        req.rate = [0.05, 0.01];
        for start in [State::S0, State::S1] {
            req.start = start;
            let i = start.idx();
            let expected = bs_kernel(
                100.0,
                100.0 * (-req.rate[i]).exp(),
                req.sigma[i],
            );
            let nojump = price_call_nojump(&req).unwrap();
            assert_relative_eq!(nojump, expected, epsilon = 1e-9);
            let general = price_call(&req).unwrap().price;
            assert_relative_eq!(general, expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn nojump_rejects_jumps_and_degenerate_diffusion() {
        let mut req = bs_collapse_request([0.7, 1.3]);
        req.jump = [0.1, -0.1];
        assert!(price_call_nojump(&req).is_err());
        let mut req2 = bs_collapse_request([0.7, 1.3]);
        req2.sigma = [0.0, 0.0];
        assert!(price_call(&req2).is_err());
    }

    #[test]
    fn request_construction_checks_risk_neutrality() {
        use crate::model::{AssetParams, MarketModel};
        let market = MarketModel {
            lambda: [2.0, 1.0],
            rate: [0.05, 0.05],
            asset1: AssetParams { drift: [0.1, 0.1], sigma: [0.2, 0.2], jump: [0.0, 0.0], initial_price: 100.0 },
            asset2: None,
        };
        // sigma* = (r - c)/sigma = -0.25 makes the shift risk-neutral.
        let good = MeasureShift::from_intensities([0.7, 1.3], [-0.25, -0.25], market.lambda).unwrap();
        assert!(CallPricingRequest::new(&market, &good, 100.0, 1.0, State::S0).is_ok());
        let bad = MeasureShift::from_intensities([0.7, 1.3], [0.1, -0.25], market.lambda).unwrap();
        assert!(CallPricingRequest::new(&market, &bad, 100.0, 1.0, State::S0).is_err());
    }

    #[test]
    fn jump_factor_counts_alternating_switches() {
        let jump = [0.2, -0.1];
        assert_relative_eq!(jump_factor(jump, State::S0, 0), 1.0);
        assert_relative_eq!(jump_factor(jump, State::S0, 1), 1.2);
        assert_relative_eq!(jump_factor(jump, State::S0, 2), 1.2 * 0.9, max_relative = 1e-15);
        assert_relative_eq!(jump_factor(jump, State::S0, 3), 1.2 * 1.2 * 0.9, max_relative = 1e-15);
        assert_relative_eq!(jump_factor(jump, State::S1, 3), 0.9 * 0.9 * 1.2, max_relative = 1e-15);
    }
}
