//! Martingale characterizations and measure changes: drift- and
//! exponential-form martingale conditions, the Girsanov parameter transform
//! and Radon-Nikodym density evaluation, the theta-parameterized one-asset
//! risk-neutral family, and the two-asset completion.

use crate::error::{JtdError, Result};
use crate::mc::PathRecord;
use crate::model::{MarketModel, MeasureShift, RegimeParams, State};

/// Residual threshold below which a martingale condition counts as exact.
pub const MARTINGALE_TOL: f64 = 1e-12;

/// Result of a martingale check: per-state residuals of the defining
/// condition, zero (within [`MARTINGALE_TOL`]) iff the process is a
/// martingale.
#[derive(Debug, Clone, Copy)]
pub struct MartingaleReport {
    pub is_martingale: bool,
    pub residuals: [f64; 2],
}

impl MartingaleReport {
    fn from_residuals(residuals: [f64; 2]) -> Self {
        MartingaleReport {
            is_martingale: residuals.iter().all(|r| r.abs() <= MARTINGALE_TOL),
            residuals,
        }
    }
}

/// The additive JTD process is a martingale iff c_i = -lambda_i h_i per
/// state; residuals are c_i + lambda_i h_i.
pub fn check_martingale_drift(params: &RegimeParams) -> MartingaleReport {
    MartingaleReport::from_residuals([
        params.drift[0] + params.lambda[0] * params.jump[0],
        params.drift[1] + params.lambda[1] * params.jump[1],
    ])
}

/// The stochastic exponential exp(telegraph + diffusion) * prod(1 + h) is a
/// martingale iff c_i + sigma_i^2/2 = -lambda_i h_i; residuals accordingly.
pub fn check_martingale_exponential(params: &RegimeParams) -> MartingaleReport {
    MartingaleReport::from_residuals([
        params.drift[0] + 0.5 * params.sigma[0] * params.sigma[0] + params.lambda[0] * params.jump[0],
        params.drift[1] + 0.5 * params.sigma[1] * params.sigma[1] + params.lambda[1] * params.jump[1],
    ])
}

/// Dynamics of the asset under the equivalent measure defined by `shift`:
/// the switching intensities become lambda*_i, the Brownian reweighting adds
/// sigma_i sigma*_i to each drift velocity, and volatilities and jump sizes
/// are untouched (a measure change reweights switch frequencies, not the
/// deterministic jump at a switch).
pub fn girsanov_transform(params: &RegimeParams, shift: &MeasureShift) -> Result<RegimeParams> {
    if !shift.consistent_with(params.lambda) {
        return Err(JtdError::MeasureNotEquivalent(
            "shift parameters are inconsistent with these switching intensities".into(),
        ));
    }
    Ok(RegimeParams {
        drift: [
            params.drift[0] + params.sigma[0] * shift.brownian_shift[0],
            params.drift[1] + params.sigma[1] * shift.brownian_shift[1],
        ],
        sigma: params.sigma,
        jump: params.jump,
        lambda: shift.lambda_star,
        rate: params.rate,
    })
}

/// Jump size of the product of two stochastic exponentials:
/// (1 + h_combined) = (1 + h)(1 + h*). This is the jump of the
/// density-weighted process Z * E(X), used when verifying measure changes
/// pathwise.
pub fn compose_exponential_jump(h: f64, h_star: f64) -> f64 {
    (1.0 + h) * (1.0 + h_star) - 1.0
}

/// Radon-Nikodym density Z(t) of the shifted measure along a simulated path:
/// exp(drift-shift telegraph + Brownian-shift integral - quadratic
/// correction) times the product of (1 + h*) over switches. Strictly
/// positive. The path's per-segment normal draws reconstruct the Brownian
/// integral exactly, so `t` must be the path's own horizon.
pub fn radon_nikodym_eval(shift: &MeasureShift, path: &PathRecord, t: f64) -> Result<f64> {
    if (t - path.horizon).abs() > 1e-12 * path.horizon.max(1.0) {
        return Err(JtdError::Domain(format!(
            "density evaluation needs the path's own horizon ({}, got {t})",
            path.horizon
        )));
    }
    let mut log_z = 0.0;
    for seg in path.segments() {
        let s = seg.state.idx();
        let shift_vol = shift.brownian_shift[s];
        log_z += shift.drift_shift[s] * seg.duration
            + shift_vol * seg.duration.sqrt() * seg.gaussian
            - 0.5 * shift_vol * shift_vol * seg.duration;
    }
    let mut kappa = 1.0;
    for state in path.pre_switch_states() {
        kappa *= 1.0 + shift.jump_shift[state.idx()];
    }
    Ok(log_z.exp() * kappa)
}

/// The one-asset market is incomplete; its risk-neutral measures form a
/// family indexed by the target intensities theta_i = lambda*_i > 0:
/// c*_i = lambda_i - theta_i and sigma*_i = (r_i - c_i - h_i theta_i)/sigma_i.
pub fn single_asset_measure_family(params: &RegimeParams, theta: [f64; 2]) -> Result<MeasureShift> {
    for i in 0..2 {
        if !(theta[i] > 0.0) {
            return Err(JtdError::Domain(format!("theta{i} must be > 0, got {}", theta[i])));
        }
        if params.sigma[i] == 0.0 {
            return Err(JtdError::InvalidModel(
                "sigma_i = 0: the risk-neutral family is only parameterized for nondegenerate \
                 diffusion; the pure jump-telegraph market is a separate complete model"
                    .into(),
            ));
        }
    }
    let brownian_shift = [
        (params.rate[0] - params.drift[0] - params.jump[0] * theta[0]) / params.sigma[0],
        (params.rate[1] - params.drift[1] - params.jump[1] * theta[1]) / params.sigma[1],
    ];
    MeasureShift::from_intensities(theta, brownian_shift, params.lambda)
}

/// Determinants and induced intensities behind the two-asset completion.
#[derive(Debug, Clone, Copy)]
pub struct CompletionInputs {
    /// sigma^(1) h^(2) - sigma^(2) h^(1) per state.
    pub delta_h: [f64; 2],
    /// sigma^(1) (r - c^(2)) - sigma^(2) (r - c^(1)) per state.
    pub delta_rc: [f64; 2],
}

/// Relative threshold below which a determinant counts as zero; explosive
/// near-singular solutions are classified as arbitrage/incompleteness
/// instead of being returned.
const SINGULAR_TOL: f64 = 1e-12;

pub fn completion_inputs(market: &MarketModel) -> Result<CompletionInputs> {
    let a1 = &market.asset1;
    let a2 = market
        .asset2
        .as_ref()
        .ok_or_else(|| JtdError::InvalidModel("completion needs a second asset".into()))?;
    let mut delta_h = [0.0; 2];
    let mut delta_rc = [0.0; 2];
    for i in 0..2 {
        delta_h[i] = a1.sigma[i] * a2.jump[i] - a2.sigma[i] * a1.jump[i];
        delta_rc[i] = a1.sigma[i] * (market.rate[i] - a2.drift[i]) - a2.sigma[i] * (market.rate[i] - a1.drift[i]);
    }
    Ok(CompletionInputs { delta_h, delta_rc })
}

fn is_negligible(value: f64, scale: f64) -> bool {
    value.abs() <= SINGULAR_TOL * scale
}

/// Unique risk-neutral measure of the two-asset market, from the explicit
/// determinant solution of the per-state martingale systems.
///
/// A vanishing jump determinant is classified per its excess-return
/// determinant: arbitrage when that is nonzero, incompleteness when both
/// vanish. The solution is verified by back-substitution, and against the
/// alpha/beta ratio form whenever every jump size is nonzero.
pub fn complete_two_asset_measure(market: &MarketModel) -> Result<MeasureShift> {
    let inputs = completion_inputs(market)?;
    let a1 = &market.asset1;
    let a2 = market.asset2.as_ref().unwrap();
    let mut lambda_star = [0.0; 2];
    let mut brownian_shift = [0.0; 2];
    for i in 0..2 {
        let scale_h = a1.sigma[i].abs() * a2.jump[i].abs() + a2.sigma[i].abs() * a1.jump[i].abs();
        let scale_rc = a1.sigma[i].abs() * (market.rate[i] - a2.drift[i]).abs()
            + a2.sigma[i].abs() * (market.rate[i] - a1.drift[i]).abs();
        if is_negligible(inputs.delta_h[i], scale_h) {
            return if is_negligible(inputs.delta_rc[i], scale_rc) {
                Err(JtdError::Incomplete { state: i })
            } else {
                Err(JtdError::Arbitrage { state: i, delta_rc: inputs.delta_rc[i] })
            };
        }
        lambda_star[i] = inputs.delta_rc[i] / inputs.delta_h[i];
        if !(lambda_star[i] > 0.0) {
            return Err(JtdError::MeasureNotEquivalent(format!(
                "state {i}: induced intensity {} is not positive",
                lambda_star[i]
            )));
        }
        brownian_shift[i] = ((market.rate[i] - a1.drift[i]) * a2.jump[i]
            - (market.rate[i] - a2.drift[i]) * a1.jump[i])
            / inputs.delta_h[i];
    }
    let shift = MeasureShift::from_intensities(lambda_star, brownian_shift, market.lambda)?;

    // Back-substitution into both per-state martingale equations.
    for i in 0..2 {
        for (sig, h, c) in [
            (a1.sigma[i], a1.jump[i], a1.drift[i]),
            (a2.sigma[i], a2.jump[i], a2.drift[i]),
        ] {
            let lhs = sig * shift.brownian_shift[i] - h * shift.drift_shift[i];
            let rhs = market.rate[i] - c - market.lambda[i] * h;
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            if (lhs - rhs).abs() > 1e-8 * scale {
                return Err(JtdError::Domain(format!(
                    "completion system is too ill-conditioned: state {i} residual {:e}",
                    lhs - rhs
                )));
            }
        }
    }

    // Cross-check against the ratio form when it is defined.
    let all_jumps_nonzero = (0..2).all(|i| a1.jump[i] != 0.0 && a2.jump[i] != 0.0);
    if all_jumps_nonzero {
        if let Ok(ratio) = complete_two_asset_measure_ratio_form(market) {
            for i in 0..2 {
                let scale = shift.lambda_star[i].abs().max(1.0);
                if (shift.lambda_star[i] - ratio.lambda_star[i]).abs() > 1e-9 * scale {
                    return Err(JtdError::Domain(format!(
                        "determinant and ratio completions disagree in state {i}: {} vs {}",
                        shift.lambda_star[i], ratio.lambda_star[i]
                    )));
                }
            }
        }
    }
    Ok(shift)
}

/// The same completion through the alpha/beta ratio form, defined when every
/// jump size is nonzero: alpha = (r - c)/h, beta = sigma/h, then
/// sigma* = (alpha1 - alpha2)/(beta1 - beta2) and
/// c* = lambda - (beta1 alpha2 - beta2 alpha1)/(beta1 - beta2).
/// Kept as an independent algebraic route to the same measure.
pub fn complete_two_asset_measure_ratio_form(market: &MarketModel) -> Result<MeasureShift> {
    let a1 = &market.asset1;
    let a2 = market
        .asset2
        .as_ref()
        .ok_or_else(|| JtdError::InvalidModel("completion needs a second asset".into()))?;
    let mut drift_shift = [0.0; 2];
    let mut brownian_shift = [0.0; 2];
    for i in 0..2 {
        if a1.jump[i] == 0.0 || a2.jump[i] == 0.0 {
            return Err(JtdError::Domain(format!(
                "ratio form needs nonzero jump sizes in state {i}"
            )));
        }
        let alpha1 = (market.rate[i] - a1.drift[i]) / a1.jump[i];
        let alpha2 = (market.rate[i] - a2.drift[i]) / a2.jump[i];
        let beta1 = a1.sigma[i] / a1.jump[i];
        let beta2 = a2.sigma[i] / a2.jump[i];
        let den = beta1 - beta2;
        let scale = beta1.abs() + beta2.abs();
        if is_negligible(den, scale) {
            return Err(JtdError::Domain(format!("ratio form singular in state {i}")));
        }
        brownian_shift[i] = (alpha1 - alpha2) / den;
        drift_shift[i] = market.lambda[i] - (beta1 * alpha2 - beta2 * alpha1) / den;
    }
    MeasureShift::from_drift_shift(drift_shift, brownian_shift, market.lambda)
}
