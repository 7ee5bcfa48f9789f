//! Domain types shared by every module: the two-state regime parameters, the
//! one- or two-asset market, and Girsanov measure shifts.
//!
//! All types are immutable value objects; validation never mutates its input.

use crate::error::{JtdError, Result};
use serde::{Deserialize, Serialize};

/// State of the driving Markov flow. State 0 is conventionally the bull
/// regime (`drift[0] >= drift[1]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum State {
    S0,
    S1,
}

impl State {
    pub fn idx(self) -> usize {
        match self {
            State::S0 => 0,
            State::S1 => 1,
        }
    }

    pub fn other(self) -> State {
        match self {
            State::S0 => State::S1,
            State::S1 => State::S0,
        }
    }

    pub fn from_index(i: usize) -> Result<State> {
        match i {
            0 => Ok(State::S0),
            1 => Ok(State::S1),
            _ => Err(JtdError::Domain(format!("state label must be 0 or 1, got {i}"))),
        }
    }
}

impl From<State> for u8 {
    fn from(s: State) -> u8 {
        s.idx() as u8
    }
}

impl TryFrom<u8> for State {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<State, String> {
        State::from_index(v as usize).map_err(|e| e.to_string())
    }
}

impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.idx())
    }
}

/// Per-state parameters of one risky asset plus the shared flow and bond.
///
/// Units: time in years, `drift` and `rate` and `lambda` per year, `sigma`
/// per square-root year, `jump` dimensionless relative jump sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeParams {
    /// Telegraph drift velocities c_i.
    pub drift: [f64; 2],
    /// Diffusion volatilities sigma_i.
    pub sigma: [f64; 2],
    /// Relative jump sizes h_i > -1 applied at switches out of state i.
    pub jump: [f64; 2],
    /// Switching intensities lambda_i > 0.
    pub lambda: [f64; 2],
    /// Interest rates r_i >= 0.
    pub rate: [f64; 2],
}

impl RegimeParams {
    /// Invariant violations, empty when valid. `needs_telegraph` additionally
    /// requires `drift[0] > drift[1]` strictly, which the telegraph density
    /// formulas divide by.
    pub fn violations(&self, needs_telegraph: bool) -> Vec<String> {
        let mut v = Vec::new();
        for i in 0..2 {
            if !(self.lambda[i] > 0.0) {
                v.push(format!("lambda{i} must be > 0 (got {})", self.lambda[i]));
            }
            if !(self.jump[i] > -1.0) {
                v.push(format!("h{i} <= -1 (got {})", self.jump[i]));
            }
            if !(self.rate[i] >= 0.0) {
                v.push(format!("r{i} must be >= 0 (got {})", self.rate[i]));
            }
            if !self.drift[i].is_finite() || !self.sigma[i].is_finite() {
                v.push(format!("state {i} drift/sigma must be finite"));
            }
        }
        if needs_telegraph && !(self.drift[0] > self.drift[1]) {
            v.push(format!(
                "c0 must exceed c1 for telegraph densities (got c0 = {}, c1 = {})",
                self.drift[0], self.drift[1]
            ));
        }
        v
    }

    pub fn validated(self, needs_telegraph: bool) -> Result<Self> {
        let v = self.violations(needs_telegraph);
        if v.is_empty() {
            Ok(self)
        } else {
            Err(JtdError::InvalidModel(v.join("; ")))
        }
    }
}

/// One risky asset: per-state drift, volatility and jump size, plus the
/// initial price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetParams {
    pub drift: [f64; 2],
    pub sigma: [f64; 2],
    pub jump: [f64; 2],
    pub initial_price: f64,
}

/// Market of one or two risky assets driven by one switching flow and one
/// Brownian motion, with a regime-dependent bond rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketModel {
    pub lambda: [f64; 2],
    pub rate: [f64; 2],
    pub asset1: AssetParams,
    pub asset2: Option<AssetParams>,
}

impl MarketModel {
    /// Parameters of the first asset as a standalone regime bundle.
    pub fn primary_params(&self) -> RegimeParams {
        RegimeParams {
            drift: self.asset1.drift,
            sigma: self.asset1.sigma,
            jump: self.asset1.jump,
            lambda: self.lambda,
            rate: self.rate,
        }
    }

    /// Parameters of the second asset, if present.
    pub fn secondary_params(&self) -> Option<RegimeParams> {
        self.asset2.map(|a| RegimeParams {
            drift: a.drift,
            sigma: a.sigma,
            jump: a.jump,
            lambda: self.lambda,
            rate: self.rate,
        })
    }
}

/// Validation report: the list of violated invariants, empty when valid.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every model invariant. Pure and idempotent; returns a report rather
/// than failing so callers can surface all violations at once.
///
/// `needs_telegraph` marks that telegraph density formulas will be requested,
/// which requires `drift[0] > drift[1]` strictly; simulation and
/// spending-time pricing tolerate equal drifts.
pub fn validate_model(m: &MarketModel, needs_telegraph: bool) -> ValidationReport {
    let mut violations = m.primary_params().violations(needs_telegraph);
    if let Some(p2) = m.secondary_params() {
        for v in p2.violations(needs_telegraph) {
            // lambda/rate violations are shared; report asset-specific ones.
            if !violations.contains(&v) {
                violations.push(format!("asset2: {v}"));
            }
        }
    }
    if !(m.asset1.initial_price > 0.0) {
        violations.push(format!("asset1 initial price must be > 0 (got {})", m.asset1.initial_price));
    }
    if let Some(a2) = &m.asset2 {
        if !(a2.initial_price > 0.0) {
            violations.push(format!("asset2 initial price must be > 0 (got {})", a2.initial_price));
        }
    }
    ValidationReport { violations }
}

/// Girsanov parameters of an equivalent measure: drift shift c*_i, induced
/// jump shift h*_i = -c*_i / lambda_i, Brownian drift shift sigma*_i, and the
/// induced switching intensities lambda*_i = lambda_i (1 + h*_i) =
/// lambda_i - c*_i > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureShift {
    pub drift_shift: [f64; 2],
    pub jump_shift: [f64; 2],
    pub brownian_shift: [f64; 2],
    pub lambda_star: [f64; 2],
}

impl MeasureShift {
    /// Build a shift from the drift shifts c*_i; h*_i and lambda*_i are
    /// pinned by the martingale constraint on the density process.
    pub fn from_drift_shift(
        drift_shift: [f64; 2],
        brownian_shift: [f64; 2],
        lambda: [f64; 2],
    ) -> Result<Self> {
        let mut jump_shift = [0.0; 2];
        let mut lambda_star = [0.0; 2];
        for i in 0..2 {
            if !(lambda[i] > 0.0) {
                return Err(JtdError::InvalidModel(format!(
                    "lambda{i} must be > 0 to define a measure shift"
                )));
            }
            jump_shift[i] = -drift_shift[i] / lambda[i];
            lambda_star[i] = lambda[i] - drift_shift[i];
            if !(lambda_star[i] > 0.0) {
                return Err(JtdError::MeasureNotEquivalent(format!(
                    "induced intensity lambda*{i} = {} is not positive",
                    lambda_star[i]
                )));
            }
        }
        Ok(MeasureShift { drift_shift, jump_shift, brownian_shift, lambda_star })
    }

    /// Build a shift from target risk-neutral intensities lambda*_i
    /// (the theta parameterization): c*_i = lambda_i - lambda*_i.
    pub fn from_intensities(
        lambda_star: [f64; 2],
        brownian_shift: [f64; 2],
        lambda: [f64; 2],
    ) -> Result<Self> {
        let drift_shift = [lambda[0] - lambda_star[0], lambda[1] - lambda_star[1]];
        Self::from_drift_shift(drift_shift, brownian_shift, lambda)
    }

    /// The trivial shift: Z = 1, nothing changes.
    pub fn identity(lambda: [f64; 2]) -> Self {
        MeasureShift {
            drift_shift: [0.0; 2],
            jump_shift: [0.0; 2],
            brownian_shift: [0.0; 2],
            lambda_star: lambda,
        }
    }

    /// Check internal consistency against the physical intensities this
    /// shift is supposed to modify.
    pub fn consistent_with(&self, lambda: [f64; 2]) -> bool {
        (0..2).all(|i| {
            let scale = lambda[i].abs().max(self.drift_shift[i].abs()).max(1.0);
            (self.jump_shift[i] * lambda[i] + self.drift_shift[i]).abs() <= 1e-9 * scale
                && (self.lambda_star[i] - (lambda[i] - self.drift_shift[i])).abs() <= 1e-9 * scale
                && self.lambda_star[i] > 0.0
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_market() -> MarketModel {
        MarketModel {
            lambda: [2.0, 1.0],
            rate: [0.05, 0.05],
            asset1: AssetParams {
                drift: [0.3, -0.3],
                sigma: [0.2, 0.3],
                jump: [0.0, 0.0],
                initial_price: 100.0,
            },
            asset2: None,
        }
    }

    #[test]
    fn valid_model_passes() {
        let report = validate_model(&base_market(), true);
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn jump_at_or_below_minus_one_is_flagged() {
        let mut m = base_market();
        m.asset1.jump[0] = -1.2;
        let report = validate_model(&m, false);
        assert!(!report.is_valid());
        assert!(report.violations.iter().any(|v| v.contains("h0 <= -1")), "{:?}", report.violations);
    }

    #[test]
    fn equal_drifts_rejected_only_when_telegraph_densities_requested() {
        let mut m = base_market();
        m.asset1.drift = [0.1, 0.1];
        assert!(validate_model(&m, false).is_valid());
        let report = validate_model(&m, true);
        assert!(report.violations.iter().any(|v| v.contains("c0 must exceed c1")));
    }

    #[test]
    fn validation_is_idempotent_and_pure() {
        let m = base_market();
        let a = validate_model(&m, true);
        let b = validate_model(&m, true);
        assert_eq!(a.violations, b.violations);
    }

    #[test]
    fn nonpositive_lambda_and_negative_rate_flagged() {
        let mut m = base_market();
        m.lambda = [0.0, -1.0];
        m.rate[1] = -0.01;
        let report = validate_model(&m, false);
        assert_eq!(report.violations.len(), 3, "{:?}", report.violations);
    }

    #[test]
    fn measure_shift_invariants_hold_exactly() {
        let lambda = [2.0, 1.0];
        let shift = MeasureShift::from_drift_shift([0.5, -0.4], [0.1, 0.2], lambda).unwrap();
        assert_eq!(shift.lambda_star, [1.5, 1.4]);
        assert_eq!(shift.jump_shift, [-0.25, 0.4]);
        assert!(shift.consistent_with(lambda));
        assert!(!shift.consistent_with([5.0, 5.0]));
    }

    #[test]
    fn shift_with_nonpositive_intensity_is_rejected() {
        let err = MeasureShift::from_drift_shift([2.5, 0.0], [0.0, 0.0], [2.0, 1.0]).unwrap_err();
        assert!(matches!(err, JtdError::MeasureNotEquivalent(_)));
    }

    #[test]
    fn theta_parameterization_sets_intensities_directly() {
        let shift = MeasureShift::from_intensities([0.7, 1.3], [0.0, 0.0], [2.0, 1.0]).unwrap();
        assert_eq!(shift.lambda_star, [0.7, 1.3]);
        assert_eq!(shift.drift_shift, [1.3, -0.3]);
    }

    #[test]
    fn state_round_trip() {
        assert_eq!(State::from_index(0).unwrap(), State::S0);
        assert_eq!(State::S0.other(), State::S1);
        assert!(State::from_index(2).is_err());
        let json = serde_json::to_string(&State::S1).unwrap();
        assert_eq!(json, "1");
    }
}
