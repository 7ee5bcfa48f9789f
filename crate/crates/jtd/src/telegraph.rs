//! Space densities of the jump telegraph process: per-switch-count densities
//! q_i(x, t; n), their jump-shifted versions, the aggregated Bessel closed
//! form valid when h0 + h1 = 0, and the telegraph-diffusion mixture density.
//!
//! With u = (c0 t - x)/(c0 - c1) and v = (x - c1 t)/(c0 - c1), the per-count
//! space density factors through the spending-time density of state 0:
//! q_i(x, t; n) = f_i(v, t; n) / (c0 - c1), v being the time the path must
//! have spent in state 0 to reach x. All evaluations share that kernel.

use crate::error::{JtdError, Result};
use crate::model::{RegimeParams, State};
use crate::quad::GaussLegendre;
use crate::regime::{
    spending_time_atom, spending_time_pdf_n, switch_count_cutoff, SpendingTimeDensity,
    DEFAULT_TAIL_TOL,
};
use crate::special::{bessel_i0_scaled, bessel_i1_scaled};

/// A Dirac component of a density: probability `weight` at `location`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityAtom {
    pub location: f64,
    pub weight: f64,
}

fn check_telegraph(drift: [f64; 2], lambda: [f64; 2], t: f64) -> Result<()> {
    if !(drift[0] > drift[1]) {
        return Err(JtdError::InvalidModel(format!(
            "c0 must exceed c1 for telegraph densities (got c0 = {}, c1 = {})",
            drift[0], drift[1]
        )));
    }
    if !(lambda[0] > 0.0 && lambda[1] > 0.0) {
        return Err(JtdError::InvalidModel(format!("intensities must be positive, got {lambda:?}")));
    }
    if !(t > 0.0) {
        return Err(JtdError::Domain(format!("horizon t = {t} must be > 0")));
    }
    Ok(())
}

/// Per-count density of the pure telegraph displacement (no jumps), with
/// indicator support (c1 t, c0 t). `n = 0` is the atom at c_i t.
pub fn q_density(drift: [f64; 2], lambda: [f64; 2], start: State, x: f64, t: f64, n: usize) -> Result<f64> {
    check_telegraph(drift, lambda, t)?;
    if n == 0 {
        return Err(JtdError::Domain(
            "n = 0 is the atom e^{-lambda_i t} at x = c_i t; use the atom weight".into(),
        ));
    }
    let span = drift[0] - drift[1];
    let v = (x - drift[1] * t) / span; // time in state 0 needed to reach x
    if v <= 0.0 || v >= t {
        return Ok(0.0);
    }
    Ok(spending_time_pdf_n(lambda, start, v, t, n)? / span)
}

/// Atom of the telegraph or jump telegraph density: no switch leaves the
/// path at x = c_i t with probability e^{-lambda_i t} (jumps only occur at
/// switches, so the atom location is unshifted).
pub fn telegraph_atom(drift: [f64; 2], lambda: [f64; 2], start: State, t: f64) -> DensityAtom {
    let i = start.idx();
    DensityAtom { location: drift[i] * t, weight: (-lambda[i] * t).exp() }
}

/// Cumulative jump displacement after n switches from start state i:
/// ceil(n/2) jumps of h_i and floor(n/2) jumps of h_{1-i}.
pub fn jump_offset(jump: [f64; 2], start: State, n: usize) -> f64 {
    let i = start.idx();
    ((n + 1) / 2) as f64 * jump[i] + (n / 2) as f64 * jump[1 - i]
}

/// Per-count density of the jump telegraph process: the telegraph density
/// shifted by the deterministic jump displacement of n switches.
pub fn jump_telegraph_pdf_n(
    drift: [f64; 2],
    jump: [f64; 2],
    lambda: [f64; 2],
    start: State,
    x: f64,
    t: f64,
    n: usize,
) -> Result<f64> {
    q_density(drift, lambda, start, x - jump_offset(jump, start, n), t, n)
}

/// Absolutely continuous part of the aggregated jump telegraph density as a
/// truncated series over switch counts; the independent cross-check of the
/// Bessel closed form.
pub fn jump_telegraph_pdf_series(
    drift: [f64; 2],
    jump: [f64; 2],
    lambda: [f64; 2],
    start: State,
    x: f64,
    t: f64,
    tail_tol: f64,
) -> Result<f64> {
    check_telegraph(drift, lambda, t)?;
    let n_max = switch_count_cutoff(lambda, t, tail_tol).max(8);
    let mut acc = 0.0;
    for n in 1..=n_max {
        acc += jump_telegraph_pdf_n(drift, jump, lambda, start, x, t, n)?;
    }
    Ok(acc)
}

/// Aggregated jump telegraph density in Bessel closed form, valid only for
/// balanced jumps h0 + h1 = 0.
#[derive(Debug, Clone, Copy)]
pub struct JumpTelegraphBessel {
    pub atom: DensityAtom,
    /// Absolutely continuous part at the queried x.
    pub ac_value: f64,
}

/// Closed form for the aggregated density when B = h0 + h1 = 0.
///
/// Evaluated as displayed: the whole expression carries the indicator of
/// (c1 t, c0 t), the I0 term is additionally zero where its jump-shifted
/// argument leaves that band (where the odd-count series vanishes). Inside
/// the band the value coincides with the switch-count series; the series
/// keeps mass on the shifted band (c1 t + h_i, c0 t + h_i) outside the
/// indicator, which the closed form truncates.
pub fn jump_telegraph_pdf_bessel(
    drift: [f64; 2],
    jump: [f64; 2],
    lambda: [f64; 2],
    start: State,
    x: f64,
    t: f64,
) -> Result<JumpTelegraphBessel> {
    check_telegraph(drift, lambda, t)?;
    if (jump[0] + jump[1]).abs() > 1e-12 {
        return Err(JtdError::Domain(format!(
            "Bessel closed form requires h0 + h1 = 0 (got h0 + h1 = {})",
            jump[0] + jump[1]
        )));
    }
    let atom = telegraph_atom(drift, lambda, start, t);
    let span = drift[0] - drift[1];
    let u = (drift[0] * t - x) / span;
    let v = (x - drift[1] * t) / span;
    if u <= 0.0 || v <= 0.0 {
        return Ok(JumpTelegraphBessel { atom, ac_value: 0.0 });
    }
    let i = start.idx();
    // Odd-count part: the jump shift h_i moves the I0 argument and its
    // exponential prefactor together; in shifted coordinates the combined
    // exponent is again <= 0, so scaled Bessel evaluation cannot overflow.
    let shift = jump[i] / span;
    let us = u + shift;
    let vs = v - shift;
    let odd = if us > 0.0 && vs > 0.0 {
        let z = 2.0 * (lambda[0] * lambda[1] * us * vs).sqrt();
        lambda[i] * (z - lambda[1] * us - lambda[0] * vs).exp() * bessel_i0_scaled(z)
    } else {
        0.0
    };
    // Even-count part: unshifted, ratio (v/u)^{1/2 - i}.
    let z = 2.0 * (lambda[0] * lambda[1] * u * v).sqrt();
    let ratio = match start {
        State::S0 => (v / u).sqrt(),
        State::S1 => (u / v).sqrt(),
    };
    let even = (lambda[0] * lambda[1]).sqrt()
        * ratio
        * (z - lambda[1] * u - lambda[0] * v).exp()
        * bessel_i1_scaled(z);
    Ok(JumpTelegraphBessel { atom, ac_value: (odd + even) / span })
}

/// Density of the telegraph-diffusion sum (no jump component): a mixture of
/// Gaussians over the spending time, plus the smoothed no-switch atom.
#[derive(Debug, Clone)]
pub struct TelegraphDiffusionDensity {
    drift: [f64; 2],
    sigma: [f64; 2],
    start: State,
    t: f64,
    spending: SpendingTimeDensity,
    rule: GaussLegendre,
    /// Point mass reported structurally when the no-switch atom has zero
    /// variance (sigma of the start state is exactly 0).
    pub point_mass: Option<DensityAtom>,
}

fn gaussian_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let inv = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    inv * (-(x - mean) * (x - mean) / (2.0 * var)).exp()
}

impl TelegraphDiffusionDensity {
    pub fn new(
        drift: [f64; 2],
        sigma: [f64; 2],
        lambda: [f64; 2],
        start: State,
        t: f64,
        nodes: usize,
    ) -> Result<Self> {
        if sigma[0] == 0.0 && sigma[1] == 0.0 {
            return Err(JtdError::Domain(
                "sigma0 = sigma1 = 0 has no diffusion smoothing; use the jump telegraph density".into(),
            ));
        }
        if !(t > 0.0) {
            return Err(JtdError::Domain(format!("horizon t = {t} must be > 0")));
        }
        let spending = SpendingTimeDensity::new(lambda, start, t)?;
        let i = start.idx();
        let point_mass = if sigma[i] == 0.0 {
            Some(DensityAtom { location: drift[i] * t, weight: spending.atom_weight })
        } else {
            None
        };
        Ok(TelegraphDiffusionDensity {
            drift,
            sigma,
            start,
            t,
            spending,
            rule: GaussLegendre::new(nodes),
            point_mass,
        })
    }

    /// Mean displacement given tau units of spending time in state 0.
    fn mean_at(&self, tau: f64) -> f64 {
        self.drift[0] * tau + self.drift[1] * (self.t - tau)
    }

    /// Displacement variance given tau units of spending time in state 0.
    fn var_at(&self, tau: f64) -> f64 {
        self.sigma[0] * self.sigma[0] * tau + self.sigma[1] * self.sigma[1] * (self.t - tau)
    }

    /// Absolutely continuous density at x: the spending-time mixture of
    /// Gaussians plus the atom's Gaussian when its variance is positive.
    pub fn ac(&self, x: f64) -> f64 {
        let mixture = self.rule.integrate_sin_sq(self.t, |tau| {
            self.spending.ac(tau) * gaussian_pdf(x, self.mean_at(tau), self.var_at(tau))
        });
        let atom_part = if self.point_mass.is_some() {
            0.0
        } else {
            let tau0 = self.spending.atom_location;
            self.spending.atom_weight * gaussian_pdf(x, self.mean_at(tau0), self.var_at(tau0))
        };
        mixture + atom_part
    }

    pub fn start(&self) -> State {
        self.start
    }
}

/// Convenience evaluation of the telegraph-diffusion mixture density with the
/// default 256-node rule.
pub fn telegraph_diffusion_pdf(params: &RegimeParams, start: State, x: f64, t: f64) -> Result<f64> {
    let d = TelegraphDiffusionDensity::new(params.drift, params.sigma, params.lambda, start, t, 256)?;
    Ok(d.ac(x))
}
