//! Exact distributions of the two-state switching flow: switch-count
//! probabilities pi_i(t; n), spending-time densities f_i(tau, t; n) with
//! their Bessel closed forms, and exact sampling of switch times.
//!
//! Throughout, `tau` is the total time spent in state 0 up to the horizon
//! `t`, and the start state names which intensity governs the first holding
//! time. Dirac atoms (the no-switch mass e^{-lambda t}) are represented
//! structurally as a weight and a location, never as narrow densities.

use crate::error::{JtdError, Result};
use crate::model::State;
use crate::quad::GaussLegendre;
use crate::special::{
    bessel_i0_scaled, bessel_i1_scaled, ln_factorial, poisson_tail, poisson_tail_cutoff,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

/// Default tail tolerance for truncating series over switch counts: the
/// smallest cutoff N with Poisson(lambda_max t) mass beyond N below this.
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;

/// Default Gauss-Legendre node count for the per-count integrals.
pub const DEFAULT_QUAD_NODES: usize = 256;

fn check_lambda(lambda: [f64; 2]) -> Result<()> {
    if lambda.iter().all(|l| *l > 0.0 && l.is_finite()) {
        Ok(())
    } else {
        Err(JtdError::InvalidModel(format!("intensities must be positive and finite, got {lambda:?}")))
    }
}

/// Truncation cutoff for series over switch counts: switch counts are
/// stochastically dominated by a Poisson(lambda_max t) clock.
pub fn switch_count_cutoff(lambda: [f64; 2], t: f64, tail_tol: f64) -> usize {
    poisson_tail_cutoff(lambda[0].max(lambda[1]) * t, tail_tol)
}

/// Distribution of the number of switches up to the horizon.
///
/// `probs[n] = P(N = n)` for `n <= n_max`; `tail_mass` is the analytic
/// Poisson(lambda_max t) bound on the mass beyond `n_max`, so
/// `sum(probs) + tail_mass` exceeds 1 by at most the bound's slack.
#[derive(Debug, Clone)]
pub struct SwitchCountDist {
    pub t: f64,
    pub start: State,
    pub probs: Vec<f64>,
    pub tail_mass: f64,
}

/// Per-count density of the time spent in state 0, evaluated at `tau`.
///
/// `n = 0` is the Dirac atom (exposed via [`SpendingTimeDensity`] /
/// [`spending_time_atom`]), so only `n >= 1` is a density value here.
pub fn spending_time_pdf_n(lambda: [f64; 2], start: State, tau: f64, t: f64, n: usize) -> Result<f64> {
    check_lambda(lambda)?;
    if !(t > 0.0) {
        return Err(JtdError::Domain(format!("horizon t = {t} must be > 0")));
    }
    if !(0.0..=t).contains(&tau) {
        return Err(JtdError::Domain(format!("tau = {tau} outside [0, {t}]")));
    }
    if n == 0 {
        return Err(JtdError::Domain(
            "n = 0 is the Dirac atom, not a density value; use the atom weight".into(),
        ));
    }
    Ok(spending_time_pdf_n_unchecked(lambda, start, tau, t, n))
}

/// `x^p` with the `0^0 = 1` convention, in log space.
fn pow_or_zero(x: f64, p: u32) -> f64 {
    if p == 0 {
        1.0
    } else if x <= 0.0 {
        0.0
    } else {
        (f64::from(p) * x.ln()).exp()
    }
}

pub(crate) fn spending_time_pdf_n_unchecked(lambda: [f64; 2], start: State, tau: f64, t: f64, n: usize) -> f64 {
    let rest = t - tau;
    let m = n / 2;
    // Polynomial part tau^a (t-tau)^b / (a'! b'!) and intensity powers,
    // assembled in log space so large switch counts cannot overflow.
    let (pow0, pow_tau, pow_rest, log_fact) = if n % 2 == 0 {
        // even n = 2m, m >= 1
        match start {
            State::S0 => (m as u32, m as u32, m as u32 - 1, ln_factorial(m - 1) + ln_factorial(m)),
            State::S1 => (m as u32, m as u32 - 1, m as u32, ln_factorial(m - 1) + ln_factorial(m)),
        }
    } else {
        // odd n = 2m + 1, m >= 0
        match start {
            State::S0 => (m as u32 + 1, m as u32, m as u32, 2.0 * ln_factorial(m)),
            State::S1 => (m as u32, m as u32, m as u32, 2.0 * ln_factorial(m)),
        }
    };
    let pow1 = n as u32 - pow0; // lambda1 exponent complements lambda0's
    let poly = pow_or_zero(tau, pow_tau) * pow_or_zero(rest, pow_rest);
    if poly == 0.0 {
        return 0.0;
    }
    let log_scale = f64::from(pow0) * lambda[0].ln() + f64::from(pow1) * lambda[1].ln()
        - log_fact
        - lambda[0] * tau
        - lambda[1] * rest;
    poly * log_scale.exp()
}

/// Weight and location of the Dirac atom of the spending time: no switch
/// happens with probability e^{-lambda_i t}, pinning tau = t (start 0) or
/// tau = 0 (start 1).
pub fn spending_time_atom(lambda: [f64; 2], start: State, t: f64) -> (f64, f64) {
    let weight = (-lambda[start.idx()] * t).exp();
    let location = match start {
        State::S0 => t,
        State::S1 => 0.0,
    };
    (weight, location)
}

/// Absolutely continuous part of the spending-time density, aggregated over
/// all switch counts, in Bessel closed form.
///
/// Both Bessel terms are evaluated in exponentially scaled form: the
/// combined exponent is -(sqrt(lambda0 tau) - sqrt(lambda1 (t-tau)))^2 <= 0,
/// so the evaluation cannot overflow for any argument.
pub fn spending_time_pdf(lambda: [f64; 2], start: State, tau: f64, t: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(t > 0.0) {
        return Err(JtdError::Domain(format!("horizon t = {t} must be > 0")));
    }
    if !(0.0..=t).contains(&tau) {
        return Err(JtdError::Domain(format!("tau = {tau} outside [0, {t}]")));
    }
    Ok(spending_time_closed_form(lambda, start, tau, t))
}

/// Shared kernel for the aggregated density of time-in-state-0 over (0, t):
/// lead * I0(z) + sqrt(l0 l1) * sqrt(w_num/w_den) * I1(z), damped by
/// e^{-l0 tau - l1 (t-tau)}, with z = 2 sqrt(l0 l1 tau (t-tau)).
fn spending_time_closed_form(lambda: [f64; 2], start: State, tau: f64, t: f64) -> f64 {
    let rest = t - tau;
    let z = 2.0 * (lambda[0] * lambda[1] * tau * rest).max(0.0).sqrt();
    // e^{-l0 tau - l1 rest} I(z) = e^{-l0 tau - l1 rest + z} * (e^{-z} I(z))
    let damp = -lambda[0] * tau - lambda[1] * rest;
    let scaled_exp = (damp + z).exp();
    let lead = lambda[start.idx()];
    let i0_term = lead * scaled_exp * bessel_i0_scaled(z);
    // The ratio sqrt(tau/rest) (start 0) or sqrt(rest/tau) (start 1) times
    // I1(z) is finite at the endpoints: I1(z) ~ z/2 cancels the pole. Switch
    // to that limiting form once z is small enough.
    let (num, den) = match start {
        State::S0 => (tau, rest),
        State::S1 => (rest, tau),
    };
    let i1_term = if z < 1e-8 {
        // sqrt(num/den) * I1(z) ~ sqrt(num/den) * z/2 = sqrt(l0 l1) * num
        lambda[0] * lambda[1] * num * damp.exp()
    } else {
        (lambda[0] * lambda[1]).sqrt() * (num / den).sqrt() * scaled_exp * bessel_i1_scaled(z)
    };
    i0_term + i1_term
}

/// Series route for the aggregated spending-time density: the sum of the
/// per-count densities, truncated by the Poisson tail rule. Kept as the
/// independent cross-check of the Bessel closed form.
pub fn spending_time_pdf_series(lambda: [f64; 2], start: State, tau: f64, t: f64, tail_tol: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(t > 0.0) || !(0.0..=t).contains(&tau) {
        return Err(JtdError::Domain(format!("tau = {tau}, t = {t} out of range")));
    }
    let n_max = switch_count_cutoff(lambda, t, tail_tol).max(8);
    let mut acc = 0.0;
    for n in 1..=n_max {
        acc += spending_time_pdf_n_unchecked(lambda, start, tau, t, n);
    }
    Ok(acc)
}

/// Law of the time spent in state 0 up to `t`: a Dirac atom plus an
/// absolutely continuous part on (0, t).
#[derive(Debug, Clone)]
pub struct SpendingTimeDensity {
    pub lambda: [f64; 2],
    pub start: State,
    pub t: f64,
    pub atom_weight: f64,
    pub atom_location: f64,
}

impl SpendingTimeDensity {
    pub fn new(lambda: [f64; 2], start: State, t: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(t > 0.0) {
            return Err(JtdError::Domain(format!("horizon t = {t} must be > 0")));
        }
        let (atom_weight, atom_location) = spending_time_atom(lambda, start, t);
        Ok(SpendingTimeDensity { lambda, start, t, atom_weight, atom_location })
    }

    /// Absolutely continuous part at `tau` in (0, t).
    pub fn ac(&self, tau: f64) -> f64 {
        spending_time_closed_form(self.lambda, self.start, tau, self.t)
    }

    /// atom + integral of the ac part; equals 1 up to quadrature error.
    pub fn total_mass(&self, rule: &GaussLegendre) -> f64 {
        self.atom_weight + rule.integrate_sin_sq(self.t, |tau| self.ac(tau))
    }
}

/// Switch-count probabilities by integrating the per-count spending-time
/// densities: pi_i(t; n) = integral of f_i(tau, t; n) d tau.
pub fn switch_count_probs(lambda: [f64; 2], start: State, t: f64, n_max: Option<usize>) -> Result<SwitchCountDist> {
    switch_count_probs_quad(lambda, start, t, n_max, DEFAULT_QUAD_NODES)
}

/// As [`switch_count_probs`] with an explicit quadrature node count.
pub fn switch_count_probs_quad(
    lambda: [f64; 2],
    start: State,
    t: f64,
    n_max: Option<usize>,
    nodes: usize,
) -> Result<SwitchCountDist> {
    check_lambda(lambda)?;
    if !(t >= 0.0) {
        return Err(JtdError::Domain(format!("horizon t = {t} must be >= 0")));
    }
    let n_max = n_max.unwrap_or_else(|| switch_count_cutoff(lambda, t, DEFAULT_TAIL_TOL));
    if t == 0.0 {
        let mut probs = vec![0.0; n_max + 1];
        probs[0] = 1.0;
        return Ok(SwitchCountDist { t, start, probs, tail_mass: 0.0 });
    }
    let rule = GaussLegendre::new(nodes);
    let mut probs = Vec::with_capacity(n_max + 1);
    probs.push((-lambda[start.idx()] * t).exp());
    for n in 1..=n_max {
        probs.push(rule.integrate(0.0, t, |tau| spending_time_pdf_n_unchecked(lambda, start, tau, t, n)));
    }
    let tail_mass = poisson_tail(lambda[0].max(lambda[1]) * t, n_max);
    Ok(SwitchCountDist { t, start, probs, tail_mass })
}

/// Cross-check route for the switch-count probabilities: fourth-order
/// Runge-Kutta on the forward system
/// d pi_i(t; n)/dt = -lambda_i pi_i(t; n) + lambda_i pi_{1-i}(t; n-1)
/// with fixed step t/2048, integrating both start states jointly.
pub fn switch_count_probs_ode(lambda: [f64; 2], start: State, t: f64, n_max: usize) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if !(t >= 0.0) {
        return Err(JtdError::Domain(format!("horizon t = {t} must be >= 0")));
    }
    let dim = n_max + 1;
    let mut y = vec![0.0; 2 * dim];
    y[0] = 1.0;
    y[dim] = 1.0;
    if t > 0.0 {
        let steps = 2048usize;
        let h = t / steps as f64;
        let deriv = |y: &[f64], dy: &mut [f64]| {
            for n in 0..dim {
                let feed0 = if n == 0 { 0.0 } else { y[dim + n - 1] };
                let feed1 = if n == 0 { 0.0 } else { y[n - 1] };
                dy[n] = -lambda[0] * y[n] + lambda[0] * feed0;
                dy[dim + n] = -lambda[1] * y[dim + n] + lambda[1] * feed1;
            }
        };
        let mut k1 = vec![0.0; 2 * dim];
        let mut k2 = vec![0.0; 2 * dim];
        let mut k3 = vec![0.0; 2 * dim];
        let mut k4 = vec![0.0; 2 * dim];
        let mut stage = vec![0.0; 2 * dim];
        for _ in 0..steps {
            deriv(&y, &mut k1);
            for j in 0..2 * dim {
                stage[j] = y[j] + 0.5 * h * k1[j];
            }
            deriv(&stage, &mut k2);
            for j in 0..2 * dim {
                stage[j] = y[j] + 0.5 * h * k2[j];
            }
            deriv(&stage, &mut k3);
            for j in 0..2 * dim {
                stage[j] = y[j] + h * k3[j];
            }
            deriv(&stage, &mut k4);
            for j in 0..2 * dim {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
    }
    let base = start.idx() * dim;
    Ok(y[base..base + dim].to_vec())
}

/// Exact switch times and per-segment regime labels on [0, t]: holding times
/// are exponential at the current state's intensity. `regimes` has one more
/// entry than `switch_times` (the segment after the last switch).
pub fn sample_switches<R: Rng + ?Sized>(
    lambda: [f64; 2],
    start: State,
    t: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<State>) {
    let mut switch_times = Vec::new();
    let mut regimes = vec![start];
    let mut state = start;
    let mut now = 0.0;
    loop {
        let hold: f64 = Exp::new(lambda[state.idx()]).expect("positive intensity").sample(rng);
        now += hold;
        if now >= t {
            return (switch_times, regimes);
        }
        switch_times.push(now);
        state = state.other();
        regimes.push(state);
    }
}

/// Seeded wrapper over [`sample_switches`]; deterministic given the seed.
pub fn sample_switch_times(lambda: [f64; 2], start: State, t: f64, seed: u64) -> Result<(Vec<f64>, Vec<State>)> {
    check_lambda(lambda)?;
    if !(t >= 0.0) {
        return Err(JtdError::Domain(format!("horizon t = {t} must be >= 0")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_switches(lambda, start, t, &mut rng))
}
