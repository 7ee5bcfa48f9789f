//! Gauss-Legendre quadrature and deterministic summation helpers.
//!
//! The spending-time and pricing integrands are smooth in the interior of
//! (0, t) but the aggregated Bessel forms carry an integrable
//! sqrt(tau/(t-tau)) endpoint singularity. [`GaussLegendre::integrate_sin_sq`]
//! substitutes tau = t sin^2(u), which removes that singularity exactly.

/// Fixed Gauss-Legendre rule on (-1, 1).
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Build an n-point rule. Nodes are the roots of the Legendre polynomial
    /// P_n, found by Newton iteration from the Chebyshev initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for k in 0..m {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-15 {
                    let (p2, d2) = legendre_with_derivative(n, x);
                    x -= p2 / d2;
                    dp = d2;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[k] = -x;
            nodes[n - 1 - k] = x;
            weights[k] = w;
            weights[n - 1 - k] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn degree(&self) -> usize {
        self.nodes.len()
    }

    /// Integral of f over (a, b).
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .collect();
        half * pairwise_sum(&terms)
    }

    /// Integral of f over (0, t) after the substitution tau = t sin^2(u),
    /// d tau = t sin(2u) du with u over (0, pi/2).
    pub fn integrate_sin_sq<F: Fn(f64) -> f64>(&self, t: f64, f: F) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        self.integrate(0.0, std::f64::consts::FRAC_PI_2, |u| {
            let s = u.sin();
            f(t * s * s) * t * (2.0 * u).sin()
        })
    }
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for j in 2..=n {
        let j = j as f64;
        let p_next = ((2.0 * j - 1.0) * x * p - (j - 1.0) * p_prev) / j;
        p_prev = p;
        p = p_next;
    }
    let d = (n as f64) * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

/// Pairwise summation: deterministic for a fixed input order, with error
/// growth O(log n) instead of O(n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn five_point_rule_matches_published_values() {
        let rule = GaussLegendre::new(5);
        let expected_nodes = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683_1,
            0.0,
            0.538_469_310_105_683_1,
            0.906_179_845_938_664,
        ];
        let expected_weights = [
            0.236_926_885_056_189_08,
            0.478_628_670_499_366_47,
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_47,
            0.236_926_885_056_189_08,
        ];
        for i in 0..5 {
            assert_relative_eq!(rule.nodes[i], expected_nodes[i], epsilon = 1e-14);
            assert_relative_eq!(rule.weights[i], expected_weights[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn rule_is_exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(8);
        // integral of x^14 over (-1, 1) = 2/15; degree 14 <= 2*8 - 1.
        assert_relative_eq!(rule.integrate(-1.0, 1.0, |x| x.powi(14)), 2.0 / 15.0, epsilon = 1e-14);
        assert!(rule.integrate(-1.0, 1.0, |x| x.powi(13)).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for &n in &[1usize, 2, 17, 64, 256, 512] {
            let rule = GaussLegendre::new(n);
            let total: f64 = rule.weights.iter().sum();
            assert_relative_eq!(total, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn smooth_integrand_converges_to_machine_precision() {
        let rule = GaussLegendre::new(32);
        assert_relative_eq!(
            rule.integrate(0.0, std::f64::consts::PI, f64::sin),
            2.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(rule.integrate(0.0, 1.0, |x| x.exp()), 1.0f64.exp() - 1.0, epsilon = 1e-14);
    }

    #[test]
    fn sin_sq_substitution_absorbs_endpoint_singularity() {
        // integral of 1/sqrt(tau (t - tau)) over (0, t) = pi for every t.
        let rule = GaussLegendre::new(64);
        for &t in &[0.25, 1.0, 7.0] {
            let v = rule.integrate_sin_sq(t, |tau| 1.0 / (tau * (t - tau)).sqrt());
            assert_relative_eq!(v, std::f64::consts::PI, epsilon = 1e-12);
        }
        assert_eq!(rule.integrate_sin_sq(0.0, |_| 1.0), 0.0);
    }

    #[test]
    fn pairwise_sum_matches_sequential_on_benign_input() {
        let xs: Vec<f64> = (0..1000).map(|k| (k as f64).sin()).collect();
        let seq: f64 = xs.iter().sum();
        assert_relative_eq!(pairwise_sum(&xs), seq, epsilon = 1e-9);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
