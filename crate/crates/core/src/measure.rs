//! The biased two-point sign laws, the measure mu on (0, infinity) with
//! density (2/pi)(e^{2t} - 1)^{-1/2}, quadrature and sampling against it, and
//! the closed-form integrals built from them.
//!
//! All integration against mu goes through the substitution
//! t(theta) = -ln cos(theta), under which mu is the pushforward of the
//! uniform distribution on (0, pi/2). The raw density has an integrable
//! t^{-1/2} singularity at the origin that direct quadrature handles poorly.

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use std::f64::consts::{FRAC_PI_2, PI};

/// The two-point law of a biased sign xi_i(t) together with its
/// standardization delta_i(t) = (xi_i(t) - e^{-t}) / sqrt(1 - e^{-2t}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasedCoordinateLaw {
    t: f64,
    exp_neg_t: f64,
    p_plus: f64,
    p_minus: f64,
    variance: f64,
    delta_plus: f64,
    delta_minus: f64,
}

impl BiasedCoordinateLaw {
    /// Closed-form law at time `t > 0`. At t = 0 the standardization divides
    /// by a zero variance, so nonpositive times are rejected.
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::param(format!(
                "biased coordinate law needs t > 0, got {t}"
            )));
        }
        let exp_neg_t = (-t).exp();
        // 1 - e^{-2t} without cancellation for tiny t.
        let variance = -(-2.0 * t).exp_m1();
        let sd = variance.sqrt();
        Ok(BiasedCoordinateLaw {
            t,
            exp_neg_t,
            p_plus: (1.0 + exp_neg_t) / 2.0,
            p_minus: (-(-t).exp_m1()) / 2.0,
            variance,
            delta_plus: (-(-t).exp_m1()) / sd,
            delta_minus: (-1.0 - exp_neg_t) / sd,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn exp_neg_t(&self) -> f64 {
        self.exp_neg_t
    }

    /// P{xi = +1} = (1 + e^{-t})/2.
    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    /// P{xi = -1} = (1 - e^{-t})/2.
    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    /// Var xi(t) = 1 - e^{-2t}.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// delta value on the branch xi = +1.
    pub fn delta_plus(&self) -> f64 {
        self.delta_plus
    }

    /// delta value on the branch xi = -1.
    pub fn delta_minus(&self) -> f64 {
        self.delta_minus
    }

    /// delta(t) = alpha * xi - beta with alpha = 1/sqrt(1-e^{-2t}) and
    /// beta = e^{-t} alpha. Convenient for vectorized evaluations.
    pub fn alpha_beta(&self) -> (f64, f64) {
        let alpha = 1.0 / self.variance.sqrt();
        (alpha, self.exp_neg_t * alpha)
    }

    /// E |delta(t)|^p by two-point enumeration.
    pub fn delta_abs_moment(&self, p: f64) -> f64 {
        self.p_plus * self.delta_plus.abs().powf(p)
            + self.p_minus * self.delta_minus.abs().powf(p)
    }

    /// E |(xi - xi')/sqrt(Var xi)|^p for an independent copy xi', in closed
    /// form: 2^{p-1} (1 - e^{-2t})^{1 - p/2}.
    pub fn symmetrized_abs_moment(&self, p: f64) -> f64 {
        2f64.powf(p - 1.0) * self.variance.powf(1.0 - p / 2.0)
    }

    /// Same moment by exact enumeration of the nine (xi, xi') outcomes.
    pub fn symmetrized_abs_moment_oracle(&self, p: f64) -> f64 {
        let probs = [(1.0f64, self.p_plus), (-1.0, self.p_minus)];
        let mut acc = 0.0;
        for &(a, pa) in &probs {
            for &(b, pb) in &probs {
                let eta = (a - b) / self.variance.sqrt();
                if eta != 0.0 {
                    acc += pa * pb * eta.abs().powf(p);
                }
            }
        }
        acc
    }
}

/// Product weights of a biased sign mask: a mask with k set bits (k
/// coordinates equal to -1) has probability p_plus^{n-k} p_minus^k, so the
/// weight depends on the popcount alone. Entry k of the result is that
/// probability.
pub fn mask_weights(law: &BiasedCoordinateLaw, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    for (k, slot) in w.iter_mut().enumerate() {
        *slot = law.p_plus().powi((n - k) as i32) * law.p_minus().powi(k as i32);
    }
    w
}

/// Fixed node/weight rule integrating g against mu:
/// integral g dmu ~= sum_k w_k g(t_k), with w_k > 0 summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MuQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Half-width of the tanh-sinh parameter range. Deep enough that algebraic
/// endpoint singularities up to u^{-0.9} are resolved, shallow enough that
/// t(theta) never underflows to zero at the innermost node.
const TAU_MAX: f64 = 4.5;

/// t = -ln cos(theta) for theta = (pi/2) u, evaluated without cancellation
/// at either end of (0, pi/2). Near zero, cos(theta) = 1 - 2 sin^2(theta/2);
/// near pi/2, cos(theta) = sin((pi/2)(1 - u)).
#[inline]
fn theta_to_t(u: f64, one_minus_u: f64) -> f64 {
    if u <= 0.5 {
        let half_sin = (FRAC_PI_2 * u / 2.0).sin();
        -(-2.0 * half_sin * half_sin).ln_1p()
    } else {
        -(FRAC_PI_2 * one_minus_u).sin().ln()
    }
}

impl MuQuadrature {
    /// Builds an `m`-node rule. Nodes are tanh-sinh points for the uniform
    /// variable on (0, pi/2), mapped through t(theta) = -ln cos(theta);
    /// weights are renormalized to sum to exactly one.
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("quadrature needs at least one node"));
        }
        let half = (m / 2) as i64;
        let h = 2.0 * TAU_MAX / m as f64;
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for k in -half..(m as i64 - half) {
            let tau = k as f64 * h;
            let s = FRAC_PI_2 * tau.sinh();
            // u = (1 + tanh(s))/2 and 1-u, both evaluated without cancellation.
            let (u, one_minus_u) = if s >= 0.0 {
                let e = (-2.0 * s).exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            } else {
                let e = (2.0 * s).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            };
            let t = theta_to_t(u, one_minus_u);
            let w = h * PI * u * one_minus_u * tau.cosh();
            if w > 0.0 && t > 0.0 {
                nodes.push(t);
                weights.push(w);
            }
        }
        if nodes.is_empty() {
            return Err(Error::numerical("all quadrature nodes degenerated"));
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(MuQuadrature { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// integral g dmu by this rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(&t, &w)| w * g(t))
            .sum()
    }
}

/// Parameter range of the adaptive oracle. Wider than the fixed rule's so
/// that even u^{-0.9} endpoint singularities are truncated below 1e-12;
/// weights underflow to zero before u does, and zero-weight nodes are
/// skipped.
const TAU_MAX_ADAPTIVE: f64 = 6.0;

/// Adaptive tanh-sinh integration of f over (0, 1). The integrand receives
/// both u and 1-u so it can evaluate accurately at either endpoint; algebraic
/// singularities u^{a-1}, a > 0, are handled natively.
pub fn tanh_sinh_01<F>(f: F, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let eval = |h: f64| -> f64 {
        let steps = (TAU_MAX_ADAPTIVE / h).ceil() as i64;
        let mut acc = 0.0;
        for k in -steps..=steps {
            let tau = k as f64 * h;
            let s = FRAC_PI_2 * tau.sinh();
            let (u, omu) = if s >= 0.0 {
                let e = (-2.0 * s).exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            } else {
                let e = (2.0 * s).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            };
            let w = h * PI * u * omu * tau.cosh();
            if w > 0.0 {
                acc += w * f(u, omu);
            }
        }
        acc
    };
    let mut h = 0.5;
    let mut prev = eval(h);
    for _ in 0..10 {
        h /= 2.0;
        let next = eval(h);
        if (next - prev).abs() <= tol * (1.0 + next.abs()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::numerical(format!(
        "tanh-sinh integration did not converge to {tol:e} (last value {prev})"
    )))
}

/// Independent adaptive integration of g against the raw density of mu,
/// used to validate the pushforward construction. Substituting u = 1-e^{-t}
/// turns the integral into (2/pi) * int_0^1 g(-ln(1-u)) / sqrt(u(2-u)) du,
/// whose endpoint singularity tanh-sinh resolves.
pub fn mu_integral_adaptive<F>(g: F, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    tanh_sinh_01(
        |u, one_minus_u| {
            let t = if u <= 0.5 { -(-u).ln_1p() } else { -one_minus_u.ln() };
            (2.0 / PI) * g(t) / (u * (2.0 - u)).sqrt()
        },
        tol,
    )
}

/// A biased sign vector sampled coordinate-wise: bit j of the result is set
/// when xi_j = -1. Draw k indexes independent vectors from one stream.
pub fn sample_biased_vector(law: &BiasedCoordinateLaw, n: usize, rng: &CounterRng, k: u64) -> u64 {
    debug_assert!(n <= 64);
    let mut mask = 0u64;
    for j in 0..n {
        if rng.uniform_at(k * n as u64 + j as u64) >= law.p_plus() {
            mask |= 1 << j;
        }
    }
    mask
}

/// A draw from mu: theta uniform on (0, pi/2) pushed through -ln cos(theta).
pub fn sample_mu(rng: &CounterRng, k: u64) -> f64 {
    let u = rng.uniform_open_at(k);
    theta_to_t(u, 1.0 - u)
}

/// Closed form of int_0^infty P{|xi_j(t) - xi_j'(t)| > s}^{1/r} ds
/// = 2^{1 - 1/r} (1 - e^{-2t})^{1/r}.
pub fn tail_integral(t: f64, r: f64) -> Result<f64> {
    let law = BiasedCoordinateLaw::new(t)?;
    if !(r >= 1.0) {
        return Err(Error::param(format!("tail integral needs r >= 1, got {r}")));
    }
    Ok(2f64.powf(1.0 - 1.0 / r) * law.variance().powf(1.0 / r))
}

/// Recomputes the tail integral from the two-point law: |xi - xi'| is 2 with
/// probability 2 p_plus p_minus and 0 otherwise, so the integrand is the
/// constant (2 p_plus p_minus)^{1/r} on [0, 2) and vanishes beyond.
pub fn tail_integral_oracle(t: f64, r: f64) -> Result<f64> {
    let law = BiasedCoordinateLaw::new(t)?;
    if !(r >= 1.0) {
        return Err(Error::param(format!("tail integral needs r >= 1, got {r}")));
    }
    let outcomes = [(1.0f64, law.p_plus()), (-1.0, law.p_minus())];
    let mut tail = 0.0;
    for &(a, pa) in &outcomes {
        for &(b, pb) in &outcomes {
            if (a - b).abs() > 1.0 {
                tail += pa * pb;
            }
        }
    }
    Ok(2.0 * tail.powf(1.0 / r))
}

/// Closed form checked against the two-point oracle; fails if the two
/// disagree beyond 1e-14.
pub fn tail_integral_checked(t: f64, r: f64) -> Result<f64> {
    let closed = tail_integral(t, r)?;
    let oracle = tail_integral_oracle(t, r)?;
    if (closed - oracle).abs() > 1e-14 * (1.0 + closed.abs()) {
        return Err(Error::numerical(format!(
            "tail integral mismatch at t={t}, r={r}: closed {closed} vs oracle {oracle}"
        )));
    }
    Ok(closed)
}

/// Result of [`mu_weighted_integral`]: the mu-side quadrature value and the
/// exponent bound it stays below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuWeightedIntegral {
    /// (pi/2) * integral (1 - e^{-2t})^{1/m - 1/2} mu(dt).
    pub mu_side: f64,
    /// The dominating value max(q, p) = m.
    pub bound: f64,
}

/// Evaluates (pi/2) int (1-e^{-2t})^{1/m - 1/2} mu(dt) for m = `m_exp` and
/// verifies the two facts it is bounded by: the dominating integral
/// int_0^infty e^{-t} (1-e^{-t})^{1/m - 1} dt equals m (checked by
/// independent quadrature of int_0^1 u^{1/m - 1} du), and the mu-side value
/// does not exceed it.
pub fn mu_weighted_integral(m_exp: f64, quad: &MuQuadrature) -> Result<MuWeightedIntegral> {
    if !(m_exp >= 1.0) {
        return Err(Error::param(format!(
            "mu-weighted integral needs exponent >= 1, got {m_exp}"
        )));
    }
    let a = 1.0 / m_exp - 0.5;
    let mu_side = FRAC_PI_2 * quad.integrate(|t| (-(-2.0 * t).exp_m1()).powf(a));
    let rhs = tanh_sinh_01(|u, _| u.powf(1.0 / m_exp - 1.0), 1e-11)?;
    if (rhs - m_exp).abs() > 1e-8 * (1.0 + m_exp) {
        return Err(Error::numerical(format!(
            "dominating integral for m={m_exp} evaluated to {rhs}, expected {m_exp}"
        )));
    }
    if mu_side > m_exp + 1e-8 {
        return Err(Error::numerical(format!(
            "mu-side integral {mu_side} exceeds its bound {m_exp}"
        )));
    }
    Ok(MuWeightedIntegral { mu_side, bound: m_exp })
}

/// Gauss-Legendre nodes and weights on (0, 1), by Newton iteration on the
/// Legendre polynomial. Used where integrands are known to be smooth (the
/// semigroup route of the pointwise identity), not for mu itself.
pub fn gauss_legendre_01(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_m(x) and P'_m(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = p1;
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[m - 1 - i] = 0.5 * (x + 1.0);
        weights[m - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    #[test]
    fn law_rejects_nonpositive_time() {
        assert!(BiasedCoordinateLaw::new(0.0).is_err());
        assert!(BiasedCoordinateLaw::new(-1.0).is_err());
        assert!(BiasedCoordinateLaw::new(f64::NAN).is_err());
    }

    #[test]
    fn law_at_ln_two() {
        let law = BiasedCoordinateLaw::new(LN_2).unwrap();
        assert_abs_diff_eq!(law.p_plus(), 0.75, epsilon = 1e-16);
        assert_abs_diff_eq!(law.p_minus(), 0.25, epsilon = 1e-16);
        assert_abs_diff_eq!(law.delta_plus(), 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(law.delta_minus(), -(3f64.sqrt()), epsilon = 1e-15);
    }

    #[test]
    fn law_long_time_limit_is_uniform() {
        let law = BiasedCoordinateLaw::new(40.0).unwrap();
        assert_abs_diff_eq!(law.p_plus(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(law.delta_plus(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(law.delta_minus(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn law_is_standardized_on_a_grid() {
        // log-spaced t over [1e-3, 40]
        for i in 0..=60 {
            let t = 1e-3 * (40.0f64 / 1e-3).powf(i as f64 / 60.0);
            let law = BiasedCoordinateLaw::new(t).unwrap();
            assert!((law.p_plus() + law.p_minus() - 1.0).abs() < 1e-15);
            let mean = law.p_plus() * law.delta_plus() + law.p_minus() * law.delta_minus();
            let var = law.p_plus() * law.delta_plus().powi(2)
                + law.p_minus() * law.delta_minus().powi(2);
            assert!(mean.abs() < 1e-12, "t={t} mean={mean}");
            assert!((var - 1.0).abs() < 1e-12, "t={t} var={var}");
        }
    }

    #[test]
    fn quadrature_mass_is_one() {
        for m in [1, 32, 64, 128] {
            let quad = MuQuadrature::new(m).unwrap();
            let mass: f64 = quad.weights().iter().sum();
            assert!((mass - 1.0).abs() < 1e-10, "m={m} mass={mass}");
            assert!(quad.nodes().iter().all(|&t| t > 0.0));
        }
        assert!(MuQuadrature::new(0).is_err());
    }

    #[test]
    fn quadrature_reproduces_exponential_moment() {
        let quad = MuQuadrature::new(64).unwrap();
        let got = quad.integrate(|t| (-t).exp());
        assert_abs_diff_eq!(got, 2.0 / PI, epsilon = 1e-8);
        let oracle = mu_integral_adaptive(|t| (-t).exp(), 1e-11).unwrap();
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-10);
    }

    #[test]
    fn quadrature_reproduces_delta_abs_moment_integral() {
        // integrand * density simplifies: sqrt(1 - e^{-2t}) d mu = (2/pi) e^{-t} dt.
        let quad = MuQuadrature::new(64).unwrap();
        let got = quad.integrate(|t| (-(-2.0 * t).exp_m1()).sqrt());
        assert_abs_diff_eq!(got, 2.0 / PI, epsilon = 1e-8);
        let oracle = mu_integral_adaptive(|t| (-(-2.0 * t).exp_m1()).sqrt(), 1e-11).unwrap();
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-10);
    }

    #[test]
    fn quadrature_self_consistency() {
        // Doubling the node count moves the listed integrals by < 1e-9.
        let q64 = MuQuadrature::new(64).unwrap();
        let q128 = MuQuadrature::new(128).unwrap();
        let integrands: Vec<(&str, Box<dyn Fn(f64) -> f64>)> = vec![
            ("exp(-t)", Box::new(|t: f64| (-t).exp())),
            ("(1-e^-2t)^0.1", Box::new(|t: f64| (-(-2.0 * t).exp_m1()).powf(0.1))),
            ("(1-e^-2t)^0.5", Box::new(|t: f64| (-(-2.0 * t).exp_m1()).powf(0.5))),
            ("(1-e^-2t)^0.9", Box::new(|t: f64| (-(-2.0 * t).exp_m1()).powf(0.9))),
        ];
        for (name, g) in &integrands {
            let a = q64.integrate(g);
            let b = q128.integrate(g);
            assert!((a - b).abs() < 1e-9, "{name}: {a} vs {b}");
        }
    }

    #[test]
    fn sampler_matches_law() {
        let law = BiasedCoordinateLaw::new(LN_2).unwrap();
        let rng = CounterRng::new(7, 2);
        let trials = 1_000_000u64;
        let mut plus = 0u64;
        for k in 0..trials {
            if sample_biased_vector(&law, 1, &rng, k) & 1 == 0 {
                plus += 1;
            }
        }
        let p_hat = plus as f64 / trials as f64;
        assert!((p_hat - 0.75).abs() < 3e-3, "p_hat={p_hat}");
    }

    #[test]
    fn mu_sampler_matches_exponential_moment() {
        let rng = CounterRng::new(11, 4);
        let trials = 1_000_000u64;
        let mean: f64 =
            (0..trials).map(|k| (-sample_mu(&rng, k)).exp()).sum::<f64>() / trials as f64;
        assert!((mean - 2.0 / PI).abs() < 3e-3, "mean={mean}");
    }

    #[test]
    fn samplers_are_reproducible() {
        let law = BiasedCoordinateLaw::new(1.0).unwrap();
        let a = CounterRng::new(3, 5);
        let b = CounterRng::new(3, 5);
        for k in 0..100 {
            assert_eq!(
                sample_biased_vector(&law, 17, &a, k),
                sample_biased_vector(&law, 17, &b, k)
            );
            assert_eq!(sample_mu(&a, k).to_bits(), sample_mu(&b, k).to_bits());
        }
    }

    #[test]
    fn tail_integral_examples() {
        let got = tail_integral(LN_2, 2.0).unwrap();
        assert_abs_diff_eq!(got, (1.5f64).sqrt(), epsilon = 1e-15);

        for t in [0.3, 1.0, 2.5] {
            let got = tail_integral(t, 1.0).unwrap();
            assert_abs_diff_eq!(got, -(-2.0 * t).exp_m1(), epsilon = 1e-15);
        }

        for r in [1.0, 1.7, 4.0] {
            let got = tail_integral(40.0, r).unwrap();
            assert_abs_diff_eq!(got, 2f64.powf(1.0 - 1.0 / r), epsilon = 1e-13);
        }

        assert!(tail_integral(1.0, 0.5).is_err());
    }

    #[test]
    fn tail_integral_matches_oracle_on_grid() {
        for i in 0..20 {
            let t = 0.05 + 0.4 * i as f64;
            for r in [1.0, 1.5, 2.0, 3.0, 8.0] {
                let closed = tail_integral_checked(t, r).unwrap();
                let oracle = tail_integral_oracle(t, r).unwrap();
                assert!((closed - oracle).abs() < 1e-14, "t={t} r={r}");
            }
        }
    }

    #[test]
    fn mu_weighted_integral_examples() {
        let quad = MuQuadrature::new(64).unwrap();
        // m = 1 is the equality case: the integrand * density is (2/pi)e^{-t}.
        let one = mu_weighted_integral(1.0, &quad).unwrap();
        assert_abs_diff_eq!(one.mu_side, 1.0, epsilon = 1e-9);

        for m in [2.0, 4.5] {
            let res = mu_weighted_integral(m, &quad).unwrap();
            assert!(res.mu_side <= m + 1e-8);
            assert_eq!(res.bound, m);
        }
        assert!(mu_weighted_integral(0.5, &quad).is_err());
    }

    #[test]
    fn symmetrization_has_sign_invariant_distribution() {
        // The joint law of xi(t) - xi'(t) equals that of eps(xi(t) - xi'(t))
        // for fresh uniform signs eps; checked by exhaustive enumeration of
        // all outcomes for n <= 4. Differences live in {-2, 0, 2}^n, keyed
        // here in base 3.
        for n in 1..=4usize {
            let law = BiasedCoordinateLaw::new(0.9).unwrap();
            let signs = 1usize << n;
            let key = |diffs: &[i32]| -> usize {
                diffs.iter().fold(0usize, |acc, &v| acc * 3 + (v / 2 + 1) as usize)
            };
            let prob_mask = |mask: usize| -> f64 {
                (0..n)
                    .map(|j| if mask >> j & 1 == 0 { law.p_plus() } else { law.p_minus() })
                    .product()
            };
            let mut plain = vec![0.0f64; 3usize.pow(n as u32)];
            let mut flipped = vec![0.0f64; 3usize.pow(n as u32)];
            for xi in 0..signs {
                for xi2 in 0..signs {
                    let p = prob_mask(xi) * prob_mask(xi2);
                    let diffs: Vec<i32> = (0..n)
                        .map(|j| {
                            let a = if xi >> j & 1 == 0 { 1 } else { -1 };
                            let b = if xi2 >> j & 1 == 0 { 1 } else { -1 };
                            a - b
                        })
                        .collect();
                    plain[key(&diffs)] += p;
                    for eps in 0..signs {
                        let flipped_diffs: Vec<i32> = (0..n)
                            .map(|j| {
                                let s = if eps >> j & 1 == 0 { 1 } else { -1 };
                                s * diffs[j]
                            })
                            .collect();
                        flipped[key(&flipped_diffs)] += p / signs as f64;
                    }
                }
            }
            for (a, b) in plain.iter().zip(flipped.iter()) {
                assert!((a - b).abs() < 1e-15, "n={n}");
            }
        }
    }

    #[test]
    fn symmetrized_moment_bound_on_grid() {
        for i in 0..=30 {
            let t = 1e-2 * (30.0f64 / 1e-2).powf(i as f64 / 30.0);
            let law = BiasedCoordinateLaw::new(t).unwrap();
            for j in 0..=10 {
                let p = 1.0 + j as f64 / 10.0;
                let closed = law.symmetrized_abs_moment(p);
                let oracle = law.symmetrized_abs_moment_oracle(p);
                assert!((closed - oracle).abs() < 1e-12, "t={t} p={p}");
                assert!(closed <= 2f64.powf(p / 2.0) + 1e-12, "t={t} p={p}");
            }
        }
    }

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let (x, w) = gauss_legendre_01(8);
        // degree-15 polynomial integrated exactly
        let val: f64 = x.iter().zip(w.iter()).map(|(&x, &w)| w * x.powi(15)).sum();
        assert_abs_diff_eq!(val, 1.0 / 16.0, epsilon = 1e-14);
        let mass: f64 = w.iter().sum();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_oracle_flags_nonconvergence() {
        // A wildly oscillating integrand cannot reach 1e-14 agreement.
        let res = tanh_sinh_01(|u, _| (1e9 * u).sin() * 1e6, 1e-14);
        assert!(matches!(res, Err(Error::Numerical(_))));
    }
}
