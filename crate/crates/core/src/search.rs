//! Projected gradient ascent over vector configurations and Walsh
//! coefficients, estimating best constants: Rademacher type and cotype,
//! the classical Pisier ratio, and the Enflo ratio.
//!
//! Objectives are scale-invariant ratios; scale is removed by renormalizing
//! the denominator to one after every step. Nonsmooth norms (l_1, l_infty)
//! are ascended through finite-exponent smoothing and the reported best
//! value is always an exact-norm re-evaluation of the reported argument.
//! Every search value is therefore a certified lower bound on the constant
//! it estimates; no claim of global optimality is made.

use crate::cube::{inverse_walsh, walsh_transform, CubeFunction, WalshSpectrum};
use crate::error::{Error, Result};
use crate::lab::{
    enflo_sides, pisier_classic_sides, EvalMode, Tolerances,
};
use crate::norms::{cotype_ratio, type_ratio, NormKind, NormSpec};
use crate::rng::CounterRng;
use rayon::prelude::*;
use serde::Serialize;

/// What to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Objective {
    /// Rademacher type-p ratio over vector configurations.
    TypeConstant { p: f64 },
    /// Cotype-q ratio over vector configurations.
    CotypeConstant { q: f64 },
    /// Classical Pisier ratio over functions (Walsh coefficients).
    PisierRatio { p: f64 },
    /// Enflo ratio over functions (Walsh coefficients).
    EnfloRatio { p: f64 },
}

impl Objective {
    fn exponent(&self) -> f64 {
        match *self {
            Objective::TypeConstant { p } => p,
            Objective::CotypeConstant { q } => q,
            Objective::PisierRatio { p } => p,
            Objective::EnfloRatio { p } => p,
        }
    }

    fn is_function_space(&self) -> bool {
        matches!(self, Objective::PisierRatio { .. } | Objective::EnfloRatio { .. })
    }
}

/// Step-size policy for accepted ascent steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StepRule {
    Fixed(f64),
    /// Halve from `initial` until the objective improves; reject the
    /// iteration when no improvement is found at the smallest step.
    Backtracking { initial: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    pub objective: Objective,
    pub norm: NormSpec,
    /// Number of vectors, or the cube dimension for function searches.
    pub n: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub step: StepRule,
    pub seed: u64,
    /// l_1 and l_infty are ascended as l_{e/(e-1)} and l_e with this e.
    pub smoothing_exponent: f64,
    /// Restrict function-space searches to Walsh degree <= cap.
    pub degree_cap: Option<usize>,
}

impl SearchConfig {
    pub fn new(objective: Objective, norm: NormSpec, n: usize, seed: u64) -> Self {
        SearchConfig {
            objective,
            norm,
            n,
            restarts: 16,
            max_iters: 500,
            step: StepRule::Backtracking { initial: 0.1 },
            seed,
            smoothing_exponent: 64.0,
            degree_cap: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("search needs n >= 1"));
        }
        if self.restarts == 0 {
            return Err(Error::param("search needs at least one restart"));
        }
        if !(self.smoothing_exponent.is_finite() && self.smoothing_exponent > 1.0) {
            return Err(Error::param("smoothing exponent must be finite and > 1"));
        }
        if !(self.objective.exponent() >= 1.0) {
            return Err(Error::param("objective exponent must be >= 1"));
        }
        if let Some(cap) = self.degree_cap {
            if cap == 0 || cap > self.n {
                return Err(Error::param("degree cap must lie in [1, n]"));
            }
        }
        Ok(())
    }
}

/// The maximizing argument.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SearchArgument {
    Vectors(Vec<Vec<f64>>),
    WalshCoefficients { n: usize, d: usize, coefficients: Vec<f64> },
}

/// Accepted objective values (exact-exponent scale, i.e. ratio^{1/p}) along
/// one restart, starting with the initial point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub accepted_values: Vec<f64>,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    /// Exact-norm evaluation of `argument`; a lower bound on the constant.
    pub best_value: f64,
    /// Smoothed objective at the same argument.
    pub best_value_smoothed: f64,
    pub argument: SearchArgument,
    pub traces: Vec<RestartTrace>,
    pub evaluations: u64,
}

/// The norm actually ascended: nonsmooth members of the l_p family are
/// replaced by finite-exponent smoothings.
fn smoothed_spec(norm: &NormSpec, e: f64) -> NormSpec {
    match norm.kind {
        NormKind::Lp(p) if p.is_infinite() => NormSpec { kind: NormKind::Lp(e), d: norm.d },
        NormKind::Lp(p) if p == 1.0 => {
            NormSpec { kind: NormKind::Lp(e / (e - 1.0)), d: norm.d }
        }
        _ => *norm,
    }
}

/// Gradient of the norm at v, written into `out`. Zero at the origin.
fn norm_gradient(spec: &NormSpec, v: &[f64], out: &mut [f64]) {
    let q = match spec.kind {
        NormKind::Euclidean => 2.0,
        NormKind::Lp(p) => p,
    };
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    if q == 2.0 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o = x / norm;
        }
        return;
    }
    if q == 1.0 {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o = x.signum() * f64::from(*x != 0.0);
        }
        return;
    }
    if q.is_infinite() {
        // Subgradient at the largest coordinate.
        let (mut arg, mut best) = (0usize, -1.0f64);
        for (i, x) in v.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                arg = i;
            }
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        out[arg] = v[arg].signum();
        return;
    }
    let s: f64 = v.iter().map(|x| (x.abs() / m).powf(q)).sum();
    let denom = s.powf((q - 1.0) / q);
    for (o, x) in out.iter_mut().zip(v.iter()) {
        *o = x.signum() * (x.abs() / m).powf(q - 1.0) / denom;
    }
}

/// Numerator/denominator pair with gradients in the flat argument space.
/// Both are homogeneous of degree `p`, so `ratio` is scale-invariant and the
/// projection divides by denominator^{1/p}.
trait RatioObjective: Sync {
    /// (numerator, denominator).
    fn sides(&self, x: &[f64]) -> (f64, f64);
    /// Gradient of log(num/den).
    fn log_gradient(&self, x: &[f64]) -> Vec<f64>;
}

fn ratio_value(obj: &dyn RatioObjective, x: &[f64]) -> f64 {
    let (num, den) = obj.sides(x);
    if den <= 0.0 {
        0.0
    } else {
        num / den
    }
}

// --- vector-space objectives -----------------------------------------------

struct VectorObjective {
    n: usize,
    d: usize,
    p: f64,
    norm: NormSpec,
    /// true: type (moment over norm-power sum); false: cotype (reciprocal).
    is_type: bool,
}

impl VectorObjective {
    /// E s(sum_j eps_j x_j)^p and its gradient, enumerated over all sign
    /// patterns with a Gray-code running sum.
    fn moment_and_grad(&self, x: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let (n, d, p) = (self.n, self.d, self.p);
        let size = 1usize << n;
        let mut sum = vec![0.0f64; d];
        for j in 0..n {
            for c in 0..d {
                sum[c] += x[j * d + c];
            }
        }
        let mut grad = vec![0.0f64; if want_grad { n * d } else { 0 }];
        let mut gbuf = vec![0.0f64; d];
        let mut acc = 0.0;
        let mut prev_gray = 0usize;
        let mut handle = |gray: usize, sum: &[f64], grad: &mut [f64], gbuf: &mut [f64]| {
            let s = self.norm.norm_unchecked(sum);
            acc += if p == 2.0 { s * s } else { s.powf(p) };
            if want_grad && s > 0.0 {
                norm_gradient(&self.norm, sum, gbuf);
                let scale = p * s.powf(p - 1.0);
                for j in 0..n {
                    let sgn = if gray >> j & 1 == 0 { 1.0 } else { -1.0 };
                    for c in 0..d {
                        grad[j * d + c] += sgn * scale * gbuf[c];
                    }
                }
            }
        };
        handle(0, &sum, &mut grad, &mut gbuf);
        for k in 1..size {
            let gray = k ^ (k >> 1);
            let j = (gray ^ prev_gray).trailing_zeros() as usize;
            let sgn_now = if gray >> j & 1 == 0 { 1.0 } else { -1.0 };
            for c in 0..d {
                sum[c] += 2.0 * sgn_now * x[j * d + c];
            }
            prev_gray = gray;
            handle(gray, &sum, &mut grad, &mut gbuf);
        }
        let scale = 1.0 / size as f64;
        acc *= scale;
        grad.iter_mut().for_each(|g| *g *= scale);
        (acc, grad)
    }

    /// sum_j s(x_j)^p and its gradient.
    fn powers_and_grad(&self, x: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let (n, d, p) = (self.n, self.d, self.p);
        let mut acc = 0.0;
        let mut grad = vec![0.0f64; if want_grad { n * d } else { 0 }];
        let mut gbuf = vec![0.0f64; d];
        for j in 0..n {
            let xj = &x[j * d..(j + 1) * d];
            let s = self.norm.norm_unchecked(xj);
            acc += s.powf(p);
            if want_grad && s > 0.0 {
                norm_gradient(&self.norm, xj, &mut gbuf);
                let scale = p * s.powf(p - 1.0);
                for c in 0..d {
                    grad[j * d + c] = scale * gbuf[c];
                }
            }
        }
        (acc, grad)
    }
}

impl RatioObjective for VectorObjective {
    fn sides(&self, x: &[f64]) -> (f64, f64) {
        let (moment, _) = self.moment_and_grad(x, false);
        let (powers, _) = self.powers_and_grad(x, false);
        if self.is_type {
            (moment, powers)
        } else {
            (powers, moment)
        }
    }

    fn log_gradient(&self, x: &[f64]) -> Vec<f64> {
        let (moment, gm) = self.moment_and_grad(x, true);
        let (powers, gp) = self.powers_and_grad(x, true);
        let (num, gnum, den, gden) =
            if self.is_type { (moment, gm, powers, gp) } else { (powers, gp, moment, gm) };
        gnum.iter()
            .zip(gden.iter())
            .map(|(a, b)| a / num.max(f64::MIN_POSITIVE) - b / den.max(f64::MIN_POSITIVE))
            .collect()
    }
}

// --- function-space objectives ----------------------------------------------

struct FunctionObjective {
    n: usize,
    d: usize,
    p: f64,
    norm: NormSpec,
    /// Masks whose coefficients are free; the empty set is always pinned to
    /// zero so E f = 0 identically.
    allowed: Vec<bool>,
    /// true: Enflo ratio; false: classical Pisier ratio.
    is_enflo: bool,
}

impl FunctionObjective {
    fn values(&self, coeffs: &[f64]) -> CubeFunction {
        let spectrum =
            WalshSpectrum::from_coefficients(self.n, self.d, coeffs.to_vec()).unwrap();
        inverse_walsh(&spectrum)
    }

    /// Maps a value-space gradient back to coefficient space (the transform
    /// matrix is symmetric) and zeroes the pinned masks.
    fn value_grad_to_coeffs(&self, grad_val: Vec<f64>) -> Vec<f64> {
        let f = CubeFunction::from_values(self.n, self.d, grad_val).unwrap();
        let spec = walsh_transform(&f);
        let size = 1usize << self.n;
        let mut out = spec.coefficients().to_vec();
        // walsh_transform divides by 2^n; the adjoint of the inverse
        // transform is the unnormalized butterfly.
        for v in &mut out {
            *v *= size as f64;
        }
        for (s, allowed) in self.allowed.iter().enumerate() {
            if !allowed {
                for c in 0..self.d {
                    out[s * self.d + c] = 0.0;
                }
            }
        }
        out
    }

    /// Numerator: E s(odd part)^p for Enflo, E s(f)^p for Pisier (the empty
    /// coefficient is pinned, so f is already centered).
    fn numerator(&self, values: &CubeFunction, want_grad: bool) -> (f64, Vec<f64>) {
        let (n, d, p) = (self.n, self.d, self.p);
        let size = 1usize << n;
        let vals = values.values();
        let full = size - 1;
        let mut acc = 0.0;
        let mut grad_val = vec![0.0f64; if want_grad { size * d } else { 0 }];
        let mut buf = vec![0.0f64; d];
        let mut gbuf = vec![0.0f64; d];
        for xpt in 0..size {
            let v: &mut [f64] = &mut buf;
            if self.is_enflo {
                let y = xpt ^ full;
                for c in 0..d {
                    v[c] = (vals[xpt * d + c] - vals[y * d + c]) / 2.0;
                }
            } else {
                v.copy_from_slice(&vals[xpt * d..(xpt + 1) * d]);
            }
            let s = self.norm.norm_unchecked(v);
            acc += s.powf(p);
            if want_grad && s > 0.0 {
                norm_gradient(&self.norm, v, &mut gbuf);
                let scale = p * s.powf(p - 1.0) / size as f64;
                if self.is_enflo {
                    let y = xpt ^ full;
                    for c in 0..d {
                        grad_val[xpt * d + c] += scale * gbuf[c] / 2.0;
                        grad_val[y * d + c] -= scale * gbuf[c] / 2.0;
                    }
                } else {
                    for c in 0..d {
                        grad_val[xpt * d + c] += scale * gbuf[c];
                    }
                }
            }
        }
        (acc / size as f64, grad_val)
    }

    /// Denominator: sum_j E s(D_jf)^p for Enflo,
    /// E_{eps,delta} s(sum_j delta_j D_jf)^p for Pisier.
    fn denominator(&self, values: &CubeFunction, want_grad: bool) -> (f64, Vec<f64>) {
        let (n, d, p) = (self.n, self.d, self.p);
        let size = 1usize << n;
        let vals = values.values();
        let mut acc = 0.0;
        let mut grad_val = vec![0.0f64; if want_grad { size * d } else { 0 }];
        let mut buf = vec![0.0f64; d];
        let mut gbuf = vec![0.0f64; d];
        if self.is_enflo {
            for xpt in 0..size {
                for j in 0..n {
                    let y = xpt ^ (1 << j);
                    for c in 0..d {
                        buf[c] = (vals[xpt * d + c] - vals[y * d + c]) / 2.0;
                    }
                    let s = self.norm.norm_unchecked(&buf);
                    acc += s.powf(p);
                    if want_grad && s > 0.0 {
                        norm_gradient(&self.norm, &buf, &mut gbuf);
                        let scale = p * s.powf(p - 1.0) / size as f64;
                        for c in 0..d {
                            grad_val[xpt * d + c] += scale * gbuf[c] / 2.0;
                            grad_val[y * d + c] -= scale * gbuf[c] / 2.0;
                        }
                    }
                }
            }
            (acc / size as f64, grad_val)
        } else {
            // Joint enumeration over (eps, delta); derivatives are evaluated
            // on the fly from the value table.
            let mut derivs = vec![0.0f64; n * d];
            for eps in 0..size {
                for j in 0..n {
                    let y = eps ^ (1 << j);
                    for c in 0..d {
                        derivs[j * d + c] = (vals[eps * d + c] - vals[y * d + c]) / 2.0;
                    }
                }
                for delta in 0..size {
                    for c in 0..d {
                        buf[c] = 0.0;
                    }
                    for j in 0..n {
                        let sgn = if delta >> j & 1 == 0 { 1.0 } else { -1.0 };
                        for c in 0..d {
                            buf[c] += sgn * derivs[j * d + c];
                        }
                    }
                    let s = self.norm.norm_unchecked(&buf);
                    acc += s.powf(p);
                    if want_grad && s > 0.0 {
                        norm_gradient(&self.norm, &buf, &mut gbuf);
                        let scale =
                            p * s.powf(p - 1.0) / (size as f64 * size as f64);
                        for j in 0..n {
                            let sgn = if delta >> j & 1 == 0 { 1.0 } else { -1.0 };
                            let y = eps ^ (1 << j);
                            for c in 0..d {
                                grad_val[eps * d + c] += scale * sgn * gbuf[c] / 2.0;
                                grad_val[y * d + c] -= scale * sgn * gbuf[c] / 2.0;
                            }
                        }
                    }
                }
            }
            (acc / (size as f64 * size as f64), grad_val)
        }
    }
}

impl RatioObjective for FunctionObjective {
    fn sides(&self, x: &[f64]) -> (f64, f64) {
        let values = self.values(x);
        let (num, _) = self.numerator(&values, false);
        let (den, _) = self.denominator(&values, false);
        (num, den)
    }

    fn log_gradient(&self, x: &[f64]) -> Vec<f64> {
        let values = self.values(x);
        let (num, gnum_val) = self.numerator(&values, true);
        let (den, gden_val) = self.denominator(&values, true);
        let gnum = self.value_grad_to_coeffs(gnum_val);
        let gden = self.value_grad_to_coeffs(gden_val);
        gnum.iter()
            .zip(gden.iter())
            .map(|(a, b)| a / num.max(f64::MIN_POSITIVE) - b / den.max(f64::MIN_POSITIVE))
            .collect()
    }
}

// --- the ascent loop ---------------------------------------------------------

fn project(obj: &dyn RatioObjective, p: f64, x: &mut [f64]) -> bool {
    let (_, den) = obj.sides(x);
    if den <= 0.0 || !den.is_finite() {
        return false;
    }
    let scale = den.powf(-1.0 / p);
    x.iter_mut().for_each(|v| *v *= scale);
    true
}

struct RestartOutcome {
    trace: RestartTrace,
    final_point: Vec<f64>,
    initial_point: Vec<f64>,
}

fn run_restart(
    obj: &dyn RatioObjective,
    cfg: &SearchConfig,
    restart: usize,
    mut x: Vec<f64>,
) -> Option<RestartOutcome> {
    let p = cfg.objective.exponent();
    if !project(obj, p, &mut x) {
        return None;
    }
    let initial_point = x.clone();
    let mut evals = 1u64;
    let mut current = ratio_value(obj, &x);
    let mut trace = vec![current.powf(1.0 / p)];
    let mut stall = 0usize;
    for _ in 0..cfg.max_iters {
        let grad = obj.log_gradient(&x);
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-13 {
            break;
        }
        let mut accepted = false;
        match cfg.step {
            StepRule::Fixed(step) => {
                let mut trial: Vec<f64> =
                    x.iter().zip(grad.iter()).map(|(a, g)| a + step * g).collect();
                if project(obj, p, &mut trial) {
                    let value = ratio_value(obj, &trial);
                    evals += 1;
                    x = trial;
                    if value > current {
                        accepted = true;
                    }
                    current = value;
                    trace.push(current.powf(1.0 / p));
                }
            }
            StepRule::Backtracking { initial } => {
                let mut step = initial;
                for _ in 0..40 {
                    let mut trial: Vec<f64> =
                        x.iter().zip(grad.iter()).map(|(a, g)| a + step * g).collect();
                    if project(obj, p, &mut trial) {
                        let value = ratio_value(obj, &trial);
                        evals += 1;
                        if value > current {
                            x = trial;
                            current = value;
                            trace.push(current.powf(1.0 / p));
                            accepted = true;
                            break;
                        }
                    }
                    step /= 2.0;
                }
            }
        }
        if !accepted {
            break;
        }
        let len = trace.len();
        if len >= 2 && (trace[len - 1] - trace[len - 2]).abs() < 1e-13 * (1.0 + trace[len - 1]) {
            stall += 1;
            if stall >= 5 {
                break;
            }
        } else {
            stall = 0;
        }
    }
    Some(RestartOutcome {
        trace: RestartTrace { restart, accepted_values: trace, evaluations: evals },
        final_point: x,
        initial_point,
    })
}

fn initial_point(cfg: &SearchConfig, restart: usize, rng: &CounterRng) -> Vec<f64> {
    let d = cfg.norm.d;
    if cfg.objective.is_function_space() {
        let size = 1usize << cfg.n;
        let mut coeffs = vec![0.0f64; size * d];
        if restart == 0 {
            // Structured start: the degree-one basis pattern, mirroring the
            // vector-space searches.
            for j in 0..cfg.n {
                coeffs[(1usize << j) * d + (j % d)] = 1.0;
            }
        } else {
            let cap = cfg.degree_cap.unwrap_or(cfg.n);
            let base = restart as u64 * (size * d) as u64;
            for s in 1..size {
                if (s as u64).count_ones() as usize > cap {
                    continue;
                }
                for c in 0..d {
                    coeffs[s * d + c] = rng.symmetric_at(base + (s * d + c) as u64);
                }
            }
        }
        coeffs
    } else {
        let mut x = vec![0.0f64; cfg.n * d];
        if restart == 0 {
            for j in 0..cfg.n {
                x[j * d + (j % d)] = 1.0;
            }
        } else {
            let base = restart as u64 * (cfg.n * d) as u64;
            for (i, slot) in x.iter_mut().enumerate() {
                *slot = rng.symmetric_at(base + i as u64);
            }
        }
        x
    }
}

fn build_objective(cfg: &SearchConfig) -> Result<Box<dyn RatioObjective>> {
    let smooth = smoothed_spec(&cfg.norm, cfg.smoothing_exponent);
    let p = cfg.objective.exponent();
    Ok(match cfg.objective {
        Objective::TypeConstant { .. } => Box::new(VectorObjective {
            n: cfg.n,
            d: cfg.norm.d,
            p,
            norm: smooth,
            is_type: true,
        }),
        Objective::CotypeConstant { .. } => Box::new(VectorObjective {
            n: cfg.n,
            d: cfg.norm.d,
            p,
            norm: smooth,
            is_type: false,
        }),
        Objective::PisierRatio { .. } | Objective::EnfloRatio { .. } => {
            if cfg.n > crate::cube::MAX_JOINT_N {
                return Err(Error::capacity(format!(
                    "function-space search enumerates 4^n sign pairs; n={} exceeds {}",
                    cfg.n,
                    crate::cube::MAX_JOINT_N
                )));
            }
            let size = 1usize << cfg.n;
            let cap = cfg.degree_cap.unwrap_or(cfg.n);
            let allowed: Vec<bool> = (0..size)
                .map(|s| s != 0 && (s as u64).count_ones() as usize <= cap)
                .collect();
            Box::new(FunctionObjective {
                n: cfg.n,
                d: cfg.norm.d,
                p,
                norm: smooth,
                allowed,
                is_enflo: matches!(cfg.objective, Objective::EnfloRatio { .. }),
            })
        }
    })
}

/// Exact-norm evaluation of a candidate argument, routed through the same
/// evaluators the verification suites use.
fn exact_value(cfg: &SearchConfig, point: &[f64]) -> Result<f64> {
    let p = cfg.objective.exponent();
    match cfg.objective {
        Objective::TypeConstant { .. } => {
            let vectors = split_vectors(point, cfg.n, cfg.norm.d);
            type_ratio(&vectors, p, &cfg.norm)
        }
        Objective::CotypeConstant { .. } => {
            let vectors = split_vectors(point, cfg.n, cfg.norm.d);
            cotype_ratio(&vectors, p, &cfg.norm)
        }
        Objective::PisierRatio { .. } => {
            let f = coeffs_to_function(cfg, point)?;
            let report =
                pisier_classic_sides(&f, p, &cfg.norm, EvalMode::Exact, Tolerances::default())?;
            Ok(report.constant.unwrap_or(0.0))
        }
        Objective::EnfloRatio { .. } => {
            let f = coeffs_to_function(cfg, point)?;
            let report = enflo_sides(&f, p, &cfg.norm, Tolerances::default())?;
            Ok(report.constant.unwrap_or(0.0))
        }
    }
}

fn split_vectors(point: &[f64], n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|j| point[j * d..(j + 1) * d].to_vec()).collect()
}

fn coeffs_to_function(cfg: &SearchConfig, point: &[f64]) -> Result<CubeFunction> {
    let spectrum = WalshSpectrum::from_coefficients(cfg.n, cfg.norm.d, point.to_vec())?;
    Ok(inverse_walsh(&spectrum))
}

/// Runs the configured search: parallel restarts, deterministic merge
/// (best exact value, ties to the lowest restart index). Both the initial
/// and final point of every restart are candidates, so structured starts
/// are never lost to smoothing bias.
pub fn run_search(cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let objective = build_objective(cfg)?;
    let rng = CounterRng::new(cfg.seed, 149);
    let outcomes: Vec<Option<RestartOutcome>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(objective.as_ref(), cfg, r, initial_point(cfg, r, &rng)))
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut traces = Vec::new();
    let mut evaluations = 0u64;
    for outcome in outcomes.into_iter().flatten() {
        evaluations += outcome.trace.evaluations;
        for candidate in [&outcome.initial_point, &outcome.final_point] {
            let value = exact_value(cfg, candidate)?;
            if best.as_ref().map_or(true, |(b, _)| value > *b) {
                best = Some((value, candidate.clone()));
            }
        }
        traces.push(outcome.trace);
    }
    let (best_value, point) = best.ok_or_else(|| {
        Error::numerical("every restart degenerated to a zero denominator")
    })?;
    let best_value_smoothed =
        ratio_value(objective.as_ref(), &point).powf(1.0 / cfg.objective.exponent());
    let argument = if cfg.objective.is_function_space() {
        SearchArgument::WalshCoefficients {
            n: cfg.n,
            d: cfg.norm.d,
            coefficients: point,
        }
    } else {
        SearchArgument::Vectors(split_vectors(&point, cfg.n, cfg.norm.d))
    };
    Ok(SearchResult { best_value, best_value_smoothed, argument, traces, evaluations })
}

/// Lower-bound estimate of the Rademacher type-p constant.
pub fn estimate_type_constant(cfg: &SearchConfig) -> Result<SearchResult> {
    match cfg.objective {
        Objective::TypeConstant { .. } => run_search(cfg),
        _ => Err(Error::param("configuration does not carry a type objective")),
    }
}

/// Lower-bound estimate of the cotype-q constant.
pub fn estimate_cotype_constant(cfg: &SearchConfig) -> Result<SearchResult> {
    match cfg.objective {
        Objective::CotypeConstant { .. } => run_search(cfg),
        _ => Err(Error::param("configuration does not carry a cotype objective")),
    }
}

/// Lower-bound estimate of the best classical-Pisier ratio over functions.
pub fn estimate_pisier_ratio(cfg: &SearchConfig) -> Result<SearchResult> {
    match cfg.objective {
        Objective::PisierRatio { .. } => run_search(cfg),
        _ => Err(Error::param("configuration does not carry a Pisier objective")),
    }
}

/// Lower-bound estimate of the Enflo ratio over functions.
pub fn estimate_enflo_ratio(cfg: &SearchConfig) -> Result<SearchResult> {
    match cfg.objective {
        Objective::EnfloRatio { .. } => run_search(cfg),
        _ => Err(Error::param("configuration does not carry an Enflo objective")),
    }
}

/// Exact re-evaluation of a search result's argument; by construction it
/// reproduces `best_value`.
pub fn reevaluate(cfg: &SearchConfig, result: &SearchResult) -> Result<f64> {
    let point = match &result.argument {
        SearchArgument::Vectors(vs) => {
            let mut flat = Vec::with_capacity(vs.len() * cfg.norm.d);
            for v in vs {
                flat.extend_from_slice(v);
            }
            flat
        }
        SearchArgument::WalshCoefficients { coefficients, .. } => coefficients.clone(),
    };
    exact_value(cfg, &point)
}

/// Central finite-difference gradient of the smoothed log-ratio, for
/// validating the analytic gradients.
pub fn finite_difference_log_gradient(cfg: &SearchConfig, point: &[f64], h: f64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let obj = build_objective(cfg)?;
    let mut out = vec![0.0; point.len()];
    let mut work = point.to_vec();
    for i in 0..point.len() {
        work[i] = point[i] + h;
        let (nu, du) = obj.sides(&work);
        work[i] = point[i] - h;
        let (nl, dl) = obj.sides(&work);
        work[i] = point[i];
        out[i] = ((nu / du).ln() - (nl / dl).ln()) / (2.0 * h);
    }
    Ok(out)
}

/// Analytic gradient of the smoothed log-ratio at a point.
pub fn analytic_log_gradient(cfg: &SearchConfig, point: &[f64]) -> Result<Vec<f64>> {
    cfg.validate()?;
    let obj = build_objective(cfg)?;
    Ok(obj.log_gradient(point))
}

/// Smoothed ratio^{1/p} at a point, for inspecting the ascent surface.
pub fn smoothed_value(cfg: &SearchConfig, point: &[f64]) -> Result<f64> {
    cfg.validate()?;
    let obj = build_objective(cfg)?;
    Ok(ratio_value(obj.as_ref(), point).powf(1.0 / cfg.objective.exponent()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg(objective: Objective, norm: NormSpec, n: usize, seed: u64) -> SearchConfig {
        let mut c = SearchConfig::new(objective, norm, n, seed);
        c.restarts = 6;
        c.max_iters = 300;
        c
    }

    #[test]
    fn hilbert_type_and_cotype_are_one() {
        let norm = NormSpec::euclidean(3).unwrap();
        let t = estimate_type_constant(&cfg(Objective::TypeConstant { p: 2.0 }, norm, 4, 1))
            .unwrap();
        assert_abs_diff_eq!(t.best_value, 1.0, epsilon = 1e-6);
        let c =
            estimate_cotype_constant(&cfg(Objective::CotypeConstant { q: 2.0 }, norm, 4, 2))
                .unwrap();
        assert_abs_diff_eq!(c.best_value, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn single_vector_searches_return_one() {
        let norm = NormSpec::lp(1.5, 2).unwrap();
        let t = estimate_type_constant(&cfg(Objective::TypeConstant { p: 1.5 }, norm, 1, 3))
            .unwrap();
        assert_abs_diff_eq!(t.best_value, 1.0, epsilon = 1e-9);
        let c =
            estimate_cotype_constant(&cfg(Objective::CotypeConstant { q: 2.0 }, norm, 1, 4))
                .unwrap();
        assert_abs_diff_eq!(c.best_value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn l1_type_reaches_sqrt_two() {
        let norm = NormSpec::lp(1.0, 2).unwrap();
        let t = estimate_type_constant(&cfg(Objective::TypeConstant { p: 2.0 }, norm, 2, 5))
            .unwrap();
        assert!(t.best_value >= 2f64.sqrt() - 1e-6, "best {}", t.best_value);
    }

    #[test]
    fn linf_cotype_tracks_sqrt_n() {
        // The basis configuration attains sqrt(n) in l_infty^n at q = 2, and
        // John's bound keeps the supremum at sqrt(n).
        let mut previous = 0.0;
        for n in 2..=5 {
            let norm = NormSpec::linf(n).unwrap();
            let c = estimate_cotype_constant(&cfg(
                Objective::CotypeConstant { q: 2.0 },
                norm,
                n,
                6,
            ))
            .unwrap();
            assert!(c.best_value >= (n as f64).sqrt() - 1e-9, "n={n}: {}", c.best_value);
            assert!(c.best_value > previous + 0.05, "not increasing at n={n}");
            previous = c.best_value;
        }
    }

    #[test]
    fn hilbert_pisier_and_enflo_cap_at_one() {
        let norm = NormSpec::euclidean(2).unwrap();
        let p = estimate_pisier_ratio(&cfg(Objective::PisierRatio { p: 2.0 }, norm, 3, 7))
            .unwrap();
        assert!(p.best_value <= 1.0 + 1e-6, "pisier {}", p.best_value);
        assert_abs_diff_eq!(p.best_value, 1.0, epsilon = 1e-6);

        let e = estimate_enflo_ratio(&cfg(Objective::EnfloRatio { p: 2.0 }, norm, 3, 8))
            .unwrap();
        assert!(e.best_value <= 1.0 + 1e-6, "enflo {}", e.best_value);
        assert_abs_diff_eq!(e.best_value, 1.0, epsilon = 1e-6);

        // Scalar targets are the d = 1 Hilbert case.
        let norm1 = NormSpec::euclidean(1).unwrap();
        let p1 = estimate_pisier_ratio(&cfg(Objective::PisierRatio { p: 2.0 }, norm1, 3, 9))
            .unwrap();
        assert!(p1.best_value <= 1.0 + 1e-6);
    }

    #[test]
    fn degree_one_enflo_matches_type_search() {
        let norm = NormSpec::lp(1.0, 2).unwrap();
        let t = estimate_type_constant(&cfg(Objective::TypeConstant { p: 2.0 }, norm, 2, 10))
            .unwrap();
        let mut ecfg = cfg(Objective::EnfloRatio { p: 2.0 }, norm, 2, 10);
        ecfg.degree_cap = Some(1);
        let e = estimate_enflo_ratio(&ecfg).unwrap();
        assert!(
            (t.best_value - e.best_value).abs() < 1e-6,
            "type {} vs degree-one enflo {}",
            t.best_value,
            e.best_value
        );
    }

    #[test]
    fn enflo_dominates_type_on_l1() {
        let norm = NormSpec::lp(1.0, 2).unwrap();
        let t = estimate_type_constant(&cfg(Objective::TypeConstant { p: 1.5 }, norm, 2, 11))
            .unwrap();
        let e = estimate_enflo_ratio(&cfg(Objective::EnfloRatio { p: 1.5 }, norm, 2, 11))
            .unwrap();
        assert!(e.best_value >= t.best_value - 1e-6, "enflo {} type {}", e.best_value, t.best_value);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let rng = CounterRng::new(77, 5);
        let norms = [
            NormSpec::euclidean(2).unwrap(),
            NormSpec::lp(1.5, 2).unwrap(),
            NormSpec::linf(2).unwrap(),
        ];
        for (i, norm) in norms.iter().enumerate() {
            for objective in [
                Objective::TypeConstant { p: 1.5 },
                Objective::CotypeConstant { q: 2.0 },
                Objective::PisierRatio { p: 2.0 },
                Objective::EnfloRatio { p: 1.7 },
            ] {
                let c = cfg(objective, *norm, 3, 0);
                let dims = if c.objective.is_function_space() {
                    (1 << c.n) * norm.d
                } else {
                    c.n * norm.d
                };
                let point: Vec<f64> = (0..dims)
                    .map(|k| 0.3 + rng.uniform_at((i * 1000 + k) as u64))
                    .collect();
                // Pin the empty-mask coefficient like the optimizer does.
                let point: Vec<f64> = if c.objective.is_function_space() {
                    let mut p = point;
                    for comp in 0..norm.d {
                        p[comp] = 0.0;
                    }
                    p
                } else {
                    point
                };
                let analytic = analytic_log_gradient(&c, &point).unwrap();
                let fd = finite_difference_log_gradient(&c, &point, 1e-6).unwrap();
                for (k, (a, f)) in analytic.iter().zip(fd.iter()).enumerate() {
                    if c.objective.is_function_space() && k < norm.d {
                        // Pinned coordinates carry no analytic gradient.
                        continue;
                    }
                    assert!(
                        (a - f).abs() <= 1e-5 * (1.0 + f.abs()),
                        "{objective:?} {} dim {k}: analytic {a} vs fd {f}",
                        norm.label()
                    );
                }
            }
        }
    }

    #[test]
    fn ascent_is_monotone_and_reevaluates() {
        let norm = NormSpec::lp(1.0, 2).unwrap();
        let c = cfg(Objective::TypeConstant { p: 2.0 }, norm, 3, 13);
        let result = estimate_type_constant(&c).unwrap();
        for trace in &result.traces {
            for w in trace.accepted_values.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "trace not monotone: {w:?}");
            }
        }
        let again = reevaluate(&c, &result).unwrap();
        assert!((again - result.best_value).abs() < 1e-9);
    }

    #[test]
    fn smoothed_gap_is_small_on_linf() {
        // At smoothing exponent 64 and n = d = 3 the intrinsic l_64-vs-l_inf
        // gap at the basis optimum is under two percent.
        let norm = NormSpec::linf(3).unwrap();
        let c = cfg(Objective::CotypeConstant { q: 2.0 }, norm, 3, 14);
        let result = estimate_cotype_constant(&c).unwrap();
        let gap = (result.best_value - result.best_value_smoothed).abs() / result.best_value;
        assert!(gap < 0.02, "smoothed gap {gap}");
    }

    #[test]
    fn deterministic_across_runs() {
        let norm = NormSpec::lp(1.0, 2).unwrap();
        let c = cfg(Objective::EnfloRatio { p: 1.5 }, norm, 3, 15);
        let a = estimate_enflo_ratio(&c).unwrap();
        let b = estimate_enflo_ratio(&c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let norm = NormSpec::euclidean(2).unwrap();
        let mut c = cfg(Objective::TypeConstant { p: 2.0 }, norm, 0, 0);
        assert!(run_search(&c).is_err());
        c.n = 2;
        c.restarts = 0;
        assert!(run_search(&c).is_err());
        c.restarts = 1;
        c.smoothing_exponent = 1.0;
        assert!(run_search(&c).is_err());
        c.smoothing_exponent = 64.0;
        c.degree_cap = Some(5);
        assert!(run_search(&c).is_err());
    }
}
