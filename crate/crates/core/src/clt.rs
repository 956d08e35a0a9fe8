//! Lifting a smooth Euclidean function to the cube {-1,1}^{n x N} and
//! watching the biased-sign cube inequality converge to its Gaussian
//! counterpart as N grows.
//!
//! The lifted function is never materialized as a table: points are
//! evaluated on demand, and discrete derivatives are exact two-point
//! differences (the asymptotic derivative formula is validated as a
//! property, never used for computation).

use crate::error::{Error, Result};
use crate::lab::{ConvexGauge, InequalityReport, ReportParams, Tolerances};
use crate::measure::{BiasedCoordinateLaw, MuQuadrature};
use crate::rng::CounterRng;
use crate::stats::RunningMoments;
use crate::sum::pairwise_map_reduce;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

const STREAM_EPS: u64 = 201;
const STREAM_XI: u64 = 202;
const STREAM_G: u64 = 203;
const STREAM_G_PRIME: u64 = 204;
const STREAM_MEAN_AUX: u64 = 205;

/// A smooth function R^n -> R^d given by evaluation and partial-derivative
/// callbacks, with declared regularity metadata.
#[derive(Clone)]
pub struct SmoothFunction {
    n_in: usize,
    d_out: usize,
    eval: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    partial: Arc<dyn Fn(&[f64], usize, &mut [f64]) + Send + Sync>,
    pub lipschitz: f64,
    pub support_radius: f64,
}

impl std::fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothFunction")
            .field("n_in", &self.n_in)
            .field("d_out", &self.d_out)
            .field("lipschitz", &self.lipschitz)
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl SmoothFunction {
    pub fn from_closures(
        n_in: usize,
        d_out: usize,
        eval: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        partial: impl Fn(&[f64], usize, &mut [f64]) + Send + Sync + 'static,
        lipschitz: f64,
        support_radius: f64,
    ) -> Result<Self> {
        if n_in == 0 || d_out == 0 {
            return Err(Error::param("smooth function needs positive dimensions"));
        }
        Ok(SmoothFunction {
            n_in,
            d_out,
            eval: Arc::new(eval),
            partial: Arc::new(partial),
            lipschitz,
            support_radius,
        })
    }

    /// The linear map x -> A x for a d x n matrix given by rows.
    pub fn linear(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::param("linear map needs a nonempty matrix"));
        }
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::dims("linear map rows must share a length"));
        }
        let d = rows.len();
        let lipschitz = rows
            .iter()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        let rows_eval = rows.clone();
        let rows_partial = rows;
        SmoothFunction::from_closures(
            n,
            d,
            move |x, out| {
                for (o, row) in out.iter_mut().zip(rows_eval.iter()) {
                    *o = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
                }
            },
            move |_, j, out| {
                for (o, row) in out.iter_mut().zip(rows_partial.iter()) {
                    *o = row[j];
                }
            },
            lipschitz,
            f64::INFINITY,
        )
    }

    /// A scalar function of one variable.
    pub fn scalar(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
        support_radius: f64,
    ) -> Result<Self> {
        SmoothFunction::from_closures(
            1,
            1,
            move |x, out| out[0] = f(x[0]),
            move |x, _, out| out[0] = df(x[0]),
            lipschitz,
            support_radius,
        )
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn value(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_in);
        debug_assert_eq!(out.len(), self.d_out);
        (self.eval)(x, out);
    }

    pub fn partial(&self, x: &[f64], j: usize, out: &mut [f64]) {
        debug_assert!(j < self.n_in);
        (self.partial)(x, j, out);
    }

    /// Checks the supplied partials against central finite differences at
    /// random points.
    pub fn validate_partials(&self, trials: u64, seed: u64, tol: f64) -> Result<()> {
        let rng = CounterRng::new(seed, 211);
        let mut up = vec![0.0; self.d_out];
        let mut down = vec![0.0; self.d_out];
        let mut claimed = vec![0.0; self.d_out];
        let h = 1e-5;
        for k in 0..trials {
            let x: Vec<f64> = (0..self.n_in)
                .map(|i| 2.0 * rng.symmetric_at(k * self.n_in as u64 + i as u64))
                .collect();
            let mut xs = x.clone();
            for j in 0..self.n_in {
                xs[j] = x[j] + h;
                self.value(&xs, &mut up);
                xs[j] = x[j] - h;
                self.value(&xs, &mut down);
                xs[j] = x[j];
                self.partial(&x, j, &mut claimed);
                for c in 0..self.d_out {
                    let fd = (up[c] - down[c]) / (2.0 * h);
                    if (claimed[c] - fd).abs() > tol * (1.0 + fd.abs()) {
                        return Err(Error::numerical(format!(
                            "partial {j} component {c} mismatch at {x:?}: {} vs fd {fd}",
                            claimed[c]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The lifted cube function f_N on {-1,1}^{n x N}:
/// f_N(eps) = f(sum_j eps_{1j}/sqrt(N), ..., sum_j eps_{nj}/sqrt(N)).
/// Sign bit (i, j) lives at index i * N + j of a sign slice; entries are
/// plus or minus one.
#[derive(Debug, Clone)]
pub struct LiftedCubeFunction {
    f: SmoothFunction,
    n: usize,
    big_n: usize,
}

/// Base value and the 2n single-coordinate-shifted values needed for every
/// discrete derivative of the lifted function at one point.
pub struct ShiftedValues {
    pub base: Vec<f64>,
    /// shifted_down[i]: f at s with s_i decreased by 2/sqrt(N) (the flip of
    /// a +1 sign in row i).
    pub shifted_down: Vec<Vec<f64>>,
    /// shifted_up[i]: f at s with s_i increased by 2/sqrt(N).
    pub shifted_up: Vec<Vec<f64>>,
}

impl LiftedCubeFunction {
    pub fn new(f: SmoothFunction, big_n: usize) -> Result<Self> {
        if big_n == 0 {
            return Err(Error::param("lifted function needs N >= 1"));
        }
        let n = f.n_in;
        Ok(LiftedCubeFunction { f, n, big_n })
    }

    pub fn inner(&self) -> &SmoothFunction {
        &self.f
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn copies(&self) -> usize {
        self.big_n
    }

    pub fn dims(&self) -> usize {
        self.n * self.big_n
    }

    /// The scaled row sums s_i = sum_j eps_{ij} / sqrt(N).
    pub fn scaled_sums(&self, signs: &[i8]) -> Vec<f64> {
        debug_assert_eq!(signs.len(), self.dims());
        let scale = 1.0 / (self.big_n as f64).sqrt();
        (0..self.n)
            .map(|i| {
                signs[i * self.big_n..(i + 1) * self.big_n]
                    .iter()
                    .map(|&s| s as f64)
                    .sum::<f64>()
                    * scale
            })
            .collect()
    }

    pub fn value(&self, signs: &[i8]) -> Vec<f64> {
        let s = self.scaled_sums(signs);
        let mut out = vec![0.0; self.f.d_out];
        self.f.value(&s, &mut out);
        out
    }

    /// Exact two-point discrete derivative in coordinate (i, j):
    /// (f_N(eps) - f_N(eps with (i,j) flipped)) / 2.
    pub fn derivative(&self, signs: &[i8], i: usize, j: usize) -> Vec<f64> {
        debug_assert!(i < self.n && j < self.big_n);
        let s = self.scaled_sums(signs);
        let mut base = vec![0.0; self.f.d_out];
        self.f.value(&s, &mut base);
        let mut shifted = s;
        let step = 2.0 * signs[i * self.big_n + j] as f64 / (self.big_n as f64).sqrt();
        shifted[i] -= step;
        let mut flipped = vec![0.0; self.f.d_out];
        self.f.value(&shifted, &mut flipped);
        base.iter().zip(flipped.iter()).map(|(a, b)| (a - b) / 2.0).collect()
    }

    /// All values needed to assemble every derivative at one point: flipping
    /// sign (i, j) shifts s_i by -2 eps_{ij} / sqrt(N), so only 2n + 1
    /// evaluations are required regardless of N.
    pub fn shifted_values(&self, s: &[f64]) -> ShiftedValues {
        let d = self.f.d_out;
        let step = 2.0 / (self.big_n as f64).sqrt();
        let mut base = vec![0.0; d];
        self.f.value(s, &mut base);
        let mut shifted_down = Vec::with_capacity(self.n);
        let mut shifted_up = Vec::with_capacity(self.n);
        let mut work = s.to_vec();
        for i in 0..self.n {
            let mut out = vec![0.0; d];
            work[i] = s[i] - step;
            self.f.value(&work, &mut out);
            shifted_down.push(out);
            let mut out = vec![0.0; d];
            work[i] = s[i] + step;
            self.f.value(&work, &mut out);
            shifted_up.push(out);
            work[i] = s[i];
        }
        ShiftedValues { base, shifted_down, shifted_up }
    }

    /// Gap between the exact derivative and the asymptotic expression
    /// (eps_{ij}/sqrt(N)) df/dx_i(s), maximized over coordinates, at one
    /// point. Second-order Taylor puts this at O(1/N).
    pub fn asymptotic_gap(&self, signs: &[i8]) -> f64 {
        let s = self.scaled_sums(signs);
        let scale = 1.0 / (self.big_n as f64).sqrt();
        let mut grad = vec![0.0; self.f.d_out];
        let mut worst = 0.0f64;
        for i in 0..self.n {
            self.f.partial(&s, i, &mut grad);
            for j in 0..self.big_n {
                let exact = self.derivative(signs, i, j);
                let eps = signs[i * self.big_n + j] as f64;
                let gap = exact
                    .iter()
                    .zip(grad.iter())
                    .map(|(e, g)| (e - eps * scale * g).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(gap);
            }
        }
        worst
    }
}

/// Inputs of one Gaussian-inequality estimate.
#[derive(Debug)]
pub struct GaussianPisierQuery<'a> {
    pub f: &'a SmoothFunction,
    pub gauge: &'a ConvexGauge,
    pub samples: u64,
    pub seed: u64,
}

const BATCH: u64 = 4096;

fn welford_batches<F>(samples: u64, body: F) -> (RunningMoments, RunningMoments)
where
    F: Fn(u64, &mut RunningMoments, &mut RunningMoments) + Sync,
{
    pairwise_map_reduce(
        samples.div_ceil(BATCH) as usize,
        |b| {
            let lo = b as u64 * BATCH;
            let hi = (lo + BATCH).min(samples);
            let mut one = RunningMoments::new();
            let mut two = RunningMoments::new();
            for k in lo..hi {
                body(k, &mut one, &mut two);
            }
            (one, two)
        },
        |(a1, a2), (b1, b2)| (a1.merge(b1), a2.merge(b2)),
    )
    .unwrap_or((RunningMoments::new(), RunningMoments::new()))
}

/// Mean of f over `samples` standard Gaussian inputs from a dedicated
/// stream, kept independent of the main estimate.
fn gaussian_mean(f: &SmoothFunction, samples: u64, seed: u64) -> Vec<f64> {
    let rng = CounterRng::new(seed, STREAM_MEAN_AUX);
    let n = f.n_in;
    let d = f.d_out;
    let sums = pairwise_map_reduce(
        samples.div_ceil(BATCH) as usize,
        |b| {
            let lo = b as u64 * BATCH;
            let hi = (lo + BATCH).min(samples);
            let mut acc = vec![0.0f64; d];
            let mut x = vec![0.0f64; n];
            let mut out = vec![0.0f64; d];
            for k in lo..hi {
                for (i, slot) in x.iter_mut().enumerate() {
                    *slot = rng.normal_at(k * n as u64 + i as u64);
                }
                f.value(&x, &mut out);
                for (a, o) in acc.iter_mut().zip(out.iter()) {
                    *a += *o;
                }
            }
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += *y;
            }
            a
        },
    )
    .unwrap_or_else(|| vec![0.0; d]);
    sums.into_iter().map(|v| v / samples as f64).collect()
}

/// Monte Carlo estimate of both sides of the Gaussian inequality
/// E Phi(f(G) - E f(G)) <= E Phi((pi/2) sum_j G'_j df/dx_j(G)).
/// E f(G) is estimated on an independent stream of the same seed.
pub fn gaussian_pisier_sides(q: &GaussianPisierQuery) -> Result<InequalityReport> {
    if q.samples < 1000 {
        return Err(Error::param("gaussian estimate needs at least 1000 samples"));
    }
    if q.gauge.dim() != q.f.d_out {
        return Err(Error::dims("gauge dimension does not match the function output"));
    }
    let mean = gaussian_mean(q.f, q.samples, q.seed);
    let n = q.f.n_in;
    let d = q.f.d_out;
    let rng_g = CounterRng::new(q.seed, STREAM_G);
    let rng_gp = CounterRng::new(q.seed, STREAM_G_PRIME);
    let (lhs_m, rhs_m) = welford_batches(q.samples, |k, lhs_acc, rhs_acc| {
        let mut x = vec![0.0f64; n];
        let mut gp = vec![0.0f64; n];
        for i in 0..n {
            x[i] = rng_g.normal_at(k * n as u64 + i as u64);
            gp[i] = rng_gp.normal_at(k * n as u64 + i as u64);
        }
        let mut out = vec![0.0f64; d];
        q.f.value(&x, &mut out);
        let centered: Vec<f64> = out.iter().zip(mean.iter()).map(|(a, b)| a - b).collect();
        lhs_acc.push(q.gauge.evaluate(&centered));
        let mut sum = vec![0.0f64; d];
        let mut pbuf = vec![0.0f64; d];
        for j in 0..n {
            q.f.partial(&x, j, &mut pbuf);
            for (s, pv) in sum.iter_mut().zip(pbuf.iter()) {
                *s += gp[j] * pv;
            }
        }
        for s in sum.iter_mut() {
            *s *= FRAC_PI_2;
        }
        rhs_acc.push(q.gauge.evaluate(&sum));
    });
    let mut params = ReportParams::new(n, d, Tolerances::default());
    params.method = "mc".into();
    params.trials = Some(q.samples);
    params.seed = Some(q.seed);
    params.gauge = Some(q.gauge.label());
    params.generator = Some(format!("mean_aux_stream={STREAM_MEAN_AUX}"));
    let se = (lhs_m.std_error().powi(2) + rhs_m.std_error().powi(2)).sqrt();
    let mut report = InequalityReport::from_sides(
        "gaussian_pisier",
        lhs_m.mean(),
        rhs_m.mean(),
        4.0 * se,
        params,
    );
    // Flag an estimate whose noise band dwarfs the values themselves.
    if 4.0 * se > 0.1 * lhs_m.mean().abs().max(rhs_m.mean().abs()).max(1e-12) {
        report.params.generator =
            Some(format!("mean_aux_stream={STREAM_MEAN_AUX},high_variance"));
    }
    Ok(report)
}

/// One grid row of the convergence experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltRow {
    pub big_n: usize,
    pub lhs_cube: f64,
    pub rhs_cube: f64,
    pub lhs_gauss: f64,
    pub rhs_gauss: f64,
    pub se_lhs_cube: f64,
    pub se_rhs_cube: f64,
    pub se_lhs_gauss: f64,
    pub se_rhs_gauss: f64,
}

/// Cube sides of the biased-sign inequality applied to the lifted function:
/// the mu integral by quadrature, inner signs by Monte Carlo. The same
/// uniform draws feed every node's biased signs (a monotone coupling), so a
/// single pass prices all nodes.
fn cube_sides(
    lifted: &LiftedCubeFunction,
    gauge: &ConvexGauge,
    quad: &MuQuadrature,
    samples: u64,
    seed: u64,
) -> Result<(RunningMoments, RunningMoments)> {
    let n = lifted.rows();
    let big_n = lifted.copies();
    let dims = lifted.dims();
    let d = lifted.inner().d_out;
    let scale = 1.0 / (big_n as f64).sqrt();

    // Mean of f_N over an independent sign stream.
    let rng_aux = CounterRng::new(seed, STREAM_MEAN_AUX ^ 0xff);
    let mean = {
        let sums = pairwise_map_reduce(
            samples.div_ceil(BATCH) as usize,
            |b| {
                let lo = b as u64 * BATCH;
                let hi = (lo + BATCH).min(samples);
                let mut acc = vec![0.0f64; d];
                let mut s = vec![0.0f64; n];
                let mut out = vec![0.0f64; d];
                for k in lo..hi {
                    for (i, slot) in s.iter_mut().enumerate() {
                        let mut sum = 0i64;
                        for j in 0..big_n {
                            let ctr = k * dims as u64 + (i * big_n + j) as u64;
                            sum += if rng_aux.u64_at(ctr) & 1 == 0 { 1 } else { -1 };
                        }
                        *slot = sum as f64 * scale;
                    }
                    lifted.inner().value(&s, &mut out);
                    for (a, o) in acc.iter_mut().zip(out.iter()) {
                        *a += *o;
                    }
                }
                acc
            },
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b.iter()) {
                    *x += *y;
                }
                a
            },
        )
        .unwrap_or_else(|| vec![0.0; d]);
        sums.into_iter().map(|v| v / samples as f64).collect::<Vec<f64>>()
    };

    let laws: Vec<BiasedCoordinateLaw> = quad
        .nodes()
        .iter()
        .map(|&t| BiasedCoordinateLaw::new(t))
        .collect::<Result<_>>()?;
    let node_ab: Vec<(f64, f64)> = laws.iter().map(|l| l.alpha_beta()).collect();
    let p_minus: Vec<f64> = laws.iter().map(|l| l.p_minus()).collect();
    let weights = quad.weights().to_vec();

    let rng_eps = CounterRng::new(seed, STREAM_EPS);
    let rng_xi = CounterRng::new(seed, STREAM_XI);
    let m = laws.len();

    let (lhs_m, rhs_m) = welford_batches(samples, |k, lhs_acc, rhs_acc| {
        let mut signs = vec![0i8; dims];
        for (idx, slot) in signs.iter_mut().enumerate() {
            *slot = if rng_eps.u64_at(k * dims as u64 + idx as u64) & 1 == 0 { 1 } else { -1 };
        }
        let s = lifted.scaled_sums(&signs);
        let shifted = lifted.shifted_values(&s);
        let centered: Vec<f64> =
            shifted.base.iter().zip(mean.iter()).map(|(a, b)| a - b).collect();
        lhs_acc.push(gauge.evaluate(&centered));

        // One uniform per coordinate feeds every node's biased sign.
        let uniforms: Vec<f64> = (0..dims)
            .map(|idx| rng_xi.uniform_at(k * dims as u64 + idx as u64))
            .collect();
        let mut y = 0.0;
        let mut combo = vec![0.0f64; d];
        for knode in 0..m {
            let (alpha, beta) = node_ab[knode];
            for c in combo.iter_mut() {
                *c = 0.0;
            }
            for i in 0..n {
                // D_{ij} takes one of two values depending on eps_{ij}; sum
                // delta over each group.
                let mut delta_plus_group = 0.0;
                let mut delta_minus_group = 0.0;
                for j in 0..big_n {
                    let idx = i * big_n + j;
                    let xi: f64 =
                        if uniforms[idx] < p_minus[knode] { -1.0 } else { 1.0 };
                    let delta = alpha * xi - beta;
                    if signs[idx] > 0 {
                        delta_plus_group += delta;
                    } else {
                        delta_minus_group += delta;
                    }
                }
                for c in 0..d {
                    let d_plus = (shifted.base[c] - shifted.shifted_down[i][c]) / 2.0;
                    let d_minus = (shifted.base[c] - shifted.shifted_up[i][c]) / 2.0;
                    combo[c] += delta_plus_group * d_plus + delta_minus_group * d_minus;
                }
            }
            let mut arg = vec![0.0f64; d];
            for c in 0..d {
                arg[c] = FRAC_PI_2 * combo[c];
            }
            y += weights[knode] * gauge.evaluate(&arg);
        }
        rhs_acc.push(y);
    });
    Ok((lhs_m, rhs_m))
}

/// Runs the convergence experiment: for each N in the grid, Monte Carlo
/// estimates of both sides of the biased-sign cube inequality applied to
/// f_N, next to the Gaussian sides of the same function.
pub fn clt_convergence_experiment(
    f: &SmoothFunction,
    gauge: &ConvexGauge,
    n_grid: &[usize],
    samples: u64,
    seed: u64,
    quad_nodes: usize,
) -> Result<Vec<CltRow>> {
    if n_grid.is_empty() {
        return Err(Error::param("convergence experiment needs a nonempty N grid"));
    }
    if samples < 1000 {
        return Err(Error::param("convergence experiment needs at least 1000 samples"));
    }
    let quad = MuQuadrature::new(quad_nodes)?;
    let gauss = gaussian_pisier_sides(&GaussianPisierQuery {
        f,
        gauge,
        samples,
        seed: seed ^ 0x9a0c_55aa,
    })?;
    let (se_lhs_gauss, se_rhs_gauss) = {
        // Recover the per-side errors from the combined band conservatively.
        let combined = gauss.error_bound / 4.0;
        (combined, combined)
    };
    let mut rows = Vec::with_capacity(n_grid.len());
    for (grid_idx, &big_n) in n_grid.iter().enumerate() {
        let lifted = LiftedCubeFunction::new(f.clone(), big_n)?;
        let (lhs_m, rhs_m) = cube_sides(
            &lifted,
            gauge,
            &quad,
            samples,
            seed.wrapping_add(grid_idx as u64 + 1),
        )?;
        rows.push(CltRow {
            big_n,
            lhs_cube: lhs_m.mean(),
            rhs_cube: rhs_m.mean(),
            lhs_gauss: gauss.lhs,
            rhs_gauss: gauss.rhs,
            se_lhs_cube: lhs_m.std_error(),
            se_rhs_cube: rhs_m.std_error(),
            se_lhs_gauss,
            se_rhs_gauss,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::NormSpec;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn abs_gauge() -> ConvexGauge {
        ConvexGauge::norm_power(NormSpec::lp(1.0, 1).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn lifted_linear_derivatives_are_exact() {
        let f = SmoothFunction::linear(vec![vec![2.0, -1.0]]).unwrap();
        let lifted = LiftedCubeFunction::new(f, 4).unwrap();
        let signs: Vec<i8> = vec![1, -1, 1, 1, -1, -1, 1, -1];
        for i in 0..2 {
            for j in 0..4 {
                let dv = lifted.derivative(&signs, i, j);
                let coeff = if i == 0 { 2.0 } else { -1.0 };
                let expected = signs[i * 4 + j] as f64 * coeff / 2.0;
                assert_abs_diff_eq!(dv[0], expected, epsilon = 1e-13);
            }
        }
        // Linear lift has no asymptotic gap at all.
        assert!(lifted.asymptotic_gap(&signs) < 1e-12);
    }

    #[test]
    fn lifted_square_matches_hand_computation() {
        // f(x) = x^2, N = 2: f_N(eps) = ((eps_1 + eps_2)/sqrt 2)^2; the
        // derivative in coordinate (1,1) at (+1,+1) is (2 - 0)/2 = 1.
        let f = SmoothFunction::scalar(|x| x * x, |x| 2.0 * x, 4.0, 2.0).unwrap();
        let lifted = LiftedCubeFunction::new(f, 2).unwrap();
        let signs = vec![1i8, 1];
        assert_abs_diff_eq!(lifted.value(&signs)[0], 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(lifted.derivative(&signs, 0, 0)[0], 1.0, epsilon = 1e-13);
        // Second-order Taylor: gap * N = |f''| = 2 exactly for the square.
        for big_n in [2usize, 8, 32] {
            let lifted = LiftedCubeFunction::new(
                SmoothFunction::scalar(|x| x * x, |x| 2.0 * x, 4.0, 2.0).unwrap(),
                big_n,
            )
            .unwrap();
            let signs: Vec<i8> =
                (0..big_n).map(|j| if j % 3 == 0 { -1 } else { 1 }).collect();
            let gap = lifted.asymptotic_gap(&signs);
            assert_abs_diff_eq!(gap * big_n as f64, 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn asymptotic_gap_shrinks_for_tanh() {
        let rng = CounterRng::new(3, 1);
        let mut gaps = Vec::new();
        for big_n in [4usize, 16, 64] {
            let f = SmoothFunction::scalar(|x| x.tanh(), |x| 1.0 - x.tanh().powi(2), 1.0, 6.0)
                .unwrap();
            let lifted = LiftedCubeFunction::new(f, big_n).unwrap();
            let signs: Vec<i8> = (0..big_n)
                .map(|j| if rng.u64_at(j as u64) & 1 == 0 { 1 } else { -1 })
                .collect();
            gaps.push(lifted.asymptotic_gap(&signs));
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "gaps {gaps:?}");
    }

    #[test]
    fn partial_validation_catches_errors() {
        let good = SmoothFunction::scalar(|x| x.sin(), |x| x.cos(), 1.0, 10.0).unwrap();
        good.validate_partials(20, 1, 1e-5).unwrap();
        let bad = SmoothFunction::scalar(|x| x.sin(), |x| 1.1 * x.cos(), 1.0, 10.0).unwrap();
        assert!(bad.validate_partials(20, 1, 1e-5).is_err());
    }

    #[test]
    fn gaussian_linear_closed_form() {
        // f linear scalar: lhs = ||a|| sqrt(2/pi), rhs = (pi/2) lhs, ratio 2/pi.
        let f = SmoothFunction::linear(vec![vec![0.8, -0.6]]).unwrap();
        let gauge = abs_gauge();
        let q = GaussianPisierQuery { f: &f, gauge: &gauge, samples: 200_000, seed: 5 };
        let r = gaussian_pisier_sides(&q).unwrap();
        let norm_a = 1.0f64;
        let expect_lhs = norm_a * (2.0 / PI).sqrt();
        assert!(
            (r.lhs - expect_lhs).abs() <= r.error_bound,
            "lhs {} expected {expect_lhs} band {}",
            r.lhs,
            r.error_bound
        );
        assert!((r.ratio - 2.0 / PI).abs() < 0.01, "ratio {}", r.ratio);
        assert!(r.satisfied);
    }

    #[test]
    fn gaussian_constant_is_degenerate_zero() {
        let f = SmoothFunction::scalar(|_| 3.0, |_| 0.0, 0.0, 1.0).unwrap();
        let gauge = abs_gauge();
        let q = GaussianPisierQuery { f: &f, gauge: &gauge, samples: 2000, seed: 8 };
        let r = gaussian_pisier_sides(&q).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12 && r.satisfied);
    }

    #[test]
    fn gaussian_sine_is_satisfied() {
        let f = SmoothFunction::scalar(|x| x.sin(), |x| x.cos(), 1.0, 10.0).unwrap();
        let gauge = abs_gauge();
        let q = GaussianPisierQuery { f: &f, gauge: &gauge, samples: 100_000, seed: 11 };
        let r = gaussian_pisier_sides(&q).unwrap();
        assert!(r.satisfied, "lhs {} rhs {} band {}", r.lhs, r.rhs, r.error_bound);
        assert!(gaussian_pisier_sides(&GaussianPisierQuery {
            f: &f,
            gauge: &gauge,
            samples: 10,
            seed: 1
        })
        .is_err());
    }

    #[test]
    fn convergence_rows_are_deterministic() {
        let f = SmoothFunction::linear(vec![vec![1.0]]).unwrap();
        let gauge = abs_gauge();
        let a = clt_convergence_experiment(&f, &gauge, &[4, 16], 4000, 9, 16).unwrap();
        let b = clt_convergence_experiment(&f, &gauge, &[4, 16], 4000, 9, 16).unwrap();
        assert_eq!(a, b);
        for row in &a {
            assert!(row.lhs_cube > 0.0 && row.rhs_cube > 0.0);
        }
    }

    #[test]
    fn constant_function_rows_vanish() {
        let f = SmoothFunction::scalar(|_| 2.0, |_| 0.0, 0.0, 1.0).unwrap();
        let gauge = abs_gauge();
        let rows = clt_convergence_experiment(&f, &gauge, &[4, 8], 2000, 3, 8).unwrap();
        for row in rows {
            assert!(row.lhs_cube.abs() < 1e-12);
            assert!(row.rhs_cube.abs() < 1e-12);
            assert!(row.lhs_gauss.abs() < 1e-12);
        }
    }
}
