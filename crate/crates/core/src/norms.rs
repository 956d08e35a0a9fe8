//! Finite-dimensional norms standing in for the Banach space, and exact
//! p-th moments of vector-valued sign sums.

use crate::cube::MAX_SINGLE_N;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::sum::pairwise_sum;
use serde::{Deserialize, Serialize};

/// Which norm is in play. The l_p family (including p = infinity) is enough
/// to exhibit every phenomenon at desk scale while keeping duals and
/// gradients simple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    /// l_p with 1 <= p <= infinity (`f64::INFINITY` selects the max norm).
    Lp(f64),
    /// Euclidean norm; identical to Lp(2) and kept as an independent route.
    Euclidean,
}

/// A norm on R^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: NormKind,
    pub d: usize,
}

impl NormSpec {
    pub fn lp(p: f64, d: usize) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::param(format!("norm exponent must be >= 1, got {p}")));
        }
        if d == 0 {
            return Err(Error::param("norm dimension must be positive"));
        }
        Ok(NormSpec { kind: NormKind::Lp(p), d })
    }

    pub fn euclidean(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("norm dimension must be positive"));
        }
        Ok(NormSpec { kind: NormKind::Euclidean, d })
    }

    pub fn linf(d: usize) -> Result<Self> {
        Self::lp(f64::INFINITY, d)
    }

    /// Compact label used in reports and CSV columns.
    pub fn label(&self) -> String {
        match self.kind {
            NormKind::Euclidean => "l2".to_string(),
            NormKind::Lp(p) if p.is_infinite() => "linf".to_string(),
            NormKind::Lp(p) if p == 2.0 => "lp:2".to_string(),
            NormKind::Lp(p) => format!("lp:{p}"),
        }
    }

    /// ||v|| under this norm.
    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.d {
            return Err(Error::dims(format!(
                "vector has dimension {}, norm expects {}",
                v.len(),
                self.d
            )));
        }
        Ok(self.norm_unchecked(v))
    }

    /// Same as [`NormSpec::norm`] without the dimension check; callers on hot
    /// paths guarantee the shape themselves.
    #[inline]
    pub fn norm_unchecked(&self, v: &[f64]) -> f64 {
        match self.kind {
            NormKind::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::Lp(p) => lp_norm(v, p),
        }
    }
}

#[inline]
fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return v.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    if p == 1.0 {
        return v.iter().map(|x| x.abs()).sum();
    }
    if p == 2.0 {
        return v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    // General exponent: scale by the max entry so |x|^p never underflows
    // spuriously.
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|x| (x.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

/// An exact or sampled p-th moment request E ||sum_j eps_j x_j||^p.
#[derive(Debug, Clone)]
pub struct MomentQuery {
    pub p_moment: f64,
    pub vectors: Vec<Vec<f64>>,
    pub norm: NormSpec,
}

/// Value of a moment computation plus its standard error when sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    /// `None` for exact enumeration, `Some(se)` for Monte Carlo.
    pub std_error: Option<f64>,
}

fn validate_query(q: &MomentQuery) -> Result<()> {
    if !(q.p_moment >= 1.0) {
        return Err(Error::param(format!(
            "moment exponent must be >= 1, got {}",
            q.p_moment
        )));
    }
    if q.vectors.is_empty() {
        return Err(Error::param("moment query needs at least one vector"));
    }
    for v in &q.vectors {
        if v.len() != q.norm.d {
            return Err(Error::dims("moment query vector dimension mismatch"));
        }
    }
    Ok(())
}

/// Exact average of ||sum_j eps_j x_j||^p over all 2^n sign patterns.
///
/// Sign bit j of the pattern index selects -1, matching [`crate::cube::CubePoint`].
/// The running sum is updated along a Gray-code walk and refreshed
/// periodically to keep incremental rounding below the working tolerances.
pub fn rademacher_moment(q: &MomentQuery) -> Result<MomentEstimate> {
    validate_query(q)?;
    let n = q.vectors.len();
    if n > MAX_SINGLE_N {
        return Err(Error::capacity(format!(
            "exact moment over {n} vectors exceeds the enumeration cap {MAX_SINGLE_N}"
        )));
    }
    let d = q.norm.d;
    let size = 1usize << n;
    let mut terms = vec![0.0f64; size];
    let mut sum: Vec<f64> = vec![0.0; d];
    for v in &q.vectors {
        for (s, x) in sum.iter_mut().zip(v.iter()) {
            *s += *x;
        }
    }
    let mut signs = vec![1.0f64; n];
    let mut prev_gray = 0usize;
    terms[0] = q.norm.norm_unchecked(&sum).powf(q.p_moment);
    for k in 1..size {
        let gray = k ^ (k >> 1);
        if k % 4096 == 0 {
            // Refresh the running sum from scratch to cap incremental drift.
            for s in sum.iter_mut() {
                *s = 0.0;
            }
            for j in 0..n {
                let sgn = if gray >> j & 1 == 0 { 1.0 } else { -1.0 };
                signs[j] = sgn;
                for (s, x) in sum.iter_mut().zip(q.vectors[j].iter()) {
                    *s += sgn * x;
                }
            }
        } else {
            let j = (gray ^ prev_gray).trailing_zeros() as usize;
            let delta = -2.0 * signs[j];
            signs[j] = -signs[j];
            for (s, x) in sum.iter_mut().zip(q.vectors[j].iter()) {
                *s += delta * x;
            }
        }
        prev_gray = gray;
        terms[gray] = q.norm.norm_unchecked(&sum).powf(q.p_moment);
    }
    let value = pairwise_sum(size, |i| terms[i]) / size as f64;
    Ok(MomentEstimate { value, std_error: None })
}

/// Monte Carlo estimate of the same moment with `trials` uniform sign draws.
pub fn rademacher_moment_mc(q: &MomentQuery, trials: u64, seed: u64) -> Result<MomentEstimate> {
    validate_query(q)?;
    if trials == 0 {
        return Err(Error::param("monte carlo moment needs at least one trial"));
    }
    let n = q.vectors.len();
    let d = q.norm.d;
    let rng = CounterRng::new(seed, 41);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut buf = vec![0.0f64; d];
    for k in 0..trials {
        for b in buf.iter_mut() {
            *b = 0.0;
        }
        for (j, v) in q.vectors.iter().enumerate() {
            let sgn = rng.sign_at(k * n as u64 + j as u64);
            for (b, x) in buf.iter_mut().zip(v.iter()) {
                *b += sgn * x;
            }
        }
        let y = q.norm.norm_unchecked(&buf).powf(q.p_moment);
        let delta = y - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (y - mean);
    }
    let variance = if trials > 1 { m2 / (trials - 1) as f64 } else { 0.0 };
    Ok(MomentEstimate {
        value: mean,
        std_error: Some((variance / trials as f64).sqrt()),
    })
}

fn sum_of_norm_powers(vectors: &[Vec<f64>], p: f64, norm: &NormSpec) -> Result<f64> {
    let mut acc = 0.0;
    for v in vectors {
        acc += norm.norm(v)?.powf(p);
    }
    Ok(acc)
}

/// (E ||sum eps_j x_j||^p / sum ||x_j||^p)^{1/p}; the best value over all
/// configurations is the Rademacher type-p constant.
pub fn type_ratio(vectors: &[Vec<f64>], p: f64, norm: &NormSpec) -> Result<f64> {
    let denom = sum_of_norm_powers(vectors, p, norm)?;
    if denom == 0.0 {
        return Err(Error::param("type ratio of an all-zero configuration"));
    }
    let q = MomentQuery { p_moment: p, vectors: vectors.to_vec(), norm: *norm };
    let num = rademacher_moment(&q)?.value;
    Ok((num / denom).powf(1.0 / p))
}

/// (sum ||x_j||^q / E ||sum eps_j x_j||^q)^{1/q}; the best value over all
/// configurations is the cotype-q constant.
pub fn cotype_ratio(vectors: &[Vec<f64>], q_exp: f64, norm: &NormSpec) -> Result<f64> {
    let num = sum_of_norm_powers(vectors, q_exp, norm)?;
    if num == 0.0 {
        return Err(Error::param("cotype ratio of an all-zero configuration"));
    }
    let q = MomentQuery { p_moment: q_exp, vectors: vectors.to_vec(), norm: *norm };
    let denom = rademacher_moment(&q)?.value;
    if denom == 0.0 {
        return Err(Error::numerical("degenerate sign-sum moment"));
    }
    Ok((num / denom).powf(1.0 / q_exp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_form_norms() {
        let l2 = NormSpec::lp(2.0, 2).unwrap();
        assert_abs_diff_eq!(l2.norm(&[3.0, 4.0]).unwrap(), 5.0, epsilon = 1e-15);
        let linf = NormSpec::linf(2).unwrap();
        assert_abs_diff_eq!(linf.norm(&[3.0, 4.0]).unwrap(), 4.0, epsilon = 1e-15);
        let l1 = NormSpec::lp(1.0, 3).unwrap();
        assert_abs_diff_eq!(l1.norm(&[1.0, 1.0, 1.0]).unwrap(), 3.0, epsilon = 1e-15);

        assert!(NormSpec::lp(0.5, 2).is_err());
        assert!(l2.norm(&[1.0]).is_err());
    }

    #[test]
    fn euclidean_agrees_with_lp_two() {
        let rng = CounterRng::new(5, 0);
        let e = NormSpec::euclidean(4).unwrap();
        let l2 = NormSpec::lp(2.0, 4).unwrap();
        for k in 0..50u64 {
            let v: Vec<f64> = (0..4).map(|i| rng.symmetric_at(4 * k + i)).collect();
            let a = e.norm(&v).unwrap();
            let b = l2.norm(&v).unwrap();
            assert!((a - b).abs() <= 1e-14 * (1.0 + a));
        }
    }

    #[test]
    fn fractional_exponent_handles_zero_entries() {
        let l15 = NormSpec::lp(1.5, 3).unwrap();
        assert_eq!(l15.norm(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        let v = l15.norm(&[0.0, 2.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn moment_examples() {
        // Orthonormal pair in l_2, p = 2: E||eps_1 e_1 + eps_2 e_2||^2 = 2.
        let q = MomentQuery {
            p_moment: 2.0,
            vectors: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            norm: NormSpec::euclidean(2).unwrap(),
        };
        assert_abs_diff_eq!(rademacher_moment(&q).unwrap().value, 2.0, epsilon = 1e-14);

        // Scalars: E|eps_1 + eps_2| = 1 by 4-outcome enumeration.
        let q = MomentQuery {
            p_moment: 1.0,
            vectors: vec![vec![1.0], vec![1.0]],
            norm: NormSpec::lp(1.0, 1).unwrap(),
        };
        assert_abs_diff_eq!(rademacher_moment(&q).unwrap().value, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn mc_agrees_with_exact_within_four_sigma() {
        let rng = CounterRng::new(9, 1);
        let vectors: Vec<Vec<f64>> =
            (0..10).map(|j| (0..3).map(|c| rng.symmetric_at(3 * j + c)).collect()).collect();
        let q = MomentQuery {
            p_moment: 1.7,
            vectors,
            norm: NormSpec::lp(1.5, 3).unwrap(),
        };
        let exact = rademacher_moment(&q).unwrap().value;
        let mc = rademacher_moment_mc(&q, 200_000, 12).unwrap();
        let se = mc.std_error.unwrap();
        assert!(
            (mc.value - exact).abs() <= 4.0 * se,
            "exact {exact}, mc {} +- {se}",
            mc.value
        );
    }

    #[test]
    fn moment_invariances() {
        let rng = CounterRng::new(2, 8);
        let vectors: Vec<Vec<f64>> =
            (0..6).map(|j| (0..2).map(|c| rng.symmetric_at(2 * j + c)).collect()).collect();
        let norm = NormSpec::lp(3.0, 2).unwrap();
        let base = rademacher_moment(&MomentQuery {
            p_moment: 2.5,
            vectors: vectors.clone(),
            norm,
        })
        .unwrap()
        .value;

        // Permutation and per-vector sign flips leave the moment unchanged.
        let mut permuted = vectors.clone();
        permuted.swap(0, 4);
        permuted.swap(2, 3);
        permuted[1].iter_mut().for_each(|x| *x = -*x);
        let permuted_val = rademacher_moment(&MomentQuery {
            p_moment: 2.5,
            vectors: permuted,
            norm,
        })
        .unwrap()
        .value;
        assert!((base - permuted_val).abs() < 1e-12 * (1.0 + base));

        // (E ||.||^p)^{1/p} is nondecreasing in p.
        let mut prev = 0.0;
        for p in [1.0, 1.5, 2.0, 2.5, 3.0] {
            let v = rademacher_moment(&MomentQuery {
                p_moment: p,
                vectors: vectors.clone(),
                norm,
            })
            .unwrap()
            .value
            .powf(1.0 / p);
            assert!(v >= prev - 1e-12, "p={p}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn ratio_examples() {
        // Hilbert case: the parallelogram law forces type ratio 1 for any
        // configuration.
        let rng = CounterRng::new(4, 6);
        let norm = NormSpec::euclidean(3).unwrap();
        for trial in 0..5u64 {
            let vectors: Vec<Vec<f64>> = (0..5)
                .map(|j| (0..3).map(|c| rng.symmetric_at(100 * trial + 3 * j + c)).collect())
                .collect();
            let r = type_ratio(&vectors, 2.0, &norm).unwrap();
            assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
            let c = cotype_ratio(&vectors, 2.0, &norm).unwrap();
            assert_abs_diff_eq!(c, 1.0, epsilon = 1e-12);
        }

        // Single vector: both ratios are exactly one.
        let one = vec![vec![0.3, -0.7]];
        let norm = NormSpec::lp(1.0, 2).unwrap();
        assert_abs_diff_eq!(type_ratio(&one, 1.5, &norm).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cotype_ratio(&one, 2.0, &norm).unwrap(), 1.0, epsilon = 1e-14);

        // Basis pair in l_1^2, p = 2: ratio sqrt(2) by 4-outcome enumeration.
        let basis = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let r = type_ratio(&basis, 2.0, &norm).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-14);

        assert!(type_ratio(&[vec![0.0, 0.0]], 2.0, &norm).is_err());
        assert!(cotype_ratio(&[vec![0.0, 0.0]], 2.0, &norm).is_err());
    }

    #[test]
    fn ratios_are_scale_invariant() {
        let rng = CounterRng::new(13, 2);
        let vectors: Vec<Vec<f64>> =
            (0..4).map(|j| (0..2).map(|c| rng.symmetric_at(2 * j + c)).collect()).collect();
        let norm = NormSpec::linf(2).unwrap();
        let base = type_ratio(&vectors, 1.5, &norm).unwrap();
        for c in [0.01, -3.0, 250.0] {
            let scaled: Vec<Vec<f64>> =
                vectors.iter().map(|v| v.iter().map(|x| c * x).collect()).collect();
            let r = type_ratio(&scaled, 1.5, &norm).unwrap();
            assert!((r - base).abs() < 1e-12 * (1.0 + base), "c={c}");
        }
    }
}
