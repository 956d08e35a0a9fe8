//! Exact calculus for vector-valued functions on the discrete cube {-1,1}^n.
//!
//! Functions are stored as dense tables of 2^n vectors in R^d. The module
//! provides discrete partial derivatives, the cube Laplacian, the
//! Walsh transform, the heat semigroup (as a Walsh multiplier), and an
//! independent probabilistic evaluation of the semigroup and of its gradient
//! as exact weighted sums over biased sign vectors.

use crate::error::{Error, Result};
use crate::measure::{mask_weights, BiasedCoordinateLaw};
use crate::sum::{pairwise_sum, pairwise_sum_vec};
use rayon::prelude::*;

/// Largest cube dimension for exact single-function operations (2^n tables).
pub const MAX_SINGLE_N: usize = 20;
/// Largest cube dimension for exact doubly-indexed expectations (4^n work),
/// e.g. the kernel-form semigroup or joint sign enumerations.
pub const MAX_JOINT_N: usize = 12;
/// Largest cube dimension for exact triply-indexed expectations (8^n work).
pub const MAX_TRIPLE_N: usize = 6;

/// A point of {-1,1}^n encoded as an index in [0, 2^n). Bit j stores
/// coordinate j: a clear bit is +1, a set bit is -1, so flipping bit j
/// negates coordinate j.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CubePoint(pub usize);

impl CubePoint {
    /// Coordinate j as a sign.
    #[inline]
    pub fn coord(self, j: usize) -> f64 {
        if self.0 >> j & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// The point with coordinate j negated.
    #[inline]
    pub fn flip(self, j: usize) -> CubePoint {
        CubePoint(self.0 ^ (1 << j))
    }

    /// The antipodal point -x.
    #[inline]
    pub fn negate(self, n: usize) -> CubePoint {
        CubePoint(self.0 ^ ((1usize << n) - 1))
    }
}

/// Dense table of a function {-1,1}^n -> R^d, indexed by [`CubePoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct CubeFunction {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

/// Walsh coefficient table of a [`CubeFunction`], indexed by the subset
/// bitmask S. The coefficient at S is E[f(eps) w_S(eps)] with
/// w_S(eps) = prod_{j in S} eps_j.
#[derive(Debug, Clone, PartialEq)]
pub struct WalshSpectrum {
    n: usize,
    d: usize,
    coefficients: Vec<f64>,
}

fn check_shape(n: usize, d: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("cube dimension n must be at least 1"));
    }
    if d == 0 {
        return Err(Error::param("target dimension d must be at least 1"));
    }
    if n > MAX_SINGLE_N {
        return Err(Error::capacity(format!(
            "cube dimension {n} exceeds the exact enumeration cap {MAX_SINGLE_N}"
        )));
    }
    Ok(())
}

impl CubeFunction {
    /// Builds a function from a flat table of `2^n * d` values, point-major.
    pub fn from_values(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(n, d)?;
        if values.len() != (1usize << n) * d {
            return Err(Error::dims(format!(
                "value table has length {}, expected 2^{n} * {d}",
                values.len()
            )));
        }
        Ok(CubeFunction { n, d, values })
    }

    /// Builds a function by evaluating `fill` at every cube point.
    pub fn from_fn<F>(n: usize, d: usize, fill: F) -> Result<Self>
    where
        F: Fn(CubePoint, &mut [f64]),
    {
        check_shape(n, d)?;
        let mut values = vec![0.0; (1usize << n) * d];
        for x in 0..1usize << n {
            fill(CubePoint(x), &mut values[x * d..(x + 1) * d]);
        }
        Ok(CubeFunction { n, d, values })
    }

    /// The constant function with value `c`.
    pub fn constant(n: usize, c: &[f64]) -> Result<Self> {
        check_shape(n, c.len())?;
        let d = c.len();
        let mut values = Vec::with_capacity((1usize << n) * d);
        for _ in 0..1usize << n {
            values.extend_from_slice(c);
        }
        Ok(CubeFunction { n, d, values })
    }

    /// The scalar Walsh character w_S for the subset bitmask `s`.
    pub fn walsh_character(n: usize, s: usize) -> Result<Self> {
        if s >= 1usize << n {
            return Err(Error::param(format!("subset mask {s} out of range for n={n}")));
        }
        Self::from_fn(n, 1, |x, out| {
            out[0] = if (x.0 & s).count_ones() % 2 == 0 { 1.0 } else { -1.0 }
        })
    }

    /// The dictator function eps_j (scalar-valued).
    pub fn dictator(n: usize, j: usize) -> Result<Self> {
        if j >= n {
            return Err(Error::param(format!("coordinate {j} out of range for n={n}")));
        }
        Self::walsh_character(n, 1usize << j)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        1usize << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn value(&self, x: CubePoint) -> &[f64] {
        &self.values[x.0 * self.d..(x.0 + 1) * self.d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// f - c as a new table (typically c = E f).
    pub fn shift_by(&self, c: &[f64]) -> Result<CubeFunction> {
        if c.len() != self.d {
            return Err(Error::dims("shift vector dimension mismatch"));
        }
        let mut values = self.values.clone();
        for chunk in values.chunks_mut(self.d) {
            for (v, s) in chunk.iter_mut().zip(c.iter()) {
                *v -= *s;
            }
        }
        Ok(CubeFunction { n: self.n, d: self.d, values })
    }

    /// c * f.
    pub fn scale(&self, c: f64) -> CubeFunction {
        let mut values = self.values.clone();
        for v in &mut values {
            *v *= c;
        }
        CubeFunction { n: self.n, d: self.d, values }
    }

    /// Largest Euclidean point norm over the table.
    pub fn max_point_norm(&self) -> f64 {
        self.values
            .chunks(self.d)
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry difference against another table.
    pub fn max_abs_diff(&self, other: &CubeFunction) -> f64 {
        assert_eq!(self.n, other.n);
        assert_eq!(self.d, other.d);
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl WalshSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Coefficient vector at subset bitmask `s`.
    #[inline]
    pub fn coefficient(&self, s: usize) -> &[f64] {
        &self.coefficients[s * self.d..(s + 1) * self.d]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Builds a spectrum from a flat coefficient table (subset-major).
    pub fn from_coefficients(n: usize, d: usize, coefficients: Vec<f64>) -> Result<Self> {
        check_shape(n, d)?;
        if coefficients.len() != (1usize << n) * d {
            return Err(Error::dims("coefficient table length mismatch"));
        }
        Ok(WalshSpectrum { n, d, coefficients })
    }
}

/// In-place Walsh-Hadamard butterfly applied independently to each of the
/// `d` interleaved components of `table` (length 2^n * d).
fn butterfly(table: &mut [f64], n: usize, d: usize) {
    let size = 1usize << n;
    let mut half = 1usize;
    while half < size {
        let block = half * 2;
        for start in (0..size).step_by(block) {
            for i in start..start + half {
                let (lo, hi) = (i * d, (i + half) * d);
                for c in 0..d {
                    let a = table[lo + c];
                    let b = table[hi + c];
                    table[lo + c] = a + b;
                    table[hi + c] = a - b;
                }
            }
        }
        half = block;
    }
}

/// Walsh transform: coefficient at S is the mean of f(eps) w_S(eps).
pub fn walsh_transform(f: &CubeFunction) -> WalshSpectrum {
    let mut coefficients = f.values.clone();
    butterfly(&mut coefficients, f.n, f.d);
    let scale = 1.0 / (1usize << f.n) as f64;
    for c in &mut coefficients {
        *c *= scale;
    }
    WalshSpectrum { n: f.n, d: f.d, coefficients }
}

/// Inverse Walsh transform: f(x) = sum_S coeff(S) w_S(x).
pub fn inverse_walsh(spectrum: &WalshSpectrum) -> CubeFunction {
    let mut values = spectrum.coefficients.clone();
    butterfly(&mut values, spectrum.n, spectrum.d);
    CubeFunction { n: spectrum.n, d: spectrum.d, values }
}

/// Discrete partial derivative D_j f(x) = (f(x) - f(x with coord j negated)) / 2.
pub fn discrete_derivative(f: &CubeFunction, j: usize) -> Result<CubeFunction> {
    if j >= f.n {
        return Err(Error::param(format!("coordinate {j} out of range for n={}", f.n)));
    }
    let d = f.d;
    let bit = 1usize << j;
    let mut values = vec![0.0; f.values.len()];
    for x in 0..f.len() {
        let y = x ^ bit;
        for c in 0..d {
            values[x * d + c] = (f.values[x * d + c] - f.values[y * d + c]) / 2.0;
        }
    }
    Ok(CubeFunction { n: f.n, d, values })
}

/// Cube Laplacian: -(D_1 + ... + D_n) f.
pub fn laplacian(f: &CubeFunction) -> CubeFunction {
    let d = f.d;
    let mut values = vec![0.0; f.values.len()];
    for x in 0..f.len() {
        for c in 0..d {
            // -sum_j (f(x) - f(x^j))/2 = (sum_j f(x^j) - n f(x)) / 2
            let mut acc = -(f.n as f64) * f.values[x * d + c];
            for j in 0..f.n {
                acc += f.values[(x ^ (1 << j)) * d + c];
            }
            values[x * d + c] = acc / 2.0;
        }
    }
    CubeFunction { n: f.n, d, values }
}

/// Heat semigroup P_t f computed as the Walsh multiplier e^{-t|S|}.
pub fn heat_semigroup(f: &CubeFunction, t: f64) -> Result<CubeFunction> {
    if !(t >= 0.0) {
        return Err(Error::param(format!("heat semigroup time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let mut spectrum = walsh_transform(f);
    let decay: Vec<f64> = (0..=f.n).map(|k| (-t * k as f64).exp()).collect();
    for s in 0..f.len() {
        let m = decay[(s as u64).count_ones() as usize];
        for c in &mut spectrum.coefficients[s * f.d..(s + 1) * f.d] {
            *c *= m;
        }
    }
    Ok(inverse_walsh(&spectrum))
}

fn check_joint(n: usize, what: &str) -> Result<()> {
    if n > MAX_JOINT_N {
        return Err(Error::capacity(format!(
            "{what} costs 4^n work; n={n} exceeds the doubly-indexed cap {MAX_JOINT_N}"
        )));
    }
    Ok(())
}

/// Probabilistic form of the heat semigroup: an exact weighted sum
/// P_t f(x) = sum_xi [prod_i (1 + e^{-t} xi_i)/2] f(x xi).
///
/// Kept deliberately independent of the Walsh route so the two can serve as
/// oracles for one another.
pub fn kernel_semigroup(f: &CubeFunction, t: f64) -> Result<CubeFunction> {
    let law = BiasedCoordinateLaw::new(t)?;
    check_joint(f.n, "kernel_semigroup")?;
    let weights = mask_weights(&law, f.n);
    let size = f.len();
    let d = f.d;
    let mut values = vec![0.0; f.values.len()];
    values
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(x, out)| {
            let acc = pairwise_sum_vec(size, d, |xi, buf| {
                let w = weights[(xi as u64).count_ones() as usize];
                let src = &f.values[(x ^ xi) * d..(x ^ xi) * d + d];
                for (b, v) in buf.iter_mut().zip(src.iter()) {
                    *b = w * v;
                }
            });
            out.copy_from_slice(&acc);
        });
    Ok(CubeFunction { n: f.n, d, values })
}

/// E[delta_j(t) f(x xi(t))] as an exact weighted sum, for every x. This is
/// the semigroup gradient without its (e^{2t} - 1)^{-1/2} prefactor; callers
/// that integrate against mu keep the two factors separate for stability at
/// very small t.
pub(crate) fn kernel_delta_expectation(
    f: &CubeFunction,
    j: usize,
    law: &BiasedCoordinateLaw,
) -> Result<CubeFunction> {
    check_joint(f.n, "kernel_delta_expectation")?;
    if j >= f.n {
        return Err(Error::param(format!("coordinate {j} out of range for n={}", f.n)));
    }
    let weights = mask_weights(law, f.n);
    let bit = 1usize << j;
    let size = f.len();
    let d = f.d;
    let (dp, dm) = (law.delta_plus(), law.delta_minus());
    let mut values = vec![0.0; f.values.len()];
    values
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(x, out)| {
            let acc = pairwise_sum_vec(size, d, |xi, buf| {
                let delta = if xi & bit == 0 { dp } else { dm };
                let w = delta * weights[(xi as u64).count_ones() as usize];
                let src = &f.values[(x ^ xi) * d..(x ^ xi) * d + d];
                for (b, v) in buf.iter_mut().zip(src.iter()) {
                    *b = w * v;
                }
            });
            out.copy_from_slice(&acc);
        });
    Ok(CubeFunction { n: f.n, d, values })
}

/// Probabilistic form of the semigroup gradient:
/// D_j P_t f(x) = (e^{2t} - 1)^{-1/2} E[delta_j(t) f(x xi(t))], evaluated as
/// an exact weighted sum.
pub fn kernel_gradient(f: &CubeFunction, j: usize, t: f64) -> Result<CubeFunction> {
    let law = BiasedCoordinateLaw::new(t)?;
    // 1/sqrt(e^{2t} - 1) = e^{-t} / sqrt(1 - e^{-2t})
    let prefactor = law.exp_neg_t() / law.variance().sqrt();
    Ok(kernel_delta_expectation(f, j, &law)?.scale(prefactor))
}

/// Uniform expectation E f(eps), reduced pairwise.
pub fn expectation(f: &CubeFunction) -> Vec<f64> {
    let size = f.len();
    let d = f.d;
    let mut mean = pairwise_sum_vec(size, d, |x, buf| {
        buf.copy_from_slice(&f.values[x * d..(x + 1) * d]);
    });
    let scale = 1.0 / size as f64;
    for m in &mut mean {
        *m *= scale;
    }
    mean
}

/// Biased expectation E f(xi(t)) = sum_xi [prod_i (1 + e^{-t} xi_i)/2] f(xi).
pub fn biased_expectation(f: &CubeFunction, t: f64) -> Result<Vec<f64>> {
    let law = BiasedCoordinateLaw::new(t)?;
    let weights = mask_weights(&law, f.n);
    let d = f.d;
    Ok(pairwise_sum_vec(f.len(), d, |x, buf| {
        let w = weights[(x as u64).count_ones() as usize];
        let src = &f.values[x * d..(x + 1) * d];
        for (b, v) in buf.iter_mut().zip(src.iter()) {
            *b = w * v;
        }
    }))
}

/// Mean of ||f(eps)||^2 (Euclidean), the value side of the Parseval identity.
pub fn mean_square_norm(f: &CubeFunction) -> f64 {
    let d = f.d;
    pairwise_sum(f.len(), |x| {
        f.values[x * d..(x + 1) * d].iter().map(|v| v * v).sum::<f64>()
    }) / f.len() as f64
}

/// Sum of squared Euclidean norms of all Walsh coefficients, the spectral
/// side of the Parseval identity.
pub fn spectral_square_norm(spectrum: &WalshSpectrum) -> f64 {
    let d = spectrum.d;
    pairwise_sum(1usize << spectrum.n, |s| {
        spectrum.coefficients[s * d..(s + 1) * d]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
    })
}
