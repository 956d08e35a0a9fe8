//! Convex gauges Phi: R^d -> R used on the left-hand side of the
//! dimension-free inequality.

use crate::error::{Error, Result};
use crate::norms::NormSpec;
use crate::rng::CounterRng;

/// A convex function on R^d from one of three families: a norm power
/// ||v||^p with p >= 1, a maximum of affine functionals, or a single linear
/// functional.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexGauge {
    NormPower { spec: NormSpec, p: f64 },
    MaxAffine { pieces: Vec<(Vec<f64>, f64)> },
    Linear { functional: Vec<f64> },
}

impl ConvexGauge {
    pub fn norm_power(spec: NormSpec, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::param(format!("norm power needs p >= 1, got {p}")));
        }
        Ok(ConvexGauge::NormPower { spec, p })
    }

    pub fn max_affine(pieces: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::param("max-affine gauge needs at least one piece"));
        }
        let d = pieces[0].0.len();
        if d == 0 || pieces.iter().any(|(a, _)| a.len() != d) {
            return Err(Error::dims("max-affine functionals must share a positive dimension"));
        }
        Ok(ConvexGauge::MaxAffine { pieces })
    }

    pub fn linear(functional: Vec<f64>) -> Result<Self> {
        if functional.is_empty() {
            return Err(Error::param("linear gauge needs a nonempty functional"));
        }
        Ok(ConvexGauge::Linear { functional })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexGauge::NormPower { spec, .. } => spec.d,
            ConvexGauge::MaxAffine { pieces } => pieces[0].0.len(),
            ConvexGauge::Linear { functional } => functional.len(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ConvexGauge::NormPower { spec, p } => format!("norm_power({},{p})", spec.label()),
            ConvexGauge::MaxAffine { pieces } => format!("max_affine({})", pieces.len()),
            ConvexGauge::Linear { .. } => "linear".to_string(),
        }
    }

    #[inline]
    pub fn evaluate(&self, v: &[f64]) -> f64 {
        match self {
            ConvexGauge::NormPower { spec, p } => {
                let nv = spec.norm_unchecked(v);
                if *p == 1.0 {
                    nv
                } else if *p == 2.0 {
                    nv * nv
                } else {
                    nv.powf(*p)
                }
            }
            ConvexGauge::MaxAffine { pieces } => pieces
                .iter()
                .map(|(a, b)| a.iter().zip(v.iter()).map(|(x, y)| x * y).sum::<f64>() + b)
                .fold(f64::NEG_INFINITY, f64::max),
            ConvexGauge::Linear { functional } => {
                functional.iter().zip(v.iter()).map(|(x, y)| x * y).sum()
            }
        }
    }

    /// Witnesses convexity on random midpoints:
    /// Phi((u+v)/2) <= (Phi(u) + Phi(v))/2 + slack.
    pub fn check_convexity(&self, trials: u64, seed: u64, slack: f64) -> Result<()> {
        let d = self.dim();
        let rng = CounterRng::new(seed, 29);
        for k in 0..trials {
            let u: Vec<f64> = (0..d).map(|i| 2.0 * rng.symmetric_at(k * 2 * d as u64 + i as u64)).collect();
            let v: Vec<f64> = (0..d)
                .map(|i| 2.0 * rng.symmetric_at(k * 2 * d as u64 + (d + i) as u64))
                .collect();
            let mid: Vec<f64> = u.iter().zip(v.iter()).map(|(a, b)| (a + b) / 2.0).collect();
            let lhs = self.evaluate(&mid);
            let rhs = (self.evaluate(&u) + self.evaluate(&v)) / 2.0;
            if lhs > rhs + slack {
                return Err(Error::numerical(format!(
                    "convexity violated for {}: midpoint {lhs} vs average {rhs}",
                    self.label()
                )));
            }
        }
        Ok(())
    }
}
