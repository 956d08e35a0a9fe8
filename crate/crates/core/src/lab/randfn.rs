//! Reproducible random cube functions, drawn on the Walsh side.

use crate::cube::{inverse_walsh, CubeFunction, WalshSpectrum};
use crate::error::Result;
use crate::rng::CounterRng;

/// Generator parameters. Coefficients are drawn uniformly from [-1, 1],
/// optionally restricted to |S| <= degree_cap and thinned to the given keep
/// probability, and the resulting table is normalized so the largest
/// Euclidean point norm is one (the convention under which the crate's
/// absolute tolerances are calibrated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomFunctionParams {
    pub n: usize,
    pub d: usize,
    pub degree_cap: Option<usize>,
    /// Probability that a coefficient is kept; 1.0 draws a dense spectrum.
    pub keep_probability: f64,
    pub seed: u64,
}

impl RandomFunctionParams {
    pub fn dense(n: usize, d: usize, seed: u64) -> Self {
        RandomFunctionParams { n, d, degree_cap: None, keep_probability: 1.0, seed }
    }

    /// Compact description recorded in report parameters.
    pub fn label(&self) -> String {
        let cap = match self.degree_cap {
            Some(c) => format!("deg<={c}"),
            None => "dense".to_string(),
        };
        format!(
            "walsh_uniform(n={},d={},{cap},keep={},seed={})",
            self.n, self.d, self.keep_probability, self.seed
        )
    }
}

/// Draws the function described by `params`.
pub fn random_cube_function(params: &RandomFunctionParams) -> Result<CubeFunction> {
    let size = 1usize << params.n;
    let rng = CounterRng::new(params.seed, 53);
    let mut coefficients = vec![0.0f64; size * params.d];
    let mut any = false;
    for s in 0..size {
        if let Some(cap) = params.degree_cap {
            if (s as u64).count_ones() as usize > cap {
                continue;
            }
        }
        let kept = params.keep_probability >= 1.0
            || rng.uniform_at((size + s) as u64) < params.keep_probability;
        if !kept {
            continue;
        }
        for c in 0..params.d {
            let v = rng.symmetric_at((s * params.d + c) as u64);
            coefficients[s * params.d + c] = v;
            any |= v != 0.0;
        }
    }
    if !any {
        // Thinning removed everything; fall back to a dictator so callers
        // always receive a nonconstant function.
        coefficients[params.d] = 1.0;
    }
    let spectrum = WalshSpectrum::from_coefficients(params.n, params.d, coefficients)?;
    let f = inverse_walsh(&spectrum);
    let scale = f.max_point_norm();
    Ok(if scale > 0.0 { f.scale(1.0 / scale) } else { f })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_normalized() {
        let params = RandomFunctionParams::dense(6, 3, 99);
        let a = random_cube_function(&params).unwrap();
        let b = random_cube_function(&params).unwrap();
        assert_eq!(a.values(), b.values());
        assert!((a.max_point_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degree_cap_is_respected() {
        let params = RandomFunctionParams {
            n: 5,
            d: 2,
            degree_cap: Some(1),
            keep_probability: 1.0,
            seed: 4,
        };
        let f = random_cube_function(&params).unwrap();
        let spec = crate::cube::walsh_transform(&f);
        for s in 0..1usize << 5 {
            if (s as u64).count_ones() > 1 {
                for c in spec.coefficient(s) {
                    assert!(c.abs() < 1e-13, "degree leak at mask {s}");
                }
            }
        }
    }

    #[test]
    fn aggressive_thinning_still_yields_a_function() {
        let params = RandomFunctionParams {
            n: 4,
            d: 1,
            degree_cap: Some(2),
            keep_probability: 0.0,
            seed: 11,
        };
        let f = random_cube_function(&params).unwrap();
        assert!(f.max_point_norm() > 0.0);
    }
}
