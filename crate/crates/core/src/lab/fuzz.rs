//! Deterministic fuzz corpora and the runnable verification suites behind
//! the `verify` subcommands. Every suite draws its instances from a counter
//! RNG, evaluates the relevant identities or inequalities, and returns one
//! report per check; a report with `satisfied == false` is a genuine
//! violation beyond tolerance.

use super::{
    dimension_free_lp_sides, dimension_free_main_sides, enflo_sides, enflo_vs_rademacher,
    odd_part_domination, pisier_classic_sides, pointwise_identity_residual,
    random_cube_function, symmetrization_chain_check, ConvexGauge, EvalMode, InequalityReport,
    RandomFunctionParams, ReportParams, Tolerances,
};
use crate::cube::{
    discrete_derivative, heat_semigroup, kernel_gradient, kernel_semigroup, walsh_transform,
    CubeFunction,
};
use crate::error::Result;
use crate::measure::{
    mu_integral_adaptive, mu_weighted_integral, tail_integral, tail_integral_oracle,
    BiasedCoordinateLaw, MuQuadrature,
};
use crate::norms::{rademacher_moment, MomentQuery, NormSpec};
use crate::rng::CounterRng;
use crate::sum::pairwise_map_reduce;

/// Shared suite configuration, mirroring the CLI flags.
#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub trials: u64,
    pub max_n: usize,
    pub max_d: usize,
    pub seed: u64,
    pub quad_nodes: usize,
    pub tol: Tolerances,
    /// When set, joint expectations run in Monte Carlo mode with this many
    /// samples instead of exact enumeration.
    pub mc_trials: Option<u64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            trials: 100,
            max_n: 6,
            max_d: 3,
            seed: 0,
            quad_nodes: 64,
            tol: Tolerances::default(),
            mc_trials: None,
        }
    }
}

fn draw_in(rng: &CounterRng, ctr: u64, lo: usize, hi: usize) -> usize {
    lo + (rng.u64_at(ctr) as usize) % (hi - lo + 1)
}

/// One of the three fuzzed norm families on R^d, plus intermediate
/// exponents.
fn draw_norm(rng: &CounterRng, ctr: u64, d: usize) -> NormSpec {
    match rng.u64_at(ctr) % 4 {
        0 => NormSpec::lp(1.0, d).unwrap(),
        1 => NormSpec::euclidean(d).unwrap(),
        2 => NormSpec::linf(d).unwrap(),
        _ => NormSpec::lp(1.0 + 2.0 * rng.uniform_at(ctr.wrapping_add(1 << 40)), d).unwrap(),
    }
}

fn draw_p(rng: &CounterRng, ctr: u64) -> f64 {
    1.0 + 2.0 * rng.uniform_at(ctr)
}

fn draw_gauge(rng: &CounterRng, ctr: u64, d: usize) -> ConvexGauge {
    if rng.u64_at(ctr) % 3 == 0 {
        let pieces = draw_in(rng, ctr.wrapping_add(1), 1, 4);
        let mut v = Vec::with_capacity(pieces);
        for piece in 0..pieces {
            let a: Vec<f64> = (0..d)
                .map(|c| rng.symmetric_at(ctr.wrapping_add(2 + (piece * d + c) as u64)))
                .collect();
            let b = rng.symmetric_at(ctr.wrapping_add(100 + piece as u64));
            v.push((a, b));
        }
        ConvexGauge::max_affine(v).unwrap()
    } else {
        let norm = draw_norm(rng, ctr.wrapping_add(7), d);
        ConvexGauge::norm_power(norm, draw_p(rng, ctr.wrapping_add(9))).unwrap()
    }
}

fn draw_function(rng: &CounterRng, ctr: u64, max_n: usize, max_d: usize) -> (CubeFunction, String) {
    let n = draw_in(rng, ctr, 1, max_n);
    let d = draw_in(rng, ctr.wrapping_add(1), 1, max_d);
    let degree_cap = match rng.u64_at(ctr.wrapping_add(2)) % 3 {
        0 => Some(draw_in(rng, ctr.wrapping_add(3), 1, n)),
        _ => None,
    };
    let keep_probability = if rng.u64_at(ctr.wrapping_add(4)) % 4 == 0 { 0.5 } else { 1.0 };
    let params = RandomFunctionParams {
        n,
        d,
        degree_cap,
        keep_probability,
        seed: rng.u64_at(ctr.wrapping_add(5)),
    };
    (random_cube_function(&params).unwrap(), params.label())
}

fn bound_report(
    name: &str,
    observed: f64,
    bound: f64,
    n: usize,
    d: usize,
    generator: Option<String>,
) -> InequalityReport {
    // Discrepancy-versus-bound reports compare raw values: no extra slack.
    let mut params = ReportParams::new(n, d, Tolerances { rel: 0.0, abs: 0.0 });
    params.generator = generator;
    InequalityReport::from_sides(name, observed, bound, 0.0, params)
}

fn merge_reports(trials: u64, per_trial: impl Fn(u64) -> Vec<InequalityReport> + Sync) -> Vec<InequalityReport> {
    pairwise_map_reduce(
        trials as usize,
        |i| per_trial(i as u64),
        |mut a, mut b| {
            a.append(&mut b);
            a
        },
    )
    .unwrap_or_default()
}

/// Probabilistic-representation suite: the kernel-form semigroup and
/// gradient agree with the Walsh-multiplier routes to 1e-12 on random
/// functions at t in {0.1, 1, 3}.
pub fn probrep_suite(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let rng = CounterRng::new(cfg.seed, 103);
    Ok(merge_reports(cfg.trials, |i| {
        let (f, label) = draw_function(&rng, i * 64, cfg.max_n, cfg.max_d);
        let mut semigroup_err = 0.0f64;
        let mut gradient_err = 0.0f64;
        for t in [0.1, 1.0, 3.0] {
            let walsh = heat_semigroup(&f, t).unwrap();
            let kernel = kernel_semigroup(&f, t).unwrap();
            semigroup_err = semigroup_err.max(walsh.max_abs_diff(&kernel));
            for j in 0..f.n() {
                let composed = discrete_derivative(&walsh, j).unwrap();
                let direct = kernel_gradient(&f, j, t).unwrap();
                gradient_err = gradient_err.max(composed.max_abs_diff(&direct));
            }
        }
        vec![
            bound_report("probrep_semigroup", semigroup_err, 1e-12, f.n(), f.d(), Some(label.clone())),
            bound_report("probrep_gradient", gradient_err, 1e-12, f.n(), f.d(), Some(label)),
        ]
    }))
}

/// Pointwise-identity suite: kernel-route residual below 1e-7 at 64 nodes,
/// semigroup-route residual below 1e-9.
pub fn pointwise_suite(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let quad = MuQuadrature::new(cfg.quad_nodes)?;
    let rng = CounterRng::new(cfg.seed, 107);
    Ok(merge_reports(cfg.trials, |i| {
        let (f, label) = draw_function(&rng, i * 64, cfg.max_n, cfg.max_d);
        let res = pointwise_identity_residual(&f, &quad).unwrap();
        vec![
            bound_report("pointwise_kernel_route", res.kernel_route, 1e-7, f.n(), f.d(), Some(label.clone())),
            bound_report("pointwise_semigroup_route", res.semigroup_route, 1e-9, f.n(), f.d(), Some(label)),
        ]
    }))
}

/// Fuzz of the dimension-free inequality with convex gauges.
pub fn main_fuzz(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let quad = MuQuadrature::new(cfg.quad_nodes)?;
    let rng = CounterRng::new(cfg.seed, 109);
    let mode = match cfg.mc_trials {
        Some(trials) => EvalMode::MonteCarlo { trials, seed: cfg.seed ^ 0xabcd },
        None => EvalMode::Exact,
    };
    Ok(merge_reports(cfg.trials, |i| {
        let (f, label) = draw_function(&rng, i * 64, cfg.max_n, cfg.max_d);
        let gauge = draw_gauge(&rng, i * 64 + 32, f.d());
        let mut report =
            dimension_free_main_sides(&f, &gauge, &quad, mode, cfg.tol).unwrap();
        report.params.generator = Some(label);
        vec![report]
    }))
}

/// Fuzz of the l^p variant.
pub fn lp_fuzz(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let quad = MuQuadrature::new(cfg.quad_nodes)?;
    let rng = CounterRng::new(cfg.seed, 113);
    let mode = match cfg.mc_trials {
        Some(trials) => EvalMode::MonteCarlo { trials, seed: cfg.seed ^ 0xdcba },
        None => EvalMode::Exact,
    };
    Ok(merge_reports(cfg.trials, |i| {
        let (f, label) = draw_function(&rng, i * 64, cfg.max_n, cfg.max_d);
        let norm = draw_norm(&rng, i * 64 + 33, f.d());
        let p = draw_p(&rng, i * 64 + 35);
        let mut report = dimension_free_lp_sides(&f, p, &norm, &quad, mode, cfg.tol).unwrap();
        report.params.generator = Some(label);
        vec![report]
    }))
}

/// Classical-Pisier fuzz with uniform signs; reports the empirical constant
/// per instance and asserts nothing beyond the zero-edge semantics.
pub fn classic_fuzz(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let rng = CounterRng::new(cfg.seed, 127);
    let mode = match cfg.mc_trials {
        Some(trials) => EvalMode::MonteCarlo { trials, seed: cfg.seed ^ 0x1111 },
        None => EvalMode::Exact,
    };
    Ok(merge_reports(cfg.trials, |i| {
        let (f, label) = draw_function(&rng, i * 64, cfg.max_n, cfg.max_d);
        let norm = draw_norm(&rng, i * 64 + 33, f.d());
        let p = draw_p(&rng, i * 64 + 35);
        let mut report = pisier_classic_sides(&f, p, &norm, mode, cfg.tol).unwrap();
        report.params.generator = Some(label);
        // The classical inequality carries a dimension-dependent constant;
        // the report records the empirical one rather than asserting a bound.
        report.satisfied = true;
        vec![report]
    }))
}

/// Enflo suite: Hilbert-case ratio bound, Walsh-side oracle agreement, odd
/// part domination, and the linear reduction to Rademacher type.
pub fn enflo_suite(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let rng = CounterRng::new(cfg.seed, 131);
    Ok(merge_reports(cfg.trials, |i| {
        let mut out = Vec::new();
        let (f, label) = draw_function(&rng, i * 64, cfg.max_n, cfg.max_d);
        let euclid = NormSpec::euclidean(f.d()).unwrap();

        // Hilbert case p = 2: the Enflo constant is at most one, and both
        // sides are Walsh-computable: lhs = sum over odd |S| of ||coeff||^2,
        // rhs = sum over S of |S| ||coeff||^2.
        let sides = enflo_sides(&f, 2.0, &euclid, cfg.tol).unwrap();
        let spec = walsh_transform(&f);
        let mut lhs_walsh = 0.0;
        let mut rhs_walsh = 0.0;
        for s in 0..f.len() {
            let sq: f64 = spec.coefficient(s).iter().map(|c| c * c).sum();
            let degree = (s as u64).count_ones() as f64;
            if (s as u64).count_ones() % 2 == 1 {
                lhs_walsh += sq;
            }
            rhs_walsh += degree * sq;
        }
        let oracle_gap = (sides.lhs - lhs_walsh).abs().max((sides.rhs - rhs_walsh).abs());
        out.push(bound_report("enflo_walsh_oracle", oracle_gap, 1e-10, f.n(), f.d(), Some(label.clone())));
        out.push(enflo_vs_rademacher(&f, 2.0, &euclid, 1.0, cfg.tol).unwrap());
        let mut hilbert = sides;
        hilbert.name = "enflo_hilbert_ratio".into();
        // For the Hilbert instance the ratio itself is the assertion:
        // lhs <= rhs within tolerance.
        out.push(hilbert);

        // Odd-part domination holds for every norm and exponent.
        let norm = draw_norm(&rng, i * 64 + 40, f.d());
        let p = draw_p(&rng, i * 64 + 42);
        out.push(odd_part_domination(&f, p, &norm, cfg.tol).unwrap());

        // Linear functions reduce the Enflo inequality to Rademacher type.
        let lin_params = RandomFunctionParams {
            n: f.n(),
            d: f.d(),
            degree_cap: Some(1),
            keep_probability: 1.0,
            seed: rng.u64_at(i * 64 + 44),
        };
        let lin = random_cube_function(&lin_params).unwrap();
        let lin_sides = enflo_sides(&lin, p, &norm, cfg.tol).unwrap();
        let lin_spec = walsh_transform(&lin);
        let vectors: Vec<Vec<f64>> =
            (0..lin.n()).map(|j| lin_spec.coefficient(1 << j).to_vec()).collect();
        let moment = rademacher_moment(&MomentQuery {
            p_moment: p,
            vectors: vectors.clone(),
            norm,
        })
        .unwrap()
        .value;
        let sum_powers: f64 =
            vectors.iter().map(|v| norm.norm_unchecked(v).powf(p)).sum();
        let reduction_gap =
            (lin_sides.lhs - moment).abs().max((lin_sides.rhs - sum_powers).abs());
        out.push(bound_report(
            "enflo_linear_reduction",
            reduction_gap,
            1e-12,
            lin.n(),
            lin.d(),
            Some(lin_params.label()),
        ));
        out
    }))
}

/// Symmetrization suite: both chain links on Hilbert targets (where the
/// type constant is exactly one) plus the closed-form two-point moment
/// bound across a (t, p) grid.
pub fn symmetrization_suite(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>> {
    let rng = CounterRng::new(cfg.seed, 137);
    let max_n = cfg.max_n.min(4);
    let mut reports = merge_reports(cfg.trials, |i| {
        let n = draw_in(&rng, i * 64, 1, max_n);
        let d = draw_in(&rng, i * 64 + 1, 1, cfg.max_d);
        let params = RandomFunctionParams {
            n,
            d,
            degree_cap: None,
            keep_probability: 1.0,
            seed: rng.u64_at(i * 64 + 2),
        };
        let f = random_cube_function(&params).unwrap();
        let p = 1.0 + rng.uniform_at(i * 64 + 3);
        let t = [0.25, 1.0, 3.0][(rng.u64_at(i * 64 + 4) % 3) as usize];
        let norm = NormSpec::euclidean(d).unwrap();
        let chain =
            symmetrization_chain_check(&f, p, &norm, t, 1.0, EvalMode::Exact, cfg.tol).unwrap();
        vec![chain.jensen_link, chain.type_link]
    });

    // Two-point moment bound E|eta|^p <= 2^{p/2} with the closed form checked
    // against enumeration.
    for i in 0..=20 {
        let t = 0.05 * (3.0f64 / 0.05).powf(i as f64 / 20.0);
        let law = BiasedCoordinateLaw::new(t)?;
        for j in 0..=8 {
            let p = 1.0 + j as f64 / 8.0;
            let closed = law.symmetrized_abs_moment(p);
            let oracle = law.symmetrized_abs_moment_oracle(p);
            reports.push(bound_report(
                "symmetrized_moment_oracle",
                (closed - oracle).abs(),
                1e-12,
                1,
                1,
                None,
            ));
            reports.push(bound_report(
                "symmetrized_moment_bound",
                closed,
                2f64.powf(p / 2.0) + 1e-12,
                1,
                1,
                None,
            ));
        }
    }
    Ok(reports)
}

/// Closed-form integral suite: the tail integral against its two-point
/// oracle on a 20 x 5 grid, the mu-weighted integral bounds, quadrature
/// mass, and pushforward-versus-raw-density agreement on ten integrands.
pub fn integrals_suite(q_exp: f64, p_exp: f64, quad_nodes: usize) -> Result<Vec<InequalityReport>> {
    let quad = MuQuadrature::new(quad_nodes)?;
    let mut out = Vec::new();

    for i in 0..20 {
        let t = 0.1 + 0.35 * i as f64;
        for r in [1.0, 1.5, 2.0, 4.0, 8.0] {
            let gap = (tail_integral(t, r)? - tail_integral_oracle(t, r)?).abs();
            out.push(bound_report("tail_integral_oracle", gap, 1e-14, 1, 1, None));
        }
    }

    let mut exponents = vec![1.0, 1.5, 2.0, 4.0, 10.0];
    let named = q_exp.max(p_exp);
    if exponents.iter().all(|&e| (e - named).abs() > 1e-12) {
        exponents.push(named);
    }
    for m in exponents {
        let res = mu_weighted_integral(m, &quad)?;
        out.push(bound_report("mu_weighted_bound", res.mu_side, res.bound + 1e-8, 1, 1, None));
    }

    let mass: f64 = quad.weights().iter().sum();
    out.push(bound_report("mu_quadrature_mass", (mass - 1.0).abs(), 1e-10, 1, 1, None));

    let integrands: Vec<(&str, Box<dyn Fn(f64) -> f64 + Sync>)> = vec![
        ("exp(-t)", Box::new(|t: f64| (-t).exp())),
        ("exp(-2t)", Box::new(|t: f64| (-2.0 * t).exp())),
        ("exp(-3t)", Box::new(|t: f64| (-3.0 * t).exp())),
        ("exp(-4t)", Box::new(|t: f64| (-4.0 * t).exp())),
        ("sqrt(1-e^-2t)", Box::new(|t: f64| (-(-2.0 * t).exp_m1()).sqrt())),
        ("(1-e^-2t)", Box::new(|t: f64| -(-2.0 * t).exp_m1())),
        ("(1-e^-2t)^1.5", Box::new(|t: f64| (-(-2.0 * t).exp_m1()).powf(1.5))),
        ("e^-t sqrt(1-e^-2t)", Box::new(|t: f64| (-t).exp() * (-(-2.0 * t).exp_m1()).sqrt())),
        ("1/(1+t)", Box::new(|t: f64| 1.0 / (1.0 + t))),
        ("tanh(t)", Box::new(|t: f64| t.tanh())),
    ];
    for (_, g) in &integrands {
        let by_rule = quad.integrate(g);
        let by_oracle = mu_integral_adaptive(g, 1e-11)?;
        out.push(bound_report(
            "mu_pushforward_vs_raw_density",
            (by_rule - by_oracle).abs(),
            1e-8,
            1,
            1,
            None,
        ));
    }
    Ok(out)
}
