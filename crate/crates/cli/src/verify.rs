//! Identity checks shared by `nclab verify` and the acceptance suite.

use nclab_core::basis::BasisContext;
use nclab_core::fredholm::{
    characteristic_direct, characteristic_pf, discretize_kernel, fredholm_det, fredholm_pf, SliceTest, TestFunction,
    TestFunctionSpec,
};
use nclab_core::kernels::{CorrelationKernel, CorrelationQuery};
use nclab_core::quadrature::{QuadratureSpec, Scheme};
use nclab_core::skewlin::{debruijn_matrix, symplectic_j, SkewMatrix, DIRECT_MAX_DIM};
use nclab_core::stochastic::{
    correlation_bruteforce, km_determinant, survival_probability, OrderedConfiguration, TimePartition,
};
use nclab_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::output::{num, Table};
use crate::Failure;

/// Outcome of one check: the worst measured error against its tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }

    /// A check whose computation itself failed.
    pub fn errored(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured: f64::NAN,
            tolerance,
            passed: false,
        }
    }
}

fn record(name: String, tolerance: f64, r: Result<f64>) -> Check {
    match r {
        Ok(m) => Check::new(name, m, tolerance),
        Err(e) => {
            eprintln!("{name}: {e}");
            Check::errored(name, tolerance)
        }
    }
}

fn random_skew(dim: usize, rng: &mut ChaCha8Rng) -> Result<SkewMatrix> {
    SkewMatrix::from_upper(dim, |_, _| rng.random_range(-1.0..1.0))
}

/// `max |Pf(A)^2 - det A| / |det A|` over `per_dim` random skew matrices of
/// each even dimension in `dims`.
pub fn pfaffian_square(dims: &[usize], per_dim: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for &d in dims {
        for _ in 0..per_dim {
            let a = random_skew(d, &mut rng)?;
            let pf = a.pfaffian();
            let det = a.as_matrix().clone().determinant();
            worst = worst.max((pf * pf - det).abs() / det.abs());
        }
    }
    Ok(worst)
}

/// `max |Pf(A) - Pf_direct(A)| / max(1, |Pf(A)|)` with the permutation-sum
/// definition as oracle.
pub fn pfaffian_definition(dims: &[usize], per_dim: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for &d in dims.iter().filter(|&&d| d <= DIRECT_MAX_DIM) {
        for _ in 0..per_dim {
            let a = random_skew(d, &mut rng)?;
            let pf = a.pfaffian();
            worst = worst.max((pf - a.pfaffian_direct()?).abs() / pf.abs().max(1.0));
        }
    }
    Ok(worst)
}

fn partition_with_ratio(horizon: f64, ratio: f64) -> Result<TimePartition> {
    if ratio >= 1.0 {
        TimePartition::single(horizon)
    } else {
        TimePartition::new(vec![ratio * horizon, horizon], horizon)
    }
}

/// `max |skew_gram - J_N|` for first time `ratio * T`.
pub fn skew_gram(n: usize, horizon: f64, ratio: f64, quad: &QuadratureSpec) -> Result<f64> {
    let p = partition_with_ratio(horizon, ratio)?;
    let ctx = BasisContext::with_spare(n, &p, 0)?;
    let g = ctx.skew_gram(quad)?;
    let j = symplectic_j(n)?;
    Ok((g - j.as_matrix()).abs().max())
}

/// Gaussian pairs `(mean_1, var_1, mean_2, var_2)` for the de Bruijn check.
pub const DEBRUIJN_FAMILIES: [(f64, f64, f64, f64); 5] = [
    (0.0, 1.0, 1.0, 1.0),
    (-0.5, 0.3, 0.4, 2.0),
    (0.7, 0.5, -0.2, 0.5),
    (0.0, 0.1, 0.05, 0.1),
    (1.5, 3.0, -1.0, 0.2),
];

fn gaussian(mean: f64, var: f64, y: f64) -> f64 {
    (-(y - mean) * (y - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// `int_{-inf}^{b} f`, split at the `centers` below `b`.
fn lower_split(quad: &QuadratureSpec, f: &dyn Fn(f64) -> Result<f64>, b: f64, centers: &[f64]) -> Result<f64> {
    let mut pts: Vec<f64> = centers.iter().copied().filter(|&c| c < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.push(b);
    let mut total = quad.try_integrate_lower(f, pts[0])?;
    for w in pts.windows(2) {
        total += quad.try_integrate(f, w[0], w[1])?;
    }
    Ok(total)
}

/// `max |int_{y1<y2} det[phi_i(y_j)] dy - Pf(a)|` over [`DEBRUIJN_FAMILIES`],
/// the left side by nested adaptive quadrature over the ordered region.
pub fn debruijn(quad: &QuadratureSpec) -> Result<f64> {
    let inner = QuadratureSpec {
        abs_tol: quad.abs_tol * 1e-2,
        ..*quad
    };
    let mut worst: f64 = 0.0;
    for &(m1, v1, m2, v2) in &DEBRUIJN_FAMILIES {
        let f1 = move |y: f64| gaussian(m1, v1, y);
        let f2 = move |y: f64| gaussian(m2, v2, y);
        let ordered = quad.try_integrate_line(
            |y2| lower_split(&inner, &|y1| Ok(f1(y1) * f2(y2) - f1(y2) * f2(y1)), y2, &[m1, m2]),
            &[m1, m2],
        )?;
        let pf = debruijn_matrix(&[&f1, &f2], quad)?.pfaffian();
        worst = worst.max((ordered - pf).abs());
    }
    Ok(worst)
}

/// Survival check grid: times and gaps.
pub const SURVIVAL_TIMES: [f64; 5] = [0.05, 0.3, 1.0, 2.5, 6.0];
pub const SURVIVAL_GAPS: [f64; 5] = [0.01, 0.2, 0.7, 1.5, 4.0];

/// `max |survival_probability - int_{y1<y2} det[p_t(x_i, y_j)] dy|` over
/// the grid, two particles at `-gap/2` and `gap/2`.
pub fn survival(quad: &QuadratureSpec) -> Result<f64> {
    let inner = QuadratureSpec {
        abs_tol: quad.abs_tol * 1e-1,
        ..*quad
    };
    let grid: Vec<(f64, f64)> = SURVIVAL_TIMES
        .iter()
        .flat_map(|&t| SURVIVAL_GAPS.iter().map(move |&g| (t, g)))
        .collect();
    let errs = grid
        .par_iter()
        .map(|&(t, gap)| {
            let x = [-gap / 2.0, gap / 2.0];
            let integral = quad.try_integrate_line(
                |y2| lower_split(&inner, &|y1| km_determinant(t, &x, &[y1, y2]), y2, &x),
                &x,
            )?;
            let closed = survival_probability(t, &OrderedConfiguration::new(x.to_vec())?)?;
            Ok((integral - closed).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// Evenly spread query points on `[lo, hi]`.
pub fn spread(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    if count == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

/// `max |pfaffian correlation - brute-force integral|` over `queries`.
pub fn bruteforce(k: &CorrelationKernel, queries: &[CorrelationQuery], quad: &QuadratureSpec) -> Result<f64> {
    let p = k.ctx().partition();
    let errs = queries
        .par_iter()
        .map(|q| {
            let pf = k.correlation(q)?.value;
            let bf = correlation_bruteforce(p, q.slices(), k.ctx().n(), quad)?;
            Ok((pf - bf).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// One-point queries at slice `mu`.
pub fn onepoint_queries(len: usize, mu: usize, count: usize) -> Result<Vec<CorrelationQuery>> {
    spread(count, -2.0, 2.0)
        .into_iter()
        .map(|x| CorrelationQuery::single(len, mu, x))
        .collect()
}

/// Pairs at slices `mu < nu`, `y` running against `x`.
pub fn twopoint_queries(len: usize, mu: usize, nu: usize, count: usize) -> Result<Vec<CorrelationQuery>> {
    spread(count, -1.8, 1.8)
        .into_iter()
        .zip(spread(count, 1.3, -1.5))
        .map(|(x, y)| CorrelationQuery::pair(len, mu, x, nu, y))
        .collect()
}

/// Worst `|closed - series| / tail_bound` for `S~` and for `I~` at `count`
/// random points of `[-2.5, 2.5]`. `I~` at two points of the final slice is
/// skipped when that slice sits at the horizon: there it carries the jump of
/// `sgn(y - x)` and its series converges only in mean.
pub fn series(k: &CorrelationKernel, count: usize, seed: u64) -> Result<(f64, f64)> {
    let p = k.ctx().partition();
    let len = p.len();
    let last = len - 1;
    let jump = p.time(last) == p.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s_worst: f64 = 0.0;
    let mut i_worst: f64 = 0.0;
    if len >= 2 {
        for _ in 0..count {
            let mu = rng.random_range(0..last);
            let nu = rng.random_range(mu + 1..len);
            let (x, y) = (rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5));
            let s = k.s_tilde_series(mu, x, nu, y)?;
            s_worst = s_worst.max((k.kernel_s_tilde(mu, x, nu, y)? - s.value).abs() / s.tail_bound);
        }
    }
    let mut drawn = 0;
    while drawn < count {
        let mu = rng.random_range(0..len);
        let nu = rng.random_range(0..len);
        if jump && mu == last && nu == last {
            if len == 1 {
                break;
            }
            continue;
        }
        drawn += 1;
        let (x, y) = (rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5));
        let s = k.i_tilde_series(mu, x, nu, y)?;
        i_worst = i_worst.max((k.kernel_i_tilde(mu, x, nu, y)? - s.value).abs() / s.tail_bound);
    }
    Ok((s_worst, i_worst))
}

/// `max_mu |int S~^{mu,mu}(x, x) dx - N|`.
pub fn normalization(k: &CorrelationKernel, quad: &QuadratureSpec) -> Result<f64> {
    let n = k.ctx().n() as f64;
    let len = k.ctx().partition().len();
    let errs = (0..len)
        .into_par_iter()
        .map(|mu| {
            let mass = quad.try_integrate_line(|x| k.one_point_density(mu, x), &[0.0])?;
            Ok((mass - n).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// `max |Pf(J + K)^2 - det(I - J K)| / |det|` for the discretized kernel at
/// each node count.
pub fn rains(spec: &TestFunctionSpec, k: &CorrelationKernel, nodes: &[usize]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &m in nodes {
        let disc = discretize_kernel(spec, k, m)?;
        let pf = fredholm_pf(&disc)?;
        let det = fredholm_det(&disc.symplectic_companion()?);
        worst = worst.max((pf * pf - det).norm() / det.norm());
    }
    Ok(worst)
}

/// Test functions for the single-time characteristic check.
pub fn single_time_cases() -> Vec<TestFunctionSpec> {
    let one = |f: TestFunction, theta: f64| TestFunctionSpec {
        slices: vec![SliceTest { function: Some(f), theta }],
    };
    vec![
        one(TestFunction::Bump { center: 0.2, half_width: 1.5, height: 1.0 }, 1.3),
        one(TestFunction::Indicator { lo: -0.5, hi: 0.8, height: 1.0 }, 2.0),
        one(TestFunction::Bump { center: -0.4, half_width: 0.8, height: 2.0 }, -0.9),
        one(TestFunction::Indicator { lo: 0.0, hi: 3.0, height: 0.5 }, 3.1),
        one(TestFunction::Bump { center: 1.0, half_width: 2.5, height: 1.0 }, 0.4),
    ]
}

/// Test functions for the two-time characteristic check.
pub fn two_time_cases() -> Vec<TestFunctionSpec> {
    let two = |f: TestFunction, a: f64, g: Option<TestFunction>, b: f64| TestFunctionSpec {
        slices: vec![SliceTest { function: Some(f), theta: a }, SliceTest { function: g, theta: b }],
    };
    vec![
        two(
            TestFunction::Bump { center: 0.2, half_width: 1.5, height: 1.0 },
            1.3,
            Some(TestFunction::Indicator { lo: -0.5, hi: 0.8, height: 1.0 }),
            -0.7,
        ),
        two(TestFunction::Bump { center: -0.3, half_width: 1.2, height: 1.0 }, 0.8, None, 0.0),
        two(
            TestFunction::Indicator { lo: -1.0, hi: 0.0, height: 1.0 },
            2.2,
            Some(TestFunction::Bump { center: 0.5, half_width: 1.0, height: 1.0 }),
            1.1,
        ),
        two(
            TestFunction::Indicator { lo: 0.3, hi: 1.4, height: 1.0 },
            -1.5,
            Some(TestFunction::Indicator { lo: -2.0, hi: 2.0, height: 0.25 }),
            2.0,
        ),
        two(
            TestFunction::Bump { center: 0.0, half_width: 0.6, height: 1.0 },
            3.0,
            Some(TestFunction::Bump { center: 0.0, half_width: 2.0, height: 1.0 }),
            -0.5,
        ),
    ]
}

/// `max |characteristic_pf - characteristic_direct|` over `specs`.
pub fn characteristic(
    k: &CorrelationKernel,
    specs: &[TestFunctionSpec],
    nodes: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let fixed = QuadratureSpec {
        scheme: Scheme::GaussLegendre,
        nodes,
        abs_tol: quad.abs_tol,
    };
    let p = k.ctx().partition();
    let errs = specs
        .par_iter()
        .map(|s| {
            let pf = characteristic_pf(s, k, &fixed)?;
            let direct = characteristic_direct(s, p, k.ctx().n(), quad)?;
            Ok((pf - direct).norm())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// Worst disagreement between the closed forms of `R_k`, `Phi_k` and their
/// monomial and heat-convolution counterparts, `k < 8`.
pub fn function_routes(k: &CorrelationKernel, quad: &QuadratureSpec) -> Result<f64> {
    let ctx = k.ctx();
    let len = ctx.partition().len();
    let top = ctx.basis_size().min(8);
    let mut worst: f64 = 0.0;
    for mu in 0..len {
        for x in [-1.7, -0.3, 0.0, 0.9, 2.2] {
            for j in 0..top {
                let r = ctx.r_function(j, mu, x)?;
                let rm = ctx.r_function_monomial(j, mu, x)?;
                let phi = ctx.phi_function(j, mu, x)?;
                let pq = ctx.phi_function_quadrature(j, mu, x, quad)?;
                worst = worst.max((r - rm).abs()).max((phi - pq).abs());
            }
        }
    }
    Ok(worst)
}

/// Every check at the sizes of the config's `verify` section.
pub fn run_suite(config: &ExperimentConfig) -> std::result::Result<Vec<Check>, Failure> {
    let v = config.verify.clone().unwrap_or_default();
    let seed = config.seed;
    let t = config.horizon;
    let quad = config.quadrature.adaptive();
    let partition = config.partition()?;
    // a two-time partition for the checks that need one
    let two = if partition.len() >= 2 {
        partition.clone()
    } else {
        TimePartition::new(vec![t / 2.0, t], t).map_err(|e| Failure::Config(e.to_string()))?
    };
    let kernel_on = |n: usize, p: &TimePartition| -> Result<CorrelationKernel> {
        Ok(CorrelationKernel::new(BasisContext::with_spare(n, p, config.spare_pairs)?))
    };
    let dims: Vec<usize> = (1..=10).map(|h| 2 * h).collect();
    let mut checks = vec![
        record("pfaffian_square".into(), 1e-10, pfaffian_square(&dims, v.matrices_per_dim, seed)),
        record("pfaffian_definition".into(), 1e-12, pfaffian_definition(&dims, v.matrices_per_dim, seed ^ 1)),
    ];
    for &n in &v.gram_sizes {
        for &r in &v.gram_ratios {
            checks.push(record(format!("skew_gram n={n} t1/T={r}"), 1e-8, skew_gram(n, t, r, &quad)));
        }
    }
    checks.push(record("debruijn".into(), 1e-7, debruijn(&quad)));
    checks.push(record("survival".into(), 1e-8, survival(&QuadratureSpec::adaptive(1e-10))));

    let bf_quad = QuadratureSpec::adaptive(config.quadrature.abs_tol.max(1e-9));
    let single = TimePartition::single(t).map_err(|e| Failure::Config(e.to_string()))?;
    let bf = |p: &TimePartition, queries: Result<Vec<CorrelationQuery>>| -> Result<f64> {
        bruteforce(&kernel_on(2, p)?, &queries?, &bf_quad)
    };
    let last = two.len() - 1;
    checks.push(record(
        "bruteforce one point t=T".into(),
        1e-5,
        bf(&single, onepoint_queries(1, 0, v.bruteforce_points)),
    ));
    checks.push(record(
        "bruteforce one point t<T".into(),
        1e-5,
        bf(&two, onepoint_queries(two.len(), 0, v.bruteforce_points)),
    ));
    checks.push(record(
        "bruteforce two times".into(),
        1e-5,
        bf(&two, twopoint_queries(two.len(), 0, last, v.bruteforce_points)),
    ));

    match kernel_on(config.n, &two).and_then(|k| series(&k, v.series_points, seed ^ 2)) {
        Ok((s, i)) => {
            checks.push(Check::new("series S~ / tail bound", s, 1.0));
            checks.push(Check::new("series I~ / tail bound", i, 1.0));
        }
        Err(e) => {
            eprintln!("series: {e}");
            checks.push(Check::errored("series S~ / tail bound", 1.0));
            checks.push(Check::errored("series I~ / tail bound", 1.0));
        }
    }

    for &n in &v.normalization_sizes {
        checks.push(record(
            format!("normalization n={n}"),
            1e-5,
            kernel_on(n, &partition).and_then(|k| normalization(&k, &quad)),
        ));
    }

    let pair = TimePartition::new(vec![t / 2.0, t], t).map_err(|e| Failure::Config(e.to_string()))?;
    checks.push(record(
        "rains".into(),
        1e-8,
        kernel_on(2, &pair).and_then(|k| rains(&two_time_cases()[0], &k, &v.rains_nodes)),
    ));
    let direct_quad = QuadratureSpec::adaptive(config.quadrature.abs_tol.max(1e-8));
    let cases = v.characteristic_cases;
    checks.push(record(
        "characteristic one time".into(),
        1e-5,
        kernel_on(2, &single).and_then(|k| {
            characteristic(&k, &single_time_cases()[..cases.min(5)], config.quadrature.nodes, &direct_quad)
        }),
    ));
    checks.push(record(
        "characteristic two times".into(),
        1e-5,
        kernel_on(2, &pair).and_then(|k| {
            characteristic(&k, &two_time_cases()[..cases.min(5)], config.quadrature.nodes, &direct_quad)
        }),
    ));
    checks.push(record(
        "function routes".into(),
        1e-8,
        kernel_on(config.n, &partition).and_then(|k| function_routes(&k, &QuadratureSpec::adaptive(1e-12))),
    ));
    Ok(checks)
}

/// Names of the failed checks in a report table.
pub fn failed_in(report: &Table) -> Vec<String> {
    report.rows.iter().filter(|r| r[3] == "fail").map(|r| r[0].clone()).collect()
}

pub fn report(checks: &[Check]) -> Table {
    let mut t = Table::new("verify", vec!["check", "measured", "tolerance", "status"]);
    for c in checks {
        t.rows.push(vec![
            c.name.clone(),
            num(c.measured),
            num(c.tolerance),
            if c.passed { "pass" } else { "fail" }.to_string(),
        ]);
    }
    t
}
