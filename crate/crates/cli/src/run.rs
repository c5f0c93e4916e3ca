use nclab_core::basis::BasisContext;
use nclab_core::fredholm::{characteristic_direct, characteristic_pf, TestFunctionSpec};
use nclab_core::kernels::{CorrelationKernel, CorrelationQuery};
use nclab_core::montecarlo::{onepoint_from, run_paths, twotime_from, Bins, Interval};
use nclab_core::quadrature::{gauss_legendre_on, QuadratureSpec};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Mode};
use crate::output::{num, Table};
use crate::verify;
use crate::Failure;

/// Gauss-Legendre nodes per direction for exact bin and box averages.
pub const CELL_NODES: usize = 16;

pub fn kernel(config: &ExperimentConfig) -> Result<CorrelationKernel, Failure> {
    let partition = config.partition()?;
    let ctx = BasisContext::with_spare(config.n, &partition, config.spare_pairs)
        .map_err(|e| Failure::Config(e.to_string()))?;
    Ok(CorrelationKernel::new(ctx))
}

/// Evaluates a resolved config. `verify` returns its report even when checks
/// fail; the caller decides the exit status from [`verify::failures`].
pub fn run(config: &ExperimentConfig) -> Result<Vec<Table>, Failure> {
    match config.mode {
        Some(Mode::Density) => density(config).map(|t| vec![t]),
        Some(Mode::Correlate) => correlate(config).map(|t| vec![t]),
        Some(Mode::Characteristic) => characteristic(config).map(|t| vec![t]),
        Some(Mode::Simulate) => simulate(config),
        Some(Mode::Verify) => Ok(vec![verify::report(&verify::run_suite(config)?)]),
        None => Err(Failure::Config("mode not resolved".into())),
    }
}

pub fn density(config: &ExperimentConfig) -> Result<Table, Failure> {
    let k = kernel(config)?;
    let p = k.ctx().partition().clone();
    let xs = config.grid.values();
    let points: Vec<(usize, f64)> = (0..p.len()).flat_map(|mu| xs.iter().map(move |&x| (mu, x))).collect();
    let values = points
        .par_iter()
        .map(|&(mu, x)| k.one_point_density(mu, x))
        .collect::<nclab_core::Result<Vec<_>>>()?;
    let mut t = Table::new("density", vec!["t", "x", "rho1"]);
    for (&(mu, x), v) in points.iter().zip(values) {
        t.rows.push(vec![num(p.time(mu)), num(x), num(v)]);
    }
    Ok(t)
}

pub fn correlate(config: &ExperimentConfig) -> Result<Table, Failure> {
    let c = config.correlate.expect("resolved config has correlate settings");
    let k = kernel(config)?;
    let p = k.ctx().partition().clone();
    let xs = config.grid.values();
    let ys = c.grid_b.unwrap_or(config.grid).values();
    let points: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let values = points
        .par_iter()
        .map(|&(x, y)| {
            let q = CorrelationQuery::pair(p.len(), c.slice_a, x, c.slice_b, y)?;
            k.correlation(&q).map(|r| r.value)
        })
        .collect::<nclab_core::Result<Vec<_>>>()?;
    let mut t = Table::new("correlate", vec!["t_a", "x", "t_b", "y", "rho2"]);
    for (&(x, y), v) in points.iter().zip(values) {
        t.rows.push(vec![num(p.time(c.slice_a)), num(x), num(p.time(c.slice_b)), num(y), num(v)]);
    }
    Ok(t)
}

pub fn characteristic(config: &ExperimentConfig) -> Result<Table, Failure> {
    let c = config.characteristic.as_ref().expect("resolved config has characteristic settings");
    let k = kernel(config)?;
    let p = k.ctx().partition().clone();
    let base = TestFunctionSpec::new(c.slices.clone()).map_err(|e| Failure::Config(e.to_string()))?;
    let fixed = config.quadrature.fixed();
    let adaptive = QuadratureSpec::adaptive(config.quadrature.abs_tol.max(1e-8));
    let mut t = Table::new("characteristic", vec!["theta", "re", "im", "abs_diff"]);
    for &theta in &c.thetas {
        let spec = base.scaled(theta);
        let pf = characteristic_pf(&spec, &k, &fixed)?;
        let direct = characteristic_direct(&spec, &p, config.n, &adaptive)?;
        t.rows.push(vec![num(theta), num(pf.re), num(pf.im), num((pf - direct).norm())]);
    }
    Ok(t)
}

/// Exact expected count in `[lo, hi]` at slice `mu`, divided by the width.
pub fn bin_average(k: &CorrelationKernel, mu: usize, lo: f64, hi: f64) -> nclab_core::Result<f64> {
    let (x, w) = gauss_legendre_on(CELL_NODES, lo, hi);
    let mut s = 0.0;
    for (x, w) in x.iter().zip(&w) {
        s += w * k.one_point_density(mu, *x)?;
    }
    Ok(s / (hi - lo))
}

/// Exact expected number of pairs with one point in `a` at slice `mu` and
/// one in `b` at slice `nu > mu`.
pub fn box_intensity(k: &CorrelationKernel, mu: usize, a: Interval, nu: usize, b: Interval) -> nclab_core::Result<f64> {
    let len = k.ctx().partition().len();
    let (xa, wa) = gauss_legendre_on(CELL_NODES, a.lo, a.hi);
    let (xb, wb) = gauss_legendre_on(CELL_NODES, b.lo, b.hi);
    let mut s = 0.0;
    for (x, u) in xa.iter().zip(&wa) {
        for (y, v) in xb.iter().zip(&wb) {
            s += u * v * k.correlation(&CorrelationQuery::pair(len, mu, *x, nu, *y)?)?.value;
        }
    }
    Ok(s)
}

pub fn simulate(config: &ExperimentConfig) -> Result<Vec<Table>, Failure> {
    let s = config.simulation.as_ref().expect("resolved config has simulation settings");
    let sc = config.simulation_config()?;
    let k = kernel(config)?;
    let p = k.ctx().partition().clone();
    let bins = Bins::new(s.bins.lo, s.bins.hi, s.bins.count).map_err(|e| Failure::Config(e.to_string()))?;
    let (paths, diag) = run_paths(&sc, p.times())?;
    let mut comments = vec![
        format!("paths {}", diag.paths),
        format!("rejections {}", diag.rejections),
        format!("metropolis_acceptance {}", num(diag.metropolis_acceptance)),
    ];
    comments.extend(diag.warnings.iter().map(|w| format!("warning {w}")));

    let mut hist = Table::new("simulate", vec!["t", "lo", "hi", "count", "density", "std_err", "exact"]);
    hist.comments = comments.clone();
    for mu in 0..p.len() {
        let e = onepoint_from(&paths, mu, &bins, diag.clone());
        let exact = (0..bins.count)
            .into_par_iter()
            .map(|i| bin_average(&k, mu, e.edges[i], e.edges[i + 1]))
            .collect::<nclab_core::Result<Vec<_>>>()?;
        for i in 0..bins.count {
            hist.rows.push(vec![
                num(p.time(mu)),
                num(e.edges[i]),
                num(e.edges[i + 1]),
                e.counts[i].to_string(),
                num(e.density[i]),
                num(e.std_err[i]),
                num(exact[i]),
            ]);
        }
    }
    let mut out = vec![hist];

    if let Some(b) = &s.boxes {
        let est = twotime_from(&paths, b.slice_a, b.slice_b, &b.list);
        let exact = b
            .list
            .par_iter()
            .map(|&(ia, ib)| box_intensity(&k, b.slice_a, ia, b.slice_b, ib))
            .collect::<nclab_core::Result<Vec<_>>>()?;
        let mut t = Table::new(
            "simulate_boxes",
            vec!["t_a", "a_lo", "a_hi", "t_b", "b_lo", "b_hi", "count", "intensity", "std_err", "exact"],
        );
        t.comments = comments;
        for (e, x) in est.iter().zip(exact) {
            t.rows.push(vec![
                num(p.time(b.slice_a)),
                num(e.a.lo),
                num(e.a.hi),
                num(p.time(b.slice_b)),
                num(e.b.lo),
                num(e.b.hi),
                e.count.to_string(),
                num(e.intensity),
                num(e.std_err),
                num(x),
            ]);
        }
        out.push(t);
    }
    Ok(out)
}
