//! Rejection sampler for `N` Brownian motions from the origin conditioned
//! not to collide on `(0, T]`.
//!
//! The configuration at a small warm-up time `delta` is drawn from its exact
//! density by random-walk Metropolis on the Weyl chamber. Free Euler steps
//! then run to `T`; a path is rejected as soon as two particles swap or a
//! Brownian-bridge crossing between grid points is drawn, and is redrawn
//! from the same start. Path `i` uses its own ChaCha8 stream `(seed, i)`, so
//! results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastic::{initial_transition_density, OrderedConfiguration};

/// Rejections of a single start after which sampling gives up.
pub const MAX_REJECTIONS: u64 = 1_000_000;
/// Smallest Metropolis burn-in.
pub const MIN_METROPOLIS_STEPS: usize = 1000;
/// Metropolis acceptance rates outside this range are reported.
pub const ACCEPTANCE_RANGE: (f64, f64) = (0.1, 0.7);

fn default_metropolis_steps() -> usize {
    MIN_METROPOLIS_STEPS
}

fn default_proposal_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: usize,
    pub horizon: f64,
    /// Warm-up time `delta`.
    pub delta: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    #[serde(default = "default_metropolis_steps")]
    pub metropolis_steps: usize,
    /// Metropolis step size in units of `sqrt(delta)`.
    #[serde(default = "default_proposal_scale")]
    pub proposal_scale: f64,
}

impl SimulationConfig {
    pub fn new(n: usize, horizon: f64, delta: f64, dt: f64, paths: usize, seed: u64) -> Result<Self> {
        let c = Self {
            n,
            horizon,
            delta,
            dt,
            paths,
            seed,
            metropolis_steps: MIN_METROPOLIS_STEPS,
            proposal_scale: 1.0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n % 2 == 1 {
            return Err(Error::OddDimension(self.n));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon {} must be positive", self.horizon)));
        }
        if !(self.delta > 0.0 && self.delta < self.horizon) {
            return Err(Error::Domain(format!("warm-up time {} must lie in (0, T)", self.delta)));
        }
        if !(self.dt > 0.0 && self.dt <= self.delta / 10.0) {
            return Err(Error::InvalidParameter(format!(
                "step {} must be positive and at most delta / 10",
                self.dt
            )));
        }
        if self.paths == 0 {
            return Err(Error::InvalidParameter("path count must be at least 1".into()));
        }
        if self.metropolis_steps < MIN_METROPOLIS_STEPS {
            return Err(Error::InvalidParameter(format!(
                "Metropolis burn-in must be at least {MIN_METROPOLIS_STEPS} steps"
            )));
        }
        if !(self.proposal_scale > 0.0) {
            return Err(Error::InvalidParameter("proposal scale must be positive".into()));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (((self.horizon - self.delta) / self.dt).round() as usize).max(1)
    }

    fn step(&self) -> f64 {
        (self.horizon - self.delta) / self.steps() as f64
    }

    /// Grid index of time `t`, snapped to the nearest step.
    pub fn step_index(&self, t: f64) -> Result<usize> {
        if !(t >= self.delta && t <= self.horizon) {
            return Err(Error::Domain(format!(
                "time {t} outside the simulated window [{}, {}]",
                self.delta, self.horizon
            )));
        }
        Ok(((t - self.delta) / self.step()).round() as usize)
    }

    /// The RNG of path `index`.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// A draw from the warm-up density and the Metropolis acceptance count.
#[derive(Clone, Debug)]
pub struct InitialDraw {
    pub config: OrderedConfiguration,
    pub accepted: usize,
    pub steps: usize,
}

fn sorted_proposal(x: &[f64], scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut y: Vec<f64> = x
        .iter()
        .map(|v| v + scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    y.sort_by(f64::total_cmp);
    y
}

fn warmup_density(y: &[f64], config: &SimulationConfig) -> f64 {
    match OrderedConfiguration::new(y.to_vec()) {
        Ok(c) => initial_transition_density(config.delta, &c, config.horizon, config.n)
            .map(|d| d.value)
            .unwrap_or(0.0),
        Err(_) => 0.0,
    }
}

/// Random-walk Metropolis draw from the density at time `delta`; proposals
/// are sorted back into the chamber, which keeps them symmetric.
pub fn sample_initial(config: &SimulationConfig, rng: &mut ChaCha8Rng) -> Result<InitialDraw> {
    config.validate()?;
    let sd = config.delta.sqrt();
    let n = config.n;
    let mut x: Vec<f64> = (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * sd).collect();
    let mut px = warmup_density(&x, config);
    let scale = config.proposal_scale * sd;
    let mut accepted = 0;
    for _ in 0..config.metropolis_steps {
        let y = sorted_proposal(&x, scale, rng);
        let py = warmup_density(&y, config);
        let u: f64 = rng.random();
        if py > 0.0 && u * px < py {
            x = y;
            px = py;
            accepted += 1;
        }
    }
    Ok(InitialDraw {
        config: OrderedConfiguration::new(x)?,
        accepted,
        steps: config.metropolis_steps,
    })
}

/// One free path from `start` at time `delta`; `None` if the particles
/// collide (on the grid or, by the Brownian-bridge test, between grid
/// points). Positions are returned at the grid indices in `record`.
pub fn attempt_path(
    start: &OrderedConfiguration,
    config: &SimulationConfig,
    record: &[usize],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Vec<f64>>> {
    let dt = config.step();
    let sd = dt.sqrt();
    let mut x = start.positions().to_vec();
    let mut out = vec![Vec::new(); record.len()];
    let store = |k: usize, x: &[f64], out: &mut Vec<Vec<f64>>| {
        for (slot, &r) in out.iter_mut().zip(record) {
            if r == k {
                *slot = x.to_vec();
            }
        }
    };
    store(0, &x, &mut out);
    let mut gaps: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    for k in 1..=config.steps() {
        for v in x.iter_mut() {
            *v += sd * rng.sample::<f64, _>(StandardNormal);
        }
        for (i, g) in gaps.iter_mut().enumerate() {
            let next = x[i + 1] - x[i];
            if next <= 0.0 {
                return None;
            }
            // the gap diffuses with variance 2 dt per step
            let cross = (-*g * next / dt).exp();
            if rng.random::<f64>() < cross {
                return None;
            }
            *g = next;
        }
        store(k, &x, &mut out);
    }
    Some(out)
}

/// Redraws free paths from `start` until one survives. Returns the recorded
/// positions and the number of rejections.
pub fn propagate_conditioned(
    start: &OrderedConfiguration,
    config: &SimulationConfig,
    record: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Vec<f64>>, u64)> {
    let mut rejections = 0;
    loop {
        if let Some(p) = attempt_path(start, config, record, rng) {
            return Ok((p, rejections));
        }
        rejections += 1;
        if rejections > MAX_REJECTIONS {
            return Err(Error::Simulation(format!(
                "more than {MAX_REJECTIONS} rejections from {:?}; increase the warm-up time",
                start.positions()
            )));
        }
    }
}

/// Recorded positions of one conditioned path.
#[derive(Clone, Debug)]
pub struct PathRecord {
    pub positions: Vec<Vec<f64>>,
    pub rejections: u64,
    pub metropolis_accepted: usize,
}

/// Sampler statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub paths: usize,
    pub rejections: u64,
    pub metropolis_acceptance: f64,
    pub warnings: Vec<String>,
}

/// Independent conditioned paths recorded at `times`, in path order.
pub fn run_paths(config: &SimulationConfig, times: &[f64]) -> Result<(Vec<PathRecord>, Diagnostics)> {
    config.validate()?;
    let record = times
        .iter()
        .map(|&t| config.step_index(t))
        .collect::<Result<Vec<_>>>()?;
    let paths = (0..config.paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = config.rng(i);
            let init = sample_initial(config, &mut rng)?;
            let (positions, rejections) = propagate_conditioned(&init.config, config, &record, &mut rng)?;
            Ok(PathRecord {
                positions,
                rejections,
                metropolis_accepted: init.accepted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let accepted: u64 = paths.iter().map(|p| p.metropolis_accepted as u64).sum();
    let rate = accepted as f64 / (config.paths * config.metropolis_steps) as f64;
    let mut warnings = Vec::new();
    if rate < ACCEPTANCE_RANGE.0 || rate > ACCEPTANCE_RANGE.1 {
        warnings.push(format!(
            "Metropolis acceptance rate {rate:.3} outside [{}, {}]",
            ACCEPTANCE_RANGE.0, ACCEPTANCE_RANGE.1
        ));
    }
    let diagnostics = Diagnostics {
        paths: config.paths,
        rejections: paths.iter().map(|p| p.rejections).sum(),
        metropolis_acceptance: rate,
        warnings,
    };
    Ok((paths, diagnostics))
}

/// Equal-width histogram bins on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Bins {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo < hi) || count == 0 {
            return Err(Error::InvalidParameter(format!("bad bins [{lo}, {hi}] x {count}")));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.count as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.count).map(|i| self.lo + i as f64 * self.width()).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.lo + (i as f64 + 0.5) * self.width()).collect()
    }

    fn index(&self, x: f64) -> Option<usize> {
        if x < self.lo || x >= self.hi {
            return None;
        }
        Some((((x - self.lo) / self.width()) as usize).min(self.count - 1))
    }
}

/// Histogram of particle positions with per-bin standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleEstimate {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub std_err: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Histogram of all positions at record slot `slot`: counts per path and
/// unit length, so the density integrates to `N` once the bins cover the
/// particles.
pub fn onepoint_from(paths: &[PathRecord], slot: usize, bins: &Bins, diagnostics: Diagnostics) -> EnsembleEstimate {
    let mut counts = vec![0u64; bins.count];
    let mut squares = vec![0u64; bins.count];
    let mut per_path = vec![0u64; bins.count];
    for p in paths {
        per_path.iter_mut().for_each(|c| *c = 0);
        for &x in &p.positions[slot] {
            if let Some(b) = bins.index(x) {
                per_path[b] += 1;
            }
        }
        for b in 0..bins.count {
            counts[b] += per_path[b];
            squares[b] += per_path[b] * per_path[b];
        }
    }
    let m = paths.len() as f64;
    let norm = 1.0 / (m * bins.width());
    let density = counts.iter().map(|&c| c as f64 * norm).collect();
    let std_err = counts
        .iter()
        .zip(&squares)
        .map(|(&c, &s)| {
            let mean = c as f64 / m;
            let var = (s as f64 / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
            (var / m).sqrt() * norm * m
        })
        .collect();
    EnsembleEstimate {
        edges: bins.edges(),
        counts,
        density,
        std_err,
        diagnostics,
    }
}

/// One-point density estimate at time `t`.
pub fn estimate_onepoint(config: &SimulationConfig, t: f64, bins: &Bins) -> Result<EnsembleEstimate> {
    let (paths, diag) = run_paths(config, &[t])?;
    Ok(onepoint_from(&paths, 0, bins, diag))
}

/// Interval `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }
}

/// Expected number of pairs with one particle in `a` at `t_a` and one in
/// `b` at `t_b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxEstimate {
    pub a: Interval,
    pub b: Interval,
    pub count: u64,
    pub intensity: f64,
    pub std_err: f64,
}

pub fn twotime_from(paths: &[PathRecord], slot_a: usize, slot_b: usize, boxes: &[(Interval, Interval)]) -> Vec<BoxEstimate> {
    let m = paths.len() as f64;
    boxes
        .iter()
        .map(|&(a, b)| {
            let (mut sum, mut sq) = (0u64, 0u64);
            for p in paths {
                let na = p.positions[slot_a].iter().filter(|&&x| a.contains(x)).count() as u64;
                let nb = p.positions[slot_b].iter().filter(|&&x| b.contains(x)).count() as u64;
                sum += na * nb;
                sq += (na * nb) * (na * nb);
            }
            let mean = sum as f64 / m;
            let var = (sq as f64 / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
            BoxEstimate {
                a,
                b,
                count: sum,
                intensity: mean,
                std_err: (var / m).sqrt(),
            }
        })
        .collect()
}

/// Two-time box intensities for `t_a < t_b`.
pub fn estimate_twotime(
    config: &SimulationConfig,
    t_a: f64,
    t_b: f64,
    boxes: &[(Interval, Interval)],
) -> Result<(Vec<BoxEstimate>, Diagnostics)> {
    if !(t_a < t_b) {
        return Err(Error::Domain(format!("need t_a < t_b, got {t_a} and {t_b}")));
    }
    let (paths, diag) = run_paths(config, &[t_a, t_b])?;
    Ok((twotime_from(&paths, 0, 1, boxes), diag))
}
