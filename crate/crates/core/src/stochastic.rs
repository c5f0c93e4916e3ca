//! Heat-kernel primitives, the Karlin-McGregor determinant, survival
//! probabilities, the transition densities of the non-colliding process and
//! the brute-force (quadrature) definition of its correlation functions.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::skewlin::SkewMatrix;
use crate::special::{erf, ln_gamma, sgn};

/// Values with magnitude below this are flushed to zero and flagged.
pub const UNDERFLOW: f64 = 1e-300;

/// Largest particle number accepted by [`correlation_bruteforce`].
pub const BRUTEFORCE_MAX_PARTICLES: usize = 4;
/// Largest number of integrated coordinates in [`correlation_bruteforce`].
pub const BRUTEFORCE_MAX_DIM: usize = 4;

/// Observation times `0 < t_1 < ... < t_{M+1} = T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionRepr", into = "PartitionRepr")]
pub struct TimePartition {
    horizon: f64,
    times: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    horizon: f64,
    times: Vec<f64>,
}

impl TryFrom<PartitionRepr> for TimePartition {
    type Error = Error;

    fn try_from(r: PartitionRepr) -> Result<Self> {
        TimePartition::new(r.times, r.horizon)
    }
}

impl From<TimePartition> for PartitionRepr {
    fn from(p: TimePartition) -> Self {
        PartitionRepr {
            horizon: p.horizon,
            times: p.times,
        }
    }
}

impl TimePartition {
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Domain(format!("horizon T = {horizon} must be positive")));
        }
        let Some(&last) = times.last() else {
            return Err(Error::InvalidParameter("at least one observation time is required".into()));
        };
        if times[0] <= 0.0 {
            return Err(Error::Domain(format!("first time {} must be positive", times[0])));
        }
        if let Some(i) = times.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NotOrdered { index: i + 1 });
        }
        if last != horizon {
            return Err(Error::InvalidParameter(format!(
                "last observation time {last} must equal the horizon {horizon}"
            )));
        }
        Ok(Self { horizon, times })
    }

    /// The single-time partition `t_1 = T`.
    pub fn single(horizon: f64) -> Result<Self> {
        Self::new(vec![horizon], horizon)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of observation times, `M + 1`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of slice `mu` (0-based).
    pub fn time(&self, mu: usize) -> f64 {
        self.times[mu]
    }

    pub fn first(&self) -> f64 {
        self.times[0]
    }

    pub fn check_slice(&self, mu: usize) -> Result<()> {
        if mu >= self.len() {
            return Err(Error::InvalidParameter(format!(
                "time index {mu} out of range for {} observation times",
                self.len()
            )));
        }
        Ok(())
    }
}

/// A point of the Weyl chamber `x_1 < x_2 < ... < x_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedConfiguration(Vec<f64>);

impl OrderedConfiguration {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if let Some(i) = positions.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::NotOrdered { index: i + 1 });
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite position".into()));
        }
        Ok(Self(positions))
    }

    pub fn positions(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Density value with the underflow flag of the `1e-300` guard.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Density {
    pub value: f64,
    pub underflow: bool,
}

impl Density {
    fn guarded(v: f64) -> Self {
        if v.abs() < UNDERFLOW {
            Self {
                value: 0.0,
                underflow: v != 0.0,
            }
        } else {
            Self {
                value: v,
                underflow: false,
            }
        }
    }
}

/// `p_t(x, y) = exp(-(x-y)^2 / 2t) / sqrt(2 pi t)` without argument checks.
#[inline]
pub fn heat(t: f64, x: f64, y: f64) -> f64 {
    let d = x - y;
    (-d * d / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// Heat kernel; `t = 0` (a delta function) is rejected.
pub fn heat_kernel(t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
    }
    Ok(heat(t, x, y))
}

/// Karlin-McGregor determinant `det[p_t(x_i, y_j)]`.
pub fn km_determinant(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::InvalidParameter("empty configuration".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("Karlin-McGregor determinant needs t > 0, got {t}")));
    }
    Ok(km_unchecked(t, x, y))
}

fn km_unchecked(t: f64, x: &[f64], y: &[f64]) -> f64 {
    match x.len() {
        1 => heat(t, x[0], y[0]),
        2 => heat(t, x[0], y[0]) * heat(t, x[1], y[1]) - heat(t, x[0], y[1]) * heat(t, x[1], y[0]),
        n => DMatrix::from_fn(n, n, |i, j| heat(t, x[i], y[j])).determinant(),
    }
}

/// Entry of the de Bruijn pairwise matrix for `phi_i = p_t(x_i, .)`:
/// `int int sgn(y' - y) p_t(x_i, y) p_t(x_j, y') = erf((x_j - x_i) / (2 sqrt t))`.
pub fn survival_entry(t: f64, xi: f64, xj: f64) -> f64 {
    erf((xj - xi) / (2.0 * t.sqrt()))
}

/// Probability that independent Brownian motions started at `x` keep their
/// order up to time `t`, as the pfaffian of pairwise error functions.
/// `t = 0` gives 1.
pub fn survival_probability(t: f64, x: &OrderedConfiguration) -> Result<f64> {
    survival_raw(t, x.positions())
}

fn survival_raw(t: f64, x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if t < 0.0 || t.is_nan() {
        return Err(Error::Domain(format!("survival probability needs t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok(match n {
        0 => 1.0,
        2 => survival_entry(t, x[0], x[1]),
        _ => SkewMatrix::from_upper(n, |i, j| survival_entry(t, x[i], x[j]))?.pfaffian(),
    })
}

/// `h_N(x) = prod_{i<j} (x_j - x_i)`.
pub fn vandermonde(x: &[f64]) -> f64 {
    let mut h = 1.0;
    for j in 0..x.len() {
        for i in 0..j {
            h *= x[j] - x[i];
        }
    }
    h
}

/// Transition density `g_{N,T}(s, x; t, y)` of the non-colliding process.
pub fn transition_density(
    s: f64,
    x: &OrderedConfiguration,
    t: f64,
    y: &OrderedConfiguration,
    horizon: f64,
) -> Result<Density> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() % 2 == 1 {
        return Err(Error::OddDimension(x.len()));
    }
    if !(s > 0.0 && s < t && t <= horizon) {
        return Err(Error::Domain(format!(
            "transition density needs 0 < s < t <= T, got s={s}, t={t}, T={horizon}"
        )));
    }
    let denom = survival_raw(horizon - s, x.positions())?;
    if denom < UNDERFLOW {
        return Err(Error::IllConditioned(format!(
            "survival probability {denom:e} of the starting point underflows"
        )));
    }
    let num = km_unchecked(t - s, x.positions(), y.positions()) * survival_raw(horizon - t, y.positions())?;
    Ok(Density::guarded(num / denom))
}

/// `ln C(N, T, t)` with
/// `C = pi^{N/2} (prod_{j=1}^N Gamma(j/2))^{-1} T^{N(N-1)/4} t^{-N(N-1)/2}`.
pub fn ln_initial_constant(n: usize, horizon: f64, t: f64) -> f64 {
    let nf = n as f64;
    let ln_gammas: f64 = (1..=n).map(|j| ln_gamma(j as f64 / 2.0)).sum();
    0.5 * nf * PI.ln() - ln_gammas + nf * (nf - 1.0) / 4.0 * horizon.ln() - nf * (nf - 1.0) / 2.0 * t.ln()
}

pub fn initial_constant(n: usize, horizon: f64, t: f64) -> f64 {
    ln_initial_constant(n, horizon, t).exp()
}

/// Density at time `t` of the process started from the origin:
/// `C(N,T,t) h_N(y) prod p_t(0, y_i) N_N(T - t; y)`.
pub fn initial_transition_density(t: f64, y: &OrderedConfiguration, horizon: f64, n: usize) -> Result<Density> {
    if y.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if !(t > 0.0 && t <= horizon) {
        return Err(Error::Domain(format!("initial density needs 0 < t <= T, got t={t}, T={horizon}")));
    }
    Ok(Density::guarded(initial_density_raw(t, y.positions(), horizon)?))
}

fn initial_density_raw(t: f64, y: &[f64], horizon: f64) -> Result<f64> {
    let n = y.len();
    let ln_c = ln_initial_constant(n, horizon, t);
    let ln_p: f64 = y.iter().map(|v| -v * v / (2.0 * t) - 0.5 * (2.0 * PI * t).ln()).sum();
    Ok((ln_c + ln_p).exp() * vandermonde(y) * survival_raw(horizon - t, y)?)
}

/// Multi-time density of the process started at the origin, one
/// configuration of `N` points per observation time.
pub fn multitime_density(partition: &TimePartition, configs: &[OrderedConfiguration]) -> Result<Density> {
    let raw: Vec<&[f64]> = configs.iter().map(|c| c.positions()).collect();
    check_full_configs(partition, &raw)?;
    Ok(Density::guarded(multitime_density_raw(partition, &raw)))
}

fn check_full_configs(partition: &TimePartition, configs: &[&[f64]]) -> Result<()> {
    if configs.len() != partition.len() {
        return Err(Error::SizeMismatch {
            expected: partition.len(),
            found: configs.len(),
        });
    }
    let n = configs[0].len();
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if let Some(c) = configs.iter().find(|c| c.len() != n) {
        return Err(Error::SizeMismatch {
            expected: n,
            found: c.len(),
        });
    }
    Ok(())
}

/// The product formula for the multi-time density evaluated at arbitrary
/// (not necessarily ordered) coordinates. The formula is symmetric within
/// each time slice, so this is the symmetric extension used by
/// [`correlation_bruteforce`].
pub fn multitime_density_raw(partition: &TimePartition, configs: &[&[f64]]) -> f64 {
    let t1 = partition.first();
    let first = configs[0];
    let n = first.len();
    let ln_c = ln_initial_constant(n, partition.horizon(), t1);
    let ln_p: f64 = first.iter().map(|v| -v * v / (2.0 * t1) - 0.5 * (2.0 * PI * t1).ln()).sum();
    let mut value = (ln_c + ln_p).exp() * vandermonde(first) * sgn(vandermonde(configs[configs.len() - 1]));
    for mu in 0..configs.len() - 1 {
        if value == 0.0 {
            break;
        }
        let dt = partition.time(mu + 1) - partition.time(mu);
        value *= km_unchecked(dt, configs[mu], configs[mu + 1]);
    }
    value
}

/// Correlation function by direct integration of the multi-time density:
/// `query[mu]` holds the `N_mu` fixed points of slice `mu` (possibly none);
/// the remaining `N - N_mu` coordinates of each slice are integrated over
/// the real line with weight `1 / (N - N_mu)!`.
pub fn correlation_bruteforce(
    partition: &TimePartition,
    query: &[Vec<f64>],
    n: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if n > BRUTEFORCE_MAX_PARTICLES {
        return Err(Error::DimensionTooLarge {
            dim: n,
            max: BRUTEFORCE_MAX_PARTICLES,
        });
    }
    if query.len() != partition.len() {
        return Err(Error::SizeMismatch {
            expected: partition.len(),
            found: query.len(),
        });
    }
    if let Some(q) = query.iter().find(|q| q.len() > n) {
        return Err(Error::SizeMismatch {
            expected: n,
            found: q.len(),
        });
    }
    let weight: f64 = query
        .iter()
        .map(|q| 1.0 / factorial(n - q.len()))
        .product();
    let breaks = vec![Vec::new(); partition.len()];
    Ok(weight * integrate_weighted(partition, query, n, &|_| 1.0, &breaks, quad)?)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Integral of the symmetric extension of the multi-time density times
/// `weight` over every coordinate not fixed by `query`, with no factorial
/// factors. `breaks[mu]` lists extra breakpoints (kinks of `weight`) for the
/// coordinates of slice `mu`. Same size limits as [`correlation_bruteforce`].
pub fn integrate_weighted(
    partition: &TimePartition,
    query: &[Vec<f64>],
    n: usize,
    weight: &dyn Fn(&[&[f64]]) -> f64,
    breaks: &[Vec<f64>],
    quad: &QuadratureSpec,
) -> Result<f64> {
    if query.len() != partition.len() || breaks.len() != partition.len() {
        return Err(Error::SizeMismatch {
            expected: partition.len(),
            found: query.len().min(breaks.len()),
        });
    }
    let free: Vec<(usize, usize)> = query
        .iter()
        .enumerate()
        .flat_map(|(mu, q)| (q.len()..n).map(move |i| (mu, i)))
        .collect();
    if free.len() > BRUTEFORCE_MAX_DIM {
        return Err(Error::DimensionTooLarge {
            dim: free.len(),
            max: BRUTEFORCE_MAX_DIM,
        });
    }
    let state: Vec<Vec<f64>> = query
        .iter()
        .map(|q| {
            let mut v = q.clone();
            v.resize(n, 0.0);
            v
        })
        .collect();
    integrate_free(partition, &free, state, weight, breaks, quad)
}

fn integrate_free(
    partition: &TimePartition,
    free: &[(usize, usize)],
    state: Vec<Vec<f64>>,
    weight: &dyn Fn(&[&[f64]]) -> f64,
    breaks: &[Vec<f64>],
    quad: &QuadratureSpec,
) -> Result<f64> {
    let Some((&(mu, i), rest)) = free.split_first() else {
        let raw: Vec<&[f64]> = state.iter().map(|v| v.as_slice()).collect();
        let w = weight(&raw);
        return Ok(if w == 0.0 { 0.0 } else { w * multitime_density_raw(partition, &raw) });
    };
    // kinks of |h_N| and sgn(h_N) sit where two coordinates of one slice meet
    let mut points: Vec<f64> = state[mu]
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i && !rest.contains(&(mu, *j)))
        .map(|(_, &v)| v)
        .collect();
    points.extend_from_slice(&breaks[mu]);
    let inner = QuadratureSpec {
        abs_tol: quad.abs_tol * 0.1,
        ..*quad
    };
    quad.try_integrate_line(
        |x| {
            let mut s = state.clone();
            s[mu][i] = x;
            integrate_free(partition, rest, s, weight, breaks, &inner)
        },
        &points,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn conf(v: &[f64]) -> OrderedConfiguration {
        OrderedConfiguration::new(v.to_vec()).unwrap()
    }

    #[test]
    fn heat_kernel_values() {
        assert_abs_diff_eq!(heat_kernel(1.0, 0.0, 0.0).unwrap(), 0.3989422804, epsilon = 1e-10);
        assert_abs_diff_eq!(heat_kernel(2.0, 1.0, 1.0).unwrap(), 0.2820947918, epsilon = 1e-10);
        assert_eq!(heat_kernel(0.5, 0.0, 1.0).unwrap(), heat_kernel(0.5, 1.0, 0.0).unwrap());
        assert!(heat_kernel(0.0, 0.0, 0.0).is_err());
        assert!(heat_kernel(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn heat_kernel_mass_and_chapman_kolmogorov() {
        let q = QuadratureSpec::adaptive(1e-12);
        for t in [0.05, 1.0, 3.0] {
            let m = q.integrate_line(|y| heat(t, 0.4, y), &[0.4]).unwrap();
            assert!((m - 1.0).abs() < 1e-10);
        }
        for (s, t, u, x, z) in [(0.0, 0.3, 1.0, 0.2, -0.5), (0.1, 0.5, 0.6, 1.0, 1.3), (0.2, 1.7, 2.0, -1.0, 0.0)] {
            let lhs = q.integrate_line(|y| heat(t - s, x, y) * heat(u - t, y, z), &[x, z]).unwrap();
            assert!((lhs - heat(u - s, x, z)).abs() < 1e-10);
        }
    }

    #[test]
    fn km_determinant_small_cases() {
        assert_eq!(km_determinant(0.7, &[0.1], &[0.5]).unwrap(), heat(0.7, 0.1, 0.5));
        let (t, d) = (0.8f64, 0.6f64);
        let expected = (1.0 - (-d * d / t).exp()) / (2.0 * PI * t);
        assert_abs_diff_eq!(km_determinant(t, &[0.0, d], &[0.0, d]).unwrap(), expected, epsilon = 1e-15);
        let a = km_determinant(t, &[0.0, 0.4], &[-0.2, 0.9]).unwrap();
        let b = km_determinant(t, &[0.0, 0.4], &[0.9, -0.2]).unwrap();
        assert_abs_diff_eq!(a, -b, epsilon = 1e-16);
        assert!(km_determinant(t, &[0.0], &[0.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn km_antisymmetric_under_swaps(
            x in proptest::collection::vec(-2.0f64..2.0, 4),
            y in proptest::collection::vec(-2.0f64..2.0, 4),
            i in 0usize..4, j in 0usize..4, t in 0.1f64..2.0,
        ) {
            prop_assume!(i != j);
            let base = km_determinant(t, &x, &y).unwrap();
            let mut xs = x.clone();
            xs.swap(i, j);
            let mut ys = y.clone();
            ys.swap(i, j);
            // cancellation is relative to the size of the entries, not of the determinant
            let scale = heat(t, 0.0, 0.0).powi(4);
            prop_assert!((km_determinant(t, &xs, &y).unwrap() + base).abs() <= 1e-12 * scale);
            prop_assert!((km_determinant(t, &x, &ys).unwrap() + base).abs() <= 1e-12 * scale);
        }

        #[test]
        fn survival_monotone(gap in 0.05f64..2.0, t in 0.05f64..2.0, dt in 0.01f64..1.0, dg in 0.01f64..1.0) {
            let base = survival_probability(t, &conf(&[0.0, gap, gap + 0.7, gap + 1.1])).unwrap();
            let later = survival_probability(t + dt, &conf(&[0.0, gap, gap + 0.7, gap + 1.1])).unwrap();
            let wider = survival_probability(t, &conf(&[0.0, gap + dg, gap + dg + 0.7, gap + dg + 1.1])).unwrap();
            prop_assert!(later <= base + 1e-14);
            prop_assert!(wider >= base - 1e-14);
            prop_assert!(base > 0.0 && base <= 1.0);
        }
    }

    #[test]
    fn survival_pair_matches_ordered_region_integral() {
        // adaptive 2D quadrature of int_{y1<y2} f_2(t; x, y) dy
        let q = QuadratureSpec::adaptive(1e-12);
        for (t, x1, x2) in [(1.0, 0.0, 1.0), (0.3, -0.5, 0.2), (2.0, 0.0, 0.1)] {
            let v = q
                .try_integrate_line(
                    |y2| q.integrate_lower(|y1| km_unchecked(t, &[x1, x2], &[y1, y2]), y2),
                    &[],
                )
                .unwrap();
            let pf = survival_probability(t, &conf(&[x1, x2])).unwrap();
            assert!((v - pf).abs() < 1e-9, "t={t}: {v} vs {pf}");
        }
        assert_abs_diff_eq!(
            survival_probability(1.0, &conf(&[0.0, 1.0])).unwrap(),
            0.5204998778,
            epsilon = 1e-10
        );
    }

    #[test]
    fn survival_limits() {
        let x = conf(&[-1.0, 0.0, 0.5, 2.0]);
        assert!((survival_probability(1e-6, &x).unwrap() - 1.0).abs() < 1e-12);
        let close = conf(&[0.0, 1e-9]);
        assert!(survival_probability(1.0, &close).unwrap() < 1e-9);
        assert!(matches!(
            survival_probability(1.0, &conf(&[0.0, 1.0, 2.0])),
            Err(Error::OddDimension(3))
        ));
        assert!(OrderedConfiguration::new(vec![0.0, 0.0]).is_err());
        assert!(OrderedConfiguration::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn vandermonde_values() {
        assert_eq!(vandermonde(&[0.0, 1.0]), 1.0);
        assert_eq!(vandermonde(&[0.0, 1.0, 2.0]), 2.0);
        assert_eq!(vandermonde(&[0.3, 1.0, 0.3]), 0.0);
    }

    #[test]
    fn initial_constant_value() {
        assert_abs_diff_eq!(initial_constant(2, 1.0, 1.0), PI.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(
            initial_constant(2, 1.0, 1.0),
            PI / gamma(0.5) / gamma(1.0),
            epsilon = 1e-13
        );
    }

    #[test]
    fn initial_density_normalized() {
        let q = QuadratureSpec::adaptive(1e-11);
        for (t, horizon) in [(1.0, 1.0), (0.4, 1.0)] {
            let mass = q
                .try_integrate_line(
                    |y2| {
                        q.try_integrate_lower(
                            |y1| Ok(initial_density_raw(t, &[y1, y2], horizon)?),
                            y2,
                        )
                    },
                    &[],
                )
                .unwrap();
            assert!((mass - 1.0).abs() < 1e-6, "t={t}: mass {mass}");
        }
        assert_eq!(initial_density_raw(0.5, &[0.2, 0.2], 1.0).unwrap(), 0.0);
        assert!(initial_transition_density(0.0, &conf(&[0.0, 1.0]), 1.0, 2).is_err());
    }

    #[test]
    fn transition_density_composition_and_mass() {
        let (s, t, horizon) = (0.5, 1.0, 1.0);
        let x = conf(&[-1.0, 1.0]);
        let y = conf(&[-1.0, 1.0]);
        let g = transition_density(s, &x, t, &y, horizon).unwrap().value;
        let direct = km_determinant(t - s, x.positions(), y.positions()).unwrap() * 1.0
            / survival_probability(horizon - s, &x).unwrap();
        assert!((g - direct).abs() < 1e-12);
        assert!(transition_density(0.5, &x, 0.5, &y, 1.0).is_err());

        let q = QuadratureSpec::adaptive(1e-11);
        let x = conf(&[-0.3, 0.4]);
        for (s, t) in [(0.2, 0.7), (0.5, 1.0)] {
            let mass = q
                .try_integrate_line(
                    |y2| {
                        q.try_integrate_lower(
                            |y1| {
                                if y1 >= y2 {
                                    return Ok(0.0);
                                }
                                Ok(transition_density(s, &x, t, &conf(&[y1, y2]), 1.0)?.value)
                            },
                            y2,
                        )
                    },
                    &[],
                )
                .unwrap();
            assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
        }
    }

    #[test]
    fn transition_density_semigroup() {
        let q = QuadratureSpec::adaptive(1e-10);
        let horizon = 1.0;
        let (s, t, u) = (0.2, 0.5, 0.9);
        let x = conf(&[-0.4, 0.3]);
        let z = conf(&[-0.6, 0.5]);
        let lhs = q
            .try_integrate_line(
                |y2| {
                    q.try_integrate_lower(
                        |y1| {
                            if y1 >= y2 {
                                return Ok(0.0);
                            }
                            let y = conf(&[y1, y2]);
                            Ok(transition_density(s, &x, t, &y, horizon)?.value
                                * transition_density(t, &y, u, &z, horizon)?.value)
                        },
                        y2,
                    )
                },
                &[],
            )
            .unwrap();
        let rhs = transition_density(s, &x, u, &z, horizon).unwrap().value;
        assert!((lhs - rhs).abs() < 1e-5, "{lhs} vs {rhs}");
    }

    #[test]
    fn ill_conditioned_start_is_reported() {
        let x = conf(&[0.0, 1e-310]);
        let y = conf(&[0.0, 1.0]);
        assert!(matches!(
            transition_density(0.1, &x, 0.5, &y, 1.0),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn multitime_reductions() {
        let single = TimePartition::single(1.0).unwrap();
        let y = conf(&[-0.3, 0.8]);
        let a = multitime_density(&single, &[y.clone()]).unwrap().value;
        let b = initial_transition_density(1.0, &y, 1.0, 2).unwrap().value;
        assert!((a - b).abs() < 1e-15);

        let part = TimePartition::new(vec![0.4, 1.0], 1.0).unwrap();
        let x1 = conf(&[-0.5, 0.2]);
        let x2 = conf(&[-0.1, 0.9]);
        let m = multitime_density(&part, &[x1.clone(), x2.clone()]).unwrap().value;
        let chain = initial_transition_density(0.4, &x1, 1.0, 2).unwrap().value
            * transition_density(0.4, &x1, 1.0, &x2, 1.0).unwrap().value;
        assert!((m - chain).abs() < 1e-12 * chain.abs());
        assert!(m >= 0.0);
        assert!(multitime_density(&part, &[x1]).is_err());
    }

    #[test]
    fn bruteforce_guards_and_trivial_case() {
        let part = TimePartition::single(1.0).unwrap();
        let q = QuadratureSpec::default();
        let full = correlation_bruteforce(&part, &[vec![-0.2, 0.7]], 2, &q).unwrap();
        let direct = multitime_density(&part, &[conf(&[-0.2, 0.7])]).unwrap().value;
        assert_eq!(full, direct);
        let swapped = correlation_bruteforce(&part, &[vec![0.7, -0.2]], 2, &q).unwrap();
        assert!((swapped - full).abs() < 1e-15);
        let part3 = TimePartition::new(vec![0.3, 0.6, 1.0], 1.0).unwrap();
        assert!(matches!(
            correlation_bruteforce(&part3, &[vec![], vec![], vec![0.0]], 2, &q),
            Err(Error::DimensionTooLarge { .. })
        ));
        assert!(correlation_bruteforce(&part, &[vec![0.0]], 6, &q).is_err());
    }

    #[test]
    fn bruteforce_one_point_integrates_to_n() {
        let part = TimePartition::single(1.0).unwrap();
        let q = QuadratureSpec::adaptive(1e-9);
        let mass = q
            .try_integrate_line(|x| correlation_bruteforce(&part, &[vec![x]], 2, &q), &[])
            .unwrap();
        assert!((mass - 2.0).abs() < 1e-4, "mass {mass}");
        // golden value at x = 0: sqrt(pi) E|Y| p_1(0,0) with Y ~ N(0,1)
        let rho0 = correlation_bruteforce(&part, &[vec![0.0]], 2, &q).unwrap();
        let golden = PI.sqrt() * (2.0 / PI).sqrt() / (2.0 * PI).sqrt();
        assert!((rho0 - golden).abs() < 1e-9, "{rho0} vs {golden}");
    }
}
