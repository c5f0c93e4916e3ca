//! Quadrature-discretized Fredholm determinants and pfaffians, and the
//! multi-time characteristic function
//! `Psi(f; theta) = E exp(i sum_mu theta_mu sum_j f_mu(X_j(t_mu)))`
//! computed both by direct integration and as `Pf(J + K chi)`.
//!
//! Weights are folded symmetrically: a kernel `K` sampled at nodes with
//! weights `w` and factors `chi` becomes `D K D` with `D = sqrt(w chi)` per
//! node. `D` commutes with the symplectic unit, so `Pf(J + D K D)` and
//! `det(I + J^{-1} D K D)` are the discretizations of `PF(J + K chi)` and
//! `Det(I + J^{-1} K chi)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::CorrelationKernel;
use crate::quadrature::{gauss_legendre_on, QuadratureSpec};
use crate::skewlin::{SkewMatrix, SKEW_TOLERANCE};
use crate::stochastic::{integrate_weighted, TimePartition};

/// Quadrature node of one time slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub slice: usize,
    pub x: f64,
    pub weight: f64,
}

/// Kernel sampled on quadrature nodes, `block` components per node.
#[derive(Clone, Debug)]
pub struct DiscretizedKernel {
    nodes: Vec<Node>,
    block: usize,
    values: DMatrix<Complex64>,
    factors: Vec<Complex64>,
}

impl DiscretizedKernel {
    /// `values` holds the unweighted kernel at node pairs, ordered
    /// (node, component); `factors` multiplies each node (all ones if `None`).
    pub fn new(
        nodes: Vec<Node>,
        block: usize,
        values: DMatrix<Complex64>,
        factors: Option<Vec<Complex64>>,
    ) -> Result<Self> {
        let dim = nodes.len() * block;
        if block == 0 || values.nrows() != dim || values.ncols() != dim {
            return Err(Error::SizeMismatch {
                expected: dim,
                found: values.nrows(),
            });
        }
        if let Some(n) = nodes.iter().find(|n| !(n.weight > 0.0)) {
            return Err(Error::Domain(format!("quadrature weight {} must be positive", n.weight)));
        }
        let factors = factors.unwrap_or_else(|| vec![Complex64::new(1.0, 0.0); nodes.len()]);
        if factors.len() != nodes.len() {
            return Err(Error::SizeMismatch {
                expected: nodes.len(),
                found: factors.len(),
            });
        }
        Ok(Self {
            nodes,
            block,
            values,
            factors,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// `D K D` with `D = sqrt(w chi)` per node.
    pub fn weighted(&self) -> DMatrix<Complex64> {
        let d: Vec<Complex64> = self
            .nodes
            .iter()
            .zip(&self.factors)
            .flat_map(|(n, f)| std::iter::repeat_n((f * n.weight).sqrt(), self.block))
            .collect();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| d[i] * self.values[(i, j)] * d[j])
    }

    /// The kernel `J^{-1} K = -J K` with `J` acting on the 2-component blocks.
    pub fn symplectic_companion(&self) -> Result<Self> {
        if self.block != 2 {
            return Err(Error::InvalidParameter("symplectic companion needs 2x2 blocks".into()));
        }
        let v = &self.values;
        let values = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if i % 2 == 0 {
                -v[(i + 1, j)]
            } else {
                v[(i - 1, j)]
            }
        });
        Self::new(self.nodes.clone(), 2, values, Some(self.factors.clone()))
    }
}

fn det_identity_plus(k: DMatrix<Complex64>) -> Complex64 {
    let n = k.nrows();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    (DMatrix::identity(n, n) + k).lu().determinant()
}

fn j_plus(k: &DMatrix<Complex64>, s: f64) -> DMatrix<Complex64> {
    let n = k.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let unit = if i % 2 == 0 && j == i + 1 {
            1.0
        } else if i % 2 == 1 && j + 1 == i {
            -1.0
        } else {
            0.0
        };
        k[(i, j)] * s + unit
    })
}

/// `det(I + D K D)`.
pub fn fredholm_det(disc: &DiscretizedKernel) -> Complex64 {
    det_identity_plus(disc.weighted())
}

/// `Pf(J + D K D)` for a skew kernel with 2x2 blocks.
pub fn fredholm_pf(disc: &DiscretizedKernel) -> Result<Complex64> {
    if disc.block != 2 {
        return Err(Error::InvalidParameter("fredholm pfaffian needs 2x2 blocks".into()));
    }
    if disc.dim() == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let k = disc.weighted();
    let scale = k.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let dev = (&k + k.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > SKEW_TOLERANCE * scale * 1e3 {
        return Err(Error::NotSkew { deviation: dev });
    }
    Ok(SkewMatrix::with_tolerance(j_plus(&k, 1.0), 1e-9)?.pfaffian())
}

/// `Pf(J + D K D)` as the branch of `sqrt(det(J + s D K D))` continued from
/// `1` at `s = 0`. The step count doubles while consecutive values are not
/// clearly closer to one root than the other.
pub fn fredholm_pf_homotopy(disc: &DiscretizedKernel, steps: usize) -> Result<Complex64> {
    if disc.block != 2 {
        return Err(Error::InvalidParameter("fredholm pfaffian needs 2x2 blocks".into()));
    }
    if disc.dim() == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let k = disc.weighted();
    let mut steps = steps.max(1);
    'refine: for _ in 0..12 {
        let mut prev = Complex64::new(1.0, 0.0);
        for i in 1..=steps {
            let s = i as f64 / steps as f64;
            let root = j_plus(&k, s).lu().determinant().sqrt();
            let (near, far) = if (root - prev).norm() <= (root + prev).norm() {
                (root, -root)
            } else {
                (-root, root)
            };
            if (near - prev).norm() > 0.25 * (far - prev).norm() {
                steps *= 2;
                continue 'refine;
            }
            prev = near;
        }
        return Ok(prev);
    }
    Err(Error::IllConditioned("pfaffian homotopy does not resolve the branch".into()))
}

/// Bounded test function with compact support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `height` on `[lo, hi]`, zero elsewhere.
    Indicator { lo: f64, hi: f64, height: f64 },
    /// `height (1 - ((x - center) / half_width)^2)^4` on its support.
    Bump { center: f64, half_width: f64, height: f64 },
}

impl TestFunction {
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Indicator { lo, hi, .. } => (lo, hi),
            Self::Bump { center, half_width, .. } => (center - half_width, center + half_width),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        match *self {
            Self::Indicator { height, .. } => height,
            Self::Bump { center, half_width, height } => {
                let u = (x - center) / half_width;
                height * (1.0 - u * u).powi(4)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.support();
        let h = match *self {
            Self::Indicator { height, .. } | Self::Bump { height, .. } => height,
        };
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("bad test function {self:?}")));
        }
        Ok(())
    }
}

/// Test function and angle for one time slice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceTest {
    pub function: Option<TestFunction>,
    #[serde(default)]
    pub theta: f64,
}

/// `chi_mu(x) = exp(i theta_mu f_mu(x)) - 1` for every time slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub slices: Vec<SliceTest>,
}

impl TestFunctionSpec {
    pub fn new(slices: Vec<SliceTest>) -> Result<Self> {
        for s in &slices {
            if let Some(f) = &s.function {
                f.validate()?;
            }
            if !s.theta.is_finite() {
                return Err(Error::InvalidParameter("non-finite angle".into()));
            }
        }
        Ok(Self { slices })
    }

    /// Same functions with the angles scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            slices: self
                .slices
                .iter()
                .map(|s| SliceTest {
                    function: s.function,
                    theta: s.theta * factor,
                })
                .collect(),
        }
    }

    pub fn chi(&self, mu: usize, x: f64) -> Complex64 {
        let s = &self.slices[mu];
        match &s.function {
            Some(f) => (Complex64::i() * s.theta * f.eval(x)).exp() - 1.0,
            None => Complex64::new(0.0, 0.0),
        }
    }

    fn active(&self, mu: usize) -> Option<(f64, f64)> {
        let s = &self.slices[mu];
        s.function.filter(|_| s.theta != 0.0).map(|f| f.support())
    }

    fn check(&self, partition: &TimePartition) -> Result<()> {
        if self.slices.len() != partition.len() {
            return Err(Error::SizeMismatch {
                expected: partition.len(),
                found: self.slices.len(),
            });
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes on the support of every active slice.
pub fn discretize(spec: &TestFunctionSpec, nodes_per_slice: usize) -> Vec<Node> {
    (0..spec.slices.len())
        .filter_map(|mu| spec.active(mu).map(|s| (mu, s)))
        .flat_map(|(mu, (lo, hi))| {
            let (x, w) = gauss_legendre_on(nodes_per_slice, lo, hi);
            x.into_iter()
                .zip(w)
                .map(move |(x, weight)| Node { slice: mu, x, weight })
        })
        .collect()
}

/// `S` with `sum_j S_ij g(x_j) = int_{-1}^{1} sgn(y - x_i) g(y) dy` for
/// every polynomial `g` of degree below `n`, on the `n` Gauss-Legendre nodes.
/// `diag(w) S` is skew.
pub fn sign_integration_matrix(n: usize) -> DMatrix<f64> {
    let (x, w) = crate::quadrature::gauss_legendre(n);
    let lambda: Vec<f64> = (0..n)
        .map(|j| 1.0 / (0..n).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
        .collect();
    let lagrange = |y: f64| -> Vec<f64> {
        if let Some(k) = x.iter().position(|&v| v == y) {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            return e;
        }
        let t: Vec<f64> = (0..n).map(|j| lambda[j] / (y - x[j])).collect();
        let sum: f64 = t.iter().sum();
        t.into_iter().map(|v| v / sum).collect()
    };
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        // Q_ij = int_{-1}^{x_i} l_j
        let (y, v) = gauss_legendre_on(n, -1.0, x[i]);
        let mut q = vec![0.0; n];
        for (yk, vk) in y.iter().zip(&v) {
            for (qj, lj) in q.iter_mut().zip(lagrange(*yk)) {
                *qj += vk * lj;
            }
        }
        for j in 0..n {
            s[(i, j)] = w[j] - 2.0 * q[j];
        }
    }
    s
}

/// The block kernel `[[D, S~^T], [-S~, -I~]]` times `chi` on
/// `nodes_per_slice` Gauss-Legendre nodes over each active support.
///
/// Where both points sit at the final time `I~` jumps across the diagonal;
/// there its `sgn(y - x)` part is replaced by [`sign_integration_matrix`] so
/// that the discretization stays spectrally accurate.
pub fn discretize_kernel(
    spec: &TestFunctionSpec,
    kernel: &CorrelationKernel,
    nodes_per_slice: usize,
) -> Result<DiscretizedKernel> {
    let nodes = discretize(spec, nodes_per_slice);
    let tables = nodes
        .par_iter()
        .map(|n| kernel.table(n.slice, n.x))
        .collect::<Result<Vec<_>>>()?;
    let mut a = kernel.assemble_from(&tables)?.into_matrix();
    let partition = kernel.ctx().partition();
    let last = partition.len() - 1;
    if partition.time(last) == kernel.ctx().horizon() {
        let idx: Vec<usize> = (0..nodes.len()).filter(|&p| nodes[p].slice == last).collect();
        if !idx.is_empty() {
            // S_ij / w_j does not depend on the interval
            let sm = sign_integration_matrix(idx.len());
            let (_, wref) = crate::quadrature::gauss_legendre(idx.len());
            for (i, &p) in idx.iter().enumerate() {
                for (j, &q) in idx.iter().enumerate() {
                    let jump = crate::special::sgn(nodes[q].x - nodes[p].x);
                    a[(2 * p + 1, 2 * q + 1)] += jump - sm[(i, j)] / wref[j];
                }
            }
        }
    }
    let factors = nodes.iter().map(|n| spec.chi(n.slice, n.x)).collect();
    DiscretizedKernel::new(nodes, 2, a.map(|v| Complex64::new(v, 0.0)), Some(factors))
}

/// `Psi` as the Fredholm pfaffian, with `quad.nodes` Gauss-Legendre nodes
/// per active slice.
pub fn characteristic_pf(spec: &TestFunctionSpec, kernel: &CorrelationKernel, quad: &QuadratureSpec) -> Result<Complex64> {
    spec.check(kernel.ctx().partition())?;
    quad.validate()?;
    let disc = discretize_kernel(spec, kernel, quad.nodes)?;
    fredholm_pf(&disc)
}

/// `Psi` as `Z[chi] / Z[0]` by adaptive quadrature of the multi-time
/// density, for `N = 2` and at most two observation times.
///
/// With one time the density is integrated over the plane. With two, the
/// first-slice coordinates are removed by Andreief's identity
/// `int_{y1<y2} det[a_i(y_j)] det[b_i(y_j)] dy = det[int a_i b_j]`, leaving an
/// ordered-region integral over the final slice whose entries are 1D
/// integrals over the support of `f_1`.
pub fn characteristic_direct(
    spec: &TestFunctionSpec,
    partition: &TimePartition,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    spec.check(partition)?;
    if n != 2 || partition.len() > 2 {
        return Err(Error::DimensionTooLarge {
            dim: n * partition.len(),
            max: 4,
        });
    }
    if spec.slices.iter().all(|s| s.theta == 0.0 || s.function.is_none()) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if partition.len() == 1 {
        let empty = vec![Vec::new(); 1];
        let breaks = vec![spec.active(0).map(|(a, b)| vec![a, b]).unwrap_or_default()];
        let product = |x: &[&[f64]]| -> Complex64 { x[0].iter().map(|&v| 1.0 + spec.chi(0, v)).product() };
        let re = integrate_weighted(partition, &empty, n, &|x| product(x).re, &breaks, quad)?;
        let im = integrate_weighted(partition, &empty, n, &|x| product(x).im, &breaks, quad)?;
        let z0 = integrate_weighted(partition, &empty, n, &|_| 1.0, &breaks, quad)?;
        return Ok(Complex64::new(re, im) / z0);
    }
    let z = two_time_partition_function(spec, partition, quad)?;
    let z0 = two_time_partition_function(&spec.scaled(0.0), partition, quad)?;
    Ok(z / z0)
}

fn two_time_partition_function(spec: &TestFunctionSpec, partition: &TimePartition, quad: &QuadratureSpec) -> Result<Complex64> {
    let (t1, horizon) = (partition.time(0), partition.horizon());
    let dt = horizon - t1;
    let var = t1 * dt / horizon;
    let inner = QuadratureSpec {
        abs_tol: quad.abs_tol * 1e-2,
        ..*quad
    };
    let first = spec.active(0);
    // m_i(z) = int y^i p_{t1}(0, y) p_{T-t1}(y, z) (1 + chi_0(y)) dy, i = 0, 1
    let moments = |z: f64| -> Result<[Complex64; 2]> {
        let pz = crate::stochastic::heat(horizon, 0.0, z);
        let mut m = [Complex64::new(pz, 0.0), Complex64::new(pz * z * t1 / horizon, 0.0)];
        if let Some((lo, hi)) = first {
            let g = |y: f64, i: i32, part: fn(Complex64) -> f64| {
                part(spec.chi(0, y)) * y.powi(i) * crate::special::gaussian(var, y - z * t1 / horizon) * pz
            };
            for (i, mi) in m.iter_mut().enumerate() {
                let re = inner.integrate(|y| g(y, i as i32, |c| c.re), lo, hi)?;
                let im = inner.integrate(|y| g(y, i as i32, |c| c.im), lo, hi)?;
                *mi += Complex64::new(re, im);
            }
        }
        Ok(m)
    };
    let last = spec.active(1).map(|(a, b)| vec![a, b]).unwrap_or_default();
    let weight = |z: f64| 1.0 + spec.chi(1, z);
    let pair = |z1: f64, z2: f64| -> Result<Complex64> {
        let (a, b) = (moments(z1)?, moments(z2)?);
        Ok(weight(z1) * weight(z2) * (a[0] * b[1] - a[1] * b[0]))
    };
    let c = crate::stochastic::initial_constant(2, horizon, t1);
    let mut out = [0.0; 2];
    for (k, o) in out.iter_mut().enumerate() {
        let part = |v: Complex64| if k == 0 { v.re } else { v.im };
        *o = c * quad.try_integrate_line(
            |z1| {
                let breaks: Vec<f64> = last.iter().copied().filter(|&e| e > z1).collect();
                integrate_above(&inner, |z2| Ok(part(pair(z1, z2)?)), z1, &breaks)
            },
            &last,
        )?;
    }
    Ok(Complex64::new(out[0], out[1]))
}

fn integrate_above(quad: &QuadratureSpec, f: impl Fn(f64) -> Result<f64>, a: f64, breaks: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    let mut lo = a;
    for &b in breaks {
        acc += quad.try_integrate(&f, lo, b)?;
        lo = b;
    }
    Ok(acc + quad.try_integrate_upper(&f, lo)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisContext;
    use crate::kernels::CorrelationQuery;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn kernel(times: &[f64]) -> CorrelationKernel {
        let p = TimePartition::new(times.to_vec(), 1.0).unwrap();
        CorrelationKernel::new(BasisContext::new(2, &p).unwrap())
    }

    fn gaussian_disc(m: usize, a: f64) -> DiscretizedKernel {
        let (x, w) = gauss_legendre_on(m, -1.0, 1.0);
        let nodes: Vec<Node> = x.iter().zip(&w).map(|(&x, &weight)| Node { slice: 0, x, weight }).collect();
        let values = DMatrix::from_fn(m, m, |i, j| c(a * (-(x[i] - x[j]).powi(2)).exp()));
        DiscretizedKernel::new(nodes, 1, values, None).unwrap()
    }

    fn random_skew_disc(m: usize, seed: u64) -> DiscretizedKernel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, w) = gauss_legendre_on(m, -1.0, 1.0);
        let nodes: Vec<Node> = x.iter().zip(&w).map(|(&x, &weight)| Node { slice: 0, x, weight }).collect();
        let mut v = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..2 * m {
            for j in i + 1..2 * m {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                v[(i, j)] = z;
                v[(j, i)] = -z;
            }
        }
        let factors = (0..m)
            .map(|_| Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect();
        DiscretizedKernel::new(nodes, 2, v, Some(factors)).unwrap()
    }

    #[test]
    fn determinant_basics() {
        let zero = DiscretizedKernel::new(
            vec![Node { slice: 0, x: 0.0, weight: 0.5 }; 3],
            2,
            DMatrix::zeros(6, 6),
            None,
        )
        .unwrap();
        assert_eq!(fredholm_det(&zero), c(1.0));
        assert_eq!(fredholm_pf(&zero).unwrap(), c(1.0));
        // rank one: u v^T
        let m = 12;
        let (x, w) = gauss_legendre_on(m, 0.0, 2.0);
        let nodes: Vec<Node> = x.iter().zip(&w).map(|(&x, &weight)| Node { slice: 0, x, weight }).collect();
        let values = DMatrix::from_fn(m, m, |i, j| c(x[i].sin() * (0.3 * x[j]).exp()));
        let disc = DiscretizedKernel::new(nodes, 1, values, None).unwrap();
        let trace: Complex64 = (0..m).map(|i| disc.weighted()[(i, i)]).sum();
        assert!((fredholm_det(&disc) - (1.0 + trace)).norm() < 1e-12);
        assert!(DiscretizedKernel::new(vec![Node { slice: 0, x: 0.0, weight: 0.0 }], 1, DMatrix::zeros(1, 1), None).is_err());
    }

    #[test]
    fn sign_matrix_is_exact_on_polynomials() {
        let n = 12;
        let (x, w) = crate::quadrature::gauss_legendre(n);
        let s = sign_integration_matrix(n);
        let g = |y: f64| 1.0 + y - 3.0 * y.powi(4) + 0.5 * y.powi(11);
        let big_g = |y: f64| y + y * y / 2.0 - 0.6 * y.powi(5) + y.powi(12) / 24.0;
        for i in 0..n {
            let got: f64 = (0..n).map(|j| s[(i, j)] * g(x[j])).sum();
            let want = (big_g(1.0) - big_g(x[i])) - (big_g(x[i]) - big_g(-1.0));
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
            for j in 0..n {
                assert!((w[i] * s[(i, j)] + w[j] * s[(j, i)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gaussian_kernel_self_convergence() {
        let a = fredholm_det(&gaussian_disc(40, 0.7));
        let b = fredholm_det(&gaussian_disc(80, 0.7));
        assert!((a - b).norm() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn rains_identity_on_random_kernels() {
        for (m, seed) in [(10, 1), (20, 2), (40, 3)] {
            let disc = random_skew_disc(m, seed);
            let pf = fredholm_pf(&disc).unwrap();
            let det = fredholm_det(&disc.symplectic_companion().unwrap());
            assert!((pf * pf - det).norm() <= 1e-8 * det.norm(), "m={m}: {} vs {det}", pf * pf);
            let tracked = fredholm_pf_homotopy(&disc, 16).unwrap();
            assert!((tracked - pf).norm() <= 1e-8 * pf.norm(), "m={m}: {tracked} vs {pf}");
        }
    }

    #[test]
    fn pfaffian_rejects_non_skew() {
        let mut disc = random_skew_disc(4, 9);
        disc.values[(0, 1)] += 1.0;
        assert!(matches!(fredholm_pf(&disc), Err(Error::NotSkew { .. })));
    }

    fn spec1(f: TestFunction, theta: f64) -> TestFunctionSpec {
        TestFunctionSpec::new(vec![SliceTest { function: Some(f), theta }]).unwrap()
    }

    #[test]
    fn characteristic_trivial_cases() {
        let k = kernel(&[1.0]);
        let q = QuadratureSpec::new(crate::quadrature::Scheme::GaussLegendre, 40, 1e-9).unwrap();
        let f = TestFunction::Bump { center: 0.0, half_width: 1.0, height: 1.0 };
        assert_eq!(characteristic_pf(&spec1(f, 0.0), &k, &q).unwrap(), c(1.0));
        let p = TimePartition::single(1.0).unwrap();
        assert_eq!(characteristic_direct(&spec1(f, 0.0), &p, 2, &q).unwrap(), c(1.0));
        assert!(characteristic_pf(&TestFunctionSpec::new(vec![]).unwrap(), &k, &q).is_err());
        assert!(TestFunctionSpec::new(vec![SliceTest {
            function: Some(TestFunction::Indicator { lo: 1.0, hi: 0.0, height: 1.0 }),
            theta: 1.0
        }])
        .is_err());
    }

    #[test]
    fn pf_equals_direct_single_time() {
        let k = kernel(&[1.0]);
        let p = k.ctx().partition().clone();
        let q = QuadratureSpec::new(crate::quadrature::Scheme::GaussKronrod, 40, 1e-9).unwrap();
        for (f, theta) in [
            (TestFunction::Bump { center: 0.2, half_width: 1.5, height: 1.0 }, 1.3),
            (TestFunction::Indicator { lo: -0.5, hi: 0.8, height: 1.0 }, 2.0),
        ] {
            let s = spec1(f, theta);
            let pf = characteristic_pf(&s, &k, &q).unwrap();
            let direct = characteristic_direct(&s, &p, 2, &q).unwrap();
            assert!((pf - direct).norm() < 1e-5, "{pf} vs {direct}");
            let sq = fredholm_det(&discretize_kernel(&s, &k, 40).unwrap().symplectic_companion().unwrap());
            assert!((pf * pf - sq).norm() <= 1e-8 * sq.norm());
        }
    }

    #[test]
    fn pf_equals_direct_two_times() {
        let k = kernel(&[0.5, 1.0]);
        let p = k.ctx().partition().clone();
        let q = QuadratureSpec::new(crate::quadrature::Scheme::GaussKronrod, 40, 1e-8).unwrap();
        let s = TestFunctionSpec::new(vec![
            SliceTest { function: Some(TestFunction::Bump { center: 0.2, half_width: 1.5, height: 1.0 }), theta: 1.3 },
            SliceTest { function: Some(TestFunction::Indicator { lo: -0.5, hi: 0.8, height: 1.0 }), theta: -0.7 },
        ])
        .unwrap();
        let pf = characteristic_pf(&s, &k, &q).unwrap();
        let direct = characteristic_direct(&s, &p, 2, &q).unwrap();
        assert!((pf - direct).norm() < 1e-5, "{pf} vs {direct}");
        let three = TimePartition::new(vec![0.2, 0.5, 1.0], 1.0).unwrap();
        assert!(characteristic_direct(&TestFunctionSpec::new(vec![s.slices[0]; 3]).unwrap(), &three, 2, &q).is_err());
    }

    #[test]
    fn small_theta_and_finite_difference() {
        let k = kernel(&[0.5, 1.0]);
        let q = QuadratureSpec::new(crate::quadrature::Scheme::GaussLegendre, 40, 1e-9).unwrap();
        let f = TestFunction::Bump { center: -0.3, half_width: 1.2, height: 1.0 };
        let mk = |theta: f64| {
            TestFunctionSpec::new(vec![SliceTest { function: Some(f), theta }, SliceTest { function: None, theta: 0.0 }]).unwrap()
        };
        let quad = QuadratureSpec::adaptive(1e-11);
        let first = quad
            .try_integrate(|x| Ok(f.eval(x) * k.one_point_density(0, x)?), -1.5, 0.9)
            .unwrap();
        let theta = 1e-3;
        let psi = characteristic_pf(&mk(theta), &k, &q).unwrap();
        let want = Complex64::new(1.0, theta * first);
        assert!((psi - want).norm() < 1e-4 + theta * theta);

        // a narrow indicator recovers the one-point density
        let (x0, eps, h) = (0.4, 1e-3, 1e-3);
        let narrow = |theta: f64| {
            TestFunctionSpec::new(vec![
                SliceTest { function: None, theta: 0.0 },
                SliceTest { function: Some(TestFunction::Indicator { lo: x0 - eps, hi: x0 + eps, height: 1.0 }), theta },
            ])
            .unwrap()
        };
        let d = (characteristic_pf(&narrow(h), &k, &q).unwrap() - characteristic_pf(&narrow(-h), &k, &q).unwrap()) / (2.0 * h);
        let rho = k.correlation(&CorrelationQuery::single(2, 1, x0).unwrap()).unwrap().value;
        assert!((d.im / (2.0 * eps) - rho).abs() < 1e-4, "{} vs {rho}", d.im / (2.0 * eps));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn bounded_and_conjugate_symmetric(
            theta0 in -3.0f64..3.0, theta1 in -3.0f64..3.0,
            c0 in -1.0f64..1.0, c1 in -1.0f64..1.0, w in 0.3f64..1.5,
        ) {
            let k = kernel(&[0.6, 1.0]);
            let q = QuadratureSpec::new(crate::quadrature::Scheme::GaussLegendre, 24, 1e-9).unwrap();
            let s = TestFunctionSpec::new(vec![
                SliceTest { function: Some(TestFunction::Bump { center: c0, half_width: w, height: 1.0 }), theta: theta0 },
                SliceTest { function: Some(TestFunction::Indicator { lo: c1 - w, hi: c1 + w, height: 0.7 }), theta: theta1 },
            ]).unwrap();
            let psi = characteristic_pf(&s, &k, &q).unwrap();
            let neg = characteristic_pf(&s.scaled(-1.0), &k, &q).unwrap();
            prop_assert!(psi.norm() <= 1.0 + 1e-9);
            prop_assert!((neg - psi.conj()).norm() < 1e-10);
        }
    }
}
