//! Hermite-type skew-orthonormal functions.
//!
//! All indices here are 0-based: `R_k` and `Phi_k` for `k = 0, 1, ...`, with
//! `b_k = r_{floor(k/2)}^{-1/2}` and
//!
//! ```text
//! R_k^{(mu)}(x)   = b_k^{-1} int M_k(y) p_{t_1}(0, y) p_{t_mu - t_1}(y, x) dy
//! Phi_k^{(mu)}(x) = int p_{T - t_mu}(x, z) Phi_k^{(M+1)}(z) dz,
//! Phi_k^{(M+1)}(z) = -int sgn(w - z) R_k^{(M+1)}(w) dw.
//! ```
//!
//! The normalized functions `b_k R_k` and `b_k Phi_k` (written `R^_k`,
//! `Phi^_k`) are what the kernels consume; they are evaluated in log-scaled
//! form so that degrees of a few dozen stay accurate.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::special::{erfc, ln_gamma};
use crate::stochastic::{heat, TimePartition};

/// Default number of extra function pairs kept beyond the `N / 2` used by
/// the finite kernels.
pub const DEFAULT_SPARE_PAIRS: usize = 20;

/// Smallest admissible `t_1 / T`.
pub const MIN_FIRST_TIME_RATIO: f64 = 1e-8;

/// Physicists' Hermite polynomial `H_i(x)`.
pub fn hermite(i: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if i == 0 {
        return h0;
    }
    for k in 1..i {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `alpha_{ij}`: `2^{-i} c_1^i delta_{ij}` for even `i`,
/// `2^{-i} c_1^i (delta_{ij} - 2(i-1) delta_{i-2,j})` for odd `i`.
pub fn alpha_coeff(i: usize, j: usize, c1: f64) -> f64 {
    let base = (0.5 * c1).powi(i as i32);
    if i == j {
        base
    } else if i % 2 == 1 && i >= 2 && j == i - 2 {
        -2.0 * (i - 1) as f64 * base
    } else {
        0.0
    }
}

/// Dense polynomial in the monomial basis, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.degree()]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Physicists' Hermite polynomial `H_i(x / c)` as a polynomial in `x`.
    pub fn hermite_scaled(i: usize, c: f64) -> Self {
        let mut h0 = vec![1.0];
        if i == 0 {
            return Self::new(h0);
        }
        let mut h1 = vec![0.0, 2.0 / c];
        for k in 1..i {
            let mut h2 = vec![0.0; k + 2];
            for (d, v) in h1.iter().enumerate() {
                h2[d + 1] += 2.0 / c * v;
            }
            for (d, v) in h0.iter().enumerate() {
                h2[d] -= 2.0 * k as f64 * v;
            }
            h0 = h1;
            h1 = h2;
        }
        Self::new(h1)
    }

    /// `E[P(Y)]` for `Y ~ N(mean, var)`, from the moment recursion
    /// `E Y^n = mean E Y^{n-1} + (n-1) var E Y^{n-2}`.
    pub fn gaussian_expectation(&self, mean: f64, var: f64) -> f64 {
        let (mut m0, mut m1) = (1.0, mean);
        let mut acc = self.coeffs[0];
        for (n, c) in self.coeffs.iter().enumerate().skip(1) {
            if n > 1 {
                let m2 = mean * m1 + (n - 1) as f64 * var * m0;
                m0 = m1;
                m1 = m2;
            }
            acc += c * m1;
        }
        acc
    }
}

/// Constants of the skew-orthonormal family for `N` particles observed on a
/// partition with first time `t_1` and horizon `T`.
#[derive(Clone, Debug)]
pub struct BasisContext {
    n: usize,
    partition: TimePartition,
    t1: f64,
    c1: f64,
    z1: f64,
    ln_r: Vec<f64>,
    b: Vec<f64>,
    m_coeffs: Vec<Polynomial>,
}

impl BasisContext {
    pub fn new(n: usize, partition: &TimePartition) -> Result<Self> {
        Self::with_spare(n, partition, DEFAULT_SPARE_PAIRS)
    }

    /// Keeps `N + 2 * spare_pairs` functions.
    pub fn with_spare(n: usize, partition: &TimePartition, spare_pairs: usize) -> Result<Self> {
        if n == 0 || n % 2 == 1 {
            return Err(Error::OddDimension(n));
        }
        let horizon = partition.horizon();
        let t1 = partition.first();
        if t1 < MIN_FIRST_TIME_RATIO * horizon {
            return Err(Error::Domain(format!(
                "t_1 = {t1} is below {MIN_FIRST_TIME_RATIO} T; z_1 diverges"
            )));
        }
        let size = n + 2 * spare_pairs;
        let c1 = (t1 * (2.0 * horizon - t1) / horizon).sqrt();
        let z1 = ((2.0 * horizon - t1) / t1).sqrt();
        let ln_q = (t1 * t1 / horizon).ln();
        let ln_r: Vec<f64> = (0..size.div_ceil(2) + 1)
            .map(|i| {
                let i = i as f64;
                -PI.ln() + ln_gamma(i + 0.5) + ln_gamma(i + 1.0) + (2.0 * i + 0.5) * ln_q
            })
            .collect();
        let b: Vec<f64> = (0..size).map(|k| (-0.5 * ln_r[k / 2]).exp()).collect();
        if let Some(k) = (0..(2 * n).min(size)).find(|&k| !(b[k].is_finite() && b[k] > 0.0)) {
            return Err(Error::IllConditioned(format!("normalization b_{k} is not finite")));
        }
        let m_coeffs = (0..size).map(|k| m_polynomial_raw(k, c1, z1, b[k])).collect();
        Ok(Self {
            n,
            partition: partition.clone(),
            t1,
            c1,
            z1,
            ln_r,
            b,
            m_coeffs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn partition(&self) -> &TimePartition {
        &self.partition
    }

    pub fn horizon(&self) -> f64 {
        self.partition.horizon()
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn z1(&self) -> f64 {
        self.z1
    }

    /// Number of functions available, `N + 2 * spare_pairs`.
    pub fn basis_size(&self) -> usize {
        self.b.len()
    }

    pub fn ln_r(&self, i: usize) -> f64 {
        self.ln_r[i]
    }

    pub fn r(&self, i: usize) -> f64 {
        self.ln_r[i].exp()
    }

    pub fn b(&self, k: usize) -> f64 {
        self.b[k]
    }

    pub fn alpha(&self, i: usize, j: usize) -> f64 {
        alpha_coeff(i, j, self.c1)
    }

    /// `M_k` in the monomial basis.
    pub fn m_polynomial(&self, k: usize) -> &Polynomial {
        &self.m_coeffs[k]
    }

    fn check(&self, k: usize, mu: usize) -> Result<()> {
        self.partition.check_slice(mu)?;
        if k >= self.basis_size() {
            return Err(Error::InvalidParameter(format!(
                "function index {k} exceeds the basis size {}",
                self.basis_size()
            )));
        }
        Ok(())
    }

    fn s_ref(&self) -> f64 {
        self.c1 / std::f64::consts::SQRT_2
    }

    fn ln_scale(&self, k: usize) -> f64 {
        -0.5 * self.ln_r[k / 2] + k as f64 * self.s_ref().ln()
    }

    // Rescaled Gaussian-smoothed Hermite polynomials `Q_0 ..= Q_last` at `a`.
    fn q_row(&self, last: usize, a: f64, c: f64) -> Vec<f64> {
        let mut q = Vec::with_capacity(last + 2);
        q.push(1.0);
        q.push(a);
        for j in 1..last {
            q.push(a * q[j] - j as f64 * c * q[j - 1]);
        }
        q.truncate(last + 1);
        q
    }

    fn combine(&self, k: usize, q: &[f64]) -> f64 {
        if k % 2 == 0 {
            q[k]
        } else if k == 1 {
            q[1]
        } else {
            q[k] - (k - 1) as f64 / (self.z1 * self.z1) * q[k - 2]
        }
    }

    /// `R^_0 .. R^_{len-1}` at a time `tau >= t_1` (which may lie beyond `T`).
    pub fn r_hat_row_at(&self, len: usize, tau: f64, x: f64) -> Vec<f64> {
        if len == 0 {
            return Vec::new();
        }
        let s = self.s_ref();
        let mean = self.t1 * x / tau;
        let var = self.t1 * (tau - self.t1) / tau;
        let q = self.q_row(len - 1, mean / s, (s * s - var) / (s * s));
        let g = -x * x / (2.0 * tau);
        let norm = (2.0 * PI * tau).sqrt();
        (0..len)
            .map(|k| (self.ln_scale(k) + g).exp() / norm * self.combine(k, &q))
            .collect()
    }

    /// `-int sgn(u - x) R^_k at time tau (u) du` for `k < len`, from exact
    /// recurrences for the incomplete Gaussian moments.
    pub fn phi_hat_row_at(&self, len: usize, tau: f64, x: f64) -> Vec<f64> {
        if len == 0 {
            return Vec::new();
        }
        let s = self.s_ref();
        let beta = self.t1 / (tau * s);
        let gam = 1.0 / (self.z1 * self.z1);
        let var = self.t1 * (tau - self.t1) / tau;
        let q = self.q_row(len.max(2), beta * x, (s * s - var) / (s * s));
        let pt = heat(tau, 0.0, x);
        let mut upper = vec![0.5 * erfc(x / (2.0 * tau).sqrt()), beta * tau * pt];
        let mut full = vec![1.0, 0.0];
        for j in 1..len.saturating_sub(1) {
            upper.push(beta * tau * pt * q[j] + gam * j as f64 * upper[j - 1]);
            full.push(gam * j as f64 * full[j - 1]);
        }
        (0..len)
            .map(|k| {
                let sc = self.ln_scale(k).exp();
                let total = if k % 2 == 0 { sc * self.combine(k, &full) } else { 0.0 };
                total - 2.0 * sc * self.combine(k, &upper)
            })
            .collect()
    }

    /// `R^_0 .. R^_{len-1}` at slice `mu`.
    pub fn r_hat_row(&self, len: usize, mu: usize, x: f64) -> Vec<f64> {
        self.r_hat_row_at(len, self.partition.time(mu), x)
    }

    /// `Phi^_0 .. Phi^_{len-1}` at slice `mu`.
    pub fn phi_hat_row(&self, len: usize, mu: usize, x: f64) -> Vec<f64> {
        self.phi_hat_row_at(len, 2.0 * self.horizon() - self.partition.time(mu), x)
    }

    /// `b_k R_k^{(mu)}(x)`.
    pub fn r_hat(&self, k: usize, mu: usize, x: f64) -> Result<f64> {
        self.check(k, mu)?;
        Ok(self.r_hat_row(k + 1, mu, x)[k])
    }

    /// `b_k Phi_k^{(mu)}(x)`.
    pub fn phi_hat(&self, k: usize, mu: usize, x: f64) -> Result<f64> {
        self.check(k, mu)?;
        Ok(self.phi_hat_row(k + 1, mu, x)[k])
    }

    /// `R_k^{(mu)}(x)`.
    pub fn r_function(&self, k: usize, mu: usize, x: f64) -> Result<f64> {
        Ok(self.r_hat(k, mu, x)? / self.b[k])
    }

    /// `R_k^{(mu)}(x)` through the monomial coefficients of `M_k` and the
    /// Gaussian product rule. Accurate for low degree only.
    pub fn r_function_monomial(&self, k: usize, mu: usize, x: f64) -> Result<f64> {
        self.check(k, mu)?;
        let tmu = self.partition.time(mu);
        let mean = x * self.t1 / tmu;
        let var = self.t1 * (tmu - self.t1) / tmu;
        Ok(heat(tmu, 0.0, x) * self.m_coeffs[k].gaussian_expectation(mean, var) / self.b[k])
    }

    /// `Phi_k^{(mu)}(x)`.
    pub fn phi_function(&self, k: usize, mu: usize, x: f64) -> Result<f64> {
        Ok(self.phi_hat(k, mu, x)? / self.b[k])
    }

    /// `Phi_k^{(mu)}(x)` by adaptive quadrature of the heat convolution of
    /// `Phi_k^{(M+1)}` over `x +- 10 sqrt(T - t_mu)`.
    pub fn phi_function_quadrature(&self, k: usize, mu: usize, x: f64, quad: &QuadratureSpec) -> Result<f64> {
        self.check(k, mu)?;
        let horizon = self.horizon();
        let last = self.partition.len() - 1;
        let dt = horizon - self.partition.time(mu);
        if mu == last || dt == 0.0 {
            return self.phi_function(k, last, x);
        }
        let w = 10.0 * dt.sqrt();
        let v = quad.try_integrate(
            |z| Ok(heat(dt, x, z) * self.phi_hat_row_at(k + 1, horizon, z)[k]),
            x - w,
            x + w,
        )?;
        Ok(v / self.b[k])
    }

    /// `int int sgn(y - x) R^_i(x) R^_j(y) dx dy` at the final time for
    /// `i, j < N`; the claim is that this equals `J_N`.
    pub fn skew_gram(&self, quad: &QuadratureSpec) -> Result<DMatrix<f64>> {
        let n = self.n;
        let horizon = self.horizon();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = quad.try_integrate_line(
                    |x| Ok(-self.r_hat_row_at(i + 1, horizon, x)[i] * self.phi_hat_row_at(j + 1, horizon, x)[j]),
                    &[0.0],
                )?;
                g[(i, j)] = v;
                g[(j, i)] = -v;
            }
        }
        Ok(g)
    }
}

fn m_polynomial_raw(k: usize, c1: f64, z1: f64, bk: f64) -> Polynomial {
    let mut coeffs = vec![0.0; k + 1];
    for j in (0..=k).rev().step_by(2).take(2) {
        let a = alpha_coeff(k, j, c1);
        if a == 0.0 {
            continue;
        }
        let f = bk * a * z1.powi(j as i32 - k as i32);
        for (d, h) in Polynomial::hermite_scaled(j, c1).coeffs().iter().enumerate() {
            coeffs[d] += f * h;
        }
    }
    Polynomial::new(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::erf;
    use approx::assert_abs_diff_eq;

    fn ctx(n: usize, t1: f64) -> BasisContext {
        let times = if t1 < 1.0 { vec![t1, 0.5 * (t1 + 1.0), 1.0] } else { vec![1.0] };
        BasisContext::new(n, &TimePartition::new(times, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn hermite_values_and_orthogonality() {
        assert_eq!(hermite(0, 0.3), 1.0);
        assert_eq!(hermite(1, 0.3), 0.6);
        assert_eq!(hermite(2, 1.0), 2.0);
        for i in 0..=6 {
            for j in 0..=6 {
                let q = QuadratureSpec::adaptive(1e-10 * 2f64.powi((i + j) as i32) * 720.0);
                let v = q.integrate_line(|x| (-x * x).exp() * hermite(i, x) * hermite(j, x), &[0.0]).unwrap();
                let want = if i == j {
                    2f64.powi(i as i32) * (1..=i).product::<usize>() as f64 * PI.sqrt()
                } else {
                    0.0
                };
                assert!((v - want).abs() < 1e-9 * want.max(1.0), "({i},{j}) {v} vs {want}");
            }
        }
        for i in 0..10 {
            let p = Polynomial::hermite_scaled(i, 1.7);
            for x in [-2.0, 0.1, 3.3] {
                assert_abs_diff_eq!(p.eval(x), hermite(i, x / 1.7), epsilon = 1e-9 * hermite(i, x / 1.7).abs().max(1.0));
            }
        }
    }

    #[test]
    fn alpha_values() {
        let c1 = 1.3;
        assert_eq!(alpha_coeff(0, 0, c1), 1.0);
        assert_abs_diff_eq!(alpha_coeff(3, 1, c1), -c1.powi(3) / 2.0, epsilon = 1e-15);
        assert_eq!(alpha_coeff(2, 1, c1), 0.0);
        assert_eq!(alpha_coeff(2, 0, c1), 0.0);
        assert_abs_diff_eq!(alpha_coeff(1, 1, c1), c1 / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn m_polynomials() {
        let c = ctx(8, 0.4);
        assert_eq!(c.m_polynomial(0).coeffs(), &[c.b(0)]);
        let m1 = c.m_polynomial(1);
        assert_eq!(m1.degree(), 1);
        assert_abs_diff_eq!(m1.coeffs()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m1.coeffs()[1], c.b(1), epsilon = 1e-14);
        for k in 0..=7 {
            let m = c.m_polynomial(k);
            assert_eq!(m.degree(), k);
            assert!((m.leading() - c.b(k)).abs() < 1e-12 * c.b(k), "k={k}");
        }
    }

    #[test]
    fn gaussian_expectation_moments() {
        let p = Polynomial::new(vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        let (m, v) = (0.3f64, 0.7f64);
        let want = m.powi(4) + 6.0 * m * m * v + 3.0 * v * v;
        assert_abs_diff_eq!(p.gaussian_expectation(m, v), want, epsilon = 1e-14);
        assert_eq!(p.gaussian_expectation(1.5, 0.0), 1.5f64.powi(4));
    }

    #[test]
    fn constants_and_guards() {
        let c = ctx(4, 0.5);
        assert_abs_diff_eq!(c.c1(), (0.5 * 1.5f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.z1(), 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.r(0), ln_gamma(0.5).exp() * 0.25f64.sqrt() / PI, epsilon = 1e-15);
        for k in 0..c.basis_size() {
            assert!(c.b(k).is_finite() && c.b(k) > 0.0);
            assert!(c.r(k / 2) > 0.0);
        }
        assert_eq!(c.b(2), c.b(3));
        assert_eq!(ctx(2, 1.0).z1(), 1.0);
        let tiny = TimePartition::new(vec![1e-9, 1.0], 1.0).unwrap();
        assert!(BasisContext::new(2, &tiny).is_err());
        assert!(BasisContext::new(3, &TimePartition::single(1.0).unwrap()).is_err());
        assert!(c.r_hat(0, 3, 0.0).is_err());
        assert!(c.r_hat(c.basis_size(), 0, 0.0).is_err());
    }

    #[test]
    fn r_reductions() {
        let c = ctx(4, 0.3);
        for x in [-1.2, 0.0, 0.8] {
            for mu in 0..3 {
                let t = c.partition().time(mu);
                assert_abs_diff_eq!(c.r_function(0, mu, x).unwrap(), heat(t, 0.0, x), epsilon = 1e-15);
            }
            for k in 0..6 {
                let want = c.m_polynomial(k).eval(x) / c.b(k) * heat(0.3, 0.0, x);
                assert_abs_diff_eq!(c.r_function(k, 0, x).unwrap(), want, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn r_routes_agree_with_quadrature() {
        let q = QuadratureSpec::adaptive(1e-13);
        for t1 in [0.25, 0.5, 0.9] {
            let c = ctx(8, t1);
            for k in 0..=8 {
                for mu in 1..3 {
                    let tmu = c.partition().time(mu);
                    for x in [-5.0, -2.1, -0.3, 0.0, 1.4, 3.7, 5.0] {
                        let oracle = q
                            .integrate_line(
                                |y| c.m_polynomial(k).eval(y) / c.b(k) * heat(t1, 0.0, y) * heat(tmu - t1, y, x),
                                &[0.0, x],
                            )
                            .unwrap();
                        let rec = c.r_function(k, mu, x).unwrap();
                        let mono = c.r_function_monomial(k, mu, x).unwrap();
                        assert!((rec - oracle).abs() < 1e-10, "t1={t1} k={k} mu={mu} x={x}: {rec} vs {oracle}");
                        assert!((mono - oracle).abs() < 1e-10, "monomial k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn phi_zero_is_erf() {
        let c = ctx(2, 0.5);
        for x in [-2.0, -0.5, 0.0, 0.3, 1.7] {
            assert_abs_diff_eq!(c.phi_function(0, 2, x).unwrap(), erf(x / 2f64.sqrt()), epsilon = 1e-14);
        }
        // the same function through its defining sgn integral
        let q = QuadratureSpec::adaptive(1e-13);
        for x in [-0.7, 1.1] {
            let g = q.integrate_line(|w| crate::special::sgn(w - x) * heat(1.0, 0.0, w), &[x]).unwrap();
            assert_abs_diff_eq!(c.phi_function(0, 2, x).unwrap(), -g, epsilon = 1e-12);
        }
    }

    #[test]
    fn phi_closed_form_against_nested_quadrature() {
        let q = QuadratureSpec::adaptive(1e-11);
        for t1 in [0.25, 0.6] {
            let c = ctx(6, t1);
            let horizon = 1.0;
            for (k, mu, x) in [(0, 0, 0.4), (1, 0, -0.9), (2, 1, 1.3), (3, 0, 0.0), (4, 1, -2.2), (5, 0, 0.7)] {
                let dt = horizon - c.partition().time(mu);
                let inner = |z: f64| {
                    q.try_integrate_line(
                        |w| Ok(crate::special::sgn(w - z) * c.r_function(k, 2, w)?),
                        &[z],
                    )
                };
                let nested = q
                    .try_integrate_line(|z| Ok(-heat(dt, x, z) * inner(z)?), &[x])
                    .unwrap();
                let closed = c.phi_function(k, mu, x).unwrap();
                let conv = c.phi_function_quadrature(k, mu, x, &q).unwrap();
                assert!((closed - nested).abs() < 1e-8, "t1={t1} k={k}: {closed} vs {nested}");
                assert!((closed - conv).abs() < 1e-10, "t1={t1} k={k}: {closed} vs {conv}");
            }
        }
    }

    #[test]
    fn high_degree_phi_against_quadrature() {
        let q = QuadratureSpec::adaptive(1e-11);
        let c = ctx(2, 0.5);
        for k in [7, 15, 25, 35, 41] {
            for mu in [0, 2] {
                let tau = 2.0 - c.partition().time(mu);
                for x in [-2.5, 0.0, 0.9, 4.0] {
                    let v = q
                        .integrate_line(|u| -crate::special::sgn(u - x) * c.r_hat_row_at(k + 1, tau, u)[k], &[x])
                        .unwrap();
                    let closed = c.phi_hat(k, mu, x).unwrap();
                    assert!((closed - v).abs() < 1e-9, "k={k} x={x}: {closed} vs {v}");
                }
            }
        }
    }

    #[test]
    fn phi_tails_are_the_total_mass() {
        let q = QuadratureSpec::adaptive(1e-13);
        let c = ctx(4, 0.5);
        for k in 0..8 {
            let mass = q.integrate_line(|u| c.r_hat_row_at(k + 1, 1.0, u)[k], &[0.0]).unwrap();
            let far = 60.0;
            assert_abs_diff_eq!(c.phi_hat(k, 2, far).unwrap(), mass, epsilon = 1e-12);
            assert_abs_diff_eq!(c.phi_hat(k, 2, -far).unwrap(), -mass, epsilon = 1e-12);
            if k % 2 == 1 {
                assert!(mass.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn skew_gram_is_symplectic() {
        let q = QuadratureSpec::adaptive(1e-12);
        for t1 in [0.25, 0.5, 0.9, 1.0] {
            let c = ctx(8, t1);
            let g = c.skew_gram(&q).unwrap();
            let j = crate::skewlin::symplectic_j(8).unwrap();
            let j = j.as_matrix();
            for r in 0..8 {
                assert_eq!(g[(r, r)], 0.0);
                for s in 0..8 {
                    assert!((g[(r, s)] - j[(r, s)]).abs() < 1e-8, "t1={t1} ({r},{s}) {}", g[(r, s)]);
                }
            }
        }
    }
}
