//! The 2x2 matrix kernel `A^{mu,nu}(x, y)` and pfaffian correlation
//! functions.
//!
//! With `R^`, `Phi^` the normalized functions of [`crate::basis`] and sums
//! over `k < N/2`:
//!
//! ```text
//! D = sum R^_{2k}(mu,x) R^_{2k+1}(nu,y) - R^_{2k+1}(mu,x) R^_{2k}(nu,y)
//! S = sum Phi^_{2k}(mu,x) R^_{2k+1}(nu,y) - Phi^_{2k+1}(mu,x) R^_{2k}(nu,y)
//! I = -sum Phi^_{2k}(mu,x) Phi^_{2k+1}(nu,y) - Phi^_{2k+1}(mu,x) Phi^_{2k}(nu,y)
//! S~ = S - p_{t_nu - t_mu}(x, y) 1(mu < nu)
//! I~ = I + erf((y - x) / sqrt(2 (2T - t_mu - t_nu)))
//! ```

use rayon::prelude::*;

use crate::basis::BasisContext;
use crate::error::{Error, Result};
use crate::skewlin::SkewMatrix;
use crate::special::{erf, sgn};
use crate::stochastic::heat;

/// Skew-symmetry tolerance of the assembled matrix.
pub const ASSEMBLY_SKEW_TOLERANCE: f64 = 1e-9;
/// Negative correlations above `-CLAMP_EPS` are reported as zero.
pub const CLAMP_EPS: f64 = 1e-12;

/// `R^_k` and `Phi^_k` for `k < len` at one space-time point.
#[derive(Clone, Debug)]
pub struct PointTable {
    pub mu: usize,
    pub x: f64,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Matrix kernel for a fixed basis, with `truncation` function pairs kept for
/// the series forms.
#[derive(Clone, Debug)]
pub struct CorrelationKernel {
    ctx: BasisContext,
    truncation: usize,
}

/// One set of points per observation time (possibly empty), not necessarily
/// ordered.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationQuery {
    slices: Vec<Vec<f64>>,
}

impl CorrelationQuery {
    pub fn new(slices: Vec<Vec<f64>>) -> Result<Self> {
        if slices.iter().all(|s| s.is_empty()) {
            return Err(Error::InvalidParameter("query holds no points".into()));
        }
        if slices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite query point".into()));
        }
        Ok(Self { slices })
    }

    /// One point `x` at slice `mu` of a partition with `len` times.
    pub fn single(len: usize, mu: usize, x: f64) -> Result<Self> {
        let mut slices = vec![Vec::new(); len];
        if mu >= len {
            return Err(Error::InvalidParameter(format!("time index {mu} out of range")));
        }
        slices[mu].push(x);
        Self::new(slices)
    }

    /// Points `x` at slice `mu` and `y` at slice `nu`.
    pub fn pair(len: usize, mu: usize, x: f64, nu: usize, y: f64) -> Result<Self> {
        if mu >= len || nu >= len {
            return Err(Error::InvalidParameter("time index out of range".into()));
        }
        let mut slices = vec![Vec::new(); len];
        slices[mu].push(x);
        slices[nu].push(y);
        Self::new(slices)
    }

    pub fn slices(&self) -> &[Vec<f64>] {
        &self.slices
    }

    pub fn total_points(&self) -> usize {
        self.slices.iter().map(Vec::len).sum()
    }

    fn points(&self) -> Vec<(usize, f64)> {
        self.slices
            .iter()
            .enumerate()
            .flat_map(|(mu, s)| s.iter().map(move |&x| (mu, x)))
            .collect()
    }
}

/// Pfaffian correlation with the clamp flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correlation {
    pub value: f64,
    pub clamped: bool,
}

/// Truncated series value with a tail bound measured from its last partial
/// sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
}

impl CorrelationKernel {
    pub fn new(ctx: BasisContext) -> Self {
        let truncation = ctx.basis_size() / 2;
        Self { ctx, truncation }
    }

    /// Keeps `truncation` pairs (at least `N/2`) for the series forms.
    pub fn with_truncation(ctx: BasisContext, truncation: usize) -> Result<Self> {
        if truncation < ctx.n() / 2 || 2 * truncation > ctx.basis_size() {
            return Err(Error::InvalidParameter(format!(
                "truncation {truncation} must lie in [N/2, {}]",
                ctx.basis_size() / 2
            )));
        }
        Ok(Self { ctx, truncation })
    }

    pub fn ctx(&self) -> &BasisContext {
        &self.ctx
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    fn time(&self, mu: usize) -> f64 {
        self.ctx.partition().time(mu)
    }

    /// Tables with the `N` functions the finite kernels need.
    pub fn table(&self, mu: usize, x: f64) -> Result<PointTable> {
        self.table_len(mu, x, self.ctx.n())
    }

    fn table_len(&self, mu: usize, x: f64, len: usize) -> Result<PointTable> {
        self.ctx.partition().check_slice(mu)?;
        Ok(PointTable {
            mu,
            x,
            r: self.ctx.r_hat_row(len, mu, x),
            phi: self.ctx.phi_hat_row(len, mu, x),
        })
    }

    pub fn d_from(&self, a: &PointTable, b: &PointTable) -> f64 {
        pair_sum(&a.r, &b.r, self.ctx.n() / 2)
    }

    pub fn s_from(&self, a: &PointTable, b: &PointTable) -> f64 {
        pair_sum(&a.phi, &b.r, self.ctx.n() / 2)
    }

    pub fn i_from(&self, a: &PointTable, b: &PointTable) -> f64 {
        -pair_sum(&a.phi, &b.phi, self.ctx.n() / 2)
    }

    pub fn s_tilde_from(&self, a: &PointTable, b: &PointTable) -> f64 {
        let s = self.s_from(a, b);
        if a.mu < b.mu {
            s - heat(self.time(b.mu) - self.time(a.mu), a.x, b.x)
        } else {
            s
        }
    }

    pub fn i_tilde_from(&self, a: &PointTable, b: &PointTable) -> f64 {
        self.i_from(a, b) + self.w(a.mu, a.x, b.mu, b.x)
    }

    /// `int int p_{T-t_mu}(x, z) sgn(w - z) p_{T-t_nu}(y, w) dz dw`.
    pub fn w(&self, mu: usize, x: f64, nu: usize, y: f64) -> f64 {
        let var = 2.0 * self.ctx.horizon() - self.time(mu) - self.time(nu);
        if var <= 0.0 {
            sgn(y - x)
        } else {
            erf((y - x) / (2.0 * var).sqrt())
        }
    }

    pub fn kernel_d(&self, mu: usize, x: f64, nu: usize, y: f64) -> Result<f64> {
        Ok(self.d_from(&self.table(mu, x)?, &self.table(nu, y)?))
    }

    pub fn kernel_s(&self, mu: usize, x: f64, nu: usize, y: f64) -> Result<f64> {
        Ok(self.s_from(&self.table(mu, x)?, &self.table(nu, y)?))
    }

    pub fn kernel_i(&self, mu: usize, x: f64, nu: usize, y: f64) -> Result<f64> {
        Ok(self.i_from(&self.table(mu, x)?, &self.table(nu, y)?))
    }

    pub fn kernel_s_tilde(&self, mu: usize, x: f64, nu: usize, y: f64) -> Result<f64> {
        Ok(self.s_tilde_from(&self.table(mu, x)?, &self.table(nu, y)?))
    }

    pub fn kernel_i_tilde(&self, mu: usize, x: f64, nu: usize, y: f64) -> Result<f64> {
        Ok(self.i_tilde_from(&self.table(mu, x)?, &self.table(nu, y)?))
    }

    /// One-point density `S~^{mu,mu}(x, x)`.
    pub fn one_point_density(&self, mu: usize, x: f64) -> Result<f64> {
        let t = self.table(mu, x)?;
        Ok(self.s_tilde_from(&t, &t))
    }

    /// `S~^{mu,nu}(x, y)` for `mu < nu` as `-sum_{N/2 <= k < K}` of the
    /// `S` summand.
    pub fn s_tilde_series(&self, mu: usize, x: f64, nu: usize, y: f64) -> Result<SeriesValue> {
        if mu >= nu {
            return Err(Error::InvalidParameter("series form of S~ needs mu < nu".into()));
        }
        let len = 2 * self.truncation;
        let a = self.table_len(mu, x, len)?;
        let b = self.table_len(nu, y, len)?;
        Ok(self.series(|k| -(a.phi[2 * k] * b.r[2 * k + 1] - a.phi[2 * k + 1] * b.r[2 * k])))
    }

    /// `I~^{mu,nu}(x, y)` as `sum_{N/2 <= k < K}` of the negated `I` summand.
    pub fn i_tilde_series(&self, mu: usize, x: f64, nu: usize, y: f64) -> Result<SeriesValue> {
        let len = 2 * self.truncation;
        let a = self.table_len(mu, x, len)?;
        let b = self.table_len(nu, y, len)?;
        Ok(self.series(|k| a.phi[2 * k] * b.phi[2 * k + 1] - a.phi[2 * k + 1] * b.phi[2 * k]))
    }

    fn series(&self, term: impl Fn(usize) -> f64) -> SeriesValue {
        let start = self.ctx.n() / 2;
        let mut partial = Vec::with_capacity(self.truncation - start + 1);
        let mut acc = 0.0;
        partial.push(acc);
        for k in start..self.truncation {
            acc += term(k);
            partial.push(acc);
        }
        let last = partial.len() - 1;
        let spread = (1..=5.min(last))
            .map(|j| (partial[last] - partial[last - j]).abs())
            .fold(0.0, f64::max);
        SeriesValue {
            value: acc,
            tail_bound: 10.0 * spread + 1e-10,
        }
    }

    /// Checks slice count and per-slice sizes of a query.
    pub fn validate(&self, query: &CorrelationQuery) -> Result<()> {
        let len = self.ctx.partition().len();
        if query.slices.len() != len {
            return Err(Error::SizeMismatch {
                expected: len,
                found: query.slices.len(),
            });
        }
        let n = self.ctx.n();
        if let Some(s) = query.slices.iter().find(|s| s.len() > n) {
            return Err(Error::SizeMismatch {
                expected: n,
                found: s.len(),
            });
        }
        Ok(())
    }

    /// Tables for every point of the query, in slice order.
    pub fn tables(&self, query: &CorrelationQuery) -> Result<Vec<PointTable>> {
        self.validate(query)?;
        query
            .points()
            .into_par_iter()
            .map(|(mu, x)| self.table(mu, x))
            .collect()
    }

    /// The `2n x 2n` matrix of `2x2` blocks
    /// `[[D(x,y), S~^{nu,mu}(y,x)], [-S~^{mu,nu}(x,y), -I~(x,y)]]`.
    pub fn assemble_a(&self, query: &CorrelationQuery) -> Result<SkewMatrix> {
        let tables = self.tables(query)?;
        self.assemble_from(&tables)
    }

    pub fn assemble_from(&self, tables: &[PointTable]) -> Result<SkewMatrix> {
        let n = tables.len();
        let mut m = nalgebra::DMatrix::zeros(2 * n, 2 * n);
        for (p, a) in tables.iter().enumerate() {
            for (q, b) in tables.iter().enumerate() {
                m[(2 * p, 2 * q)] = self.d_from(a, b);
                m[(2 * p, 2 * q + 1)] = self.s_tilde_from(b, a);
                m[(2 * p + 1, 2 * q)] = -self.s_tilde_from(a, b);
                m[(2 * p + 1, 2 * q + 1)] = -self.i_tilde_from(a, b);
            }
        }
        let dev = (&m + m.transpose()).amax();
        let scale = m.amax().max(1.0);
        if dev > ASSEMBLY_SKEW_TOLERANCE * scale {
            return Err(Error::NotSkew { deviation: dev });
        }
        SkewMatrix::with_tolerance(m, ASSEMBLY_SKEW_TOLERANCE)
    }

    /// `rho = Pf(A)` for the query.
    pub fn correlation(&self, query: &CorrelationQuery) -> Result<Correlation> {
        let value = self.assemble_a(query)?.pfaffian();
        Ok(clamp(value))
    }

    pub fn correlation_from(&self, tables: &[PointTable]) -> Result<Correlation> {
        Ok(clamp(self.assemble_from(tables)?.pfaffian()))
    }
}

fn clamp(value: f64) -> Correlation {
    if value < 0.0 && value > -CLAMP_EPS {
        Correlation {
            value: 0.0,
            clamped: true,
        }
    } else {
        Correlation {
            value,
            clamped: false,
        }
    }
}

fn pair_sum(f: &[f64], g: &[f64], pairs: usize) -> f64 {
    (0..pairs)
        .map(|k| f[2 * k] * g[2 * k + 1] - f[2 * k + 1] * g[2 * k])
        .sum()
}
