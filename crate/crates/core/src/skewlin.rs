//! Skew-symmetric linear algebra: pfaffians, the symplectic unit `J_N`, and
//! the pairwise matrices of the de Bruijn and Andreief integration formulas.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;

/// Asymmetry accepted (and symmetrized away) by [`SkewMatrix::new`].
pub const SKEW_TOLERANCE: f64 = 1e-12;

/// Relative pivot size below which the pfaffian is reported as exactly zero.
pub const PIVOT_EPS: f64 = 1e-14;

/// Largest dimension accepted by the direct-definition evaluator.
pub const DIRECT_MAX_DIM: usize = 8;

/// Dense skew-symmetric matrix of even dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMatrix<T: ComplexField<RealField = f64> = f64> {
    data: DMatrix<T>,
}

impl<T: ComplexField<RealField = f64>> SkewMatrix<T> {
    /// Validates skew-symmetry within [`SKEW_TOLERANCE`] (scaled by the
    /// largest entry when it exceeds one) and stores `(A - A^T) / 2`.
    pub fn new(a: DMatrix<T>) -> Result<Self> {
        Self::with_tolerance(a, SKEW_TOLERANCE)
    }

    pub fn with_tolerance(a: DMatrix<T>, tol: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: a.ncols(),
            });
        }
        if n % 2 == 1 {
            return Err(Error::OddDimension(n));
        }
        let scale = a.iter().map(|v| v.clone().modulus()).fold(1.0, f64::max);
        let mut deviation = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (a[(i, j)].clone() + a[(j, i)].clone()).modulus();
                deviation = deviation.max(d);
            }
        }
        if deviation > tol * scale || deviation.is_nan() {
            return Err(Error::NotSkew { deviation });
        }
        let half = T::from_f64(0.5).expect("0.5 is representable");
        let data = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                T::zero()
            } else {
                (a[(i, j)].clone() - a[(j, i)].clone()) * half.clone()
            }
        });
        Ok(Self { data })
    }

    /// Builds the matrix from its strict upper triangle `upper(i, j)`, `i < j`.
    pub fn from_upper<F: FnMut(usize, usize) -> T>(n: usize, mut upper: F) -> Result<Self> {
        if n % 2 == 1 {
            return Err(Error::OddDimension(n));
        }
        let mut data = DMatrix::<T>::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = upper(i, j);
                data[(j, i)] = -v.clone();
                data[(i, j)] = v;
            }
        }
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[(i, j)].clone()
    }

    /// Pfaffian by skew-symmetric Gaussian elimination with partial
    /// pivoting, `O(n^3)`.
    pub fn pfaffian(&self) -> T {
        pfaffian_elimination(self.data.clone())
    }

    /// Pfaffian from the signed sum over perfect matchings. Dimensions up to
    /// [`DIRECT_MAX_DIM`] only.
    pub fn pfaffian_direct(&self) -> Result<T> {
        let n = self.dim();
        if n > DIRECT_MAX_DIM {
            return Err(Error::DimensionTooLarge {
                dim: n,
                max: DIRECT_MAX_DIM,
            });
        }
        let idx: Vec<usize> = (0..n).collect();
        Ok(matching_sum(&self.data, &idx))
    }

    /// `B A B^T`, which is again skew-symmetric.
    pub fn congruence(&self, b: &DMatrix<T>) -> Result<Self> {
        if b.ncols() != self.dim() || b.nrows() % 2 == 1 {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                found: b.ncols(),
            });
        }
        Self::with_tolerance(b * &self.data * b.transpose(), 1e-9)
    }
}

fn matching_sum<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, idx: &[usize]) -> T {
    if idx.is_empty() {
        return T::one();
    }
    let first = idx[0];
    let mut total = T::zero();
    for k in 1..idx.len() {
        let rest: Vec<usize> = idx[1..]
            .iter()
            .enumerate()
            .filter(|(pos, _)| pos + 1 != k)
            .map(|(_, &v)| v)
            .collect();
        let term = a[(first, idx[k])].clone() * matching_sum(a, &rest);
        if k % 2 == 1 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

fn pfaffian_elimination<T: ComplexField<RealField = f64>>(mut a: DMatrix<T>) -> T {
    let n = a.nrows();
    if n == 0 {
        return T::one();
    }
    let scale = a.iter().map(|v| v.clone().modulus()).fold(0.0, f64::max);
    if scale == 0.0 {
        return T::zero();
    }
    let mut pf = T::one();
    let mut k = 0;
    while k + 1 < n {
        // pivot: largest entry in column k below the diagonal
        let mut kp = k + 1;
        let mut best = a[(k + 1, k)].clone().modulus();
        for r in (k + 2)..n {
            let m = a[(r, k)].clone().modulus();
            if m > best {
                best = m;
                kp = r;
            }
        }
        if best < PIVOT_EPS * scale {
            return T::zero();
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let pivot = a[(k, k + 1)].clone();
        pf *= pivot.clone();
        if k + 2 < n {
            let tau: Vec<T> = ((k + 2)..n).map(|j| a[(k, j)].clone() / pivot.clone()).collect();
            let col: Vec<T> = ((k + 2)..n).map(|i| a[(i, k + 1)].clone()).collect();
            for (ii, i) in ((k + 2)..n).enumerate() {
                for (jj, j) in ((k + 2)..n).enumerate() {
                    let upd = tau[ii].clone() * col[jj].clone() - col[ii].clone() * tau[jj].clone();
                    a[(i, j)] += upd;
                }
            }
        }
        k += 2;
    }
    pf
}

/// Pfaffian of a raw matrix; validates skew-symmetry first.
pub fn pfaffian<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> Result<T> {
    Ok(SkewMatrix::new(a.clone())?.pfaffian())
}

/// `J_N = I_{N/2} (x) [[0, 1], [-1, 0]]`.
pub fn symplectic_j(n: usize) -> Result<SkewMatrix<f64>> {
    SkewMatrix::from_upper(n, |i, j| if i % 2 == 0 && j == i + 1 { 1.0 } else { 0.0 })
}

/// Pairwise matrix of the de Bruijn formula,
/// `a_ij = int int sgn(y' - y) phi_i(y) phi_j(y') dy dy'`, evaluated as
/// `int phi_j(y') [2 F_i(y') - F_i(inf)] dy'` with `F_i` the running
/// integral of `phi_i`. Only `i < j` is integrated; the rest follows by
/// skew-symmetry.
pub fn debruijn_matrix(phis: &[&dyn Fn(f64) -> f64], quad: &QuadratureSpec) -> Result<SkewMatrix<f64>> {
    let n = phis.len();
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    let inner = QuadratureSpec {
        abs_tol: quad.abs_tol * 1e-2,
        ..*quad
    };
    let totals = phis
        .iter()
        .map(|phi| inner.integrate_line(|y| phi(y), &[]))
        .collect::<Result<Vec<_>>>()?;
    let mut data = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let phi_i = phis[i];
            let phi_j = phis[j];
            let v = quad.try_integrate_line(
                |y| {
                    let fj = phi_j(y);
                    if fj == 0.0 {
                        return Ok(0.0);
                    }
                    let f = inner.integrate_lower(|u| phi_i(u), y)?;
                    Ok(fj * (2.0 * f - totals[i]))
                },
                &[],
            );
            data[(i, j)] = v?;
            data[(j, i)] = -data[(i, j)];
        }
    }
    Ok(SkewMatrix { data })
}

/// Gram matrix `int phi_i(x) phibar_j(x) dx` of the Andreief formula.
pub fn andreief_matrix(
    phi: &[&dyn Fn(f64) -> f64],
    phibar: &[&dyn Fn(f64) -> f64],
    quad: &QuadratureSpec,
) -> Result<DMatrix<f64>> {
    if phi.len() != phibar.len() {
        return Err(Error::SizeMismatch {
            expected: phi.len(),
            found: phibar.len(),
        });
    }
    let n = phi.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = quad.integrate_line(|x| phi[i](x) * phibar[j](x), &[])?;
        }
    }
    Ok(m)
}
