//! One-dimensional quadrature: globally adaptive Gauss-Kronrod (10/21) with
//! mapped infinite intervals, and Gauss-Legendre node generation.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_868_309,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ...
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Globally adaptive Gauss-Kronrod 10/21.
    GaussKronrod,
    /// Fixed single-panel Gauss-Legendre rule with `nodes` points.
    GaussLegendre,
}

/// Quadrature settings shared by every integrating routine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub nodes: usize,
    pub abs_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::GaussKronrod,
            nodes: 21,
            abs_tol: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn new(scheme: Scheme, nodes: usize, abs_tol: f64) -> Result<Self> {
        let spec = Self {
            scheme,
            nodes,
            abs_tol,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn adaptive(abs_tol: f64) -> Self {
        Self {
            scheme: Scheme::GaussKronrod,
            nodes: 21,
            abs_tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 16 {
            return Err(Error::InvalidParameter(format!(
                "quadrature node count {} < 16",
                self.nodes
            )));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadrature tolerance {} must be positive",
                self.abs_tol
            )));
        }
        Ok(())
    }

    /// Integral of `f` over the finite interval `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        self.integrate_segment(&f, a, b, self.abs_tol)
    }

    /// Integral of `f` over the real line. `breakpoints` mark kinks or
    /// discontinuities of `f`; each segment between them is integrated
    /// separately, the two outer ones on mapped half-lines.
    pub fn integrate_line<F: Fn(f64) -> f64>(&self, f: F, breakpoints: &[f64]) -> Result<f64> {
        let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|x| x.is_finite()).collect();
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        if pts.is_empty() {
            pts.push(0.0);
        }
        let tol = self.abs_tol / (pts.len() + 1) as f64;
        let mut total = self.integrate_segment(&f, f64::NEG_INFINITY, pts[0], tol)?;
        for w in pts.windows(2) {
            total += self.integrate_segment(&f, w[0], w[1], tol)?;
        }
        total += self.integrate_segment(&f, pts[pts.len() - 1], f64::INFINITY, tol)?;
        Ok(total)
    }

    /// Integral over `[a, +inf)`.
    pub fn integrate_upper<F: Fn(f64) -> f64>(&self, f: F, a: f64) -> Result<f64> {
        self.integrate_segment(&f, a, f64::INFINITY, self.abs_tol)
    }

    /// Integral over `(-inf, b]`.
    pub fn integrate_lower<F: Fn(f64) -> f64>(&self, f: F, b: f64) -> Result<f64> {
        self.integrate_segment(&f, f64::NEG_INFINITY, b, self.abs_tol)
    }

    /// Like [`Self::integrate`] for a fallible integrand; the first error
    /// raised by `f` is returned.
    pub fn try_integrate<F: Fn(f64) -> Result<f64>>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        capture(|g| self.integrate(g, a, b), f)
    }

    pub fn try_integrate_line<F: Fn(f64) -> Result<f64>>(&self, f: F, breakpoints: &[f64]) -> Result<f64> {
        capture(|g| self.integrate_line(g, breakpoints), f)
    }

    pub fn try_integrate_upper<F: Fn(f64) -> Result<f64>>(&self, f: F, a: f64) -> Result<f64> {
        capture(|g| self.integrate_upper(g, a), f)
    }

    pub fn try_integrate_lower<F: Fn(f64) -> Result<f64>>(&self, f: F, b: f64) -> Result<f64> {
        capture(|g| self.integrate_lower(g, b), f)
    }

    fn integrate_segment<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        if a > b {
            return self.integrate_segment(f, b, a, tol).map(|v| -v);
        }
        match (a.is_finite(), b.is_finite()) {
            (true, true) => self.finite(f, a, b, tol),
            (true, false) => {
                // x = a + t / (1 - t), t in [0, 1)
                let g = |t: f64| {
                    let s = 1.0 - t;
                    let x = a + t / s;
                    if x.is_finite() {
                        f(x) / (s * s)
                    } else {
                        0.0
                    }
                };
                self.finite(&g, 0.0, 1.0, tol)
            }
            (false, true) => {
                let g = |t: f64| {
                    let s = 1.0 - t;
                    let x = b - t / s;
                    if x.is_finite() {
                        f(x) / (s * s)
                    } else {
                        0.0
                    }
                };
                self.finite(&g, 0.0, 1.0, tol)
            }
            (false, false) => {
                let lo = self.integrate_segment(f, f64::NEG_INFINITY, 0.0, tol / 2.0)?;
                let hi = self.integrate_segment(f, 0.0, f64::INFINITY, tol / 2.0)?;
                Ok(lo + hi)
            }
        }
    }

    fn finite<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
        match self.scheme {
            Scheme::GaussKronrod => adaptive_gauss_kronrod(f, a, b, tol),
            Scheme::GaussLegendre => {
                let (x, w) = gauss_legendre(self.nodes);
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                Ok(x.iter()
                    .zip(&w)
                    .map(|(xi, wi)| wi * f(mid + half * xi))
                    .sum::<f64>()
                    * half)
            }
        }
    }
}

fn capture<F, I>(integrate: I, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    I: FnOnce(&dyn Fn(f64) -> f64) -> Result<f64>,
{
    let first = RefCell::new(None);
    let g = |x: f64| match f(x) {
        Ok(v) => v,
        Err(e) => {
            first.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let value = integrate(&g);
    match first.into_inner() {
        Some(e) => Err(e),
        None => value,
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut abs_sum = WGK[10] * fc.abs();
    let mut fv = [(0.0, 0.0); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (1.0f64).min((200.0 * error / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Panel { a, b, value, error }
}

/// Globally adaptive Gauss-Kronrod 21 on a finite interval.
pub fn adaptive_gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    let mut panels = vec![gauss_kronrod_panel(f, a, b)];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        let total: f64 = panels.iter().map(|p| p.value).sum();
        if !total.is_finite() {
            return Err(Error::Domain("non-finite integrand".into()));
        }
        if total_err <= abs_tol {
            return Ok(total);
        }
        if panels.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureNotConverged {
                achieved: total_err,
                requested: abs_tol,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Interval can no longer be split in floating point.
            return Err(Error::QuadratureNotConverged {
                achieved: total_err,
                requested: abs_tol,
            });
        }
        panels.push(gauss_kronrod_panel(f, p.a, mid));
        panels.push(gauss_kronrod_panel(f, mid, p.b));
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|xi| mid + half * xi).collect(),
        w.iter().map(|wi| wi * half).collect(),
    )
}
