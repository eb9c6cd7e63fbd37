//! Periodic grids, spectral transforms, differentiation, shifts, inner
//! products, norms, and dealiased pointwise products on the torus [-pi, pi).

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0} vs {1} points")]
    GridMismatch(usize, usize),
    #[error("potential order {order} does not fit on a grid with {n} points")]
    PotentialAliased { order: usize, n: usize },
}

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

static PLANS: Lazy<Mutex<HashMap<usize, PlanPair>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plans_for(n: usize) -> PlanPair {
    let mut map = PLANS.lock().unwrap();
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Uniform collocation grid x_j = -pi + 2 pi j / n with integer wavenumbers
/// k in {-n/2, ..., n/2 - 1} stored in FFT bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusGrid {
    n: usize,
    points: Vec<f64>,
    wavenumbers: Vec<i64>,
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self, FieldError> {
        if n < 16 || n % 2 != 0 {
            return Err(FieldError::InvalidGrid(format!(
                "n must be even and >= 16, got {n}"
            )));
        }
        let h = 2.0 * PI / n as f64;
        let points = (0..n).map(|j| -PI + h * j as f64).collect();
        let wavenumbers = (0..n)
            .map(|b| if b < n / 2 { b as i64 } else { b as i64 - n as i64 })
            .collect();
        Ok(Self {
            n,
            points,
            wavenumbers,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Wavenumber of FFT bin `b`.
    pub fn wavenumber(&self, b: usize) -> i64 {
        self.wavenumbers[b]
    }

    pub fn wavenumbers(&self) -> &[i64] {
        &self.wavenumbers
    }

    /// Index of the sample at -x_j, i.e. the reflection x -> -x.
    pub fn reflect_index(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }
}

/// Complex-valued 2 pi-periodic function held in dual physical/spectral
/// representation. Both representations are kept consistent at all times;
/// constructors perform the transform eagerly.
///
/// Coefficients follow u(x) = sum_k c_k e^{ikx} with forward normalization
/// 1/n, stored in FFT bin order (see [`TorusGrid::wavenumber`]).
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<TorusGrid>,
    values: Vec<Complex64>,
    coeffs: Vec<Complex64>,
}

impl Field {
    pub fn from_values(grid: Arc<TorusGrid>, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.n());
        let coeffs = forward(&grid, &values);
        Self {
            grid,
            values,
            coeffs,
        }
    }

    pub fn from_coeffs(grid: Arc<TorusGrid>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.n());
        let values = inverse(&grid, &coeffs);
        Self {
            grid,
            values,
            coeffs,
        }
    }

    pub fn from_fn(grid: Arc<TorusGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self::from_values(grid, values)
    }

    pub fn zeros(grid: Arc<TorusGrid>) -> Self {
        let n = grid.n();
        Self {
            grid,
            values: vec![Complex64::ZERO; n],
            coeffs: vec![Complex64::ZERO; n],
        }
    }

    pub fn constant(grid: Arc<TorusGrid>, c: Complex64) -> Self {
        Self::from_values(grid.clone(), vec![c; grid.n()])
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Spectral derivative of order 1 or 2. The Nyquist mode is zeroed for
    /// odd orders so that derivatives of real fields stay real.
    pub fn derivative(&self, order: u32) -> Field {
        assert!(order == 1 || order == 2, "order must be 1 or 2");
        let n = self.n();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(b, &c)| {
                let k = self.grid.wavenumber(b);
                if order % 2 == 1 && b == n / 2 {
                    return Complex64::ZERO;
                }
                let ik = Complex64::new(0.0, k as f64);
                c * ik.powu(order)
            })
            .collect();
        Field::from_coeffs(self.grid.clone(), coeffs)
    }

    /// u(x - sigma): coefficient k is multiplied by e^{-ik sigma}.
    pub fn shift(&self, sigma: f64) -> Field {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(b, &c)| {
                let k = self.grid.wavenumber(b) as f64;
                c * Complex64::new(0.0, -k * sigma).exp()
            })
            .collect();
        Field::from_coeffs(self.grid.clone(), coeffs)
    }

    /// u(-x).
    pub fn reflect(&self) -> Field {
        let n = self.n();
        let values = (0..n)
            .map(|j| self.values[self.grid.reflect_index(j)])
            .collect();
        Field::from_values(self.grid.clone(), values)
    }

    pub fn conj(&self) -> Field {
        let values = self.values.iter().map(|v| v.conj()).collect();
        Field::from_values(self.grid.clone(), values)
    }

    pub fn scale(&self, a: Complex64) -> Field {
        let values = self.values.iter().map(|v| v * a).collect();
        Field::from_values(self.grid.clone(), values)
    }

    pub fn add(&self, other: &Field) -> Field {
        assert_eq!(self.n(), other.n());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Field::from_values(self.grid.clone(), values)
    }

    pub fn sub(&self, other: &Field) -> Field {
        assert_eq!(self.n(), other.n());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Field::from_values(self.grid.clone(), values)
    }

    /// Sobolev norm (sum_k (1 + k^2)^s |c_k|^2 * 2 pi)^{1/2} for s in {0, 1, 2}.
    pub fn sobolev_norm(&self, s: u32) -> f64 {
        assert!(s <= 2, "s must be 0, 1 or 2");
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(b, c)| {
                let k2 = (self.grid.wavenumber(b) as f64).powi(2);
                (1.0 + k2).powi(s as i32) * c.norm_sqr()
            })
            .sum();
        (sum * 2.0 * PI).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0)
    }
}

/// Re <f, g> = Re sum_j f(x_j) conj(g(x_j)) * (2 pi / n). The trapezoid rule,
/// exact for band-limited integrands on the uniform periodic grid.
pub fn inner_product(f: &Field, g: &Field) -> Result<f64, FieldError> {
    if f.n() != g.n() {
        return Err(FieldError::GridMismatch(f.n(), g.n()));
    }
    let h = f.grid().spacing();
    let s: Complex64 = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a * b.conj())
        .sum();
    Ok(s.re * h)
}

/// Triple pointwise product f*g*h evaluated on a grid zero-padded by factor
/// 3/2 and truncated back; cubic aliasing is eliminated for inputs supported
/// on |k| <= n/3.
pub fn dealiased_product(f: &Field, g: &Field, h: &Field) -> Result<Field, FieldError> {
    if f.n() != g.n() || g.n() != h.n() {
        return Err(FieldError::GridMismatch(f.n(), g.n().max(h.n())));
    }
    let n = f.n();
    let mut m = 3 * n / 2;
    if m % 2 != 0 {
        m += 1;
    }
    let pf = pad_values(f, m);
    let pg = pad_values(g, m);
    let ph = pad_values(h, m);
    let prod: Vec<Complex64> = pf
        .iter()
        .zip(&pg)
        .zip(&ph)
        .map(|((a, b), c)| a * b * c)
        .collect();
    let big = forward_raw(m, &prod);
    let coeffs = truncate_spectrum(&big, n);
    Ok(Field::from_coeffs(f.grid().clone(), coeffs))
}

fn pad_values(f: &Field, m: usize) -> Vec<Complex64> {
    inverse_raw(m, &pad_spectrum(f.coeffs(), m))
}

/// Zero-pad a spectrum from n to m > n bins. The unpaired Nyquist
/// coefficient is split evenly between the +-n/2 bins, which keeps real
/// fields real and even fields even under interpolation.
pub(crate) fn pad_spectrum(coeffs: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = coeffs.len();
    debug_assert!(m >= n);
    let mut big = vec![Complex64::ZERO; m];
    for b in 0..n {
        let k = if b < n / 2 { b as i64 } else { b as i64 - n as i64 };
        if k == -(n as i64) / 2 && m > n {
            let half = coeffs[b] * 0.5;
            big[(k + m as i64) as usize] += half;
            big[(n / 2) as usize] += half;
        } else {
            let bb = if k >= 0 { k as usize } else { (k + m as i64) as usize };
            big[bb] = coeffs[b];
        }
    }
    big
}

/// Restrict an m-bin spectrum to n < m bins; the +-n/2 contributions land in
/// the single Nyquist bin they alias to on the coarse grid.
pub(crate) fn truncate_spectrum(big: &[Complex64], n: usize) -> Vec<Complex64> {
    let m = big.len();
    debug_assert!(m >= n);
    (0..n)
        .map(|b| {
            let k = if b < n / 2 { b as i64 } else { b as i64 - n as i64 };
            if k == -(n as i64) / 2 && m > n {
                big[(k + m as i64) as usize] + big[(n / 2) as usize]
            } else {
                let bb = if k >= 0 { k as usize } else { (k + m as i64) as usize };
                big[bb]
            }
        })
        .collect()
}

// Forward transform with 1/n normalization in the e^{ikx} basis on
// x_j = -pi + 2 pi j / n; the shift of origin contributes a factor (-1)^k.
fn forward(grid: &TorusGrid, values: &[Complex64]) -> Vec<Complex64> {
    forward_raw(grid.n(), values)
}

pub(crate) fn forward_raw(n: usize, values: &[Complex64]) -> Vec<Complex64> {
    let (fwd, _) = plans_for(n);
    let mut buf = values.to_vec();
    fwd.process(&mut buf);
    let inv_n = 1.0 / n as f64;
    for (b, c) in buf.iter_mut().enumerate() {
        let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
        *c *= sign * inv_n;
    }
    buf
}

fn inverse(grid: &TorusGrid, coeffs: &[Complex64]) -> Vec<Complex64> {
    inverse_raw(grid.n(), coeffs)
}

pub(crate) fn inverse_raw(n: usize, coeffs: &[Complex64]) -> Vec<Complex64> {
    let (_, inv) = plans_for(n);
    let mut buf: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(b, &c)| if b % 2 == 0 { c } else { -c })
        .collect();
    inv.process(&mut buf);
    buf
}

/// Finite trigonometric series V(x) = mean + sum_m (a_m cos(mx) + b_m sin(mx)),
/// evaluable exactly at any shifted argument.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PotentialSpec {
    pub mean: f64,
    #[serde(default)]
    pub cosine_coeffs: Vec<f64>,
    #[serde(default)]
    pub sine_coeffs: Vec<f64>,
}

impl PotentialSpec {
    pub fn constant(c: f64) -> Self {
        Self {
            mean: c,
            cosine_coeffs: Vec::new(),
            sine_coeffs: Vec::new(),
        }
    }

    /// V(x) = a0 + a1 cos x, the shape used throughout the experiments.
    pub fn mean_plus_cosine(a0: f64, a1: f64) -> Self {
        Self {
            mean: a0,
            cosine_coeffs: vec![a1],
            sine_coeffs: Vec::new(),
        }
    }

    /// Truncation order M of the series.
    pub fn order(&self) -> usize {
        self.cosine_coeffs.len().max(self.sine_coeffs.len())
    }

    pub fn check_grid(&self, grid: &TorusGrid) -> Result<(), FieldError> {
        if self.order() >= grid.n() / 2 {
            return Err(FieldError::PotentialAliased {
                order: self.order(),
                n: grid.n(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = self.mean;
        for (i, a) in self.cosine_coeffs.iter().enumerate() {
            v += a * ((i + 1) as f64 * x).cos();
        }
        for (i, b) in self.sine_coeffs.iter().enumerate() {
            v += b * ((i + 1) as f64 * x).sin();
        }
        v
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        let mut v = 0.0;
        for (i, a) in self.cosine_coeffs.iter().enumerate() {
            let m = (i + 1) as f64;
            v -= a * m * (m * x).sin();
        }
        for (i, b) in self.sine_coeffs.iter().enumerate() {
            let m = (i + 1) as f64;
            v += b * m * (m * x).cos();
        }
        v
    }

    /// Antiderivative of V - mean from -pi to x; 2 pi-periodic by construction.
    pub fn integral_of_oscillation(&self, x: f64) -> f64 {
        let mut v = 0.0;
        for (i, a) in self.cosine_coeffs.iter().enumerate() {
            let m = (i + 1) as f64;
            v += a / m * (m * x).sin();
        }
        for (i, b) in self.sine_coeffs.iter().enumerate() {
            let m = (i + 1) as f64;
            let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
            v += b / m * (sign - (m * x).cos());
        }
        v
    }

    pub fn sample(&self, grid: &TorusGrid) -> Vec<f64> {
        grid.points().iter().map(|&x| self.eval(x)).collect()
    }

    pub fn sample_deriv(&self, grid: &TorusGrid) -> Vec<f64> {
        grid.points().iter().map(|&x| self.eval_deriv(x)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        // crude but safe bound: |mean| + sum |coeffs|
        self.mean.abs()
            + self.cosine_coeffs.iter().map(|a| a.abs()).sum::<f64>()
            + self.sine_coeffs.iter().map(|b| b.abs()).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(n: usize) -> Arc<TorusGrid> {
        Arc::new(TorusGrid::new(n).unwrap())
    }

    #[test]
    fn grid_rejects_odd_and_small() {
        assert!(TorusGrid::new(15).is_err());
        assert!(TorusGrid::new(8).is_err());
        assert!(TorusGrid::new(16).is_ok());
    }

    #[test]
    fn grid_points_spacing() {
        let g = grid(32);
        let h = g.spacing();
        for j in 1..32 {
            assert_relative_eq!(g.points()[j] - g.points()[j - 1], h, epsilon = 1e-15);
        }
        assert_eq!(g.points()[0], -PI);
    }

    #[test]
    fn constant_field_concentrates_at_zero_mode() {
        let g = grid(32);
        let c = Complex64::new(1.5, -0.5);
        let f = Field::constant(g, c);
        assert!((f.coeffs()[0] - c).norm() < 1e-14);
        for b in 1..32 {
            assert!(f.coeffs()[b].norm() < 1e-14);
        }
    }

    #[test]
    fn pure_mode_lands_in_single_bin() {
        let g = grid(32);
        let f = Field::from_fn(g, |x| Complex64::new(0.0, 3.0 * x).exp());
        for b in 0..32 {
            let expect = if f.grid().wavenumber(b) == 3 { 1.0 } else { 0.0 };
            assert!(
                (f.coeffs()[b] - Complex64::new(expect, 0.0)).norm() < 1e-13,
                "bin {b}"
            );
        }
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = grid(32);
        let f = Field::constant(g, Complex64::new(2.0, 1.0));
        for order in [1, 2] {
            let d = f.derivative(order);
            assert!(d.l2_norm() < 1e-14);
        }
    }

    #[test]
    fn derivative_of_sin_is_cos() {
        let g = grid(64);
        let f = Field::from_fn(g.clone(), |x| Complex64::new(x.sin(), 0.0));
        let d = f.derivative(1);
        let max_err = g
            .points()
            .iter()
            .zip(d.values())
            .map(|(&x, v)| (v - Complex64::new(x.cos(), 0.0)).norm())
            .fold(0.0, f64::max)
            ;
        assert!(max_err < 1e-12, "max err {max_err}");
    }

    #[test]
    fn second_derivative_of_pure_mode() {
        let g = grid(32);
        let f = Field::from_fn(g, |x| Complex64::new(0.0, 3.0 * x).exp());
        let d2 = f.derivative(2);
        let err = d2.sub(&f.scale(Complex64::new(-9.0, 0.0))).l2_norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn shift_of_cos_by_half_pi_is_sin() {
        let g = grid(64);
        let f = Field::from_fn(g.clone(), |x| Complex64::new(x.cos(), 0.0));
        let s = f.shift(PI / 2.0);
        let expect = Field::from_fn(g, |x| Complex64::new(x.sin(), 0.0));
        assert!(s.sub(&expect).l2_norm() < 1e-12);
    }

    #[test]
    fn inner_product_trivia() {
        let g = grid(32);
        let one = Field::constant(g.clone(), Complex64::ONE);
        assert_relative_eq!(
            inner_product(&one, &one).unwrap(),
            2.0 * PI,
            epsilon = 1e-12
        );
        let c = Field::from_fn(g.clone(), |x| Complex64::new(x.cos(), 0.0));
        let s = Field::from_fn(g.clone(), |x| Complex64::new(x.sin(), 0.0));
        assert!(inner_product(&c, &s).unwrap().abs() < 1e-13);
        let e = Field::from_fn(g, |x| Complex64::new(0.0, x).exp());
        assert_relative_eq!(inner_product(&e, &e).unwrap(), 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn inner_product_grid_mismatch_errors() {
        let f = Field::constant(grid(32), Complex64::ONE);
        let g = Field::constant(grid(64), Complex64::ONE);
        assert!(inner_product(&f, &g).is_err());
    }

    #[test]
    fn dealiased_product_trivia() {
        let g = grid(32);
        let one = Field::constant(g.clone(), Complex64::ONE);
        let p = dealiased_product(&one, &one, &one).unwrap();
        assert!(p.sub(&one).l2_norm() < 1e-13);

        let e = Field::from_fn(g.clone(), |x| Complex64::new(0.0, x).exp());
        let p3 = dealiased_product(&e, &e, &e).unwrap();
        let expect = Field::from_fn(g, |x| Complex64::new(0.0, 3.0 * x).exp());
        assert!(p3.sub(&expect).l2_norm() < 1e-12);
    }

    /// Brute-force spectral convolution of the triple product, the oracle for
    /// the dealiasing check: (f*g*h)_k = sum_{k1+k2+k3=k} f_{k1} g_{k2} h_{k3}.
    fn convolution_oracle(f: &Field, g: &Field, h: &Field) -> Vec<Complex64> {
        let n = f.n();
        let half = n as i64 / 2;
        let idx = |k: i64| -> usize {
            if k >= 0 {
                k as usize
            } else {
                (k + n as i64) as usize
            }
        };
        let mut out = vec![Complex64::ZERO; n];
        for k in -half..half {
            let mut acc = Complex64::ZERO;
            for k1 in -half..half {
                for k2 in -half..half {
                    let k3 = k - k1 - k2;
                    if k3 < -half || k3 >= half {
                        continue;
                    }
                    acc += f.coeffs()[idx(k1)] * g.coeffs()[idx(k2)] * h.coeffs()[idx(k3)];
                }
            }
            out[idx(k)] = acc;
        }
        out
    }

    #[test]
    fn dealiased_product_matches_convolution_oracle() {
        let g = grid(32);
        // random band-limited inputs supported on |k| <= n/3
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut mk = |_: usize| {
            let mut coeffs = vec![Complex64::ZERO; 32];
            for k in -10i64..=10 {
                let b = if k >= 0 { k as usize } else { (k + 32) as usize };
                coeffs[b] = Complex64::new(next(), next());
            }
            Field::from_coeffs(g.clone(), coeffs)
        };
        let (f, gg, h) = (mk(0), mk(1), mk(2));
        let fast = dealiased_product(&f, &gg, &h).unwrap();
        let oracle = convolution_oracle(&f, &gg, &h);
        let err: f64 = fast
            .coeffs()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "max coeff err {err}");
    }

    #[test]
    fn sobolev_norms_trivia() {
        let g = grid(32);
        let one = Field::constant(g.clone(), Complex64::ONE);
        assert_relative_eq!(one.sobolev_norm(0), (2.0 * PI).sqrt(), epsilon = 1e-12);
        let e = Field::from_fn(g, |x| Complex64::new(0.0, x).exp());
        assert_relative_eq!(e.sobolev_norm(1), (4.0 * PI).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn potential_eval_and_derivative() {
        let v = PotentialSpec::mean_plus_cosine(0.1, 0.5);
        assert_relative_eq!(v.eval(0.0), 0.6);
        assert_relative_eq!(v.eval_deriv(1.0), -0.5 * 1f64.sin(), epsilon = 1e-15);
        let g = TorusGrid::new(32).unwrap();
        assert!(v.check_grid(&g).is_ok());
        let mut big = PotentialSpec::constant(0.0);
        big.cosine_coeffs = vec![0.0; 16];
        assert!(big.check_grid(&g).is_err());
    }

    #[test]
    fn potential_integral_is_periodic_and_consistent() {
        let v = PotentialSpec {
            mean: 0.3,
            cosine_coeffs: vec![0.5, -0.2],
            sine_coeffs: vec![0.1],
        };
        assert!(v.integral_of_oscillation(-PI).abs() < 1e-15);
        assert!((v.integral_of_oscillation(PI) - v.integral_of_oscillation(-PI)).abs() < 1e-13);
        // numeric check of d/dx integral = V - mean
        let x0 = 0.7;
        let d = 1e-6;
        let fd =
            (v.integral_of_oscillation(x0 + d) - v.integral_of_oscillation(x0 - d)) / (2.0 * d);
        assert_relative_eq!(fd, v.eval(x0) - v.mean, epsilon = 1e-8);
    }

    proptest! {
        #[test]
        fn roundtrip_is_identity(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 32)) {
            let g = grid(32);
            let values: Vec<Complex64> = vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            let f = Field::from_values(g.clone(), values.clone());
            let back = Field::from_coeffs(g, f.coeffs().to_vec());
            let scale = f.l2_norm().max(1e-12);
            let err = f.sub(&back).l2_norm() / scale;
            prop_assert!(err < 1e-12);
        }

        #[test]
        fn parseval_holds(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 32)) {
            let g = grid(32);
            let values: Vec<Complex64> = vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            let f = Field::from_values(g.clone(), values);
            let phys = inner_product(&f, &f).unwrap().sqrt();
            let spec = f.l2_norm();
            prop_assert!((phys - spec).abs() <= 1e-12 * spec.max(1.0));
        }

        #[test]
        fn shift_group_property(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 32), a in -3.0f64..3.0) {
            let g = grid(32);
            let values: Vec<Complex64> = vals.iter().map(|&(x, y)| Complex64::new(x, y)).collect();
            let f = Field::from_values(g, values);
            let back = f.shift(a).shift(-a);
            prop_assert!(f.sub(&back).l2_norm() < 1e-12 * f.l2_norm().max(1.0));
            prop_assert!(f.shift(0.0).sub(&f).l2_norm() < 1e-14);
        }

        #[test]
        fn derivative_commutes_with_shift(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 32), a in -3.0f64..3.0) {
            let g = grid(32);
            let values: Vec<Complex64> = vals.iter().map(|&(x, y)| Complex64::new(x, y)).collect();
            let f = Field::from_values(g, values);
            let lhs = f.shift(a).derivative(1);
            let rhs = f.derivative(1).shift(a);
            prop_assert!(lhs.sub(&rhs).l2_norm() < 1e-12 * f.l2_norm().max(1.0));
        }

        #[test]
        fn inner_product_symmetric_bilinear(
            va in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
            vb in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
            alpha in -2.0f64..2.0,
        ) {
            let g = grid(16);
            let f = Field::from_values(g.clone(), va.iter().map(|&(x, y)| Complex64::new(x, y)).collect());
            let h = Field::from_values(g, vb.iter().map(|&(x, y)| Complex64::new(x, y)).collect());
            let fg = inner_product(&f, &h).unwrap();
            let gf = inner_product(&h, &f).unwrap();
            prop_assert!((fg - gf).abs() < 1e-12);
            let scaled = inner_product(&f.scale(Complex64::new(alpha, 0.0)), &h).unwrap();
            prop_assert!((scaled - alpha * fg).abs() < 1e-10);
        }
    }
}
