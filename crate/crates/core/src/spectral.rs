//! Discrete Fourier calculus on the uniform periodic grid over `[0, 2π)²`.
//!
//! Fields are sampled at `x_ij = (2πi/N, 2πj/N)` and stored row-major, so the
//! row index runs along `x1` and the column index along `x2`. Spectra use
//! real-to-complex storage: `N × (N/2 + 1)` coefficients, the first axis
//! holding `k1 ∈ [-N/2, N/2)` in FFT order and the second `k2 ∈ [0, N/2]`.
//!
//! Derivative symbols use the integer wavenumbers with the Nyquist value
//! `N/2` replaced by zero, which keeps odd derivatives of real fields real.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Side length of the periodic square.
pub const DOMAIN_LENGTH: f64 = 2.0 * PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Real-valued periodic field on the `N × N` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    values: Array2<f64>,
}

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self {
            values: Array2::from_elem((n, n), c),
        }
    }

    /// Sample `f(x1, x2)` at the grid points.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let h = DOMAIN_LENGTH / n as f64;
        Self {
            values: Array2::from_shape_fn((n, n), |(i, j)| f(i as f64 * h, j as f64 * h)),
        }
    }

    /// Wrap an existing square array.
    pub fn from_array(values: Array2<f64>) -> Result<Self> {
        let (r, c) = values.dim();
        if r != c {
            return Err(Error::Usage(format!("field must be square, got {r}x{c}")));
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn into_array(self) -> Array2<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.mapv(f),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            values: Zip::from(&self.values)
                .and(&other.values)
                .map_collect(|&a, &b| f(a, b)),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Uniform quadrature `Σ f · (2π/N)²`, summed in row-major order.
    pub fn integral(&self) -> f64 {
        let h = DOMAIN_LENGTH / self.n() as f64;
        self.values.iter().sum::<f64>() * h * h
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: Self) -> ScalarField {
        ScalarField {
            values: &self.values + &rhs.values,
        }
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: Self) -> ScalarField {
        ScalarField {
            values: &self.values - &rhs.values,
        }
    }
}

/// Pointwise product (not dealiased).
impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: Self) -> ScalarField {
        ScalarField {
            values: &self.values * &rhs.values,
        }
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.scale(rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scale(-1.0)
    }
}

/// Two scalar components along `x1` and `x2`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub x1: ScalarField,
    pub x2: ScalarField,
}

impl VectorField {
    pub fn new(x1: ScalarField, x2: ScalarField) -> Self {
        assert_eq!(x1.n(), x2.n(), "component grids differ");
        Self { x1, x2 }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(ScalarField::zeros(n), ScalarField::zeros(n))
    }

    pub fn n(&self) -> usize {
        self.x1.n()
    }

    /// Rotation by +90°: `v⊥ = (-v2, v1)`.
    pub fn perp(&self) -> Self {
        Self::new(-&self.x2, self.x1.clone())
    }

    /// Pointwise `v · w`.
    pub fn dot(&self, other: &Self) -> ScalarField {
        &(&self.x1 * &other.x1) + &(&self.x2 * &other.x2)
    }

    /// Pointwise `|v|²`.
    pub fn norm_sq(&self) -> ScalarField {
        self.dot(self)
    }

    /// Multiply both components by a scalar field pointwise.
    pub fn mul_scalar_field(&self, s: &ScalarField) -> Self {
        Self::new(&self.x1 * s, &self.x2 * s)
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self::new(f(&self.x1), f(&self.x2))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.x1.scale(c), self.x2.scale(c))
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.x1.max_abs().max(self.x2.max_abs())
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: Self) -> VectorField {
        VectorField::new(&self.x1 + &rhs.x1, &self.x2 + &rhs.x2)
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: Self) -> VectorField {
        VectorField::new(&self.x1 - &rhs.x1, &self.x2 - &rhs.x2)
    }
}

impl Mul<f64> for &VectorField {
    type Output = VectorField;
    fn mul(self, rhs: f64) -> VectorField {
        self.scale(rhs)
    }
}

/// Symmetric 2×2 tensor field stored as `(T11, T12 = T21, T22)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    pub t11: ScalarField,
    pub t12: ScalarField,
    pub t22: ScalarField,
}

impl SymTensorField {
    /// Pointwise Frobenius square `T:T = T11² + 2 T12² + T22²`.
    pub fn frobenius_sq(&self) -> ScalarField {
        let a = &self.t11 * &self.t11;
        let b = &self.t12 * &self.t12;
        let c = &self.t22 * &self.t22;
        a.zip_map(&b, |a, b| a + 2.0 * b).zip_map(&c, |ab, c| ab + c)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            t11: self.t11.scale(c),
            t12: self.t12.scale(c),
            t22: self.t22.scale(c),
        }
    }
}

impl Sub for &SymTensorField {
    type Output = SymTensorField;
    fn sub(self, rhs: Self) -> SymTensorField {
        SymTensorField {
            t11: &self.t11 - &rhs.t11,
            t12: &self.t12 - &rhs.t12,
            t22: &self.t22 - &rhs.t22,
        }
    }
}

/// Either rank of field accepted by [`SpectralWorkspace::differentiate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl Field {
    fn rank_name(&self) -> &'static str {
        match self {
            Field::Scalar(_) => "scalar",
            Field::Vector(_) => "vector",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffOp {
    Grad,
    Div,
    Laplacian,
    Bilaplacian,
    PerpGrad,
    DivPerp,
}

/// Pointwise magnitude used by [`SpectralWorkspace::lp_norm`].
pub trait Magnitude {
    fn magnitude(&self) -> ScalarField;
}

impl Magnitude for ScalarField {
    fn magnitude(&self) -> ScalarField {
        self.map(f64::abs)
    }
}

impl Magnitude for VectorField {
    fn magnitude(&self) -> ScalarField {
        self.norm_sq().map(f64::sqrt)
    }
}

impl Magnitude for Field {
    fn magnitude(&self) -> ScalarField {
        match self {
            Field::Scalar(s) => s.magnitude(),
            Field::Vector(v) => v.magnitude(),
        }
    }
}

/// Half-plane spectrum of a real field, shape `N × (N/2 + 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    coeffs: Array2<Complex64>,
}

impl Spectrum {
    pub fn zeros(n: usize) -> Self {
        Self {
            coeffs: Array2::zeros((n, n / 2 + 1)),
        }
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.mapv(|v| v * c),
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: f64, other: &Spectrum) {
        Zip::from(&mut self.coeffs)
            .and(&other.coeffs)
            .for_each(|a, &b| *a += b * c);
    }
}

/// Grid, wavenumbers, dealias mask and transform plans. Immutable after
/// construction; transforms allocate their own scratch, so one workspace can
/// be shared across threads.
pub struct SpectralWorkspace {
    n: usize,
    k1: Vec<i64>,
    k2: Vec<i64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    mask: Array2<bool>,
    row_fwd: Arc<dyn RealToComplex<f64>>,
    row_inv: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralWorkspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralWorkspace")
            .field("n", &self.n)
            .field("band", &self.band())
            .finish_non_exhaustive()
    }
}

impl SpectralWorkspace {
    /// Build the workspace for an even grid size `n >= 8`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::config(
                "N",
                format!("grid size must be even and at least 8, got {n}"),
            ));
        }
        let half = n / 2;
        let k1: Vec<i64> = (0..n)
            .map(|p| if p < half { p as i64 } else { p as i64 - n as i64 })
            .collect();
        let k2: Vec<i64> = (0..=half).map(|q| q as i64).collect();
        let nyq = half as i64;
        let deriv = |k: i64| if k.abs() == nyq { 0.0 } else { k as f64 };
        let d1 = k1.iter().map(|&k| deriv(k)).collect();
        let d2 = k2.iter().map(|&k| deriv(k)).collect();
        let band = (n / 3) as i64;
        let mask = Array2::from_shape_fn((n, half + 1), |(p, q)| {
            k1[p].abs().max(k2[q].abs()) <= band
        });

        let mut rplan = RealFftPlanner::<f64>::new();
        let mut cplan = FftPlanner::<f64>::new();
        Ok(Self {
            n,
            k1,
            k2,
            d1,
            d2,
            mask,
            row_fwd: rplan.plan_fft_forward(n),
            row_inv: rplan.plan_fft_inverse(n),
            col_fwd: cplan.plan_fft_forward(n),
            col_inv: cplan.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing `2π/N`.
    pub fn dx(&self) -> f64 {
        DOMAIN_LENGTH / self.n as f64
    }

    /// Largest retained `max(|k1|, |k2|)` after dealiasing, `floor(N/3)`.
    pub fn band(&self) -> usize {
        self.n / 3
    }

    /// Shape of the half-plane spectrum.
    pub fn spectrum_dim(&self) -> (usize, usize) {
        (self.n, self.n / 2 + 1)
    }

    /// Integer wavenumber of spectral slot `(p, q)`.
    pub fn wavenumber(&self, p: usize, q: usize) -> (i64, i64) {
        (self.k1[p], self.k2[q])
    }

    /// Wavenumber used in derivative symbols (Nyquist zeroed).
    pub fn deriv_wavenumber(&self, p: usize, q: usize) -> (f64, f64) {
        (self.d1[p], self.d2[q])
    }

    /// Whether slot `(p, q)` survives dealiasing.
    pub fn keeps(&self, p: usize, q: usize) -> bool {
        self.mask[[p, q]]
    }

    pub fn dealias_mask(&self) -> &Array2<bool> {
        &self.mask
    }

    fn check_grid(&self, n: usize) {
        assert_eq!(n, self.n, "field grid {n} does not match workspace grid {}", self.n);
    }

    pub fn forward(&self, f: &ScalarField) -> Spectrum {
        self.check_grid(f.n());
        let n = self.n;
        let nh = n / 2 + 1;
        let mut out = Array2::<Complex64>::zeros((n, nh));
        let mut row = vec![0.0; n];
        let mut rs = self.row_fwd.make_scratch_vec();
        for (i, src) in f.values.rows().into_iter().enumerate() {
            row.iter_mut().zip(src.iter()).for_each(|(d, s)| *d = *s);
            let mut dst = out.row_mut(i);
            self.row_fwd
                .process_with_scratch(&mut row, dst.as_slice_mut().unwrap(), &mut rs)
                .expect("row length matches plan");
        }
        let mut col = vec![Complex64::default(); n];
        let mut cs = vec![Complex64::default(); self.col_fwd.get_inplace_scratch_len()];
        for q in 0..nh {
            for p in 0..n {
                col[p] = out[[p, q]];
            }
            self.col_fwd.process_with_scratch(&mut col, &mut cs);
            for p in 0..n {
                out[[p, q]] = col[p];
            }
        }
        Spectrum { coeffs: out }
    }

    pub fn inverse(&self, s: &Spectrum) -> ScalarField {
        let n = self.n;
        let nh = n / 2 + 1;
        assert_eq!(s.coeffs.dim(), (n, nh), "spectrum shape mismatch");
        let mut work = s.coeffs.clone();
        let mut col = vec![Complex64::default(); n];
        let mut cs = vec![Complex64::default(); self.col_inv.get_inplace_scratch_len()];
        for q in 0..nh {
            for p in 0..n {
                col[p] = work[[p, q]];
            }
            self.col_inv.process_with_scratch(&mut col, &mut cs);
            for p in 0..n {
                work[[p, q]] = col[p];
            }
        }
        let norm = 1.0 / (n * n) as f64;
        let mut values = Array2::<f64>::zeros((n, n));
        let mut rs = self.row_inv.make_scratch_vec();
        let mut buf = vec![Complex64::default(); nh];
        for i in 0..n {
            buf.iter_mut().zip(work.row(i).iter()).for_each(|(d, s)| *d = *s);
            buf[0].im = 0.0;
            buf[nh - 1].im = 0.0;
            let mut dst = values.row_mut(i);
            self.row_inv
                .process_with_scratch(&mut buf, dst.as_slice_mut().unwrap(), &mut rs)
                .expect("row length matches plan");
        }
        values.mapv_inplace(|v| v * norm);
        ScalarField { values }
    }

    /// Multiply every coefficient by `symbol(d1, d2)` (derivative wavenumbers).
    fn apply(&self, s: &Spectrum, symbol: impl Fn(f64, f64) -> Complex64) -> Spectrum {
        let mut out = s.clone();
        for ((p, q), c) in out.coeffs.indexed_iter_mut() {
            *c *= symbol(self.d1[p], self.d2[q]);
        }
        out
    }

    fn apply_inv(&self, s: &Spectrum, symbol: impl Fn(f64, f64) -> Complex64) -> ScalarField {
        self.inverse(&self.apply(s, symbol))
    }

    pub fn grad(&self, f: &ScalarField) -> VectorField {
        let s = self.forward(f);
        VectorField::new(
            self.apply_inv(&s, |k1, _| I * k1),
            self.apply_inv(&s, |_, k2| I * k2),
        )
    }

    /// `∇⊥f = (-∂f/∂x2, ∂f/∂x1)`.
    pub fn perp_grad(&self, f: &ScalarField) -> VectorField {
        let s = self.forward(f);
        VectorField::new(
            self.apply_inv(&s, |_, k2| -I * k2),
            self.apply_inv(&s, |k1, _| I * k1),
        )
    }

    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        self.apply_inv(&self.forward(f), |k1, k2| (-(k1 * k1 + k2 * k2)).into())
    }

    pub fn bilaplacian(&self, f: &ScalarField) -> ScalarField {
        self.apply_inv(&self.forward(f), |k1, k2| {
            let k2sum = k1 * k1 + k2 * k2;
            (k2sum * k2sum).into()
        })
    }

    pub fn div(&self, v: &VectorField) -> ScalarField {
        let mut a = self.apply(&self.forward(&v.x1), |k1, _| I * k1);
        let b = self.apply(&self.forward(&v.x2), |_, k2| I * k2);
        a.add_scaled(1.0, &b);
        self.inverse(&a)
    }

    /// `div⊥(v) = -∂v1/∂x2 + ∂v2/∂x1`.
    pub fn div_perp(&self, v: &VectorField) -> ScalarField {
        let mut a = self.apply(&self.forward(&v.x1), |_, k2| -I * k2);
        let b = self.apply(&self.forward(&v.x2), |k1, _| I * k1);
        a.add_scaled(1.0, &b);
        self.inverse(&a)
    }

    /// Rank-checked dispatch over the first-order and Laplacian operators.
    pub fn differentiate(&self, f: &Field, op: DiffOp) -> Result<Field> {
        use DiffOp::*;
        match (f, op) {
            (Field::Scalar(s), Grad) => Ok(Field::Vector(self.grad(s))),
            (Field::Scalar(s), PerpGrad) => Ok(Field::Vector(self.perp_grad(s))),
            (Field::Scalar(s), Laplacian) => Ok(Field::Scalar(self.laplacian(s))),
            (Field::Scalar(s), Bilaplacian) => Ok(Field::Scalar(self.bilaplacian(s))),
            (Field::Vector(v), Div) => Ok(Field::Scalar(self.div(v))),
            (Field::Vector(v), DivPerp) => Ok(Field::Scalar(self.div_perp(v))),
            (f, op) => Err(Error::Usage(format!(
                "{op:?} is not defined on a {} field",
                f.rank_name()
            ))),
        }
    }

    /// `D(v) = ½(∇v + ∇vᵀ)`.
    pub fn sym_gradient(&self, v: &VectorField) -> SymTensorField {
        let s1 = self.forward(&v.x1);
        let s2 = self.forward(&v.x2);
        let mut off = self.apply(&s1, |_, k2| I * k2);
        off.add_scaled(1.0, &self.apply(&s2, |k1, _| I * k1));
        SymTensorField {
            t11: self.apply_inv(&s1, |k1, _| I * k1),
            t12: self.inverse(&off.scaled(0.5.into())),
            t22: self.apply_inv(&s2, |_, k2| I * k2),
        }
    }

    /// Row-wise divergence `(∂1 T11 + ∂2 T12, ∂1 T12 + ∂2 T22)`.
    pub fn div_tensor(&self, t: &SymTensorField) -> VectorField {
        let s11 = self.forward(&t.t11);
        let s12 = self.forward(&t.t12);
        let s22 = self.forward(&t.t22);
        let mut a = self.apply(&s11, |k1, _| I * k1);
        a.add_scaled(1.0, &self.apply(&s12, |_, k2| I * k2));
        let mut b = self.apply(&s12, |k1, _| I * k1);
        b.add_scaled(1.0, &self.apply(&s22, |_, k2| I * k2));
        VectorField::new(self.inverse(&a), self.inverse(&b))
    }

    /// Zero the coefficients outside the 2/3 band in place.
    pub fn dealias_spectrum(&self, s: &mut Spectrum) {
        Zip::from(&mut s.coeffs).and(&self.mask).for_each(|c, &keep| {
            if !keep {
                *c = Complex64::default();
            }
        });
    }

    pub fn dealias(&self, f: &ScalarField) -> ScalarField {
        let mut s = self.forward(f);
        self.dealias_spectrum(&mut s);
        self.inverse(&s)
    }

    pub fn dealias_vector(&self, v: &VectorField) -> VectorField {
        v.map(|c| self.dealias(c))
    }

    /// Pointwise product followed by dealiasing.
    pub fn product(&self, a: &ScalarField, b: &ScalarField) -> ScalarField {
        self.dealias(&(a * b))
    }

    /// Dealiased `v ⊗ v`.
    pub fn outer_self(&self, v: &VectorField) -> SymTensorField {
        SymTensorField {
            t11: self.product(&v.x1, &v.x1),
            t12: self.product(&v.x1, &v.x2),
            t22: self.product(&v.x2, &v.x2),
        }
    }

    /// Dealiased advective derivative `(v · ∇) f`.
    pub fn advect(&self, v: &VectorField, f: &ScalarField) -> ScalarField {
        let g = self.grad(f);
        self.dealias(&v.dot(&g))
    }

    /// `(Σ|f|^p (2π/N)²)^{1/p}`, or the max norm for `p = ∞`.
    pub fn lp_norm<F: Magnitude + ?Sized>(&self, f: &F, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Usage(format!("L^p exponent must be >= 1, got {p}")));
        }
        let mag = f.magnitude();
        self.check_grid(mag.n());
        if p.is_infinite() {
            return Ok(mag.max());
        }
        let h2 = self.dx() * self.dx();
        let sum: f64 = if p == 2.0 {
            mag.values.iter().map(|v| v * v).sum()
        } else {
            mag.values.iter().map(|v| v.powf(p)).sum()
        };
        Ok((sum * h2).powf(1.0 / p))
    }

    /// `∫ f² dx` evaluated from the spectrum (Parseval).
    pub fn parseval_l2_sq(&self, f: &ScalarField) -> f64 {
        let s = self.forward(f);
        let last = self.n / 2;
        let mut sum = 0.0;
        for ((_, q), c) in s.coeffs.indexed_iter() {
            let w = if q == 0 || q == last { 1.0 } else { 2.0 };
            sum += w * c.norm_sqr();
        }
        let n2 = (self.n * self.n) as f64;
        sum * DOMAIN_LENGTH * DOMAIN_LENGTH / (n2 * n2)
    }

    /// Largest coefficient magnitude outside the dealias band, relative to the largest overall.
    pub fn out_of_band_fraction(&self, f: &ScalarField) -> f64 {
        let s = self.forward(f);
        let mut outside: f64 = 0.0;
        let mut all: f64 = 0.0;
        Zip::from(&s.coeffs).and(&self.mask).for_each(|c, &keep| {
            let a = c.norm();
            all = all.max(a);
            if !keep {
                outside = outside.max(a);
            }
        });
        if all == 0.0 {
            0.0
        } else {
            outside / all
        }
    }
}
