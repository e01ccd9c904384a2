//! Spectral Poisson solve `-ΔV = f` with `V = 0` on the walls `x1 = 0, L`
//! and periodicity in `x2`.
//!
//! The basis is `sin(k1 π x1 / L) e^{i 2π k2 x2 / L}`: a DST-I along the
//! `n1 - 2` interior rows and a DFT along `x2`. Derivatives in `x1` of the sine
//! series are evaluated as the matching cosine series, so `E2 = -∂x2 V`
//! vanishes on the walls to rounding.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Field, Grid};

/// A pair of fields, e.g. the electric field `(E1, E2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub c1: Field,
    pub c2: Field,
}

/// `E = -∇V`.
pub type ElectricField = VectorField;

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            c1: Field::zeros(grid),
            c2: Field::zeros(grid),
        }
    }

    /// `A⊥ = (A2, -A1)`.
    pub fn perp(&self) -> VectorField {
        VectorField {
            c1: self.c2.clone(),
            c2: self.c1.scaled(-1.0),
        }
    }

    pub fn scaled(&self, s: f64) -> VectorField {
        VectorField {
            c1: self.c1.scaled(s),
            c2: self.c2.scaled(s),
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.c1
            .data()
            .iter()
            .zip(self.c2.data())
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }
}

/// `∫ |E|^2` over the slab.
pub fn field_energy(e: &ElectricField) -> f64 {
    e.c1.norm2_squared() + e.c2.norm2_squared()
}

/// Sine/Fourier coefficients, indexed `[(k1 - 1) * n2 + m]`.
struct Spectrum {
    coeffs: Vec<Complex64>,
}

/// Precomputed transforms and Laplacian eigenvalues for one grid.
pub struct SpectralPlan {
    grid: Grid,
    /// Number of sine modes, `n1 - 2`.
    modes: usize,
    fft_x2: Arc<dyn Fft<f64>>,
    ifft_x2: Arc<dyn Fft<f64>>,
    /// Length `2 (n1 - 1)`, shared by the DST-I and DCT-I.
    fft_ext: Arc<dyn Fft<f64>>,
    /// `π² (k1² + 4 k2²) / L²`, same layout as [`Spectrum`].
    eigenvalues: Vec<f64>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl SpectralPlan {
    pub fn new(grid: Grid) -> Self {
        let n2 = grid.n2();
        let modes = grid.n1() - 2;
        let mut planner = FftPlanner::new();
        let fft_x2 = planner.plan_fft_forward(n2);
        let ifft_x2 = planner.plan_fft_inverse(n2);
        let fft_ext = planner.plan_fft_forward(2 * (grid.n1() - 1));

        let l2 = grid.box_len() * grid.box_len();
        let mut eigenvalues = Vec::with_capacity(modes * n2);
        for k1 in 1..=modes {
            for m in 0..n2 {
                let k2 = wavenumber(m, n2) as f64;
                eigenvalues.push(PI * PI * ((k1 * k1) as f64 + 4.0 * k2 * k2) / l2);
            }
        }
        Self {
            grid,
            modes,
            fft_x2,
            ifft_x2,
            fft_ext,
            eigenvalues,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Laplacian eigenvalue of `sin(k1 π x1 / L) e^{i 2π k2 x2 / L}`.
    pub fn eigenvalue(&self, k1: usize, k2: i64) -> f64 {
        let l = self.grid.box_len();
        PI * PI * ((k1 * k1) as f64 + 4.0 * (k2 * k2) as f64) / (l * l)
    }

    /// Smallest eigenvalue, `π² / L²`. Every sine mode has `k1 >= 1`, so none vanishes.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `-ΔV = charge`. Boundary rows of `charge` are ignored; `V` is
    /// exactly zero on both walls.
    pub fn solve_potential(&self, charge: &Field) -> Field {
        debug_assert_eq!(charge.grid(), &self.grid);
        let mut spec = self.forward(charge);
        for (c, lam) in spec.coeffs.iter_mut().zip(&self.eigenvalues) {
            *c /= *lam;
        }
        self.eval_sine(&spec)
    }

    /// Spectral `Δf` of the sine-expandable part of `f`.
    pub fn apply_laplacian(&self, f: &Field) -> Field {
        let mut spec = self.forward(f);
        for (c, lam) in spec.coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= -*lam;
        }
        self.eval_sine(&spec)
    }

    /// `E = -∇V` for a potential satisfying the wall condition.
    pub fn electric_field(&self, potential: &Field) -> ElectricField {
        let spec = self.forward(potential);
        self.gradient_fields(&spec, -1.0)
    }

    /// Solve and differentiate in one pass: `(V, E)` for `-ΔV = charge`.
    pub fn potential_and_field(&self, charge: &Field) -> (Field, ElectricField) {
        let mut spec = self.forward(charge);
        for (c, lam) in spec.coeffs.iter_mut().zip(&self.eigenvalues) {
            *c /= *lam;
        }
        let v = self.eval_sine(&spec);
        let e = self.gradient_fields(&spec, -1.0);
        (v, e)
    }

    /// Electric field generated by `charge`.
    pub fn field_from_charge(&self, charge: &Field) -> ElectricField {
        self.potential_and_field(charge).1
    }

    /// Spectral divergence of `E⊥ = (E2, -E1)`. `∂x1 E2` goes through a sine
    /// transform of `E2`, `∂x2 E1` through row-wise Fourier derivatives.
    pub fn perp_divergence(&self, e: &ElectricField) -> Field {
        let spec = self.forward(&e.c2);
        let de2 = self.eval_cosine(&self.scale_k1(&spec, 1.0));
        let de1 = self.d_dx2(&e.c1);
        &de2 - &de1
    }

    /// Row-wise Fourier derivative in `x2`; the Nyquist mode is dropped.
    pub fn d_dx2(&self, f: &Field) -> Field {
        let n2 = self.grid.n2();
        let l = self.grid.box_len();
        let mut out = Field::zeros(self.grid);
        let mut buf = vec![Complex64::new(0.0, 0.0); n2];
        for i in 0..self.grid.n1() {
            for (b, &v) in buf.iter_mut().zip(f.row(i)) {
                *b = Complex64::new(v, 0.0);
            }
            self.fft_x2.process(&mut buf);
            for (m, b) in buf.iter_mut().enumerate() {
                let k2 = wavenumber(m, n2);
                let omega = if 2 * m == n2 {
                    0.0
                } else {
                    2.0 * PI * k2 as f64 / l
                };
                *b *= Complex64::new(0.0, omega / n2 as f64);
            }
            self.ifft_x2.process(&mut buf);
            let row = &mut out.data_mut()[i * n2..(i + 1) * n2];
            for (o, b) in row.iter_mut().zip(&buf) {
                *o = b.re;
            }
        }
        out
    }

    /// `f(x1, x2 + shift)`, by exact phase rotation of each row's Fourier
    /// series. The Nyquist term keeps only its resolvable cosine part.
    pub fn shift_x2(&self, f: &Field, shift: f64) -> Field {
        let n2 = self.grid.n2();
        let l = self.grid.box_len();
        let phases: Vec<Complex64> = (0..n2)
            .map(|m| {
                Complex64::from_polar(
                    1.0 / n2 as f64,
                    2.0 * PI * wavenumber(m, n2) as f64 * shift / l,
                )
            })
            .collect();
        let mut out = Field::zeros(self.grid);
        out.data_mut()
            .par_chunks_mut(n2)
            .zip(f.data().par_chunks(n2))
            .for_each(|(row, src)| {
                let mut buf: Vec<Complex64> = src.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                self.fft_x2.process(&mut buf);
                for (b, p) in buf.iter_mut().zip(&phases) {
                    *b *= p;
                }
                self.ifft_x2.process(&mut buf);
                for (o, b) in row.iter_mut().zip(&buf) {
                    *o = b.re;
                }
            });
        out
    }

    fn gradient_fields(&self, spec: &Spectrum, sign: f64) -> ElectricField {
        let e1 = self.eval_cosine(&self.scale_k1(spec, sign));
        let n2 = self.grid.n2();
        let l = self.grid.box_len();
        let mut d2 = Spectrum {
            coeffs: spec.coeffs.clone(),
        };
        for k1 in 0..self.modes {
            for m in 0..n2 {
                let omega = if 2 * m == n2 {
                    0.0
                } else {
                    2.0 * PI * wavenumber(m, n2) as f64 / l
                };
                d2.coeffs[k1 * n2 + m] *= Complex64::new(0.0, sign * omega);
            }
        }
        let e2 = self.eval_sine(&d2);
        VectorField { c1: e1, c2: e2 }
    }

    /// Multiplies every coefficient by `s k1 π / L`.
    fn scale_k1(&self, spec: &Spectrum, s: f64) -> Spectrum {
        let n2 = self.grid.n2();
        let l = self.grid.box_len();
        let mut out = Spectrum {
            coeffs: spec.coeffs.clone(),
        };
        for k1 in 0..self.modes {
            let f = s * (k1 + 1) as f64 * PI / l;
            for c in &mut out.coeffs[k1 * n2..(k1 + 1) * n2] {
                *c *= f;
            }
        }
        out
    }

    /// Interior rows -> coefficients `c` with `f = Σ c sin(k1 π i / M) e^{2πi m j / n2}`.
    fn forward(&self, f: &Field) -> Spectrum {
        let n2 = self.grid.n2();
        let n = self.modes;
        let m_len = (n + 1) as f64;
        // x2 transform of each interior row
        let mut rows = vec![Complex64::new(0.0, 0.0); n * n2];
        for i in 1..=n {
            let buf = &mut rows[(i - 1) * n2..i * n2];
            for (b, &v) in buf.iter_mut().zip(f.row(i)) {
                *b = Complex64::new(v, 0.0);
            }
            self.fft_x2.process(buf);
        }
        // sine transform down each column, normalised to the inverse of eval_sine
        let norm = 2.0 / (m_len * n2 as f64);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); 2 * (n + 1)];
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n * n2];
        for m in 0..n2 {
            for (i, c) in col.iter_mut().enumerate() {
                *c = rows[i * n2 + m];
            }
            self.dst1(&mut col, &mut scratch);
            for (k, c) in col.iter().enumerate() {
                coeffs[k * n2 + m] = *c * norm;
            }
        }
        Spectrum { coeffs }
    }

    /// `Σ c sin(k1 π x1 / L) e^{i ω x2}` at every node; wall rows are zero.
    fn eval_sine(&self, spec: &Spectrum) -> Field {
        self.eval(spec, Basis::Sine)
    }

    /// `Σ c cos(k1 π x1 / L) e^{i ω x2}` at every node, walls included.
    fn eval_cosine(&self, spec: &Spectrum) -> Field {
        self.eval(spec, Basis::Cosine)
    }

    fn eval(&self, spec: &Spectrum, basis: Basis) -> Field {
        let n2 = self.grid.n2();
        let n = self.modes;
        let n1 = self.grid.n1();
        let mut rows = vec![Complex64::new(0.0, 0.0); n1 * n2];
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        let mut full = vec![Complex64::new(0.0, 0.0); n + 2];
        let mut scratch = vec![Complex64::new(0.0, 0.0); 2 * (n + 1)];
        for m in 0..n2 {
            match basis {
                Basis::Sine => {
                    for (k, c) in col.iter_mut().enumerate() {
                        *c = spec.coeffs[k * n2 + m];
                    }
                    self.dst1(&mut col, &mut scratch);
                    for (i, c) in col.iter().enumerate() {
                        rows[(i + 1) * n2 + m] = *c;
                    }
                }
                Basis::Cosine => {
                    for (k, c) in col.iter_mut().enumerate() {
                        *c = spec.coeffs[k * n2 + m];
                    }
                    self.dct1_eval(&col, &mut full, &mut scratch);
                    for (i, c) in full.iter().enumerate() {
                        rows[i * n2 + m] = *c;
                    }
                }
            }
        }
        let mut out = Field::zeros(self.grid);
        let data = out.data_mut();
        for i in 0..n1 {
            let buf = &mut rows[i * n2..(i + 1) * n2];
            if matches!(basis, Basis::Sine) && (i == 0 || i == n1 - 1) {
                continue;
            }
            self.ifft_x2.process(buf);
            for (o, b) in data[i * n2..(i + 1) * n2].iter_mut().zip(buf.iter()) {
                *o = b.re;
            }
        }
        out
    }

    /// Unnormalised DST-I in place: `S_k = Σ_{j=1}^{N} u_j sin(π j k / M)`, `M = N + 1`.
    fn dst1(&self, u: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = u.len();
        let m = n + 1;
        scratch[0] = Complex64::new(0.0, 0.0);
        scratch[m] = Complex64::new(0.0, 0.0);
        for j in 1..=n {
            scratch[j] = u[j - 1];
            scratch[2 * m - j] = -u[j - 1];
        }
        self.fft_ext.process(scratch);
        // A_k = -2i S_k
        let half_i = Complex64::new(0.0, 0.5);
        for k in 1..=n {
            u[k - 1] = scratch[k] * half_i;
        }
    }

    /// `y_j = Σ_{k=1}^{N} c_k cos(π j k / M)` for `j = 0..=M`.
    fn dct1_eval(&self, c: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = c.len();
        let m = n + 1;
        scratch[0] = Complex64::new(0.0, 0.0);
        scratch[m] = Complex64::new(0.0, 0.0);
        for k in 1..=n {
            scratch[k] = c[k - 1];
            scratch[2 * m - k] = c[k - 1];
        }
        self.fft_ext.process(scratch);
        for j in 0..=m {
            out[j] = scratch[j] * 0.5;
        }
    }
}

#[derive(Clone, Copy)]
enum Basis {
    Sine,
    Cosine,
}

/// Signed wavenumber of DFT bin `m`: `0..n/2` then `-n/2..-1`.
pub fn wavenumber(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}
