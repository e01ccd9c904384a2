//! Slab geometry, physical parameters and sampled fields.
//!
//! The slab is `[0, L] x R/LZ`. Along `x1` both wall nodes are stored (the
//! Dirichlet values live in the array); along `x2` the duplicate periodic node
//! is dropped, so `x2_m = m L / n2` for `m < n2`.

use crate::error::{Error, Result};

/// Hot/cold temperatures and box size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub t_plus: f64,
    pub t_minus: f64,
    pub box_len: f64,
}

impl Params {
    pub fn new(t_plus: f64, t_minus: f64, box_len: f64) -> Result<Self> {
        if !(t_minus > 0.0) || !(t_plus > t_minus) || !t_plus.is_finite() {
            return Err(Error::Params(format!(
                "need T+ > T- > 0, got T+ = {t_plus}, T- = {t_minus}"
            )));
        }
        if !(box_len > 0.0) || !box_len.is_finite() {
            return Err(Error::Params(format!(
                "box length must be positive, got {box_len}"
            )));
        }
        Ok(Self {
            t_plus,
            t_minus,
            box_len,
        })
    }

    /// Parameters with a prescribed temperature gradient `(T+ - T-)/L`.
    pub fn with_gradient(t_minus: f64, gradient: f64, box_len: f64) -> Result<Self> {
        Self::new(t_minus + gradient * box_len, t_minus, box_len)
    }

    /// `(T+ - T-) / L`, strictly positive.
    pub fn gradient(&self) -> f64 {
        (self.t_plus - self.t_minus) / self.box_len
    }

    /// Weight `2 / (L (T+ - T-))` of the electric energy in the stability
    /// functionals; with it both are exact invariants of smooth solutions.
    pub fn energy_weight(&self) -> f64 {
        2.0 / (self.box_len * (self.t_plus - self.t_minus))
    }

    pub fn temperature(&self, species: Species) -> f64 {
        match species {
            Species::Hot => self.t_plus,
            Species::Cold => self.t_minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Hot,
    Cold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n1: usize,
    n2: usize,
    box_len: f64,
}

impl Grid {
    /// `n1` counts both wall nodes, `n2` the periodic nodes without duplicate.
    /// `n1 - 1` and `n2` must be powers of two.
    pub fn new(n1: usize, n2: usize, box_len: f64) -> Result<Self> {
        if n1 < 5 || n2 < 4 {
            return Err(Error::Sizing(format!(
                "need n1 >= 5 and n2 >= 4, got {n1} x {n2}"
            )));
        }
        if !(n1 - 1).is_power_of_two() {
            return Err(Error::Sizing(format!(
                "n1 - 1 = {} is not a power of two",
                n1 - 1
            )));
        }
        if !n2.is_power_of_two() {
            return Err(Error::Sizing(format!("n2 = {n2} is not a power of two")));
        }
        if !(box_len > 0.0) || !box_len.is_finite() {
            return Err(Error::Sizing(format!(
                "box length must be positive, got {box_len}"
            )));
        }
        Ok(Self { n1, n2, box_len })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn h1(&self) -> f64 {
        self.box_len / (self.n1 - 1) as f64
    }

    pub fn h2(&self) -> f64 {
        self.box_len / self.n2 as f64
    }

    pub fn x1(&self, i: usize) -> f64 {
        // Exact endpoint so the wall row sits at L, not L(1 - eps).
        if i == self.n1 - 1 {
            self.box_len
        } else {
            i as f64 * self.h1()
        }
    }

    pub fn x2(&self, j: usize) -> f64 {
        j as f64 * self.h2()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    /// Quadrature weight of row `i`: trapezoid in `x1` times `h2`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        let w = self.h1() * self.h2();
        if i == 0 || i == self.n1 - 1 {
            0.5 * w
        } else {
            w
        }
    }
}

/// Real samples on a [`Grid`], row-major over `(x1 index, x2 index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            data: vec![value; grid.len()],
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Malformed(format!(
                "expected {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {pos}")));
        }
        Ok(Self { grid, data })
    }

    /// Samples `f(x1, x2)` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..grid.n1() {
            let x1 = grid.x1(i);
            for j in 0..grid.n2() {
                data.push(f(x1, grid.x2(j)));
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.index(i, j)]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n2 = self.grid.n2();
        &self.data[i * n2..(i + 1) * n2]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self {
            grid: self.grid,
            data,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid-in-`x1`, rectangle-in-`x2` quadrature over the slab.
    pub fn integral(&self) -> f64 {
        (0..self.grid.n1())
            .map(|i| self.grid.weight(i) * self.row(i).iter().sum::<f64>())
            .sum()
    }

    /// Quadrature of the pointwise product.
    pub fn inner(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        (0..self.grid.n1())
            .map(|i| {
                let s: f64 = self
                    .row(i)
                    .iter()
                    .zip(other.row(i))
                    .map(|(a, b)| a * b)
                    .sum();
                self.grid.weight(i) * s
            })
            .sum()
    }

    pub fn norm2_squared(&self) -> f64 {
        self.inner(self)
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm2_squared().sqrt()
    }
}

impl std::ops::Add<&Field> for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl std::ops::Sub<&Field> for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a - b)
    }
}

/// Which of the two linear equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SteadyKind {
    /// Hot plasma at `x1 = L`: `(x1/L, 1 - x1/L)`.
    GoodCurvature,
    /// Hot plasma at `x1 = 0`: `(1 - x1/L, x1/L)`.
    BadCurvature,
}

impl SteadyKind {
    /// Hot-species profile at `x1`; the cold species is `1 -` this.
    pub fn hot_profile(self, x1: f64, box_len: f64) -> f64 {
        let s = x1 / box_len;
        match self {
            SteadyKind::GoodCurvature => s,
            SteadyKind::BadCurvature => 1.0 - s,
        }
    }
}

impl std::fmt::Display for SteadyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SteadyKind::GoodCurvature => "good",
            SteadyKind::BadCurvature => "bad",
        })
    }
}

impl std::str::FromStr for SteadyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "good" | "good-curvature" => Ok(SteadyKind::GoodCurvature),
            "bad" | "bad-curvature" => Ok(SteadyKind::BadCurvature),
            other => Err(Error::Params(format!(
                "unknown side '{other}' (expected good|bad)"
            ))),
        }
    }
}

/// Hot and cold densities at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct PlasmaState {
    pub rho_plus: Field,
    pub rho_minus: Field,
    pub time: f64,
}

impl PlasmaState {
    pub fn new(rho_plus: Field, rho_minus: Field, time: f64) -> Result<Self> {
        if rho_plus.grid() != rho_minus.grid() {
            return Err(Error::Malformed("species live on different grids".into()));
        }
        if !rho_plus.is_finite() || !rho_minus.is_finite() {
            return Err(Error::NonFinite("plasma state".into()));
        }
        Ok(Self {
            rho_plus,
            rho_minus,
            time,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.rho_plus.grid()
    }

    pub fn species(&self, s: Species) -> &Field {
        match s {
            Species::Hot => &self.rho_plus,
            Species::Cold => &self.rho_minus,
        }
    }

    /// `rho+ + rho- - 1`, the Poisson source under the unit-mean convention.
    pub fn charge(&self) -> Field {
        self.rho_plus.zip_map(&self.rho_minus, |a, b| a + b - 1.0)
    }

    /// Adds `(d_plus, d_minus)` to the densities.
    pub fn perturbed(&self, d_plus: &Field, d_minus: &Field) -> Self {
        Self {
            rho_plus: &self.rho_plus + d_plus,
            rho_minus: &self.rho_minus + d_minus,
            time: self.time,
        }
    }
}

/// Density increments `(δρ+, δρ-)` to be added to a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub d_plus: Field,
    pub d_minus: Field,
}

impl Perturbation {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            d_plus: Field::zeros(grid),
            d_minus: Field::zeros(grid),
        }
    }

    /// `(‖δρ+‖² + ‖δρ-‖²)^½`.
    pub fn l2_norm(&self) -> f64 {
        (self.d_plus.norm2_squared() + self.d_minus.norm2_squared()).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            d_plus: self.d_plus.scaled(s),
            d_minus: self.d_minus.scaled(s),
        }
    }

    pub fn apply_to(&self, state: &PlasmaState) -> PlasmaState {
        state.perturbed(&self.d_plus, &self.d_minus)
    }
}

/// Equilibrium profile on `grid` at time zero.
pub fn steady_state(kind: SteadyKind, grid: Grid) -> PlasmaState {
    let l = grid.box_len();
    let rho_plus = Field::from_fn(grid, |x1, _| kind.hot_profile(x1, l));
    let rho_minus = Field::from_fn(grid, |x1, _| 1.0 - kind.hot_profile(x1, l));
    PlasmaState {
        rho_plus,
        rho_minus,
        time: 0.0,
    }
}

/// Quadrature of `rho+ + rho-` over the slab. Under the unit-mean convention
/// an equilibrium carries mass `L^2`.
pub fn total_mass(state: &PlasmaState) -> f64 {
    state.rho_plus.integral() + state.rho_minus.integral()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_spacings() {
        let g = Grid::new(17, 16, 1.0).unwrap();
        assert_eq!(g.h1(), 1.0 / 16.0);
        assert_eq!(g.h2(), 1.0 / 16.0);
        let g = Grid::new(5, 4, 2.0).unwrap();
        assert_eq!(g.h1(), 0.5);
        assert_eq!(g.h2(), 0.5);
        assert_eq!(g.x1(4), 2.0);
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(matches!(Grid::new(6, 4, 1.0), Err(Error::Sizing(_))));
        assert!(matches!(Grid::new(5, 6, 1.0), Err(Error::Sizing(_))));
        assert!(matches!(Grid::new(3, 4, 1.0), Err(Error::Sizing(_))));
        assert!(matches!(Grid::new(5, 2, 1.0), Err(Error::Sizing(_))));
        assert!(matches!(Grid::new(5, 4, 0.0), Err(Error::Sizing(_))));
    }

    #[test]
    fn params_invariants() {
        assert!(Params::new(0.1, 0.1, 1.0).is_err());
        assert!(Params::new(0.1, 0.0, 1.0).is_err());
        assert!(Params::new(0.2, 0.1, -1.0).is_err());
        let p = Params::new(0.3, 0.1, 2.0).unwrap();
        assert!((p.gradient() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn steady_profiles() {
        let g = Grid::new(17, 16, 1.0).unwrap();
        let bad = steady_state(SteadyKind::BadCurvature, g);
        assert_eq!(bad.rho_plus.at(0, 3), 1.0);
        assert_eq!(bad.rho_minus.at(0, 3), 0.0);
        let good = steady_state(SteadyKind::GoodCurvature, g);
        assert_eq!(good.rho_plus.at(8, 0), 0.5);
        assert_eq!(good.rho_minus.at(8, 0), 0.5);
        for kind in [SteadyKind::GoodCurvature, SteadyKind::BadCurvature] {
            let s = steady_state(kind, Grid::new(33, 8, 3.7).unwrap());
            for (a, b) in s.rho_plus.data().iter().zip(s.rho_minus.data()) {
                assert!((a + b - 1.0).abs() <= f64::EPSILON);
            }
        }
    }

    #[test]
    fn mass_examples() {
        let g = Grid::new(33, 32, 1.0).unwrap();
        let bad = steady_state(SteadyKind::BadCurvature, g);
        assert!((total_mass(&bad) - 1.0).abs() < 1e-14);

        let two = PlasmaState::new(Field::constant(g, 2.0), Field::zeros(g), 0.0).unwrap();
        assert!((total_mass(&two) - 2.0).abs() < 1e-14);

        // unit mean: mass L^2 for a non-unit box
        let g3 = Grid::new(33, 32, 3.0).unwrap();
        assert!((total_mass(&steady_state(SteadyKind::GoodCurvature, g3)) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn mass_unchanged_by_mode_perturbation() {
        let g = Grid::new(33, 16, 1.0).unwrap();
        let base = steady_state(SteadyKind::BadCurvature, g);
        for (k1, k2) in [(1, 1), (2, 3), (5, 7)] {
            let gk = Field::from_fn(g, |x1, x2| {
                0.3 * (k1 as f64 * PI * x1).sin() * (2.0 * PI * k2 as f64 * x2).cos()
            });
            // direct summation oracle, independent of Field::integral
            let mut direct = 0.0;
            for i in 0..g.n1() {
                let w = if i == 0 || i == g.n1() - 1 { 0.5 } else { 1.0 };
                for j in 0..g.n2() {
                    direct += w * gk.at(i, j);
                }
            }
            assert!(direct.abs() < 1e-12);
            let p = base.perturbed(&gk, &Field::zeros(g));
            assert!((total_mass(&p) - total_mass(&base)).abs() < 1e-12);
        }
    }

    #[test]
    fn field_rejects_nan() {
        let g = Grid::new(5, 4, 1.0).unwrap();
        let mut v = vec![0.0; 20];
        v[7] = f64::NAN;
        assert!(matches!(Field::from_vec(g, v), Err(Error::NonFinite(_))));
        assert!(Field::from_vec(g, vec![0.0; 19]).is_err());
    }
}
