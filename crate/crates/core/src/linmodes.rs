//! Linear stability of the two equilibria, mode by mode.
//!
//! For a perturbation `(h+(t), h-(t)) g_k(x)` with
//! `g_k = sin(k1 π x1 / L) e^{i ω x2}`, `ω = 2π k2 / L`, the linearised system
//! reduces to `∂t h = i B h` where, with `Λ = π² (k1² + 4 k2²) / L²` and
//! `c = ω / (L Λ)`,
//!
//! ```text
//! bad side:  B = [[ω T+ - c, -c], [c, ω T- + c]]
//! good side: B = [[ω T+ + c,  c], [-c, ω T- - c]]
//! ```
//!
//! `B` is the source of truth; the closed-form discriminant and thresholds
//! below agree with it for every `L`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Params, Perturbation, SteadyKind};

pub type Mat2 = [[Complex64; 2]; 2];

/// Mode numbers `(k1, k2)` with `k1 >= 1`, `k2 != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    k1: i64,
    k2: i64,
}

impl ModeIndex {
    pub fn new(k1: i64, k2: i64) -> Result<Self> {
        if k1 < 1 || k2 == 0 {
            return Err(Error::Params(format!(
                "mode ({k1}, {k2}) needs k1 >= 1 and k2 != 0"
            )));
        }
        Ok(Self { k1, k2 })
    }

    pub fn k1(&self) -> i64 {
        self.k1
    }

    pub fn k2(&self) -> i64 {
        self.k2
    }

    /// `k1² + 4 k2²`.
    pub fn weight(&self) -> i64 {
        self.k1 * self.k1 + 4 * self.k2 * self.k2
    }

    /// `ω = 2π k2 / L`.
    pub fn omega(&self, box_len: f64) -> f64 {
        2.0 * PI * self.k2 as f64 / box_len
    }

    /// Laplacian eigenvalue `π² (k1² + 4 k2²) / L²`.
    pub fn laplacian_eigenvalue(&self, box_len: f64) -> f64 {
        PI * PI * self.weight() as f64 / (box_len * box_len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeAnalysis {
    pub mode: ModeIndex,
    pub side: SteadyKind,
    /// `B` in `∂t h = i B h`.
    pub matrix: Mat2,
    /// Eigenvalues of `i B`, the one with the larger real part first.
    pub eigenvalues: [Complex64; 2],
    /// Unit eigenvector of `i B` for `eigenvalues[0]`.
    pub eigenvector: [Complex64; 2],
    pub discriminant: f64,
    pub growth_rate: f64,
    pub threshold: f64,
}

impl ModeAnalysis {
    pub fn is_growing(&self) -> bool {
        self.growth_rate > 0.0
    }
}

fn coupling(mode: ModeIndex, params: &Params) -> (f64, f64) {
    let l = params.box_len;
    let omega = mode.omega(l);
    let c = omega / (l * mode.laplacian_eigenvalue(l));
    (omega, c)
}

/// `B` for the mode around the chosen equilibrium.
pub fn mode_matrix(mode: ModeIndex, params: &Params, side: SteadyKind) -> Mat2 {
    let (omega, c) = coupling(mode, params);
    let c = match side {
        SteadyKind::BadCurvature => c,
        SteadyKind::GoodCurvature => -c,
    };
    let re = |v: f64| Complex64::new(v, 0.0);
    [
        [re(omega * params.t_plus - c), re(-c)],
        [re(c), re(omega * params.t_minus + c)],
    ]
}

/// Discriminant of the characteristic polynomial of `-i B` (the
/// `∂t h + M h = 0` form), `-L² disc(B)`:
/// `-4π² k2² (T+ - T-) [(T+ - T-) ∓ 4L / (π² (k1² + 4 k2²))]`, minus sign on
/// the bad side.
pub fn discriminant(mode: ModeIndex, params: &Params, side: SteadyKind) -> f64 {
    let dt = params.t_plus - params.t_minus;
    let k2 = mode.k2 as f64;
    let shift = 4.0 * params.box_len / (PI * PI * mode.weight() as f64);
    let bracket = match side {
        SteadyKind::BadCurvature => dt - shift,
        SteadyKind::GoodCurvature => dt + shift,
    };
    -4.0 * PI * PI * k2 * k2 * dt * bracket
}

/// Critical gradient `4 / (π² (k1² + 4 k2²))`: the bad-side mode grows iff
/// `(T+ - T-)/L` is strictly below it.
pub fn mode_threshold(mode: ModeIndex) -> f64 {
    4.0 / (PI * PI * mode.weight() as f64)
}

/// Eigenvalues of `A = i B` by the quadratic formula, growing one first.
///
/// The square root is taken of the real discriminant of `B`, so the branch is
/// continuous through zero.
fn eigen_pair(b: &Mat2) -> [Complex64; 2] {
    let i = Complex64::new(0.0, 1.0);
    let tr = b[0][0] + b[1][1];
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let disc = tr * tr - 4.0 * det;
    let root = Complex64::new(disc.re, 0.0).sqrt();
    let half_tr = i * tr * 0.5;
    let a = half_tr - i * root * 0.5;
    let c = half_tr + i * root * 0.5;
    if a.re >= c.re {
        [a, c]
    } else {
        [c, a]
    }
}

fn eigenvector(a: &Mat2, lambda: Complex64) -> [Complex64; 2] {
    // (A - λ) h = 0; the off-diagonal -i c never vanishes for k2 != 0.
    let v1 = [a[0][1], lambda - a[0][0]];
    let v2 = [lambda - a[1][1], a[1][0]];
    let pick = if v1[0].norm() + v1[1].norm() >= v2[0].norm() + v2[1].norm() {
        v1
    } else {
        v2
    };
    let n = (pick[0].norm_sqr() + pick[1].norm_sqr()).sqrt();
    [pick[0] / n, pick[1] / n]
}

/// `i B` as a complex matrix.
pub fn generator(b: &Mat2) -> Mat2 {
    let i = Complex64::new(0.0, 1.0);
    [[i * b[0][0], i * b[0][1]], [i * b[1][0], i * b[1][1]]]
}

pub fn analyze(mode: ModeIndex, params: &Params, side: SteadyKind) -> ModeAnalysis {
    let matrix = mode_matrix(mode, params, side);
    let eigenvalues = eigen_pair(&matrix);
    let eigenvector = eigenvector(&generator(&matrix), eigenvalues[0]);
    ModeAnalysis {
        mode,
        side,
        matrix,
        eigenvalues,
        eigenvector,
        discriminant: discriminant(mode, params, side),
        growth_rate: eigenvalues[0].re.max(0.0),
        threshold: mode_threshold(mode),
    }
}

/// Largest real part of the eigenvalues of `i B`, floored at zero. Equals
/// `√Δ / (2L)` when the discriminant is positive.
pub fn growth_rate(mode: ModeIndex, params: &Params, side: SteadyKind) -> f64 {
    eigen_pair(&mode_matrix(mode, params, side))[0].re.max(0.0)
}

/// All modes with `1 <= k1 <= k_max`, `1 <= |k2| <= k_max`, `k2 > 0` first.
pub fn mode_window(k_max: usize) -> Vec<ModeIndex> {
    let k = k_max as i64;
    let mut out = Vec::with_capacity(2 * k_max * k_max);
    for k1 in 1..=k {
        for k2 in (1..=k).chain((-k..=-1).rev()) {
            out.push(ModeIndex { k1, k2 });
        }
    }
    out
}

/// The fastest-growing mode in the window, or `None` when nothing grows.
/// Ties go to the smaller `k1² + 4 k2²`, then to positive `k2`.
pub fn dominant_mode(params: &Params, side: SteadyKind, k_max: usize) -> Option<ModeAnalysis> {
    let mut best: Option<ModeAnalysis> = None;
    for mode in mode_window(k_max) {
        let a = analyze(mode, params, side);
        if !a.is_growing() {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                if a.growth_rate != b.growth_rate {
                    a.growth_rate > b.growth_rate
                } else if a.mode.weight() != b.mode.weight() {
                    a.mode.weight() < b.mode.weight()
                } else {
                    (a.mode.k2 > 0 && b.mode.k2 < 0)
                        || (a.mode.k2.signum() == b.mode.k2.signum()
                            && a.mode.k2.abs() < b.mode.k2.abs())
                }
            }
        };
        if better {
            best = Some(a);
        }
    }
    best
}

/// `sin(k1 π x1 / L)`, exactly zero on both walls.
pub fn wall_sine(k1: f64, x1: f64, box_len: f64) -> f64 {
    if x1 <= 0.0 || x1 >= box_len {
        0.0
    } else {
        (k1 * PI * x1 / box_len).sin()
    }
}

/// Real part of `(h+, h-) g_k` on the grid, scaled to L² norm `amplitude`.
/// Mean-free since `k2 != 0`.
pub fn eigenmode_fields(
    analysis: &ModeAnalysis,
    amplitude: f64,
    grid: Grid,
) -> Result<Perturbation> {
    if !analysis.is_growing() {
        return Err(Error::NotGrowing {
            k1: analysis.mode.k1,
            k2: analysis.mode.k2,
        });
    }
    let l = grid.box_len();
    let k1 = analysis.mode.k1 as f64;
    let omega = analysis.mode.omega(l);
    let [hp, hm] = analysis.eigenvector;
    let sample = |h: Complex64| {
        Field::from_fn(grid, move |x1, x2| {
            let s = wall_sine(k1, x1, l);
            s * (h.re * (omega * x2).cos() - h.im * (omega * x2).sin())
        })
    };
    let raw = Perturbation {
        d_plus: sample(hp),
        d_minus: sample(hm),
    };
    let norm = raw.l2_norm();
    if amplitude == 0.0 {
        return Ok(Perturbation::zeros(grid));
    }
    Ok(raw.scaled(amplitude / norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_params(gradient: f64) -> Params {
        Params::with_gradient(0.01, gradient, 1.0).unwrap()
    }

    fn m(k1: i64, k2: i64) -> ModeIndex {
        ModeIndex::new(k1, k2).unwrap()
    }

    /// 2x2 complex exp by scaling and squaring of a Taylor series.
    fn expm(a: &Mat2, t: f64) -> Mat2 {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let mul = |x: &Mat2, y: &Mat2| -> Mat2 {
            let mut r = [[zero; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    r[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
                }
            }
            r
        };
        let squarings = 10;
        let s = t / f64::from(1 << squarings);
        let x = [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]];
        let mut term = [[one, zero], [zero, one]];
        let mut sum = term;
        for n in 1..30 {
            term = mul(&term, &x);
            for row in term.iter_mut() {
                for v in row.iter_mut() {
                    *v /= n as f64;
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..squarings {
            sum = mul(&sum, &sum);
        }
        sum
    }

    #[test]
    fn threshold_values() {
        assert!((mode_threshold(m(1, 1)) - 4.0 / (5.0 * PI * PI)).abs() < 1e-15);
        assert!((mode_threshold(m(1, 1)) - 0.0810569).abs() < 1e-7);
        assert!((mode_threshold(m(1, 2)) - 0.0238402).abs() < 1e-7);
        // k1² + 4k2² >= 5 on Z* x Z*, with equality only at |k1| = |k2| = 1
        let best = mode_window(10)
            .into_iter()
            .map(mode_threshold)
            .fold(0.0, f64::max);
        assert_eq!(best, mode_threshold(m(1, 1)));
        assert_eq!(
            mode_window(10)
                .into_iter()
                .filter(|&k| mode_threshold(k) == best)
                .count(),
            2
        );
    }

    #[test]
    fn discriminant_examples() {
        let at = unit_params(4.0 / (5.0 * PI * PI));
        assert!(discriminant(m(1, 1), &at, SteadyKind::BadCurvature).abs() < 1e-15);

        let p = unit_params(2.0 / (5.0 * PI * PI));
        let d = discriminant(m(1, 1), &p, SteadyKind::BadCurvature);
        assert!((d - 16.0 / (25.0 * PI * PI)).abs() < 1e-15);
        assert!((d - 0.06485).abs() < 1e-5);
        // cross-check against -L² disc(B)
        let b = mode_matrix(m(1, 1), &p, SteadyKind::BadCurvature);
        let tr = (b[0][0] + b[1][1]).re;
        let det = (b[0][0] * b[1][1] - b[0][1] * b[1][0]).re;
        assert!((d + (tr * tr - 4.0 * det)).abs() < 1e-14);
    }

    #[test]
    fn discriminant_matches_matrix_for_any_box() {
        let p = Params::new(0.7, 0.2, 3.0).unwrap();
        for side in [SteadyKind::BadCurvature, SteadyKind::GoodCurvature] {
            for k in mode_window(4) {
                let b = mode_matrix(k, &p, side);
                let tr = (b[0][0] + b[1][1]).re;
                let det = (b[0][0] * b[1][1] - b[0][1] * b[1][0]).re;
                let d = discriminant(k, &p, side);
                let reference = -9.0 * (tr * tr - 4.0 * det);
                assert!(
                    (d - reference).abs() < 1e-12 * d.abs().max(1.0),
                    "{k:?} {side:?}"
                );
            }
        }
    }

    #[test]
    fn growth_rate_examples() {
        let p = unit_params(2.0 / (5.0 * PI * PI));
        let r = growth_rate(m(1, 1), &p, SteadyKind::BadCurvature);
        assert!((r - 2.0 / (5.0 * PI)).abs() < 1e-14);
        assert!((r - 0.1273240).abs() < 1e-7);
        // √Δ / 2 at L = 1
        let d = discriminant(m(1, 1), &p, SteadyKind::BadCurvature);
        assert!((r - d.sqrt() / 2.0).abs() < 1e-14);
        assert_eq!(growth_rate(m(1, 1), &p, SteadyKind::GoodCurvature), 0.0);
        let at = unit_params(4.0 / (5.0 * PI * PI));
        assert!(growth_rate(m(1, 1), &at, SteadyKind::BadCurvature) < 1e-7);
    }

    #[test]
    fn growth_rate_scales_with_box() {
        // √Δ / (2L) off the unit box
        let p = Params::new(0.03, 0.01, 2.0).unwrap();
        let k = m(1, 1);
        let d = discriminant(k, &p, SteadyKind::BadCurvature);
        assert!(d > 0.0);
        let r = growth_rate(k, &p, SteadyKind::BadCurvature);
        assert!((r - d.sqrt() / (2.0 * 2.0)).abs() < 1e-14);
    }

    #[test]
    fn trace_identity() {
        let p = unit_params(0.03);
        for k in mode_window(5) {
            let a = analyze(k, &p, SteadyKind::BadCurvature);
            let omega = k.omega(1.0);
            let sum = a.eigenvalues[0] + a.eigenvalues[1];
            assert!((sum - Complex64::new(0.0, omega * (p.t_plus + p.t_minus))).norm() < 1e-12);
            let tr = a.matrix[0][0] + a.matrix[1][1];
            assert!((tr.re - omega * (p.t_plus + p.t_minus)).abs() < 1e-12);
        }
    }

    #[test]
    fn displayed_polynomial_at_unit_box() {
        // X² + 2iπk2(T+ + T-)X - 4π²k2²T+T- - 4k2²/(k1² + 4k2²)(T+ - T-), roots X = -λ
        let p = unit_params(0.02);
        for k in mode_window(4) {
            let a = analyze(k, &p, SteadyKind::BadCurvature);
            let k2 = k.k2() as f64;
            let coef_x = Complex64::new(0.0, 2.0 * PI * k2 * (p.t_plus + p.t_minus));
            let c0 = -4.0 * PI * PI * k2 * k2 * p.t_plus * p.t_minus
                - 4.0 * k2 * k2 / k.weight() as f64 * (p.t_plus - p.t_minus);
            for lam in a.eigenvalues {
                let x = -lam;
                let val = x * x + coef_x * x + c0;
                assert!(val.norm() < 1e-10, "{k:?}: {val}");
            }
        }
    }

    #[test]
    fn good_side_is_neutral() {
        for g in [0.001, 0.01, 0.05, 0.0810, 0.2, 3.0] {
            let p = unit_params(g);
            for k in mode_window(6) {
                let a = analyze(k, &p, SteadyKind::GoodCurvature);
                assert!(a.eigenvalues.iter().all(|l| l.re.abs() < 1e-12));
                assert_eq!(a.growth_rate, 0.0);
                let d = a.discriminant;
                let k2 = k.k2() as f64;
                assert!(d <= -4.0 * PI * PI * k2 * k2 * (p.t_plus - p.t_minus).powi(2));
            }
            assert!(dominant_mode(&p, SteadyKind::GoodCurvature, 6).is_none());
        }
    }

    #[test]
    fn equal_temperatures_limit() {
        // T+ = T-: the coupling cancels in the discriminant, eigenvalues stay imaginary
        let p = Params {
            t_plus: 0.05,
            t_minus: 0.05,
            box_len: 1.0,
        };
        let a = analyze(m(1, 1), &p, SteadyKind::BadCurvature);
        assert!(a.eigenvalues.iter().all(|l| l.re.abs() < 1e-15));
        let omega = 2.0 * PI;
        assert!(a
            .eigenvalues
            .iter()
            .any(|l| (l.im - omega * 0.05).abs() < 1e-12));
    }

    #[test]
    fn dominant_mode_examples() {
        let p = unit_params(2.0 / (5.0 * PI * PI));
        let a = dominant_mode(&p, SteadyKind::BadCurvature, 8).unwrap();
        assert_eq!((a.mode.k1(), a.mode.k2()), (1, 1));
        assert!((a.growth_rate - 2.0 / (5.0 * PI)).abs() < 1e-14);

        let a = dominant_mode(&unit_params(0.04), SteadyKind::BadCurvature, 4).unwrap();
        assert_eq!((a.mode.k1(), a.mode.k2()), (1, 1));

        assert!(dominant_mode(
            &unit_params(4.0 / (5.0 * PI * PI)),
            SteadyKind::BadCurvature,
            8
        )
        .is_none());
        assert!(dominant_mode(&unit_params(0.09), SteadyKind::BadCurvature, 8).is_none());
    }

    #[test]
    fn eigenmode_normalisation() {
        let g = Grid::new(65, 64, 1.0).unwrap();
        let a = analyze(m(1, 1), &unit_params(0.04), SteadyKind::BadCurvature);
        let z = eigenmode_fields(&a, 0.0, g).unwrap();
        assert_eq!(z.l2_norm(), 0.0);
        let pert = eigenmode_fields(&a, 1e-3, g).unwrap();
        assert!((pert.l2_norm() - 1e-3).abs() < 1e-13);
        assert!((pert.d_plus.integral() + pert.d_minus.integral()).abs() < 1e-16);

        let stable = analyze(m(1, 1), &unit_params(0.09), SteadyKind::BadCurvature);
        assert!(matches!(
            eigenmode_fields(&stable, 1e-3, g),
            Err(Error::NotGrowing { .. })
        ));
    }

    #[test]
    fn growing_mode_has_balanced_species() {
        // a growing eigenvector keeps ‖δρ+‖² - ‖δρ-‖² constant only if |h+| = |h-|
        let a = analyze(m(1, 1), &unit_params(0.03), SteadyKind::BadCurvature);
        assert!((a.eigenvector[0].norm() - a.eigenvector[1].norm()).abs() < 1e-12);
    }

    #[test]
    fn linear_evolution_grows_at_rate() {
        let p = unit_params(2.0 / (5.0 * PI * PI));
        let a = analyze(m(1, 1), &p, SteadyKind::BadCurvature);
        let e = expm(&generator(&a.matrix), 1.0);
        let h = a.eigenvector;
        let h1 = [
            e[0][0] * h[0] + e[0][1] * h[1],
            e[1][0] * h[0] + e[1][1] * h[1],
        ];
        let norm = (h1[0].norm_sqr() + h1[1].norm_sqr()).sqrt();
        assert!((norm - a.growth_rate.exp()).abs() < 1e-8);
    }

    #[test]
    fn invalid_modes() {
        assert!(ModeIndex::new(0, 1).is_err());
        assert!(ModeIndex::new(1, 0).is_err());
        assert!(ModeIndex::new(-1, 1).is_err());
    }

    proptest! {
        #[test]
        fn threshold_consistency(k1 in 1i64..8, k2 in -8i64..8, tm in 0.001f64..1.0, grad in 1e-4f64..0.2, l in 0.2f64..5.0) {
            prop_assume!(k2 != 0);
            let p = Params::with_gradient(tm, grad, l).unwrap();
            let k = m(k1, k2);
            let rate = growth_rate(k, &p, SteadyKind::BadCurvature);
            let margin = (p.gradient() - mode_threshold(k)).abs() / mode_threshold(k);
            prop_assume!(margin > 1e-9);
            prop_assert_eq!(rate > 0.0, p.gradient() < mode_threshold(k));
            prop_assert_eq!(growth_rate(k, &p, SteadyKind::GoodCurvature), 0.0);
        }

        #[test]
        fn scaling_preserves_classification(k1 in 1i64..6, k2 in 1i64..6, grad in 1e-3f64..0.1, s in 0.1f64..10.0) {
            let p = unit_params(grad);
            let b = mode_matrix(m(k1, k2), &p, SteadyKind::BadCurvature);
            let scaled: Mat2 = [[b[0][0] * s, b[0][1] * s], [b[1][0] * s, b[1][1] * s]];
            let e = eigen_pair(&b);
            let es = eigen_pair(&scaled);
            prop_assert!((es[0].re - s * e[0].re).abs() < 1e-12 * (1.0 + s));
            prop_assert!((es[1].re - s * e[1].re).abs() < 1e-12 * (1.0 + s));
            let disc = |m: &Mat2| { let tr = (m[0][0] + m[1][1]).re; let det = (m[0][0]*m[1][1] - m[0][1]*m[1][0]).re; tr*tr - 4.0*det };
            prop_assert_eq!(disc(&b) < 0.0, disc(&scaled) < 0.0);
        }
    }
}
