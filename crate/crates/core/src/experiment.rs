//! Initial data and post-processing shared by the runner and the checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{fit_growth_rate, linear_fit, EnergyRecord, GrowthFit};
use crate::error::{Error, Result};
use crate::grid::{steady_state, Field, Grid, Params, Perturbation, PlasmaState, SteadyKind};
use crate::linmodes::{
    analyze, dominant_mode, eigenmode_fields, wall_sine, ModeAnalysis, ModeIndex,
};

/// Modes `sin(k1 π x1/L)·{cos,sin}(2π k2 x2/L)` used for random smooth data.
pub const RANDOM_K1: std::ops::RangeInclusive<usize> = 1..=3;
pub const RANDOM_K2: std::ops::RangeInclusive<usize> = 1..=2;

/// Mode window searched for the dominant growing mode when none is given.
pub const SEED_K_MAX: usize = 4;

/// A smooth, mass-free perturbation with independent random coefficients for
/// each species, rescaled to L² norm `amplitude`. Deterministic in `seed`.
pub fn random_smooth_perturbation(grid: Grid, amplitude: f64, seed: u64) -> Perturbation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.box_len();
    let mut species = || {
        let mut terms = Vec::new();
        for k1 in RANDOM_K1 {
            for k2 in RANDOM_K2 {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                terms.push((k1 as f64, k2 as f64, a, b));
            }
        }
        Field::from_fn(grid, |x1, x2| {
            terms
                .iter()
                .map(|&(k1, k2, a, b)| {
                    let phase = 2.0 * PI * k2 * x2 / l;
                    wall_sine(k1, x1, l) * (a * phase.cos() + b * phase.sin())
                })
                .sum()
        })
    };
    let raw = Perturbation {
        d_plus: species(),
        d_minus: species(),
    };
    let norm = raw.l2_norm();
    if amplitude == 0.0 || norm == 0.0 {
        return Perturbation::zeros(grid);
    }
    raw.scaled(amplitude / norm)
}

/// `μ^bad` plus the growing eigenmode of `mode` (or of the dominant mode in
/// the window `k_max = 4`) with L² norm `amplitude`.
pub fn eigenmode_seed(
    params: &Params,
    grid: Grid,
    amplitude: f64,
    mode: Option<ModeIndex>,
) -> Result<(PlasmaState, ModeAnalysis)> {
    let side = SteadyKind::BadCurvature;
    let analysis = match mode {
        Some(m) => analyze(m, params, side),
        None => dominant_mode(params, side, SEED_K_MAX).ok_or_else(|| {
            Error::Params(format!(
                "no growing mode at gradient {} for k <= {SEED_K_MAX}",
                params.gradient()
            ))
        })?,
    };
    let pert = eigenmode_fields(&analysis, amplitude, grid)?;
    Ok((pert.apply_to(&steady_state(side, grid)), analysis))
}

/// `‖μ‖` for the given equilibrium.
pub fn steady_norm(kind: SteadyKind, grid: Grid) -> f64 {
    let mu = steady_state(kind, grid);
    (mu.rho_plus.norm2_squared() + mu.rho_minus.norm2_squared()).sqrt()
}

/// First time `series` reaches `level`, interpolated linearly in `ln value`
/// between the bracketing samples.
pub fn crossing_time(series: &[(f64, f64)], level: f64) -> Option<f64> {
    if let Some(&(t, v)) = series.first() {
        if v >= level {
            return Some(t);
        }
    }
    series.windows(2).find_map(|w| {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        if v1 < level {
            return None;
        }
        if v0 > 0.0 && v1 > v0 {
            let s = (level.ln() - v0.ln()) / (v1.ln() - v0.ln());
            Some(t0 + s * (t1 - t0))
        } else {
            Some(t1)
        }
    })
}

/// Fit window for a run seeded at size `delta`: from the first sample with
/// `dev >= 10 δ` to the first with `dev >= min(10³ δ, 0.01 ‖μ‖)`.
pub fn growth_window(dev: &[(f64, f64)], delta: f64, mu_norm: f64) -> Option<(f64, f64)> {
    let start = dev.iter().find(|(_, v)| *v >= 10.0 * delta)?.0;
    let upper = (1e3 * delta).min(0.01 * mu_norm);
    let end = dev.iter().find(|(t, v)| *t >= start && *v >= upper)?.0;
    (end > start).then_some((start, end))
}

/// Growth-rate fits of `dev` and `√elec` over the standard window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthSummary {
    pub window: (f64, f64),
    pub dev: GrowthFit,
    pub field: GrowthFit,
}

pub fn growth_summary(records: &[EnergyRecord], delta: f64, mu_norm: f64) -> Result<GrowthSummary> {
    let dev: Vec<(f64, f64)> = records.iter().map(|r| (r.time, r.dev())).collect();
    let field: Vec<(f64, f64)> = records.iter().map(|r| (r.time, r.elec.sqrt())).collect();
    let window = growth_window(&dev, delta, mu_norm).ok_or_else(|| {
        Error::Fit(format!(
            "deviation never grew from {delta} to the fit window"
        ))
    })?;
    Ok(GrowthSummary {
        window,
        dev: fit_growth_rate(&dev, window)?,
        field: fit_growth_rate(&field, window)?,
    })
}

/// `max_t dev²(t) / dev²(0)`.
pub fn max_amplification(records: &[EnergyRecord]) -> f64 {
    let Some(first) = records.first() else {
        return f64::NAN;
    };
    let d0 = first.dev_squared();
    records
        .iter()
        .map(|r| r.dev_squared() / d0)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max_t |ℰ(t)/ℰ(0) - 1|`.
pub fn energy_drift(records: &[EnergyRecord]) -> f64 {
    let Some(first) = records.first() else {
        return f64::NAN;
    };
    records
        .iter()
        .map(|r| (r.e_good / first.e_good - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `max_t (ℰ(t)/ℰ(0) - 1)`, the one-sided excess.
pub fn energy_excess(records: &[EnergyRecord]) -> f64 {
    let Some(first) = records.first() else {
        return f64::NAN;
    };
    records
        .iter()
        .map(|r| r.e_good / first.e_good - 1.0)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max_t |gap(t) - gap(0)| / max_t dev²(t)`.
pub fn gap_drift(records: &[EnergyRecord]) -> f64 {
    let Some(first) = records.first() else {
        return f64::NAN;
    };
    let scale = records
        .iter()
        .map(EnergyRecord::dev_squared)
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    records
        .iter()
        .map(|r| (r.gap - first.gap).abs())
        .fold(0.0, f64::max)
        / scale
}

/// `max_t |mass(t) - mass(0)|`.
pub fn mass_drift(records: &[EnergyRecord]) -> f64 {
    let Some(first) = records.first() else {
        return f64::NAN;
    };
    records
        .iter()
        .map(|r| (r.mass - first.mass).abs())
        .fold(0.0, f64::max)
}

/// Affine fit of crossing times against `|ln δ|`; returns `(slope, R²)`.
pub fn log_delta_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .map(|&(delta, t)| (delta.ln().abs(), t))
        .collect();
    linear_fit(&pts)
}
