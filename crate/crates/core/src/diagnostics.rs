//! Deviation norms, the two stability functionals, temperature and growth fits.

use crate::error::{Error, Result};
use crate::grid::{steady_state, total_mass, Field, Params, PlasmaState, SteadyKind};
use crate::poisson::{field_energy, SpectralPlan};
use crate::transport::Observer;

/// One diagnostics row. `e_good` and `f_bad` are both evaluated against the
/// chosen reference equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub time: f64,
    /// `‖ρ+ - μ+‖`
    pub dev_plus: f64,
    /// `‖ρ- - μ-‖`
    pub dev_minus: f64,
    /// `∫ |∇V|²`
    pub elec: f64,
    /// `dev² + 2 elec / (L (T+ - T-))`
    pub e_good: f64,
    /// `dev² - 2 elec / (L (T+ - T-))`
    pub f_bad: f64,
    /// `dev_plus² - dev_minus²`
    pub gap: f64,
    pub mass: f64,
}

impl EnergyRecord {
    /// Column names of the CSV serialisation, in order.
    pub const COLUMNS: [&'static str; 8] = [
        "time",
        "dev_plus",
        "dev_minus",
        "elec",
        "e_good",
        "f_bad",
        "gap",
        "mass",
    ];

    /// `‖ρ - μ‖²`.
    pub fn dev_squared(&self) -> f64 {
        self.dev_plus * self.dev_plus + self.dev_minus * self.dev_minus
    }

    pub fn dev(&self) -> f64 {
        self.dev_squared().sqrt()
    }

    pub fn values(&self) -> [f64; 8] {
        [
            self.time,
            self.dev_plus,
            self.dev_minus,
            self.elec,
            self.e_good,
            self.f_bad,
            self.gap,
            self.mass,
        ]
    }
}

/// Deviation fields `(ρ+ - μ+, ρ- - μ-)`.
pub fn deviations(state: &PlasmaState, reference: SteadyKind) -> (Field, Field) {
    let mu = steady_state(reference, *state.grid());
    (
        &state.rho_plus - &mu.rho_plus,
        &state.rho_minus - &mu.rho_minus,
    )
}

pub fn record(
    plan: &SpectralPlan,
    state: &PlasmaState,
    params: &Params,
    reference: SteadyKind,
) -> EnergyRecord {
    let (dp, dm) = deviations(state, reference);
    let dev_plus2 = dp.norm2_squared();
    let dev_minus2 = dm.norm2_squared();
    let elec = field_energy(&plan.field_from_charge(&state.charge()));
    let weighted = params.energy_weight() * elec;
    EnergyRecord {
        time: state.time,
        dev_plus: dev_plus2.sqrt(),
        dev_minus: dev_minus2.sqrt(),
        elec,
        e_good: dev_plus2 + dev_minus2 + weighted,
        f_bad: dev_plus2 + dev_minus2 - weighted,
        gap: dev_plus2 - dev_minus2,
        mass: total_mass(state),
    }
}

/// `(∫|∇V|², L²/π² ‖ρ+ + ρ- - 1‖²)`: the electric energy and its Poincaré bound.
pub fn poincare_pair(plan: &SpectralPlan, state: &PlasmaState) -> (f64, f64) {
    let charge = state.charge();
    let l = state.grid().box_len();
    let elec = field_energy(&plan.field_from_charge(&charge));
    (
        elec,
        l * l / (std::f64::consts::PI * std::f64::consts::PI) * charge.norm2_squared(),
    )
}

/// `∫ E2 (ρ+ - μ+) + ∫ E2 (ρ- - μ-)`, zero for the exact dynamics.
pub fn cross_term_residual(plan: &SpectralPlan, state: &PlasmaState, reference: SteadyKind) -> f64 {
    let e = plan.field_from_charge(&state.charge());
    let (dp, dm) = deviations(state, reference);
    e.c2.inner(&dp) + e.c2.inner(&dm)
}

/// Temperature `(ρ+ T+ + ρ- T-) / (ρ+ + ρ-)` with the number of vacuum nodes
/// (`ρ+ + ρ- <= 1e-12`), where the sample is NaN.
#[derive(Debug, Clone)]
pub struct Temperature {
    pub field: Vec<f64>,
    pub invalid: usize,
}

pub const VACUUM_DENSITY: f64 = 1e-12;

pub fn temperature_field(state: &PlasmaState, params: &Params) -> Temperature {
    let mut invalid = 0;
    let field = state
        .rho_plus
        .data()
        .iter()
        .zip(state.rho_minus.data())
        .map(|(&p, &m)| {
            let total = p + m;
            if total <= VACUUM_DENSITY {
                invalid += 1;
                f64::NAN
            } else {
                (p * params.t_plus + m * params.t_minus) / total
            }
        })
        .collect();
    Temperature { field, invalid }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub rate: f64,
    /// Coefficient of determination of the log-linear fit.
    pub quality: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 8;

/// Least-squares slope of `ln(value)` against time over `[t0, t1]`.
pub fn fit_growth_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<GrowthFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "{} samples in [{}, {}], need {MIN_FIT_SAMPLES}",
            pts.len(),
            window.0,
            window.1
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Fit(format!("non-positive value {v} at t = {t}")));
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(t, v)| (t, v.ln())).collect();
    let (slope, quality) = linear_fit(&logs);
    Ok(GrowthFit {
        rate: slope,
        quality,
        samples: pts.len(),
    })
}

/// Ordinary least squares `y = a + b x`; returns `(b, R²)`. A perfectly flat
/// series fits with `R² = 1`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let scale = my.abs().max(1.0);
    let quality = if syy <= (1e-14 * scale).powi(2) * n {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, quality)
}

/// Collects an [`EnergyRecord`] every `every` steps of a run.
pub struct Recorder<'a> {
    plan: &'a SpectralPlan,
    params: Params,
    reference: SteadyKind,
    every: usize,
    pub records: Vec<EnergyRecord>,
}

impl<'a> Recorder<'a> {
    pub fn new(
        plan: &'a SpectralPlan,
        params: Params,
        reference: SteadyKind,
        every: usize,
    ) -> Self {
        Self {
            plan,
            params,
            reference,
            every: every.max(1),
            records: Vec::new(),
        }
    }

    /// `(time, dev)` pairs.
    pub fn dev_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.time, r.dev())).collect()
    }

    /// `(time, √elec)` pairs.
    pub fn field_series(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .map(|r| (r.time, r.elec.sqrt()))
            .collect()
    }
}

impl Observer for Recorder<'_> {
    fn every(&self) -> usize {
        self.every
    }

    fn observe(
        &mut self,
        _step: usize,
        state: &PlasmaState,
    ) -> std::result::Result<(), Box<dyn std::error::Error + Send + Sync>> {
        self.records
            .push(record(self.plan, state, &self.params, self.reference));
        Ok(())
    }

    fn name(&self) -> &str {
        "energy recorder"
    }
}
