//! Time advance of the coupled system
//!
//! ```text
//! ∂t ρ± + U±·∇ρ± = 0,   U± = E⊥ - T± e2,   E = -∇V,   -ΔV = ρ+ + ρ- - 1
//! ```
//!
//! by a semi-Lagrangian scheme: each node is traced back along the velocity
//! over one step (midpoint rule in space) and the old density is read off at
//! the foot with bicubic interpolation. `E⊥` is divergence free and tangent to
//! the walls, so feet stay in the slab. By default the uniform part `-T± e2`
//! is split off and applied as an exact translation, see [`Drift`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Params, PlasmaState};
use crate::interp::Stencil;
use crate::poisson::{ElectricField, SpectralPlan, VectorField};

/// Densities below this are clamped up to it after each step.
pub const NEGATIVE_DENSITY_CLAMP: f64 = -1e-12;

/// Floor on the advecting speed in [`Simulator::cfl_dt`].
pub const SPEED_FLOOR: f64 = 1e-12;

/// How the electric field enters the characteristics within one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// `E` at the start of the step only. First order in time.
    FrozenField,
    /// Predict with the frozen field, then retrace with the average of the
    /// start and predicted fields. Second order in time.
    #[default]
    PredictorCorrector,
}

/// How the uniform drift `-T± e2` is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Drift {
    /// Part of the traced velocity, like `E⊥`.
    Interpolated,
    /// Exact Fourier translation in `x2` for half a step on either side of
    /// the `E⊥` transport (Strang splitting). Avoids the interpolation
    /// damping of the hot species, which moves a fixed fraction of a cell
    /// every step.
    #[default]
    SpectralShift,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    /// Upper bound on the step; [`Simulator::run`] also honours the CFL limit.
    pub dt: f64,
    pub cfl_safety: f64,
    pub coupling: Coupling,
    pub drift: Drift,
}

impl StepperConfig {
    pub fn new(dt: f64, cfl_safety: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Params(format!("dt must be positive, got {dt}")));
        }
        if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
            return Err(Error::Params(format!(
                "cfl_safety must lie in (0, 1], got {cfl_safety}"
            )));
        }
        Ok(Self {
            dt,
            cfl_safety,
            coupling: Coupling::default(),
            drift: Drift::default(),
        })
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_drift(mut self, drift: Drift) -> Self {
        self.drift = drift;
        self
    }
}

/// Something invoked every `every()` steps of [`Simulator::run`], plus once
/// at the start and once on the final state.
pub trait Observer {
    fn every(&self) -> usize;

    fn observe(
        &mut self,
        step: usize,
        state: &PlasmaState,
    ) -> std::result::Result<(), Box<dyn std::error::Error + Send + Sync>>;

    fn name(&self) -> &str {
        "observer"
    }
}

/// `U± = (E2, -E1 - T±)`.
pub fn velocity(e: &ElectricField, temperature: f64) -> VectorField {
    let perp = e.perp();
    VectorField {
        c1: perp.c1,
        c2: perp.c2.map(|v| v - temperature),
    }
}

/// `(U+, U-)` for the state's own field.
pub fn velocity_fields(
    plan: &SpectralPlan,
    state: &PlasmaState,
    params: &Params,
) -> (VectorField, VectorField) {
    let e = plan.field_from_charge(&state.charge());
    (velocity(&e, params.t_plus), velocity(&e, params.t_minus))
}

fn max_speed(e: &ElectricField, params: &Params) -> f64 {
    let mut m: f64 = 0.0;
    for (e1, e2) in e.c1.data().iter().zip(e.c2.data()) {
        for t in [params.t_plus, params.t_minus] {
            m = m.max(e2.hypot(-e1 - t));
        }
    }
    m
}

pub struct Simulator {
    plan: SpectralPlan,
    params: Params,
    cfg: StepperConfig,
}

impl Simulator {
    pub fn new(grid: Grid, params: Params, cfg: StepperConfig) -> Self {
        Self {
            plan: SpectralPlan::new(grid),
            params,
            cfg,
        }
    }

    pub fn plan(&self) -> &SpectralPlan {
        &self.plan
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn electric_field(&self, state: &PlasmaState) -> ElectricField {
        self.plan.field_from_charge(&state.charge())
    }

    pub fn velocity_fields(&self, state: &PlasmaState) -> (VectorField, VectorField) {
        velocity_fields(&self.plan, state, &self.params)
    }

    /// `cfl_safety · min(h1, h2) / max(‖U+‖∞, ‖U-‖∞, 1e-12)`.
    pub fn cfl_dt(&self, state: &PlasmaState) -> f64 {
        let e = self.electric_field(state);
        self.cfl_dt_for(state.grid(), &e)
    }

    fn cfl_dt_for(&self, grid: &Grid, e: &ElectricField) -> f64 {
        let h = grid.h1().min(grid.h2());
        self.cfg.cfl_safety * h / max_speed(e, &self.params).max(SPEED_FLOOR)
    }

    /// One step of size `cfg.dt`.
    pub fn step(&self, state: &PlasmaState) -> Result<PlasmaState> {
        self.advance(state, self.cfg.dt)
    }

    /// One step of size `dt`; `dt` must respect the CFL limit at safety 1.
    pub fn advance(&self, state: &PlasmaState, dt: f64) -> Result<PlasmaState> {
        let grid = *state.grid();
        let e0 = self.electric_field(state);
        let speed = max_speed(&e0, &self.params);
        let limit = grid.h1().min(grid.h2()) / speed.max(SPEED_FLOOR);
        if dt > limit * (1.0 + 1e-9) {
            return Err(Error::Cfl { dt, limit });
        }

        let (start, drift_t) = match self.cfg.drift {
            Drift::Interpolated => (state.clone(), [self.params.t_plus, self.params.t_minus]),
            Drift::SpectralShift => (self.drift_shift(state, 0.5 * dt), [0.0, 0.0]),
        };
        let e_start = match self.cfg.drift {
            Drift::Interpolated => e0,
            Drift::SpectralShift => self.electric_field(&start),
        };
        let frozen = self.transport_species(&start, &e_start, drift_t, dt)?;
        let (rho_plus, rho_minus) = match self.cfg.coupling {
            Coupling::FrozenField => frozen,
            Coupling::PredictorCorrector => {
                let predicted = PlasmaState {
                    rho_plus: frozen.0,
                    rho_minus: frozen.1,
                    time: state.time + dt,
                };
                let e1 = self.electric_field(&predicted);
                let mean = VectorField {
                    c1: e_start.c1.zip_map(&e1.c1, |a, b| 0.5 * (a + b)),
                    c2: e_start.c2.zip_map(&e1.c2, |a, b| 0.5 * (a + b)),
                };
                self.transport_species(&start, &mean, drift_t, dt)?
            }
        };
        let mut next = PlasmaState {
            rho_plus,
            rho_minus,
            time: state.time + dt,
        };
        if self.cfg.drift == Drift::SpectralShift {
            next = self.drift_shift(&next, 0.5 * dt);
            for rho in [&mut next.rho_plus, &mut next.rho_minus] {
                for v in rho.data_mut() {
                    *v = v.max(NEGATIVE_DENSITY_CLAMP);
                }
            }
        }
        if !next.rho_plus.is_finite() || !next.rho_minus.is_finite() {
            return Err(Error::NonFinite(format!(
                "densities after step at t = {}",
                state.time
            )));
        }
        Ok(next)
    }

    /// Exact solution of `∂t ρ± - T± ∂x2 ρ± = 0` over `tau`.
    fn drift_shift(&self, state: &PlasmaState, tau: f64) -> PlasmaState {
        PlasmaState {
            rho_plus: self
                .plan
                .shift_x2(&state.rho_plus, self.params.t_plus * tau),
            rho_minus: self
                .plan
                .shift_x2(&state.rho_minus, self.params.t_minus * tau),
            time: state.time,
        }
    }

    fn transport_species(
        &self,
        state: &PlasmaState,
        e: &ElectricField,
        temperatures: [f64; 2],
        dt: f64,
    ) -> Result<(Field, Field)> {
        let plus = advect(&state.rho_plus, e, temperatures[0], dt)?;
        let minus = advect(&state.rho_minus, e, temperatures[1], dt)?;
        Ok((plus, minus))
    }

    /// Steps until `t_end` with `dt = min(cfg.dt, cfl_dt, t_end - t)`.
    pub fn run(
        &self,
        state: &PlasmaState,
        t_end: f64,
        observers: &mut [&mut dyn Observer],
    ) -> Result<PlasmaState> {
        if t_end < state.time {
            return Err(Error::Params(format!(
                "t_end {t_end} precedes state time {}",
                state.time
            )));
        }
        let mut last_fired = vec![0usize; observers.len()];
        for obs in observers.iter_mut() {
            notify(&mut **obs, 0, state)?;
        }
        let mut current = state.clone();
        let mut steps = 0usize;
        let eps = 1e-12 * t_end.abs().max(1.0);
        while t_end - current.time > eps {
            let e = self.electric_field(&current);
            let dt = self
                .cfg
                .dt
                .min(self.cfl_dt_for(current.grid(), &e))
                .min(t_end - current.time);
            current = self.advance(&current, dt)?;
            steps += 1;
            if t_end - current.time <= eps {
                current.time = t_end;
            }
            for (obs, last) in observers.iter_mut().zip(last_fired.iter_mut()) {
                if steps.is_multiple_of(obs.every().max(1)) {
                    notify(&mut **obs, steps, &current)?;
                    *last = steps;
                }
            }
        }
        for (obs, last) in observers.iter_mut().zip(&last_fired) {
            if *last != steps {
                notify(&mut **obs, steps, &current)?;
            }
        }
        Ok(current)
    }
}

fn notify(obs: &mut dyn Observer, step: usize, state: &PlasmaState) -> Result<()> {
    obs.observe(step, state).map_err(|source| Error::Observer {
        context: format!("{} at step {step}, t = {}", obs.name(), state.time),
        source,
    })
}

/// Semi-Lagrangian transport of one density under `(E2, -E1 - T)` over `dt`.
fn advect(rho: &Field, e: &ElectricField, temperature: f64, dt: f64) -> Result<Field> {
    let grid = *rho.grid();
    let n2 = grid.n2();
    let l = grid.box_len();
    let h1 = grid.h1();
    let mut out = Field::zeros(grid);
    out.data_mut()
        .par_chunks_mut(n2)
        .enumerate()
        .try_for_each(|(i, row)| {
            let x1 = grid.x1(i);
            for (j, slot) in row.iter_mut().enumerate() {
                let x2 = grid.x2(j);
                let k = grid.index(i, j);
                let u1 = e.c2.data()[k];
                let u2 = -e.c1.data()[k] - temperature;
                let mid1 = (x1 - 0.5 * dt * u1).clamp(0.0, l);
                let mid2 = x2 - 0.5 * dt * u2;
                let s = Stencil::new(&grid, mid1, mid2);
                let v1 = s.apply(&e.c2);
                let v2 = -s.apply(&e.c1) - temperature;
                let f1 = x1 - dt * v1;
                let f2 = x2 - dt * v2;
                if f1 < -h1 || f1 > l + h1 {
                    return Err(Error::FootOutOfDomain { x1: f1, x2: f2 });
                }
                let value = Stencil::new(&grid, f1.clamp(0.0, l), f2).apply(rho);
                *slot = value.max(NEGATIVE_DENSITY_CLAMP);
            }
            Ok(())
        })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{steady_state, SteadyKind};
    use std::f64::consts::PI;

    fn params() -> Params {
        Params::new(0.1, 0.02, 1.0).unwrap()
    }

    #[test]
    fn steady_velocity_is_vertical_drift() {
        let g = Grid::new(33, 32, 1.0).unwrap();
        let sim = Simulator::new(g, params(), StepperConfig::new(0.05, 0.5).unwrap());
        let s = steady_state(SteadyKind::BadCurvature, g);
        let (up, um) = sim.velocity_fields(&s);
        assert!(up.c1.max_abs() < 1e-15);
        assert!(up.c2.data().iter().all(|v| (v + 0.1).abs() < 1e-15));
        assert!(um.c2.data().iter().all(|v| (v + 0.02).abs() < 1e-15));
    }

    #[test]
    fn velocity_difference_is_constant() {
        let g = Grid::new(33, 32, 1.0).unwrap();
        let sim = Simulator::new(g, params(), StepperConfig::new(0.05, 0.5).unwrap());
        let bump = Field::from_fn(g, |x1, x2| {
            0.1 * (PI * x1).sin() * (2.0 * PI * x2).sin() + 0.05 * x1 * (1.0 - x1)
        });
        let s = steady_state(SteadyKind::GoodCurvature, g).perturbed(&bump, &Field::zeros(g));
        let (up, um) = sim.velocity_fields(&s);
        for k in 0..g.len() {
            assert!((up.c1.data()[k] - um.c1.data()[k]).abs() < 1e-15);
            assert!((up.c2.data()[k] - um.c2.data()[k] - (0.02 - 0.1)).abs() < 1e-14);
        }
    }

    #[test]
    fn cfl_examples() {
        let g = Grid::new(65, 64, 1.0).unwrap();
        let p = Params::new(0.1, 0.05, 1.0).unwrap();
        let sim = Simulator::new(g, p, StepperConfig::new(1.0, 0.5).unwrap());
        let s = steady_state(SteadyKind::BadCurvature, g);
        assert!((sim.cfl_dt(&s) - 0.078125).abs() < 1e-15);

        let g2 = Grid::new(129, 128, 1.0).unwrap();
        let sim2 = Simulator::new(g2, p, StepperConfig::new(1.0, 0.5).unwrap());
        let s2 = steady_state(SteadyKind::BadCurvature, g2);
        assert!((sim2.cfl_dt(&s2) - 0.5 * sim.cfl_dt(&s)).abs() < 1e-15);
    }

    #[test]
    fn zero_speed_hits_floor() {
        let g = Grid::new(9, 8, 1.0).unwrap();
        let sim = Simulator::new(g, params(), StepperConfig::new(1.0, 0.5).unwrap());
        let e = ElectricField::zeros(g);
        let p = Params {
            t_plus: 0.0,
            t_minus: 0.0,
            box_len: 1.0,
        };
        assert_eq!(max_speed(&e, &p), 0.0);
        let sim0 = Simulator { params: p, ..sim };
        assert!(sim0.cfl_dt_for(&g, &e) > 1e9);
    }

    #[test]
    fn config_validation() {
        assert!(StepperConfig::new(0.0, 0.5).is_err());
        assert!(StepperConfig::new(0.1, 0.0).is_err());
        assert!(StepperConfig::new(0.1, 1.5).is_err());
        assert!(StepperConfig::new(0.1, 1.0).is_ok());
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let g = Grid::new(33, 32, 1.0).unwrap();
        let sim = Simulator::new(g, params(), StepperConfig::new(1.0, 0.5).unwrap());
        let s = steady_state(SteadyKind::BadCurvature, g);
        assert!(matches!(sim.step(&s), Err(Error::Cfl { .. })));
    }

    #[test]
    fn steady_states_are_fixed_points() {
        let g = Grid::new(33, 32, 1.0).unwrap();
        for kind in [SteadyKind::GoodCurvature, SteadyKind::BadCurvature] {
            let sim = Simulator::new(g, params(), StepperConfig::new(0.1, 0.9).unwrap());
            let s0 = steady_state(kind, g);
            let s1 = sim.step(&s0).unwrap();
            let d =
                (&s1.rho_plus - &s0.rho_plus).max_abs() + (&s1.rho_minus - &s0.rho_minus).max_abs();
            assert!(d < 1e-14, "{kind:?}: {d}");
            assert!((s1.time - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn pure_drift_translates() {
        // uniform total density: E = 0 and each species drifts by T dt in -x2
        let g = Grid::new(33, 64, 1.0).unwrap();
        let p = params();
        let cfg = StepperConfig::new(0.1, 1.0)
            .unwrap()
            .with_coupling(Coupling::FrozenField)
            .with_drift(Drift::Interpolated);
        let sim = Simulator::new(g, p, cfg);
        let prof = |x1: f64, x2: f64| 0.5 + 0.2 * (PI * x1).sin() * (2.0 * PI * x2).cos();
        let plus = Field::from_fn(g, prof);
        let minus = plus.map(|v| 1.0 - v);
        let s0 = PlasmaState::new(plus, minus, 0.0).unwrap();
        // the two species move at different speeds, so only check the first step
        // against the analytic shift ρ0(x1, x2 + T dt); E is not zero after that
        let s1 = sim.step(&s0).unwrap();
        let exact = Field::from_fn(g, |x1, x2| prof(x1, x2 + p.t_plus * 0.1));
        assert!((&s1.rho_plus - &exact).max_abs() < 1e-5);
        let exact_minus = Field::from_fn(g, |x1, x2| 1.0 - prof(x1, x2 + p.t_minus * 0.1));
        assert!((&s1.rho_minus - &exact_minus).max_abs() < 1e-5);
    }

    #[test]
    fn drift_treatments_agree() {
        let g = Grid::new(65, 64, 1.0).unwrap();
        let p = params();
        let s0 = steady_state(SteadyKind::BadCurvature, g).perturbed(
            &Field::from_fn(g, |x1, x2| 0.01 * (PI * x1).sin() * (2.0 * PI * x2).cos()),
            &Field::from_fn(g, |x1, x2| {
                0.02 * (2.0 * PI * x1).sin() * (2.0 * PI * x2).sin()
            }),
        );
        let run = |drift| {
            let sim = Simulator::new(
                g,
                p,
                StepperConfig::new(0.05, 0.5).unwrap().with_drift(drift),
            );
            sim.run(&s0, 2.0, &mut []).unwrap()
        };
        let a = run(Drift::Interpolated);
        let b = run(Drift::SpectralShift);
        let d = (&a.rho_plus - &b.rho_plus)
            .max_abs()
            .max((&a.rho_minus - &b.rho_minus).max_abs());
        assert!(d < 1e-5, "{d}");
    }

    #[test]
    fn integer_shift_equivariance() {
        let g = Grid::new(33, 32, 1.0).unwrap();
        let sim = Simulator::new(g, params(), StepperConfig::new(0.05, 0.5).unwrap());
        let f = |x1: f64, x2: f64| {
            0.05 * (PI * x1).sin() * ((2.0 * PI * x2).cos() + 0.5 * (4.0 * PI * x2 + 1.0).sin())
        };
        let base = steady_state(SteadyKind::BadCurvature, g);
        let a = base.perturbed(
            &Field::from_fn(g, f),
            &Field::from_fn(g, |a, b| -f(a, b + 0.2)),
        );
        let shift = 5;
        let roll = |fld: &Field| {
            let mut out = Field::zeros(g);
            for i in 0..g.n1() {
                for j in 0..g.n2() {
                    out.data_mut()[g.index(i, (j + shift) % g.n2())] = fld.at(i, j);
                }
            }
            out
        };
        let b = PlasmaState::new(roll(&a.rho_plus), roll(&a.rho_minus), 0.0).unwrap();
        let mut sa = a;
        let mut sb = b;
        for _ in 0..5 {
            sa = sim.step(&sa).unwrap();
            sb = sim.step(&sb).unwrap();
        }
        assert!((&roll(&sa.rho_plus) - &sb.rho_plus).max_abs() < 1e-12);
        assert!((&roll(&sa.rho_minus) - &sb.rho_minus).max_abs() < 1e-12);
    }

    struct Counter {
        every: usize,
        steps: Vec<usize>,
    }

    impl Observer for Counter {
        fn every(&self) -> usize {
            self.every
        }
        fn observe(
            &mut self,
            step: usize,
            _: &PlasmaState,
        ) -> std::result::Result<(), Box<dyn std::error::Error + Send + Sync>> {
            self.steps.push(step);
            Ok(())
        }
    }

    struct Failing;

    impl Observer for Failing {
        fn every(&self) -> usize {
            1
        }
        fn observe(
            &mut self,
            step: usize,
            _: &PlasmaState,
        ) -> std::result::Result<(), Box<dyn std::error::Error + Send + Sync>> {
            if step == 2 {
                Err("disk full".into())
            } else {
                Ok(())
            }
        }
        fn name(&self) -> &str {
            "failing"
        }
    }

    #[test]
    fn run_with_zero_duration() {
        let g = Grid::new(17, 16, 1.0).unwrap();
        let sim = Simulator::new(g, params(), StepperConfig::new(0.1, 0.5).unwrap());
        let s0 = steady_state(SteadyKind::BadCurvature, g);
        let mut c = Counter {
            every: 3,
            steps: vec![],
        };
        let out = sim.run(&s0, 0.0, &mut [&mut c]).unwrap();
        assert_eq!(out, s0);
        assert_eq!(c.steps, vec![0]);
    }

    #[test]
    fn run_cadence_and_final_time() {
        let g = Grid::new(17, 16, 1.0).unwrap();
        let sim = Simulator::new(g, params(), StepperConfig::new(0.1, 0.5).unwrap());
        let s0 = steady_state(SteadyKind::BadCurvature, g);
        let mut c = Counter {
            every: 3,
            steps: vec![],
        };
        let out = sim.run(&s0, 1.05, &mut [&mut c]).unwrap();
        assert_eq!(out.time, 1.05);
        // 10 full steps of 0.1 and one of 0.05
        assert_eq!(c.steps, vec![0, 3, 6, 9, 11]);
        assert!(sim.run(&out, 0.5, &mut []).is_err());
    }

    #[test]
    fn observer_errors_carry_context() {
        let g = Grid::new(17, 16, 1.0).unwrap();
        let sim = Simulator::new(g, params(), StepperConfig::new(0.1, 0.5).unwrap());
        let s0 = steady_state(SteadyKind::BadCurvature, g);
        let err = sim.run(&s0, 1.0, &mut [&mut Failing]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("failing at step 2"), "{msg}");
    }
}
