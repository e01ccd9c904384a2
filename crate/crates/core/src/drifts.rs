//! Guiding-centre characteristics without electric field:
//!
//! ```text
//! dx/dt = (-v1 (v2 - x1), v2 (x1 - v2) - |v|²/2)
//! dv/dt = (v2 (v2 - x1), -v1 (v2 - x1))
//! ```
//!
//! `x1 - v2` and `|v|²` are conserved, the velocity rotates at angular speed
//! `C1 = x1(0) - v2(0)` and `x2 + v1` falls at the constant rate `|v|²/2`.

use crate::diagnostics::linear_fit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub x1: f64,
    pub x2: f64,
    pub v1: f64,
    pub v2: f64,
}

impl ParticleState {
    pub fn new(x1: f64, x2: f64, v1: f64, v2: f64) -> Self {
        Self { x1, x2, v1, v2 }
    }

    /// `x1 - v2`
    pub fn c1(&self) -> f64 {
        self.x1 - self.v2
    }

    /// `v1² + v2²`
    pub fn c2(&self) -> f64 {
        self.v1 * self.v1 + self.v2 * self.v2
    }

    fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.v1.is_finite() && self.v2.is_finite()
    }

    fn axpy(&self, h: f64, d: &ParticleState) -> ParticleState {
        ParticleState {
            x1: self.x1 + h * d.x1,
            x2: self.x2 + h * d.x2,
            v1: self.v1 + h * d.v1,
            v2: self.v2 + h * d.v2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ParticleState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, p: ParticleState) {
        self.times.push(t);
        self.states.push(p);
    }
}

pub fn drift_rhs(p: &ParticleState) -> ParticleState {
    let s = p.v2 - p.x1;
    ParticleState {
        x1: -p.v1 * s,
        x2: -p.v2 * s - 0.5 * p.c2(),
        v1: p.v2 * s,
        v2: -p.v1 * s,
    }
}

fn rk4_step(p: &ParticleState, dt: f64) -> ParticleState {
    let k1 = drift_rhs(p);
    let k2 = drift_rhs(&p.axpy(0.5 * dt, &k1));
    let k3 = drift_rhs(&p.axpy(0.5 * dt, &k2));
    let k4 = drift_rhs(&p.axpy(dt, &k3));
    ParticleState {
        x1: p.x1 + dt / 6.0 * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1),
        x2: p.x2 + dt / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2),
        v1: p.v1 + dt / 6.0 * (k1.v1 + 2.0 * k2.v1 + 2.0 * k3.v1 + k4.v1),
        v2: p.v2 + dt / 6.0 * (k1.v2 + 2.0 * k2.v2 + 2.0 * k3.v2 + k4.v2),
    }
}

/// Classical RK4 with `n` steps of `dt`, keeping every sample.
pub fn integrate_orbit(p0: ParticleState, dt: f64, n: usize) -> Result<Trajectory> {
    integrate_orbit_every(p0, dt, n, 1)
}

/// As [`integrate_orbit`] but storing only every `every`-th step (plus the
/// final one).
pub fn integrate_orbit_every(
    p0: ParticleState,
    dt: f64,
    n: usize,
    every: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) || n == 0 || every == 0 {
        return Err(Error::Params(format!(
            "need dt > 0, n >= 1, every >= 1 (dt = {dt}, n = {n}, every = {every})"
        )));
    }
    if !p0.is_finite() {
        return Err(Error::OrbitDiverged { step: 0 });
    }
    let mut traj = Trajectory::default();
    traj.push(0.0, p0);
    let mut p = p0;
    for step in 1..=n {
        p = rk4_step(&p, dt);
        if !p.is_finite() {
            return Err(Error::OrbitDiverged { step });
        }
        if step % every == 0 || step == n {
            traj.push(step as f64 * dt, p);
        }
    }
    Ok(traj)
}

/// Exact solution at time `t`.
pub fn closed_form_orbit(p0: &ParticleState, t: f64) -> ParticleState {
    if t == 0.0 {
        return *p0;
    }
    let c1 = p0.c1();
    let c2 = p0.c2();
    let (s, c) = (c1 * t).sin_cos();
    let v1 = p0.v1 * c - p0.v2 * s;
    let v2 = p0.v1 * s + p0.v2 * c;
    ParticleState {
        x1: v2 + c1,
        x2: p0.x2 + p0.v1 - v1 - 0.5 * c2 * t,
        v1,
        v2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantResiduals {
    /// `max |C1(t) - C1(0)|`
    pub c1: f64,
    /// `max |C2(t) - C2(0)|`
    pub c2: f64,
    /// `max |(x2 + v1 + C2 t / 2)(t) - (x2 + v1)(0)|`
    pub fall: f64,
}

pub fn orbit_invariants(traj: &Trajectory) -> Result<InvariantResiduals> {
    let (t0, p0) = match (traj.times.first(), traj.states.first()) {
        (Some(t), Some(p)) => (*t, *p),
        _ => return Err(Error::Params("empty trajectory".into())),
    };
    let c1 = p0.c1();
    let c2 = p0.c2();
    let fall0 = p0.x2 + p0.v1;
    let mut r = InvariantResiduals {
        c1: 0.0,
        c2: 0.0,
        fall: 0.0,
    };
    for (t, p) in traj.times.iter().zip(&traj.states) {
        r.c1 = r.c1.max((p.c1() - c1).abs());
        r.c2 = r.c2.max((p.c2() - c2).abs());
        r.fall = r
            .fall
            .max((p.x2 + p.v1 + 0.5 * c2 * (t - t0) - fall0).abs());
    }
    Ok(r)
}

/// Least-squares slope of `x2 + v1` against time; `-|v|²/2` for exact orbits.
pub fn fall_rate(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 2 {
        return Err(Error::Params(
            "need at least two samples to fit a fall rate".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, p)| (*t, p.x2 + p.v1))
        .collect();
    Ok(linear_fit(&pts).0)
}
