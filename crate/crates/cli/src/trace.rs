use std::fmt::Write as _;
use std::path::Path;

use plasma_lab::drifts::{
    fall_rate, integrate_orbit_every, orbit_invariants, ParticleState, Trajectory,
};

use crate::error::CliError;

/// `t,x1,x2,v1,v2` rows followed by a comment line with the invariant residuals.
pub fn trace_csv(traj: &Trajectory) -> Result<String, CliError> {
    let mut s = String::from("t,x1,x2,v1,v2\n");
    for (t, p) in traj.times.iter().zip(&traj.states) {
        let _ = writeln!(s, "{t:e},{:e},{:e},{:e},{:e}", p.x1, p.x2, p.v1, p.v2);
    }
    let r = orbit_invariants(traj)?;
    let _ = write!(
        s,
        "# residuals c1 {:e} c2 {:e} fall {:e}",
        r.c1, r.c2, r.fall
    );
    if traj.len() >= 2 {
        let _ = write!(s, " fall_rate {:e}", fall_rate(traj)?);
    }
    s.push('\n');
    Ok(s)
}

pub fn cmd_trace(
    p0: ParticleState,
    dt: f64,
    steps: usize,
    decimate: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if !(dt > 0.0) || steps == 0 || decimate == 0 {
        return Err(CliError::Config(format!(
            "need --dt > 0, --steps >= 1, --decimate >= 1 (got {dt}, {steps}, {decimate})"
        )));
    }
    let traj = integrate_orbit_every(p0, dt, steps, decimate)?;
    let text = trace_csv(&traj)?;
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(CliError::io(format!("writing {}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}
