use std::fmt::Write as _;
use std::path::Path;

use plasma_lab::linmodes::{analyze, dominant_mode, mode_window};
use plasma_lab::{Params, SteadyKind};

use crate::error::CliError;

pub const MODES_FILE: &str = "modes.csv";

/// The mode table: one row per `(k1, k2)` in the window, then a comment line
/// naming the dominant mode or `stable`.
pub fn modes_table(params: &Params, side: SteadyKind, k_max: usize) -> String {
    let mut s = String::from("k1,k2,discriminant,growth_rate,threshold\n");
    for mode in mode_window(k_max) {
        let a = analyze(mode, params, side);
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{:e}",
            mode.k1(),
            mode.k2(),
            a.discriminant,
            a.growth_rate,
            a.threshold
        );
    }
    s.push_str(&dominant_line(params, side, k_max));
    s.push('\n');
    s
}

pub fn dominant_line(params: &Params, side: SteadyKind, k_max: usize) -> String {
    match dominant_mode(params, side, k_max) {
        Some(a) => format!(
            "# dominant ({},{}) growth_rate {:e}",
            a.mode.k1(),
            a.mode.k2(),
            a.growth_rate
        ),
        None => "# stable".to_string(),
    }
}

pub fn cmd_modes(
    t_plus: f64,
    t_minus: f64,
    box_len: f64,
    side: &str,
    k_max: usize,
    out: &Path,
) -> Result<(), CliError> {
    let params =
        Params::new(t_plus, t_minus, box_len).map_err(|e| CliError::Config(e.to_string()))?;
    let side: SteadyKind = side
        .parse()
        .map_err(|e: plasma_lab::Error| CliError::Config(e.to_string()))?;
    if k_max == 0 {
        return Err(CliError::Config("--kmax must be at least 1".into()));
    }
    std::fs::create_dir_all(out).map_err(CliError::io(format!("creating {}", out.display())))?;
    let path = out.join(MODES_FILE);
    std::fs::write(&path, modes_table(&params, side, k_max))
        .map_err(CliError::io(format!("writing {}", path.display())))?;
    println!(
        "{}",
        dominant_line(&params, side, k_max).trim_start_matches("# ")
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn table_shape_and_verdicts() {
        let p = Params::with_gradient(0.01, 0.04, 1.0).unwrap();
        let t = modes_table(&p, SteadyKind::BadCurvature, 4);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 1 + 32 + 1);
        assert_eq!(lines[0], "k1,k2,discriminant,growth_rate,threshold");
        assert!(lines[33].starts_with("# dominant (1,1) "));
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(&first[..2], &[1.0, 1.0]);
        assert!((first[4] - 4.0 / (5.0 * PI * PI)).abs() < 1e-15);

        let stable = Params::with_gradient(0.01, 0.09, 1.0).unwrap();
        assert_eq!(
            dominant_line(&stable, SteadyKind::BadCurvature, 4),
            "# stable"
        );
        assert_eq!(dominant_line(&p, SteadyKind::GoodCurvature, 4), "# stable");
    }
}
