use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use plasma_lab::experiment::SEED_K_MAX;
use plasma_lab::linmodes::{analyze, dominant_mode};
use plasma_lab::SteadyKind;
use rayon::prelude::*;

use crate::config::{RunConfig, Scenario};
use crate::error::CliError;
use crate::simulate::run_in;

pub const SWEEP_FILE: &str = "sweep.csv";
pub const THREADS_VAR: &str = "PLASMA_LAB_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gradient: f64,
    pub scenario: Option<Scenario>,
    pub predicted_rate: f64,
    pub measured_rate: f64,
    pub max_amplification: f64,
    pub class: &'static str,
    pub error: Option<String>,
}

/// `unstable` when a linear mode grows; above `1/π²`, `certified-stable` if
/// the measured `dev²` amplification respects `1/(1 - 1/(π² g))`, otherwise
/// `certificate-violated`; `marginal` in between.
pub fn classify(gradient: f64, predicted_rate: f64, amplification: f64) -> &'static str {
    if predicted_rate > 0.0 {
        return "unstable";
    }
    if gradient > 1.0 / (PI * PI) {
        let bound = 1.0 / (1.0 - 1.0 / (PI * PI * gradient));
        return if amplification <= bound {
            "certified-stable"
        } else {
            "certificate-violated"
        };
    }
    "marginal"
}

pub fn parse_gradients(list: &str) -> Result<Vec<f64>, CliError> {
    let items: Vec<&str> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(CliError::Config(
            "--gradients needs at least one value".into(),
        ));
    }
    items
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| CliError::Config(format!("gradient '{s}': {e}")))
        })
        .collect()
}

/// Thread cap from `PLASMA_LAB_THREADS`, if set.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{THREADS_VAR} must be a positive integer, got '{v}'"
            ))),
        },
    }
}

/// The member config for one gradient. An eigenmode seed falls back to a
/// random perturbation of the same size when nothing grows.
fn member_config(base: &RunConfig, gradient: f64) -> Result<RunConfig, CliError> {
    let mut cfg = base.with_gradient(gradient)?;
    if cfg.scenario == Scenario::EigenmodeSeed {
        let params = cfg.params()?;
        let growing = match cfg.seed_mode() {
            Some(m) => analyze(m, &params, SteadyKind::BadCurvature).is_growing(),
            None => dominant_mode(&params, SteadyKind::BadCurvature, SEED_K_MAX).is_some(),
        };
        if !growing {
            cfg.scenario = Scenario::SteadyBad;
        }
    }
    Ok(cfg)
}

fn run_member(base: &RunConfig, index: usize, gradient: f64) -> SweepRow {
    let failed = |scenario, e: CliError| SweepRow {
        gradient,
        scenario,
        predicted_rate: f64::NAN,
        measured_rate: f64::NAN,
        max_amplification: f64::NAN,
        class: "failed",
        error: Some(e.to_string()),
    };
    let cfg = match member_config(base, gradient) {
        Ok(c) => c,
        Err(e) => return failed(None, e),
    };
    let dir = base.output_dir.join(format!("run_{index:03}"));
    match run_in(&cfg, &dir) {
        Ok(s) => {
            let amp = s.max_amplification();
            SweepRow {
                gradient,
                scenario: Some(cfg.scenario),
                predicted_rate: s.predicted_rate,
                measured_rate: s.measured_rate(),
                max_amplification: amp,
                class: classify(gradient, s.predicted_rate, amp),
                error: None,
            }
        }
        Err(e) => failed(Some(cfg.scenario), e),
    }
}

/// Runs every gradient, in order, duplicates included. Member failures are
/// reported in their row.
pub fn run_sweep(
    base: &RunConfig,
    gradients: &[f64],
    threads: Option<usize>,
) -> Result<Vec<SweepRow>, CliError> {
    if gradients.is_empty() {
        return Err(CliError::Config("empty gradient list".into()));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        gradients
            .par_iter()
            .enumerate()
            .map(|(i, &g)| run_member(base, i, g))
            .collect()
    }))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(
        "gradient,scenario,predicted_rate,measured_rate,max_amplification,class,error\n",
    );
    for r in rows {
        let scenario = r.scenario.map_or("", Scenario::name);
        let error = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(
            s,
            "{:e},{scenario},{:e},{:e},{:e},{},{error}",
            r.gradient, r.predicted_rate, r.measured_rate, r.max_amplification, r.class
        );
    }
    s
}

pub fn cmd_sweep(config: &Path, gradients: &str) -> Result<(), CliError> {
    let base = RunConfig::load(config)?;
    let gradients = parse_gradients(gradients)?;
    let rows = run_sweep(&base, &gradients, thread_cap()?)?;
    let text = sweep_csv(&rows);
    std::fs::create_dir_all(&base.output_dir).map_err(CliError::io(format!(
        "creating {}",
        base.output_dir.display()
    )))?;
    let path = base.output_dir.join(SWEEP_FILE);
    std::fs::write(&path, &text).map_err(CliError::io(format!("writing {}", path.display())))?;
    print!("{text}");
    Ok(())
}
