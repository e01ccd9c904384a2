use std::path::{Path, PathBuf};

use plasma_lab::linmodes::ModeIndex;
use plasma_lab::{Grid, Params, SteadyKind};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SteadyGood,
    SteadyBad,
    EigenmodeSeed,
    FileInit,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SteadyGood => "steady-good",
            Scenario::SteadyBad => "steady-bad",
            Scenario::EigenmodeSeed => "eigenmode-seed",
            Scenario::FileInit => "file-init",
        }
    }

    pub fn default_reference(self) -> SteadyKind {
        match self {
            Scenario::SteadyGood => SteadyKind::GoodCurvature,
            _ => SteadyKind::BadCurvature,
        }
    }
}

/// One simulation, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_plus: f64,
    pub t_minus: f64,
    #[serde(rename = "box")]
    pub box_len: f64,
    pub n1: usize,
    pub n2: usize,
    pub scenario: Scenario,
    /// Eigenmode amplitude, or the random perturbation added to a steady scenario.
    #[serde(default)]
    pub seed_amplitude: f64,
    #[serde(default)]
    pub seed_mode: Option<(i64, i64)>,
    pub t_end: f64,
    pub cfl_safety: f64,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default = "one")]
    pub snapshot_every: usize,
    pub output_dir: PathBuf,
    /// Step cap; the CFL limit alone applies when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub init_file: Option<PathBuf>,
    /// Seed of the random perturbation in the steady scenarios.
    #[serde(default)]
    pub seed: u64,
    /// Equilibrium the diagnostics measure against; follows the scenario by default.
    #[serde(default)]
    pub reference: Option<String>,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.params()?;
        self.grid()?;
        if !(self.seed_amplitude >= 0.0 && self.seed_amplitude.is_finite()) {
            return bad(format!(
                "seed_amplitude must be finite and >= 0, got {}",
                self.seed_amplitude
            ));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be finite and >= 0, got {}", self.t_end));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            ));
        }
        if self.record_every == 0 || self.snapshot_every == 0 {
            return bad("record_every and snapshot_every must be >= 1".into());
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        if let Some((k1, k2)) = self.seed_mode {
            ModeIndex::new(k1, k2).map_err(|e| CliError::Config(format!("seed_mode: {e}")))?;
        }
        if self.scenario == Scenario::FileInit && self.init_file.is_none() {
            return bad("scenario file-init needs init_file".into());
        }
        self.reference()?;
        Ok(())
    }

    pub fn params(&self) -> Result<Params, CliError> {
        Params::new(self.t_plus, self.t_minus, self.box_len)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.n1, self.n2, self.box_len).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn seed_mode(&self) -> Option<ModeIndex> {
        self.seed_mode
            .and_then(|(k1, k2)| ModeIndex::new(k1, k2).ok())
    }

    pub fn reference(&self) -> Result<SteadyKind, CliError> {
        match &self.reference {
            None => Ok(self.scenario.default_reference()),
            Some(s) => s
                .parse()
                .map_err(|e: plasma_lab::Error| CliError::Config(format!("reference: {e}"))),
        }
    }

    /// The same run at another temperature gradient, keeping `T-` and `L`.
    pub fn with_gradient(&self, gradient: f64) -> Result<Self, CliError> {
        let mut cfg = self.clone();
        cfg.t_plus = self.t_minus + gradient * self.box_len;
        cfg.params()?;
        Ok(cfg)
    }
}
