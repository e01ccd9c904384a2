use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use plasma_lab::diagnostics::{poincare_pair, record, EnergyRecord};
use plasma_lab::experiment::{
    eigenmode_seed, gap_drift, growth_summary, mass_drift, max_amplification,
    random_smooth_perturbation, steady_norm, GrowthSummary, SEED_K_MAX,
};
use plasma_lab::linmodes::dominant_mode;
use plasma_lab::{
    snapshot, steady_state, Observer, Params, PlasmaState, Simulator, SpectralPlan, SteadyKind,
    StepperConfig,
};

use crate::config::{RunConfig, Scenario};
use crate::error::CliError;

type ObserveResult = Result<(), Box<dyn std::error::Error + Send + Sync>>;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

pub fn snapshot_name(step: usize) -> String {
    format!("snap_{step:06}.pfld")
}

/// What a finished run reports.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub scenario: Scenario,
    pub reference: SteadyKind,
    pub gradient: f64,
    pub t_final: f64,
    pub records: Vec<EnergyRecord>,
    /// Linear rate of the seeded mode, or of the dominant bad-side mode.
    pub predicted_rate: f64,
    pub growth: Option<GrowthSummary>,
    pub fit_note: Option<String>,
    pub poincare_violations: usize,
}

impl RunSummary {
    pub fn max_amplification(&self) -> f64 {
        max_amplification(&self.records)
    }

    /// Fitted rate; NaN when a fit was attempted and failed, 0 when none was attempted.
    pub fn measured_rate(&self) -> f64 {
        let missing = if self.fit_note.is_some() {
            f64::NAN
        } else {
            0.0
        };
        self.growth.map_or(missing, |g| g.dev.rate)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("scenario", self.scenario.name().to_string());
        line("reference", self.reference.to_string());
        line("gradient", format!("{:e}", self.gradient));
        line("t_final", format!("{:e}", self.t_final));
        line("records", self.records.len().to_string());
        let amp = self.max_amplification();
        line(
            "max_dev2_amplification",
            if amp.is_finite() {
                format!("{amp:e}")
            } else {
                "undefined".into()
            },
        );
        line("gap_drift", format!("{:e}", gap_drift(&self.records)));
        line("mass_drift", format!("{:e}", mass_drift(&self.records)));
        line("poincare_violations", self.poincare_violations.to_string());
        line("predicted_rate", format!("{:e}", self.predicted_rate));
        match &self.growth {
            Some(g) => {
                line("fitted_rate", format!("{:e}", g.dev.rate));
                line("fit_quality", format!("{:e}", g.dev.quality));
                line("field_rate", format!("{:e}", g.field.rate));
                line("fit_window", format!("{:e} {:e}", g.window.0, g.window.1));
            }
            None => line("fitted_rate", "none".into()),
        }
        if let Some(note) = &self.fit_note {
            line("fit_note", note.clone());
        }
        s
    }
}

/// Initial state and the linear rate that goes with it.
pub fn initial_state(cfg: &RunConfig) -> Result<(PlasmaState, f64), CliError> {
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let bad_rate = || {
        dominant_mode(&params, SteadyKind::BadCurvature, SEED_K_MAX).map_or(0.0, |a| a.growth_rate)
    };
    match cfg.scenario {
        Scenario::SteadyGood | Scenario::SteadyBad => {
            let kind = cfg.scenario.default_reference();
            let pert = random_smooth_perturbation(grid, cfg.seed_amplitude, cfg.seed);
            let rate = if kind == SteadyKind::BadCurvature {
                bad_rate()
            } else {
                0.0
            };
            Ok((pert.apply_to(&steady_state(kind, grid)), rate))
        }
        Scenario::EigenmodeSeed => {
            let (state, analysis) =
                eigenmode_seed(&params, grid, cfg.seed_amplitude, cfg.seed_mode())
                    .map_err(|e| CliError::Config(format!("eigenmode-seed: {e}")))?;
            Ok((state, analysis.growth_rate))
        }
        Scenario::FileInit => {
            let path = cfg.init_file.as_deref().expect("validated");
            let state = snapshot::load(path)?;
            let g = state.grid();
            if (g.n1(), g.n2()) != (grid.n1(), grid.n2()) || g.box_len() != grid.box_len() {
                return Err(CliError::Config(format!(
                    "{} holds a {}x{} grid with L = {}, config asks for {}x{} with L = {}",
                    path.display(),
                    g.n1(),
                    g.n2(),
                    g.box_len(),
                    grid.n1(),
                    grid.n2(),
                    grid.box_len()
                )));
            }
            Ok((state, bad_rate()))
        }
    }
}

struct CsvRecorder<'a> {
    plan: &'a SpectralPlan,
    params: Params,
    reference: SteadyKind,
    every: usize,
    out: BufWriter<File>,
    records: Vec<EnergyRecord>,
    poincare_violations: usize,
}

impl Observer for CsvRecorder<'_> {
    fn every(&self) -> usize {
        self.every
    }

    fn observe(&mut self, _step: usize, state: &PlasmaState) -> ObserveResult {
        let r = record(self.plan, state, &self.params, self.reference);
        let (elec, bound) = poincare_pair(self.plan, state);
        if elec > bound * (1.0 + 1e-12) + 1e-300 {
            self.poincare_violations += 1;
        }
        let row: Vec<String> = r.values().iter().map(|v| format!("{v:e}")).collect();
        writeln!(self.out, "{}", row.join(","))?;
        self.records.push(r);
        Ok(())
    }

    fn name(&self) -> &str {
        DIAGNOSTICS_FILE
    }
}

struct SnapshotWriter {
    dir: PathBuf,
    every: usize,
}

impl Observer for SnapshotWriter {
    fn every(&self) -> usize {
        self.every
    }

    fn observe(&mut self, step: usize, state: &PlasmaState) -> ObserveResult {
        snapshot::save(self.dir.join(snapshot_name(step)), state)?;
        Ok(())
    }

    fn name(&self) -> &str {
        "snapshot writer"
    }
}

/// Runs `cfg` and writes diagnostics, snapshots and the summary into `dir`.
pub fn run_in(cfg: &RunConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let reference = cfg.reference()?;
    let (initial, predicted_rate) = initial_state(cfg)?;

    std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    let csv_path = dir.join(DIAGNOSTICS_FILE);
    let mut out = BufWriter::new(
        File::create(&csv_path)
            .map_err(CliError::io(format!("creating {}", csv_path.display())))?,
    );
    writeln!(out, "{}", EnergyRecord::COLUMNS.join(","))
        .map_err(CliError::io(csv_path.display().to_string()))?;

    let step_cfg = StepperConfig::new(cfg.dt.unwrap_or(f64::INFINITY), cfg.cfl_safety)?;
    let sim = Simulator::new(grid, params, step_cfg);
    let mut recorder = CsvRecorder {
        plan: sim.plan(),
        params,
        reference,
        every: cfg.record_every,
        out,
        records: Vec::new(),
        poincare_violations: 0,
    };
    let mut snaps = SnapshotWriter {
        dir: dir.to_path_buf(),
        every: cfg.snapshot_every,
    };
    let last = sim.run(&initial, cfg.t_end, &mut [&mut recorder, &mut snaps])?;
    recorder
        .out
        .flush()
        .map_err(CliError::io(csv_path.display().to_string()))?;

    let (growth, fit_note) =
        if cfg.scenario == Scenario::EigenmodeSeed && recorder.records.len() > 1 {
            match growth_summary(
                &recorder.records,
                cfg.seed_amplitude,
                steady_norm(reference, grid),
            ) {
                Ok(g) => (Some(g), None),
                Err(e) => (None, Some(e.to_string())),
            }
        } else {
            (None, None)
        };
    let summary = RunSummary {
        scenario: cfg.scenario,
        reference,
        gradient: params.gradient(),
        t_final: last.time,
        records: recorder.records,
        predicted_rate,
        growth,
        fit_note,
        poincare_violations: recorder.poincare_violations,
    };
    let path = dir.join(SUMMARY_FILE);
    std::fs::write(&path, summary.render())
        .map_err(CliError::io(format!("writing {}", path.display())))?;
    Ok(summary)
}

pub fn cmd_simulate(config: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let summary = run_in(&cfg, &cfg.output_dir)?;
    print!("{}", summary.render());
    Ok(())
}
