pub mod diagnostics;
pub mod drifts;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod interp;
pub mod linmodes;
pub mod poisson;
pub mod snapshot;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{
    steady_state, total_mass, Field, Grid, Params, Perturbation, PlasmaState, Species, SteadyKind,
};
pub use poisson::{field_energy, ElectricField, SpectralPlan, VectorField};
pub use transport::{Coupling, Drift, Observer, Simulator, StepperConfig};
