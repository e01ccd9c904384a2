use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid size: {0}")]
    Sizing(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("field does not match grid: {0}")]
    Malformed(String),

    #[error("time step {dt} exceeds CFL limit {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("characteristic foot ({x1}, {x2}) left the slab")]
    FootOutOfDomain { x1: f64, x2: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("orbit became non-finite at step {step}")]
    OrbitDiverged { step: usize },

    #[error("mode ({k1}, {k2}) is not growing")]
    NotGrowing { k1: i64, k2: i64 },

    #[error("growth fit: {0}")]
    Fit(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("observer failed: {context}")]
    Observer {
        context: String,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
