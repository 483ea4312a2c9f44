//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("value not representable: {0}")]
    NotRepresentable(String),
    #[error("incompatible set representations: {0}")]
    IncompatibleRepresentation(String),
}

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("radius {0} is at or above the connected-ball bound {1}")]
    UnsupportedRadius(String, String),
    #[error("flow integrator diverged: {0}")]
    IntegratorDivergence(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid system configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Error)]
pub enum FirstTimeError {
    #[error("diameter did not exceed the threshold within budget {budget}")]
    NotIncreasedWithinBudget { budget: u64 },
    #[error("radius bisection stalled: diameter not monotone at step {step}")]
    BisectionStalled { step: u64 },
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Error)]
pub enum ContinuaError {
    #[error("no radius reaches the first-increase window at stage {stage}")]
    RadiusWindowEmpty { stage: u64 },
    #[error("approximants did not converge: residuals stagnate above {tol}")]
    NoConvergence { tol: String },
    #[error(transparent)]
    FirstTime(#[from] FirstTimeError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error)]
pub enum FtMetricError {
    #[error("no chain through the catalog connects the marked points")]
    NoChain,
    #[error("split failed at level {level}: image diameter below the split threshold")]
    SplitFailed { level: u32 },
    #[error(transparent)]
    FirstTime(#[from] FirstTimeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
