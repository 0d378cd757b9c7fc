//! Work extraction from correlated quantum systems.
//!
//! The crate covers the dense operator substrate ([`algebra`]), entropic and
//! free-energy functionals ([`thermo`]), measurement-based correlations and
//! discord ([`correlations`]), the feedback work ledgers built on them
//! ([`feedback`]) and a discretized quasi-static isothermal engine
//! ([`engine`]).

pub mod algebra;
pub mod correlations;
pub mod engine;
pub mod error;
pub mod feedback;
pub mod optimize;
pub mod states;
pub mod thermo;

pub use algebra::{Bipartite, CMatrix, Density, Hermitian, Subsystem};
pub use correlations::{CorrelationReport, ProjectiveMeasurement, SearchSettings};
pub use engine::{GibbsMapSpec, KernelRegularization, TrajectoryReport};
pub use error::{Error, Result};
pub use feedback::{FeedbackScenario, Residual, WorkLedger};
pub use thermo::{ThermalContext, WorkKind, WorkValue};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
