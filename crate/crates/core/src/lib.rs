//! Planning and Monte Carlo verification for stochastic virtual beamforming
//! in large Poisson wireless networks.
//!
//! A source at the origin first pushes a wiretap-coded message to `n_r`
//! relays recruited from a small disc around it, then the relays re-send the
//! message with weights conjugate to their channels towards the receiver,
//! forming a distributed beam. The [`planner`] turns a target
//! `(secure rate, outage)` pair into the six design parameters of the scheme,
//! and [`montecarlo`] samples whole network realizations to check every
//! outage sub-budget empirically.
//!
//! Module map:
//! - [`geometry`]: network extent, Poisson sampling, annular layering
//! - [`channel`]: Rayleigh fading with path loss, link capacities
//! - [`planner`]: closed-form constraints and the [`Plan`] pipeline
//! - [`beamform`]: one two-stage realization, rates and received powers
//! - [`moments`]: exact fading moments of the received powers and bounds
//! - [`montecarlo`]: trial orchestration, outage reports, verifiers

pub mod beamform;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod moments;
pub mod montecarlo;
pub mod planner;
pub mod rng;
pub mod stats;

pub use beamform::{NetworkRealization, RelaySelection, Stage2Mode, StageRates};
pub use channel::{ComplexGain, FadingDraw};
pub use error::{Constraint, Error, Result};
pub use geometry::{Annulus, NetworkConfig, Point};
pub use montecarlo::{OutageReport, SimOptions, TrialOutcome};
pub use planner::{ConstraintCheck, Mode, Plan, PlanDocument, SecrecyTarget};

/// Version tag written into every serialized plan and report.
pub const SCHEMA_VERSION: &str = "1.0";
