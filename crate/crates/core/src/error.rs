use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Named design constraints checked by the planner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Upper bound on the relay-disc radius `a_l`.
    RelayRadius,
    /// Lower bound on the eavesdropper-free radius `a_e`.
    EavesFreeRadius,
    /// Simplified lower bound on the relay count `n_r`.
    RelayCount,
    /// Geometry-aware lower bound on `n_r` at the chosen `a_l`.
    RelayCountGeneral,
    /// Upper bound on the tolerable number of eavesdroppers.
    EavesCount,
    /// Lower bound on the legitimate density.
    LegitDensity,
    /// Upper bound on the eavesdropper density.
    EavesDensity,
    /// `a_l < d_TR / 2`, required for the beamforming stage.
    ReceiverGeometry,
    /// `a_l < a_e`.
    RadiiOrder,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::RelayRadius => "relay_radius",
            Constraint::EavesFreeRadius => "eaves_free_radius",
            Constraint::RelayCount => "relay_count",
            Constraint::RelayCountGeneral => "relay_count_general",
            Constraint::EavesCount => "eaves_count",
            Constraint::LegitDensity => "legit_density",
            Constraint::EavesDensity => "eaves_density",
            Constraint::ReceiverGeometry => "receiver_geometry",
            Constraint::RadiiOrder => "radii_order",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("distance {distance} lies inside the eavesdropper-free disc of radius {a_e}")]
    OutsideLayers { distance: f64, a_e: f64 },

    #[error("zero distance on the {0} link")]
    ZeroDistance(&'static str),

    #[error("constraint `{constraint}` is infeasible: {detail}")]
    Infeasible { constraint: Constraint, detail: String },

    #[error("plan is in direct mode; the beamforming stage does not apply")]
    DirectMode,

    #[error("plan document: {0}")]
    Document(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn infeasible(constraint: Constraint, detail: impl Into<String>) -> Self {
        Error::Infeasible { constraint, detail: detail.into() }
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn ensure_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and >= 0, got {value}")))
    }
}
