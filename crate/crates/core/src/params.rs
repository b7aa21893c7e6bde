use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitKind {
    Hyperbolic,
    Parabolic,
    Teichmuller,
}

/// Central charge `c`, constant representative `b0` and orbit type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    pub c: f64,
    pub b0: f64,
    pub kind: OrbitKind,
}

const TEICH_TOL: f64 = 1e-12;

impl OrbitParams {
    /// Classifies the orbit from `b0`; elliptic orbits other than the
    /// Teichmüller one are rejected.
    pub fn new(c: f64, b0: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParams(format!("central charge must be positive, got {c}")));
        }
        if !b0.is_finite() {
            return Err(Error::InvalidParams("b0 must be finite".into()));
        }
        let kind = if b0 < 0.0 {
            OrbitKind::Hyperbolic
        } else if b0 == 0.0 {
            OrbitKind::Parabolic
        } else if (b0 - c / 24.0).abs() <= TEICH_TOL * c.max(1.0) {
            OrbitKind::Teichmuller
        } else {
            return Err(Error::InvalidParams(format!(
                "b0 = {b0} lies on an elliptic orbit without a chart"
            )));
        };
        Ok(Self { c, b0, kind })
    }

    /// Hyperbolic orbit `b0 = -cα²/24`; `α = 0` gives the parabolic orbit.
    pub fn from_alpha(c: f64, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParams(format!("alpha must be non-negative, got {alpha}")));
        }
        Self::new(c, -c * alpha * alpha / 24.0)
    }

    pub fn parabolic(c: f64) -> Result<Self> {
        Self::new(c, 0.0)
    }

    pub fn teichmuller(c: f64) -> Result<Self> {
        Self::new(c, c / 24.0)
    }

    /// Winding of the Darboux field; zero off the hyperbolic family.
    pub fn alpha(&self) -> f64 {
        match self.kind {
            OrbitKind::Hyperbolic => (-24.0 * self.b0 / self.c).sqrt(),
            _ => 0.0,
        }
    }

    pub(crate) fn require(&self, kind: OrbitKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::InvalidParams(format!("expected a {kind:?} orbit, got {:?}", self.kind)));
        }
        Ok(())
    }

    /// The Gaussian measure and correlators need `b0 <= 0`.
    pub(crate) fn require_non_elliptic(&self) -> Result<()> {
        if self.kind == OrbitKind::Teichmuller {
            return Err(Error::InvalidParams("Gaussian measure is defined for b0 <= 0 only".into()));
        }
        Ok(())
    }
}
