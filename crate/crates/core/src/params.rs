//! Nondimensional physical constants and discretization controls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and numerical parameters of a run.
///
/// All quantities are nondimensional: `reynolds` and `weissenberg` are the
/// usual groups built from the flow scales, `kappa` is the polymeric share of
/// the total viscosity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default = "defaults::reynolds")]
    pub reynolds: f64,
    #[serde(default = "defaults::weissenberg")]
    pub weissenberg: f64,
    #[serde(default = "defaults::kappa")]
    pub kappa: f64,
    #[serde(default = "defaults::grid_n")]
    pub grid_n: usize,
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    #[serde(default = "defaults::t_final")]
    pub t_final: f64,
    #[serde(default = "defaults::tol_solver")]
    pub tol_solver: f64,
    #[serde(default = "defaults::tol_div")]
    pub tol_div: f64,
}

mod defaults {
    pub fn reynolds() -> f64 {
        1.0
    }
    pub fn weissenberg() -> f64 {
        1.0
    }
    pub fn kappa() -> f64 {
        0.5
    }
    pub fn grid_n() -> usize {
        32
    }
    pub fn dt() -> f64 {
        0.01
    }
    pub fn t_final() -> f64 {
        0.1
    }
    pub fn tol_solver() -> f64 {
        1e-9
    }
    pub fn tol_div() -> f64 {
        1e-8
    }
}

impl Default for Params {
    fn default() -> Self {
        Self {
            reynolds: defaults::reynolds(),
            weissenberg: defaults::weissenberg(),
            kappa: defaults::kappa(),
            grid_n: defaults::grid_n(),
            dt: defaults::dt(),
            t_final: defaults::t_final(),
            tol_solver: defaults::tol_solver(),
            tol_div: defaults::tol_div(),
        }
    }
}

impl Params {
    /// Checks every invariant; the error carries the JSON pointer of the
    /// offending field relative to the scenario root.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("/params/{name}"), "must be finite"))
            }
        };
        finite("reynolds", self.reynolds)?;
        finite("weissenberg", self.weissenberg)?;
        finite("kappa", self.kappa)?;
        finite("dt", self.dt)?;
        finite("t_final", self.t_final)?;

        if self.reynolds < 0.0 {
            return Err(Error::param("/params/reynolds", "must be >= 0"));
        }
        if self.weissenberg <= 0.0 {
            return Err(Error::param("/params/weissenberg", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(Error::param("/params/kappa", "must lie in [0, 1)"));
        }
        if self.grid_n < 16 {
            return Err(Error::param("/params/grid_n", "must be >= 16"));
        }
        if self.dt <= 0.0 {
            return Err(Error::param("/params/dt", "must be > 0"));
        }
        if self.t_final <= 0.0 {
            return Err(Error::param("/params/t_final", "must be > 0"));
        }
        if !(self.tol_solver > 0.0) {
            return Err(Error::param("/params/tol_solver", "must be > 0"));
        }
        if !(self.tol_div > 0.0) {
            return Err(Error::param("/params/tol_div", "must be > 0"));
        }
        Ok(())
    }

    /// Viscous (solvent) coefficient `1 - kappa`.
    pub fn solvent(&self) -> f64 {
        1.0 - self.kappa
    }

    pub fn with_weissenberg(&self, we: f64) -> Self {
        Self {
            weissenberg: we,
            ..self.clone()
        }
    }
}
