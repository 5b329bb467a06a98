//! Node-sampled field bundles and time-ordered run records.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::Params;
use crate::tensor::{Sym2, Vec2};

/// Velocity, pressure, elastic stress and flux at every grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSet {
    pub velocity: Vec<Vec2>,
    pub pressure: Vec<f64>,
    pub stress: Vec<Sym2>,
    pub flux: Vec<Vec2>,
}

impl FieldSet {
    /// Zero velocity, pressure and stress with the identity flux.
    pub fn rest(grid: &Grid) -> Self {
        let n = grid.len();
        Self {
            velocity: vec![Vec2::zeros(); n],
            pressure: vec![0.0; n],
            stress: vec![Sym2::ZERO; n],
            flux: grid.nodes().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.velocity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocity.is_empty()
    }

    pub fn check_shape(&self, n: usize) -> Result<()> {
        if self.velocity.len() != n
            || self.pressure.len() != n
            || self.stress.len() != n
            || self.flux.len() != n
        {
            return Err(Error::Shape(format!(
                "field set does not match a grid of {n} nodes"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub fields: FieldSet,
    /// Boundary flux, i.e. the interface in conformal coordinates.
    pub boundary_conformal: Vec<Vec2>,
    /// The same interface mapped back to physical coordinates.
    pub boundary_physical: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub params: Params,
    pub scenario_id: String,
    pub seed: u64,
    #[serde(default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub snapshots: Vec<Snapshot>,
    pub manifest: Manifest,
}

impl RunRecord {
    pub fn new(manifest: Manifest) -> Self {
        Self {
            snapshots: Vec::new(),
            manifest,
        }
    }

    /// Appends a snapshot; times must start at 0 and increase strictly.
    pub fn push(&mut self, snap: Snapshot) -> Result<()> {
        match self.snapshots.last() {
            None if snap.t != 0.0 => Err(Error::Shape(format!(
                "first snapshot must be at t = 0, got {}",
                snap.t
            ))),
            Some(last) if snap.t <= last.t => Err(Error::Shape(format!(
                "snapshot time {} does not exceed {}",
                snap.t, last.t
            ))),
            _ => {
                self.snapshots.push(snap);
                Ok(())
            }
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::InterfaceCurve;
    use crate::grid::build_reference_grid;

    #[test]
    fn rest_flux_is_identity() {
        let c = InterfaceCurve::circle(Vec2::new(2.0, 0.0), 1.0, 32).unwrap();
        let g = build_reference_grid(&c, 32).unwrap();
        let f = FieldSet::rest(&g);
        assert_eq!(f.flux, g.nodes());
        f.check_shape(g.len()).unwrap();
        assert!(f.check_shape(g.len() + 1).is_err());
    }

    #[test]
    fn snapshot_times_must_increase() {
        let manifest = Manifest {
            params: Params::default(),
            scenario_id: "x".into(),
            seed: 0,
            extra: Default::default(),
        };
        let mut r = RunRecord::new(manifest);
        let snap = |t: f64| Snapshot {
            t,
            fields: FieldSet {
                velocity: vec![],
                pressure: vec![],
                stress: vec![],
                flux: vec![],
            },
            boundary_conformal: vec![],
            boundary_physical: vec![],
        };
        assert!(r.push(snap(0.1)).is_err());
        r.push(snap(0.0)).unwrap();
        r.push(snap(0.1)).unwrap();
        assert!(r.push(snap(0.1)).is_err());
        assert_eq!(r.times(), vec![0.0, 0.1]);
    }
}
