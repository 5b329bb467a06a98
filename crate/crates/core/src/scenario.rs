//! JSON scenario documents: reference curve, initial data and map settings.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conformal::{BranchMap, ConformalMap};
use crate::error::{Error, Result};
use crate::geometry::InterfaceCurve;
use crate::grid::{build_reference_grid, Grid};
use crate::linear::Discretization;
use crate::params::Params;
use crate::picard::Problem;
use crate::tensor::{Mat2, Sym2, Vec2};

/// Reference interface in conformal coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Circle {
        center: Vec2,
        radius: f64,
    },
    Ellipse {
        center: Vec2,
        a: f64,
        b: f64,
    },
    /// Bean `x = c + cos θ + D cos 2θ`, `y = B sin θ` with `c` chosen so that
    /// the leftmost points sit at `x = delta`. Under `z = z̃²` those points map
    /// to a physical gap of `4 delta B sin θ*`, `cos θ* = -1/(4D)`.
    NearSplash {
        #[serde(default)]
        delta: f64,
        #[serde(default = "default_depth")]
        depth: f64,
        #[serde(default = "default_height")]
        height: f64,
    },
    Markers {
        points: Vec<Vec2>,
    },
}

fn default_depth() -> f64 {
    0.45
}

fn default_height() -> f64 {
    1.0
}

/// Reference-coordinate initial velocity families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocitySpec {
    Rest,
    RigidRotation {
        #[serde(default = "one")]
        omega: f64,
        #[serde(default)]
        center: Vec2,
    },
    /// `conj(2U z̃)`: pointwise divergence free, pushes points with `x̃ > 0`
    /// towards the imaginary axis.
    ApproachJets {
        speed: f64,
    },
    Uniform {
        value: Vec2,
    },
    /// `v = M (x - center)`.
    Linear {
        matrix: [[f64; 2]; 2],
        #[serde(default)]
        center: Vec2,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StressSpec {
    Zero,
    Constant {
        value: [f64; 3],
    },
    /// `T0 = -(1-κ)(A + Aᵀ)` with `A = ∇v0 J^P`, which cancels the viscous
    /// traction of the initial velocity.
    SolventBalance,
    /// `a exp(-|x - c|²/w²) I`.
    Gaussian {
        amplitude: f64,
        center: Vec2,
        width: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformalSpec {
    #[serde(default)]
    pub branch_point: Vec2,
    #[serde(default = "default_cut")]
    pub cut_direction: Vec2,
    /// Test-only: replace the map by the identity.
    #[serde(default)]
    pub identity_map_mode: bool,
}

fn default_cut() -> Vec2 {
    Vec2::new(-1.0, 0.0)
}

impl Default for ConformalSpec {
    fn default() -> Self {
        Self {
            branch_point: Vec2::zeros(),
            cut_direction: default_cut(),
            identity_map_mode: false,
        }
    }
}

/// Translation of the reference configuration and the matching stress shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shift {
    pub offset: Vec2,
    /// Added to both diagonal stress components.
    #[serde(default)]
    pub stress: f64,
    /// Evaluate the velocity family at the shifted positions instead of at the
    /// unshifted labels.
    #[serde(default)]
    pub move_velocity: bool,
}

impl Default for Shift {
    fn default() -> Self {
        Self {
            offset: Vec2::zeros(),
            stress: 0.0,
            move_velocity: false,
        }
    }
}

/// A run description. The derived serde form tags the curve and initial-data
/// families externally; files go through [`Scenario::from_json`] and
/// [`Scenario::to_json`], which carry the tag in a `kind` field instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default)]
    pub params: Params,
    pub curve: CurveSpec,
    #[serde(default = "rest")]
    pub initial_velocity: VelocitySpec,
    #[serde(default = "zero")]
    pub initial_stress: StressSpec,
    #[serde(default)]
    pub conformal: ConformalSpec,
    #[serde(default, skip_serializing_if = "is_default_shift")]
    pub shift: Shift,
}

fn default_id() -> String {
    "scenario".into()
}

fn rest() -> VelocitySpec {
    VelocitySpec::Rest
}

fn zero() -> StressSpec {
    StressSpec::Zero
}

fn is_default_shift(s: &Shift) -> bool {
    *s == Shift::default()
}

/// Grid, operators and sampled initial data of a scenario.
#[derive(Debug, Clone)]
pub struct Setup {
    pub curve: InterfaceCurve,
    pub grid: Arc<Grid>,
    pub disc: Arc<Discretization>,
    pub v0: Vec<Vec2>,
    pub t0: Vec<Sym2>,
}

pub fn near_splash_curve(delta: f64, depth: f64, height: f64, n: usize) -> Result<InterfaceCurve> {
    if !(depth > 0.25) || !(height > 0.0) || !(delta >= 0.0) {
        return Err(Error::param(
            "/curve",
            "near_splash needs depth > 1/4, height > 0 and delta ≥ 0",
        ));
    }
    let c = delta + 1.0 / (8.0 * depth) + depth;
    let pts = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            Vec2::new(c + t.cos() + depth * (2.0 * t).cos(), height * t.sin())
        })
        .collect();
    InterfaceCurve::new(pts)
}

/// The two points of a near-splash bean closest to the imaginary axis.
pub fn near_splash_points(delta: f64, depth: f64, height: f64) -> [Vec2; 2] {
    let c = delta + 1.0 / (8.0 * depth) + depth;
    let ct = -1.0 / (4.0 * depth);
    let st = (1.0 - ct * ct).sqrt();
    let x = c + ct + depth * (2.0 * ct * ct - 1.0);
    [Vec2::new(x, height * st), Vec2::new(x, -height * st)]
}

impl CurveSpec {
    pub fn build(&self, n: usize) -> Result<InterfaceCurve> {
        match self {
            CurveSpec::Circle { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::param("/curve/radius", "must be > 0"));
                }
                InterfaceCurve::circle(*center, *radius, n)
            }
            CurveSpec::Ellipse { center, a, b } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(Error::param("/curve", "semi-axes must be > 0"));
                }
                InterfaceCurve::ellipse(*center, *a, *b, n)
            }
            CurveSpec::NearSplash {
                delta,
                depth,
                height,
            } => near_splash_curve(*delta, *depth, *height, n),
            CurveSpec::Markers { points } => InterfaceCurve::new(points.clone()),
        }
    }
}

impl VelocitySpec {
    pub fn eval(&self, x: &Vec2) -> Vec2 {
        match self {
            VelocitySpec::Rest => Vec2::zeros(),
            VelocitySpec::RigidRotation { omega, center } => {
                let d = x - center;
                Vec2::new(-d.y, d.x) * *omega
            }
            VelocitySpec::ApproachJets { speed } => Vec2::new(x.x, -x.y) * (2.0 * speed),
            VelocitySpec::Uniform { value } => *value,
            VelocitySpec::Linear { matrix, center } => {
                let m = Mat2::new(matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]);
                m * (x - center)
            }
        }
    }
}

impl Scenario {
    /// Rest, zero stress, default branch and no shift.
    pub fn new(params: Params, curve: CurveSpec) -> Self {
        Self {
            id: default_id(),
            params,
            curve,
            initial_velocity: rest(),
            initial_stress: zero(),
            conformal: ConformalSpec::default(),
            shift: Shift::default(),
        }
    }

    /// Parses the file form, where every curve, velocity and stress family
    /// carries its variant name in a `kind` field.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::config("", e.to_string()))?;
        if let Some(obj) = doc.as_object_mut() {
            for key in TAGGED {
                if let Some(v) = obj.get_mut(key) {
                    untag(v).map_err(|msg| Error::config(format!("/{key}"), msg))?;
                }
            }
        }
        let sc: Scenario = serde_path_to_error::deserialize(doc).map_err(|e| {
            let pointer = json_pointer(&e.path().to_string());
            Error::config(pointer, e.into_inner().to_string())
        })?;
        sc.validate()?;
        Ok(sc)
    }

    fn document(&self) -> serde_json::Value {
        let mut doc = serde_json::to_value(self).expect("scenario serializes");
        if let Some(obj) = doc.as_object_mut() {
            for key in TAGGED {
                if let Some(v) = obj.get_mut(key) {
                    retag(v);
                }
            }
        }
        doc
    }

    /// Pretty file form; [`Scenario::from_json`] reads it back unchanged.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.document()).expect("scenario serializes")
    }

    /// SHA-256 of the compact file form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.document()).expect("scenario serializes");
        hex(&Sha256::digest(text.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.map()?;
        Ok(())
    }

    pub fn map(&self) -> Result<ConformalMap> {
        if self.conformal.identity_map_mode {
            return Ok(ConformalMap::Identity);
        }
        Ok(ConformalMap::Sqrt(BranchMap::new(
            self.conformal.branch_point,
            self.conformal.cut_direction,
        )?))
    }

    pub fn curve(&self) -> Result<InterfaceCurve> {
        let base = self.curve.build(self.params.grid_n)?;
        Ok(if self.shift.offset == Vec2::zeros() {
            base
        } else {
            base.translated(self.shift.offset)
        })
    }

    /// The conformal curve must lie in the open right half-plane, the image of
    /// the square-root branch.
    pub fn check_half_plane(&self) -> Result<()> {
        if self.conformal.identity_map_mode {
            return Ok(());
        }
        let curve = self.curve()?;
        if let Some(p) = curve.markers().iter().find(|p| !(p.x > 0.0)) {
            return Err(Error::Geometry(format!(
                "reference curve leaves the image of the branch at ({}, {})",
                p.x, p.y
            )));
        }
        Ok(())
    }

    pub fn setup(&self) -> Result<Setup> {
        self.validate()?;
        self.check_half_plane()?;
        let map = self.map()?;
        let curve = self.curve()?;
        let grid = Arc::new(build_reference_grid(&curve, self.params.grid_n)?);
        let disc = Arc::new(Discretization::new(grid.clone(), map)?);
        let label_shift = if self.shift.move_velocity {
            Vec2::zeros()
        } else {
            self.shift.offset
        };
        let v0: Vec<Vec2> = grid
            .nodes()
            .iter()
            .map(|x| self.initial_velocity.eval(&(x - label_shift)))
            .collect();
        let t0 = self.initial_stress(&disc, &v0)?;
        Ok(Setup {
            curve,
            grid,
            disc,
            v0,
            t0,
        })
    }

    fn initial_stress(&self, disc: &Discretization, v0: &[Vec2]) -> Result<Vec<Sym2>> {
        let g = &disc.grid;
        let s = self.shift.stress;
        let add = |t: Sym2| Sym2::new(t.xx + s, t.xy, t.yy + s);
        let base: Vec<Sym2> = match &self.initial_stress {
            StressSpec::Zero => vec![Sym2::ZERO; g.len()],
            StressSpec::Constant { value } => {
                vec![Sym2::new(value[0], value[1], value[2]); g.len()]
            }
            StressSpec::SolventBalance => {
                let nu = self.params.solvent();
                g.vector_gradient(v0)
                    .iter()
                    .zip(&disc.frame.jp)
                    .map(|(gv, j)| {
                        let a = gv * j;
                        Sym2::from_mat(&((a + a.transpose()) * -nu))
                    })
                    .collect()
            }
            StressSpec::Gaussian {
                amplitude,
                center,
                width,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::param("/initial_stress/width", "must be > 0"));
                }
                g.nodes()
                    .iter()
                    .map(|x| {
                        let r2 = (x - self.shift.offset - center).norm_squared();
                        Sym2::scaled_identity(amplitude * (-r2 / (width * width)).exp())
                    })
                    .collect()
            }
        };
        Ok(base.into_iter().map(add).collect())
    }

    /// Builds the fixed-point problem over `[0, horizon]`.
    pub fn problem(&self, horizon: f64, beta: f64) -> Result<Problem> {
        let s = self.setup()?;
        Problem::new(s.disc, &self.params, s.v0, s.t0, horizon, beta)
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("", format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text)
}

const TAGGED: [&str; 3] = ["curve", "initial_velocity", "initial_stress"];

/// Variants without fields.
const UNIT_KINDS: [&str; 3] = ["rest", "zero", "solvent_balance"];

/// `{"kind": k, ..rest}` to `{k: rest}`, or to `"k"` for field-less variants.
fn untag(v: &mut serde_json::Value) -> std::result::Result<(), String> {
    let obj = v
        .as_object_mut()
        .ok_or("expected an object with a `kind` field")?;
    let kind = match obj.remove("kind") {
        Some(serde_json::Value::String(k)) => k,
        Some(_) => return Err("`kind` must be a string".into()),
        None => return Err("missing field `kind`".into()),
    };
    let rest = std::mem::take(obj);
    *v = if rest.is_empty() && UNIT_KINDS.contains(&kind.as_str()) {
        serde_json::Value::String(kind)
    } else {
        let mut m = serde_json::Map::new();
        m.insert(kind, serde_json::Value::Object(rest));
        serde_json::Value::Object(m)
    };
    Ok(())
}

fn retag(v: &mut serde_json::Value) {
    let (kind, rest) = match std::mem::take(v) {
        serde_json::Value::String(k) => (k, serde_json::Map::new()),
        serde_json::Value::Object(m) if m.len() == 1 => {
            let (k, inner) = m.into_iter().next().expect("one entry");
            (k, inner.as_object().cloned().unwrap_or_default())
        }
        other => {
            *v = other;
            return;
        }
    };
    let mut out = serde_json::Map::new();
    out.insert("kind".into(), serde_json::Value::String(kind));
    out.extend(rest);
    *v = serde_json::Value::Object(out);
}

/// Dotted serde path to a JSON pointer. The variant segment under a tagged
/// key does not exist in the file form and is dropped.
fn json_pointer(path: &str) -> String {
    if path == "." || path.is_empty() {
        return String::new();
    }
    let mut parts: Vec<String> = Vec::new();
    for part in path.split('.') {
        if part.is_empty() {
            continue;
        }
        // array indices come as name[3]
        let mut rest = part;
        while let Some(i) = rest.find('[') {
            if i > 0 {
                parts.push(rest[..i].to_string());
            }
            let j = rest[i..].find(']').map_or(rest.len(), |j| i + j);
            parts.push(rest[i + 1..j].to_string());
            rest = &rest[(j + 1).min(rest.len())..];
        }
        if !rest.is_empty() {
            parts.push(rest.to_string());
        }
    }
    if parts.len() >= 2 && TAGGED.contains(&parts[0].as_str()) {
        parts.remove(1);
    }
    parts.iter().map(|p| format!("/{p}")).collect()
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
