//! Run configuration: every tunable of a run, read from `key = value` text.
//!
//! Unknown keys are errors. `dump` writes every key, and parsing a dump gives
//! back an equal config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{FoilError, Result};
use crate::forces::MaterialParams;
use crate::integrator::{CflMode, SimConfig};
use crate::scenario::{BoxFaces, DEFAULT_BOX_INSET, DEFAULT_BOX_SIDE};
use crate::seed::DEFAULT_MARGIN_FACTOR;
use crate::snap::SnapConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Box,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Box => "box",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "box" => Some(Scenario::Box),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub point_count: usize,
    pub margin_factor: f64,
    /// Subdivide-and-project passes on the initial sphere before the dynamics.
    pub init_refine_passes: usize,
    pub contraction_scale: f64,
    pub material: MaterialParams,
    pub snap: SnapConfig,
    pub sim: SimConfig,
    pub input_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub diagnostics_path: Option<PathBuf>,
    pub snapshot_dir: Option<PathBuf>,
    pub scenario: Scenario,
    pub box_side: f64,
    pub box_inset: f64,
    pub box_faces: BoxFaces,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            point_count: 500,
            margin_factor: DEFAULT_MARGIN_FACTOR,
            init_refine_passes: 0,
            contraction_scale: 0.6,
            material: MaterialParams::default(),
            snap: SnapConfig::default(),
            sim: SimConfig::default(),
            input_path: None,
            output_path: None,
            diagnostics_path: None,
            snapshot_dir: None,
            scenario: Scenario::Box,
            box_side: DEFAULT_BOX_SIDE,
            box_inset: DEFAULT_BOX_INSET,
            box_faces: BoxFaces::Lateral,
        }
    }
}

/// `(key, description)` for every accepted key, in dump order.
pub const KEYS: &[(&str, &str)] = &[
    ("point_count", "foil vertices on the initial sphere (>= 4)"),
    (
        "margin_factor",
        "initial sphere radius over the farthest constraint distance (>= 1)",
    ),
    (
        "init_refine_passes",
        "1-to-4 splits of the initial sphere, each followed by projection back onto it",
    ),
    ("contraction_scale", "multiplier on captured rest lengths, in (0, 1]"),
    ("k_base", "spring stiffness"),
    ("damping", "velocity damping coefficient c"),
    (
        "pressure",
        "pressure p along outward normals; negative contracts, positive inflates",
    ),
    ("mass", "vertex mass"),
    (
        "distance_factor_strength",
        "stiffness decay strength with distance to the nearest constraint (0 = uniform)",
    ),
    (
        "snapping_tolerance",
        "distance under which a foil vertex snaps to a constraint point",
    ),
    (
        "relaxation_lambda",
        "smoothing factor for the ring around a snap, in (0, 1)",
    ),
    ("relaxation_rounds", "smoothing rounds after a snap"),
    ("dt", "time step"),
    ("epsilon", "convergence tolerance on the largest per-step displacement"),
    ("max_iterations", "iteration cap"),
    ("smooth_every", "smoothing cadence in iterations (0 = never)"),
    ("smooth_lambda", "smoothing factor, in (0, 1)"),
    ("smooth_rounds", "smoothing rounds per application"),
    ("snap_every", "snapping cadence in iterations (>= 1)"),
    ("refine_every", "subdivision cadence in iterations (0 = never)"),
    ("snapshot_every", "snapshot cadence in iterations (0 = never)"),
    ("cfl_mode", "enforce | warn"),
    ("input", "point cloud (.xyz or .ply); empty selects the scenario"),
    ("output", "final mesh path (.obj or .ply)"),
    ("diagnostics", "per-iteration CSV path"),
    ("snapshot_dir", "directory for snapshot_NNNNNN.obj files"),
    ("scenario", "built-in constraint set: box"),
    ("box_side", "box edge length"),
    (
        "box_inset",
        "constraint distance from center over half the side, in (0, 1]",
    ),
    ("box_faces", "lateral | top-bottom"),
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| FoilError::Config(format!("{key}: cannot parse {value:?}")))
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "point_count" => self.point_count = parse_num(key, v)?,
            "margin_factor" => self.margin_factor = parse_num(key, v)?,
            "init_refine_passes" => self.init_refine_passes = parse_num(key, v)?,
            "contraction_scale" => self.contraction_scale = parse_num(key, v)?,
            "k_base" => self.material.k_base = parse_num(key, v)?,
            "damping" => self.material.damping_c = parse_num(key, v)?,
            "pressure" => self.material.pressure_p = parse_num(key, v)?,
            "mass" => self.material.mass_m = parse_num(key, v)?,
            "distance_factor_strength" => self.material.distance_factor_strength = parse_num(key, v)?,
            "snapping_tolerance" => self.snap.snapping_tolerance = parse_num(key, v)?,
            "relaxation_lambda" => self.snap.relaxation_lambda = parse_num(key, v)?,
            "relaxation_rounds" => self.snap.relaxation_rounds = parse_num(key, v)?,
            "dt" => self.sim.dt = parse_num(key, v)?,
            "epsilon" => self.sim.epsilon = parse_num(key, v)?,
            "max_iterations" => self.sim.max_iterations = parse_num(key, v)?,
            "smooth_every" => self.sim.smooth_every = parse_num(key, v)?,
            "smooth_lambda" => self.sim.smooth_lambda = parse_num(key, v)?,
            "smooth_rounds" => self.sim.smooth_rounds = parse_num(key, v)?,
            "snap_every" => self.sim.snap_every = parse_num(key, v)?,
            "refine_every" => self.sim.refine_every = parse_num(key, v)?,
            "snapshot_every" => self.sim.snapshot_every = parse_num(key, v)?,
            "cfl_mode" => {
                self.sim.cfl_mode = match v {
                    "enforce" => CflMode::Enforce,
                    "warn" => CflMode::Warn,
                    _ => {
                        return Err(FoilError::Config(format!(
                            "cfl_mode: expected enforce or warn, got {v:?}"
                        )))
                    }
                }
            }
            "input" => self.input_path = opt_path(v),
            "output" => self.output_path = opt_path(v),
            "diagnostics" => self.diagnostics_path = opt_path(v),
            "snapshot_dir" => self.snapshot_dir = opt_path(v),
            "scenario" => {
                self.scenario =
                    Scenario::parse(v).ok_or_else(|| FoilError::Config(format!("scenario: unknown scenario {v:?}")))?
            }
            "box_side" => self.box_side = parse_num(key, v)?,
            "box_inset" => self.box_inset = parse_num(key, v)?,
            "box_faces" => {
                self.box_faces = BoxFaces::parse(v)
                    .ok_or_else(|| FoilError::Config(format!("box_faces: expected lateral or top-bottom, got {v:?}")))?
            }
            _ => return Err(FoilError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let s = match key {
            "point_count" => self.point_count.to_string(),
            "margin_factor" => format!("{:?}", self.margin_factor),
            "init_refine_passes" => self.init_refine_passes.to_string(),
            "contraction_scale" => format!("{:?}", self.contraction_scale),
            "k_base" => format!("{:?}", self.material.k_base),
            "damping" => format!("{:?}", self.material.damping_c),
            "pressure" => format!("{:?}", self.material.pressure_p),
            "mass" => format!("{:?}", self.material.mass_m),
            "distance_factor_strength" => format!("{:?}", self.material.distance_factor_strength),
            "snapping_tolerance" => format!("{:?}", self.snap.snapping_tolerance),
            "relaxation_lambda" => format!("{:?}", self.snap.relaxation_lambda),
            "relaxation_rounds" => self.snap.relaxation_rounds.to_string(),
            "dt" => format!("{:?}", self.sim.dt),
            "epsilon" => format!("{:?}", self.sim.epsilon),
            "max_iterations" => self.sim.max_iterations.to_string(),
            "smooth_every" => self.sim.smooth_every.to_string(),
            "smooth_lambda" => format!("{:?}", self.sim.smooth_lambda),
            "smooth_rounds" => self.sim.smooth_rounds.to_string(),
            "snap_every" => self.sim.snap_every.to_string(),
            "refine_every" => self.sim.refine_every.to_string(),
            "snapshot_every" => self.sim.snapshot_every.to_string(),
            "cfl_mode" => match self.sim.cfl_mode {
                CflMode::Enforce => "enforce".into(),
                CflMode::Warn => "warn".into(),
            },
            "input" => show_path(&self.input_path),
            "output" => show_path(&self.output_path),
            "diagnostics" => show_path(&self.diagnostics_path),
            "snapshot_dir" => show_path(&self.snapshot_dir),
            "scenario" => self.scenario.as_str().into(),
            "box_side" => format!("{:?}", self.box_side),
            "box_inset" => format!("{:?}", self.box_inset),
            "box_faces" => self.box_faces.as_str().into(),
            _ => return None,
        };
        Some(s)
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| FoilError::Parse {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(k.trim(), v).map_err(|e| FoilError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FoilError::io(path, e))?;
        Self::parse(&text)
    }

    /// `key=value` override, as given on a command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| FoilError::Config(format!("expected key=value, got {assignment:?}")))?;
        self.set(k.trim(), v)
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (key, doc) in KEYS {
            let _ = writeln!(out, "# {doc}");
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.point_count < 4 {
            return Err(FoilError::InvalidParameter(format!(
                "point_count must be >= 4, got {}",
                self.point_count
            )));
        }
        if !(self.margin_factor >= 1.0) || !self.margin_factor.is_finite() {
            return Err(FoilError::InvalidParameter(format!(
                "margin_factor must be >= 1, got {}",
                self.margin_factor
            )));
        }
        if !(self.contraction_scale > 0.0 && self.contraction_scale <= 1.0) {
            return Err(FoilError::InvalidParameter(format!(
                "contraction_scale must be in (0, 1], got {}",
                self.contraction_scale
            )));
        }
        self.material.validate()?;
        self.snap.validate()?;
        self.sim.validate()?;
        if self.input_path.is_none() {
            crate::scenario::box_scenario(self.box_side, self.box_inset, self.box_faces)?;
        }
        Ok(())
    }
}
