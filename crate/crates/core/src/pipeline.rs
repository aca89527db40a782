//! End-to-end run: constraints, initial foil, dynamics, cleaned-up result.

use std::path::PathBuf;

use crate::config::RunConfig;
use crate::error::{FoilError, Result};
use crate::forces::{critical_damping, RestState};
use crate::geometry::{average_nn_distance, TriMesh, Vec3};
use crate::integrator::{omega_bound, IterationStats, SimObserver, SimState, Simulation, Termination};
use crate::io::{load_points, snapshot_path, write_mesh, MeshFormat, PointFormat};
use crate::refine::{project_to_sphere, subdivide};
use crate::scenario::box_scenario;
use crate::seed::{build_initial_mesh_with_sphere, SphereSpec};
use crate::snap::{affected_neighbors, radius_of_effectiveness};
use crate::spatial::SpatialIndex;

/// Constraint points from the input file, or the configured scenario.
pub fn constraint_points(cfg: &RunConfig) -> Result<Vec<Vec3>> {
    match &cfg.input_path {
        Some(path) => load_points(path, PointFormat::from_path(path)?),
        None => box_scenario(cfg.box_side, cfg.box_inset, cfg.box_faces),
    }
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub constraints: Vec<Vec3>,
    pub sphere: SphereSpec,
    pub mesh: TriMesh,
    pub rest: RestState,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let constraints = constraint_points(cfg)?;
    let (mut mesh, sphere) = build_initial_mesh_with_sphere(&constraints, cfg.point_count, cfg.margin_factor)?;
    for _ in 0..cfg.init_refine_passes {
        mesh = project_to_sphere(&subdivide(&mesh)?.0, &sphere)?;
    }
    let rest = RestState::capture(&mesh)?.with_contraction_scale(cfg.contraction_scale)?;
    Ok(Prepared {
        constraints,
        sphere,
        mesh,
        rest,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Final foil with face-less vertices removed.
    pub mesh: TriMesh,
    pub history: Vec<IterationStats>,
    pub termination: Termination,
    pub constraints: Vec<Vec3>,
    /// Index in `mesh` of each constraint point the foil reached.
    pub constraint_vertices: Vec<Option<usize>>,
    pub sphere: SphereSpec,
    pub nn_scale: f64,
    pub omega_max: f64,
}

impl RunOutcome {
    pub fn final_max_displacement(&self) -> Option<f64> {
        self.history.last().map(|s| s.max_displacement)
    }

    pub fn unreached_constraints(&self) -> usize {
        self.constraint_vertices.iter().filter(|v| v.is_none()).count()
    }
}

/// Writes compacted snapshot meshes into a directory.
pub struct SnapshotWriter {
    pub dir: PathBuf,
}

impl SimObserver for SnapshotWriter {
    fn on_snapshot(&mut self, iteration: usize, mesh: &TriMesh) -> Result<()> {
        write_mesh(
            &mesh.compacted().0,
            &snapshot_path(&self.dir, iteration),
            MeshFormat::Obj,
        )
    }
}

pub fn run(cfg: &RunConfig, observer: &mut dyn SimObserver) -> Result<RunOutcome> {
    let prepared = prepare(cfg)?;
    let targets = prepared.mesh.fixed_indices();
    let sim = Simulation::new(
        SimState::at_rest(prepared.mesh),
        cfg.material,
        prepared.rest,
        cfg.snap,
        cfg.sim,
    )?;
    let out = sim.run(observer)?;
    log::info!("{} after {} iterations", out.termination.as_str(), out.state.iteration);
    let (mesh, map) = out.state.mesh.compacted();
    let constraint_vertices: Vec<Option<usize>> = targets.iter().map(|&v| map[v]).collect();
    let k = targets.len();
    let missing = constraint_vertices.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        log::warn!("{missing} of {k} constraint points were never reached by the foil");
    }
    Ok(RunOutcome {
        mesh,
        history: out.state.stats_history,
        termination: out.termination,
        constraints: prepared.constraints,
        constraint_vertices,
        sphere: prepared.sphere,
        nn_scale: out.nn_scale,
        omega_max: out.omega_max,
    })
}

/// Derived quantities for a configuration, computed without running it.
#[derive(Debug, Clone, PartialEq)]
pub struct Info {
    pub constraint_count: usize,
    pub sphere: SphereSpec,
    pub foil_vertices: usize,
    pub foil_faces: usize,
    pub nn_distance: f64,
    pub radius_of_effectiveness: f64,
    pub affected_neighbors: f64,
    pub critical_damping: f64,
    pub omega_max: f64,
    /// Largest step allowed by the stability bound (exclusive).
    pub max_dt: f64,
    pub dt_admissible: bool,
}

pub fn info(cfg: &RunConfig) -> Result<Info> {
    let prepared = prepare(cfg)?;
    let mesh = &prepared.mesh;
    let used = mesh.referenced();
    let nodes: Vec<Vec3> = (0..mesh.vertex_count())
        .filter(|&i| used[i])
        .map(|i| mesh.positions[i])
        .collect();
    let d = average_nn_distance(&nodes)?;
    let springs = prepared.rest.springs();
    let anchors = SpatialIndex::over_vertices(&mesh.positions, &mesh.fixed);
    let stiffness = crate::forces::spring_stiffness(&mesh.positions, &springs, &cfg.material, d, Some(&anchors));
    let omega_max = omega_bound(mesh.vertex_count(), &springs, &stiffness, cfg.material.mass_m);
    if !(omega_max > 0.0) {
        return Err(FoilError::DegenerateInput("initial foil has no springs".into()));
    }
    let max_dt = 2.0 / omega_max;
    Ok(Info {
        constraint_count: prepared.constraints.len(),
        sphere: prepared.sphere,
        foil_vertices: nodes.len(),
        foil_faces: mesh.face_count(),
        nn_distance: d,
        radius_of_effectiveness: radius_of_effectiveness(&cfg.material, d, &cfg.snap)?,
        affected_neighbors: affected_neighbors(&cfg.material, d, &cfg.snap)?,
        critical_damping: critical_damping(&cfg.material),
        omega_max,
        max_dt,
        dt_admissible: cfg.sim.dt < max_dt,
    })
}
