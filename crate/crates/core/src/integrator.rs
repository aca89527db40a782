//! Damped semi-implicit Euler dynamics with CFL guarding, convergence
//! detection and the per-iteration snap/smooth/refine schedule.

use crate::error::{FoilError, Result};
use crate::forces::{
    combine, pressure_forces, spring_energy_of, spring_forces, spring_stiffness, MaterialParams, RestState, SpringSet,
};
use crate::geometry::{average_nn_distance, Adjacency, Edge, TriMesh, Vec3};
use crate::refine::{min_angle, smooth_positions, subdivide, DEGENERATE_ANGLE_DEG};
use crate::snap::{snap_pass, SnapConfig};
use crate::spatial::SpatialIndex;

/// A step moving some vertex farther than this multiple of the initial
/// bounding-box diagonal counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CflMode {
    Enforce,
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    /// 0 disables smoothing.
    pub smooth_every: usize,
    pub smooth_lambda: f64,
    pub smooth_rounds: usize,
    pub snap_every: usize,
    /// 0 disables refinement.
    pub refine_every: usize,
    /// 0 disables snapshots.
    pub snapshot_every: usize,
    pub cfl_mode: CflMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.17,
            epsilon: 1e-4,
            max_iterations: 200,
            smooth_every: 0,
            smooth_lambda: 0.05,
            smooth_rounds: 1,
            snap_every: 1,
            refine_every: 0,
            snapshot_every: 0,
            cfl_mode: CflMode::Enforce,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FoilError::InvalidParameter(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be >= 1".into());
        }
        if self.snap_every < 1 {
            return bad("snap_every must be >= 1".into());
        }
        if self.smooth_every > 0 && !(self.smooth_lambda > 0.0 && self.smooth_lambda < 1.0) {
            return bad(format!("smooth_lambda must be in (0, 1), got {}", self.smooth_lambda));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    pub max_displacement: f64,
    pub mean_nn_distance: f64,
    pub spring_energy: f64,
    pub kinetic_energy: f64,
    /// Constraint points reached so far.
    pub snapped_count: usize,
    /// Faces with smallest angle below the degeneracy threshold.
    pub degenerate_face_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub mesh: TriMesh,
    pub velocities: Vec<Vec3>,
    pub iteration: usize,
    pub stats_history: Vec<IterationStats>,
}

impl SimState {
    pub fn at_rest(mesh: TriMesh) -> Self {
        let velocities = vec![Vec3::zeros(); mesh.vertex_count()];
        SimState {
            mesh,
            velocities,
            iteration: 0,
            stats_history: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    Diverged,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iterations",
            Termination::Diverged => "diverged",
        }
    }
}

/// Receives per-iteration records and periodic mesh snapshots.
pub trait SimObserver {
    fn on_iteration(&mut self, _stats: &IterationStats) -> Result<()> {
        Ok(())
    }

    fn on_snapshot(&mut self, _iteration: usize, _mesh: &TriMesh) -> Result<()> {
        Ok(())
    }
}

impl SimObserver for () {}

/// Upper bound on the highest angular eigenfrequency from row sums of the
/// linearized stiffness: `max_i sqrt(2 sum_j (k_ij / L_ij) / m)`.
pub fn omega_bound(vertex_count: usize, springs: &SpringSet, stiffness: &[f64], mass: f64) -> f64 {
    let mut rows = vec![0.0; vertex_count];
    for (s, e) in springs.edges.iter().enumerate() {
        let k = stiffness[s] / springs.rest[s];
        rows[e.0] += k;
        rows[e.1] += k;
    }
    rows.iter().map(|r| (2.0 * r / mass).sqrt()).fold(0.0, f64::max)
}

pub fn omega_max_estimate(mesh: &TriMesh, rest: &RestState, params: &MaterialParams, d: f64) -> Result<f64> {
    let springs = rest.springs();
    if let Some(e) = springs.edges.iter().find(|e| e.1 >= mesh.vertex_count()) {
        return Err(FoilError::Structural(format!(
            "rest length for ({}, {}) refers past the vertex array",
            e.0, e.1
        )));
    }
    let anchors = SpatialIndex::over_vertices(&mesh.positions, &mesh.fixed);
    let k = spring_stiffness(&mesh.positions, &springs, params, d, Some(&anchors));
    Ok(omega_bound(mesh.vertex_count(), &springs, &k, params.mass_m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CflOutcome {
    Pass,
    /// Warn mode let a violating step through.
    Warned {
        max_dt: f64,
    },
}

/// `dt < 2 / omega_max`. A zero frequency (no springs) imposes no bound.
pub fn cfl_check(dt: f64, omega_max: f64, mode: CflMode) -> Result<CflOutcome> {
    if !(omega_max >= 0.0) {
        return Err(FoilError::InvalidParameter(format!(
            "omega_max must be >= 0, got {omega_max}"
        )));
    }
    if omega_max == 0.0 {
        return Ok(CflOutcome::Pass);
    }
    let max_dt = 2.0 / omega_max;
    if dt < max_dt {
        return Ok(CflOutcome::Pass);
    }
    match mode {
        CflMode::Enforce => Err(FoilError::CflViolation { dt, max_dt, omega_max }),
        CflMode::Warn => {
            log::warn!("dt = {dt} violates the CFL bound {max_dt} (omega_max = {omega_max}); continuing");
            Ok(CflOutcome::Warned { max_dt })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub max_displacement: f64,
}

/// `v += dt f / m`, then `x += dt v` with the updated velocity.
pub fn euler_step(state: &SimState, forces: &[Vec3], params: &MaterialParams, cfg: &SimConfig) -> Result<StepResult> {
    let n = state.mesh.vertex_count();
    if forces.len() != n || state.velocities.len() != n {
        return Err(FoilError::LengthMismatch {
            expected: n,
            got: forces.len().min(state.velocities.len()),
        });
    }
    let dt = cfg.dt;
    let mut positions = state.mesh.positions.clone();
    let mut velocities = state.velocities.clone();
    let mut max_disp: f64 = 0.0;
    for i in 0..n {
        if state.mesh.fixed[i] {
            velocities[i] = Vec3::zeros();
            continue;
        }
        let f = forces[i];
        if !f.iter().all(|c| c.is_finite()) {
            return Err(FoilError::NumericalDivergence { vertex: i });
        }
        velocities[i] += f * (dt / params.mass_m);
        let step = velocities[i] * dt;
        positions[i] += step;
        max_disp = max_disp.max(step.norm());
    }
    Ok(StepResult {
        positions,
        velocities,
        max_displacement: max_disp,
    })
}

/// `max_displacement < epsilon`.
pub fn converged(max_displacement: f64, cfg: &SimConfig) -> bool {
    max_displacement < cfg.epsilon
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub state: SimState,
    pub rest: RestState,
    pub termination: Termination,
    /// Average nearest-neighbor spacing of the initial foil; the length scale in the stiffness decay.
    pub nn_scale: f64,
    /// Frequency bound at the last CFL check.
    pub omega_max: f64,
}

/// One simulation run; owns its state.
pub struct Simulation {
    state: SimState,
    rest: RestState,
    params: MaterialParams,
    snap_cfg: SnapConfig,
    cfg: SimConfig,
    anchors: SpatialIndex,
    adjacency: Adjacency,
    springs: SpringSet,
    nn_scale: f64,
    divergence_limit: f64,
    omega_max: f64,
}

fn mesh_nodes(mesh: &TriMesh) -> Vec<Vec3> {
    let used = mesh.referenced();
    let nodes: Vec<Vec3> = mesh
        .positions
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(p, _)| *p)
        .collect();
    if nodes.len() >= 2 {
        nodes
    } else {
        mesh.positions.clone()
    }
}

impl Simulation {
    pub fn new(
        initial: SimState,
        params: MaterialParams,
        rest: RestState,
        snap_cfg: SnapConfig,
        cfg: SimConfig,
    ) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        snap_cfg.validate()?;
        initial.mesh.validate()?;
        if initial.velocities.len() != initial.mesh.vertex_count() {
            return Err(FoilError::LengthMismatch {
                expected: initial.mesh.vertex_count(),
                got: initial.velocities.len(),
            });
        }
        let adjacency = Adjacency::build(&initial.mesh)?;
        rest.check_covers(&adjacency)?;
        let springs = rest.springs();
        if let Some(e) = springs.edges.iter().find(|e| e.1 >= initial.mesh.vertex_count()) {
            return Err(FoilError::Structural(format!(
                "rest length for ({}, {}) refers past the vertex array",
                e.0, e.1
            )));
        }
        let nn_scale = average_nn_distance(&mesh_nodes(&initial.mesh))?;
        let anchors = SpatialIndex::over_vertices(&initial.mesh.positions, &initial.mesh.fixed);
        let divergence_limit = DIVERGENCE_FACTOR * initial.mesh.bbox_diagonal();
        let mut sim = Simulation {
            state: initial,
            rest,
            params,
            snap_cfg,
            cfg,
            anchors,
            adjacency,
            springs,
            nn_scale,
            divergence_limit,
            omega_max: 0.0,
        };
        sim.check_cfl()?;
        Ok(sim)
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn rest(&self) -> &RestState {
        &self.rest
    }

    pub fn nn_scale(&self) -> f64 {
        self.nn_scale
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn anchors(&self) -> &SpatialIndex {
        &self.anchors
    }

    fn stiffness(&self) -> Vec<f64> {
        let anchors = (!self.anchors.is_empty()).then_some(&self.anchors);
        spring_stiffness(
            &self.state.mesh.positions,
            &self.springs,
            &self.params,
            self.nn_scale,
            anchors,
        )
    }

    fn check_cfl(&mut self) -> Result<()> {
        let k = self.stiffness();
        self.omega_max = omega_bound(self.state.mesh.vertex_count(), &self.springs, &k, self.params.mass_m);
        cfl_check(self.cfg.dt, self.omega_max, self.cfg.cfl_mode)?;
        Ok(())
    }

    fn rebuild_topology(&mut self) -> Result<()> {
        self.adjacency = Adjacency::build(&self.state.mesh)?;
        self.springs = self.rest.springs();
        Ok(())
    }

    /// Advances one iteration. Returns the termination reason once the run is over.
    pub fn step(&mut self, observer: &mut dyn SimObserver) -> Result<Option<Termination>> {
        self.state.iteration += 1;
        let iteration = self.state.iteration;

        let k = self.stiffness();
        let elastic = spring_forces(&self.state.mesh.positions, &self.springs, &k)?;
        let pressure = pressure_forces(&self.state.mesh, &self.params);
        let forces = combine(
            &self.state.mesh.fixed,
            &elastic,
            &pressure.forces,
            &self.state.velocities,
            self.params.damping_c,
        );
        let step = match euler_step(&self.state, &forces, &self.params, &self.cfg) {
            Ok(s) => s,
            Err(FoilError::NumericalDivergence { vertex }) => {
                log::warn!("iteration {iteration}: non-finite force at vertex {vertex}");
                return Ok(Some(Termination::Diverged));
            }
            Err(e) => return Err(e),
        };
        self.state.mesh.positions = step.positions;
        self.state.velocities = step.velocities;
        let max_disp = step.max_displacement;
        if !max_disp.is_finite() || max_disp > self.divergence_limit {
            log::warn!("iteration {iteration}: displacement {max_disp} exceeds the divergence limit");
            return Ok(Some(Termination::Diverged));
        }

        let done = converged(max_disp, &self.cfg);
        if !done {
            self.maintain(iteration)?;
        }

        let stats = self.stats(iteration, max_disp)?;
        observer.on_iteration(&stats)?;
        self.state.stats_history.push(stats);
        if self.cfg.snapshot_every > 0 && iteration.is_multiple_of(self.cfg.snapshot_every) {
            observer.on_snapshot(iteration, &self.state.mesh)?;
        }

        if done {
            Ok(Some(Termination::Converged))
        } else if iteration >= self.cfg.max_iterations {
            Ok(Some(Termination::MaxIterations))
        } else {
            Ok(None)
        }
    }

    /// Snapping, smoothing and refinement on their cadences.
    fn maintain(&mut self, iteration: usize) -> Result<()> {
        if !self.anchors.is_empty() && iteration.is_multiple_of(self.cfg.snap_every) {
            let report = snap_pass(&mut self.state.mesh, &self.anchors, &self.snap_cfg)?;
            if !report.snapped_this_pass.is_empty() {
                report.apply_to_rest(&mut self.rest);
                for &(foil, _) in &report.snapped_this_pass {
                    self.state.velocities[foil] = Vec3::zeros();
                }
                self.rebuild_topology()?;
                log::debug!(
                    "iteration {iteration}: snapped {:?}, {} constraint points open",
                    report.snapped_this_pass,
                    report.unsatisfied_fixed.len()
                );
            }
        }
        if self.cfg.smooth_every > 0 && iteration.is_multiple_of(self.cfg.smooth_every) {
            self.state.mesh.positions = smooth_positions(
                &self.state.mesh.positions,
                &self.adjacency,
                &self.state.mesh.fixed,
                None,
                self.cfg.smooth_lambda,
                self.cfg.smooth_rounds,
            );
        }
        if self.cfg.refine_every > 0 && iteration.is_multiple_of(self.cfg.refine_every) {
            self.refine(iteration)?;
        }
        Ok(())
    }

    fn refine(&mut self, iteration: usize) -> Result<()> {
        let (mesh, midpoints) = subdivide(&self.state.mesh)?;
        for (e, &m) in &midpoints {
            let v = (self.state.velocities[e.0] + self.state.velocities[e.1]) * 0.5;
            debug_assert_eq!(m, self.state.velocities.len());
            self.state.velocities.push(v);
        }
        // every edge of the split mesh is new and starts unstressed
        let adj = Adjacency::build(&mesh)?;
        let lengths: Vec<(Edge, f64)> = adj
            .edges
            .iter()
            .map(|&e| (e, (mesh.positions[e.1] - mesh.positions[e.0]).norm()))
            .collect();
        self.rest = RestState::from_lengths(lengths)?;
        self.state.mesh = mesh;
        self.rebuild_topology()?;
        let quality = min_angle(&self.state.mesh);
        log::debug!(
            "iteration {iteration}: refined to {} faces, min angle {:.2} deg",
            self.state.mesh.face_count(),
            quality.min_angle_deg
        );
        self.check_cfl()
    }

    fn stats(&self, iteration: usize, max_displacement: f64) -> Result<IterationStats> {
        let mesh = &self.state.mesh;
        let k = self.stiffness();
        let spring_energy = spring_energy_of(&mesh.positions, &self.springs, &k)?;
        let kinetic_energy =
            0.5 * self.params.mass_m * self.state.velocities.iter().map(|v| v.norm_squared()).sum::<f64>();
        let mean_nn_distance = average_nn_distance(&mesh_nodes(mesh))?;
        let used = mesh.referenced();
        let snapped_count = self.anchors.ids().filter(|&t| used[t]).count();
        let degenerate_face_count = (0..mesh.face_count())
            .filter(|&f| crate::refine::face_min_angle(mesh, f) < DEGENERATE_ANGLE_DEG)
            .count();
        Ok(IterationStats {
            iteration,
            max_displacement,
            mean_nn_distance,
            spring_energy,
            kinetic_energy,
            snapped_count,
            degenerate_face_count,
        })
    }

    pub fn run(mut self, observer: &mut dyn SimObserver) -> Result<SimOutcome> {
        let termination = loop {
            if let Some(t) = self.step(observer)? {
                break t;
            }
        };
        Ok(SimOutcome {
            state: self.state,
            rest: self.rest,
            termination,
            nn_scale: self.nn_scale,
            omega_max: self.omega_max,
        })
    }
}

pub fn run_simulation(
    initial: SimState,
    params: &MaterialParams,
    rest: RestState,
    snap_cfg: &SnapConfig,
    cfg: &SimConfig,
    observer: &mut dyn SimObserver,
) -> Result<SimOutcome> {
    Simulation::new(initial, *params, rest, *snap_cfg, *cfg)?.run(observer)
}
