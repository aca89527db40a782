//! Elastic, pressure and damping forces on the foil.
//!
//! Per-edge and per-face contributions are computed independently (in
//! parallel when enabled) and scattered into per-vertex totals sequentially in
//! edge/face order, so the result does not depend on the worker count.

use std::collections::BTreeMap;

use crate::error::{FoilError, Result};
use crate::geometry::{Adjacency, Edge, TriMesh, Vec3};
use crate::par;
use crate::spatial::SpatialIndex;

/// Edge lengths below this fraction of the bounding-box diagonal count as coincident endpoints.
pub const DEGENERATE_LENGTH_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub k_base: f64,
    pub damping_c: f64,
    /// Negative values contract a mesh with outward normals.
    pub pressure_p: f64,
    pub mass_m: f64,
    pub distance_factor_strength: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            k_base: 1.0,
            damping_c: 0.8,
            pressure_p: 3.0,
            mass_m: 1.0,
            distance_factor_strength: 0.0,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64, rule: &str| {
            Err(FoilError::InvalidParameter(format!("{name} must be {rule}, got {v}")))
        };
        if !(self.k_base > 0.0) || !self.k_base.is_finite() {
            return bad("k_base", self.k_base, "> 0");
        }
        if !(self.mass_m > 0.0) || !self.mass_m.is_finite() {
            return bad("mass", self.mass_m, "> 0");
        }
        if !(self.damping_c >= 0.0) || !self.damping_c.is_finite() {
            return bad("damping", self.damping_c, ">= 0");
        }
        if !(self.distance_factor_strength >= 0.0) || !self.distance_factor_strength.is_finite() {
            return bad("distance_factor_strength", self.distance_factor_strength, ">= 0");
        }
        if !self.pressure_p.is_finite() {
            return bad("pressure", self.pressure_p, "finite");
        }
        Ok(())
    }
}

/// Rest lengths per undirected edge.
#[derive(Debug, Clone, PartialEq)]
pub struct RestState {
    lengths: BTreeMap<Edge, f64>,
    /// Multiplies every stored length; in (0, 1].
    pub contraction_scale: f64,
}

impl RestState {
    /// Current edge lengths of `mesh` become its rest lengths.
    pub fn capture(mesh: &TriMesh) -> Result<Self> {
        let adj = Adjacency::build(mesh)?;
        let mut lengths = BTreeMap::new();
        for &e in &adj.edges {
            let l = (mesh.positions[e.1] - mesh.positions[e.0]).norm();
            if !(l > 0.0) {
                return Err(FoilError::DegenerateEdge(e.0, e.1));
            }
            lengths.insert(e, l);
        }
        Ok(RestState {
            lengths,
            contraction_scale: 1.0,
        })
    }

    pub fn from_lengths(lengths: impl IntoIterator<Item = (Edge, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (e, l) in lengths {
            if !(l > 0.0) || !l.is_finite() || e.0 == e.1 {
                return Err(FoilError::InvalidParameter(format!(
                    "rest length of ({}, {}) must be positive, got {l}",
                    e.0, e.1
                )));
            }
            map.insert(Edge::new(e.0, e.1), l);
        }
        Ok(RestState {
            lengths: map,
            contraction_scale: 1.0,
        })
    }

    pub fn with_contraction_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(FoilError::InvalidParameter(format!(
                "contraction scale must be in (0, 1], got {scale}"
            )));
        }
        self.contraction_scale = scale;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    /// Scaled rest length.
    pub fn get(&self, e: Edge) -> Option<f64> {
        self.lengths.get(&e).map(|l| l * self.contraction_scale)
    }

    pub fn insert(&mut self, e: Edge, length: f64) {
        self.lengths.insert(e, length);
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.lengths.keys().copied()
    }

    /// Re-key every edge touching `from` onto `to`.
    pub fn remap_vertex(&mut self, from: usize, to: usize) {
        let moved: Vec<(Edge, f64)> = self
            .lengths
            .iter()
            .filter(|(e, _)| e.0 == from || e.1 == from)
            .map(|(e, l)| (*e, *l))
            .collect();
        for (e, l) in moved {
            self.lengths.remove(&e);
            self.lengths.insert(Edge::new(e.other(from), to), l);
        }
    }

    pub fn springs(&self) -> SpringSet {
        let (edges, rest) = self
            .lengths
            .iter()
            .map(|(e, l)| (*e, l * self.contraction_scale))
            .unzip();
        SpringSet { edges, rest }
    }

    /// Errors if some mesh edge has no rest length.
    pub fn check_covers(&self, adjacency: &Adjacency) -> Result<()> {
        match adjacency.edges.iter().find(|e| !self.lengths.contains_key(e)) {
            Some(e) => Err(FoilError::Structural(format!(
                "edge ({}, {}) has no rest length",
                e.0, e.1
            ))),
            None => Ok(()),
        }
    }
}

/// Flattened springs: edge list with scaled rest lengths, in edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpringSet {
    pub edges: Vec<Edge>,
    pub rest: Vec<f64>,
}

/// Stiffness decayed by distance `r` to the nearest fixed vertex, in units of `d`.
pub fn effective_stiffness(r: f64, params: &MaterialParams, d: f64) -> f64 {
    params.k_base / (1.0 + params.distance_factor_strength * r / d)
}

/// Per-spring stiffness evaluated at the spring midpoint. Without anchors
/// (no fixed vertices) every spring gets `k_base`.
pub fn spring_stiffness(
    positions: &[Vec3],
    springs: &SpringSet,
    params: &MaterialParams,
    d: f64,
    anchors: Option<&SpatialIndex>,
) -> Vec<f64> {
    let anchors = anchors.filter(|a| !a.is_empty());
    match anchors {
        Some(index) if params.distance_factor_strength > 0.0 => par::map_indexed(springs.edges.len(), |s| {
            let e = springs.edges[s];
            let mid = (positions[e.0] + positions[e.1]) * 0.5;
            let r = index.nearest(&mid).map(|(_, r)| r).unwrap_or(0.0);
            effective_stiffness(r, params, d)
        }),
        _ => vec![params.k_base; springs.edges.len()],
    }
}

fn length_eps(positions: &[Vec3]) -> f64 {
    DEGENERATE_LENGTH_REL * crate::geometry::bbox_diagonal(positions)
}

/// Spring forces for arbitrary springs and per-spring stiffness.
pub fn spring_forces(positions: &[Vec3], springs: &SpringSet, stiffness: &[f64]) -> Result<Vec<Vec3>> {
    let eps = length_eps(positions);
    let contributions = par::map_indexed(springs.edges.len(), |s| {
        let Edge(i, j) = springs.edges[s];
        let delta = positions[j] - positions[i];
        let len = delta.norm();
        if !(len > eps) {
            return Err(FoilError::DegenerateEdge(i, j));
        }
        let rest = springs.rest[s];
        Ok(delta * (stiffness[s] * (len - rest) / rest / len))
    });
    let mut forces = vec![Vec3::zeros(); positions.len()];
    for (s, c) in contributions.into_iter().enumerate() {
        let c = c?;
        let Edge(i, j) = springs.edges[s];
        forces[i] += c;
        forces[j] -= c;
    }
    Ok(forces)
}

/// `sum of k (len - L)^2 / (2 L)` over springs.
pub fn spring_energy_of(positions: &[Vec3], springs: &SpringSet, stiffness: &[f64]) -> Result<f64> {
    let eps = length_eps(positions);
    let terms = par::map_indexed(springs.edges.len(), |s| {
        let Edge(i, j) = springs.edges[s];
        let len = (positions[j] - positions[i]).norm();
        if !(len > eps) {
            return Err(FoilError::DegenerateEdge(i, j));
        }
        let rest = springs.rest[s];
        Ok(0.5 * stiffness[s] * (len - rest) * (len - rest) / rest)
    });
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total)
}

fn anchors_of(mesh: &TriMesh) -> SpatialIndex {
    SpatialIndex::over_vertices(&mesh.positions, &mesh.fixed)
}

fn prepare(mesh: &TriMesh, rest: &RestState) -> Result<SpringSet> {
    let adj = Adjacency::build(mesh)?;
    rest.check_covers(&adj)?;
    let springs = rest.springs();
    if let Some(e) = springs.edges.iter().find(|e| e.1 >= mesh.vertex_count()) {
        return Err(FoilError::Structural(format!(
            "rest length for ({}, {}) refers past the vertex array",
            e.0, e.1
        )));
    }
    Ok(springs)
}

/// Elastic force per vertex. Fixed vertices are not zeroed here.
pub fn elastic_forces(mesh: &TriMesh, rest: &RestState, params: &MaterialParams, d: f64) -> Result<Vec<Vec3>> {
    let springs = prepare(mesh, rest)?;
    let anchors = anchors_of(mesh);
    let k = spring_stiffness(&mesh.positions, &springs, params, d, Some(&anchors));
    spring_forces(&mesh.positions, &springs, &k)
}

/// Energy whose negative gradient is [`elastic_forces`] when stiffness does
/// not vary with position.
pub fn spring_energy(mesh: &TriMesh, rest: &RestState, params: &MaterialParams, d: f64) -> Result<f64> {
    let springs = prepare(mesh, rest)?;
    let anchors = anchors_of(mesh);
    let k = spring_stiffness(&mesh.positions, &springs, params, d, Some(&anchors));
    spring_energy_of(&mesh.positions, &springs, &k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureForces {
    pub forces: Vec<Vec3>,
    /// Faces skipped as degenerate.
    pub skipped: usize,
}

/// Each face pushes `p * n * A / 3` onto each of its vertices.
pub fn pressure_forces(mesh: &TriMesh, params: &MaterialParams) -> PressureForces {
    let mut forces = vec![Vec3::zeros(); mesh.vertex_count()];
    if params.pressure_p == 0.0 {
        return PressureForces { forces, skipped: 0 };
    }
    let eps = mesh.degenerate_area_eps();
    let per_face = par::map_indexed(mesh.face_count(), |f| {
        let [a, b, c] = mesh.triangle(f);
        crate::geometry::triangle_normal_area(&a, &b, &c, eps).map(|(n, area)| n * (params.pressure_p * area / 3.0))
    });
    let mut skipped = 0;
    for (f, share) in per_face.into_iter().enumerate() {
        match share {
            Some(s) => {
                for &v in &mesh.faces[f] {
                    forces[v] += s;
                }
            }
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::debug!("pressure: skipped {skipped} degenerate faces");
    }
    PressureForces { forces, skipped }
}

/// Elastic + pressure - damping, zero on fixed vertices.
pub fn total_forces(
    mesh: &TriMesh,
    rest: &RestState,
    params: &MaterialParams,
    d: f64,
    velocities: &[Vec3],
) -> Result<Vec<Vec3>> {
    if velocities.len() != mesh.vertex_count() {
        return Err(FoilError::LengthMismatch {
            expected: mesh.vertex_count(),
            got: velocities.len(),
        });
    }
    let elastic = elastic_forces(mesh, rest, params, d)?;
    let pressure = pressure_forces(mesh, params);
    Ok(combine(
        &mesh.fixed,
        &elastic,
        &pressure.forces,
        velocities,
        params.damping_c,
    ))
}

pub(crate) fn combine(fixed: &[bool], elastic: &[Vec3], pressure: &[Vec3], velocities: &[Vec3], c: f64) -> Vec<Vec3> {
    (0..fixed.len())
        .map(|i| {
            if fixed[i] {
                Vec3::zeros()
            } else {
                elastic[i] + pressure[i] - velocities[i] * c
            }
        })
        .collect()
}

/// `2 sqrt(k m)`.
pub fn critical_damping(params: &MaterialParams) -> f64 {
    2.0 * (params.k_base * params.mass_m).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MaterialParams {
        MaterialParams {
            k_base: 1.0,
            damping_c: 0.0,
            pressure_p: 0.0,
            mass_m: 1.0,
            distance_factor_strength: 0.0,
        }
    }

    fn two_points(dist: f64) -> (TriMesh, RestState) {
        let mesh = TriMesh {
            positions: vec![Vec3::zeros(), Vec3::x() * dist],
            faces: vec![],
            fixed: vec![false, false],
        };
        let rest = RestState::from_lengths([(Edge(0, 1), 1.0)]).unwrap();
        (mesh, rest)
    }

    #[test]
    fn stiffness_decay() {
        let mut p = params();
        assert_eq!(effective_stiffness(0.0, &p, 0.1), 1.0);
        assert_eq!(effective_stiffness(5.0, &p, 0.1), 1.0);
        p.distance_factor_strength = 10.0;
        assert!((effective_stiffness(0.99, &p, 0.1) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn stretched_pair() {
        let (mesh, rest) = two_points(2.0);
        let f = elastic_forces(&mesh, &rest, &params(), 1.0).unwrap();
        assert_eq!(f[0], Vec3::x());
        assert_eq!(f[1], -Vec3::x());
        assert_eq!(spring_energy(&mesh, &rest, &params(), 1.0).unwrap(), 0.5);
    }

    #[test]
    fn at_rest_is_force_free() {
        let (mesh, rest) = two_points(1.0);
        let f = elastic_forces(&mesh, &rest, &params(), 1.0).unwrap();
        assert!(f.iter().all(|v| *v == Vec3::zeros()));
        assert_eq!(spring_energy(&mesh, &rest, &params(), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn coincident_endpoints() {
        let mesh = TriMesh {
            positions: vec![Vec3::zeros(), Vec3::zeros(), Vec3::x()],
            faces: vec![],
            fixed: vec![false; 3],
        };
        let rest = RestState::from_lengths([(Edge(0, 1), 1.0), (Edge(1, 2), 1.0)]).unwrap();
        assert!(matches!(
            elastic_forces(&mesh, &rest, &params(), 1.0),
            Err(FoilError::DegenerateEdge(0, 1))
        ));
    }

    #[test]
    fn missing_rest_length_is_structural() {
        let mesh = TriMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]).unwrap();
        let rest = RestState::from_lengths([(Edge(0, 1), 1.0)]).unwrap();
        assert!(matches!(
            elastic_forces(&mesh, &rest, &params(), 1.0),
            Err(FoilError::Structural(_))
        ));
    }

    #[test]
    fn pressure_on_unit_triangle() {
        let mesh = TriMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]).unwrap();
        let mut p = params();
        p.pressure_p = 3.0;
        let pf = pressure_forces(&mesh, &p);
        assert_eq!(pf.skipped, 0);
        for f in pf.forces {
            assert!((f - Vec3::new(0.0, 0.0, 0.5)).norm() < 1e-15);
        }
        p.pressure_p = 0.0;
        assert!(pressure_forces(&mesh, &p).forces.iter().all(|f| *f == Vec3::zeros()));
    }

    #[test]
    fn degenerate_faces_are_skipped() {
        let mesh = TriMesh::new(
            vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0, Vec3::y()],
            vec![[0, 1, 2], [0, 1, 3]],
        )
        .unwrap();
        let mut p = params();
        p.pressure_p = 1.0;
        assert_eq!(pressure_forces(&mesh, &p).skipped, 1);
    }

    #[test]
    fn damping_and_pinning() {
        let mesh = TriMesh {
            positions: vec![Vec3::zeros(), Vec3::x() * 3.0],
            faces: vec![],
            fixed: vec![false, true],
        };
        let rest = RestState::from_lengths([]).unwrap();
        let mut p = params();
        p.damping_c = 2.0;
        let f = total_forces(&mesh, &rest, &p, 1.0, &[Vec3::x(), Vec3::x()]).unwrap();
        assert_eq!(f[0], Vec3::new(-2.0, 0.0, 0.0));
        assert_eq!(f[1], Vec3::zeros());
        assert!(matches!(
            total_forces(&mesh, &rest, &p, 1.0, &[Vec3::x()]),
            Err(FoilError::LengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn zero_state_zero_force() {
        let (mesh, rest) = two_points(1.0);
        let f = total_forces(&mesh, &rest, &params(), 1.0, &[Vec3::zeros(); 2]).unwrap();
        assert!(f.iter().all(|v| *v == Vec3::zeros()));
    }

    #[test]
    fn critical_damping_values() {
        let mut p = params();
        p.k_base = 100.0;
        assert_eq!(critical_damping(&p), 20.0);
        p.k_base = 1.0;
        assert_eq!(critical_damping(&p), 2.0);
        p.k_base = 400.0;
        p.mass_m = 4.0;
        assert_eq!(critical_damping(&p), 80.0);
    }

    #[test]
    fn remap_moves_edges() {
        let mut rest = RestState::from_lengths([(Edge(0, 1), 1.0), (Edge(1, 2), 2.0), (Edge(2, 3), 3.0)]).unwrap();
        rest.remap_vertex(1, 7);
        let edges: Vec<Edge> = rest.edges().collect();
        assert_eq!(edges, vec![Edge(0, 7), Edge(2, 3), Edge(2, 7)]);
        assert_eq!(rest.get(Edge(2, 7)), Some(2.0));
    }
}
