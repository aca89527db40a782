//! Mesh quality maintenance: constrained Laplacian smoothing, 1-to-4 midpoint
//! subdivision, angle-based validation and projection onto the seed sphere.

use std::collections::BTreeMap;

use crate::error::{FoilError, Result};
use crate::geometry::{watertight_check, Adjacency, Edge, TriMesh, Vec3};
use crate::intersect::self_intersection_scan;
use crate::par;
use crate::seed::SphereSpec;

/// Faces whose smallest angle is below this many degrees are flagged degenerate.
pub const DEGENERATE_ANGLE_DEG: f64 = 1.0;

/// Smoothing step for one vertex: the requested `lambda`, capped at
/// `1 / degree` so the update stays a convex combination of the vertex and
/// its neighbors.
pub fn effective_lambda(lambda: f64, degree: usize) -> f64 {
    if degree == 0 {
        0.0
    } else {
        lambda.min(1.0 / degree as f64)
    }
}

/// Jacobi Laplacian rounds over the non-fixed vertices selected by `mask`
/// (all non-fixed vertices when `mask` is `None`).
pub fn smooth_positions(
    positions: &[Vec3],
    adjacency: &Adjacency,
    fixed: &[bool],
    mask: Option<&[bool]>,
    lambda: f64,
    rounds: usize,
) -> Vec<Vec3> {
    let mut current = positions.to_vec();
    for _ in 0..rounds {
        let prev = &current;
        let next = par::map_indexed(prev.len(), |i| {
            let movable = !fixed[i] && mask.is_none_or(|m| m[i]);
            let nbrs = &adjacency.neighbors[i];
            if !movable || nbrs.is_empty() {
                return prev[i];
            }
            let mut lap = Vec3::zeros();
            for &j in nbrs {
                lap += prev[j] - prev[i];
            }
            prev[i] + lap * effective_lambda(lambda, nbrs.len())
        });
        current = next;
    }
    current
}

pub fn laplacian_smooth(mesh: &TriMesh, lambda: f64, rounds: usize) -> Result<TriMesh> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(FoilError::InvalidParameter(format!(
            "smoothing lambda must be in (0, 1), got {lambda}"
        )));
    }
    let adj = Adjacency::build(mesh)?;
    let positions = smooth_positions(&mesh.positions, &adj, &mesh.fixed, None, lambda, rounds);
    Ok(TriMesh {
        positions,
        faces: mesh.faces.clone(),
        fixed: mesh.fixed.clone(),
    })
}

/// Edge-to-new-vertex map produced by [`subdivide`].
pub type MidpointMap = BTreeMap<Edge, usize>;

/// 1-to-4 split. Midpoint vertices are appended in sorted edge order after the
/// existing vertices.
pub fn subdivide(mesh: &TriMesh) -> Result<(TriMesh, MidpointMap)> {
    mesh.validate()?;
    let report = watertight_check(mesh);
    if !report.is_closed {
        return Err(FoilError::Structural(format!(
            "subdivision needs a closed mesh ({} boundary, {} non-manifold edges)",
            report.boundary_edge_count, report.nonmanifold_edge_count
        )));
    }
    let adj = Adjacency::build(mesh)?;
    let mut positions = mesh.positions.clone();
    let mut fixed = mesh.fixed.clone();
    let mut midpoints = MidpointMap::new();
    for &e in &adj.edges {
        midpoints.insert(e, positions.len());
        positions.push((mesh.positions[e.0] + mesh.positions[e.1]) * 0.5);
        fixed.push(false);
    }
    let mid = |a: usize, b: usize| midpoints[&Edge::new(a, b)];
    let mut faces = Vec::with_capacity(mesh.faces.len() * 4);
    for &[a, b, c] in &mesh.faces {
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        faces.push([a, ab, ca]);
        faces.push([ab, b, bc]);
        faces.push([ca, bc, c]);
        faces.push([ab, bc, ca]);
    }
    Ok((
        TriMesh {
            positions,
            faces,
            fixed,
        },
        midpoints,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    /// Smallest interior angle over all faces, in degrees.
    pub min_angle_deg: f64,
    pub degenerate_faces: Vec<usize>,
    pub self_intersections: Vec<(usize, usize)>,
    pub is_closed: bool,
}

/// Interior angles of a triangle in degrees.
pub fn triangle_angles(t: &[Vec3; 3]) -> [f64; 3] {
    let angle = |p: &Vec3, q: &Vec3, r: &Vec3| {
        let u = q - p;
        let v = r - p;
        u.cross(&v).norm().atan2(u.dot(&v)).to_degrees()
    };
    [
        angle(&t[0], &t[1], &t[2]),
        angle(&t[1], &t[2], &t[0]),
        angle(&t[2], &t[0], &t[1]),
    ]
}

pub fn face_min_angle(mesh: &TriMesh, face: usize) -> f64 {
    let a = triangle_angles(&mesh.triangle(face));
    a[0].min(a[1]).min(a[2]).clamp(0.0, 60.0)
}

/// Minimum-angle quality report. Self-intersections are not scanned here;
/// see [`quality_report`].
pub fn min_angle(mesh: &TriMesh) -> QualityReport {
    let per_face = par::map_indexed(mesh.face_count(), |f| face_min_angle(mesh, f));
    let min_angle_deg = if per_face.is_empty() {
        60.0
    } else {
        per_face.iter().copied().fold(60.0, f64::min)
    };
    let degenerate_faces = per_face
        .iter()
        .enumerate()
        .filter(|(_, &a)| a < DEGENERATE_ANGLE_DEG)
        .map(|(f, _)| f)
        .collect();
    QualityReport {
        min_angle_deg,
        degenerate_faces,
        self_intersections: Vec::new(),
        is_closed: watertight_check(mesh).is_closed,
    }
}

pub fn quality_report(mesh: &TriMesh, scan_intersections: bool) -> QualityReport {
    let mut report = min_angle(mesh);
    if scan_intersections {
        report.self_intersections = self_intersection_scan(mesh);
    }
    report
}

/// Pushes every non-fixed vertex radially onto the sphere.
pub fn project_to_sphere(mesh: &TriMesh, sphere: &SphereSpec) -> Result<TriMesh> {
    let mut out = mesh.clone();
    let tiny = f64::EPSILON * sphere.radius;
    for (i, p) in out.positions.iter_mut().enumerate() {
        if mesh.fixed[i] {
            continue;
        }
        let offset = *p - sphere.center;
        let len = offset.norm();
        if !(len > tiny) {
            return Err(FoilError::ProjectionUndefined(i));
        }
        *p = sphere.center + offset * (sphere.radius / len);
    }
    Ok(out)
}
