//! Triangle mesh representation, adjacency and basic measurements.

use crate::error::{FoilError, Result};
use crate::par;
use crate::spatial::SpatialIndex;

pub type Vec3 = nalgebra::Vector3<f64>;

/// Relative threshold for zero-area faces, scaled by the squared bounding-box diagonal.
pub const DEGENERATE_AREA_REL: f64 = 1e-12;

/// Undirected edge with `0 < 1` ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        if a < b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn other(&self, v: usize) -> usize {
        if v == self.0 {
            self.1
        } else {
            self.0
        }
    }
}

/// Triangle mesh with per-vertex fixed flags.
///
/// Faces are counter-clockwise when seen from outside. Vertices that no face
/// references are allowed: constraint points waiting to be snapped onto sit in
/// the vertex array this way.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub positions: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub fixed: Vec<bool>,
}

impl TriMesh {
    pub fn new(positions: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let fixed = vec![false; positions.len()];
        let mesh = TriMesh {
            positions,
            faces,
            fixed,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if self.fixed.len() != n {
            return Err(FoilError::LengthMismatch {
                expected: n,
                got: self.fixed.len(),
            });
        }
        for (i, p) in self.positions.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(FoilError::Structural(format!("vertex {i} has a non-finite coordinate")));
            }
        }
        for (fi, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(FoilError::Structural(format!(
                    "face {fi} {f:?} references a vertex out of range (vertex count {n})"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(FoilError::Structural(format!("face {fi} {f:?} repeats a vertex")));
            }
        }
        Ok(())
    }

    pub fn fixed_indices(&self) -> Vec<usize> {
        (0..self.fixed.len()).filter(|&i| self.fixed[i]).collect()
    }

    /// Per-vertex flag: referenced by at least one face.
    pub fn referenced(&self) -> Vec<bool> {
        let mut used = vec![false; self.positions.len()];
        for f in &self.faces {
            for &v in f {
                used[v] = true;
            }
        }
        used
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.positions)
    }

    pub fn degenerate_area_eps(&self) -> f64 {
        let diag = self.bbox_diagonal();
        DEGENERATE_AREA_REL * diag * diag
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.positions[a], self.positions[b], self.positions[c]]
    }

    /// Copy without unreferenced vertices. Returns the old-to-new index map.
    pub fn compacted(&self) -> (TriMesh, Vec<Option<usize>>) {
        let used = self.referenced();
        let mut map = vec![None; self.positions.len()];
        let mut positions = Vec::new();
        let mut fixed = Vec::new();
        for (i, &u) in used.iter().enumerate() {
            if u {
                map[i] = Some(positions.len());
                positions.push(self.positions[i]);
                fixed.push(self.fixed[i]);
            }
        }
        let faces = self
            .faces
            .iter()
            .map(|f| f.map(|v| map[v].expect("referenced vertex")))
            .collect();
        (
            TriMesh {
                positions,
                faces,
                fixed,
            },
            map,
        )
    }
}

pub fn bbox_diagonal(points: &[Vec3]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let mut lo = *first;
    let mut hi = *first;
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}

/// Vertex neighborhoods and the undirected edge list of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    pub neighbors: Vec<Vec<usize>>,
    pub vertex_faces: Vec<Vec<usize>>,
    pub edges: Vec<Edge>,
}

impl Adjacency {
    pub fn build(mesh: &TriMesh) -> Result<Self> {
        let n = mesh.vertex_count();
        let mut neighbors = vec![Vec::new(); n];
        let mut vertex_faces = vec![Vec::new(); n];
        for (fi, f) in mesh.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(FoilError::Structural(format!(
                    "face {fi} {f:?} references a vertex out of range (vertex count {n})"
                )));
            }
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                neighbors[a].push(b);
                neighbors[b].push(a);
                vertex_faces[a].push(fi);
            }
        }
        let mut edges = Vec::new();
        for (i, list) in neighbors.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            edges.extend(list.iter().filter(|&&j| j > i).map(|&j| Edge(i, j)));
        }
        Ok(Adjacency {
            neighbors,
            vertex_faces,
            edges,
        })
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }
}

/// Unit normal (winding order) and area of one face.
pub fn face_normal_area(mesh: &TriMesh, face: usize) -> Result<(Vec3, f64)> {
    if face >= mesh.face_count() {
        return Err(FoilError::Structural(format!(
            "face index {face} out of range ({} faces)",
            mesh.face_count()
        )));
    }
    let [a, b, c] = mesh.triangle(face);
    triangle_normal_area(&a, &b, &c, mesh.degenerate_area_eps()).ok_or_else(|| {
        let area = 0.5 * (b - a).cross(&(c - a)).norm();
        FoilError::DegenerateFace { face, area }
    })
}

/// `None` when the area is below `area_eps` (or the bounding box is collapsed).
pub fn triangle_normal_area(a: &Vec3, b: &Vec3, c: &Vec3, area_eps: f64) -> Option<(Vec3, f64)> {
    let cross = (b - a).cross(&(c - a));
    let len = cross.norm();
    let area = 0.5 * len;
    if !(area > area_eps) || len == 0.0 {
        return None;
    }
    Some((cross / len, area))
}

/// Result of [`watertight_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WatertightReport {
    pub is_closed: bool,
    pub euler_characteristic: i64,
    pub boundary_edge_count: usize,
    /// Edges shared by more than two faces.
    pub nonmanifold_edge_count: usize,
    /// Every directed edge appears exactly once.
    pub consistently_oriented: bool,
    /// Vertices not referenced by any face; excluded from the Euler count.
    pub isolated_vertex_count: usize,
}

/// Closure and Euler characteristic of the face-referenced part of a mesh.
pub fn watertight_check(mesh: &TriMesh) -> WatertightReport {
    let mut undirected: Vec<Edge> = Vec::with_capacity(mesh.faces.len() * 3);
    let mut directed: Vec<(usize, usize)> = Vec::with_capacity(mesh.faces.len() * 3);
    for f in &mesh.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            undirected.push(Edge::new(a, b));
            directed.push((a, b));
        }
    }
    undirected.sort_unstable();
    directed.sort_unstable();
    let consistently_oriented = directed.windows(2).all(|w| w[0] != w[1]);

    let mut edge_count = 0usize;
    let mut boundary = 0usize;
    let mut nonmanifold = 0usize;
    let mut i = 0;
    while i < undirected.len() {
        let mut j = i;
        while j < undirected.len() && undirected[j] == undirected[i] {
            j += 1;
        }
        edge_count += 1;
        match j - i {
            1 => boundary += 1,
            2 => {}
            _ => nonmanifold += 1,
        }
        i = j;
    }
    let used = mesh.referenced();
    let v = used.iter().filter(|&&u| u).count();
    WatertightReport {
        is_closed: !mesh.faces.is_empty() && boundary == 0 && nonmanifold == 0,
        euler_characteristic: v as i64 - edge_count as i64 + mesh.faces.len() as i64,
        boundary_edge_count: boundary,
        nonmanifold_edge_count: nonmanifold,
        consistently_oriented,
        isolated_vertex_count: used.len() - v,
    }
}

/// Mean distance from each point to its nearest other point.
pub fn average_nn_distance(points: &[Vec3]) -> Result<f64> {
    if points.len() < 2 {
        return Err(FoilError::InsufficientInput(format!(
            "need at least 2 points for a nearest-neighbor distance, got {}",
            points.len()
        )));
    }
    let index = SpatialIndex::build(points.iter().copied().enumerate().collect());
    let dists = par::map_indexed(points.len(), |i| {
        index.nearest_excluding(&points[i], i).map(|(_, d)| d).unwrap_or(0.0)
    });
    Ok(dists.iter().sum::<f64>() / points.len() as f64)
}
