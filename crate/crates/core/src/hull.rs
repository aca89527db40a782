//! Incremental 3D convex hull with per-face outside sets.
//!
//! Output faces index directly into the input point list and wind
//! counter-clockwise seen from outside. Points strictly inside the hull stay in
//! the vertex array without faces.

use std::collections::{HashMap, VecDeque};

use crate::error::{FoilError, Result};
use crate::geometry::{bbox_diagonal, TriMesh, Vec3};

/// Plane-distance tolerance relative to the bounding-box diagonal.
const HULL_EPS_REL: f64 = 1e-11;

struct Face {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn new(points: &[Vec3], v: [usize; 3]) -> Self {
        let [a, b, c] = v.map(|i| points[i]);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        let normal = if len > 0.0 { n / len } else { n };
        Face {
            v,
            normal,
            offset: normal.dot(&a),
            outside: Vec::new(),
            alive: true,
        }
    }

    fn distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

pub fn convex_hull(points: &[Vec3]) -> Result<TriMesh> {
    if points.len() < 4 {
        return Err(FoilError::DegenerateInput(format!(
            "convex hull needs at least 4 points, got {}",
            points.len()
        )));
    }
    if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(FoilError::DegenerateInput(format!(
            "point {i} has a non-finite coordinate"
        )));
    }
    let scale = bbox_diagonal(points);
    let eps = HULL_EPS_REL * scale;
    let seed = initial_simplex(points, eps)?;

    let mut faces: Vec<Face> = Vec::new();
    let mut edge_face: HashMap<(usize, usize), usize> = HashMap::new();

    let interior = (points[seed[0]] + points[seed[1]] + points[seed[2]] + points[seed[3]]) / 4.0;
    for skip in 0..4 {
        let mut v = [0usize; 3];
        let mut k = 0;
        for (j, &s) in seed.iter().enumerate() {
            if j != skip {
                v[k] = s;
                k += 1;
            }
        }
        let mut face = Face::new(points, v);
        if face.distance(&interior) > 0.0 {
            v.swap(0, 1);
            face = Face::new(points, v);
        }
        add_face(&mut faces, &mut edge_face, face);
    }

    // initial conflict assignment
    for (i, p) in points.iter().enumerate() {
        if seed.contains(&i) {
            continue;
        }
        assign(&mut faces, 0..4, i, p, eps);
    }

    let mut cursor = 0usize;
    loop {
        // lowest-id live face with a non-empty outside set
        while cursor < faces.len() && !(faces[cursor].alive && !faces[cursor].outside.is_empty()) {
            cursor += 1;
        }
        if cursor >= faces.len() {
            // earlier faces may have gained points after the cursor passed them
            match faces.iter().position(|f| f.alive && !f.outside.is_empty()) {
                Some(i) => cursor = i,
                None => break,
            }
        }
        let start = cursor;
        let eye = farthest(&faces[start], points);
        let eye_pt = points[eye];

        // visible region by flood fill across shared edges
        let mut visible = vec![start];
        let mut is_visible: HashMap<usize, bool> = HashMap::new();
        is_visible.insert(start, true);
        let mut queue = VecDeque::from([start]);
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        while let Some(fi) = queue.pop_front() {
            let v = faces[fi].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let nb = *edge_face
                    .get(&(b, a))
                    .ok_or_else(|| FoilError::DegenerateInput("hull lost manifold structure".into()))?;
                match is_visible.get(&nb) {
                    Some(true) => {}
                    Some(false) => horizon.push((a, b)),
                    None => {
                        if faces[nb].distance(&eye_pt) > eps {
                            is_visible.insert(nb, true);
                            visible.push(nb);
                            queue.push_back(nb);
                        } else {
                            is_visible.insert(nb, false);
                            horizon.push((a, b));
                        }
                    }
                }
            }
        }

        let mut orphans: Vec<usize> = Vec::new();
        for &fi in &visible {
            let f = &mut faces[fi];
            f.alive = false;
            orphans.append(&mut f.outside);
            let v = f.v;
            for k in 0..3 {
                edge_face.remove(&(v[k], v[(k + 1) % 3]));
            }
        }
        orphans.retain(|&p| p != eye);
        orphans.sort_unstable();

        // horizon edges keep their direction so the new faces stay outward
        horizon.sort_unstable();
        let first_new = faces.len();
        for (a, b) in horizon {
            add_face(&mut faces, &mut edge_face, Face::new(points, [a, b, eye]));
        }
        let last_new = faces.len();
        for p in orphans {
            assign(&mut faces, first_new..last_new, p, &points[p], eps);
        }
        cursor = cursor.min(first_new);
    }

    let mut out: Vec<[usize; 3]> = faces.iter().filter(|f| f.alive).map(|f| f.v).collect();
    out.sort_unstable_by_key(canonical);
    TriMesh::new(points.to_vec(), out)
}

/// Rotation of a face that starts at its smallest index.
fn canonical(f: &[usize; 3]) -> [usize; 3] {
    let k = (0..3).min_by_key(|&k| f[k]).unwrap();
    [f[k], f[(k + 1) % 3], f[(k + 2) % 3]]
}

fn add_face(faces: &mut Vec<Face>, edge_face: &mut HashMap<(usize, usize), usize>, face: Face) {
    let id = faces.len();
    for k in 0..3 {
        edge_face.insert((face.v[k], face.v[(k + 1) % 3]), id);
    }
    faces.push(face);
}

fn assign(faces: &mut [Face], range: std::ops::Range<usize>, idx: usize, p: &Vec3, eps: f64) {
    for fi in range {
        if faces[fi].alive && faces[fi].distance(p) > eps {
            faces[fi].outside.push(idx);
            return;
        }
    }
}

fn farthest(face: &Face, points: &[Vec3]) -> usize {
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for &i in &face.outside {
        let d = face.distance(&points[i]);
        if d > best.0 || (d == best.0 && i < best.1) {
            best = (d, i);
        }
    }
    best.1
}

fn initial_simplex(points: &[Vec3], eps: f64) -> Result<[usize; 4]> {
    // most separated pair among the axis extremes
    let mut extremes = Vec::with_capacity(6);
    for axis in 0..3 {
        let mut lo = 0;
        let mut hi = 0;
        for (i, p) in points.iter().enumerate() {
            if p[axis] < points[lo][axis] {
                lo = i;
            }
            if p[axis] > points[hi][axis] {
                hi = i;
            }
        }
        extremes.push(lo);
        extremes.push(hi);
    }
    let mut best = (0.0, 0, 0);
    for &a in &extremes {
        for &b in &extremes {
            let d = (points[a] - points[b]).norm_squared();
            if d > best.0 {
                best = (d, a.min(b), a.max(b));
            }
        }
    }
    let (_, i0, i1) = best;
    if best.0.sqrt() <= eps {
        return Err(FoilError::DegenerateInput("all points coincide".into()));
    }

    let dir = (points[i1] - points[i0]).normalize();
    let mut i2 = usize::MAX;
    let mut best_line = 0.0;
    for (i, p) in points.iter().enumerate() {
        let d = (p - points[i0]).cross(&dir).norm();
        if d > best_line {
            best_line = d;
            i2 = i;
        }
    }
    if best_line <= eps {
        return Err(FoilError::DegenerateInput("points are collinear".into()));
    }

    let n = (points[i1] - points[i0]).cross(&(points[i2] - points[i0])).normalize();
    let mut i3 = usize::MAX;
    let mut best_plane = 0.0;
    for (i, p) in points.iter().enumerate() {
        let d = n.dot(&(p - points[i0])).abs();
        if d > best_plane {
            best_plane = d;
            i3 = i;
        }
    }
    if best_plane <= eps {
        return Err(FoilError::DegenerateInput("points are coplanar".into()));
    }
    Ok([i0, i1, i2, i3])
}
