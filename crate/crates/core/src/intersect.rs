//! Self-intersection scan: uniform-grid broad phase, exact-predicate
//! triangle/triangle narrow phase. Faces sharing a vertex are never tested.

use std::collections::HashMap;

use crate::geometry::{TriMesh, Vec3};
use crate::par;

/// All unordered pairs `(f, g)`, `f < g`, of vertex-disjoint faces that intersect.
pub fn self_intersection_scan(mesh: &TriMesh) -> Vec<(usize, usize)> {
    let nf = mesh.face_count();
    if nf < 2 {
        return Vec::new();
    }
    let boxes: Vec<(Vec3, Vec3)> = (0..nf)
        .map(|f| {
            let [a, b, c] = mesh.triangle(f);
            (a.inf(&b).inf(&c), a.sup(&b).sup(&c))
        })
        .collect();
    let mean_extent = boxes.iter().map(|(lo, hi)| (hi - lo).max()).sum::<f64>() / nf as f64;
    let cell = if mean_extent > 0.0 { mean_extent } else { 1.0 };
    let origin = boxes.iter().fold(boxes[0].0, |acc, (lo, _)| acc.inf(lo));
    let key = |p: &Vec3| -> [i64; 3] {
        let q = (p - origin) / cell;
        [q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64]
    };

    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (f, (lo, hi)) in boxes.iter().enumerate() {
        let (a, b) = (key(lo), key(hi));
        for x in a[0]..=b[0] {
            for y in a[1]..=b[1] {
                for z in a[2]..=b[2] {
                    grid.entry([x, y, z]).or_default().push(f);
                }
            }
        }
    }
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for list in grid.values() {
        for (i, &f) in list.iter().enumerate() {
            for &g in &list[i + 1..] {
                candidates.push((f.min(g), f.max(g)));
            }
        }
    }
    candidates.sort_unstable();
    candidates.dedup();

    let hits = par::map_indexed(candidates.len(), |k| {
        let (f, g) = candidates[k];
        let (fa, fb) = (mesh.faces[f], mesh.faces[g]);
        if fa.iter().any(|v| fb.contains(v)) {
            return false;
        }
        let (lo1, hi1) = boxes[f];
        let (lo2, hi2) = boxes[g];
        if (0..3).any(|a| hi1[a] < lo2[a] || hi2[a] < lo1[a]) {
            return false;
        }
        triangles_intersect(&mesh.triangle(f), &mesh.triangle(g))
    });
    candidates
        .into_iter()
        .zip(hits)
        .filter_map(|(pair, hit)| hit.then_some(pair))
        .collect()
}

fn orient(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a))
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Closed triangle/triangle intersection test.
pub fn triangles_intersect(t1: &[Vec3; 3], t2: &[Vec3; 3]) -> bool {
    let s2 = t2.map(|p| sign(orient(&t1[0], &t1[1], &t1[2], &p)));
    if s2.iter().all(|&s| s > 0) || s2.iter().all(|&s| s < 0) {
        return false;
    }
    let s1 = t1.map(|p| sign(orient(&t2[0], &t2[1], &t2[2], &p)));
    if s1.iter().all(|&s| s > 0) || s1.iter().all(|&s| s < 0) {
        return false;
    }
    if s2.iter().all(|&s| s == 0) {
        return coplanar_intersect(t1, t2);
    }
    (0..3).any(|k| segment_hits_triangle(&t1[k], &t1[(k + 1) % 3], t2))
        || (0..3).any(|k| segment_hits_triangle(&t2[k], &t2[(k + 1) % 3], t1))
}

/// Segment crosses or touches the triangle; segments lying in the triangle's
/// plane are left to the other edge tests.
fn segment_hits_triangle(p: &Vec3, q: &Vec3, t: &[Vec3; 3]) -> bool {
    let sp = sign(orient(&t[0], &t[1], &t[2], p));
    let sq = sign(orient(&t[0], &t[1], &t[2], q));
    if sp == sq {
        return false;
    }
    let e = [
        sign(orient(p, q, &t[0], &t[1])),
        sign(orient(p, q, &t[1], &t[2])),
        sign(orient(p, q, &t[2], &t[0])),
    ];
    !(e.iter().any(|&s| s > 0) && e.iter().any(|&s| s < 0))
}

fn coplanar_intersect(t1: &[Vec3; 3], t2: &[Vec3; 3]) -> bool {
    let n = (t1[1] - t1[0]).cross(&(t1[2] - t1[0]));
    let drop = n.iamax();
    let (u, v) = match drop {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let p = |x: &Vec3| [x[u], x[v]];
    let a = t1.map(|x| p(&x));
    let b = t2.map(|x| p(&x));
    for i in 0..3 {
        for j in 0..3 {
            if segments_2d(a[i], a[(i + 1) % 3], b[j], b[(j + 1) % 3]) {
                return true;
            }
        }
    }
    inside_2d(a[0], &b) || inside_2d(b[0], &a)
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_2d(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = sign(cross2(q1, q2, p1));
    let d2 = sign(cross2(q1, q2, p2));
    let d3 = sign(cross2(p1, p2, q1));
    let d4 = sign(cross2(p1, p2, q2));
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    (d1 == 0 && on(q1, q2, p1))
        || (d2 == 0 && on(q1, q2, p2))
        || (d3 == 0 && on(p1, p2, q1))
        || (d4 == 0 && on(p1, p2, q2))
}

fn inside_2d(p: [f64; 2], t: &[[f64; 2]; 3]) -> bool {
    let s = [
        sign(cross2(t[0], t[1], p)),
        sign(cross2(t[1], t[2], p)),
        sign(cross2(t[2], t[0], p)),
    ];
    !(s.iter().any(|&x| x > 0) && s.iter().any(|&x| x < 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_triangles() {
        let t1 = [
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let t2 = [
            Vec3::new(0.0, 0.0, -1.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 2.0, 1.0),
        ];
        assert!(triangles_intersect(&t1, &t2));
        let far = t2.map(|p| p + Vec3::x() * 5.0);
        assert!(!triangles_intersect(&t1, &far));
    }

    #[test]
    fn coplanar_overlap() {
        let t1 = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        let t2 = t1.map(|p| p + Vec3::new(0.2, 0.2, 0.0));
        assert!(triangles_intersect(&t1, &t2));
        let apart = t1.map(|p| p + Vec3::new(2.0, 0.0, 0.0));
        assert!(!triangles_intersect(&t1, &apart));
    }

    #[test]
    fn interpenetrating_pair_reported_once() {
        let positions = vec![
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, -1.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 2.0, 1.0),
        ];
        let mesh = TriMesh::new(positions, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        assert_eq!(self_intersection_scan(&mesh), vec![(0, 1)]);
    }
}
