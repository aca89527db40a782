//! The initial spherical foil: Fibonacci lattice, hull triangulation and the
//! sphere enclosing the constraint points.

use std::f64::consts::PI;

use crate::error::{FoilError, Result};
use crate::geometry::{TriMesh, Vec3};
use crate::hull::convex_hull;

/// Default enlargement of the enclosing sphere beyond the farthest constraint point.
pub const DEFAULT_MARGIN_FACTOR: f64 = 1.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSpec {
    pub center: Vec3,
    pub radius: f64,
    pub point_count: usize,
}

impl SphereSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(FoilError::InvalidSpec(format!(
                "radius must be positive and finite, got {}",
                self.radius
            )));
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(FoilError::InvalidSpec("center must be finite".into()));
        }
        if self.point_count < 4 {
            return Err(FoilError::InvalidSpec(format!(
                "need at least 4 lattice points, got {}",
                self.point_count
            )));
        }
        Ok(())
    }
}

/// Raw golden-spiral lattice; point `i` uses the half-offset polar angle
/// `acos(1 - 2(i + 0.5)/n)` for `i = 0..n`.
pub fn fibonacci_lattice(n: usize, radius: f64, center: Vec3) -> Vec<Vec3> {
    let turn = PI * (1.0 + 5f64.sqrt());
    (0..n)
        .map(|i| {
            let phi = (1.0 - 2.0 * (i as f64 + 0.5) / n as f64).acos();
            let theta = turn * i as f64;
            let dir = Vec3::new(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos());
            center + dir * radius
        })
        .collect()
}

pub fn fibonacci_sphere(spec: &SphereSpec) -> Result<Vec<Vec3>> {
    spec.validate()?;
    Ok(fibonacci_lattice(spec.point_count, spec.radius, spec.center))
}

/// Centroid-centered sphere reaching `margin_factor` times past the farthest point.
///
/// The returned spec carries `point_count = 0`; callers fill it in.
pub fn enclosing_sphere(fixed_points: &[Vec3], margin_factor: f64) -> Result<SphereSpec> {
    if fixed_points.is_empty() {
        return Err(FoilError::EmptyConstraint(
            "enclosing sphere needs at least one fixed point".into(),
        ));
    }
    if !(margin_factor >= 1.0) || !margin_factor.is_finite() {
        return Err(FoilError::InvalidParameter(format!(
            "margin factor must be >= 1, got {margin_factor}"
        )));
    }
    let center = fixed_points.iter().sum::<Vec3>() / fixed_points.len() as f64;
    let reach = fixed_points.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    let radius = margin_factor * reach;
    if !(radius > 0.0) {
        return Err(FoilError::InvalidSpec(
            "fixed points have zero spread; sphere radius would be 0".into(),
        ));
    }
    Ok(SphereSpec {
        center,
        radius,
        point_count: 0,
    })
}

/// Hull of an `n`-point lattice on the enclosing sphere, with the fixed points
/// appended as fixed, face-less vertices.
pub fn build_initial_mesh(fixed_points: &[Vec3], n: usize, margin_factor: f64) -> Result<TriMesh> {
    let (mesh, _) = build_initial_mesh_with_sphere(fixed_points, n, margin_factor)?;
    Ok(mesh)
}

pub fn build_initial_mesh_with_sphere(
    fixed_points: &[Vec3],
    n: usize,
    margin_factor: f64,
) -> Result<(TriMesh, SphereSpec)> {
    let mut sphere = enclosing_sphere(fixed_points, margin_factor)?;
    sphere.point_count = n;
    let lattice = fibonacci_sphere(&sphere)?;
    let mut mesh = convex_hull(&lattice)?;
    for p in fixed_points {
        mesh.positions.push(*p);
        mesh.fixed.push(true);
    }
    mesh.validate()?;
    Ok((mesh, sphere))
}
