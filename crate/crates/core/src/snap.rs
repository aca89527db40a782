//! Fixed-vertex constraints: snapping foil vertices onto constraint points,
//! local relaxation around snaps, and the influence-radius estimates.

use crate::error::{FoilError, Result};
use crate::forces::{MaterialParams, RestState};
use crate::geometry::{Adjacency, TriMesh, Vec3};
use crate::par;
use crate::refine::smooth_positions;
use crate::spatial::SpatialIndex;

/// Stiffness fraction at which a fixed vertex's influence counts as negligible.
const NEGLIGIBLE_STIFFNESS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapConfig {
    pub snapping_tolerance: f64,
    pub relaxation_lambda: f64,
    pub relaxation_rounds: usize,
}

impl Default for SnapConfig {
    fn default() -> Self {
        SnapConfig {
            snapping_tolerance: 0.1,
            relaxation_lambda: 0.5,
            relaxation_rounds: 3,
        }
    }
}

impl SnapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.snapping_tolerance > 0.0) || !self.snapping_tolerance.is_finite() {
            return Err(FoilError::InvalidParameter(format!(
                "snapping tolerance must be > 0, got {}",
                self.snapping_tolerance
            )));
        }
        if !(self.relaxation_lambda > 0.0 && self.relaxation_lambda < 1.0) {
            return Err(FoilError::InvalidParameter(format!(
                "relaxation lambda must be in (0, 1), got {}",
                self.relaxation_lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnapReport {
    /// `(foil vertex, fixed vertex)` pairs merged this pass.
    pub snapped_this_pass: Vec<(usize, usize)>,
    /// Fixed vertices carrying faces after this pass.
    pub total_snapped: usize,
    /// Fixed vertices no foil vertex has reached yet.
    pub unsatisfied_fixed: Vec<usize>,
}

impl SnapReport {
    /// Moves rest lengths of merged foil vertices onto their targets.
    pub fn apply_to_rest(&self, rest: &mut RestState) {
        for &(foil, target) in &self.snapped_this_pass {
            rest.remap_vertex(foil, target);
        }
    }
}

/// One snapping pass.
///
/// Every free, face-carrying vertex closer than the tolerance to its nearest
/// constraint point is a candidate. Each unreached constraint point takes the
/// lowest-index candidate: that vertex is moved exactly onto it, pinned, and
/// its faces are re-indexed to the constraint point, leaving the foil vertex
/// face-less. The 1-ring around the merged points is then relaxed.
pub fn snap_pass(mesh: &mut TriMesh, index: &SpatialIndex, cfg: &SnapConfig) -> Result<SnapReport> {
    if index.is_empty() {
        return Err(FoilError::EmptyConstraint("snapping needs fixed vertices".into()));
    }
    let referenced = mesh.referenced();
    let candidates = par::map_indexed(mesh.vertex_count(), |i| {
        if mesh.fixed[i] || !referenced[i] {
            return None;
        }
        let (target, dist) = index.nearest(&mesh.positions[i])?;
        (dist < cfg.snapping_tolerance && !referenced[target]).then_some(target)
    });

    let mut claimed = vec![false; mesh.vertex_count()];
    let mut snapped = Vec::new();
    for (foil, target) in candidates.into_iter().enumerate() {
        if let Some(t) = target {
            if !claimed[t] {
                claimed[t] = true;
                snapped.push((foil, t));
            }
        }
    }

    if !snapped.is_empty() {
        let mut redirect: Vec<usize> = (0..mesh.vertex_count()).collect();
        for &(foil, target) in &snapped {
            mesh.positions[foil] = mesh.positions[target];
            mesh.fixed[foil] = true;
            redirect[foil] = target;
        }
        for f in &mut mesh.faces {
            for v in f.iter_mut() {
                *v = redirect[*v];
            }
        }
        if cfg.relaxation_rounds > 0 {
            let adj = Adjacency::build(mesh)?;
            let mut ring = vec![false; mesh.vertex_count()];
            for &(_, target) in &snapped {
                for &j in &adj.neighbors[target] {
                    ring[j] = true;
                }
            }
            mesh.positions = smooth_positions(
                &mesh.positions,
                &adj,
                &mesh.fixed,
                Some(&ring),
                cfg.relaxation_lambda,
                cfg.relaxation_rounds,
            );
        }
    }

    let referenced = mesh.referenced();
    let mut unsatisfied: Vec<usize> = index.ids().filter(|&t| !referenced[t]).collect();
    unsatisfied.sort_unstable();
    Ok(SnapReport {
        snapped_this_pass: snapped,
        total_snapped: index.len() - unsatisfied.len(),
        unsatisfied_fixed: unsatisfied,
    })
}

/// Distance from a fixed vertex beyond which its influence is negligible:
/// `min(99 d / strength, snapping_tolerance)`.
pub fn radius_of_effectiveness(params: &MaterialParams, d: f64, cfg: &SnapConfig) -> Result<f64> {
    if !(d > 0.0) {
        return Err(FoilError::InvalidParameter(format!(
            "nearest-neighbor distance must be > 0, got {d}"
        )));
    }
    let decay = if params.distance_factor_strength > 0.0 {
        (1.0 / NEGLIGIBLE_STIFFNESS - 1.0) * d / params.distance_factor_strength
    } else {
        f64::INFINITY
    };
    Ok(decay.min(cfg.snapping_tolerance))
}

/// Approximate number of neighbors inside the influence radius:
/// `min(99 / strength, snapping_tolerance / d)`.
pub fn affected_neighbors(params: &MaterialParams, d: f64, cfg: &SnapConfig) -> Result<f64> {
    if !(d > 0.0) {
        return Err(FoilError::InvalidParameter(format!(
            "nearest-neighbor distance must be > 0, got {d}"
        )));
    }
    let decay = if params.distance_factor_strength > 0.0 {
        (1.0 / NEGLIGIBLE_STIFFNESS - 1.0) / params.distance_factor_strength
    } else {
        f64::INFINITY
    };
    Ok(decay.min(cfg.snapping_tolerance / d))
}

/// Positions of the constraint points, for bitwise checks.
pub fn constraint_positions(mesh: &TriMesh, index: &SpatialIndex) -> Vec<(usize, Vec3)> {
    index.ids().map(|i| (i, mesh.positions[i])).collect()
}
