//! Built-in constraint sets.

use crate::error::{FoilError, Result};
use crate::geometry::Vec3;

pub const DEFAULT_BOX_SIDE: f64 = 2.0;
pub const DEFAULT_BOX_INSET: f64 = 0.85;

/// Which four faces of the box carry a constraint point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoxFaces {
    /// The four side faces: `(+-r, 0, 0)` and `(0, +-r, 0)`.
    #[default]
    Lateral,
    /// Two side faces plus top and bottom: `(+-r, 0, 0)` and `(0, 0, +-r)`.
    TopBottom,
}

impl BoxFaces {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoxFaces::Lateral => "lateral",
            BoxFaces::TopBottom => "top-bottom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lateral" => Some(BoxFaces::Lateral),
            "top-bottom" => Some(BoxFaces::TopBottom),
            _ => None,
        }
    }
}

/// Face centers of an origin-centered cube, pulled toward the center so each
/// lies at `inset_fraction * side / 2`.
pub fn box_scenario(side: f64, inset_fraction: f64, faces: BoxFaces) -> Result<Vec<Vec3>> {
    if !(side > 0.0) || !side.is_finite() {
        return Err(FoilError::InvalidParameter(format!("box side must be > 0, got {side}")));
    }
    if !(inset_fraction > 0.0 && inset_fraction <= 1.0) {
        return Err(FoilError::InvalidParameter(format!(
            "inset fraction must be in (0, 1], got {inset_fraction}"
        )));
    }
    let r = inset_fraction * side / 2.0;
    let (a, b) = match faces {
        BoxFaces::Lateral => (Vec3::new(0.0, r, 0.0), Vec3::new(0.0, -r, 0.0)),
        BoxFaces::TopBottom => (Vec3::new(0.0, 0.0, r), Vec3::new(0.0, 0.0, -r)),
    };
    Ok(vec![Vec3::new(r, 0.0, 0.0), Vec3::new(-r, 0.0, 0.0), a, b])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_centers_without_inset() {
        let pts = box_scenario(2.0, 1.0, BoxFaces::Lateral).unwrap();
        assert_eq!(
            pts,
            vec![
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(-1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, -1.0, 0.0)
            ]
        );
    }

    #[test]
    fn default_inset() {
        let pts = box_scenario(2.0, 0.85, BoxFaces::Lateral).unwrap();
        assert_eq!(pts[0], Vec3::new(0.85, 0.0, 0.0));
        assert_eq!(pts[1], Vec3::new(-0.85, 0.0, 0.0));
        assert_eq!(pts[2], Vec3::new(0.0, 0.85, 0.0));
        assert_eq!(pts[3], Vec3::new(0.0, -0.85, 0.0));
        let tb = box_scenario(2.0, 0.85, BoxFaces::TopBottom).unwrap();
        assert_eq!(tb[2], Vec3::new(0.0, 0.0, 0.85));
        assert!(pts
            .iter()
            .chain(&tb)
            .flat_map(|p| p.iter())
            .all(|c| !(c.is_sign_negative() && *c == 0.0)));
    }

    #[test]
    fn invalid_parameters() {
        assert!(box_scenario(2.0, 0.0, BoxFaces::Lateral).is_err());
        assert!(box_scenario(2.0, 1.1, BoxFaces::Lateral).is_err());
        assert!(box_scenario(0.0, 0.5, BoxFaces::Lateral).is_err());
    }
}
