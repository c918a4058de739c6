use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

/// Rigid transform from depth-camera coordinates to radar coordinates.
///
/// Camera frame: x right, y down, z along the optical axis.
/// Radar frame: origin at the array centroid, x boresight, y left, z up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExtrinsicRepr", into = "ExtrinsicRepr")]
pub struct ExtrinsicTransform {
    rotation: Matrix3<f64>,
    translation: Vec3,
}

#[derive(Serialize, Deserialize)]
struct ExtrinsicRepr {
    /// Row-major rotation.
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl TryFrom<ExtrinsicRepr> for ExtrinsicTransform {
    type Error = Error;

    fn try_from(r: ExtrinsicRepr) -> Result<Self> {
        let m = r.rotation;
        let rotation = Matrix3::new(
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        );
        ExtrinsicTransform::new(rotation, Vec3::from(r.translation))
    }
}

impl From<ExtrinsicTransform> for ExtrinsicRepr {
    fn from(e: ExtrinsicTransform) -> Self {
        let r = e.rotation;
        ExtrinsicRepr {
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            translation: [e.translation.x, e.translation.y, e.translation.z],
        }
    }
}

impl ExtrinsicTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let gram = rotation.transpose() * rotation;
        let ortho_err = (gram - Matrix3::identity()).abs().max();
        if !ortho_err.is_finite() || ortho_err > 1e-9 {
            return Err(Error::Validation(format!(
                "extrinsic rotation is not orthonormal (|RᵀR − I| = {ortho_err:.3e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "extrinsic rotation must have det = +1, got {det}"
            )));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation("extrinsic translation not finite".into()));
        }
        Ok(Self { rotation, translation })
    }

    /// Camera co-located with the array centroid and looking along boresight.
    pub fn colocated() -> Self {
        Self::colocated_at(Vec3::zeros())
    }

    /// Boresight-aligned camera whose optical center sits at `origin` (radar frame).
    pub fn colocated_at(origin: Vec3) -> Self {
        let rotation = Matrix3::new(0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0);
        Self {
            rotation,
            translation: origin,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> Vec3 {
        self.translation
    }

    /// Camera optical center in radar coordinates.
    pub fn camera_origin(&self) -> Vec3 {
        self.translation
    }

    pub fn apply(&self, camera_point: &Vec3) -> Vec3 {
        self.rotation * camera_point + self.translation
    }

    pub fn apply_direction(&self, camera_dir: &Vec3) -> Vec3 {
        self.rotation * camera_dir
    }

    /// Radar-frame point to camera frame.
    pub fn inverse_apply(&self, radar_point: &Vec3) -> Vec3 {
        self.rotation.transpose() * (radar_point - self.translation)
    }
}

impl Default for ExtrinsicTransform {
    fn default() -> Self {
        Self::colocated()
    }
}
