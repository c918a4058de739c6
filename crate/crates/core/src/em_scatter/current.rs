use num_complex::Complex64;

use crate::em_scatter::radar::{AntennaArray, RadarConfig};
use crate::error::{Error, Result};
use crate::geometry::SurfaceMesh;
use crate::Vec3;

/// Complex 3-vector (phasor field or current).
pub type CVec3 = nalgebra::Vector3<Complex64>;

pub(crate) fn to_complex(v: &Vec3) -> CVec3 {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Scalar free-space Green function e^{−jkR}/(4πR).
pub fn green(k: f64, r: f64) -> Complex64 {
    Complex64::from_polar(1.0 / (4.0 * std::f64::consts::PI * r), -k * r)
}

/// Incident magnetic field at `point`.
///
/// The electric field is a ẑ-polarized spherical wave from the array
/// centroid weighted by the Tx pattern; H = (1/Z) k̂ × E.
pub fn incident_h(point: &Vec3, array: &AntennaArray, cfg: &RadarConfig) -> Result<CVec3> {
    let origin = array.centroid();
    let d = point - origin;
    let r = d.norm();
    if r < cfg.wavelength() {
        return Err(Error::Singularity(format!(
            "surface point {:.4?} lies within one wavelength of the array centroid",
            point.as_slice()
        )));
    }
    let e = green(cfg.wavenumber(), r) * array.tx_gain(point);
    let k_hat = d / r;
    let dir = k_hat.cross(&Vec3::z()) / cfg.impedance();
    Ok(to_complex(&dir) * e)
}

/// PO current 2 n × H^i, or zero where `normal` faces away from the array.
pub fn po_current(point: &Vec3, normal: &Vec3, array: &AntennaArray, cfg: &RadarConfig) -> Result<CVec3> {
    let h = incident_h(point, array, cfg)?;
    if normal.dot(&(point - array.centroid())) >= 0.0 {
        return Ok(CVec3::zeros());
    }
    Ok(to_complex(&(2.0 * normal)).cross(&h))
}

/// Per-vertex PO currents; invalid vertices carry zero current.
pub fn po_surface_current(mesh: &SurfaceMesh, array: &AntennaArray, cfg: &RadarConfig) -> Result<Vec<CVec3>> {
    if mesh.vertices.is_empty() {
        return Err(Error::EmptyMesh("cannot compute currents on an empty mesh".into()));
    }
    mesh.vertices
        .iter()
        .zip(&mesh.vertex_normals)
        .zip(&mesh.vertex_valid)
        .map(|((p, n), &valid)| {
            if valid {
                po_current(p, n, array, cfg)
            } else {
                Ok(CVec3::zeros())
            }
        })
        .collect()
}

/// PO currents evaluated at facet centroids with facet normals.
pub fn facet_currents(mesh: &SurfaceMesh, array: &AntennaArray, cfg: &RadarConfig) -> Result<Vec<CVec3>> {
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh("cannot compute currents on an empty mesh".into()));
    }
    (0..mesh.facet_count())
        .map(|f| po_current(&mesh.facet_centroid(f), &mesh.facet_normals[f], array, cfg))
        .collect()
}
