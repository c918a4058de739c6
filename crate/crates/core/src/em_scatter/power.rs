use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::em_scatter::current::{facet_currents, green, to_complex, CVec3};
use crate::em_scatter::radar::{AntennaArray, RadarConfig};
use crate::em_scatter::spatial::SpatialGrid;
use crate::error::{Error, Result};
use crate::geometry::SurfaceMesh;
use crate::Vec3;

/// Default kernel radius in wavelengths.
pub const DEFAULT_A0_WAVELENGTHS: f64 = 5.0;

/// Raised-cosine eye kernel: 1 at zero distance, 0 at and beyond `a0`.
pub fn eye_weight(distance: f64, a0: f64) -> f64 {
    if distance >= a0 {
        0.0
    } else {
        0.5 * ((PI * distance / a0).cos() + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    RaisedCosine {
        a0: f64,
    },
    /// Unit weight everywhere, so the kernel sum is the full surface integral.
    Uniform,
}

impl Kernel {
    pub fn weight(&self, distance: f64) -> f64 {
        match *self {
            Kernel::RaisedCosine { a0 } => eye_weight(distance, a0),
            Kernel::Uniform => 1.0,
        }
    }
}

/// Per-facet received-field contributions at the array centroid.
///
/// Each entry is −jωμ D_R G(p̄,ρ) K(ρ) ΔS projected on ẑ, using the far-field
/// dyad (Ī − R̂R̂) and the facet centroid as the single quadrature point.
#[derive(Debug, Clone)]
pub struct FacetField {
    pub centroids: Vec<Vec3>,
    pub contributions: Vec<Complex64>,
}

impl FacetField {
    pub fn from_currents(
        mesh: &SurfaceMesh,
        currents: &[CVec3],
        array: &AntennaArray,
        cfg: &RadarConfig,
    ) -> Result<Self> {
        if currents.len() != mesh.facet_count() {
            return Err(Error::Validation(format!(
                "{} facet currents for {} facets",
                currents.len(),
                mesh.facet_count()
            )));
        }
        let origin = array.centroid();
        let k = cfg.wavenumber();
        let scale = Complex64::new(0.0, -cfg.angular_frequency() * cfg.permeability);
        let centroids = mesh.facet_centroids();
        let contributions = centroids
            .iter()
            .zip(currents)
            .zip(&mesh.facet_areas)
            .map(|((rho, kv), &area)| {
                let d = origin - rho;
                let r = d.norm();
                if r < cfg.wavelength() {
                    return Err(Error::Singularity("facet within one wavelength of the array".into()));
                }
                let r_hat = d / r;
                let rk = kv.x * r_hat.x + kv.y * r_hat.y + kv.z * r_hat.z;
                let projected = kv.z - rk * r_hat.z;
                Ok(scale * green(k, r) * array.rx_gain(rho) * projected * area)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            centroids,
            contributions,
        })
    }

    pub fn total(&self) -> Complex64 {
        self.contributions.iter().sum()
    }
}

/// Kernel-weighted scattering power P^S on mesh vertices.
#[derive(Debug, Clone)]
pub struct ScatterPowerMap {
    pub vertices: Vec<Vec3>,
    pub power: Vec<f64>,
    pub a0: f64,
    pub field: FacetField,
    grid: SpatialGrid,
}

impl ScatterPowerMap {
    /// Wraps externally computed vertex powers (no facet field attached).
    pub fn from_values(vertices: Vec<Vec3>, power: Vec<f64>, a0: f64) -> Result<Self> {
        if vertices.len() != power.len() {
            return Err(Error::Validation("one power value per vertex required".into()));
        }
        if power.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Validation("power values must be non-negative".into()));
        }
        let field = FacetField {
            centroids: Vec::new(),
            contributions: Vec::new(),
        };
        let grid = SpatialGrid::new(&field.centroids, a0.max(f64::MIN_POSITIVE));
        Ok(Self {
            vertices,
            power,
            a0,
            field,
            grid,
        })
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    pub fn max_power(&self) -> f64 {
        self.power.iter().cloned().fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> Option<usize> {
        let (i, p) = self.power.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
        (*p > 0.0).then_some(i)
    }

    /// Kernel-weighted power at an arbitrary point (no shadow test applied).
    pub fn power_at(&self, point: &Vec3, kernel: Kernel) -> f64 {
        kernel_sum(&self.field, &self.grid, point, kernel).norm_sqr()
    }

    /// CSV with columns `vertex,x,y,z,ps_db` (dB relative to the map maximum,
    /// floored at −200 dB so shadowed vertices stay finite).
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["vertex", "x", "y", "z", "ps_db"])?;
        let max = self.max_power();
        for (i, (p, v)) in self.power.iter().zip(&self.vertices).enumerate() {
            let db = if max > 0.0 && *p > 0.0 {
                (10.0 * (p / max).log10()).max(-200.0)
            } else {
                -200.0
            };
            w.write_record([
                i.to_string(),
                format!("{:.6}", v.x),
                format!("{:.6}", v.y),
                format!("{:.6}", v.z),
                format!("{db:.3}"),
            ])?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }
}

fn kernel_sum(field: &FacetField, grid: &SpatialGrid, point: &Vec3, kernel: Kernel) -> Complex64 {
    match kernel {
        Kernel::Uniform => field.total(),
        Kernel::RaisedCosine { a0 } => {
            let mut acc = Complex64::new(0.0, 0.0);
            grid.for_each_within(&field.centroids, point, a0, |f, d| {
                acc += field.contributions[f] * eye_weight(d, a0);
            });
            acc
        }
    }
}

/// Computes PO currents on `mesh` and the resulting power map.
pub fn scatter_power_map(
    mesh: &SurfaceMesh,
    array: &AntennaArray,
    cfg: &RadarConfig,
    a0: f64,
) -> Result<ScatterPowerMap> {
    let currents = facet_currents(mesh, array, cfg)?;
    scatter_power_map_from_currents(mesh, &currents, array, cfg, a0)
}

/// Power map from precomputed per-facet currents.
pub fn scatter_power_map_from_currents(
    mesh: &SurfaceMesh,
    currents: &[CVec3],
    array: &AntennaArray,
    cfg: &RadarConfig,
    a0: f64,
) -> Result<ScatterPowerMap> {
    if !(a0 > 0.0 && a0.is_finite()) {
        return Err(Error::Validation(format!(
            "kernel radius a0 must be positive, got {a0}"
        )));
    }
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh("power map needs at least one facet".into()));
    }
    let edge = mesh.mean_edge_length();
    if a0 < edge {
        log::warn!(
            "kernel radius {:.2} mm is below the mean edge length {:.2} mm; kernel under-resolved",
            a0 * 1e3,
            edge * 1e3
        );
    }
    let field = FacetField::from_currents(mesh, currents, array, cfg)?;
    let grid = SpatialGrid::new(&field.centroids, a0);
    let origin = array.centroid();
    let kernel = Kernel::RaisedCosine { a0 };
    let power = mesh
        .vertices
        .par_iter()
        .zip(&mesh.vertex_normals)
        .zip(&mesh.vertex_valid)
        .map(|((v, n), &valid)| {
            if !valid || n.dot(&(v - origin)) >= 0.0 {
                0.0
            } else {
                kernel_sum(&field, &grid, v, kernel).norm_sqr()
            }
        })
        .collect();
    Ok(ScatterPowerMap {
        vertices: mesh.vertices.clone(),
        power,
        a0,
        field,
        grid,
    })
}

/// Received ẑ field of the whole surface, evaluating the far-field dyad as an
/// explicit 3×3 matrix per facet.
pub fn total_field(
    mesh: &SurfaceMesh,
    currents: &[CVec3],
    array: &AntennaArray,
    cfg: &RadarConfig,
) -> Result<Complex64> {
    if currents.len() != mesh.facet_count() {
        return Err(Error::Validation("one current per facet required".into()));
    }
    let origin = array.centroid();
    let k = cfg.wavenumber();
    let mut e = CVec3::zeros();
    for f in 0..mesh.facet_count() {
        let rho = mesh.facet_centroid(f);
        let d = rho - origin;
        let r = d.norm();
        if r < cfg.wavelength() {
            return Err(Error::Singularity("facet within one wavelength of the array".into()));
        }
        let r_hat = d / r;
        let dyad = nalgebra::Matrix3::identity() - r_hat * r_hat.transpose();
        let g = green(k, r) * array.rx_gain(&rho) * mesh.facet_areas[f];
        e += dyad.map(|x| Complex64::new(x, 0.0)) * currents[f] * g;
    }
    let scale = Complex64::new(0.0, -cfg.angular_frequency() * cfg.permeability);
    Ok(scale * (to_complex(&Vec3::z()).dot(&e)))
}
