use super::depth::DepthFrame;
use super::transform::ExtrinsicTransform;
use crate::error::{Error, Result};
use crate::Vec3;

/// Smallest interior angle a kept triangle may have, radians.
pub const MIN_TRIANGLE_ANGLE: f64 = 1e-3;

/// Triangulated single-viewpoint surface in radar coordinates (meters).
///
/// Facet and vertex normals are unit vectors oriented toward `viewpoint`,
/// the optical center that observed the surface.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub vertex_normals: Vec<Vec3>,
    pub facet_normals: Vec<Vec3>,
    pub facet_areas: Vec<f64>,
    /// A vertex is valid when at least one kept triangle uses it.
    pub vertex_valid: Vec<bool>,
    /// Row-major source pixel of each vertex, when built from a depth frame.
    pub pixel_index: Vec<Option<usize>>,
    pub viewpoint: Vec3,
}

impl SurfaceMesh {
    /// Builds a mesh from raw triangles, dropping degenerate ones and
    /// orienting every facet toward `viewpoint`.
    pub fn from_triangles(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, viewpoint: Vec3) -> Result<Self> {
        let n = vertices.len();
        let pixel_index = vec![None; n];
        Self::assemble(vertices, triangles, viewpoint, pixel_index)
    }

    fn assemble(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        viewpoint: Vec3,
        pixel_index: Vec<Option<usize>>,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyMesh("no vertices".into()));
        }
        let mut kept = Vec::with_capacity(triangles.len());
        let mut facet_normals = Vec::with_capacity(triangles.len());
        let mut facet_areas = Vec::with_capacity(triangles.len());
        for tri in triangles {
            if tri.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Validation(format!("triangle {tri:?} out of range")));
            }
            let [a, b, c] = tri.map(|i| vertices[i]);
            if min_angle(&a, &b, &c) <= MIN_TRIANGLE_ANGLE {
                continue;
            }
            let cross = (b - a).cross(&(c - a));
            let area = 0.5 * cross.norm();
            if !(area > 0.0) {
                continue;
            }
            let mut normal = cross / (2.0 * area);
            let centroid = (a + b + c) / 3.0;
            let mut tri = tri;
            if normal.dot(&(viewpoint - centroid)) < 0.0 {
                normal = -normal;
                tri.swap(1, 2);
            }
            kept.push(tri);
            facet_normals.push(normal);
            facet_areas.push(area);
        }
        if kept.is_empty() {
            return Err(Error::EmptyMesh("no non-degenerate triangles".into()));
        }

        let mut accum = vec![Vec3::zeros(); vertices.len()];
        let mut vertex_valid = vec![false; vertices.len()];
        for ((tri, n), area) in kept.iter().zip(&facet_normals).zip(&facet_areas) {
            for &i in tri {
                accum[i] += n * *area;
                vertex_valid[i] = true;
            }
        }
        let vertex_normals = accum
            .iter()
            .zip(&vertices)
            .zip(&vertex_valid)
            .map(|((acc, v), &valid)| {
                let norm = acc.norm();
                if valid && norm > 0.0 {
                    acc / norm
                } else {
                    (viewpoint - v).try_normalize(0.0).unwrap_or_else(Vec3::x)
                }
            })
            .collect();

        Ok(Self {
            vertices,
            triangles: kept,
            vertex_normals,
            facet_normals,
            facet_areas,
            vertex_valid,
            pixel_index,
            viewpoint,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn facet_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn facet_centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangles[f];
        (self.vertices[a] + self.vertices[b] + self.vertices[c]) / 3.0
    }

    pub fn facet_centroids(&self) -> Vec<Vec3> {
        (0..self.facet_count()).map(|f| self.facet_centroid(f)).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.facet_areas.iter().sum()
    }

    /// Flat rectangular grid of `nu`×`nv` vertices spaced `pitch` apart,
    /// centered on `center` and spanned by the unit vectors `axis_u`, `axis_v`.
    pub fn rectangle(
        center: Vec3,
        axis_u: Vec3,
        axis_v: Vec3,
        nu: usize,
        nv: usize,
        pitch: f64,
        viewpoint: Vec3,
    ) -> Result<Self> {
        if nu < 2 || nv < 2 || !(pitch > 0.0) {
            return Err(Error::Validation(
                "rectangle needs at least 2x2 vertices and a positive pitch".into(),
            ));
        }
        let (hu, hv) = ((nu - 1) as f64 / 2.0, (nv - 1) as f64 / 2.0);
        let mut vertices = Vec::with_capacity(nu * nv);
        for j in 0..nv {
            for i in 0..nu {
                vertices.push(center + axis_u * ((i as f64 - hu) * pitch) + axis_v * ((j as f64 - hv) * pitch));
            }
        }
        let mut triangles = Vec::with_capacity(2 * (nu - 1) * (nv - 1));
        for j in 0..nv - 1 {
            for i in 0..nu - 1 {
                let a = j * nu + i;
                triangles.push([a, a + 1, a + nu]);
                triangles.push([a + 1, a + nu + 1, a + nu]);
            }
        }
        Self::from_triangles(vertices, triangles, viewpoint)
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut sum = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                sum += (self.vertices[tri[k]] - self.vertices[tri[(k + 1) % 3]]).norm();
            }
        }
        sum / (3 * self.triangles.len()) as f64
    }
}

fn min_angle(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let angle = |p: &Vec3, q: &Vec3, r: &Vec3| {
        let u = q - p;
        let v = r - p;
        let denom = u.norm() * v.norm();
        if denom == 0.0 {
            0.0
        } else {
            (u.dot(&v) / denom).clamp(-1.0, 1.0).acos()
        }
    };
    angle(a, b, c).min(angle(b, c, a)).min(angle(c, a, b))
}

/// Grid triangulation of the valid pixels of `frame`, in radar coordinates.
///
/// Each 2×2 pixel cell contributes up to two triangles; a triangle whose
/// corner depths spread by more than `discontinuity_mm` is discarded.
pub fn depth_to_mesh(
    frame: &DepthFrame,
    extrinsics: &ExtrinsicTransform,
    discontinuity_mm: f64,
) -> Result<SurfaceMesh> {
    frame.intrinsics.validate()?;
    let (w, h) = (frame.width, frame.height);
    let mut vertex_of = vec![usize::MAX; w * h];
    let mut vertices = Vec::new();
    let mut pixel_index = Vec::new();
    for v in 0..h {
        for u in 0..w {
            if let Some(p) = frame.point(u, v) {
                vertex_of[v * w + u] = vertices.len();
                vertices.push(extrinsics.apply(&p));
                pixel_index.push(Some(v * w + u));
            }
        }
    }
    if vertices.is_empty() {
        return Err(Error::EmptyMesh(format!(
            "all {}x{} pixels invalid at t={}",
            w, h, frame.timestamp
        )));
    }

    let disc = discontinuity_mm as f32;
    let continuous = |px: &[usize]| {
        let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
        for &p in px {
            let d = frame.depth_mm[p];
            lo = lo.min(d);
            hi = hi.max(d);
        }
        hi - lo <= disc
    };
    let mut triangles = Vec::new();
    for v in 0..h.saturating_sub(1) {
        for u in 0..w.saturating_sub(1) {
            let a = v * w + u;
            let b = a + 1;
            let c = a + w;
            let d = c + 1;
            let ok = |p: usize| vertex_of[p] != usize::MAX;
            let candidates: &[[usize; 3]] = match (ok(a), ok(b), ok(c), ok(d)) {
                (true, true, true, true) => &[[a, b, c], [b, d, c]],
                (false, true, true, true) => &[[b, d, c]],
                (true, false, true, true) => &[[a, d, c]],
                (true, true, false, true) => &[[a, b, d]],
                (true, true, true, false) => &[[a, b, c]],
                _ => &[],
            };
            for tri in candidates {
                if continuous(tri) {
                    triangles.push(tri.map(|p| vertex_of[p]));
                }
            }
        }
    }
    SurfaceMesh::assemble(vertices, triangles, extrinsics.camera_origin(), pixel_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Intrinsics;

    fn flat(w: usize, h: usize, mm: f32) -> DepthFrame {
        let intr = Intrinsics {
            fx: 200.0,
            fy: 200.0,
            cx: (w as f64 - 1.0) / 2.0,
            cy: (h as f64 - 1.0) / 2.0,
        };
        DepthFrame::new(w, h, 0.0, vec![mm; w * h], intr).unwrap()
    }

    #[test]
    fn flat_wall_normals_point_at_camera() {
        let mesh = depth_to_mesh(&flat(10, 10, 1000.0), &ExtrinsicTransform::colocated(), 50.0).unwrap();
        assert_eq!(mesh.facet_count(), 2 * 9 * 9);
        for (n, valid) in mesh.vertex_normals.iter().zip(&mesh.vertex_valid) {
            assert!(valid);
            assert!((n - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-9);
            assert!((n.norm() - 1.0).abs() < 1e-6);
        }
        for (v, n) in mesh.vertices.iter().zip(&mesh.vertex_normals) {
            assert!(n.dot(&(mesh.viewpoint - v)) > 0.0);
        }
    }

    #[test]
    fn depth_jump_breaks_connectivity() {
        let mut f = flat(2, 2, 1000.0);
        f.depth_mm[1] = 1200.0;
        f.depth_mm[3] = 1200.0;
        assert!(matches!(
            depth_to_mesh(&f, &ExtrinsicTransform::colocated(), 50.0),
            Err(Error::EmptyMesh(_))
        ));
        // 3x2: left column at 1000 mm, right column at 1200 mm
        let mut f = flat(3, 2, 1000.0);
        f.depth_mm[2] = 1200.0;
        f.depth_mm[5] = 1200.0;
        let mesh = depth_to_mesh(&f, &ExtrinsicTransform::colocated(), 50.0).unwrap();
        assert_eq!(mesh.facet_count(), 2);
        let far = mesh.vertices.iter().position(|p| (p.x - 1.2).abs() < 1e-9).unwrap();
        assert!(mesh.triangles.iter().all(|t| !t.contains(&far)));
    }

    #[test]
    fn all_invalid_is_empty_mesh() {
        assert!(matches!(
            depth_to_mesh(&flat(5, 5, 0.0), &ExtrinsicTransform::colocated(), 50.0),
            Err(Error::EmptyMesh(_))
        ));
    }

    #[test]
    fn invalid_intrinsics_rejected() {
        let mut f = flat(3, 3, 1000.0);
        f.intrinsics.fx = 0.0;
        assert!(depth_to_mesh(&f, &ExtrinsicTransform::colocated(), 50.0).is_err());
    }

    #[test]
    fn degenerate_triangles_dropped() {
        let v = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 0.1, 0.0),
            Vec3::new(1.0, 0.2, 0.0),
            Vec3::new(1.0, 0.0, 0.1),
        ];
        let mesh = SurfaceMesh::from_triangles(v, vec![[0, 1, 2], [0, 1, 3]], Vec3::zeros()).unwrap();
        assert_eq!(mesh.facet_count(), 1);
        assert!(!mesh.vertex_valid[2]);
        assert!((mesh.total_area() - 0.005).abs() < 1e-12);
    }
}
