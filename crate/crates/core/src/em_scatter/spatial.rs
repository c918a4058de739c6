use std::collections::HashMap;

use crate::Vec3;

/// Uniform hash grid for fixed-radius neighbor queries.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    cell: f64,
    buckets: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl SpatialGrid {
    pub fn new(points: &[Vec3], cell: f64) -> Self {
        assert!(cell > 0.0, "grid cell must be positive");
        let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(key(p, cell)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    /// Calls `f(index, distance)` for every point strictly closer than `radius`.
    pub fn for_each_within<F>(&self, points: &[Vec3], center: &Vec3, radius: f64, mut f: F)
    where
        F: FnMut(usize, f64),
    {
        let span = (radius / self.cell).ceil() as i64;
        let (cx, cy, cz) = key(center, self.cell);
        for ix in cx - span..=cx + span {
            for iy in cy - span..=cy + span {
                for iz in cz - span..=cz + span {
                    if let Some(bucket) = self.buckets.get(&(ix, iy, iz)) {
                        for &i in bucket {
                            let d = (points[i] - center).norm();
                            if d < radius {
                                f(i, d);
                            }
                        }
                    }
                }
            }
        }
    }
}

fn key(p: &Vec3, cell: f64) -> (i64, i64, i64) {
    (
        (p.x / cell).floor() as i64,
        (p.y / cell).floor() as i64,
        (p.z / cell).floor() as i64,
    )
}
