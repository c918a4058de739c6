use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::em_scatter::power::ScatterPowerMap;
use crate::em_scatter::spatial::SpatialGrid;
use crate::Vec3;

/// Default detection threshold relative to the strongest vertex, dB.
pub const DEFAULT_THRESHOLD_DB: f64 = -20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringCenter {
    pub position: Vec3,
    pub power: f64,
    /// √power.
    pub amplitude: f64,
    /// Unit-magnitude reflection phase.
    pub phase_term: Complex64,
    /// Source vertex index in the power map.
    pub vertex: usize,
}

impl ScatteringCenter {
    /// Complex echo amplitude A_n = √P · η.
    pub fn complex_amplitude(&self) -> Complex64 {
        self.phase_term * self.amplitude
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringCenterSet {
    pub centers: Vec<ScatteringCenter>,
    pub threshold_db: f64,
}

impl ScatteringCenterSet {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.centers.iter().map(|c| c.position).collect()
    }

    /// Replaces every phase term with `eta` (normalized to unit magnitude).
    pub fn with_phase(mut self, eta: Complex64) -> Self {
        let eta = eta / eta.norm();
        self.centers.iter_mut().for_each(|c| c.phase_term = eta);
        self
    }

    /// Keeps only centers whose index passes `keep`.
    pub fn retain_indices(&self, keep: &[usize]) -> Self {
        Self {
            centers: keep.iter().map(|&i| self.centers[i].clone()).collect(),
            threshold_db: self.threshold_db,
        }
    }

    /// Centers within `radius` of `point`.
    pub fn select_within(&self, point: &Vec3, radius: f64) -> Self {
        Self {
            centers: self
                .centers
                .iter()
                .filter(|c| (c.position - point).norm() <= radius)
                .cloned()
                .collect(),
            threshold_db: self.threshold_db,
        }
    }
}

/// Phase term used for every center by default: a sign flip, e^{jπ}.
pub fn default_phase_term() -> Complex64 {
    Complex64::new(-1.0, 0.0)
}

/// Strict local maxima of P^S above `threshold_db` relative to the map maximum.
///
/// A vertex qualifies only if its power is strictly greater than that of
/// every other vertex closer than `neighborhood_radius`. Centers are returned
/// strongest first.
pub fn extract_centers(map: &ScatterPowerMap, threshold_db: f64, neighborhood_radius: f64) -> ScatteringCenterSet {
    let max = map.max_power();
    let mut centers = Vec::new();
    if max > 0.0 && neighborhood_radius > 0.0 {
        let floor = max * 10f64.powf(threshold_db / 10.0);
        let grid = SpatialGrid::new(&map.vertices, neighborhood_radius);
        for (i, &p) in map.power.iter().enumerate() {
            if p <= 0.0 || p < floor {
                continue;
            }
            let mut is_max = true;
            grid.for_each_within(&map.vertices, &map.vertices[i], neighborhood_radius, |j, _| {
                if j != i && map.power[j] >= p {
                    is_max = false;
                }
            });
            if is_max {
                centers.push(ScatteringCenter {
                    position: map.vertices[i],
                    power: p,
                    amplitude: p.sqrt(),
                    phase_term: default_phase_term(),
                    vertex: i,
                });
            }
        }
    }
    centers.sort_by(|a, b| b.power.total_cmp(&a.power));
    if centers.is_empty() {
        log::warn!("no scattering center exceeds the {threshold_db} dB threshold");
    }
    ScatteringCenterSet { centers, threshold_db }
}

/// Single-linkage clusters of center positions; each cluster lists center indices.
pub fn cluster_centers(set: &ScatteringCenterSet, link_distance: f64) -> Vec<Vec<usize>> {
    let n = set.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (set.centers[i].position - set.centers[j].position).norm() <= link_distance {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_map(peaks: &[(f64, f64, f64)]) -> ScatterPowerMap {
        let mut verts = Vec::new();
        let mut power = Vec::new();
        for j in 0..81 {
            for i in 0..81 {
                let (y, z) = (-0.2 + 0.005 * i as f64, -0.2 + 0.005 * j as f64);
                verts.push(Vec3::new(1.0, y, z));
                power.push(
                    peaks
                        .iter()
                        .map(|&(py, pz, db)| {
                            10f64.powf(db / 10.0)
                                * (-((y - py).powi(2) + (z - pz).powi(2)) / (2.0 * 0.01f64.powi(2))).exp()
                        })
                        .sum(),
                );
            }
        }
        ScatterPowerMap::from_values(verts, power, 0.02).unwrap()
    }

    #[test]
    fn single_gaussian_gives_one_center() {
        let map = grid_map(&[(0.03, -0.04, 0.0)]);
        let set = extract_centers(&map, -20.0, 0.02);
        assert_eq!(set.len(), 1);
        assert!((set.centers[0].position - Vec3::new(1.0, 0.03, -0.04)).norm() < 1e-9);
        assert!((set.centers[0].amplitude.powi(2) - set.centers[0].power).abs() < 1e-15);
        assert_eq!(set.centers[0].phase_term, Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn weak_peak_below_threshold_is_dropped() {
        let map = grid_map(&[(-0.1, 0.0, 0.0), (0.1, 0.0, -25.0)]);
        assert_eq!(extract_centers(&map, -20.0, 0.02).len(), 1);
        assert_eq!(extract_centers(&map, -30.0, 0.02).len(), 2);
    }

    #[test]
    fn plateau_has_no_strict_maximum() {
        let verts: Vec<Vec3> = (0..5).map(|i| Vec3::new(1.0, 0.001 * i as f64, 0.0)).collect();
        let map = ScatterPowerMap::from_values(verts, vec![1.0; 5], 0.01).unwrap();
        assert!(extract_centers(&map, -20.0, 0.01).is_empty());
    }

    #[test]
    fn clustering_links_nearby_centers() {
        let mk = |y: f64| ScatteringCenter {
            position: Vec3::new(1.0, y, 0.0),
            power: 1.0,
            amplitude: 1.0,
            phase_term: default_phase_term(),
            vertex: 0,
        };
        let set = ScatteringCenterSet {
            centers: vec![mk(0.0), mk(0.02), mk(0.04), mk(0.3), mk(0.31)],
            threshold_db: -20.0,
        };
        let groups = cluster_centers(&set, 0.025);
        assert_eq!(groups, vec![vec![0, 1, 2], vec![3, 4]]);
    }
}
