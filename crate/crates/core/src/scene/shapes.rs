use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::Vec3;

/// Primitive surface in its local frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// Semi-axes along local x (depth), y (width), z (height).
    Ellipsoid { semi_axes: [f64; 3] },
    /// Flat-capped cylinder along local z.
    Cylinder { radius: f64, half_length: f64 },
    /// Thin rectangular slab; the face at local −x is the front.
    Plate { width: f64, height: f64, thickness: f64 },
}

impl Shape {
    pub fn validate(&self) -> Result<(), String> {
        let dims: Vec<f64> = match self {
            Shape::Ellipsoid { semi_axes } => semi_axes.to_vec(),
            Shape::Cylinder { radius, half_length } => vec![*radius, *half_length],
            Shape::Plate {
                width,
                height,
                thickness,
            } => vec![*width, *height, *thickness],
        };
        if dims.iter().all(|d| *d > 0.0 && d.is_finite()) {
            Ok(())
        } else {
            Err(format!("shape dimensions must be positive: {self:?}"))
        }
    }

    /// Radius of a sphere about the local origin enclosing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Shape::Ellipsoid { semi_axes } => semi_axes.iter().cloned().fold(0.0, f64::max),
            Shape::Cylinder { radius, half_length } => radius.hypot(*half_length),
            Shape::Plate {
                width,
                height,
                thickness,
            } => 0.5 * (width * width + height * height + thickness * thickness).sqrt(),
        }
    }

    /// Signed distance (exact for cylinders and plates, first-order accurate
    /// near the surface for ellipsoids).
    pub fn sdf(&self, p: &Vec3) -> f64 {
        match self {
            Shape::Ellipsoid { semi_axes: [a, b, c] } => {
                let k0 = Vec3::new(p.x / a, p.y / b, p.z / c).norm();
                let k1 = Vec3::new(p.x / (a * a), p.y / (b * b), p.z / (c * c)).norm();
                if k1 == 0.0 {
                    -a.min(*b).min(*c)
                } else {
                    k0 * (k0 - 1.0) / k1
                }
            }
            Shape::Cylinder { radius, half_length } => {
                let dr = p.x.hypot(p.y) - radius;
                let dz = p.z.abs() - half_length;
                let outside = dr.max(0.0).hypot(dz.max(0.0));
                outside + dr.max(dz).min(0.0)
            }
            Shape::Plate {
                width,
                height,
                thickness,
            } => {
                let q = Vec3::new(
                    p.x.abs() - 0.5 * thickness,
                    p.y.abs() - 0.5 * width,
                    p.z.abs() - 0.5 * height,
                );
                let outside = q.map(|v| v.max(0.0)).norm();
                outside + q.x.max(q.y).max(q.z).min(0.0)
            }
        }
    }

    /// Outward unit normal near the surface.
    pub fn normal(&self, p: &Vec3) -> Vec3 {
        match self {
            Shape::Ellipsoid { semi_axes: [a, b, c] } => {
                Vec3::new(p.x / (a * a), p.y / (b * b), p.z / (c * c)).normalize()
            }
            _ => {
                let h = 1e-6;
                let g = Vec3::new(
                    self.sdf(&(p + Vec3::x() * h)) - self.sdf(&(p - Vec3::x() * h)),
                    self.sdf(&(p + Vec3::y() * h)) - self.sdf(&(p - Vec3::y() * h)),
                    self.sdf(&(p + Vec3::z() * h)) - self.sdf(&(p - Vec3::z() * h)),
                );
                g.normalize()
            }
        }
    }

    /// Nearest ray parameter `s >= 0` where `o + s·u` enters the shape.
    pub fn intersect(&self, o: &Vec3, u: &Vec3) -> Option<f64> {
        match self {
            Shape::Ellipsoid { semi_axes: [a, b, c] } => {
                let scale = Vec3::new(1.0 / a, 1.0 / b, 1.0 / c);
                let os = o.component_mul(&scale);
                let us = u.component_mul(&scale);
                let qa = us.dot(&us);
                let qb = 2.0 * os.dot(&us);
                let qc = os.dot(&os) - 1.0;
                smallest_root(qa, qb, qc)
            }
            Shape::Cylinder { radius, half_length } => {
                let mut best: Option<f64> = None;
                let mut consider = |s: f64| {
                    if s >= 0.0 && best.is_none_or(|b| s < b) {
                        best = Some(s);
                    }
                };
                let qa = u.x * u.x + u.y * u.y;
                if qa > 1e-15 {
                    let qb = 2.0 * (o.x * u.x + o.y * u.y);
                    let qc = o.x * o.x + o.y * o.y - radius * radius;
                    if let Some(s) = smallest_root(qa, qb, qc) {
                        if (o.z + s * u.z).abs() <= *half_length {
                            consider(s);
                        }
                    }
                }
                if u.z.abs() > 1e-15 {
                    for cap in [-half_length, *half_length] {
                        let s = (cap - o.z) / u.z;
                        let p = o + u * s;
                        if p.x.hypot(p.y) <= *radius {
                            consider(s);
                        }
                    }
                }
                best
            }
            Shape::Plate {
                width,
                height,
                thickness,
            } => {
                let half = Vec3::new(0.5 * thickness, 0.5 * width, 0.5 * height);
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                for i in 0..3 {
                    if u[i].abs() < 1e-15 {
                        if o[i].abs() > half[i] {
                            return None;
                        }
                        continue;
                    }
                    let t1 = (-half[i] - o[i]) / u[i];
                    let t2 = (half[i] - o[i]) / u[i];
                    t_near = t_near.max(t1.min(t2));
                    t_far = t_far.min(t1.max(t2));
                }
                (t_near <= t_far && t_near >= 0.0).then_some(t_near)
            }
        }
    }
}

fn smallest_root(a: f64, b: f64, c: f64) -> Option<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || a == 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let s1 = (-b - sq) / (2.0 * a);
    let s2 = (-b + sq) / (2.0 * a);
    if s1 >= 0.0 {
        Some(s1)
    } else if s2 >= 0.0 && c > 0.0 {
        Some(s2)
    } else {
        None
    }
}

/// Rotation from yaw (about z), pitch (about y) and roll (about x), degrees.
pub fn rotation_from_angles(yaw_deg: f64, pitch_deg: f64, roll_deg: f64) -> Matrix3<f64> {
    let rz = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), yaw_deg.to_radians());
    let ry = nalgebra::Rotation3::from_axis_angle(&Vec3::y_axis(), pitch_deg.to_radians());
    let rx = nalgebra::Rotation3::from_axis_angle(&Vec3::x_axis(), roll_deg.to_radians());
    (rz * ry * rx).into_inner()
}
