//! Small geometric primitives shared by the rig and navigation layers.

use nalgebra::{UnitQuaternion, Vector3};

/// A capsule: the set of points within `radius` of the segment `p0`–`p1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Capsule {
    pub p0: Vector3<f64>,
    pub p1: Vector3<f64>,
    pub radius: f64,
}

impl Capsule {
    pub fn new(p0: Vector3<f64>, p1: Vector3<f64>, radius: f64) -> Self {
        Self { p0, p1, radius }
    }

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.p0.x, self.p0.y, self.p0.z, self.p1.x, self.p1.y, self.p1.z, self.radius,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            p0: Vector3::new(v[0], v[1], v[2]),
            p1: Vector3::new(v[3], v[4], v[5]),
            radius: v[6],
        }
    }

    /// Signed clearance between two capsules: axis distance minus both radii.
    pub fn clearance(&self, other: &Capsule) -> f64 {
        segment_distance(&self.p0, &self.p1, &other.p0, &other.p1) - (self.radius + other.radius)
    }

    pub fn translated(&self, offset: &Vector3<f64>) -> Self {
        Self {
            p0: self.p0 + offset,
            p1: self.p1 + offset,
            radius: self.radius,
        }
    }
}

/// Closest points between segments `p1q1` and `p2q2`.
///
/// Returns the segment parameters `(s, t)` of the closest pair.
pub fn closest_segment_params(
    p1: &Vector3<f64>,
    q1: &Vector3<f64>,
    p2: &Vector3<f64>,
    q2: &Vector3<f64>,
) -> (f64, f64) {
    const EPS: f64 = 1e-12;
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);

    if a <= EPS && e <= EPS {
        return (0.0, 0.0);
    }
    if a <= EPS {
        return (0.0, (f / e).clamp(0.0, 1.0));
    }
    let c = d1.dot(&r);
    if e <= EPS {
        return ((-c / a).clamp(0.0, 1.0), 0.0);
    }
    let b = d1.dot(&d2);
    let denom = a * e - b * b;
    let mut s = if denom > EPS {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    (s, t)
}

/// Euclidean distance between two segments.
pub fn segment_distance(
    p1: &Vector3<f64>,
    q1: &Vector3<f64>,
    p2: &Vector3<f64>,
    q2: &Vector3<f64>,
) -> f64 {
    let (s, t) = closest_segment_params(p1, q1, p2, q2);
    let c1 = p1 + (q1 - p1) * s;
    let c2 = p2 + (q2 - p2) * t;
    (c1 - c2).norm()
}

/// Normalized linear interpolation between unit quaternions, taking the
/// shorter arc.
pub fn nlerp(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>, lambda: f64) -> UnitQuaternion<f64> {
    let va = a.as_ref().coords;
    let mut vb = b.as_ref().coords;
    if va.dot(&vb) < 0.0 {
        vb = -vb;
    }
    let v = va * (1.0 - lambda) + vb * lambda;
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(v))
}

/// Quaternion from `(w, x, y, z)` components, renormalized.
pub fn quat_wxyz(q: [f64; 4]) -> UnitQuaternion<f64> {
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]))
}

pub fn quat_to_wxyz(q: &UnitQuaternion<f64>) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_segments() {
        let d = segment_distance(
            &Vector3::new(0.0, 0.0, 0.0),
            &Vector3::new(1.0, 0.0, 0.0),
            &Vector3::new(0.0, 1.0, 0.0),
            &Vector3::new(1.0, 1.0, 0.0),
        );
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_segments_touch() {
        let d = segment_distance(
            &Vector3::new(-1.0, 0.0, 0.0),
            &Vector3::new(1.0, 0.0, 0.0),
            &Vector3::new(0.0, -1.0, 0.0),
            &Vector3::new(0.0, 1.0, 0.0),
        );
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn point_against_segment() {
        let p = Vector3::new(0.5, 2.0, 0.0);
        let d = segment_distance(&p, &p, &Vector3::zeros(), &Vector3::new(1.0, 0.0, 0.0));
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wrap() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }
}
