use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use super::{index_list, AssetError};
use crate::geom::sigmoid;

/// Number of SH coefficients per color channel for a given degree.
pub fn sh_coeff_count(degree: u8) -> usize {
    let l = degree as usize + 1;
    l * l
}

/// Structure-of-arrays storage for N gaussians.
///
/// Opacities are stored as logits and scales as natural logs; the renderer
/// applies `sigmoid` and `exp`. SH coefficients are laid out per splat as
/// `K x 3` (coefficient-major, RGB minor). Rotations are `(w, x, y, z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianCloud {
    sh_degree: u8,
    pub positions: Vec<[f32; 3]>,
    pub sh: Vec<f32>,
    pub opacities: Vec<f32>,
    pub log_scales: Vec<[f32; 3]>,
    pub rotations: Vec<[f32; 4]>,
}

impl GaussianCloud {
    pub fn new(sh_degree: u8) -> Self {
        assert!(sh_degree <= 3, "SH degree {sh_degree} out of range");
        Self {
            sh_degree,
            positions: Vec::new(),
            sh: Vec::new(),
            opacities: Vec::new(),
            log_scales: Vec::new(),
            rotations: Vec::new(),
        }
    }

    pub fn with_capacity(sh_degree: u8, n: usize) -> Self {
        let mut c = Self::new(sh_degree);
        c.positions.reserve(n);
        c.sh.reserve(n * sh_coeff_count(sh_degree) * 3);
        c.opacities.reserve(n);
        c.log_scales.reserve(n);
        c.rotations.reserve(n);
        c
    }

    pub fn sh_degree(&self) -> u8 {
        self.sh_degree
    }

    /// Coefficients per channel (`K`).
    pub fn sh_count(&self) -> usize {
        sh_coeff_count(self.sh_degree)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `K x 3` coefficients of splat `i`.
    pub fn sh_of(&self, i: usize) -> &[f32] {
        let stride = self.sh_count() * 3;
        &self.sh[i * stride..(i + 1) * stride]
    }

    /// Appends one splat. `sh` must hold `K x 3` values.
    pub fn push(
        &mut self,
        position: [f32; 3],
        sh: &[f32],
        opacity_logit: f32,
        log_scale: [f32; 3],
        rotation: [f32; 4],
    ) {
        assert_eq!(sh.len(), self.sh_count() * 3, "SH length mismatch");
        self.positions.push(position);
        self.sh.extend_from_slice(sh);
        self.opacities.push(opacity_logit);
        self.log_scales.push(log_scale);
        self.rotations.push(rotation);
    }

    pub fn opacity(&self, i: usize) -> f32 {
        sigmoid(self.opacities[i])
    }

    pub fn rotation(&self, i: usize) -> UnitQuaternion<f64> {
        let [w, x, y, z] = self.rotations[i].map(f64::from);
        UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z))
    }

    /// World-space covariance `R diag(s^2) R^T` from the activated scale.
    pub fn covariance(&self, i: usize) -> Matrix3<f64> {
        let s = self.log_scales[i].map(|v| f64::from(v).exp());
        let r = self.rotation(i).to_rotation_matrix().into_inner();
        let d = Matrix3::from_diagonal(&Vector3::new(s[0] * s[0], s[1] * s[1], s[2] * s[2]));
        r * d * r.transpose()
    }

    /// Checks every field for non-finite values and renormalizes rotations.
    ///
    /// Quaternions already within 1e-6 of unit length are left untouched so
    /// that a save/load round trip stays bit-identical.
    pub fn validate(&mut self) -> Result<(), AssetError> {
        let n = self.len();
        if self.sh.len() != n * self.sh_count() * 3
            || self.opacities.len() != n
            || self.log_scales.len() != n
            || self.rotations.len() != n
        {
            return Err(AssetError::Validation(
                "field arrays do not share the same leading dimension".into(),
            ));
        }
        let stride = self.sh_count() * 3;
        let mut bad = Vec::new();
        let mut degenerate = Vec::new();
        for i in 0..n {
            let finite = self.positions[i].iter().all(|v| v.is_finite())
                && self.sh[i * stride..(i + 1) * stride].iter().all(|v| v.is_finite())
                && self.opacities[i].is_finite()
                && self.log_scales[i].iter().all(|v| v.is_finite())
                && self.rotations[i].iter().all(|v| v.is_finite());
            if !finite {
                bad.push(i);
                continue;
            }
            let q = self.rotations[i];
            let norm = q.iter().map(|v| f64::from(*v).powi(2)).sum::<f64>().sqrt();
            if norm < 1e-8 {
                degenerate.push(i);
            } else if (norm - 1.0).abs() > 1e-6 {
                self.rotations[i] = q.map(|v| (f64::from(v) / norm) as f32);
            }
        }
        if !bad.is_empty() {
            return Err(AssetError::Validation(format!(
                "non-finite values at splat indices {}",
                index_list(&bad)
            )));
        }
        if !degenerate.is_empty() {
            return Err(AssetError::Validation(format!(
                "zero-length rotation quaternion at splat indices {}",
                index_list(&degenerate)
            )));
        }
        Ok(())
    }

    /// Concatenates clouds into one buffer, promoting to the highest SH degree
    /// (missing higher-order coefficients are zero).
    pub fn concat<'a, I>(clouds: I) -> GaussianCloud
    where
        I: IntoIterator<Item = &'a GaussianCloud>,
        I::IntoIter: Clone,
    {
        let iter = clouds.into_iter();
        let degree = iter.clone().map(|c| c.sh_degree).max().unwrap_or(0);
        let total = iter.clone().map(|c| c.len()).sum();
        let mut out = GaussianCloud::with_capacity(degree, total);
        let k_out = sh_coeff_count(degree);
        for c in iter {
            out.positions.extend_from_slice(&c.positions);
            out.opacities.extend_from_slice(&c.opacities);
            out.log_scales.extend_from_slice(&c.log_scales);
            out.rotations.extend_from_slice(&c.rotations);
            if c.sh_degree == degree {
                out.sh.extend_from_slice(&c.sh);
            } else {
                let k_in = c.sh_count();
                for i in 0..c.len() {
                    out.sh.extend_from_slice(c.sh_of(i));
                    out.sh.extend(std::iter::repeat_n(0.0, (k_out - k_in) * 3));
                }
            }
        }
        out
    }

    /// Heap bytes held by the payload arrays.
    pub fn payload_bytes(&self) -> usize {
        self.positions.capacity() * 12
            + self.sh.capacity() * 4
            + self.opacities.capacity() * 4
            + self.log_scales.capacity() * 12
            + self.rotations.capacity() * 16
    }
}
