//! Real spherical-harmonic color evaluation up to degree 3, using the basis
//! constants (with Condon-Shortley phase) common to 3DGS exports.

use nalgebra::Vector3;

use super::RenderError;

const C0: f64 = 0.282_094_791_773_878_14;
const C1: f64 = 0.488_602_511_902_919_9;
const C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Basis values `Y_k(dir)` for `k < (degree+1)^2`, written into `out`.
pub fn sh_basis(degree: u8, dir: [f64; 3], out: &mut [f64; 16]) {
    let [x, y, z] = dir;
    out[0] = C0;
    if degree < 1 {
        return;
    }
    out[1] = -C1 * y;
    out[2] = C1 * z;
    out[3] = -C1 * x;
    if degree < 2 {
        return;
    }
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let (xy, yz, xz) = (x * y, y * z, x * z);
    out[4] = C2[0] * xy;
    out[5] = C2[1] * yz;
    out[6] = C2[2] * (2.0 * zz - xx - yy);
    out[7] = C2[3] * xz;
    out[8] = C2[4] * (xx - yy);
    if degree < 3 {
        return;
    }
    out[9] = C3[0] * y * (3.0 * xx - yy);
    out[10] = C3[1] * xy * z;
    out[11] = C3[2] * y * (4.0 * zz - xx - yy);
    out[12] = C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    out[13] = C3[4] * x * (4.0 * zz - xx - yy);
    out[14] = C3[5] * z * (xx - yy);
    out[15] = C3[6] * x * (xx - 3.0 * yy);
}

pub(crate) fn degree_for_count(k: usize) -> Option<u8> {
    match k {
        1 => Some(0),
        4 => Some(1),
        9 => Some(2),
        16 => Some(3),
        _ => None,
    }
}

pub(crate) fn eval_sh_unchecked(coeffs: &[f32], degree: u8, dir: [f64; 3]) -> [f32; 3] {
    let mut basis = [0.0; 16];
    sh_basis(degree, dir, &mut basis);
    let k = (degree as usize + 1).pow(2);
    let mut rgb = [0.5f64; 3];
    for (j, b) in basis.iter().enumerate().take(k) {
        for c in 0..3 {
            rgb[c] += b * f64::from(coeffs[j * 3 + c]);
        }
    }
    rgb.map(|v| v.clamp(0.0, 1.0) as f32)
}

/// View-dependent color `clamp(0.5 + sum_k Y_k(dir) c_k, 0, 1)`.
///
/// `coeffs` holds `K x 3` values with `K` in {1, 4, 9, 16}; `dir` must be a
/// unit vector.
pub fn eval_sh(coeffs: &[f32], dir: &Vector3<f64>) -> Result<[f32; 3], RenderError> {
    if !coeffs.len().is_multiple_of(3) {
        return Err(RenderError::Contract(format!(
            "SH coefficient array length {} is not a multiple of 3",
            coeffs.len()
        )));
    }
    let degree = degree_for_count(coeffs.len() / 3).ok_or_else(|| {
        RenderError::Contract(format!("{} SH coefficients per channel is not a square <= 16", coeffs.len() / 3))
    })?;
    if (dir.norm() - 1.0).abs() > 1e-4 {
        return Err(RenderError::Contract(format!(
            "view direction must be unit length, got norm {}",
            dir.norm()
        )));
    }
    Ok(eval_sh_unchecked(coeffs, degree, [dir.x, dir.y, dir.z]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dc_zero_is_gray() {
        let c = eval_sh(&[0.0; 3], &Vector3::z()).unwrap();
        assert_eq!(c, [0.5, 0.5, 0.5]);
    }

    #[test]
    fn dc_scaling() {
        let c = eval_sh(&[1.0, -1.0, 0.5], &Vector3::x()).unwrap();
        let expect = [0.5 + 0.2820948, 0.5 - 0.2820948, 0.5 + 0.2820948 * 0.5];
        for i in 0..3 {
            assert!((c[i] - expect[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn clamps() {
        let c = eval_sh(&[10.0, -10.0, 0.0], &Vector3::x()).unwrap();
        assert_eq!(c, [1.0, 0.0, 0.5]);
    }

    #[test]
    fn non_unit_direction_rejected() {
        assert!(eval_sh(&[0.0; 3], &Vector3::new(0.0, 0.0, 2.0)).is_err());
        assert!(eval_sh(&[0.0; 6], &Vector3::z()).is_err());
    }
}
