//! Real spherical harmonics up to degree 4.
//!
//! Basis functions are the Cartesian polynomial forms without the
//! Condon-Shortley phase, indexed by `h = l*l + l + m`. For band 1 this gives
//! `(Y_1,-1, Y_1,0, Y_1,1) = C1 * (y, z, x)`.

use smallvec::SmallVec;

use super::{GeometryError, Vec3};

pub const MAX_SH_DEGREE: u8 = 4;
pub const MAX_SH_COEFFS: usize = 25;

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
const C1: f64 = 0.488_602_511_902_919_9;
// band 2
const C2_XY: f64 = 1.092_548_430_592_079_2;
const C2_Z: f64 = 0.315_391_565_252_520_05;
const C2_XXYY: f64 = 0.546_274_215_296_039_6;
// band 3
const C3_3: f64 = 0.590_043_589_926_643_5;
const C3_2: f64 = 2.890_611_442_640_554;
const C3_1: f64 = 0.457_045_799_464_465_8;
const C3_0: f64 = 0.373_176_332_590_115_4;
const C3_2B: f64 = 1.445_305_721_320_277;
// band 4
const C4_4: f64 = 2.503_342_941_796_705;
const C4_3: f64 = 1.770_130_769_779_931;
const C4_2: f64 = 0.946_174_695_757_560_1;
const C4_1: f64 = 0.669_046_543_557_289_1;
const C4_0: f64 = 0.105_785_546_915_204_2;
const C4_2B: f64 = 0.473_087_347_878_780_04;
const C4_4B: f64 = 0.625_835_735_449_176_1;

/// Number of basis functions for a degree.
pub const fn sh_count(degree: u8) -> usize {
    (degree as usize + 1) * (degree as usize + 1)
}

/// Evaluated basis for one direction.
#[derive(Clone, Debug, PartialEq)]
pub struct ShBasis {
    pub degree: u8,
    pub values: SmallVec<[f64; MAX_SH_COEFFS]>,
}

/// Evaluates the real SH basis of `degree` at unit direction `dir`.
pub fn sh_basis(dir: &Vec3, degree: u8) -> Result<ShBasis, GeometryError> {
    let norm = dir.norm();
    if !((norm - 1.0).abs() <= 1e-6) {
        return Err(GeometryError::NonUnitDirection(norm));
    }
    if degree > MAX_SH_DEGREE {
        return Err(GeometryError::UnsupportedShDegree(degree));
    }
    let mut out = [0.0; MAX_SH_COEFFS];
    eval_sh_into(dir, degree, &mut out);
    Ok(ShBasis {
        degree,
        values: SmallVec::from_slice(&out[..sh_count(degree)]),
    })
}

/// Writes the first `(degree+1)^2` basis values into `out`. No validation:
/// `dir` is assumed unit length and `degree <= 4`.
#[inline]
pub fn eval_sh_into(dir: &Vec3, degree: u8, out: &mut [f64]) {
    let (x, y, z) = (dir.x, dir.y, dir.z);
    out[0] = SH_C0;
    if degree == 0 {
        return;
    }
    out[1] = C1 * y;
    out[2] = C1 * z;
    out[3] = C1 * x;
    if degree == 1 {
        return;
    }
    let (xx, yy, zz) = (x * x, y * y, z * z);
    out[4] = C2_XY * x * y;
    out[5] = C2_XY * y * z;
    out[6] = C2_Z * (3.0 * zz - 1.0);
    out[7] = C2_XY * x * z;
    out[8] = C2_XXYY * (xx - yy);
    if degree == 2 {
        return;
    }
    out[9] = C3_3 * y * (3.0 * xx - yy);
    out[10] = C3_2 * x * y * z;
    out[11] = C3_1 * y * (5.0 * zz - 1.0);
    out[12] = C3_0 * z * (5.0 * zz - 3.0);
    out[13] = C3_1 * x * (5.0 * zz - 1.0);
    out[14] = C3_2B * z * (xx - yy);
    out[15] = C3_3 * x * (xx - 3.0 * yy);
    if degree == 3 {
        return;
    }
    out[16] = C4_4 * x * y * (xx - yy);
    out[17] = C4_3 * y * z * (3.0 * xx - yy);
    out[18] = C4_2 * x * y * (7.0 * zz - 1.0);
    out[19] = C4_1 * y * z * (7.0 * zz - 3.0);
    out[20] = C4_0 * (35.0 * zz * zz - 30.0 * zz + 3.0);
    out[21] = C4_1 * x * z * (7.0 * zz - 3.0);
    out[22] = C4_2B * (xx - yy) * (7.0 * zz - 1.0);
    out[23] = C4_3 * x * z * (xx - 3.0 * yy);
    out[24] = C4_4B * (xx * (xx - 3.0 * yy) - yy * (3.0 * xx - yy));
}
