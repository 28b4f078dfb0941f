//! Exact orientation predicates.
//!
//! A floating-point evaluation is accepted when its magnitude exceeds a
//! static forward error bound; otherwise the determinant is recomputed
//! exactly on big integers (every finite `f64` is an integer multiple of
//! `2^-1074`).

use std::cmp::Ordering;

use num_bigint::BigInt;

use crate::Vec3;

const EPS: f64 = f64::EPSILON * 0.5;
const O3D_ERRBOUND: f64 = (7.0 + 56.0 * EPS) * EPS;
const O2D_ERRBOUND: f64 = (3.0 + 16.0 * EPS) * EPS;

/// Sign of `det[a-d; b-d; c-d]`: positive when `d` lies below the plane
/// through `a, b, c` (counter-clockwise seen from above).
pub fn orient3d(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> Ordering {
    let adx = a.x - d.x;
    let bdx = b.x - d.x;
    let cdx = c.x - d.x;
    let ady = a.y - d.y;
    let bdy = b.y - d.y;
    let cdy = c.y - d.y;
    let adz = a.z - d.z;
    let bdz = b.z - d.z;
    let cdz = c.z - d.z;

    let bdxcdy = bdx * cdy;
    let cdxbdy = cdx * bdy;
    let cdxady = cdx * ady;
    let adxcdy = adx * cdy;
    let adxbdy = adx * bdy;
    let bdxady = bdx * ady;

    let det = adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy) + cdz * (adxbdy - bdxady);
    let permanent = (bdxcdy.abs() + cdxbdy.abs()) * adz.abs()
        + (cdxady.abs() + adxcdy.abs()) * bdz.abs()
        + (adxbdy.abs() + bdxady.abs()) * cdz.abs();
    let bound = O3D_ERRBOUND * permanent;
    if det.is_finite() && permanent.is_finite() {
        if det > bound {
            return Ordering::Greater;
        }
        if -det > bound {
            return Ordering::Less;
        }
        if permanent == 0.0 {
            return Ordering::Equal;
        }
    }
    orient3d_exact(a, b, c, d)
}

/// Sign of `det[a-c; b-c]` in the plane: positive for a counter-clockwise
/// turn `a -> b -> c`.
pub fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Ordering {
    let detleft = (a[0] - c[0]) * (b[1] - c[1]);
    let detright = (a[1] - c[1]) * (b[0] - c[0]);
    let det = detleft - detright;
    let bound = O2D_ERRBOUND * (detleft.abs() + detright.abs());
    if det.is_finite() && bound.is_finite() {
        if det > bound {
            return Ordering::Greater;
        }
        if -det > bound {
            return Ordering::Less;
        }
        if bound == 0.0 {
            return Ordering::Equal;
        }
    }
    orient2d_exact(a, b, c)
}

/// `x = mantissa * 2^exp` exactly. Non-finite inputs map to zero.
fn decompose(x: f64) -> (i64, i32) {
    if !x.is_finite() || x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (m, e) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1i64 << 52), exp_bits - 1075)
    };
    (sign * m, e)
}

fn to_exact(values: &[f64]) -> Vec<BigInt> {
    let parts: Vec<(i64, i32)> = values.iter().map(|&v| decompose(v)).collect();
    let emin = parts
        .iter()
        .filter(|(m, _)| *m != 0)
        .map(|(_, e)| *e)
        .min()
        .unwrap_or(0);
    parts
        .iter()
        .map(|&(m, e)| BigInt::from(m) << ((e - emin) as usize))
        .collect()
}

fn orient3d_exact(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> Ordering {
    let v = to_exact(&[a.x, a.y, a.z, b.x, b.y, b.z, c.x, c.y, c.z, d.x, d.y, d.z]);
    let (ax, ay, az) = (&v[0] - &v[9], &v[1] - &v[10], &v[2] - &v[11]);
    let (bx, by, bz) = (&v[3] - &v[9], &v[4] - &v[10], &v[5] - &v[11]);
    let (cx, cy, cz) = (&v[6] - &v[9], &v[7] - &v[10], &v[8] - &v[11]);
    let det = &az * (&bx * &cy - &cx * &by) + &bz * (&cx * &ay - &ax * &cy)
        + &cz * (&ax * &by - &bx * &ay);
    det.sign_cmp_zero()
}

fn orient2d_exact(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Ordering {
    let v = to_exact(&[a[0], a[1], b[0], b[1], c[0], c[1]]);
    let det = (&v[0] - &v[4]) * (&v[3] - &v[5]) - (&v[1] - &v[5]) * (&v[2] - &v[4]);
    det.sign_cmp_zero()
}

trait SignCmp {
    fn sign_cmp_zero(&self) -> Ordering;
}

impl SignCmp for BigInt {
    fn sign_cmp_zero(&self) -> Ordering {
        self.cmp(&BigInt::from(0))
    }
}
