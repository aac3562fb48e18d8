//! Scalar helpers over `libm` and a minimal 3-vector.

use core::ops::{Add, AddAssign, Mul, Neg, Sub};

pub use core::f64::consts::{FRAC_PI_2, PI, TAU};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn sincos(x: f64) -> (f64, f64) {
    libm::sincos(x)
}
#[inline]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}
#[inline]
pub fn asin(x: f64) -> f64 {
    libm::asin(x)
}
#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x)
}
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}
#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);
    pub const DOWN: Vec3 = Vec3::new(0.0, 0.0, -1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        sqrt(self.dot(self))
    }

    /// Unit vector along `self`; `None` for the zero vector or non-finite input.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    /// Angle in `[0, π]`, computed with `atan2` so it stays accurate near 0 and π.
    pub fn angle_to(self, o: Vec3) -> f64 {
        atan2(self.cross(o).norm(), self.dot(o))
    }

    pub fn is_unit(self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Orientation as the rotation product `R_z(phi1) · R_x(phi2) · R_z(phi3)`.
///
/// Maps vectors from a device-local frame (boresight along local `+z`) to the
/// absolute frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerZxz {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

impl EulerZxz {
    pub const IDENTITY: EulerZxz = EulerZxz::new(0.0, 0.0, 0.0);
    /// Boresight pointing straight down.
    pub const NADIR: EulerZxz = EulerZxz::new(0.0, PI, 0.0);

    pub const fn new(phi1: f64, phi2: f64, phi3: f64) -> Self {
        EulerZxz { phi1, phi2, phi3 }
    }

    /// Orientation whose local `+z` axis maps onto `dir`.
    pub fn facing(dir: Vec3) -> Option<Self> {
        let d = dir.normalized()?;
        let phi2 = acos(d.z.clamp(-1.0, 1.0));
        // R_z(a) R_x(b) e_z = (sin a sin b, -cos a sin b, cos b)
        let phi1 = if sin(phi2).abs() < 1e-15 { 0.0 } else { atan2(d.x, -d.y) };
        Some(EulerZxz::new(phi1, phi2, 0.0))
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        rot_z(self.phi1, rot_x(self.phi2, rot_z(self.phi3, v)))
    }

    pub fn inverse_rotate(&self, v: Vec3) -> Vec3 {
        rot_z(-self.phi3, rot_x(-self.phi2, rot_z(-self.phi1, v)))
    }
}

fn rot_z(a: f64, v: Vec3) -> Vec3 {
    let (s, c) = sincos(a);
    Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

fn rot_x(a: f64, v: Vec3) -> Vec3 {
    let (s, c) = sincos(a);
    Vec3::new(v.x, c * v.y - s * v.z, s * v.y + c * v.z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn facing_maps_boresight() {
        for d in [
            Vec3::new(0.3, -0.2, -0.9),
            Vec3::new(0.0, 0.0, -1.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(-1.0, 0.5, 0.1),
        ] {
            let e = EulerZxz::facing(d).unwrap();
            let got = e.rotate(Vec3::UP);
            let want = d.normalized().unwrap();
            assert!((got - want).norm() < 1e-12, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn angle_between_is_accurate_near_zero() {
        let a = Vec3::new(1.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 1e-9, 0.0);
        assert!((a.angle_to(b) - 1e-9).abs() < 1e-20);
    }
}
