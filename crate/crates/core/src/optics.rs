//! Refraction at the water–air interface and the channel-gain factors.
//!
//! The link gain is the product of four factors: the laser departure
//! pattern, spreading/absorption along the path, Fresnel transmission through
//! the interface and the photodetector arrival response.

use crate::error::{check, Error, Result};
use crate::math::{asin, cos, exp, sin, sqrt, EulerZxz, Vec3, FRAC_PI_2, PI};

/// Link geometry and optical constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelScenario {
    /// Transmitter (laser diode) position, m. Below the surface.
    pub tx_pos: Vec3,
    /// Receiver (photodiode) position, m. Above the surface.
    pub rx_pos: Vec3,
    /// Refractive index of water (n₁).
    pub n_water: f64,
    /// Refractive index of air (n₂).
    pub n_air: f64,
    /// Laser wavelength, m.
    pub wavelength_lambda: f64,
    /// Water absorption coefficient at the laser wavelength, 1/m.
    pub absorption: f64,
    /// Maximum accessible angle of the laser diode, rad.
    pub omega_d: f64,
    /// Maximum accessible angle of the photodiode, rad.
    pub omega_a: f64,
    /// Receiver frame orientation used by the screen tracer.
    pub rx_orientation: EulerZxz,
}

impl Default for ChannelScenario {
    fn default() -> Self {
        ChannelScenario {
            tx_pos: Vec3::new(0.0, 0.0, -10.0),
            rx_pos: Vec3::new(0.0, 0.0, 10.0),
            n_water: 1.33,
            n_air: 1.0,
            wavelength_lambda: 532e-9,
            absorption: 0.05,
            omega_d: 0.1,
            omega_a: 0.5,
            rx_orientation: EulerZxz::NADIR,
        }
    }
}

impl ChannelScenario {
    pub fn validate(&self) -> Result<()> {
        check(self.n_air, self.n_air >= 1.0, "n_air")?;
        check(self.n_water, self.n_water > self.n_air, "n_water")?;
        check(self.wavelength_lambda, self.wavelength_lambda > 0.0, "wavelength_lambda")?;
        check(self.absorption, self.absorption >= 0.0, "absorption")?;
        check(self.omega_d, self.omega_d > 0.0 && self.omega_d < FRAC_PI_2, "omega_d")?;
        check(self.omega_a, self.omega_a > 0.0 && self.omega_a < FRAC_PI_2, "omega_a")?;
        check(self.tx_pos.z, self.tx_pos.z < 0.0, "tx_pos.z")?;
        check(self.rx_pos.z, self.rx_pos.z > 0.0, "rx_pos.z")?;
        Ok(())
    }

    /// Critical angle for light leaving the water.
    pub fn critical_angle(&self) -> f64 {
        asin(self.n_air / self.n_water)
    }
}

/// Geometry of one optical path through the interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGeometry {
    /// Angle between the path and the transmitter beam axis, rad.
    pub alpha_d: f64,
    /// Angle between the path and the receiver axis, rad.
    pub alpha_a: f64,
    /// Incidence angle on the water side, rad.
    pub theta_1: f64,
    /// Emergence angle on the air side, rad.
    pub theta_2: f64,
    pub d_water: f64,
    pub d_air: f64,
    pub refraction_point: Vec3,
}

/// Outcome of [`refract`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Refraction {
    Transmitted(Vec3),
    TotalInternalReflection,
}

impl Refraction {
    pub fn direction(self) -> Result<Vec3> {
        match self {
            Refraction::Transmitted(d) => Ok(d),
            Refraction::TotalInternalReflection => Err(Error::TotalInternalReflection),
        }
    }
}

const UNIT_TOL: f64 = 1e-6;

/// Vector Snell refraction from index `n1` into index `n2`.
///
/// The normal may point to either side; it is flipped to the travel side.
pub fn refract(incident: Vec3, normal: Vec3, n1: f64, n2: f64) -> Result<Refraction> {
    if !incident.is_unit(UNIT_TOL) || !normal.is_unit(UNIT_TOL) {
        return Err(Error::domain("refract expects unit vectors"));
    }
    check(n1, n1 > 0.0, "n1")?;
    check(n2, n2 > 0.0, "n2")?;
    let mut n = normal;
    let mut cos1 = incident.dot(n);
    if cos1 < 0.0 {
        n = -n;
        cos1 = -cos1;
    }
    let eta = n1 / n2;
    let sin2_sq = eta * eta * (1.0 - cos1 * cos1).max(0.0);
    if sin2_sq > 1.0 {
        return Ok(Refraction::TotalInternalReflection);
    }
    let cos2 = sqrt(1.0 - sin2_sq);
    let t = incident * eta + n * (cos2 - eta * cos1);
    Ok(Refraction::Transmitted(t * (1.0 / t.norm())))
}

/// Unpolarized Fresnel power transmittance from `n1` into `n2`.
///
/// `theta_1` is the incidence angle (its magnitude is used). Returns 0 at and
/// beyond the critical angle and at grazing incidence.
pub fn fresnel_transmittance(theta_1: f64, n1: f64, n2: f64) -> f64 {
    let th = theta_1.abs();
    if th >= FRAC_PI_2 {
        return 0.0;
    }
    let sin2 = n1 * sin(th) / n2;
    if sin2 >= 1.0 {
        return 0.0;
    }
    let c1 = cos(th);
    let c2 = sqrt(1.0 - sin2 * sin2);
    let rs = (n2 * c1 - n1 * c2) / (n2 * c1 + n1 * c2);
    let rp = (n1 * c1 - n2 * c2) / (n1 * c1 + n2 * c2);
    (1.0 - 0.5 * (rs * rs + rp * rp)).clamp(0.0, 1.0)
}

/// Gaussian-beam departure gain of the laser at off-axis angle `alpha_d`.
pub fn departure_gain(alpha_d: f64, scenario: &ChannelScenario) -> Result<f64> {
    check(alpha_d, (0.0..=FRAC_PI_2).contains(&alpha_d), "alpha_d")?;
    let w2 = scenario.omega_d * scenario.omega_d;
    let s = sin(alpha_d);
    let spread = scenario.wavelength_lambda * cos(alpha_d) / (PI * w2);
    Ok(exp(-2.0 * s * s / (w2 * (1.0 + spread * spread))))
}

/// Spreading loss over the whole path times absorption in the water leg.
pub fn path_gain(d_water: f64, d_air: f64, scenario: &ChannelScenario) -> Result<f64> {
    check(d_water, d_water >= 0.0, "d_water")?;
    check(d_air, d_air >= 0.0, "d_air")?;
    let total = d_water + d_air;
    check(total, total > 0.0, "total path length")?;
    Ok(exp(-scenario.absorption * d_water) / (total * total))
}

/// Photodiode arrival gain; zero outside the accessible cone `omega_a`.
pub fn arrival_gain(alpha_a: f64, scenario: &ChannelScenario) -> Result<f64> {
    check(alpha_a, (0.0..=FRAC_PI_2).contains(&alpha_a), "alpha_a")?;
    if alpha_a > scenario.omega_a {
        return Ok(0.0);
    }
    let s = sin(scenario.omega_a);
    Ok(scenario.n_air * scenario.n_air / (s * s) * cos(alpha_a))
}

/// The four factors of the link gain for one geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainFactors {
    pub departure: f64,
    pub path: f64,
    pub refraction: f64,
    pub arrival: f64,
}

impl GainFactors {
    pub fn compute(geom: &PathGeometry, scenario: &ChannelScenario) -> Result<Self> {
        Ok(GainFactors {
            departure: departure_gain(geom.alpha_d, scenario)?,
            path: path_gain(geom.d_water, geom.d_air, scenario)?,
            refraction: fresnel_transmittance(geom.theta_1, scenario.n_water, scenario.n_air),
            arrival: arrival_gain(geom.alpha_a, scenario)?,
        })
    }

    pub fn product(&self) -> f64 {
        self.departure * self.path * self.refraction * self.arrival
    }
}

pub fn channel_gain(geom: &PathGeometry, scenario: &ChannelScenario) -> Result<f64> {
    check(geom.theta_1, (0.0..=FRAC_PI_2).contains(&geom.theta_1), "theta_1")?;
    Ok(GainFactors::compute(geom, scenario)?.product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::atan2;

    fn sc() -> ChannelScenario {
        ChannelScenario::default()
    }

    fn dir_at(theta: f64) -> Vec3 {
        Vec3::new(sin(theta), 0.0, cos(theta))
    }

    #[test]
    fn normal_incidence_passes_straight() {
        match refract(Vec3::UP, Vec3::UP, 1.33, 1.0).unwrap() {
            Refraction::Transmitted(d) => assert!((d - Vec3::UP).norm() < 1e-15),
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn thirty_degrees_water_to_air() {
        let d = refract(dir_at(30f64.to_radians()), Vec3::UP, 1.33, 1.0).unwrap().direction().unwrap();
        let th2 = atan2(d.x, d.z);
        assert!((th2 - asin(0.665)).abs() < 1e-12);
        assert!((th2.to_degrees() - 41.68).abs() < 5e-3);
        // stays in the plane of incidence
        assert_eq!(d.y, 0.0);
    }

    #[test]
    fn sixty_degrees_is_tir() {
        let r = refract(dir_at(60f64.to_radians()), Vec3::UP, 1.33, 1.0).unwrap();
        assert_eq!(r, Refraction::TotalInternalReflection);
        assert_eq!(r.direction(), Err(Error::TotalInternalReflection));
    }

    #[test]
    fn refract_rejects_non_unit() {
        assert!(refract(Vec3::new(0.0, 0.0, 2.0), Vec3::UP, 1.33, 1.0).is_err());
    }

    #[test]
    fn fresnel_examples() {
        let t0 = fresnel_transmittance(0.0, 1.33, 1.0);
        let r = (1.0 - 1.33) / (1.0 + 1.33);
        assert!((t0 - (1.0 - r * r)).abs() < 1e-15);
        assert!((t0 - 0.97994).abs() < 1e-5);

        let crit = sc().critical_angle();
        let near = fresnel_transmittance(crit - 1e-6, 1.33, 1.0);
        assert!(near > 0.0 && near < 0.02, "{near}");
        assert_eq!(fresnel_transmittance(crit + 1e-9, 1.33, 1.0), 0.0);

        for th in [0.0, 0.3, 1.0, 1.5] {
            assert!((fresnel_transmittance(th, 1.2, 1.2) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn departure_examples() {
        let s = sc();
        assert_eq!(departure_gain(0.0, &s).unwrap(), 1.0);
        let edge = departure_gain(FRAC_PI_2, &s).unwrap();
        let want = exp(-2.0 / (s.omega_d * s.omega_d));
        assert!((edge - want).abs() <= 1e-12 * want);
        assert!(departure_gain(-0.1, &s).is_err());
        assert!(departure_gain(1.6, &s).is_err());
    }

    #[test]
    fn path_examples() {
        let s = sc();
        assert!((path_gain(0.0, 4.0, &s).unwrap() - 1.0 / 16.0).abs() < 1e-18);
        let clear = ChannelScenario { absorption: 0.0, ..s };
        assert_eq!(path_gain(3.0, 1.0, &clear).unwrap(), 1.0 / 16.0);
        let g = path_gain(10.0, 10.0, &s).unwrap();
        assert!((g - exp(-0.5) / 400.0).abs() < 1e-18);
        assert!((g - 1.516e-3).abs() < 1e-6);
        assert!(path_gain(0.0, 0.0, &s).is_err());
    }

    #[test]
    fn arrival_examples() {
        let s = ChannelScenario { omega_a: PI / 6.0, ..sc() };
        assert!((arrival_gain(0.0, &s).unwrap() - 4.0).abs() < 1e-12);
        let wide = ChannelScenario { omega_a: FRAC_PI_2 - 1e-12, ..sc() };
        assert!(arrival_gain(FRAC_PI_2 - 1e-12, &wide).unwrap() < 1e-11);
        assert_eq!(arrival_gain(s.omega_a + 1e-9, &s).unwrap(), 0.0);
    }

    #[test]
    fn channel_gain_examples() {
        let s = sc();
        let ideal = PathGeometry {
            alpha_d: 0.0,
            alpha_a: 0.0,
            theta_1: 0.0,
            theta_2: 0.0,
            d_water: 10.0,
            d_air: 10.0,
            refraction_point: Vec3::ZERO,
        };
        let g = channel_gain(&ideal, &s).unwrap();
        let want = path_gain(10.0, 10.0, &s).unwrap() * fresnel_transmittance(0.0, 1.33, 1.0)
            / (sin(0.5) * sin(0.5));
        assert!((g - want).abs() <= 1e-15 * want);

        let tir = PathGeometry { theta_1: 0.9, ..ideal };
        assert_eq!(channel_gain(&tir, &s).unwrap(), 0.0);

        let geom = PathGeometry { alpha_d: 0.05, alpha_a: 0.2, theta_1: 0.3, ..ideal };
        let f = GainFactors::compute(&geom, &s).unwrap();
        let full = channel_gain(&geom, &s).unwrap();
        assert_eq!(full, f.product());
        let reordered = f.arrival * f.refraction * f.path * f.departure;
        assert!((full - reordered).abs() <= 4.0 * f64::EPSILON * full);
    }
}
