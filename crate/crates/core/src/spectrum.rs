//! JONSWAP wave spectrum and its directional extension.
//!
//! Angles are radians measured from the mean wind direction. Frequencies are
//! angular (rad/s).

use crate::error::{check, Result};
use crate::math::{cos, exp, powf, FRAC_PI_2, PI};

/// Environmental inputs of the JONSWAP spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumParams {
    /// Wind speed at 10 m altitude, m/s.
    pub wind_speed_u10: f64,
    /// Fetch, m.
    pub fetch_xf: f64,
    /// Gravitational acceleration, m/s².
    pub gravity_g: f64,
    /// Peak-enhancement factor.
    pub gamma: f64,
    /// Spectral width below the peak (ω ≤ ω_p).
    pub sigma_low: f64,
    /// Spectral width above the peak (ω > ω_p).
    pub sigma_high: f64,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        SpectrumParams {
            wind_speed_u10: 12.0,
            fetch_xf: 2.0e4,
            gravity_g: 9.81,
            gamma: 3.3,
            sigma_low: 0.07,
            sigma_high: 0.09,
        }
    }
}

impl SpectrumParams {
    pub fn validate(&self) -> Result<()> {
        check(self.wind_speed_u10, self.wind_speed_u10 > 0.0, "wind_speed_u10")?;
        check(self.fetch_xf, self.fetch_xf > 0.0, "fetch_xf")?;
        check(self.gravity_g, self.gravity_g > 0.0, "gravity_g")?;
        check(self.gamma, self.gamma >= 1.0, "gamma")?;
        check(self.sigma_low, self.sigma_low > 0.0, "sigma_low")?;
        check(self.sigma_high, self.sigma_high > 0.0, "sigma_high")?;
        Ok(())
    }
}

pub fn alpha_coefficient(params: &SpectrumParams) -> Result<f64> {
    params.validate()?;
    Ok(alpha_unchecked(params))
}

pub fn peak_frequency(params: &SpectrumParams) -> Result<f64> {
    params.validate()?;
    Ok(peak_unchecked(params))
}

fn alpha_unchecked(p: &SpectrumParams) -> f64 {
    let ratio = p.wind_speed_u10 * p.wind_speed_u10 / (p.gravity_g * p.fetch_xf);
    0.076 * powf(ratio, 0.22)
}

fn peak_unchecked(p: &SpectrumParams) -> f64 {
    let ratio = p.gravity_g * p.gravity_g / (p.fetch_xf * p.wind_speed_u10);
    22.0 * powf(ratio, 1.0 / 3.0)
}

/// Validated spectrum with the derived coefficients cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jonswap {
    params: SpectrumParams,
    alpha: f64,
    peak: f64,
}

impl Jonswap {
    pub fn new(params: SpectrumParams) -> Result<Self> {
        params.validate()?;
        Ok(Jonswap { params, alpha: alpha_unchecked(&params), peak: peak_unchecked(&params) })
    }

    pub fn params(&self) -> &SpectrumParams {
        &self.params
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn peak_frequency(&self) -> f64 {
        self.peak
    }

    /// Frequency spectrum S(ω), m²·s/rad.
    pub fn density(&self, omega: f64) -> Result<f64> {
        check(omega, omega > 0.0, "omega")?;
        let p = &self.params;
        let wp = self.peak;
        let sigma = if omega <= wp { p.sigma_low } else { p.sigma_high };
        let base = self.alpha * p.gravity_g * p.gravity_g / powf(omega, 5.0);
        let r = wp / omega;
        let pm = exp(-1.25 * r * r * r * r);
        let d = omega - wp;
        let peak_exp = exp(-d * d / (2.0 * sigma * sigma * wp * wp));
        Ok(base * pm * powf(p.gamma, peak_exp))
    }

    /// Directional spreading G(ω, θ), zero outside |θ| ≤ π/2.
    pub fn spreading(&self, omega: f64, theta: f64) -> Result<f64> {
        check(omega, omega > 0.0, "omega")?;
        check(theta, theta.is_finite(), "theta")?;
        if theta.abs() > FRAC_PI_2 {
            return Ok(0.0);
        }
        let r = omega / self.peak;
        let e = exp(-0.5 * r * r * r * r);
        let p = 0.5 + 0.82 * e;
        let q = 0.32 * e;
        Ok(((1.0 + p * cos(2.0 * theta) + q * cos(4.0 * theta)) / PI).max(0.0))
    }

    /// Directional spectrum S(ω)·G(ω, θ), m²·s/rad².
    pub fn directional_density(&self, omega: f64, theta: f64) -> Result<f64> {
        Ok(self.density(omega)? * self.spreading(omega, theta)?)
    }
}

pub fn jonswap_2d(omega: f64, params: &SpectrumParams) -> Result<f64> {
    Jonswap::new(*params)?.density(omega)
}

pub fn directional_spreading(omega: f64, theta: f64, params: &SpectrumParams) -> Result<f64> {
    Jonswap::new(*params)?.spreading(omega, theta)
}

pub fn jonswap_3d(omega: f64, theta: f64, params: &SpectrumParams) -> Result<f64> {
    Jonswap::new(*params)?.directional_density(omega, theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> SpectrumParams {
        SpectrumParams::default()
    }

    #[test]
    fn alpha_for_fig2_sea_state() {
        let a = alpha_coefficient(&fig2()).unwrap();
        assert!((a - 0.015_53).abs() < 1e-5, "{a}");
    }

    #[test]
    fn alpha_at_unit_ratio_is_exact() {
        let p = SpectrumParams { wind_speed_u10: 4.0, fetch_xf: 16.0, gravity_g: 1.0, ..fig2() };
        assert_eq!(alpha_coefficient(&p).unwrap(), 0.076);
    }

    #[test]
    fn alpha_scales_with_wind_power_law() {
        let p = fig2();
        let q = SpectrumParams { wind_speed_u10: 2.0 * p.wind_speed_u10, ..p };
        let ratio = alpha_coefficient(&q).unwrap() / alpha_coefficient(&p).unwrap();
        assert!((ratio - powf(4.0, 0.22)).abs() < 1e-13);
    }

    #[test]
    fn peak_frequency_values() {
        let wp = peak_frequency(&fig2()).unwrap();
        assert!((wp - 1.622).abs() < 5e-4, "{wp}");

        let p = SpectrumParams { wind_speed_u10: 2.0, fetch_xf: 8.0, gravity_g: 4.0, ..fig2() };
        assert_eq!(peak_frequency(&p).unwrap(), 22.0);

        let q = SpectrumParams { fetch_xf: 4.0 * fig2().fetch_xf, ..fig2() };
        let ratio = peak_frequency(&fig2()).unwrap() / peak_frequency(&q).unwrap();
        assert!((ratio - powf(4.0, 1.0 / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn density_at_peak_collapses_gamma_exponent() {
        let j = Jonswap::new(fig2()).unwrap();
        let wp = j.peak_frequency();
        let g = 9.81;
        let want = j.alpha() * g * g / powf(wp, 5.0) * exp(-1.25) * 3.3;
        let got = j.density(wp).unwrap();
        assert!((got - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn gamma_one_is_pierson_moskowitz_shape() {
        let p = SpectrumParams { gamma: 1.0, ..fig2() };
        let j = Jonswap::new(p).unwrap();
        for w in [0.5, 1.0, 1.7, 3.0] {
            let r = j.peak_frequency() / w;
            let want = j.alpha() * 9.81 * 9.81 / powf(w, 5.0) * exp(-1.25 * r * r * r * r);
            assert!((j.density(w).unwrap() - want).abs() <= 1e-14 * want);
        }
    }

    #[test]
    fn spreading_examples() {
        let j = Jonswap::new(fig2()).unwrap();
        let wp = j.peak_frequency();
        let e = exp(-0.5);
        let want = (1.0 + 0.5 + 0.82 * e + 0.32 * e) / PI;
        assert!((j.spreading(wp, 0.0).unwrap() - want).abs() < 1e-15);

        let far = j.spreading(1e3 * wp, 0.3).unwrap();
        assert!((far - (1.0 + 0.5 * cos(0.6)) / PI).abs() < 1e-12);

        for th in [0.1, 0.7, 1.2, 1.5] {
            assert_eq!(j.spreading(wp, th).unwrap(), j.spreading(wp, -th).unwrap());
        }
        assert_eq!(j.spreading(wp, 1.6).unwrap(), 0.0);
        assert_eq!(j.directional_density(wp, -2.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(jonswap_2d(0.0, &fig2()).is_err());
        assert!(jonswap_2d(-1.0, &fig2()).is_err());
        assert!(directional_spreading(f64::NAN, 0.0, &fig2()).is_err());
        let bad = SpectrumParams { gamma: 0.5, ..fig2() };
        assert!(alpha_coefficient(&bad).is_err());
        let bad = SpectrumParams { fetch_xf: 0.0, ..fig2() };
        assert!(peak_frequency(&bad).is_err());
    }
}
