//! Time-evolving sea surface as a finite sum of directional harmonics.
//!
//! Each component contributes `a·cos(ω t − k (x cos θ + y sin θ) + ε)` with the
//! deep-water wavenumber `k = ω²/g`. Amplitudes come from the directional
//! JONSWAP spectrum on a uniform (ω, θ) grid and phases from a seeded
//! generator, so a `(params, grid, seed)` triple always rebuilds the same sea.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};

use crate::error::{check, Error, Result};
use crate::math::{sincos, sqrt, Vec3, FRAC_PI_2, PI, TAU};
use crate::spectrum::{Jonswap, SpectrumParams};
use crate::SimRng;

/// Uniform frequency/direction discretization used for synthesis.
///
/// Frequencies are `n_omega` bins over `[omega_min, omega_max]` and directions
/// `n_theta` bins over `[-π/2, π/2]` relative to the wind; components sit at
/// bin centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisGrid {
    pub n_omega: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_theta: usize,
    /// Absolute bearing of the mean wind, rad. Rotates every component.
    pub wind_bearing: f64,
    /// Multiplier on `sqrt(S dω dθ)`; 1.0 reproduces the harmonic-sum
    /// amplitude as written, `√2` gives the variance-preserving convention.
    pub amplitude_factor: f64,
}

impl SynthesisGrid {
    /// Default bounds `[0.5 ω_p, 6 ω_p]` for the given sea state.
    pub fn for_spectrum(params: &SpectrumParams, n_omega: usize, n_theta: usize) -> Result<Self> {
        let wp = crate::spectrum::peak_frequency(params)?;
        let grid = SynthesisGrid {
            n_omega,
            omega_min: 0.5 * wp,
            omega_max: 6.0 * wp,
            n_theta,
            wind_bearing: 0.0,
            amplitude_factor: 1.0,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_omega < 2 {
            return Err(Error::config("n_omega must be at least 2"));
        }
        if self.n_theta < 1 {
            return Err(Error::config("n_theta must be at least 1"));
        }
        check(self.omega_min, self.omega_min > 0.0, "omega_min")?;
        check(self.omega_max, self.omega_max > self.omega_min, "omega_max")?;
        check(self.wind_bearing, self.wind_bearing.is_finite(), "wind_bearing")?;
        check(self.amplitude_factor, self.amplitude_factor >= 0.0, "amplitude_factor")?;
        Ok(())
    }

    pub fn d_omega(&self) -> f64 {
        (self.omega_max - self.omega_min) / self.n_omega as f64
    }

    pub fn d_theta(&self) -> f64 {
        PI / self.n_theta as f64
    }

    pub fn omega_node(&self, i: usize) -> f64 {
        self.omega_min + (i as f64 + 0.5) * self.d_omega()
    }

    /// Direction of bin `j` relative to the wind.
    pub fn theta_node(&self, j: usize) -> f64 {
        -FRAC_PI_2 + (j as f64 + 0.5) * self.d_theta()
    }
}

/// One harmonic of the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveComponent {
    /// m
    pub amplitude: f64,
    /// rad/s
    pub omega: f64,
    /// Absolute propagation direction, rad.
    pub theta: f64,
    /// rad, in `[0, 2π)`
    pub phase: f64,
    kx: f64,
    ky: f64,
}

impl WaveComponent {
    pub fn new(amplitude: f64, omega: f64, theta: f64, phase: f64, gravity: f64) -> Self {
        let k = omega * omega / gravity;
        let (s, c) = sincos(theta);
        WaveComponent { amplitude, omega, theta, phase, kx: k * c, ky: k * s }
    }

    pub fn wavenumber(&self) -> f64 {
        sqrt(self.kx * self.kx + self.ky * self.ky)
    }

    #[inline]
    fn argument(&self, x: f64, y: f64, t: f64) -> f64 {
        self.omega * t - (self.kx * x + self.ky * y) + self.phase
    }
}

/// Surface elevation and slopes at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub height: f64,
    pub slope_x: f64,
    pub slope_y: f64,
}

impl SurfaceSample {
    /// Upward unit normal.
    pub fn normal(&self) -> Vec3 {
        let v = Vec3::new(-self.slope_x, -self.slope_y, 1.0);
        v * (1.0 / v.norm())
    }
}

/// Immutable realization of one sea state.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceModel {
    components: Vec<WaveComponent>,
    gravity: f64,
    seed: u64,
    amplitude_sum: f64,
    slope_bound: f64,
    curvature_bound: f64,
}

impl SurfaceModel {
    /// A calm, perfectly flat interface at z = 0.
    pub fn flat(gravity: f64) -> Self {
        Self::from_components(Vec::new(), gravity, 0)
    }

    pub fn from_components(components: Vec<WaveComponent>, gravity: f64, seed: u64) -> Self {
        let amplitude_sum = components.iter().map(|c| c.amplitude.abs()).sum();
        let slope_bound = components.iter().map(|c| c.amplitude.abs() * c.wavenumber()).sum();
        let curvature_bound = components.iter().map(|c| c.amplitude.abs() * c.wavenumber() * c.wavenumber()).sum();
        SurfaceModel { components, gravity, seed, amplitude_sum, slope_bound, curvature_bound }
    }

    pub fn components(&self) -> &[WaveComponent] {
        &self.components
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Σ|a|: hard bound on |height|.
    pub fn amplitude_sum(&self) -> f64 {
        self.amplitude_sum
    }

    /// Σ|a|·k: hard bound on the slope magnitude.
    pub fn slope_bound(&self) -> f64 {
        self.slope_bound
    }

    /// Σ|a|·k²: hard bound on any second directional derivative of the height.
    pub fn curvature_bound(&self) -> f64 {
        self.curvature_bound
    }

    pub fn energy(&self) -> f64 {
        self.components.iter().map(|c| c.amplitude * c.amplitude).sum()
    }

    pub fn height(&self, x: f64, y: f64, t: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.amplitude * crate::math::cos(c.argument(x, y, t)))
            .sum()
    }

    pub fn gradient(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let s = self.sample(x, y, t);
        (s.slope_x, s.slope_y)
    }

    pub fn normal(&self, x: f64, y: f64, t: f64) -> Vec3 {
        self.sample(x, y, t).normal()
    }

    /// Height and both slopes in a single pass over the components.
    pub fn sample(&self, x: f64, y: f64, t: f64) -> SurfaceSample {
        let mut h = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for c in &self.components {
            let (s, co) = sincos(c.argument(x, y, t));
            h += c.amplitude * co;
            let w = c.amplitude * s;
            gx += w * c.kx;
            gy += w * c.ky;
        }
        SurfaceSample { height: h, slope_x: gx, slope_y: gy }
    }

    /// Evaluator for heights on a fixed rectangular point set.
    pub fn grid_evaluator<'a>(&'a self, xs: &[f64], ys: &[f64]) -> HeightGrid<'a> {
        HeightGrid::new(self, xs, ys)
    }
}

/// Heights on a fixed `xs × ys` lattice at arbitrary times.
///
/// The spatial phase factors `e^{-i kx x}` and `e^{-i ky y}` are tabulated once,
/// so each time slice costs one complex multiply-add per component and point.
pub struct HeightGrid<'a> {
    surface: &'a SurfaceModel,
    nx: usize,
    ny: usize,
    // per component: nx (re, im) then ny (re, im)
    phase_x: Vec<f64>,
    phase_y: Vec<f64>,
}

impl<'a> HeightGrid<'a> {
    fn new(surface: &'a SurfaceModel, xs: &[f64], ys: &[f64]) -> Self {
        let nc = surface.components.len();
        let mut phase_x = Vec::with_capacity(nc * xs.len() * 2);
        let mut phase_y = Vec::with_capacity(nc * ys.len() * 2);
        for c in &surface.components {
            for &x in xs {
                let (s, co) = sincos(-c.kx * x);
                phase_x.push(co);
                phase_x.push(s);
            }
            for &y in ys {
                let (s, co) = sincos(-c.ky * y);
                phase_y.push(co);
                phase_y.push(s);
            }
        }
        HeightGrid { surface, nx: xs.len(), ny: ys.len(), phase_x, phase_y }
    }

    /// Fills `out` (row-major, `ys` outer) with heights at time `t`.
    pub fn heights_at(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let (nx, ny) = (self.nx, self.ny);
        if out.len() != nx * ny {
            return Err(Error::ShapeMismatch { expected: nx * ny, got: out.len() });
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for (ci, c) in self.surface.components.iter().enumerate() {
            let (s, co) = sincos(c.omega * t + c.phase);
            let (cr, cim) = (c.amplitude * co, c.amplitude * s);
            let px = &self.phase_x[ci * nx * 2..(ci + 1) * nx * 2];
            let py = &self.phase_y[ci * ny * 2..(ci + 1) * ny * 2];
            for j in 0..ny {
                let (yr, yi) = (py[2 * j], py[2 * j + 1]);
                let ar = cr * yr - cim * yi;
                let ai = cr * yi + cim * yr;
                let row = &mut out[j * nx..(j + 1) * nx];
                for (i, v) in row.iter_mut().enumerate() {
                    *v += ar * px[2 * i] - ai * px[2 * i + 1];
                }
            }
        }
        Ok(())
    }
}

/// Builds the surface for one sea state.
///
/// Amplitude of node (ω_i, θ_j) is `amplitude_factor·sqrt(S(ω_i, θ_j)·dω·dθ)`;
/// phases are uniform on `[0, 2π)`, drawn ω-major from [`SimRng`] seeded with
/// `seed`.
pub fn synthesize(params: &SpectrumParams, grid: &SynthesisGrid, seed: u64) -> Result<SurfaceModel> {
    let spectrum = Jonswap::new(*params)?;
    grid.validate()?;
    let mut rng = SimRng::seed_from_u64(seed);
    let cell = grid.d_omega() * grid.d_theta();
    let mut components = Vec::with_capacity(grid.n_omega * grid.n_theta);
    for i in 0..grid.n_omega {
        let omega = grid.omega_node(i);
        for j in 0..grid.n_theta {
            let rel = grid.theta_node(j);
            let density = spectrum.directional_density(omega, rel)?;
            let amplitude = grid.amplitude_factor * sqrt(density * cell);
            let mut phase = rng.random::<f64>() * TAU;
            if phase >= TAU {
                phase = 0.0;
            }
            components.push(WaveComponent::new(
                amplitude,
                omega,
                rel + grid.wind_bearing,
                phase,
                params.gravity_g,
            ));
        }
    }
    Ok(SurfaceModel::from_components(components, params.gravity_g, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const G: f64 = 9.81;

    fn single() -> SurfaceModel {
        SurfaceModel::from_components(vec![WaveComponent::new(1.0, 1.0, 0.0, 0.0, G)], G, 0)
    }

    #[test]
    fn flat_surface_is_zero_everywhere() {
        let s = SurfaceModel::flat(G);
        assert_eq!(s.height(3.0, -2.0, 7.0), 0.0);
        assert_eq!(s.gradient(1.0, 1.0, 1.0), (0.0, 0.0));
        assert_eq!(s.normal(0.0, 0.0, 0.0), Vec3::UP);
    }

    #[test]
    fn single_component_examples() {
        let s = single();
        assert_eq!(s.height(0.0, 0.0, 0.0), 1.0);
        assert!((s.height(G * PI, 0.0, 0.0) + 1.0).abs() < 1e-12);
        // cos extremum: sin(arg) = 0
        assert_eq!(s.gradient(0.0, 0.0, 0.0), (0.0, 0.0));
        let period = TAU;
        for t in [0.0, 0.3, 5.0] {
            assert!((s.height(1.0, 2.0, t) - s.height(1.0, 2.0, t + period)).abs() < 1e-9);
        }
    }

    #[test]
    fn normal_of_unit_slope() {
        let n = SurfaceSample { height: 0.0, slope_x: 1.0, slope_y: 0.0 }.normal();
        let r = 1.0 / sqrt(2.0);
        assert!((n - Vec3::new(-r, 0.0, r)).norm() < 1e-15);
    }

    #[test]
    fn calm_wind_gives_near_flat_surface() {
        let p = SpectrumParams { wind_speed_u10: 1e-3, ..SpectrumParams::default() };
        let grid = SynthesisGrid::for_spectrum(&p, 16, 8).unwrap();
        let s = synthesize(&p, &grid, 3).unwrap();
        assert!(s.components().iter().all(|c| c.amplitude < 1e-4));
        assert!(s.height(0.0, 0.0, 0.0).abs() < 1e-3);
    }

    #[test]
    fn synthesis_is_deterministic_and_well_formed() {
        let p = SpectrumParams::default();
        let grid = SynthesisGrid::for_spectrum(&p, 12, 6).unwrap();
        let a = synthesize(&p, &grid, 42).unwrap();
        let b = synthesize(&p, &grid, 42).unwrap();
        let c = synthesize(&p, &grid, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.components().len(), 72);
        for w in a.components() {
            assert!(w.amplitude >= 0.0);
            assert!((0.0..TAU).contains(&w.phase));
        }
    }

    #[test]
    fn grid_evaluator_matches_pointwise_height() {
        let p = SpectrumParams::default();
        let grid = SynthesisGrid::for_spectrum(&p, 10, 5).unwrap();
        let s = synthesize(&p, &grid, 9).unwrap();
        let xs = [-3.0, 0.0, 1.5, 40.0];
        let ys = [2.0, -7.5, 100.0];
        let eval = s.grid_evaluator(&xs, &ys);
        let mut out = vec![0.0; 12];
        eval.heights_at(2.5, &mut out).unwrap();
        for (j, &y) in ys.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                assert!((out[j * 4 + i] - s.height(x, y, 2.5)).abs() < 1e-12);
            }
        }
        assert!(eval.heights_at(0.0, &mut out[..3]).is_err());
    }

    #[test]
    fn rejects_bad_grid() {
        let p = SpectrumParams::default();
        let mut g = SynthesisGrid::for_spectrum(&p, 8, 4).unwrap();
        g.n_omega = 1;
        assert!(synthesize(&p, &g, 0).is_err());
        let mut g = SynthesisGrid::for_spectrum(&p, 8, 4).unwrap();
        g.omega_max = g.omega_min;
        assert!(g.validate().is_err());
    }
}
