//! Optical paths through the moving interface.
//!
//! Two complementary tools live here:
//!
//! - the receiver-screen tracer ([`find_beam_direction`]): a virtual `m × m`
//!   pixel screen in the receiver frame is traced pixel by pixel, the centre is
//!   moved to the intensity centroid and the pixel pitch is shrunk by
//!   `refine_factor` until the centre stops moving;
//! - the link-path solver ([`solve_link_path`]): Newton iteration on the
//!   refraction point so that the refracted ray leaving the transmitter lands
//!   on the receiver.

use alloc::vec::Vec;

use crate::error::{check, Error, Result};
use crate::math::{cos, exp, sin, sqrt, tan, EulerZxz, Vec3, PI};
use crate::optics::{fresnel_transmittance, path_gain, refract, ChannelScenario, PathGeometry, Refraction};
use crate::surface::{SurfaceModel, SurfaceSample};

/// Rotates a receiver-local vector into the absolute frame.
pub fn to_absolute(v_local: Vec3, rx_orientation: &EulerZxz) -> Vec3 {
    rx_orientation.rotate(v_local)
}

/// Point where a ray meets the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    /// Distance travelled along the ray, m.
    pub distance: f64,
    pub point: Vec3,
    pub sample: SurfaceSample,
}

/// First crossing of the ray `origin + s·dir` (s ≥ 0) with the surface at time `t`.
///
/// The march starts where the ray enters the slab `|z| ≤ Σ|a|`. With
/// `f = z − T` along the ray, each step is the larger of `|f|/L` (`L` bounds
/// `|f'|` through the slope bound) and the positive root of
/// `|f'(s)|·δ + M·δ²/2 = |f|` (`M` bounds `|f''|` through the curvature
/// bound), so no crossing is skipped. The bracketed root is polished with the
/// Illinois variant of regula falsi.
pub fn intersect_surface(
    surface: &SurfaceModel,
    t: f64,
    origin: Vec3,
    dir: Vec3,
    max_distance: f64,
) -> Option<SurfaceHit> {
    let dir = dir.normalized()?;
    let bound = surface.amplitude_sum();
    let start = if origin.z > bound {
        if dir.z >= 0.0 {
            return None;
        }
        (origin.z - bound) / -dir.z
    } else if origin.z < -bound {
        if dir.z <= 0.0 {
            return None;
        }
        (-bound - origin.z) / dir.z
    } else {
        0.0
    };
    if start > max_distance {
        return None;
    }
    let f = |s: f64| {
        let p = origin + dir * s;
        p.z - surface.height(p.x, p.y, t)
    };
    // f and f' together.
    let f_df = |s: f64| {
        let p = origin + dir * s;
        let q = surface.sample(p.x, p.y, t);
        (p.z - q.height, dir.z - dir.x * q.slope_x - dir.y * q.slope_y)
    };
    let horizontal_sq = dir.x * dir.x + dir.y * dir.y;
    let lipschitz = dir.z.abs() + sqrt(horizontal_sq) * surface.slope_bound();
    let curvature = horizontal_sq * surface.curvature_bound();
    let min_step = 1e-4;

    let mut s = start;
    let (mut fs, mut dfs) = f_df(s);
    let mut bracket = None;
    for _ in 0..100_000 {
        if fs == 0.0 {
            bracket = Some((s, s, fs, fs));
            break;
        }
        let g = dfs.abs();
        let local = 2.0 * fs.abs() / (g + sqrt(g * g + 2.0 * curvature * fs.abs()));
        let step = (fs.abs() / lipschitz).max(local).max(min_step);
        let next = s + step;
        if next > max_distance {
            return None;
        }
        let (fn_, dfn) = f_df(next);
        if fn_ == 0.0 || (fn_ > 0.0) != (fs > 0.0) {
            bracket = Some((s, next, fs, fn_));
            break;
        }
        s = next;
        fs = fn_;
        dfs = dfn;
    }
    let (mut a, mut b, mut fa, mut fb) = bracket?;
    let mut root = if fb == 0.0 { b } else { a };
    if a != b && fb != 0.0 {
        let mut side = 0i8;
        for _ in 0..200 {
            let c = (a * fb - b * fa) / (fb - fa);
            let fc = f(c);
            root = c;
            if fc == 0.0 || (b - a).abs() < 1e-13 * (1.0 + c.abs()) {
                break;
            }
            if (fc > 0.0) == (fb > 0.0) {
                b = c;
                fb = fc;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            } else {
                a = c;
                fa = fc;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            }
            if fc.abs() < 1e-14 {
                break;
            }
        }
    }
    let p = origin + dir * root;
    let sample = surface.sample(p.x, p.y, t);
    Some(SurfaceHit { distance: root, point: Vec3::new(p.x, p.y, sample.height), sample })
}

/// Converged TX → surface → RX path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPath {
    pub refraction_point: Vec3,
    /// Unit direction from the transmitter to the refraction point.
    pub water_dir: Vec3,
    /// Unit refracted direction leaving the surface towards the receiver.
    pub air_dir: Vec3,
    pub normal: Vec3,
    pub theta_1: f64,
    pub theta_2: f64,
    pub d_water: f64,
    pub d_air: f64,
    /// Horizontal miss of the refracted ray at the receiver height, m.
    pub miss: f64,
}

impl LinkPath {
    /// Geometry for a transmitter pointing along `tx_axis` and a receiver
    /// pointing along `rx_axis`.
    pub fn geometry(&self, tx_axis: Vec3, rx_axis: Vec3) -> PathGeometry {
        PathGeometry {
            alpha_d: tx_axis.angle_to(self.water_dir),
            alpha_a: rx_axis.angle_to(-self.air_dir),
            theta_1: self.theta_1,
            theta_2: self.theta_2,
            d_water: self.d_water,
            d_air: self.d_air,
            refraction_point: self.refraction_point,
        }
    }
}

const LINK_TOL: f64 = 1e-9;

fn residual_vec(surface: &SurfaceModel, scenario: &ChannelScenario, t: f64, x: f64, y: f64) -> Result<(LinkPath, [f64; 2])> {
    let sample = surface.sample(x, y, t);
    let p = Vec3::new(x, y, sample.height);
    let v = p - scenario.tx_pos;
    let d_water = v.norm();
    if v.z <= 0.0 || d_water == 0.0 {
        return Err(Error::NoPath);
    }
    let water_dir = v * (1.0 / d_water);
    let normal = sample.normal();
    let air_dir = match refract(water_dir, normal, scenario.n_water, scenario.n_air)? {
        Refraction::Transmitted(d) => d,
        Refraction::TotalInternalReflection => return Err(Error::TotalInternalReflection),
    };
    if air_dir.z <= 0.0 {
        return Err(Error::NoPath);
    }
    let rise = scenario.rx_pos.z - p.z;
    let q = p + air_dir * (rise / air_dir.z);
    let dx = q.x - scenario.rx_pos.x;
    let dy = q.y - scenario.rx_pos.y;
    let path = LinkPath {
        refraction_point: p,
        water_dir,
        air_dir,
        normal,
        theta_1: water_dir.angle_to(normal),
        theta_2: air_dir.angle_to(normal),
        d_water,
        d_air: (scenario.rx_pos - p).norm(),
        miss: sqrt(dx * dx + dy * dy),
    };
    Ok((path, [dx, dy]))
}

/// Horizontal point where the straight TX–RX line crosses z = 0.
pub fn line_of_sight_crossing(scenario: &ChannelScenario) -> (f64, f64) {
    let (tx, rx) = (scenario.tx_pos, scenario.rx_pos);
    let f = -tx.z / (rx.z - tx.z);
    (tx.x + (rx.x - tx.x) * f, tx.y + (rx.y - tx.y) * f)
}

/// Finds the refraction point linking TX and RX at time `t`.
///
/// Damped Newton on the horizontal landing error of the refracted ray, with a
/// forward-difference Jacobian. `guess` defaults to the line-of-sight crossing.
/// Steep seas fold the landing map, so a start that stalls in a local minimum
/// is retried from rings of points around the line-of-sight crossing.
pub fn solve_link_path(
    surface: &SurfaceModel,
    scenario: &ChannelScenario,
    t: f64,
    guess: Option<(f64, f64)>,
) -> Result<LinkPath> {
    let los = line_of_sight_crossing(scenario);
    let first = newton_link(surface, scenario, t, guess.unwrap_or(los));
    if first.is_ok() {
        return first;
    }
    if guess.is_some() {
        if let Ok(p) = newton_link(surface, scenario, t, los) {
            return Ok(p);
        }
    }
    for radius in [0.1, 0.3, 1.0] {
        for k in 0..8 {
            let (s, c) = (sin(k as f64 * PI / 4.0), cos(k as f64 * PI / 4.0));
            if let Ok(p) = newton_link(surface, scenario, t, (los.0 + radius * c, los.1 + radius * s)) {
                return Ok(p);
            }
        }
    }
    first
}

fn newton_link(surface: &SurfaceModel, scenario: &ChannelScenario, t: f64, start: (f64, f64)) -> Result<LinkPath> {
    let (mut x, mut y) = start;
    let (mut cur, mut r) = residual_vec(surface, scenario, t, x, y)?;
    let norm = |r: [f64; 2]| sqrt(r[0] * r[0] + r[1] * r[1]);
    let h = 1e-6;
    for _ in 0..60 {
        if norm(r) < LINK_TOL {
            return Ok(cur);
        }
        let (_, rx) = residual_vec(surface, scenario, t, x + h, y)?;
        let (_, ry) = residual_vec(surface, scenario, t, x, y + h)?;
        let j = [
            [(rx[0] - r[0]) / h, (ry[0] - r[0]) / h],
            [(rx[1] - r[1]) / h, (ry[1] - r[1]) / h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NoPath);
        }
        let dx = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let dy = -(-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (nx, ny) = (x + lambda * dx, y + lambda * dy);
            if let Ok((l, nr)) = residual_vec(surface, scenario, t, nx, ny) {
                if norm(nr) < norm(r) {
                    x = nx;
                    y = ny;
                    cur = l;
                    r = nr;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(r) < LINK_TOL {
        Ok(cur)
    } else {
        Err(Error::NoPath)
    }
}

/// How the centroid normalizes the intensity-weighted coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CentroidMode {
    /// Divide by the total intensity (weighted mean).
    #[default]
    TotalIntensity,
    /// Divide by the sum of pixel coordinates, as the centroid is sometimes
    /// printed. Kept for comparison only; undefined on a centred screen.
    CoordinateSum,
}

/// Receiver-screen tracer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenConfig {
    /// Pixels per side.
    pub m: usize,
    /// Full field of view, rad.
    pub fov: f64,
    /// Screen distance, m.
    pub z_c: f64,
    pub refine_factor: f64,
    pub max_iters: usize,
    /// Centre displacement (screen units) below which the loop stops.
    pub convergence_eps: f64,
    /// Apparent emitter width in pixels of the current screen.
    pub emitter_pixels: f64,
    /// Miss angles beyond this multiple of the emitter width are dark.
    pub acceptance_factor: f64,
    pub centroid: CentroidMode,
    /// Keep every iteration's intensity grid in the result.
    pub record_grids: bool,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        ScreenConfig {
            m: 16,
            fov: 1.2,
            z_c: 1.0,
            refine_factor: 10.0,
            max_iters: 12,
            convergence_eps: 1e-4,
            emitter_pixels: 4.0,
            acceptance_factor: 2.0,
            centroid: CentroidMode::TotalIntensity,
            record_grids: false,
        }
    }
}

impl ScreenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::config("screen m must be at least 2"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("screen max_iters must be positive"));
        }
        check(self.fov, self.fov > 0.0 && self.fov < PI, "fov")?;
        check(self.z_c, self.z_c > 0.0, "z_c")?;
        check(self.refine_factor, self.refine_factor > 1.0, "refine_factor")?;
        check(self.convergence_eps, self.convergence_eps > 0.0, "convergence_eps")?;
        check(self.emitter_pixels, self.emitter_pixels > 0.0, "emitter_pixels")?;
        check(self.acceptance_factor, self.acceptance_factor > 0.0, "acceptance_factor")?;
        Ok(())
    }

    /// Pixel pitch of the first (coarsest) screen.
    pub fn initial_pitch(&self) -> f64 {
        2.0 * self.z_c * tan(self.fov / 2.0) / self.m as f64
    }
}

/// One refinement round of [`find_beam_direction`].
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub center: (f64, f64),
    pub pitch: f64,
    /// Distance the centre moved this round; `None` when the screen was dark.
    pub displacement: Option<f64>,
    /// Row-major (`y` outer) intensities when `record_grids` is set.
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    pub direction_local: Vec3,
    pub direction_abs: Vec3,
    pub refraction_point: Vec3,
    pub intensity: f64,
    pub converged: bool,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
}

/// Longest ray march used when looking for the surface.
pub fn max_march(scenario: &ChannelScenario) -> f64 {
    10.0 * (scenario.tx_pos.z.abs() + scenario.rx_pos.z)
}

fn emitter_pattern(angle: f64, width: f64) -> f64 {
    let s = sin(angle);
    exp(-2.0 * s * s / (width * width))
}

/// Intensity seen by one receiver pixel when the emitter has angular extent
/// `width`.
///
/// The pixel ray leaves the receiver, refracts into the water and is compared
/// with the direction from the refraction spot to the transmitter. The miss
/// angle between the two is weighted by a Gaussian emitter pattern and
/// rejected beyond `cone`; Fresnel transmittance and path loss multiply in.
pub fn trace_pixel_with_width(
    pixel_dir: Vec3,
    surface: &SurfaceModel,
    scenario: &ChannelScenario,
    t: f64,
    width: f64,
    cone: f64,
) -> f64 {
    pixel_ray(pixel_dir, surface, scenario, t, width, cone).map_or(0.0, |(i, _)| i)
}

fn pixel_ray(
    pixel_dir: Vec3,
    surface: &SurfaceModel,
    scenario: &ChannelScenario,
    t: f64,
    width: f64,
    cone: f64,
) -> Option<(f64, SurfaceHit)> {
    let dir = pixel_dir.normalized()?;
    let hit = intersect_surface(surface, t, scenario.rx_pos, dir, max_march(scenario))?;
    let normal = hit.sample.normal();
    let water = match refract(dir, normal, scenario.n_air, scenario.n_water).ok()? {
        Refraction::Transmitted(d) => d,
        Refraction::TotalInternalReflection => return Some((0.0, hit)),
    };
    let theta_1 = water.angle_to(-normal);
    let to_tx = scenario.tx_pos - hit.point;
    let d_water = to_tx.norm();
    let miss = water.angle_to(to_tx);
    if miss > cone || d_water == 0.0 {
        return Some((0.0, hit));
    }
    let transmit = fresnel_transmittance(theta_1, scenario.n_water, scenario.n_air);
    let path = path_gain(d_water, hit.distance, scenario).ok()?;
    Some((emitter_pattern(miss, width) * transmit * path, hit))
}

/// Single-pixel intensity with the emitter extent set to the laser's
/// accessible angle and the default two-width acceptance cone.
pub fn trace_pixel(pixel_dir: Vec3, surface: &SurfaceModel, scenario: &ChannelScenario, t: f64) -> f64 {
    trace_pixel_with_width(pixel_dir, surface, scenario, t, scenario.omega_d, 2.0 * scenario.omega_d)
}

/// Intensity-weighted centre of a pixel screen.
pub fn centroid(intensities: &[f64], coords: &[(f64, f64)], mode: CentroidMode) -> Result<(f64, f64)> {
    if intensities.len() != coords.len() {
        return Err(Error::ShapeMismatch { expected: coords.len(), got: intensities.len() });
    }
    let mut total = 0.0;
    let (mut sx, mut sy) = (0.0, 0.0);
    let (mut cx, mut cy) = (0.0, 0.0);
    for (&i, &(x, y)) in intensities.iter().zip(coords) {
        check(i, i >= 0.0, "pixel intensity")?;
        total += i;
        sx += i * x;
        sy += i * y;
        cx += x;
        cy += y;
    }
    if total <= 0.0 {
        return Err(Error::AllDark);
    }
    match mode {
        CentroidMode::TotalIntensity => Ok((sx / total, sy / total)),
        CentroidMode::CoordinateSum => {
            if cx == 0.0 || cy == 0.0 {
                return Err(Error::domain("coordinate-sum centroid undefined on a centred screen"));
            }
            Ok((sx / cx, sy / cy))
        }
    }
}

/// Locates the arriving beam on the receiver screen by iterative centroiding.
///
/// The screen lives in the receiver frame given by `scenario.rx_orientation`.
/// Each round traces `m × m` pixels around the current centre and moves the
/// centre to the intensity centroid. The pitch shrinks by `refine_factor` once
/// the centre moves by less than a pixel, and grows back by
/// `√refine_factor` when a refined screen comes up dark. The emitter width follows the pitch so the lit spot spans
/// a few pixels at every scale.
pub fn find_beam_direction(
    surface: &SurfaceModel,
    scenario: &ChannelScenario,
    t: f64,
    config: &ScreenConfig,
) -> Result<TraceResult> {
    config.validate()?;
    let m = config.m;
    let half = (m as f64 - 1.0) / 2.0;
    let orient = scenario.rx_orientation;
    let mut center = (0.0, 0.0);
    let mut pitch = config.initial_pitch();
    let mut history = Vec::new();
    let mut lit_any = false;
    let mut converged = false;
    let mut last_width = scenario.omega_d;

    let mut intens = alloc::vec![0.0; m * m];
    let mut coords = alloc::vec![(0.0, 0.0); m * m];
    for k in 0..config.max_iters {
        let width = config.emitter_pixels * pitch / config.z_c;
        let cone = config.acceptance_factor * width;
        for j in 0..m {
            for i in 0..m {
                let x = center.0 + (i as f64 - half) * pitch;
                let y = center.1 + (j as f64 - half) * pitch;
                let local = Vec3::new(x, y, config.z_c);
                let abs = to_absolute(local, &orient);
                coords[j * m + i] = (x, y);
                intens[j * m + i] = trace_pixel_with_width(abs, surface, scenario, t, width, cone);
            }
        }
        let grid = config.record_grids.then(|| intens.clone());
        match centroid(&intens, &coords, config.centroid) {
            Ok(c) => {
                let (ex, ey) = (c.0 - center.0, c.1 - center.1);
                let d = sqrt(ex * ex + ey * ey);
                center = c;
                lit_any = true;
                last_width = width;
                history.push(IterationRecord { center, pitch, displacement: Some(d), grid });
                // Stable to eps on a screen whose pixels are finer than eps.
                if k > 0 && d < config.convergence_eps && pitch <= config.convergence_eps * config.z_c {
                    converged = true;
                    break;
                }
                // Re-centre at the same scale while the centre still jumps by more than a pixel.
                if d <= pitch {
                    pitch /= config.refine_factor;
                }
            }
            Err(Error::AllDark) => {
                history.push(IterationRecord { center, pitch, displacement: None, grid });
                if !lit_any {
                    break;
                }
                // The finer screen missed the spot: back off half a refinement step.
                pitch *= sqrt(config.refine_factor);
            }
            Err(e) => return Err(e),
        }
    }
    if !lit_any {
        return Err(Error::NotFound);
    }
    let local = Vec3::new(center.0, center.1, config.z_c).normalized().ok_or(Error::NotFound)?;
    let abs = to_absolute(local, &orient);
    let (intensity, hit) = pixel_ray(abs, surface, scenario, t, last_width, config.acceptance_factor * last_width)
        .ok_or(Error::NotFound)?;
    Ok(TraceResult {
        direction_local: local,
        direction_abs: abs,
        refraction_point: hit.point,
        intensity,
        converged,
        iterations: history.len(),
        history,
    })
}

/// Direction from polar angle off `-z`/`+z` and azimuth, helper for tests and
/// policies.
pub fn polar_direction(polar: f64, azimuth: f64, up: bool) -> Vec3 {
    let z = if up { cos(polar) } else { -cos(polar) };
    Vec3::new(sin(polar) * cos(azimuth), sin(polar) * sin(azimuth), z)
}
