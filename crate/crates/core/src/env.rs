//! Episodic beam-alignment environment.
//!
//! The agent steers a transmitter below the surface and a receiver above it.
//! Each step the surface advances by one sample time and the received
//! intensity is the channel gain of the refracted TX→RX path, with the
//! departure and arrival angles measured against the commanded directions.

use alloc::sync::Arc;

use crate::error::{check, Error, Result};
use crate::math::{acos, atan2, exp, ln_1p, log10, sincos, EulerZxz, Vec3, PI};
use crate::optics::{channel_gain, refract, ChannelScenario, Refraction};
use crate::spectrum::SpectrumParams;
use crate::surface::{synthesize, SurfaceModel, SynthesisGrid};
use crate::tracer::{solve_link_path, LinkPath};

pub const OBS_DIM: usize = 8;
pub const ACTION_DIM: usize = 4;
pub const DEFAULT_POLAR_MAX: f64 = PI / 3.0;

/// Coefficients of the log-exponential reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardCoeffs {
    pub gain_g: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub bias_b: f64,
    /// Intensities below this are clamped before entering the log terms.
    pub intensity_floor: f64,
}

impl Default for RewardCoeffs {
    fn default() -> Self {
        RewardCoeffs { gain_g: 1.0, a: 1e3, b: 1e3, c: 1.0, bias_b: 0.0, intensity_floor: 1e-12 }
    }
}

impl RewardCoeffs {
    pub fn validate(&self) -> Result<()> {
        check(self.gain_g, self.gain_g.is_finite(), "reward gain_g")?;
        check(self.a, self.a > 0.0, "reward a")?;
        check(self.b, self.b > 0.0, "reward b")?;
        check(self.c, self.c > 0.0, "reward c")?;
        check(self.bias_b, self.bias_b.is_finite(), "reward bias_b")?;
        check(self.intensity_floor, self.intensity_floor > 0.0, "intensity_floor")?;
        Ok(())
    }
}

/// `G·(ln(a·I + 1) + log10(b·I) + exp(c·I)) + B` with `I` raised to the floor.
pub fn reward(intensity: f64, coeffs: &RewardCoeffs) -> f64 {
    let i = if intensity >= coeffs.intensity_floor { intensity } else { coeffs.intensity_floor };
    coeffs.gain_g * (ln_1p(coeffs.a * i) + log10(coeffs.b * i) + exp(coeffs.c * i)) + coeffs.bias_b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpisodeSeedPolicy {
    /// Every episode reuses the base seed.
    Fixed,
    /// Episode `k` uses `base + k`.
    #[default]
    Incrementing,
}

impl EpisodeSeedPolicy {
    pub fn seed_for(self, base: u64, episode: u64) -> u64 {
        match self {
            EpisodeSeedPolicy::Fixed => base,
            EpisodeSeedPolicy::Incrementing => base.wrapping_add(episode),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvConfig {
    /// Optics and endpoint depths. Only `tx_pos.z` and `rx_pos.z` are used for
    /// placement; reset puts TX on the axis and shifts RX by the offset.
    pub scenario: ChannelScenario,
    pub spectrum: SpectrumParams,
    pub grid: SynthesisGrid,
    pub sample_time: f64,
    pub max_steps: usize,
    /// Horizontal RX displacement as a fraction of the vertical separation.
    pub horizontal_offset_frac: f64,
    pub reward: RewardCoeffs,
    pub episode_seed_policy: EpisodeSeedPolicy,
    /// Largest commanded polar angle, rad.
    pub polar_max: f64,
    /// Replace the synthesized sea by a calm, flat interface.
    pub flat_surface: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        let spectrum = SpectrumParams::default();
        EnvConfig {
            scenario: ChannelScenario::default(),
            spectrum,
            grid: SynthesisGrid::for_spectrum(&spectrum, 64, 36).expect("default spectrum is valid"),
            sample_time: 0.05,
            max_steps: 500,
            horizontal_offset_frac: 0.1,
            reward: RewardCoeffs::default(),
            episode_seed_policy: EpisodeSeedPolicy::default(),
            polar_max: DEFAULT_POLAR_MAX,
            flat_surface: false,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.spectrum.validate()?;
        self.grid.validate()?;
        self.reward.validate()?;
        check(self.sample_time, self.sample_time > 0.0, "sample_time")?;
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be at least 1"));
        }
        check(self.horizontal_offset_frac, self.horizontal_offset_frac >= 0.0, "horizontal_offset_frac")?;
        check(self.polar_max, self.polar_max > 0.0 && self.polar_max <= PI / 2.0, "polar_max")?;
        Ok(())
    }

    /// Scenario with TX at `(0, 0, −z_w)` and RX at `(offset·(z_w + z_a), 0, z_a)`.
    pub fn placed_scenario(&self) -> ChannelScenario {
        let z_w = self.scenario.tx_pos.z.abs();
        let z_a = self.scenario.rx_pos.z;
        ChannelScenario {
            tx_pos: Vec3::new(0.0, 0.0, -z_w),
            rx_pos: Vec3::new(self.horizontal_offset_frac * (z_w + z_a), 0.0, z_a),
            ..self.scenario
        }
    }

    pub fn horizon(&self) -> f64 {
        self.max_steps as f64 * self.sample_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub tx_dir: Vec3,
    pub rx_dir: Vec3,
    pub intensity: f64,
    /// Seconds since the episode started.
    pub rel_time: f64,
}

impl Observation {
    pub fn to_array(&self) -> [f64; OBS_DIM] {
        let (t, r) = (self.tx_dir, self.rx_dir);
        [t.x, t.y, t.z, r.x, r.y, r.z, self.intensity, self.rel_time]
    }

    pub fn from_array(a: &[f64; OBS_DIM]) -> Self {
        Observation {
            tx_dir: Vec3::new(a[0], a[1], a[2]),
            rx_dir: Vec3::new(a[3], a[4], a[5]),
            intensity: a[6],
            rel_time: a[7],
        }
    }
}

/// Two control pairs in `[−1, 1]`, one per endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionVec {
    pub tx_ctrl: [f64; 2],
    pub rx_ctrl: [f64; 2],
}

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-1.0, 1.0)
    }
}

impl ActionVec {
    /// Builds an action, clamping every entry to `[−1, 1]` (NaN becomes 0).
    pub fn new(tx_ctrl: [f64; 2], rx_ctrl: [f64; 2]) -> Self {
        ActionVec {
            tx_ctrl: [clamp_unit(tx_ctrl[0]), clamp_unit(tx_ctrl[1])],
            rx_ctrl: [clamp_unit(rx_ctrl[0]), clamp_unit(rx_ctrl[1])],
        }
    }

    pub fn from_array(a: &[f64; ACTION_DIM]) -> Self {
        ActionVec::new([a[0], a[1]], [a[2], a[3]])
    }

    pub fn to_array(&self) -> [f64; ACTION_DIM] {
        [self.tx_ctrl[0], self.tx_ctrl[1], self.rx_ctrl[0], self.rx_ctrl[1]]
    }

    pub fn clamped(&self) -> Self {
        ActionVec::new(self.tx_ctrl, self.rx_ctrl)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hemisphere {
    Up,
    Down,
}

impl Hemisphere {
    fn sign(self) -> f64 {
        match self {
            Hemisphere::Up => 1.0,
            Hemisphere::Down => -1.0,
        }
    }
}

/// Maps `(u, v)` to azimuth `π·u` and polar angle `polar_max·(v + 1)/2`
/// measured from `±z`.
pub fn ctrl_to_direction_with(ctrl: [f64; 2], hemisphere: Hemisphere, polar_max: f64) -> Vec3 {
    let (u, v) = (clamp_unit(ctrl[0]), clamp_unit(ctrl[1]));
    let (sp, cp) = sincos(PI * u);
    let (st, ct) = sincos(polar_max * (v + 1.0) / 2.0);
    Vec3::new(st * cp, st * sp, hemisphere.sign() * ct)
}

pub fn ctrl_to_direction(ctrl: [f64; 2], hemisphere: Hemisphere) -> Vec3 {
    ctrl_to_direction_with(ctrl, hemisphere, DEFAULT_POLAR_MAX)
}

/// Inverse of [`ctrl_to_direction_with`]; polar angles beyond `polar_max`
/// saturate at `v = 1`. At zero polar angle the azimuth is reported as 0.
pub fn direction_to_ctrl_with(dir: Vec3, hemisphere: Hemisphere, polar_max: f64) -> [f64; 2] {
    let d = dir.normalized().unwrap_or(Vec3::new(0.0, 0.0, hemisphere.sign()));
    let polar = acos((hemisphere.sign() * d.z).clamp(-1.0, 1.0));
    let v = (2.0 * polar / polar_max - 1.0).clamp(-1.0, 1.0);
    let u = if d.x == 0.0 && d.y == 0.0 { 0.0 } else { atan2(d.y, d.x) / PI };
    [u, v]
}

pub fn direction_to_ctrl(dir: Vec3, hemisphere: Hemisphere) -> [f64; 2] {
    direction_to_ctrl_with(dir, hemisphere, DEFAULT_POLAR_MAX)
}

/// Action that points both endpoints along the given directions.
pub fn action_for(tx_dir: Vec3, rx_dir: Vec3, polar_max: f64) -> ActionVec {
    ActionVec::new(
        direction_to_ctrl_with(tx_dir, Hemisphere::Up, polar_max),
        direction_to_ctrl_with(rx_dir, Hemisphere::Down, polar_max),
    )
}

/// Directions commanded by an action.
pub fn action_directions(action: &ActionVec, polar_max: f64) -> (Vec3, Vec3) {
    (
        ctrl_to_direction_with(action.tx_ctrl, Hemisphere::Up, polar_max),
        ctrl_to_direction_with(action.rx_ctrl, Hemisphere::Down, polar_max),
    )
}

/// Received intensity for one frozen surface snapshot.
///
/// The refracted TX→RX path does not depend on where the endpoints point, so
/// it is solved once and every candidate direction pair reuses it.
#[derive(Debug, Clone)]
pub struct LinkProbe<'a> {
    scenario: &'a ChannelScenario,
    path: Option<LinkPath>,
}

impl<'a> LinkProbe<'a> {
    pub fn new(surface: &'a SurfaceModel, scenario: &'a ChannelScenario, t: f64) -> Self {
        Self::with_guess(surface, scenario, t, None)
    }

    pub fn with_guess(surface: &'a SurfaceModel, scenario: &'a ChannelScenario, t: f64, guess: Option<(f64, f64)>) -> Self {
        let path = solve_link_path(surface, scenario, t, guess).ok();
        LinkProbe { scenario, path }
    }

    pub fn path(&self) -> Option<&LinkPath> {
        self.path.as_ref()
    }

    /// Channel gain for the given pointing directions.
    ///
    /// Zero when no refracted path exists, when the transmitter axis meets
    /// the surface normal at the refraction spot beyond the critical angle
    /// (the beam is totally internally reflected), or when either endpoint
    /// faces more than a right angle away from the path.
    pub fn intensity(&self, tx_dir: Vec3, rx_dir: Vec3) -> f64 {
        let Some(path) = self.path.as_ref() else { return 0.0 };
        let (Some(tx), Some(rx)) = (tx_dir.normalized(), rx_dir.normalized()) else { return 0.0 };
        let sc = self.scenario;
        if !matches!(refract(tx, path.normal, sc.n_water, sc.n_air), Ok(Refraction::Transmitted(_))) {
            return 0.0;
        }
        let geom = path.geometry(tx, rx);
        if geom.alpha_d > PI / 2.0 || geom.alpha_a > PI / 2.0 {
            return 0.0;
        }
        channel_gain(&geom, sc).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub surface: Arc<SurfaceModel>,
    /// Scenario with the endpoints placed for this episode.
    pub scenario: ChannelScenario,
    pub t: f64,
    pub step_idx: usize,
    pub tx_dir: Vec3,
    pub rx_dir: Vec3,
    pub last_intensity: f64,
    pub done: bool,
}

impl EnvState {
    pub fn observation(&self) -> Observation {
        Observation { tx_dir: self.tx_dir, rx_dir: self.rx_dir, intensity: self.last_intensity, rel_time: self.t }
    }

    /// Time at which the next step measures.
    pub fn next_time(&self, config: &EnvConfig) -> f64 {
        (self.step_idx + 1) as f64 * config.sample_time
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub is_done: bool,
    pub next_state: EnvState,
}

/// Builds the sea for an episode seed.
pub fn episode_surface(config: &EnvConfig, seed: u64) -> Result<SurfaceModel> {
    if config.flat_surface {
        Ok(SurfaceModel::from_components(alloc::vec::Vec::new(), config.spectrum.gravity_g, seed))
    } else {
        synthesize(&config.spectrum, &config.grid, seed)
    }
}

pub fn reset(config: &EnvConfig, seed: u64) -> Result<(Observation, EnvState)> {
    config.validate()?;
    let surface = Arc::new(episode_surface(config, seed)?);
    Ok(reset_with_surface(config, surface))
}

/// Starts an episode on an existing surface; directions straight up/down.
pub fn reset_with_surface(config: &EnvConfig, surface: Arc<SurfaceModel>) -> (Observation, EnvState) {
    let scenario = config.placed_scenario();
    let (tx_dir, rx_dir) = (Vec3::UP, Vec3::DOWN);
    let intensity = LinkProbe::new(&surface, &scenario, 0.0).intensity(tx_dir, rx_dir);
    let state = EnvState {
        surface,
        scenario,
        t: 0.0,
        step_idx: 0,
        tx_dir,
        rx_dir,
        last_intensity: intensity,
        done: false,
    };
    (state.observation(), state)
}

pub fn step(state: &EnvState, action: &ActionVec, config: &EnvConfig) -> Result<StepOutcome> {
    if state.done || state.step_idx >= config.max_steps {
        return Err(Error::InvalidState("step called after the episode ended".into()));
    }
    let action = action.clamped();
    let (tx_dir, rx_dir) = action_directions(&action, config.polar_max);
    let t = state.next_time(config);
    let intensity = LinkProbe::new(&state.surface, &state.scenario, t).intensity(tx_dir, rx_dir);
    let step_idx = state.step_idx + 1;
    let is_done = step_idx >= config.max_steps;
    let next_state = EnvState {
        surface: Arc::clone(&state.surface),
        scenario: state.scenario,
        t,
        step_idx,
        tx_dir,
        rx_dir,
        last_intensity: intensity,
        done: is_done,
    };
    Ok(StepOutcome {
        observation: next_state.observation(),
        reward: reward(intensity, &config.reward),
        is_done,
        next_state,
    })
}

/// Receiver orientation whose boresight is `dir`.
pub fn orientation_along(dir: Vec3) -> EulerZxz {
    EulerZxz::facing(dir).unwrap_or(EulerZxz::NADIR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{cos, sin};
    use crate::optics::PathGeometry;

    fn flat_config() -> EnvConfig {
        EnvConfig { flat_surface: true, ..Default::default() }
    }

    #[test]
    fn ctrl_examples() {
        assert_eq!(ctrl_to_direction([0.0, -1.0], Hemisphere::Up), Vec3::UP);
        assert_eq!(ctrl_to_direction([0.0, -1.0], Hemisphere::Down), Vec3::DOWN);
        let d = ctrl_to_direction([0.5, 1.0], Hemisphere::Down);
        let want = Vec3::new(0.0, sin(PI / 3.0), -cos(PI / 3.0));
        assert!((d - want).norm() < 1e-15);
        for (u, v) in [(0.3, -0.2), (-0.9, 0.7), (0.99, -0.99), (0.0, 1.0)] {
            for h in [Hemisphere::Up, Hemisphere::Down] {
                let back = direction_to_ctrl(ctrl_to_direction([u, v], h), h);
                assert!((back[0] - u).abs() < 1e-9 && (back[1] - v).abs() < 1e-9, "{u} {v} {back:?}");
            }
        }
    }

    #[test]
    fn reward_examples() {
        let unit = RewardCoeffs { gain_g: 1.0, a: 1.0, b: 1.0, c: 1.0, bias_b: 0.0, intensity_floor: 1e-12 };
        let r = reward(1.0, &unit);
        assert!((r - (core::f64::consts::LN_2 + core::f64::consts::E)).abs() < 1e-15);
        assert!((r - 3.4115).abs() < 1e-4);
        let c = RewardCoeffs::default();
        assert_eq!(reward(0.0, &c), reward(c.intensity_floor, &c));
        assert_eq!(reward(1e-20, &c), reward(c.intensity_floor, &c));
        assert!(reward(2e-3, &c) > reward(1e-3, &c));
    }

    #[test]
    fn reset_places_receiver() {
        let c = EnvConfig { horizontal_offset_frac: 0.1, ..flat_config() };
        let (_, s) = reset(&c, 1).unwrap();
        assert!((s.scenario.rx_pos.x - 2.0).abs() < 1e-15);
        let c0 = EnvConfig { horizontal_offset_frac: 0.0, ..flat_config() };
        let (_, s) = reset(&c0, 1).unwrap();
        assert_eq!(s.scenario.rx_pos, Vec3::new(0.0, 0.0, 10.0));
    }

    #[test]
    fn horizon_and_invalid_state() {
        let c = EnvConfig { max_steps: 5, ..flat_config() };
        let (_, mut s) = reset(&c, 0).unwrap();
        let a = ActionVec::new([0.0, -1.0], [0.0, -1.0]);
        for k in 0..5 {
            let out = step(&s, &a, &c).unwrap();
            assert_eq!(out.is_done, k == 4);
            assert_eq!(out.reward, reward(out.observation.intensity, &c.reward));
            s = out.next_state;
        }
        assert!(matches!(step(&s, &a, &c), Err(Error::InvalidState(_))));
    }

    #[test]
    fn aligned_flat_link_matches_ideal_gain() {
        let c = EnvConfig { horizontal_offset_frac: 0.0, ..flat_config() };
        let (_, s) = reset(&c, 0).unwrap();
        let out = step(&s, &ActionVec::new([0.0, -1.0], [0.0, -1.0]), &c).unwrap();
        let geom = PathGeometry {
            alpha_d: 0.0,
            alpha_a: 0.0,
            theta_1: 0.0,
            theta_2: 0.0,
            d_water: 10.0,
            d_air: 10.0,
            refraction_point: Vec3::ZERO,
        };
        let want = channel_gain(&geom, &c.scenario).unwrap();
        assert!((out.observation.intensity - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn tx_past_critical_angle_is_dark() {
        let c = flat_config();
        let (_, s) = reset(&c, 0).unwrap();
        let out = step(&s, &ActionVec::new([0.0, 1.0], [0.0, -1.0]), &c).unwrap();
        assert_eq!(out.observation.intensity, 0.0);
        assert_eq!(out.reward, reward(c.reward.intensity_floor, &c.reward));
    }

    #[test]
    fn clamping_is_transparent() {
        let c = EnvConfig { max_steps: 3, grid: SynthesisGrid::for_spectrum(&SpectrumParams::default(), 8, 4).unwrap(), ..Default::default() };
        let (_, s) = reset(&c, 3).unwrap();
        let wild = ActionVec { tx_ctrl: [3.0, -7.0], rx_ctrl: [-1.5, 0.2] };
        let tame = ActionVec { tx_ctrl: [1.0, -1.0], rx_ctrl: [-1.0, 0.2] };
        assert_eq!(step(&s, &wild, &c).unwrap(), step(&s, &tame, &c).unwrap());
    }
}
