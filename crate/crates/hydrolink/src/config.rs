//! Experiment configuration.
//!
//! Files are TOML. Angles are degrees here and radians everywhere else. A file
//! starts from a named preset (`preset = "..."`, default `paper-fig4`) and
//! only needs the keys it changes. Environment variables of the form
//! `HYDROLINK_<SECTION>__<KEY>` (or `HYDROLINK_<KEY>` for top-level keys)
//! override file values; their values are parsed as TOML literals and fall
//! back to plain strings.

use std::path::Path;

use hydrolink_core::bench::UpperBoundConfig;
use hydrolink_core::ddpg::{Hyperparams, OptimizerKind};
use hydrolink_core::env::{EnvConfig, EpisodeSeedPolicy, RewardCoeffs, DEFAULT_POLAR_MAX};
use hydrolink_core::optics::ChannelScenario;
use hydrolink_core::spectrum::{peak_frequency, SpectrumParams};
use hydrolink_core::surface::SynthesisGrid;
use hydrolink_core::tracer::{CentroidMode, ScreenConfig};
use hydrolink_core::Vec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ENV_PREFIX: &str = "HYDROLINK_";
pub const PRESETS: [&str; 2] = ["paper-fig4", "desk"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub preset: String,
    /// Base seed for surfaces and training.
    pub seed: u64,
    pub spectrum: SpectrumSection,
    pub surface: SurfaceSection,
    pub channel: ChannelSection,
    pub env: EnvSection,
    pub reward: RewardSection,
    pub tracer: TracerSection,
    pub upper_bound: UpperBoundSection,
    pub agent: AgentSection,
    pub eval: EvalSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    /// m/s at 10 m.
    pub wind_speed: f64,
    /// m.
    pub fetch: f64,
    pub gravity: f64,
    pub gamma: f64,
    pub sigma_low: f64,
    pub sigma_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceSection {
    pub n_omega: usize,
    pub n_theta: usize,
    /// Frequency band edges as multiples of the spectral peak.
    pub omega_min_factor: f64,
    pub omega_max_factor: f64,
    pub wind_bearing_deg: f64,
    pub amplitude_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    /// Transmitter depth below the mean surface, m.
    pub tx_depth: f64,
    /// Receiver height above the mean surface, m.
    pub rx_height: f64,
    pub n_water: f64,
    pub n_air: f64,
    pub wavelength_nm: f64,
    /// 1/m.
    pub absorption: f64,
    pub omega_d_deg: f64,
    pub omega_a_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedPolicy {
    Fixed,
    Incrementing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    /// s.
    pub sample_time: f64,
    pub max_steps: usize,
    /// Horizontal receiver offset as a fraction of the vertical separation.
    pub horizontal_offset: f64,
    pub polar_max_deg: f64,
    pub flat_surface: bool,
    pub episode_seeds: SeedPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardSection {
    pub gain: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub bias: f64,
    pub intensity_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Centroid {
    TotalIntensity,
    CoordinateSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TracerSection {
    pub m: usize,
    pub fov_deg: f64,
    pub screen_distance: f64,
    pub refine_factor: f64,
    pub max_iters: usize,
    pub convergence_eps: f64,
    pub emitter_pixels: f64,
    pub acceptance_factor: f64,
    pub centroid: Centroid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UpperBoundSection {
    pub m: usize,
    pub fov_deg: f64,
    pub max_iters: usize,
    pub search_half_width_deg: f64,
    pub search_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerName {
    Sgd,
    Adam,
}

/// Which actor a trained agent acts with at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalNetwork {
    Online,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentSection {
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub batch: usize,
    pub noise_std: f64,
    pub noise_decay: f64,
    pub tau: f64,
    pub episodes: usize,
    pub steps: usize,
    pub buffer_capacity: usize,
    pub warmup: usize,
    pub optimizer: OptimizerName,
    pub hidden: Vec<usize>,
    pub action_l2: f64,
    pub eval_network: EvalNetwork,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub episodes: usize,
    /// Held-out episode `k` uses `first_seed + k`.
    pub first_seed: u64,
    /// Steps per evaluation episode; 0 uses `env.max_steps`.
    pub steps: usize,
    /// Offset fractions visited by `sweep`.
    pub offsets: Vec<f64>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        let p = SpectrumParams::default();
        SpectrumSection {
            wind_speed: p.wind_speed_u10,
            fetch: p.fetch_xf,
            gravity: p.gravity_g,
            gamma: p.gamma,
            sigma_low: p.sigma_low,
            sigma_high: p.sigma_high,
        }
    }
}

impl Default for SurfaceSection {
    fn default() -> Self {
        SurfaceSection {
            n_omega: 64,
            n_theta: 36,
            omega_min_factor: 0.5,
            omega_max_factor: 6.0,
            wind_bearing_deg: 0.0,
            amplitude_factor: 1.0,
        }
    }
}

impl Default for ChannelSection {
    fn default() -> Self {
        let c = ChannelScenario::default();
        ChannelSection {
            tx_depth: -c.tx_pos.z,
            rx_height: c.rx_pos.z,
            n_water: c.n_water,
            n_air: c.n_air,
            wavelength_nm: c.wavelength_lambda * 1e9,
            absorption: c.absorption,
            omega_d_deg: c.omega_d.to_degrees(),
            omega_a_deg: c.omega_a.to_degrees(),
        }
    }
}

impl Default for EnvSection {
    fn default() -> Self {
        EnvSection {
            sample_time: 0.05,
            max_steps: 500,
            horizontal_offset: 0.1,
            polar_max_deg: DEFAULT_POLAR_MAX.to_degrees(),
            flat_surface: false,
            episode_seeds: SeedPolicy::Incrementing,
        }
    }
}

impl Default for RewardSection {
    fn default() -> Self {
        let r = RewardCoeffs::default();
        RewardSection { gain: r.gain_g, a: r.a, b: r.b, c: r.c, bias: r.bias_b, intensity_floor: r.intensity_floor }
    }
}

impl Default for TracerSection {
    fn default() -> Self {
        let s = ScreenConfig::default();
        TracerSection {
            m: s.m,
            fov_deg: s.fov.to_degrees(),
            screen_distance: s.z_c,
            refine_factor: s.refine_factor,
            max_iters: s.max_iters,
            convergence_eps: s.convergence_eps,
            emitter_pixels: s.emitter_pixels,
            acceptance_factor: s.acceptance_factor,
            centroid: Centroid::TotalIntensity,
        }
    }
}

impl Default for UpperBoundSection {
    fn default() -> Self {
        let u = UpperBoundConfig::default();
        UpperBoundSection {
            m: u.screen.m,
            fov_deg: u.screen.fov.to_degrees(),
            max_iters: u.screen.max_iters,
            search_half_width_deg: u.search_half_width.to_degrees(),
            search_points: u.search_points,
        }
    }
}

impl AgentSection {
    fn from_hyperparams(hp: &Hyperparams) -> Self {
        AgentSection {
            gamma: hp.gamma,
            actor_lr: hp.actor_lr,
            critic_lr: hp.critic_lr,
            batch: hp.batch,
            noise_std: hp.noise_std,
            noise_decay: hp.noise_decay,
            tau: hp.tau,
            episodes: hp.max_episodes,
            steps: hp.max_steps,
            buffer_capacity: hp.buffer_capacity,
            warmup: hp.warmup,
            optimizer: match hp.optimizer {
                OptimizerKind::Sgd => OptimizerName::Sgd,
                OptimizerKind::Adam => OptimizerName::Adam,
            },
            hidden: hp.hidden.clone(),
            action_l2: hp.action_l2,
            eval_network: EvalNetwork::Target,
        }
    }
}

impl Default for AgentSection {
    fn default() -> Self {
        AgentSection::from_hyperparams(&Hyperparams::default())
    }
}

/// 0 to 50 % in 5 % steps.
pub fn default_offsets() -> Vec<f64> {
    (0..=10).map(|k| k as f64 * 0.05).collect()
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { episodes: 20, first_seed: 1_000_000, steps: 0, offsets: default_offsets() }
    }
}

impl Default for Config {
    fn default() -> Self {
        Config {
            preset: PRESETS[0].into(),
            seed: 0,
            spectrum: SpectrumSection::default(),
            surface: SurfaceSection::default(),
            channel: ChannelSection::default(),
            env: EnvSection::default(),
            reward: RewardSection::default(),
            tracer: TracerSection::default(),
            upper_bound: UpperBoundSection::default(),
            agent: AgentSection::default(),
            eval: EvalSection::default(),
        }
    }
}

impl Config {
    /// `paper-fig4`: 12 m/s wind over 20 km fetch, endpoints 10 m below and
    /// above the surface, 10 % offset, 500 steps of 50 ms.
    ///
    /// `desk`: the same sea and geometry with a 32 × 18 wave grid, the
    /// short-budget learner (100 episodes of 200 steps) and 200-step
    /// evaluation episodes.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-fig4" => Ok(Config::default()),
            "desk" => {
                let mut c = Config { preset: name.into(), ..Config::default() };
                c.surface.n_omega = 32;
                c.surface.n_theta = 18;
                c.agent = AgentSection::from_hyperparams(&Hyperparams::desk_scale());
                c.eval.steps = 200;
                Ok(c)
            }
            other => Err(Error::config(format!("unknown preset {other:?}; expected one of {PRESETS:?}"))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        Config::from_table(table, std::iter::empty())
    }

    /// Reads `path` (if any) and applies `HYDROLINK_*` variables from the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse().map_err(|e: toml::de::Error| Error::config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        Config::from_table(table, std::env::vars())
    }

    /// Layers `file` and then `vars` over the preset the file names.
    pub fn from_table(file: toml::Table, vars: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut overrides = toml::Table::new();
        for (k, v) in vars {
            if let Some(rest) = k.strip_prefix(ENV_PREFIX) {
                set_override(&mut overrides, rest, &v)?;
            }
        }
        let preset = overrides
            .get("preset")
            .or_else(|| file.get("preset"))
            .map(|v| v.as_str().map(str::to_owned).ok_or_else(|| Error::config("preset must be a string")))
            .transpose()?
            .unwrap_or_else(|| PRESETS[0].to_owned());
        let base = Config::preset(&preset)?;
        let mut table = toml::Table::try_from(&base).map_err(|e| Error::config(e.to_string()))?;
        merge(&mut table, file);
        merge(&mut table, overrides);
        let config: Config = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.env_config()?.validate()?;
        self.screen_config().validate()?;
        self.upper_bound_config().screen.validate()?;
        self.hyperparams().validate()?;
        if self.eval.offsets.iter().any(|o| !(*o >= 0.0)) {
            return Err(Error::config("eval.offsets must be nonnegative"));
        }
        if self.upper_bound.search_points == 0 {
            return Err(Error::config("upper_bound.search_points must be at least 1"));
        }
        Ok(())
    }

    pub fn spectrum_params(&self) -> SpectrumParams {
        let s = &self.spectrum;
        SpectrumParams {
            wind_speed_u10: s.wind_speed,
            fetch_xf: s.fetch,
            gravity_g: s.gravity,
            gamma: s.gamma,
            sigma_low: s.sigma_low,
            sigma_high: s.sigma_high,
        }
    }

    pub fn synthesis_grid(&self) -> Result<SynthesisGrid> {
        let wp = peak_frequency(&self.spectrum_params())?;
        let s = &self.surface;
        let grid = SynthesisGrid {
            n_omega: s.n_omega,
            omega_min: s.omega_min_factor * wp,
            omega_max: s.omega_max_factor * wp,
            n_theta: s.n_theta,
            wind_bearing: s.wind_bearing_deg.to_radians(),
            amplitude_factor: s.amplitude_factor,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Endpoints on the vertical axis; the environment applies the offset.
    pub fn scenario(&self) -> ChannelScenario {
        let c = &self.channel;
        ChannelScenario {
            tx_pos: Vec3::new(0.0, 0.0, -c.tx_depth),
            rx_pos: Vec3::new(0.0, 0.0, c.rx_height),
            n_water: c.n_water,
            n_air: c.n_air,
            wavelength_lambda: c.wavelength_nm * 1e-9,
            absorption: c.absorption,
            omega_d: c.omega_d_deg.to_radians(),
            omega_a: c.omega_a_deg.to_radians(),
            ..ChannelScenario::default()
        }
    }

    pub fn env_config(&self) -> Result<EnvConfig> {
        let e = &self.env;
        let r = &self.reward;
        Ok(EnvConfig {
            scenario: self.scenario(),
            spectrum: self.spectrum_params(),
            grid: self.synthesis_grid()?,
            sample_time: e.sample_time,
            max_steps: e.max_steps,
            horizontal_offset_frac: e.horizontal_offset,
            reward: RewardCoeffs { gain_g: r.gain, a: r.a, b: r.b, c: r.c, bias_b: r.bias, intensity_floor: r.intensity_floor },
            episode_seed_policy: match e.episode_seeds {
                SeedPolicy::Fixed => EpisodeSeedPolicy::Fixed,
                SeedPolicy::Incrementing => EpisodeSeedPolicy::Incrementing,
            },
            polar_max: e.polar_max_deg.to_radians(),
            flat_surface: e.flat_surface,
        })
    }

    /// Environment used for evaluation episodes (`eval.steps` long).
    pub fn eval_env_config(&self) -> Result<EnvConfig> {
        let mut env = self.env_config()?;
        if self.eval.steps > 0 {
            env.max_steps = self.eval.steps;
        }
        Ok(env)
    }

    pub fn screen_config(&self) -> ScreenConfig {
        let t = &self.tracer;
        ScreenConfig {
            m: t.m,
            fov: t.fov_deg.to_radians(),
            z_c: t.screen_distance,
            refine_factor: t.refine_factor,
            max_iters: t.max_iters,
            convergence_eps: t.convergence_eps,
            emitter_pixels: t.emitter_pixels,
            acceptance_factor: t.acceptance_factor,
            centroid: match t.centroid {
                Centroid::TotalIntensity => CentroidMode::TotalIntensity,
                Centroid::CoordinateSum => CentroidMode::CoordinateSum,
            },
            record_grids: false,
        }
    }

    pub fn upper_bound_config(&self) -> UpperBoundConfig {
        let u = &self.upper_bound;
        UpperBoundConfig {
            screen: ScreenConfig { m: u.m, fov: u.fov_deg.to_radians(), max_iters: u.max_iters, ..self.screen_config() },
            search_half_width: u.search_half_width_deg.to_radians(),
            search_points: u.search_points,
        }
    }

    pub fn hyperparams(&self) -> Hyperparams {
        let a = &self.agent;
        Hyperparams {
            gamma: a.gamma,
            actor_lr: a.actor_lr,
            critic_lr: a.critic_lr,
            batch: a.batch,
            noise_std: a.noise_std,
            noise_decay: a.noise_decay,
            tau: a.tau,
            max_episodes: a.episodes,
            max_steps: a.steps,
            seed: self.seed,
            buffer_capacity: a.buffer_capacity,
            warmup: a.warmup,
            optimizer: match a.optimizer {
                OptimizerName::Sgd => OptimizerKind::Sgd,
                OptimizerName::Adam => OptimizerKind::Adam,
            },
            hidden: a.hidden.clone(),
            action_l2: a.action_l2,
        }
    }

    /// Seeds of the held-out evaluation episodes.
    pub fn eval_seeds(&self) -> Vec<u64> {
        (0..self.eval.episodes as u64).map(|k| self.eval.first_seed.wrapping_add(k)).collect()
    }
}

fn set_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let path: Vec<String> = key.split("__").map(|s| s.to_ascii_lowercase()).collect();
    if path.iter().any(String::is_empty) || path.len() > 2 {
        return Err(Error::config(format!("malformed override variable {ENV_PREFIX}{key}")));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    let mut slot = table;
    for section in &path[..path.len() - 1] {
        slot = slot
            .entry(section.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("{section} is not a section")))?;
    }
    slot.insert(path[path.len() - 1].clone(), value);
    Ok(())
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
