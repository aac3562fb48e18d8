//! Command-line surface of the simulator.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hydrolink_core::bench::{rollout, NoAlignment, Policy, StraightFacing, UpperBound};
use hydrolink_core::env::{episode_surface, reset_with_surface};
use hydrolink_core::optics::{arrival_gain, departure_gain, fresnel_transmittance, path_gain};
use hydrolink_core::spectrum::Jonswap;
use hydrolink_core::surface::synthesize;
use hydrolink_core::tracer::find_beam_direction;
use hydrolink_core::Vec3;
use serde_json::json;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::experiment::{evaluate, offset_sweep, sweep_csv, train, train_csv, PolicySpec};
use crate::io::{fmt_f64, load_policy, save_agent, write_atomic, Table};

#[derive(Debug, Parser)]
#[command(name = "hydrolink", version, about = "Water-to-air optical link simulator with learned beam alignment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration; unset keys come from its preset.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Base seed. For `evaluate` and `sweep` it is the first held-out episode seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    UpperBound,
    StraightFacing,
    NoAlignment,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Directional spectrum on an (ω, θ) grid: omega, theta, density.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        n_omega: usize,
        #[arg(long, default_value_t = 73)]
        n_theta: usize,
    },
    /// Surface heights on a square patch: t, x, y, height.
    Surface {
        #[command(flatten)]
        common: Common,
        /// Half width of the patch, m.
        #[arg(long, default_value_t = 10.0)]
        half_width: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        #[arg(long, default_value_t = 5)]
        frames: usize,
        /// Time between frames, s.
        #[arg(long, default_value_t = 0.5)]
        frame_dt: f64,
    },
    /// Factor-by-factor channel gain sweeps.
    Gains {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 181)]
        points: usize,
    },
    /// Receiver-screen trace of the arriving beam at one instant.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Time, s.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
    },
    /// Per-step log of one scripted or trained policy.
    Rollout {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Baseline::StraightFacing)]
        policy: Baseline,
        /// Trained parameter file; overrides `--policy`.
        #[arg(long, value_name = "FILE")]
        agent: Option<PathBuf>,
    },
    /// Trains the agent and writes its parameters and episode log.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Scores baselines (and optionally a trained agent) on held-out episodes.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        agent: Option<PathBuf>,
    },
    /// Repeats the evaluation over receiver offsets.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        agent: Option<PathBuf>,
        /// Offset fractions, comma separated; defaults to `eval.offsets`.
        #[arg(long, value_delimiter = ',')]
        offsets: Option<Vec<f64>>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Spectrum { common, .. }
            | Command::Surface { common, .. }
            | Command::Gains { common, .. }
            | Command::Trace { common, .. }
            | Command::Rollout { common, .. }
            | Command::Train { common }
            | Command::Evaluate { common, .. }
            | Command::Sweep { common, .. } => common,
        }
    }
}

fn load_config(command: &Command) -> Result<Config> {
    let common = command.common();
    let mut config = Config::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        match command {
            Command::Evaluate { .. } | Command::Sweep { .. } => config.eval.first_seed = seed,
            _ => config.seed = seed,
        }
    }
    config.validate()?;
    Ok(config)
}

/// Runs one command and returns the JSON line describing what was written.
pub fn run(cli: Cli) -> Result<serde_json::Value> {
    let config = load_config(&cli.command)?;
    let out = cli.command.common().out.clone();
    let written = match &cli.command {
        Command::Spectrum { n_omega, n_theta, .. } => spectrum(&config, &out, *n_omega, *n_theta)?,
        Command::Surface { half_width, points, frames, frame_dt, .. } => {
            surface(&config, &out, *half_width, *points, *frames, *frame_dt)?
        }
        Command::Gains { points, .. } => gains(&config, &out, *points)?,
        Command::Trace { time, .. } => trace(&config, &out, *time)?,
        Command::Rollout { policy, agent, .. } => rollout_cmd(&config, &out, *policy, agent.as_deref())?,
        Command::Train { .. } => train_cmd(&config, &out)?,
        Command::Evaluate { agent, .. } => {
            let policies = policy_set(&config, agent.as_deref())?;
            let report = evaluate(&config, &policies, &config.eval_seeds(), config.eval.episodes)?;
            let json = out.join("eval.json");
            let gains = out.join("eval_gains.csv");
            let summary = out.join("eval_summary.csv");
            write_atomic(&json, report.to_json()?.as_bytes())?;
            report.gains_csv()?.write(&gains)?;
            report.summary_csv()?.write(&summary)?;
            vec![json, gains, summary]
        }
        Command::Sweep { agent, offsets, .. } => {
            let policies = policy_set(&config, agent.as_deref())?;
            let offsets = offsets.clone().unwrap_or_else(|| config.eval.offsets.clone());
            let reports = offset_sweep(&config, &offsets, &policies, &config.eval_seeds())?;
            let csv = out.join("sweep.csv");
            let json = out.join("sweep.json");
            sweep_csv(&reports)?.write(&csv)?;
            write_atomic(&json, serde_json::to_string_pretty(&reports)?.as_bytes())?;
            vec![csv, json]
        }
    };
    Ok(json!({ "status": "ok", "written": written }))
}

/// The error line printed on failure.
pub fn error_line(e: &Error) -> String {
    json!({ "status": "error", "kind": e.kind(), "message": e.to_string() }).to_string()
}

fn policy_set(config: &Config, agent: Option<&Path>) -> Result<Vec<PolicySpec>> {
    let mut v = vec![PolicySpec::UpperBound, PolicySpec::StraightFacing, PolicySpec::NoAlignment];
    if let Some(path) = agent {
        v.push(PolicySpec::Actor { name: "ddpg".into(), policy: load_policy(path, config.agent.eval_network)? });
    }
    Ok(v)
}

fn spectrum(config: &Config, out: &Path, n_omega: usize, n_theta: usize) -> Result<Vec<PathBuf>> {
    if n_omega < 2 || n_theta < 2 {
        return Err(Error::config("spectrum grid needs at least 2 points per axis"));
    }
    let grid = config.synthesis_grid()?;
    let s = Jonswap::new(config.spectrum_params())?;
    let mut t = Table::new(&["omega", "theta", "density"])?;
    for i in 0..n_omega {
        let omega = grid.omega_min + (grid.omega_max - grid.omega_min) * i as f64 / (n_omega - 1) as f64;
        for j in 0..n_theta {
            let theta = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * j as f64 / (n_theta - 1) as f64;
            t.row([fmt_f64(omega), fmt_f64(theta), fmt_f64(s.directional_density(omega, theta)?)])?;
        }
    }
    let path = out.join("spectrum.csv");
    t.write(&path)?;
    Ok(vec![path])
}

fn surface(config: &Config, out: &Path, half: f64, points: usize, frames: usize, dt: f64) -> Result<Vec<PathBuf>> {
    if points < 2 || !(half > 0.0) {
        return Err(Error::config("surface patch needs a positive half width and at least 2 points"));
    }
    let sea = synthesize(&config.spectrum_params(), &config.synthesis_grid()?, config.seed)?;
    let axis: Vec<f64> = (0..points).map(|i| -half + 2.0 * half * i as f64 / (points - 1) as f64).collect();
    let eval = sea.grid_evaluator(&axis, &axis);
    let mut heights = vec![0.0; points * points];
    let mut t = Table::new(&["t", "x", "y", "height"])?;
    for f in 0..frames {
        let time = f as f64 * dt;
        eval.heights_at(time, &mut heights)?;
        for (j, y) in axis.iter().enumerate() {
            for (i, x) in axis.iter().enumerate() {
                t.row([fmt_f64(time), fmt_f64(*x), fmt_f64(*y), fmt_f64(heights[j * points + i])])?;
            }
        }
    }
    let path = out.join("surface.csv");
    t.write(&path)?;
    Ok(vec![path])
}

fn gains(config: &Config, out: &Path, points: usize) -> Result<Vec<PathBuf>> {
    if points < 2 {
        return Err(Error::config("gain sweeps need at least 2 points"));
    }
    let sc = config.scenario();
    let mut angles = Table::new(&["angle", "departure_gain", "fresnel_transmittance", "arrival_gain"])?;
    for k in 0..points {
        let a = std::f64::consts::FRAC_PI_2 * k as f64 / (points - 1) as f64;
        angles.row([
            fmt_f64(a),
            fmt_f64(departure_gain(a, &sc)?),
            fmt_f64(fresnel_transmittance(a, sc.n_water, sc.n_air)),
            fmt_f64(arrival_gain(a, &sc)?),
        ])?;
    }
    let mut path_t = Table::new(&["d_water", "d_air", "path_gain"])?;
    for k in 1..=points {
        let d = 2.0 * sc.tx_pos.z.abs() * k as f64 / points as f64;
        path_t.row([fmt_f64(d), fmt_f64(sc.rx_pos.z), fmt_f64(path_gain(d, sc.rx_pos.z, &sc)?)])?;
    }
    let (a, p) = (out.join("gains_angle.csv"), out.join("gains_path.csv"));
    angles.write(&a)?;
    path_t.write(&p)?;
    Ok(vec![a, p])
}

fn trace(config: &Config, out: &Path, time: f64) -> Result<Vec<PathBuf>> {
    let env = config.env_config()?;
    let sea = episode_surface(&env, config.seed)?;
    let mut sc = env.placed_scenario();
    let (_, rx_dir) = hydrolink_core::bench::straight_facing_directions(&sc);
    sc.rx_orientation = hydrolink_core::env::orientation_along(rx_dir);
    let r = find_beam_direction(&sea, &sc, time, &config.screen_config())?;
    let v = |v: Vec3| [v.x, v.y, v.z];
    let doc = json!({
        "time": time,
        "direction_abs": v(r.direction_abs),
        "direction_local": v(r.direction_local),
        "refraction_point": v(r.refraction_point),
        "intensity": r.intensity,
        "converged": r.converged,
        "iterations": r.iterations,
        "history": r.history.iter().map(|h| json!({
            "center": [h.center.0, h.center.1],
            "pitch": h.pitch,
            "displacement": h.displacement,
        })).collect::<Vec<_>>(),
    });
    let path = out.join("trace.json");
    write_atomic(&path, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    Ok(vec![path])
}

fn rollout_cmd(config: &Config, out: &Path, baseline: Baseline, agent: Option<&Path>) -> Result<Vec<PathBuf>> {
    let env = config.eval_env_config()?;
    let mut policy: Box<dyn Policy> = match (agent, baseline) {
        (Some(p), _) => Box::new(load_policy(p, config.agent.eval_network)?),
        (None, Baseline::UpperBound) => Box::new(UpperBound { config: config.upper_bound_config() }),
        (None, Baseline::StraightFacing) => Box::new(StraightFacing),
        (None, Baseline::NoAlignment) => Box::new(NoAlignment),
    };
    let (_, start) = reset_with_surface(&env, Arc::new(episode_surface(&env, config.seed)?));
    let log = rollout(policy.as_mut(), &start, &env)?;
    let mut t = Table::new(&[
        "step", "t", "tx_x", "tx_y", "tx_z", "rx_x", "rx_y", "rx_z", "intensity", "reward", "done",
    ])?;
    for r in &log {
        t.row([
            r.step.to_string(),
            fmt_f64(r.t),
            fmt_f64(r.tx_dir.x),
            fmt_f64(r.tx_dir.y),
            fmt_f64(r.tx_dir.z),
            fmt_f64(r.rx_dir.x),
            fmt_f64(r.rx_dir.y),
            fmt_f64(r.rx_dir.z),
            fmt_f64(r.intensity),
            fmt_f64(r.reward),
            r.done.to_string(),
        ])?;
    }
    let path = out.join("rollout.csv");
    t.write(&path)?;
    Ok(vec![path])
}

fn train_cmd(config: &Config, out: &Path) -> Result<Vec<PathBuf>> {
    let (agent, rows) = train(config, |r| {
        eprintln!("episode {} return {:.4} ({} ms)", r.episode, r.episode_return, r.wall_ms);
    })?;
    let (log, params, echo) = (out.join("train_log.csv"), out.join("agent.bin"), out.join("config.toml"));
    train_csv(&rows)?.write(&log)?;
    save_agent(&params, &agent)?;
    write_atomic(&echo, config.to_toml_string().as_bytes())?;
    Ok(vec![log, params, echo])
}
