//! Seed-matched evaluation, offset sweeps and logged training.

use std::sync::Arc;
use std::time::Instant;

use hydrolink_core::bench::{avg_gain, rollout, sigma_diff_sq, NoAlignment, Policy, StraightFacing, UpperBound};
use hydrolink_core::ddpg::{ActorPolicy, Agent, Trainer};
use hydrolink_core::env::{episode_surface, reset_with_surface, EnvConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, Table};

pub const REPORT_VERSION: u32 = 1;
pub const UPPER_BOUND: &str = "upper_bound";

/// A policy to evaluate; each episode gets a fresh instance.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    UpperBound,
    StraightFacing,
    NoAlignment,
    Actor { name: String, policy: ActorPolicy },
}

impl PolicySpec {
    pub fn name(&self) -> String {
        match self {
            PolicySpec::UpperBound => UPPER_BOUND.into(),
            PolicySpec::StraightFacing => StraightFacing.name(),
            PolicySpec::NoAlignment => NoAlignment.name(),
            PolicySpec::Actor { name, .. } => name.clone(),
        }
    }

    fn instantiate(&self, config: &Config) -> Box<dyn Policy + Send> {
        match self {
            PolicySpec::UpperBound => Box::new(UpperBound { config: config.upper_bound_config() }),
            PolicySpec::StraightFacing => Box::new(StraightFacing),
            PolicySpec::NoAlignment => Box::new(NoAlignment),
            PolicySpec::Actor { policy, .. } => Box::new(policy.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub name: String,
    pub avg_gain: f64,
    /// Variance of the per-step gap to the upper bound, pooled over episodes.
    pub sigma_diff_sq: f64,
    /// Per-episode, per-step channel gain.
    pub gains: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub config: Config,
    pub horizontal_offset: f64,
    pub seeds: Vec<u64>,
    pub steps: usize,
    pub policies: Vec<PolicyReport>,
}

impl EvalReport {
    pub fn policy(&self, name: &str) -> Option<&PolicyReport> {
        self.policies.iter().find(|p| p.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: EvalReport = serde_json::from_str(text)?;
        if r.version != REPORT_VERSION {
            return Err(Error::Core(hydrolink_core::Error::Version { found: r.version, expected: REPORT_VERSION }));
        }
        Ok(r)
    }

    /// Long format: `episode, seed, step, t, policy, gain`.
    pub fn gains_csv(&self) -> Result<Table> {
        let dt = self.config.env.sample_time;
        let mut t = Table::new(&["episode", "seed", "step", "t", "policy", "gain"])?;
        for p in &self.policies {
            for (e, series) in p.gains.iter().enumerate() {
                for (k, g) in series.iter().enumerate() {
                    t.row([
                        e.to_string(),
                        self.seeds[e].to_string(),
                        (k + 1).to_string(),
                        fmt_f64((k + 1) as f64 * dt),
                        p.name.clone(),
                        fmt_f64(*g),
                    ])?;
                }
            }
        }
        Ok(t)
    }

    /// `policy, avg_gain, sigma_diff_sq`.
    pub fn summary_csv(&self) -> Result<Table> {
        let mut t = Table::new(&["policy", "avg_gain", "sigma_diff_sq"])?;
        for p in &self.policies {
            t.row([p.name.clone(), fmt_f64(p.avg_gain), fmt_f64(p.sigma_diff_sq)])?;
        }
        Ok(t)
    }
}

/// Runs every policy on the same episodes (surface seed `seeds[k]` for
/// episode `k`) and scores them against the upper bound.
///
/// Episodes run in parallel; the report does not depend on scheduling.
pub fn evaluate(config: &Config, policies: &[PolicySpec], seeds: &[u64], episodes: usize) -> Result<EvalReport> {
    if seeds.len() != episodes {
        return Err(Error::config(format!("{} seeds given for {episodes} episodes", seeds.len())));
    }
    if episodes == 0 {
        return Err(Error::config("at least one evaluation episode is required"));
    }
    if !policies.iter().any(|p| *p == PolicySpec::UpperBound) {
        return Err(Error::config("evaluation needs the upper-bound policy to score the others"));
    }
    let mut names: Vec<String> = policies.iter().map(PolicySpec::name).collect();
    names.sort();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::config("policy names must be unique"));
    }
    config.validate()?;
    let env = config.eval_env_config()?;

    let per_episode: Vec<Vec<Vec<f64>>> = seeds
        .par_iter()
        .map(|&seed| episode_gains(config, &env, policies, seed))
        .collect::<Result<_>>()?;

    let ub_index = policies.iter().position(|p| *p == PolicySpec::UpperBound).expect("checked above");
    let pooled = |i: usize| per_episode.iter().flat_map(|e| e[i].iter().copied()).collect::<Vec<f64>>();
    let ub = pooled(ub_index);
    let mut reports = Vec::with_capacity(policies.len());
    for (i, spec) in policies.iter().enumerate() {
        let all = pooled(i);
        reports.push(PolicyReport {
            name: spec.name(),
            avg_gain: avg_gain(&all)?,
            sigma_diff_sq: if i == ub_index { 0.0 } else { sigma_diff_sq(&ub, &all)? },
            gains: per_episode.iter().map(|e| e[i].clone()).collect(),
        });
    }
    Ok(EvalReport {
        version: REPORT_VERSION,
        config: config.clone(),
        horizontal_offset: env.horizontal_offset_frac,
        seeds: seeds.to_vec(),
        steps: env.max_steps,
        policies: reports,
    })
}

fn episode_gains(config: &Config, env: &EnvConfig, policies: &[PolicySpec], seed: u64) -> Result<Vec<Vec<f64>>> {
    let surface = Arc::new(episode_surface(env, seed)?);
    let (_, start) = reset_with_surface(env, surface);
    policies
        .iter()
        .map(|spec| {
            let mut policy = spec.instantiate(config);
            Ok(rollout(policy.as_mut(), &start, env)?.iter().map(|r| r.intensity).collect())
        })
        .collect()
}

/// One report per offset fraction.
pub fn offset_sweep(config: &Config, offsets: &[f64], policies: &[PolicySpec], seeds: &[u64]) -> Result<Vec<EvalReport>> {
    if let Some(bad) = offsets.iter().find(|o| !(**o >= 0.0)) {
        return Err(Error::config(format!("offset {bad} is negative")));
    }
    offsets
        .iter()
        .map(|&o| {
            let mut c = config.clone();
            c.env.horizontal_offset = o;
            evaluate(&c, policies, seeds, seeds.len())
        })
        .collect()
}

/// Long format: `offset, policy, avg_gain, sigma_diff_sq`.
pub fn sweep_csv(reports: &[EvalReport]) -> Result<Table> {
    let mut t = Table::new(&["offset", "policy", "avg_gain", "sigma_diff_sq"])?;
    for r in reports {
        for p in &r.policies {
            t.row([fmt_f64(r.horizontal_offset), p.name.clone(), fmt_f64(p.avg_gain), fmt_f64(p.sigma_diff_sq)])?;
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRow {
    pub episode: usize,
    pub episode_return: f64,
    pub steps: usize,
    /// Wall time since training started, ms.
    pub wall_ms: u128,
}

/// Trains on `config` and calls `on_episode` after every episode.
pub fn train(config: &Config, mut on_episode: impl FnMut(&TrainRow)) -> Result<(Agent, Vec<TrainRow>)> {
    config.validate()?;
    let mut trainer = Trainer::new(&config.env_config()?, &config.hyperparams())?;
    let start = Instant::now();
    let mut rows = Vec::with_capacity(config.agent.episodes);
    while !trainer.is_finished() {
        let log = trainer.run_episode()?;
        let row = TrainRow {
            episode: log.episode,
            episode_return: log.episode_return,
            steps: log.steps,
            wall_ms: start.elapsed().as_millis(),
        };
        on_episode(&row);
        rows.push(row);
    }
    Ok((trainer.into_agent(), rows))
}

/// `episode, return, steps, wall_ms`.
pub fn train_csv(rows: &[TrainRow]) -> Result<Table> {
    let mut t = Table::new(&["episode", "return", "steps", "wall_ms"])?;
    for r in rows {
        t.row([r.episode.to_string(), fmt_f64(r.episode_return), r.steps.to_string(), r.wall_ms.to_string()])?;
    }
    Ok(t)
}

/// The actor a trained agent evaluates with, per `agent.eval_network`.
pub fn acting_policy(config: &Config, agent: &Agent) -> ActorPolicy {
    match config.agent.eval_network {
        crate::config::EvalNetwork::Online => agent.policy(),
        crate::config::EvalNetwork::Target => agent.target_policy(),
    }
}
