//! Actor-critic learner and its training loop.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use super::net::{Activation, Gradients, Mlp, Trace};
use super::optim::{Optimizer, OptimizerKind};
use super::replay::{ReplayBuffer, Transition};
use crate::bench::Policy;
use crate::env::{reset, step, ActionVec, EnvConfig, EnvState, Observation, ACTION_DIM, OBS_DIM};
use crate::error::{check, Error, Result};
use crate::optics::{arrival_gain, fresnel_transmittance, path_gain};
use crate::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub batch: usize,
    /// Initial per-component exploration σ in control units.
    pub noise_std: f64,
    /// Multiplier applied to σ after every episode.
    pub noise_decay: f64,
    pub tau: f64,
    pub max_episodes: usize,
    pub max_steps: usize,
    pub seed: u64,
    pub buffer_capacity: usize,
    /// Transitions collected before the first update.
    pub warmup: usize,
    pub optimizer: OptimizerKind,
    pub hidden: Vec<usize>,
    /// Weight of the squared actor pre-activation penalty; keeps the saturating
    /// output layer away from its flat tails.
    pub action_l2: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            gamma: 0.2,
            actor_lr: 1e-3,
            critic_lr: 1e-4,
            batch: 64,
            noise_std: 0.2,
            noise_decay: 0.995,
            tau: 1e-3,
            max_episodes: 500,
            max_steps: 500,
            seed: 0,
            buffer_capacity: 1_000_000,
            warmup: 640,
            optimizer: OptimizerKind::Sgd,
            hidden: vec![64, 64],
            action_l2: 1e-2,
        }
    }
}

impl Hyperparams {
    /// Short-budget schedule (100 episodes of 200 steps) that still beats a
    /// fixed straight-up aim: adaptive moments, a critic that learns faster
    /// than the actor, and exploration that fades within the run.
    pub fn desk_scale() -> Self {
        Hyperparams {
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            noise_decay: 0.98,
            max_episodes: 100,
            max_steps: 200,
            optimizer: OptimizerKind::Adam,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check(self.gamma, (0.0..=1.0).contains(&self.gamma), "gamma")?;
        check(self.actor_lr, self.actor_lr > 0.0, "actor_lr")?;
        check(self.critic_lr, self.critic_lr > 0.0, "critic_lr")?;
        check(self.noise_std, self.noise_std >= 0.0, "noise_std")?;
        check(self.noise_decay, self.noise_decay > 0.0, "noise_decay")?;
        check(self.tau, self.tau > 0.0 && self.tau <= 1.0, "tau")?;
        check(self.action_l2, self.action_l2 >= 0.0, "action_l2")?;
        if self.batch == 0 {
            return Err(Error::config("batch must be at least 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be at least 1"));
        }
        if self.buffer_capacity == 0 {
            return Err(Error::config("buffer_capacity must be at least 1"));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::config("hidden widths must be positive"));
        }
        Ok(())
    }
}

/// Per-entry multipliers applied to observations before they enter a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObsScale(pub [f64; OBS_DIM]);

impl Default for ObsScale {
    fn default() -> Self {
        ObsScale([1.0; OBS_DIM])
    }
}

impl ObsScale {
    /// Intensity relative to the ideal aligned vertical link, time relative to
    /// the horizon; directions pass through.
    pub fn for_env(config: &EnvConfig) -> Self {
        let sc = config.placed_scenario();
        let ideal = path_gain(sc.tx_pos.z.abs(), sc.rx_pos.z, &sc).unwrap_or(1.0)
            * fresnel_transmittance(0.0, sc.n_water, sc.n_air)
            * arrival_gain(0.0, &sc).unwrap_or(1.0);
        let mut s = [1.0; OBS_DIM];
        if ideal > 0.0 && ideal.is_finite() {
            s[6] = 1.0 / ideal;
        }
        s[7] = 1.0 / config.horizon();
        ObsScale(s)
    }

    pub fn apply(&self, obs: &[f64; OBS_DIM]) -> [f64; OBS_DIM] {
        let mut out = *obs;
        for (o, s) in out.iter_mut().zip(&self.0) {
            *o *= s;
        }
        out
    }
}

/// Deterministic actor output plus clamped Gaussian exploration noise.
pub fn act<R: Rng + ?Sized>(actor: &Mlp, scale: &ObsScale, obs: &Observation, noise_std: f64, rng: &mut R) -> Result<ActionVec> {
    let mut a = actor.forward(&scale.apply(&obs.to_array()))?;
    if a.len() != ACTION_DIM {
        return Err(Error::ShapeMismatch { expected: ACTION_DIM, got: a.len() });
    }
    if noise_std > 0.0 {
        for v in &mut a {
            let z: f64 = rng.sample(StandardNormal);
            *v += noise_std * z;
        }
    }
    Ok(ActionVec::from_array(&[a[0], a[1], a[2], a[3]]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub scale: ObsScale,
    pub hp: Hyperparams,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(hp: &Hyperparams, scale: ObsScale, rng: &mut R) -> Result<Self> {
        hp.validate()?;
        let actor = Mlp::random(&sizes(OBS_DIM, &hp.hidden, ACTION_DIM), Activation::Relu, Activation::Tanh, 3e-3, rng)?;
        let critic = Mlp::random(
            &sizes(OBS_DIM + ACTION_DIM, &hp.hidden, 1),
            Activation::Relu,
            Activation::Identity,
            3e-3,
            rng,
        )?;
        Ok(Self::from_networks(actor, critic, scale, hp))
    }

    /// Agent whose targets start as copies of the given networks.
    pub fn from_networks(actor: Mlp, critic: Mlp, scale: ObsScale, hp: &Hyperparams) -> Self {
        Agent {
            actor_opt: Optimizer::new(hp.optimizer, hp.actor_lr, &actor),
            critic_opt: Optimizer::new(hp.optimizer, hp.critic_lr, &critic),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            scale,
            hp: hp.clone(),
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &Observation, noise_std: f64, rng: &mut R) -> Result<ActionVec> {
        act(&self.actor, &self.scale, obs, noise_std, rng)
    }

    pub fn policy(&self) -> ActorPolicy {
        ActorPolicy { actor: self.actor.clone(), scale: self.scale }
    }

    /// Greedy policy from the slowly tracking target actor, a Polyak average of recent online actors.
    pub fn target_policy(&self) -> ActorPolicy {
        ActorPolicy { actor: self.actor_target.clone(), scale: self.scale }
    }

    fn critic_input(&self, obs: &[f64; OBS_DIM], action: &[f64]) -> [f64; OBS_DIM + ACTION_DIM] {
        let s = self.scale.apply(obs);
        let mut x = [0.0; OBS_DIM + ACTION_DIM];
        x[..OBS_DIM].copy_from_slice(&s);
        x[OBS_DIM..].copy_from_slice(action);
        x
    }

    /// Critic target `r + γ·(1 − done)·Q'(s′, μ'(s′))`.
    pub fn td_target(&self, t: &Transition) -> Result<f64> {
        if t.done {
            return Ok(t.reward);
        }
        let next_action = self.actor_target.forward(&self.scale.apply(&t.next_obs))?;
        let q = self.critic_target.forward(&self.critic_input(&t.next_obs, &next_action))?[0];
        Ok(t.reward + self.hp.gamma * q)
    }

    /// One minibatch update of critic, actor and both targets.
    ///
    /// Returns the critic's mean squared TD error and the actor's mean Q
    /// before the respective updates.
    pub fn train_step<R: Rng + ?Sized>(&mut self, buffer: &ReplayBuffer, rng: &mut R) -> Result<(f64, f64)> {
        let b = self.hp.batch;
        if buffer.len() < b {
            return Err(Error::InsufficientData { have: buffer.len(), need: b });
        }
        let batch: Vec<Transition> = (0..b)
            .map(|_| *buffer.get(buffer.sample_index(rng).expect("buffer is non-empty")).expect("index in range"))
            .collect();
        let inv_b = 1.0 / b as f64;

        let mut trace = Trace::default();
        let mut critic_grads = Gradients::zeros_like(&self.critic);
        let mut loss = 0.0;
        for t in &batch {
            let y = self.td_target(t)?;
            self.critic.forward_trace(&self.critic_input(&t.obs, &t.action), &mut trace)?;
            let err = trace.output()[0] - y;
            loss += err * err;
            self.critic.backward(&trace, &[2.0 * err * inv_b], Some(&mut critic_grads), None)?;
        }
        self.critic_opt.step(&mut self.critic, &critic_grads);

        let mut actor_trace = Trace::default();
        let mut actor_grads = Gradients::zeros_like(&self.actor);
        let mut dq = [0.0; OBS_DIM + ACTION_DIM];
        let mut objective = 0.0;
        for t in &batch {
            self.actor.forward_trace(&self.scale.apply(&t.obs), &mut actor_trace)?;
            let action = actor_trace.output().to_vec();
            self.critic.forward_trace(&self.critic_input(&t.obs, &action), &mut trace)?;
            objective += trace.output()[0];
            self.critic.backward(&trace, &[inv_b], None, Some(&mut dq))?;
            let ascend: Vec<f64> = dq[OBS_DIM..].iter().map(|g| -g).collect();
            let shrink: Vec<f64> =
                actor_trace.output_pre_activation().iter().map(|z| 2.0 * self.hp.action_l2 * z * inv_b).collect();
            self.actor.backward_with_pre(&actor_trace, &ascend, Some(&shrink), Some(&mut actor_grads), None)?;
        }
        self.actor_opt.step(&mut self.actor, &actor_grads);

        self.actor_target.soft_update_from(&self.actor, self.hp.tau)?;
        self.critic_target.soft_update_from(&self.critic, self.hp.tau)?;
        Ok((loss * inv_b, objective * inv_b))
    }
}

/// Frozen deterministic actor used for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorPolicy {
    pub actor: Mlp,
    pub scale: ObsScale,
}

impl Policy for ActorPolicy {
    fn name(&self) -> String {
        "ddpg".into()
    }

    fn act(&mut self, observation: &Observation, _: &EnvState, _: &EnvConfig) -> Result<ActionVec> {
        let mut unused = SimRng::seed_from_u64(0);
        act(&self.actor, &self.scale, observation, 0.0, &mut unused)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub episode_return: f64,
    pub steps: usize,
    pub seed: u64,
}

/// Episode-at-a-time DDPG loop over one environment.
pub struct Trainer {
    env: EnvConfig,
    agent: Agent,
    buffer: ReplayBuffer,
    rng: SimRng,
    episode: usize,
    noise: f64,
}

impl Trainer {
    /// The environment horizon is replaced by `hp.max_steps`.
    pub fn new(env: &EnvConfig, hp: &Hyperparams) -> Result<Self> {
        hp.validate()?;
        let env = EnvConfig { max_steps: hp.max_steps, ..*env };
        env.validate()?;
        let mut rng = SimRng::seed_from_u64(hp.seed);
        let agent = Agent::new(hp, ObsScale::for_env(&env), &mut rng)?;
        Ok(Trainer { env, agent, buffer: ReplayBuffer::new(hp.buffer_capacity), rng, episode: 0, noise: hp.noise_std })
    }

    pub fn episodes_done(&self) -> usize {
        self.episode
    }

    pub fn is_finished(&self) -> bool {
        self.episode >= self.agent.hp.max_episodes
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    pub fn into_agent(self) -> Agent {
        self.agent
    }

    pub fn env(&self) -> &EnvConfig {
        &self.env
    }

    pub fn run_episode(&mut self) -> Result<EpisodeLog> {
        let seed = self.env.episode_seed_policy.seed_for(self.agent.hp.seed, self.episode as u64);
        let (mut obs, mut state) = reset(&self.env, seed)?;
        let warm = self.agent.hp.warmup.max(self.agent.hp.batch);
        let mut ret = 0.0;
        let mut steps = 0;
        loop {
            let action = self.agent.act(&obs, self.noise, &mut self.rng)?;
            let out = step(&state, &action, &self.env)?;
            self.buffer.push(Transition {
                obs: obs.to_array(),
                action: action.to_array(),
                reward: out.reward,
                next_obs: out.observation.to_array(),
                done: out.is_done,
            });
            ret += out.reward;
            steps += 1;
            if self.buffer.len() >= warm {
                self.agent.train_step(&self.buffer, &mut self.rng)?;
            }
            obs = out.observation;
            state = out.next_state;
            if out.is_done {
                break;
            }
        }
        let log = EpisodeLog { episode: self.episode, episode_return: ret, steps, seed };
        self.episode += 1;
        self.noise *= self.agent.hp.noise_decay;
        Ok(log)
    }
}

/// Runs `hp.max_episodes` episodes and returns the final agent and its log.
pub fn train(env: &EnvConfig, hp: &Hyperparams) -> Result<(Agent, Vec<EpisodeLog>)> {
    let mut trainer = Trainer::new(env, hp)?;
    let mut log = Vec::with_capacity(hp.max_episodes);
    while !trainer.is_finished() {
        log.push(trainer.run_episode()?);
    }
    Ok((trainer.into_agent(), log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_hp() -> Hyperparams {
        Hyperparams { hidden: vec![16, 16], batch: 8, warmup: 8, max_episodes: 2, max_steps: 10, ..Default::default() }
    }

    fn transition(reward: f64, done: bool) -> Transition {
        let mut obs = [0.0; OBS_DIM];
        obs[2] = 1.0;
        obs[5] = -1.0;
        Transition { obs, action: [0.1, -0.2, 0.3, 0.4], reward, next_obs: obs, done }
    }

    #[test]
    fn insufficient_data() {
        let mut rng = SimRng::seed_from_u64(0);
        let mut agent = Agent::new(&small_hp(), ObsScale::default(), &mut rng).unwrap();
        let buf = ReplayBuffer::new(10);
        assert_eq!(agent.train_step(&buf, &mut rng), Err(Error::InsufficientData { have: 0, need: 8 }));
    }

    #[test]
    fn done_masks_bootstrap() {
        let mut rng = SimRng::seed_from_u64(1);
        let agent = Agent::new(&small_hp(), ObsScale::default(), &mut rng).unwrap();
        assert_eq!(agent.td_target(&transition(1.5, true)).unwrap(), 1.5);
        assert_ne!(agent.td_target(&transition(1.5, false)).unwrap(), 1.5);
    }

    #[test]
    fn full_tau_copies_targets() {
        let hp = Hyperparams { tau: 1.0, ..small_hp() };
        let mut rng = SimRng::seed_from_u64(2);
        let mut agent = Agent::new(&hp, ObsScale::default(), &mut rng).unwrap();
        let mut buf = ReplayBuffer::new(16);
        for k in 0..8 {
            buf.push(transition(k as f64, k % 3 == 0));
        }
        agent.train_step(&buf, &mut rng).unwrap();
        assert_eq!(agent.actor_target, agent.actor);
        assert_eq!(agent.critic_target, agent.critic);
    }

    #[test]
    fn zero_episodes_returns_initial_actor() {
        let env = EnvConfig { flat_surface: true, ..Default::default() };
        let hp = Hyperparams { max_episodes: 0, ..small_hp() };
        let (agent, log) = train(&env, &hp).unwrap();
        assert!(log.is_empty());
        let mut rng = SimRng::seed_from_u64(hp.seed);
        let fresh = Agent::new(&hp, ObsScale::for_env(&EnvConfig { max_steps: hp.max_steps, ..env }), &mut rng).unwrap();
        assert_eq!(agent.actor, fresh.actor);
    }

    #[test]
    fn zero_noise_is_deterministic() {
        let mut rng = SimRng::seed_from_u64(3);
        let agent = Agent::new(&small_hp(), ObsScale::default(), &mut rng).unwrap();
        let obs = Observation::from_array(&[0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 1e-3, 0.5]);
        let a = agent.act(&obs, 0.0, &mut rng).unwrap();
        let b = agent.act(&obs, 0.0, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn critic_regresses_reward_without_bootstrap() {
        let hp = Hyperparams { gamma: 0.0, optimizer: OptimizerKind::Adam, critic_lr: 1e-3, ..small_hp() };
        let mut rng = SimRng::seed_from_u64(4);
        let mut agent = Agent::new(&hp, ObsScale::default(), &mut rng).unwrap();
        let mut buf = ReplayBuffer::new(8);
        let t = transition(0.737, false);
        for _ in 0..8 {
            buf.push(t);
        }
        for _ in 0..3000 {
            agent.train_step(&buf, &mut rng).unwrap();
        }
        let q = agent.critic.forward(&agent.critic_input(&t.obs, &t.action)).unwrap()[0];
        assert!((q - 0.737).abs() < 1e-3, "q = {q}");
    }

    #[test]
    fn large_noise_concentrates_on_the_clamp() {
        let mut rng = SimRng::seed_from_u64(6);
        let agent = Agent::new(&small_hp(), ObsScale::default(), &mut rng).unwrap();
        let obs = Observation::from_array(&[0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 1e-3, 0.5]);
        let n = 10_000;
        let mut edge = 0;
        for _ in 0..n {
            let a = agent.act(&obs, 100.0, &mut rng).unwrap().to_array();
            assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
            edge += a.iter().filter(|v| v.abs() == 1.0).count();
        }
        // P(|N(μ, 100²)| > 1) ≈ 0.992 for |μ| ≪ 1.
        let frac = edge as f64 / (4 * n) as f64;
        assert!(frac > 0.985, "edge fraction {frac}");
    }

    #[test]
    fn training_is_reproducible() {
        let env = EnvConfig { flat_surface: true, ..Default::default() };
        let hp = Hyperparams { max_episodes: 3, ..small_hp() };
        let (a, la) = train(&env, &hp).unwrap();
        let (b, lb) = train(&env, &hp).unwrap();
        assert_eq!(la, lb);
        assert_eq!(a, b);
        let (c, _) = train(&env, &Hyperparams { seed: 9, ..hp }).unwrap();
        assert_ne!(a.actor, c.actor);
    }

    #[test]
    fn learning_raises_returns_on_a_flat_link() {
        let env = EnvConfig { flat_surface: true, ..Default::default() };
        let hp = Hyperparams { max_episodes: 50, max_steps: 100, seed: 3, ..Hyperparams::desk_scale() };
        let (_, log) = train(&env, &hp).unwrap();
        let mean = |s: &[EpisodeLog]| s.iter().map(|l| l.episode_return).sum::<f64>() / s.len() as f64;
        let (first, last) = (mean(&log[..10]), mean(&log[40..]));
        assert!(last > first, "first {first} last {last}");
    }
}
