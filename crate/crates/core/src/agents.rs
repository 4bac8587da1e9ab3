//! Wiring between the learning engines and the simulated system: the
//! centralized agent that decides everything at the BS, the heterogeneous
//! multi-agent system (K device agents plus one BS agent sharing a
//! cooperative reward), and the non-learning baselines.
//!
//! Every run derives its random streams from one master seed, one stream
//! per role (environment, initialization, exploration, replay sampling,
//! scripted policies), so episodes replay bit-identically.

use crate::channel::offload_rate_cap;
use crate::config::{ConfigError, NormBounds, SystemConfig};
use crate::ddpg::{
    explore, map_action, map_multiagent_action, ActionLayout, DdpgAgent, DdpgHyper, SegmentKind,
    Transition,
};
use crate::environment::{
    normalize_state, state_scales_centralized, state_scales_ed, Action, Environment, QueueState,
    SlotOutcome,
};
use crate::lyapunov;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Which policy produces the actions of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Lmiddpg,
    Hma,
    NoIrs,
    RandomPhase,
    AllOffloadRandomPhase,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::NoIrs,
        AlgorithmKind::RandomPhase,
        AlgorithmKind::AllOffloadRandomPhase,
        AlgorithmKind::Lmiddpg,
        AlgorithmKind::Hma,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Lmiddpg => "lmiddpg",
            AlgorithmKind::Hma => "hma",
            AlgorithmKind::NoIrs => "no_irs",
            AlgorithmKind::RandomPhase => "random_phase",
            AlgorithmKind::AllOffloadRandomPhase => "all_offload_random_phase",
        }
    }

    pub fn parse(name: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| ConfigError::Invalid {
                key: "algorithm".to_string(),
                reason: format!(
                    "unknown algorithm {name:?}; expected one of lmiddpg, hma, no_irs, \
                     random_phase, all_offload_random_phase"
                ),
            })
    }

    pub fn is_learning(&self) -> bool {
        !matches!(self, AlgorithmKind::AllOffloadRandomPhase)
    }

    /// The configuration this algorithm's environment and networks see.
    /// Without an IRS the element count is zero, which removes the
    /// cascade, the reflection action and the panel's power draw at once.
    pub fn effective_cfg(&self, cfg: &SystemConfig) -> SystemConfig {
        let mut eff = cfg.clone();
        if matches!(self, AlgorithmKind::NoIrs) {
            eff.system.m = 0;
        }
        eff
    }
}

/// A reproducible named random stream for one (seed, role) pair.
pub fn stream(seed: u64, id: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub mod stream_id {
    pub const ENV: u64 = 1;
    pub const INIT: u64 = 2;
    pub const EXPLORE: u64 = 3;
    pub const SAMPLE: u64 = 4;
    pub const POLICY: u64 = 5;
    pub const EVAL_ENV: u64 = 16;
    pub const EVAL_POLICY: u64 = 17;
    /// Per-agent stream offsets in the multi-agent system.
    pub const AGENT_EXPLORE_BASE: u64 = 300;
    pub const AGENT_SAMPLE_BASE: u64 = 400;
}

/// One slot of the per-episode trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub t: usize,
    pub throughput: f64,
    pub energy: f64,
    pub ratio: f64,
    pub queue_local_mean: f64,
    pub queue_edge: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, Default)]
pub struct EpisodeOptions {
    pub train: bool,
    pub record_outcomes: bool,
    pub record_actions: bool,
}

impl EpisodeOptions {
    pub fn training() -> Self {
        Self {
            train: true,
            ..Self::default()
        }
    }

    pub fn evaluation() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Default)]
pub struct EpisodeMetrics {
    pub sum_reward: f64,
    pub mean_ratio: f64,
    pub final_ratio: f64,
    pub mean_queue_local: f64,
    pub mean_queue_edge: f64,
    pub trace: Vec<SlotRecord>,
    /// Full outcomes and pre-step queues, kept only when requested.
    pub outcomes: Vec<SlotOutcome>,
    pub queues_before: Vec<QueueState>,
    /// Per-agent normalized continuous actions indexed (agent, slot),
    /// kept only when requested.
    pub sub_actions: Vec<Vec<Vec<f64>>>,
}

impl EpisodeMetrics {
    fn finish(mut self) -> Self {
        let t = self.trace.len().max(1) as f64;
        self.mean_ratio = self.trace.iter().map(|r| r.ratio).sum::<f64>() / t;
        self.final_ratio = self.trace.last().map(|r| r.ratio).unwrap_or(0.0);
        self.mean_queue_local = self.trace.iter().map(|r| r.queue_local_mean).sum::<f64>() / t;
        self.mean_queue_edge = self.trace.iter().map(|r| r.queue_edge).sum::<f64>() / t;
        self
    }

    fn push_slot(&mut self, t: usize, outcome: &SlotOutcome, queues: &QueueState, reward: f64) {
        self.sum_reward += reward;
        self.trace.push(SlotRecord {
            t,
            throughput: outcome.throughput,
            energy: outcome.energy,
            ratio: outcome.ratio,
            queue_local_mean: queues.local.iter().sum::<f64>() / queues.local.len() as f64,
            queue_edge: queues.edge,
            reward,
        });
    }
}

/// Scaled training reward for one slot.
fn slot_reward(outcome: &SlotOutcome, queues_before: &QueueState, cfg: &SystemConfig) -> f64 {
    let sample = Environment::drift_sample(
        outcome,
        queues_before,
        cfg.system.v_weight,
        cfg.train.reward_unit,
    );
    lyapunov::reward(&sample) / cfg.train.reward_scale
}

/// The BS-side single agent owning the whole decision set.
#[derive(Debug, Clone)]
pub struct CentralizedAgent {
    pub kind: AlgorithmKind,
    pub ddpg: DdpgAgent,
    pub scales: Vec<f64>,
    /// Configuration as this agent's networks see it.
    pub cfg: SystemConfig,
}

impl CentralizedAgent {
    pub fn new(
        cfg: &SystemConfig,
        kind: AlgorithmKind,
        rng: &mut ChaCha12Rng,
    ) -> Result<Self, ConfigError> {
        assert!(
            matches!(
                kind,
                AlgorithmKind::Lmiddpg | AlgorithmKind::NoIrs | AlgorithmKind::RandomPhase
            ),
            "centralized agent covers the single-actor algorithms"
        );
        let cfg = kind.effective_cfg(cfg);
        let layout = match kind {
            // Random phases are not learned: that run's actor drops the
            // reflection segment. The no-IRS run has no elements at all.
            AlgorithmKind::RandomPhase => centralized_without_theta(&cfg),
            _ => ActionLayout::centralized(&cfg),
        };
        let bounds = NormBounds::resolve(&cfg);
        let scales = state_scales_centralized(&cfg, &bounds)?;
        let state_dim = 4 * cfg.system.k + 3;
        let ddpg = DdpgAgent::new(
            state_dim,
            layout,
            cfg.train.actor_layers,
            cfg.train.critic_layers,
            cfg.train.hidden,
            cfg.train.lr_actor,
            cfg.train.lr_critic,
            cfg.train.buffer_capacity,
            DdpgHyper::from_config(&cfg),
            rng,
        );
        Ok(Self {
            kind,
            ddpg,
            scales,
            cfg,
        })
    }
}

fn centralized_without_theta(cfg: &SystemConfig) -> ActionLayout {
    let mut layout = ActionLayout::centralized(cfg);
    layout
        .segments
        .retain(|s| !matches!(s.kind, SegmentKind::Theta));
    layout
}

/// Uniform reflection controls, redrawn every slot for the random-phase
/// runs and the all-offloading baseline.
fn random_theta(m: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    (0..m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}

/// Fixed non-learning baseline decisions. Only the all-offloading kind is
/// fully scripted; for the other baselines the named restriction applies
/// on top of a learned policy.
pub fn baseline_policy(kind: AlgorithmKind, cfg: &SystemConfig, rng: &mut ChaCha12Rng) -> Action {
    match kind {
        AlgorithmKind::AllOffloadRandomPhase => {
            let k = cfg.system.k;
            Action {
                offload: vec![true; k],
                local: vec![false; k],
                power: vec![cfg.system.rho_max / 2.0; k],
                freq_local: vec![0.0; k],
                freq_edge: cfg.system.f_e_max,
                theta_control: random_theta(cfg.system.m, rng),
            }
        }
        _ => Action::idle(cfg),
    }
}

/// One episode of the centralized loop: observe, explore, map, step,
/// reward, store, update, track.
pub fn run_episode_centralized(
    env: &mut Environment,
    agent: &mut CentralizedAgent,
    env_rng: &mut ChaCha12Rng,
    explore_rng: &mut ChaCha12Rng,
    sample_rng: &mut ChaCha12Rng,
    policy_rng: &mut ChaCha12Rng,
    options: &EpisodeOptions,
) -> EpisodeMetrics {
    let cfg = agent.cfg.clone();
    let slots = cfg.system.slots_per_episode;
    let warmup = cfg.warmup_slots();
    let mut metrics = EpisodeMetrics::default();
    if options.record_actions {
        metrics.sub_actions.push(Vec::new());
    }
    for t in 0..slots {
        let state = normalize_state(&env.observe(), &agent.scales);
        let a_con = if options.train
            && (agent.ddpg.buffer.len() < warmup
                || explore_rng.random::<f64>() < agent.ddpg.hyper.explore_uniform_prob)
        {
            agent.ddpg.layout.uniform(explore_rng)
        } else {
            let greedy = agent.ddpg.act(&state);
            if options.train {
                explore(
                    &greedy,
                    agent.ddpg.hyper.noise_scale,
                    &agent.ddpg.layout,
                    explore_rng,
                )
            } else {
                greedy
            }
        };
        let mut action = map_action(&a_con, &agent.ddpg.layout, &cfg);
        if matches!(agent.kind, AlgorithmKind::RandomPhase) {
            action.theta_control = random_theta(cfg.system.m, policy_rng);
        }

        let queues_before = env.queues.clone();
        let outcome = env.step(&action, env_rng);
        let reward = slot_reward(&outcome, &queues_before, &cfg);
        let next_state = normalize_state(&env.observe(), &agent.scales);

        if options.train {
            agent.ddpg.buffer.push(Transition {
                state,
                action: a_con.clone(),
                reward,
                next_state,
            });
            if t % cfg.train.update_every == 0 {
                for _ in 0..cfg.train.updates_per_step {
                    agent.ddpg.train_step(sample_rng);
                }
            }
        }
        if options.record_actions {
            metrics.sub_actions[0].push(a_con);
        }
        metrics.push_slot(t, &outcome, &env.queues, reward);
        if options.record_outcomes {
            metrics.outcomes.push(outcome);
            metrics.queues_before.push(queues_before);
        }
    }
    if options.train {
        agent.ddpg.decay_noise();
    }
    metrics.finish()
}

/// The K homogeneous device agents plus the heterogeneous BS agent.
#[derive(Debug, Clone)]
pub struct HeteroAgents {
    pub eds: Vec<DdpgAgent>,
    pub bs: DdpgAgent,
    pub ed_scales: Vec<f64>,
    pub bs_scales: Vec<f64>,
    pub cfg: SystemConfig,
}

impl HeteroAgents {
    pub fn new(cfg: &SystemConfig, rng: &mut ChaCha12Rng) -> Result<Self, ConfigError> {
        let cfg = cfg.clone();
        let bounds = NormBounds::resolve(&cfg);
        let ed_scales = state_scales_ed(&bounds)?;
        let bs_scales = state_scales_centralized(&cfg, &bounds)?;
        let hyper = DdpgHyper::from_config(&cfg);
        let eds = (0..cfg.system.k)
            .map(|_| {
                DdpgAgent::new(
                    4,
                    ActionLayout::ed_agent(),
                    cfg.train.actor_layers,
                    cfg.train.critic_layers,
                    cfg.train.hidden,
                    cfg.train.lr_actor,
                    cfg.train.lr_critic,
                    cfg.train.buffer_capacity,
                    hyper.clone(),
                    rng,
                )
            })
            .collect();
        let bs = DdpgAgent::new(
            4 * cfg.system.k + 3,
            ActionLayout::bs_agent(&cfg),
            cfg.train.actor_layers,
            cfg.train.critic_layers,
            cfg.train.hidden,
            cfg.train.lr_actor,
            cfg.train.lr_critic,
            cfg.train.buffer_capacity,
            hyper,
            rng,
        );
        Ok(Self {
            eds,
            bs,
            ed_scales,
            bs_scales,
            cfg,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.eds.len() + 1
    }
}

/// Optional per-agent scripted sub-action sequences used when replaying an
/// episode with some agents replaced by their recordings.
pub type ScriptedActions<'a> = &'a [Option<&'a [Vec<f64>]>];

/// One episode of the multi-agent loop. Agents act in fixed order (EDs
/// 1..K, then the BS); the cooperative reward is computed once per slot
/// and written into every agent's transition; each agent trains on its own
/// buffer. `scripted[i]`, when set, replaces agent i's decisions and
/// leaves its learner state and streams untouched.
pub fn run_episode_multiagent(
    env: &mut Environment,
    agents: &mut HeteroAgents,
    env_rng: &mut ChaCha12Rng,
    explore_rngs: &mut [ChaCha12Rng],
    sample_rngs: &mut [ChaCha12Rng],
    options: &EpisodeOptions,
    scripted: ScriptedActions,
) -> EpisodeMetrics {
    let cfg = agents.cfg.clone();
    let k = cfg.system.k;
    let agent_total = k + 1;
    assert_eq!(explore_rngs.len(), agent_total);
    assert_eq!(sample_rngs.len(), agent_total);
    assert_eq!(scripted.len(), agent_total);
    let slots = cfg.system.slots_per_episode;
    let warmup = cfg.warmup_slots();

    let mut metrics = EpisodeMetrics::default();
    if options.record_actions {
        metrics.sub_actions = vec![Vec::new(); agent_total];
    }
    for t in 0..slots {
        // Everyone observes and decides before the environment moves.
        let mut states: Vec<Vec<f64>> = Vec::with_capacity(agent_total);
        let mut a_cons: Vec<Vec<f64>> = Vec::with_capacity(agent_total);
        for i in 0..agent_total {
            let (agent, state) = if i < k {
                (
                    &agents.eds[i],
                    normalize_state(&env.observe_ed(i), &agents.ed_scales),
                )
            } else {
                (
                    &agents.bs,
                    normalize_state(&env.observe(), &agents.bs_scales),
                )
            };
            let a_con = if let Some(script) = scripted[i] {
                script[t].clone()
            } else if options.train
                && (agent.buffer.len() < warmup
                    || explore_rngs[i].random::<f64>() < agent.hyper.explore_uniform_prob)
            {
                agent.layout.uniform(&mut explore_rngs[i])
            } else {
                let greedy = agent.act(&state);
                if options.train {
                    explore(
                        &greedy,
                        agent.hyper.noise_scale,
                        &agent.layout,
                        &mut explore_rngs[i],
                    )
                } else {
                    greedy
                }
            };
            states.push(state);
            a_cons.push(a_con);
        }
        let action = map_multiagent_action(&a_cons[..k], &a_cons[k], &cfg);

        let queues_before = env.queues.clone();
        let outcome = env.step(&action, env_rng);
        // One cooperative reward, broadcast to every agent.
        let reward = slot_reward(&outcome, &queues_before, &cfg);

        for i in 0..agent_total {
            if scripted[i].is_some() {
                continue;
            }
            let next_state = if i < k {
                normalize_state(&env.observe_ed(i), &agents.ed_scales)
            } else {
                normalize_state(&env.observe(), &agents.bs_scales)
            };
            let agent = if i < k {
                &mut agents.eds[i]
            } else {
                &mut agents.bs
            };
            if options.train {
                agent.buffer.push(Transition {
                    state: states[i].clone(),
                    action: a_cons[i].clone(),
                    reward,
                    next_state,
                });
                if t % cfg.train.update_every == 0 {
                    for _ in 0..cfg.train.updates_per_step {
                        agent.train_step(&mut sample_rngs[i]);
                    }
                }
            }
        }
        if options.record_actions {
            for (i, a_con) in a_cons.iter().enumerate() {
                metrics.sub_actions[i].push(a_con.clone());
            }
        }
        metrics.push_slot(t, &outcome, &env.queues, reward);
        if options.record_outcomes {
            metrics.outcomes.push(outcome);
            metrics.queues_before.push(queues_before);
        }
    }
    if options.train {
        for agent in agents.eds.iter_mut() {
            agent.decay_noise();
        }
        agents.bs.decay_noise();
    }
    metrics.finish()
}

/// One episode of a fully scripted baseline.
pub fn run_episode_fixed(
    env: &mut Environment,
    kind: AlgorithmKind,
    env_rng: &mut ChaCha12Rng,
    policy_rng: &mut ChaCha12Rng,
    options: &EpisodeOptions,
) -> EpisodeMetrics {
    assert!(!kind.is_learning(), "learning algorithms need an agent");
    let cfg = env.cfg().clone();
    let mut metrics = EpisodeMetrics::default();
    for t in 0..cfg.system.slots_per_episode {
        let action = baseline_policy(kind, &cfg, policy_rng);
        let queues_before = env.queues.clone();
        let outcome = env.step(&action, env_rng);
        let reward = slot_reward(&outcome, &queues_before, &cfg);
        metrics.push_slot(t, &outcome, &env.queues, reward);
        if options.record_outcomes {
            metrics.outcomes.push(outcome);
            metrics.queues_before.push(queues_before);
        }
    }
    metrics.finish()
}

/// Worst-case offload rate used by the drift-bound constant, at the
/// configured safety margins.
pub fn configured_rate_cap(cfg: &SystemConfig) -> f64 {
    offload_rate_cap(cfg, cfg.channel.fade_margin, cfg.channel.geometry_margin)
}

// ---------------------------------------------------------------------------
// Checkpoint bundles: one actor file per agent plus a manifest naming the
// agent kinds and dimensions. Execution needs only the actors.
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub algorithm: AlgorithmKind,
    pub seed: u64,
    pub agents: Vec<CheckpointAgent>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckpointAgent {
    pub name: String,
    pub state_dim: usize,
    pub action_dim: usize,
    pub file: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointBundleError {
    #[error("checkpoint io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("network checkpoint error: {0}")]
    Network(#[from] crate::neural::CheckpointError),
    #[error("checkpoint bundle mismatch: {0}")]
    Mismatch(String),
}

fn agent_entry(name: &str, agent: &DdpgAgent, seed: u64) -> (CheckpointAgent, Vec<u8>) {
    (
        CheckpointAgent {
            name: name.to_string(),
            state_dim: agent.actor.input_dim(),
            action_dim: agent.actor.output_dim(),
            file: format!("{name}_seed{seed}.bin"),
        },
        agent.actor.to_bytes(),
    )
}

fn write_bundle(
    dir: &Path,
    algorithm: AlgorithmKind,
    seed: u64,
    entries: Vec<(CheckpointAgent, Vec<u8>)>,
) -> Result<(), CheckpointBundleError> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = CheckpointManifest {
        algorithm,
        seed,
        agents: Vec::new(),
    };
    for (agent, bytes) in entries {
        std::fs::write(dir.join(&agent.file), bytes)?;
        manifest.agents.push(agent);
    }
    let path = dir.join(format!("checkpoint_{}_seed{}.json", algorithm.name(), seed));
    std::fs::write(path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn save_centralized_checkpoint(
    dir: &Path,
    agent: &CentralizedAgent,
    seed: u64,
) -> Result<(), CheckpointBundleError> {
    let name = format!("{}_actor", agent.kind.name());
    write_bundle(
        dir,
        agent.kind,
        seed,
        vec![agent_entry(&name, &agent.ddpg, seed)],
    )
}

pub fn save_hma_checkpoint(
    dir: &Path,
    agents: &HeteroAgents,
    seed: u64,
) -> Result<(), CheckpointBundleError> {
    let mut entries = Vec::new();
    for (i, ed) in agents.eds.iter().enumerate() {
        entries.push(agent_entry(&format!("hma_ed{}_actor", i + 1), ed, seed));
    }
    entries.push(agent_entry("hma_bs_actor", &agents.bs, seed));
    write_bundle(dir, AlgorithmKind::Hma, seed, entries)
}

pub fn load_actor_into(
    dir: &Path,
    manifest: &CheckpointManifest,
    index: usize,
    agent: &mut DdpgAgent,
) -> Result<(), CheckpointBundleError> {
    let entry = &manifest.agents[index];
    let actor = crate::neural::Mlp::load(&dir.join(&entry.file))?;
    if actor.input_dim() != agent.actor.input_dim()
        || actor.output_dim() != agent.actor.output_dim()
    {
        return Err(CheckpointBundleError::Mismatch(format!(
            "agent {} dimensions {}x{} do not match the configuration",
            entry.name,
            actor.input_dim(),
            actor.output_dim()
        )));
    }
    agent.actor = actor;
    Ok(())
}

pub fn load_manifest(
    dir: &Path,
    algorithm: AlgorithmKind,
    seed: u64,
) -> Result<CheckpointManifest, CheckpointBundleError> {
    let path = dir.join(format!("checkpoint_{}_seed{}.json", algorithm.name(), seed));
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
