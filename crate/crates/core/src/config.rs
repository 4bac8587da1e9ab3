//! System configuration: every physical and training constant in one place.
//!
//! Configuration files are TOML with dotted sections (`system.K`,
//! `train.gamma`, ...). Keys follow the symbols used throughout the
//! simulator. Unknown keys are hard errors so experiment typos cannot pass
//! silently. Every run writes a manifest containing the fully resolved
//! configuration, so any output file can be reproduced from its manifest.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config value for {key}: {reason}")]
    Invalid { key: String, reason: String },
}

/// Physical system constants.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    /// Number of end devices sharing the sub-channel.
    #[serde(rename = "K")]
    pub k: usize,
    /// Number of passive reflecting elements on the IRS.
    #[serde(rename = "M")]
    pub m: usize,
    /// Sub-channel bandwidth in Hz.
    #[serde(rename = "B_prime")]
    pub bandwidth: f64,
    /// Slot length in seconds.
    #[serde(rename = "Delta_T")]
    pub slot_seconds: f64,
    /// Slots per episode.
    #[serde(rename = "T")]
    pub slots_per_episode: usize,
    /// Receiver noise power in W over the sub-channel
    /// (-174 dBm/Hz thermal floor integrated over B').
    pub sigma2: f64,
    /// Maximum ED transmit power in W.
    pub rho_max: f64,
    /// Maximum ED CPU frequency in Hz.
    pub f_l_max: f64,
    /// Maximum edge-server CPU frequency in Hz.
    pub f_e_max: f64,
    /// Effective capacitance coefficient of the ED processor chips.
    pub pi_l: f64,
    /// Effective capacitance coefficient of the edge processor chip.
    pub pi_e: f64,
    /// CPU cycles per bit on the EDs.
    pub c_k: f64,
    /// CPU cycles per bit on the edge server.
    pub c_0: f64,
    /// Per-element IRS power consumption in W.
    pub varpi: f64,
    /// Task-generation probability per ED per slot.
    pub zeta_k: f64,
    /// Task size in bits.
    #[serde(rename = "A_k")]
    pub task_bits: f64,
    /// Lyapunov drift-vs-penalty weight.
    #[serde(rename = "V")]
    pub v_weight: f64,
    /// Charge the IRS static power every slot instead of only on slots
    /// with at least one active offloader.
    pub irs_always_on: bool,
    /// Count edge throughput as min(f_e/c_0, queue/slot) instead of the
    /// raw processing capacity f_e/c_0.
    pub edge_rate_clamped: bool,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            k: 4,
            m: 16,
            bandwidth: 2.0e6,
            slot_seconds: 1.0,
            slots_per_episode: 300,
            sigma2: 7.943282347242822e-15,
            rho_max: 1.0,
            f_l_max: 0.3e9,
            f_e_max: 1.26e9,
            pi_l: 1e-26,
            pi_e: 1e-27,
            c_k: 100.0,
            c_0: 100.0,
            varpi: 0.001,
            zeta_k: 0.9,
            task_bits: 3.0e6,
            v_weight: 10.0,
            irs_always_on: false,
            edge_rate_clamped: false,
        }
    }
}

/// Static node placement in meters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub bs: [f64; 2],
    pub irs: [f64; 2],
    /// Initial ED positions; length must equal `system.K`.
    pub eds: Vec<[f64; 2]>,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            bs: [0.0, 0.0],
            irs: [50.0, 10.0],
            eds: vec![[73.0, 1.0], [70.0, 0.0], [65.0, -5.0], [70.0, 5.0]],
        }
    }
}

/// Gauss-Markov mobility parameters, per axis.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MobilitySection {
    /// Memory level in [0, 1].
    pub alpha: [f64; 2],
    /// Asymptotic mean velocity in m/s.
    pub v_bar: [f64; 2],
    /// Asymptotic standard deviation of the velocity.
    pub kappa_bar: [f64; 2],
    /// Standard deviation of the driving Gaussian process.
    pub varsigma: f64,
}

impl Default for MobilitySection {
    fn default() -> Self {
        Self {
            alpha: [0.4, 0.4],
            v_bar: [1.0, 1.0],
            kappa_bar: [2.0, 2.0],
            varsigma: 1.0,
        }
    }
}

/// Fading and path-loss model parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    /// Rician factor of the IRS-BS link. `inf` keeps only the LoS part.
    pub delta: f64,
    /// Path-loss reference gain at 1 m.
    pub ref_gain: f64,
    /// Path-loss exponent of the ED-IRS links.
    pub exp_di: f64,
    /// Path-loss exponent of the ED-BS links.
    pub exp_db: f64,
    /// Path-loss exponent of the IRS-BS link.
    pub exp_ib: f64,
    /// Amplitude headroom multiplier on the random fading components when
    /// forming the worst-case offload rate cap.
    pub fade_margin: f64,
    /// Extra amplitude headroom for EDs wandering closer than the initial
    /// geometry when forming the worst-case offload rate cap.
    pub geometry_margin: f64,
    /// Optional transmit-power quantizer level count; 0 keeps the
    /// continuous range [0, rho_max].
    pub power_levels: usize,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            delta: 1.0,
            ref_gain: 1e-3,
            exp_di: 2.0,
            exp_db: 4.0,
            exp_ib: 2.2,
            fade_margin: 8.0,
            geometry_margin: 2.0,
            power_levels: 0,
        }
    }
}

/// Learning hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    /// Discount factor.
    pub gamma: f64,
    /// Training episodes per run.
    #[serde(rename = "E")]
    pub episodes: usize,
    /// Replay buffer capacity.
    #[serde(rename = "M_buf")]
    pub buffer_capacity: usize,
    /// Mini-batch size.
    #[serde(rename = "B_batch")]
    pub batch: usize,
    /// Target-network tracking rate.
    pub varsigma: f64,
    /// Actor learning rate.
    pub lr_actor: f64,
    /// Critic learning rate.
    pub lr_critic: f64,
    /// Actor layer count (input and output layers included).
    #[serde(rename = "L_ac")]
    pub actor_layers: usize,
    /// Critic layer count (input and output layers included).
    #[serde(rename = "L_cr")]
    pub critic_layers: usize,
    /// Hidden width of every interior layer.
    pub hidden: usize,
    /// Initial exploration noise scale on the normalized action.
    pub noise_init: f64,
    /// Geometric per-episode decay of the noise scale.
    pub noise_decay: f64,
    /// Noise scale floor.
    pub noise_floor: f64,
    /// Per-slot probability of replacing the policy action with a uniform
    /// draw during training; keeps the replay buffer covering the whole
    /// action box so the critic stays calibrated away from the current
    /// policy.
    pub explore_uniform_prob: f64,
    /// Run one critic/actor update every this many slots.
    pub update_every: usize,
    /// Gradient updates per training slot once the warmup has filled.
    pub updates_per_step: usize,
    /// Pure-exploration slots before training; 0 means one batch worth.
    pub warmup: usize,
    /// Bits per reward accounting unit; queue and rate terms of the reward
    /// are expressed in this unit so the V weight balances the two terms.
    pub reward_unit: f64,
    /// Divisor applied to the reward before storage and training.
    pub reward_scale: f64,
    /// Initial value of the running ratio used by the training reward, in
    /// bits/J; 0 derives the all-local computing efficiency
    /// `1 / (c_k pi_l f_l_max^2)`. Evaluation always starts from zero.
    pub ratio_warm_start: f64,
    /// Weight of the warm start, in equivalent watt-slots.
    pub ratio_warm_slots: f64,
    /// L2 pull applied to the actor parameters during its update; keeps
    /// the bounded output heads away from their saturation rails.
    pub actor_weight_decay: f64,
    /// Global-norm gradient clip applied to each update; 0 disables.
    pub grad_clip: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            episodes: 150,
            buffer_capacity: 5000,
            batch: 128,
            varsigma: 0.01,
            lr_actor: 1e-4,
            lr_critic: 3e-4,
            actor_layers: 5,
            critic_layers: 5,
            hidden: 256,
            noise_init: 0.3,
            noise_decay: 0.995,
            noise_floor: 0.01,
            explore_uniform_prob: 0.1,
            update_every: 1,
            updates_per_step: 1,
            warmup: 0,
            reward_unit: 1e6,
            reward_scale: 100.0,
            ratio_warm_start: 0.0,
            ratio_warm_slots: 1000.0,
            actor_weight_decay: 1e-3,
            grad_clip: 0.0,
        }
    }
}

/// State-normalization bounds; zero means "derive from the other sections".
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NormSection {
    /// Queue bound in bits; 0 derives 20 * A_k.
    pub queue_bound: f64,
    /// Offload-rate bound in bits/s; 0 derives the best-case single-user
    /// rate at the initial geometry.
    pub rate_bound: f64,
    /// Positions are scaled by this half-width in meters.
    pub arena_half_width: f64,
}

impl Default for NormSection {
    fn default() -> Self {
        Self {
            queue_bound: 0.0,
            rate_bound: 0.0,
            arena_half_width: 750.0,
        }
    }
}

/// The complete configuration consumed by every module.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub system: SystemSection,
    pub geometry: GeometrySection,
    pub mobility: MobilitySection,
    pub channel: ChannelSection,
    pub train: TrainSection,
    pub norm: NormSection,
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: SystemConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, reason: &str| {
            Err(ConfigError::Invalid {
                key: key.to_string(),
                reason: reason.to_string(),
            })
        };
        let s = &self.system;
        if s.k == 0 {
            return invalid("system.K", "at least one ED is required");
        }
        if !(0.0..=1.0).contains(&s.zeta_k) {
            return invalid("system.zeta_k", "probability must lie in [0, 1]");
        }
        for (key, v) in [
            ("system.B_prime", s.bandwidth),
            ("system.Delta_T", s.slot_seconds),
            ("system.sigma2", s.sigma2),
            ("system.rho_max", s.rho_max),
        ] {
            if !(v > 0.0) {
                return invalid(key, "must be strictly positive");
            }
        }
        for (key, v) in [
            ("system.f_l_max", s.f_l_max),
            ("system.f_e_max", s.f_e_max),
            ("system.pi_l", s.pi_l),
            ("system.pi_e", s.pi_e),
            ("system.c_k", s.c_k),
            ("system.c_0", s.c_0),
            ("system.varpi", s.varpi),
            ("system.A_k", s.task_bits),
            ("system.V", s.v_weight),
        ] {
            if v < 0.0 || !v.is_finite() {
                return invalid(key, "must be finite and non-negative");
            }
        }
        if self.geometry.eds.len() != s.k {
            return invalid("geometry.eds", "length must equal system.K");
        }
        for ed in &self.geometry.eds {
            for anchor in [self.geometry.bs, self.geometry.irs] {
                if ed[0] == anchor[0] && ed[1] == anchor[1] {
                    return invalid("geometry.eds", "ED coincides with the BS or IRS");
                }
            }
        }
        for (axis, a) in self.mobility.alpha.iter().enumerate() {
            if !(0.0..=1.0).contains(a) {
                return invalid(
                    if axis == 0 {
                        "mobility.alpha[0]"
                    } else {
                        "mobility.alpha[1]"
                    },
                    "memory level must lie in [0, 1]",
                );
            }
        }
        let t = &self.train;
        if !(0.0..=1.0).contains(&t.gamma) {
            return invalid("train.gamma", "discount must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&t.varsigma) {
            return invalid("train.varsigma", "tracking rate must lie in [0, 1]");
        }
        if t.batch == 0 || t.buffer_capacity < t.batch {
            return invalid("train.B_batch", "batch must be positive and fit the buffer");
        }
        if t.actor_layers < 2 || t.critic_layers < 2 {
            return invalid("train.L_ac", "networks need at least input and output layers");
        }
        if t.update_every == 0 || t.updates_per_step == 0 {
            return invalid("train.update_every", "update cadence must be at least 1");
        }
        if !(t.reward_unit > 0.0) || !(t.reward_scale > 0.0) {
            return invalid("train.reward_unit", "reward scaling must be positive");
        }
        if self.norm.arena_half_width <= 0.0 {
            return invalid("norm.arena_half_width", "must be strictly positive");
        }
        Ok(())
    }

    /// Effective warmup slot count.
    pub fn warmup_slots(&self) -> usize {
        if self.train.warmup == 0 {
            self.train.batch
        } else {
            self.train.warmup
        }
    }

    /// Bits an ED can process locally in one slot at frequency `f`.
    pub fn local_bits_per_slot(&self, f: f64) -> f64 {
        f * self.system.slot_seconds / self.system.c_k
    }

    /// Bits the edge server can process in one slot at frequency `f`.
    pub fn edge_bits_per_slot(&self, f: f64) -> f64 {
        f * self.system.slot_seconds / self.system.c_0
    }

    /// Ratio prior for the training reward: configured value, or the
    /// all-local computing efficiency when unset.
    pub fn ratio_prior(&self) -> f64 {
        if self.train.ratio_warm_start > 0.0 {
            self.train.ratio_warm_start
        } else {
            1.0 / (self.system.c_k * self.system.pi_l * self.system.f_l_max.powi(2))
        }
    }
}

/// Resolved per-entry normalization scales.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NormBounds {
    pub queue: f64,
    pub rate: f64,
    pub position: f64,
}

impl NormBounds {
    pub fn resolve(cfg: &SystemConfig) -> Self {
        let queue = if cfg.norm.queue_bound > 0.0 {
            cfg.norm.queue_bound
        } else {
            20.0 * cfg.system.task_bits
        };
        let rate = if cfg.norm.rate_bound > 0.0 {
            cfg.norm.rate_bound
        } else {
            crate::channel::offload_rate_cap(cfg, 1.0, 1.0)
        };
        Self {
            queue,
            rate,
            position: cfg.norm.arena_half_width,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = SystemConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back = SystemConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn default_values_match_reference_table() {
        let cfg = SystemConfig::default();
        assert_eq!(cfg.system.k, 4);
        assert_eq!(cfg.system.m, 16);
        assert_eq!(cfg.system.slots_per_episode, 300);
        assert_eq!(cfg.train.episodes, 150);
        assert_eq!(cfg.train.buffer_capacity, 5000);
        assert_eq!(cfg.train.batch, 128);
        assert_eq!(cfg.system.task_bits, 3.0e6);
        assert_eq!(cfg.system.zeta_k, 0.9);
        assert_eq!(cfg.system.v_weight, 10.0);
        assert_eq!(cfg.train.varsigma, 0.01);
        assert_eq!(cfg.train.lr_actor, 1e-4);
        assert_eq!(cfg.train.lr_critic, 3e-4);
        assert_eq!(cfg.train.gamma, 0.99);
        assert_eq!(cfg.train.hidden, 256);
        assert_eq!(cfg.train.actor_layers, 5);
    }

    #[test]
    fn unknown_key_is_named_in_the_error() {
        let err = SystemConfig::from_toml_str("[system]\nKK = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("KK"), "diagnostic should name the key: {msg}");
    }

    #[test]
    fn partial_override_keeps_other_defaults() {
        let cfg = SystemConfig::from_toml_str("[system]\nK = 2\n[geometry]\neds = [[73.0, 1.0], [70.0, 0.0]]\n").unwrap();
        assert_eq!(cfg.system.k, 2);
        assert_eq!(cfg.system.m, 16);
    }

    #[test]
    fn geometry_length_mismatch_rejected() {
        let err = SystemConfig::from_toml_str("[system]\nK = 3\n").unwrap_err();
        assert!(err.to_string().contains("geometry.eds"));
    }
}
