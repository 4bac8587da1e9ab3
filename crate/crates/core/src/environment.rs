//! Per-slot simulation of the task-offloading system: Bernoulli task
//! arrivals, local/edge/offload processing, queue dynamics, energy
//! accounting and the running energy-efficiency ratio.
//!
//! Queue accounting is exact: each local queue loses at most what it
//! holds, offloaded bits are clamped by the queue before local service
//! takes the remainder, and the edge queue receives exactly the bits that
//! left the local queues by offloading. Energy is charged on decisions,
//! not on processed bits, so over-provisioned frequencies waste energy and
//! the policy pays for it.

use crate::channel::{
    combine_with_irs, draw_channels, mobility_step, noma_rates, ChannelRealization, MobilityState,
};
use crate::config::{ConfigError, NormBounds, SystemConfig};
use crate::lyapunov::DriftSample;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ActionError {
    #[error("{field} must have length {expected}, got {got}")]
    Length {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field}[{index}] = {value} outside [0, {max}]")]
    Range {
        field: &'static str,
        index: usize,
        value: f64,
        max: f64,
    },
    #[error("theta_control[{0}] = {1} outside [-1, 1]")]
    Theta(usize, f64),
}

/// K local queues plus the edge queue, all in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    pub local: Vec<f64>,
    pub edge: f64,
}

impl QueueState {
    pub fn zeros(k: usize) -> Self {
        Self {
            local: vec![0.0; k],
            edge: 0.0,
        }
    }

    /// Local queues followed by the edge queue, the stacked vector the
    /// Lyapunov machinery works on.
    pub fn stacked(&self) -> Vec<f64> {
        let mut q = self.local.clone();
        q.push(self.edge);
        q
    }
}

/// The full mixed-integer decision set for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub offload: Vec<bool>,
    pub local: Vec<bool>,
    /// Transmit power per ED in W.
    pub power: Vec<f64>,
    /// ED CPU frequency in Hz.
    pub freq_local: Vec<f64>,
    /// Edge CPU frequency in Hz.
    pub freq_edge: f64,
    /// Reflection controls in [-1, 1], one per IRS element.
    pub theta_control: Vec<f64>,
}

impl Action {
    pub fn new(
        offload: Vec<bool>,
        local: Vec<bool>,
        power: Vec<f64>,
        freq_local: Vec<f64>,
        freq_edge: f64,
        theta_control: Vec<f64>,
        cfg: &SystemConfig,
    ) -> Result<Self, ActionError> {
        let action = Self {
            offload,
            local,
            power,
            freq_local,
            freq_edge,
            theta_control,
        };
        action.validate(cfg)?;
        Ok(action)
    }

    /// The all-off action: nothing processed, nothing transmitted.
    pub fn idle(cfg: &SystemConfig) -> Self {
        let k = cfg.system.k;
        Self {
            offload: vec![false; k],
            local: vec![false; k],
            power: vec![0.0; k],
            freq_local: vec![0.0; k],
            freq_edge: 0.0,
            theta_control: vec![0.0; cfg.system.m],
        }
    }

    /// Uniformly random feasible action, used by fuzz suites.
    pub fn random_feasible<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Self {
        let k = cfg.system.k;
        Self {
            offload: (0..k).map(|_| rng.random::<f64>() < 0.5).collect(),
            local: (0..k).map(|_| rng.random::<f64>() < 0.5).collect(),
            power: (0..k)
                .map(|_| rng.random::<f64>() * cfg.system.rho_max)
                .collect(),
            freq_local: (0..k)
                .map(|_| rng.random::<f64>() * cfg.system.f_l_max)
                .collect(),
            freq_edge: rng.random::<f64>() * cfg.system.f_e_max,
            theta_control: (0..cfg.system.m)
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect(),
        }
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<(), ActionError> {
        let k = cfg.system.k;
        let check_len = |field: &'static str, got: usize, expected: usize| {
            if got != expected {
                Err(ActionError::Length {
                    field,
                    expected,
                    got,
                })
            } else {
                Ok(())
            }
        };
        check_len("offload", self.offload.len(), k)?;
        check_len("local", self.local.len(), k)?;
        check_len("power", self.power.len(), k)?;
        check_len("freq_local", self.freq_local.len(), k)?;
        check_len("theta_control", self.theta_control.len(), cfg.system.m)?;
        let check_range =
            |field: &'static str, index: usize, value: f64, max: f64| -> Result<(), ActionError> {
                if !(0.0..=max).contains(&value) {
                    Err(ActionError::Range {
                        field,
                        index,
                        value,
                        max,
                    })
                } else {
                    Ok(())
                }
            };
        for (i, &p) in self.power.iter().enumerate() {
            check_range("power", i, p, cfg.system.rho_max)?;
        }
        for (i, &f) in self.freq_local.iter().enumerate() {
            check_range("freq_local", i, f, cfg.system.f_l_max)?;
        }
        check_range("freq_edge", 0, self.freq_edge, cfg.system.f_e_max)?;
        for (i, &x) in self.theta_control.iter().enumerate() {
            if !(-1.0..=1.0).contains(&x) {
                return Err(ActionError::Theta(i, x));
            }
        }
        Ok(())
    }

    /// EDs that actually transmit this slot.
    pub fn active_offloaders(&self) -> impl Iterator<Item = usize> + '_ {
        self.offload
            .iter()
            .zip(&self.power)
            .enumerate()
            .filter(|(_, (&o, &p))| o && p > 0.0)
            .map(|(k, _)| k)
    }
}

/// Everything measured during one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    /// Offload rate per ED in bits/s after the queue clamp.
    pub rates_offload: Vec<f64>,
    /// Total local computing rate in bits/s.
    pub rate_local_total: f64,
    /// Edge computing rate in bits/s.
    pub rate_edge: f64,
    /// Local, edge and offload power draw in W.
    pub energy_local: f64,
    pub energy_edge: f64,
    pub energy_offload: f64,
    /// System throughput R(t) = R_l + R_e + R_o.
    pub throughput: f64,
    /// System energy E(t) = E_l + E_e + E_o.
    pub energy: f64,
    /// Running bits-per-joule ratio including this slot.
    pub ratio: f64,
    /// Running ratio accumulated before this slot; the reward's penalty
    /// term uses this value, which is zero at t = 0.
    pub ratio_at_slot_start: f64,
    /// Bits that entered each queue (K locals then edge).
    pub queue_in: Vec<f64>,
    /// Bits that left each queue (K locals then edge).
    pub queue_out: Vec<f64>,
}

/// Bernoulli task arrivals: `A_k` bits with probability `zeta_k`, else 0.
pub fn generate_tasks<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Vec<f64> {
    (0..cfg.system.k)
        .map(|_| {
            if rng.random::<f64>() < cfg.system.zeta_k {
                cfg.system.task_bits
            } else {
                0.0
            }
        })
        .collect()
}

/// Local computing rate and power per ED, gated by the local decision.
pub fn local_compute(action: &Action, cfg: &SystemConfig) -> (Vec<f64>, Vec<f64>) {
    let mut rates = vec![0.0; cfg.system.k];
    let mut energies = vec![0.0; cfg.system.k];
    for k in 0..cfg.system.k {
        if action.local[k] {
            let f = action.freq_local[k];
            rates[k] = f / cfg.system.c_k;
            energies[k] = cfg.system.pi_l * f.powi(3);
        }
    }
    (rates, energies)
}

/// Edge computing rate and power.
pub fn edge_compute(action: &Action, cfg: &SystemConfig) -> (f64, f64) {
    let f = action.freq_edge;
    (f / cfg.system.c_0, cfg.system.pi_e * f.powi(3))
}

/// Offload rates (queue-clamped NOMA rates) and transmission power draw.
/// The IRS static power `M varpi` is charged on slots with at least one
/// active offloader, or every slot when `irs_always_on` is set.
pub fn offload_transmit(
    action: &Action,
    queues: &QueueState,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
) -> (Vec<f64>, f64) {
    let k_total = cfg.system.k;
    let effective: Vec<f64> = (0..k_total)
        .map(|k| if action.offload[k] { action.power[k] } else { 0.0 })
        .collect();
    let noma = noma_rates(ch, &effective, cfg).expect("powers validated by Action");
    let dt = cfg.system.slot_seconds;
    let mut rates = vec![0.0; k_total];
    let mut power_sum = 0.0;
    let mut any_active = false;
    for k in action.active_offloaders() {
        rates[k] = noma[k].min(queues.local[k] / dt);
        power_sum += action.power[k];
        any_active = true;
    }
    let irs_power = if any_active || cfg.system.irs_always_on {
        cfg.system.m as f64 * cfg.system.varpi
    } else {
        0.0
    };
    (rates, power_sum + irs_power)
}

/// Centralized state vector: previous-slot offload throughput, current
/// and previous stacked queues, then ED positions. Dimension 4K + 3.
pub fn observe_centralized(
    prev_offload_rate: f64,
    queues: &QueueState,
    prev_queues: &QueueState,
    mob: &MobilityState,
) -> Vec<f64> {
    let mut s = Vec::with_capacity(4 * queues.local.len() + 3);
    s.push(prev_offload_rate);
    s.extend(queues.stacked());
    s.extend(prev_queues.stacked());
    for p in &mob.position {
        s.push(p[0]);
        s.push(p[1]);
    }
    s
}

/// Per-ED state vector: own queue now and last slot, own position.
pub fn observe_ed(
    k: usize,
    queues: &QueueState,
    prev_queues: &QueueState,
    mob: &MobilityState,
) -> Vec<f64> {
    vec![
        queues.local[k],
        prev_queues.local[k],
        mob.position[k][0],
        mob.position[k][1],
    ]
}

/// Divide each raw entry by its scale. Queue and rate entries land in
/// [0, 1] under nominal conditions, positions in [-1, 1].
pub fn normalize_state(raw: &[f64], scales: &[f64]) -> Vec<f64> {
    assert_eq!(raw.len(), scales.len(), "one scale per state entry");
    raw.iter()
        .zip(scales)
        .map(|(x, s)| {
            assert!(*s != 0.0, "zero normalization bound");
            x / s
        })
        .collect()
}

fn checked_scales(scales: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
    if scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(ConfigError::Invalid {
            key: "norm".to_string(),
            reason: "normalization bounds must be finite and positive".to_string(),
        });
    }
    Ok(scales)
}

/// Per-entry scales for the centralized state layout.
pub fn state_scales_centralized(
    cfg: &SystemConfig,
    bounds: &NormBounds,
) -> Result<Vec<f64>, ConfigError> {
    let k = cfg.system.k;
    let mut s = Vec::with_capacity(4 * k + 3);
    s.push(bounds.rate * k as f64);
    s.extend(std::iter::repeat(bounds.queue).take(2 * (k + 1)));
    s.extend(std::iter::repeat(bounds.position).take(2 * k));
    checked_scales(s)
}

/// Per-entry scales for the per-ED state layout.
pub fn state_scales_ed(bounds: &NormBounds) -> Result<Vec<f64>, ConfigError> {
    checked_scales(vec![
        bounds.queue,
        bounds.queue,
        bounds.position,
        bounds.position,
    ])
}

/// Owns the mutable simulation state for one run of episodes.
#[derive(Debug, Clone)]
pub struct Environment {
    cfg: SystemConfig,
    pub queues: QueueState,
    pub prev_queues: QueueState,
    pub mobility: MobilityState,
    prev_offload_rate: f64,
    /// Run-cumulative sums feeding the reward's running ratio.
    cum_rate: f64,
    cum_energy: f64,
    /// Episode-cumulative sums feeding the reported trace ratio.
    ep_rate: f64,
    ep_energy: f64,
    slot: usize,
    pub theta_saturations: usize,
}

impl Environment {
    pub fn new(cfg: SystemConfig) -> Self {
        let queues = QueueState::zeros(cfg.system.k);
        let mobility = MobilityState::initial(&cfg);
        Self {
            cfg,
            prev_queues: queues.clone(),
            queues,
            mobility,
            prev_offload_rate: 0.0,
            cum_rate: 0.0,
            cum_energy: 0.0,
            ep_rate: 0.0,
            ep_energy: 0.0,
            slot: 0,
            theta_saturations: 0,
        }
    }

    pub fn cfg(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    /// Cumulative energy efficiency so far, zero before any energy burn.
    pub fn running_ratio(&self) -> f64 {
        if self.cum_energy > 0.0 {
            self.cum_rate / self.cum_energy
        } else {
            0.0
        }
    }

    pub fn reset(&mut self) {
        self.reset_carry_ratio();
        self.cum_rate = 0.0;
        self.cum_energy = 0.0;
    }

    /// Seed the run-cumulative sums so the reward's running ratio starts
    /// at `ratio` with the inertia of `weight_slots` watt-slots instead of
    /// at zero. Training uses this once per run; evaluation never does.
    pub fn seed_ratio_prior(&mut self, ratio: f64, weight_slots: f64) {
        self.cum_energy = weight_slots.max(0.0);
        self.cum_rate = ratio.max(0.0) * self.cum_energy;
    }

    /// Episode reset that keeps the run-cumulative rate and energy sums,
    /// so the running ratio seen by the training reward evolves over the
    /// whole run instead of restarting from zero each episode. The
    /// reported per-episode ratio always restarts: it comes from the
    /// episode's own sums.
    pub fn reset_carry_ratio(&mut self) {
        self.queues = QueueState::zeros(self.cfg.system.k);
        self.prev_queues = self.queues.clone();
        self.mobility = MobilityState::initial(&self.cfg);
        self.prev_offload_rate = 0.0;
        self.ep_rate = 0.0;
        self.ep_energy = 0.0;
        self.slot = 0;
        self.theta_saturations = 0;
    }

    pub fn observe(&self) -> Vec<f64> {
        observe_centralized(
            self.prev_offload_rate,
            &self.queues,
            &self.prev_queues,
            &self.mobility,
        )
    }

    pub fn observe_ed(&self, k: usize) -> Vec<f64> {
        observe_ed(k, &self.queues, &self.prev_queues, &self.mobility)
    }

    /// Advance one slot: move the EDs, redraw fading, apply the action,
    /// update both queue tiers and the running ratio.
    pub fn step<R: Rng + ?Sized>(&mut self, action: &Action, rng: &mut R) -> SlotOutcome {
        debug_assert!(action.validate(&self.cfg).is_ok());
        let cfg = &self.cfg;
        let k_total = cfg.system.k;
        let dt = cfg.system.slot_seconds;

        self.mobility = mobility_step(&self.mobility, cfg, rng);
        let drawn = draw_channels(&self.mobility, cfg, rng);
        let ch = combine_with_irs(&drawn, &action.theta_control);
        self.theta_saturations += ch.theta_saturations;
        let arrivals = generate_tasks(cfg, rng);

        let (rates_offload, energy_offload) = offload_transmit(action, &self.queues, &ch, cfg);
        let (rates_local, energies_local) = local_compute(action, cfg);
        let (rate_edge_raw, energy_edge) = edge_compute(action, cfg);

        // Queue update: offloaded bits first (already clamped by the
        // queue), local service takes what remains.
        let mut queue_in = vec![0.0; k_total + 1];
        let mut queue_out = vec![0.0; k_total + 1];
        let mut next = self.queues.clone();
        let mut offload_bits_total = 0.0;
        for k in 0..k_total {
            let held = self.queues.local[k];
            let offload_bits = (rates_offload[k] * dt).min(held);
            let local_capacity = if action.local[k] {
                cfg.local_bits_per_slot(action.freq_local[k])
            } else {
                0.0
            };
            let local_bits = local_capacity.min(held - offload_bits);
            queue_in[k] = arrivals[k];
            queue_out[k] = offload_bits + local_bits;
            next.local[k] = held - queue_out[k] + arrivals[k];
            offload_bits_total += offload_bits;
        }
        let edge_service = cfg.edge_bits_per_slot(action.freq_edge).min(self.queues.edge);
        queue_in[k_total] = offload_bits_total;
        queue_out[k_total] = edge_service;
        next.edge = self.queues.edge - edge_service + offload_bits_total;

        let rate_local_total: f64 = rates_local.iter().sum();
        let rate_edge = if cfg.system.edge_rate_clamped {
            rate_edge_raw.min(self.queues.edge / dt)
        } else {
            rate_edge_raw
        };
        let rate_offload_total: f64 = rates_offload.iter().sum();
        let energy_local: f64 = energies_local.iter().sum();

        let throughput = rate_local_total + rate_edge + rate_offload_total;
        let energy = energy_local + energy_edge + energy_offload;

        let ratio_at_slot_start = self.running_ratio();
        self.cum_rate += throughput;
        self.cum_energy += energy;
        self.ep_rate += throughput;
        self.ep_energy += energy;
        let ratio = if self.ep_energy > 0.0 {
            self.ep_rate / self.ep_energy
        } else {
            0.0
        };

        self.prev_queues = std::mem::replace(&mut self.queues, next);
        self.prev_offload_rate = rate_offload_total;
        self.slot += 1;

        SlotOutcome {
            rates_offload,
            rate_local_total,
            rate_edge,
            energy_local,
            energy_edge,
            energy_offload,
            throughput,
            energy,
            ratio,
            ratio_at_slot_start,
            queue_in,
            queue_out,
        }
    }

    /// Assemble the reward sample for the slot that produced `outcome`.
    /// `queues_at_slot_start` are the queue lengths before that step; all
    /// bit quantities are expressed in units of `bit_unit`.
    pub fn drift_sample(
        outcome: &SlotOutcome,
        queues_at_slot_start: &QueueState,
        v_weight: f64,
        bit_unit: f64,
    ) -> DriftSample {
        let scale = |v: &[f64]| v.iter().map(|x| x / bit_unit).collect::<Vec<f64>>();
        DriftSample {
            q: scale(&queues_at_slot_start.stacked()),
            q_in: scale(&outcome.queue_in),
            q_out: scale(&outcome.queue_out),
            energy: outcome.energy,
            throughput: outcome.throughput / bit_unit,
            ratio: outcome.ratio_at_slot_start / bit_unit,
            v_weight,
        }
    }
}
