//! Drift-plus-penalty machinery for queue-stable energy-efficiency
//! optimization.
//!
//! The Lyapunov function is `L(Q) = 1/2 sum_j Q_j^2` over the K local
//! queues and the edge queue. Expanding one slot of queue updates bounds
//! the drift by a constant `b` plus the linear queue-pressure term, which
//! yields the per-slot surrogate
//!
//! ```text
//! L(t) = sum_j Q_j (Q_in_j - Q_out_j) + V (Upsilon(t) E(t) - R(t))
//! ```
//!
//! whose negation is the training reward. `b` never enters the reward
//! (constants do not move an argmax); it exists so the drift inequality
//! can be checked numerically on every simulated transition. The
//! fractional-transform verifier checks, by enumeration, that maximizing
//! `R - Upsilon_opt E` selects exactly the ratio-optimal actions.

use crate::config::SystemConfig;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LyapunovError {
    #[error("dinkelbach check requires a non-empty action grid")]
    EmptyGrid,
    #[error("dinkelbach check requires strictly positive energies, got {0}")]
    NonPositiveEnergy(f64),
}

/// Everything one slot contributes to the drift-plus-penalty surrogate.
/// Units are the caller's choice as long as they are consistent: queues and
/// flows in the same bit unit, rates in that unit per second.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSample {
    /// Queue lengths at the start of the slot, local queues then edge.
    pub q: Vec<f64>,
    /// Bits that entered each queue during the slot.
    pub q_in: Vec<f64>,
    /// Bits that left each queue during the slot.
    pub q_out: Vec<f64>,
    /// System energy consumption E(t) in W.
    pub energy: f64,
    /// System throughput R(t).
    pub throughput: f64,
    /// Running energy-efficiency ratio Upsilon(t) accumulated before this
    /// slot, with Upsilon(0) = 0.
    pub ratio: f64,
    /// Drift-vs-penalty weight V.
    pub v_weight: f64,
}

/// `L(Q) = 1/2 sum_j Q_j^2`.
pub fn lyapunov_value(q: &[f64]) -> f64 {
    0.5 * q.iter().map(|x| x * x).sum::<f64>()
}

/// One-slot Lyapunov drift `L(Q(t+1)) - L(Q(t))`.
pub fn drift(q_now: &[f64], q_next: &[f64]) -> f64 {
    assert_eq!(q_now.len(), q_next.len(), "queue vectors must align");
    lyapunov_value(q_next) - lyapunov_value(q_now)
}

/// The per-slot surrogate `L(t)` whose minimization drives the policy.
pub fn surrogate(sample: &DriftSample) -> f64 {
    assert_eq!(sample.q.len(), sample.q_in.len());
    assert_eq!(sample.q.len(), sample.q_out.len());
    let queue_pressure: f64 = sample
        .q
        .iter()
        .zip(sample.q_in.iter().zip(&sample.q_out))
        .map(|(q, (qin, qout))| q * (qin - qout))
        .sum();
    queue_pressure + sample.v_weight * (sample.ratio * sample.energy - sample.throughput)
}

/// Training reward: `r(t) = -L(t)`.
pub fn reward(sample: &DriftSample) -> f64 {
    -surrogate(sample)
}

/// The constant that upper bounds the quadratic flow term of the drift:
/// half the sum of squared worst-case arrivals and services per queue.
/// `rate_cap` is a per-ED bound on the offload rate in bits/s; see
/// [`crate::channel::offload_rate_cap`].
pub fn bound_constant_b(cfg: &SystemConfig, rate_cap: f64) -> f64 {
    let k = cfg.system.k as f64;
    let dt = cfg.system.slot_seconds;
    let arrivals = k * cfg.system.task_bits.powi(2);
    let local_service = cfg.local_bits_per_slot(cfg.system.f_l_max) + rate_cap * dt;
    let local = k * local_service.powi(2);
    let edge_in = (k * rate_cap * dt).powi(2);
    let edge_out = cfg.edge_bits_per_slot(cfg.system.f_e_max).powi(2);
    0.5 * (arrivals + local + edge_in + edge_out)
}

/// Verifies the drift inequality on one transition: with
/// `Q(t+1) = Q(t) + Q_in - Q_out` (the simulator's exact accounting),
/// `drift <= b + sum_j Q_j (Q_in_j - Q_out_j)` must hold whenever the
/// flows stay within the maxima that formed `b`.
pub fn check_drift_bound(q_now: &[f64], q_in: &[f64], q_out: &[f64], b: f64) -> bool {
    assert_eq!(q_now.len(), q_in.len());
    assert_eq!(q_now.len(), q_out.len());
    let q_next: Vec<f64> = q_now
        .iter()
        .zip(q_in.iter().zip(q_out))
        .map(|(q, (qin, qout))| q + qin - qout)
        .collect();
    let linear: f64 = q_now
        .iter()
        .zip(q_in.iter().zip(q_out))
        .map(|(q, (qin, qout))| q * (qin - qout))
        .sum();
    drift(q_now, &q_next) <= b + linear + 1e-9 * b.abs().max(1.0)
}

/// Enumerates a finite action grid of `(mean rate, mean energy)` pairs and
/// confirms the fractional transform: the maximizers of `R/E` and of
/// `R - Upsilon_opt E` coincide, and the transformed maximum is zero.
pub fn dinkelbach_check(grid: &[(f64, f64)]) -> Result<bool, LyapunovError> {
    if grid.is_empty() {
        return Err(LyapunovError::EmptyGrid);
    }
    for &(_, e) in grid {
        if !(e > 0.0) {
            return Err(LyapunovError::NonPositiveEnergy(e));
        }
    }
    let ratios: Vec<f64> = grid.iter().map(|&(r, e)| r / e).collect();
    let upsilon_opt = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let transformed: Vec<f64> = grid.iter().map(|&(r, e)| r - upsilon_opt * e).collect();
    let t_max = transformed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let tol = 1e-9 * (1.0 + upsilon_opt.abs());
    if t_max.abs() > tol {
        return Ok(false);
    }
    let ratio_argmax: Vec<usize> = ratios
        .iter()
        .enumerate()
        .filter(|(_, &r)| (upsilon_opt - r).abs() <= tol)
        .map(|(i, _)| i)
        .collect();
    let transformed_argmax: Vec<usize> = transformed
        .iter()
        .enumerate()
        .filter(|(i, &t)| {
            // Absolute slack scaled by the energy so large-E points do not
            // sneak into the set through rounding.
            (t_max - t).abs() <= tol * (1.0 + grid[*i].1.abs())
        })
        .map(|(i, _)| i)
        .collect();
    Ok(ratio_argmax == transformed_argmax)
}
