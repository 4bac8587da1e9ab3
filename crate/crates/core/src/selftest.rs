//! Invariant suites runnable from the command line and reused by the
//! acceptance tests: each verifies one load-bearing property of the stack
//! against an independent oracle and reports a verdict with its sample
//! count.

use crate::agents::configured_rate_cap;
use crate::channel::{combine_with_irs, draw_channels, mobility_step, noma_rates, MobilityState};
use crate::config::SystemConfig;
use crate::ddpg::{concat_columns, run_quadratic_bandit, ActionLayout, DdpgAgent, DdpgHyper};
use crate::environment::{Action, Environment};
use crate::lyapunov::{bound_constant_b, check_drift_bound, dinkelbach_check};
use crate::neural::Mlp;
use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub samples: usize,
    pub passed: bool,
    pub detail: String,
}

impl SuiteReport {
    pub fn line(&self) -> String {
        format!(
            "{:<22} {:>7} samples  {}  {}",
            self.name,
            self.samples,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

/// Per-ED SIC rates must sum to the pooled single-user capacity.
pub fn suite_sic_telescoping(draws: usize, seed: u64) -> SuiteReport {
    let cfg = SystemConfig::default();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut mob = MobilityState::initial(&cfg);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        mob = mobility_step(&mob, &cfg, &mut rng);
        let controls: Vec<f64> = (0..cfg.system.m)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let ch = combine_with_irs(&draw_channels(&mob, &cfg, &mut rng), &controls);
        let powers: Vec<f64> = (0..cfg.system.k)
            .map(|_| rng.random::<f64>() * cfg.system.rho_max)
            .collect();
        let rates = noma_rates(&ch, &powers, &cfg).expect("valid powers");
        let sum: f64 = rates.iter().sum();
        let pooled: f64 = powers
            .iter()
            .zip(&ch.h_combined)
            .map(|(p, h)| p * h.norm_sqr())
            .sum();
        let capacity = cfg.system.bandwidth * (1.0 + pooled / cfg.system.sigma2).log2();
        let rel = (sum - capacity).abs() / capacity.abs().max(1e-300);
        worst = worst.max(rel);
    }
    SuiteReport {
        name: "sic_telescoping",
        samples: draws,
        passed: worst <= 1e-9,
        detail: format!("max relative error {worst:.3e} (tolerance 1e-9)"),
    }
}

/// The one-slot drift bound must hold on every simulated transition under
/// random feasible actions.
pub fn suite_drift_bound(transitions: usize, seed: u64) -> SuiteReport {
    let cfg = SystemConfig::default();
    let b = bound_constant_b(&cfg, configured_rate_cap(&cfg));
    let mut env = Environment::new(cfg.clone());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    for step in 0..transitions {
        if step % cfg.system.slots_per_episode == 0 {
            env.reset();
        }
        let action = Action::random_feasible(&cfg, &mut rng);
        let q_before = env.queues.stacked();
        let outcome = env.step(&action, &mut rng);
        if !check_drift_bound(&q_before, &outcome.queue_in, &outcome.queue_out, b) {
            violations += 1;
        }
    }
    SuiteReport {
        name: "drift_bound",
        samples: transitions,
        passed: violations == 0,
        detail: format!("{violations} violations, b = {b:.3e}"),
    }
}

fn gradient_check_critic(agent: &mut DdpgAgent, rng: &mut ChaCha12Rng) -> f64 {
    let b = 4;
    let s_dim = agent.actor.input_dim();
    let a_dim = agent.actor.output_dim();
    let states = Array2::from_shape_fn((b, s_dim), |_| rng.random::<f64>() * 2.0 - 1.0);
    let actions = Array2::from_shape_fn((b, a_dim), |_| rng.random::<f64>());
    let targets = Array1::from_shape_fn(b, |_| rng.random::<f64>() * 2.0 - 1.0);
    let joint = concat_columns(&states, &actions);

    let (q, cache) = agent.critic.forward(&joint);
    let residual = &q.column(0) - &targets;
    let grad = residual.mapv(|r| 2.0 * r / b as f64);
    let (grads, _) = agent
        .critic
        .backward(&cache, &grad.insert_axis(ndarray::Axis(1)));

    let loss_of = |critic: &Mlp| {
        let (q, _) = critic.forward(&joint);
        (&q.column(0) - &targets).mapv(|r| r * r).sum() / b as f64
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for l in 0..agent.critic.layers() {
        let dims = agent.critic.params().0[l].dim();
        for i in 0..dims.0 {
            for j in 0..dims.1 {
                let orig = agent.critic.params().0[l][[i, j]];
                agent.critic.params_mut().0[l][[i, j]] = orig + h;
                let up = loss_of(&agent.critic);
                agent.critic.params_mut().0[l][[i, j]] = orig - h;
                let down = loss_of(&agent.critic);
                agent.critic.params_mut().0[l][[i, j]] = orig;
                let fd = (up - down) / (2.0 * h);
                let g = grads.weights[l][[i, j]];
                worst = worst.max((fd - g).abs() / g.abs().max(fd.abs()).max(1e-6));
            }
        }
        for i in 0..dims.0 {
            let orig = agent.critic.params().1[l][i];
            agent.critic.params_mut().1[l][i] = orig + h;
            let up = loss_of(&agent.critic);
            agent.critic.params_mut().1[l][i] = orig - h;
            let down = loss_of(&agent.critic);
            agent.critic.params_mut().1[l][i] = orig;
            let fd = (up - down) / (2.0 * h);
            let g = grads.biases[l][i];
            worst = worst.max((fd - g).abs() / g.abs().max(fd.abs()).max(1e-6));
        }
    }
    worst
}

fn gradient_check_actor(agent: &mut DdpgAgent, rng: &mut ChaCha12Rng) -> f64 {
    let b = 4;
    let s_dim = agent.actor.input_dim();
    let states = Array2::from_shape_fn((b, s_dim), |_| rng.random::<f64>() * 2.0 - 1.0);

    let (actions, actor_cache) = agent.actor.forward(&states);
    let joint = concat_columns(&states, &actions);
    let (_, critic_cache) = agent.critic.forward(&joint);
    let grad_out = Array2::from_elem((b, 1), -1.0 / b as f64);
    let (_, d_joint) = agent.critic.backward(&critic_cache, &grad_out);
    let d_action = d_joint.slice(s![.., s_dim..]).to_owned();
    let (grads, _) = agent.actor.backward(&actor_cache, &d_action);

    let objective_of = |actor: &Mlp, critic: &Mlp| {
        let (actions, _) = actor.forward(&states);
        let joint = concat_columns(&states, &actions);
        let (q, _) = critic.forward(&joint);
        q.column(0).sum() / b as f64
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for l in 0..agent.actor.layers() {
        let dims = agent.actor.params().0[l].dim();
        for i in 0..dims.0 {
            for j in 0..dims.1 {
                let orig = agent.actor.params().0[l][[i, j]];
                agent.actor.params_mut().0[l][[i, j]] = orig + h;
                let up = objective_of(&agent.actor, &agent.critic);
                agent.actor.params_mut().0[l][[i, j]] = orig - h;
                let down = objective_of(&agent.actor, &agent.critic);
                agent.actor.params_mut().0[l][[i, j]] = orig;
                // Stored gradients descend the negated objective.
                let fd = -(up - down) / (2.0 * h);
                let g = grads.weights[l][[i, j]];
                worst = worst.max((fd - g).abs() / g.abs().max(fd.abs()).max(1e-6));
            }
        }
        for i in 0..dims.0 {
            let orig = agent.actor.params().1[l][i];
            agent.actor.params_mut().1[l][i] = orig + h;
            let up = objective_of(&agent.actor, &agent.critic);
            agent.actor.params_mut().1[l][i] = orig - h;
            let down = objective_of(&agent.actor, &agent.critic);
            agent.actor.params_mut().1[l][i] = orig;
            let fd = -(up - down) / (2.0 * h);
            let g = grads.biases[l][i];
            worst = worst.max((fd - g).abs() / g.abs().max(fd.abs()).max(1e-6));
        }
    }
    worst
}

/// Analytic actor and critic gradients against central finite differences
/// on freshly initialized networks (4 weight layers, 32 hidden units).
pub fn suite_gradient_checks(networks: usize, seed: u64) -> SuiteReport {
    let mut cfg = SystemConfig::default();
    cfg.system.m = 3;
    cfg.train.hidden = 32;
    cfg.train.actor_layers = 4;
    cfg.train.critic_layers = 4;
    let layout = ActionLayout::centralized(&cfg);
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for net in 0..networks {
        let mut agent = DdpgAgent::new(
            6,
            layout.clone(),
            cfg.train.actor_layers,
            cfg.train.critic_layers,
            cfg.train.hidden,
            1e-3,
            1e-3,
            64,
            DdpgHyper::from_config(&cfg),
            &mut rng,
        );
        let err = if net % 2 == 0 {
            gradient_check_critic(&mut agent, &mut rng)
        } else {
            gradient_check_actor(&mut agent, &mut rng)
        };
        worst = worst.max(err);
    }
    SuiteReport {
        name: "gradient_checks",
        samples: networks,
        passed: worst <= 1e-4,
        detail: format!("max relative error {worst:.3e} (tolerance 1e-4)"),
    }
}

/// The fractional transform must select exactly the ratio-optimal actions
/// on random enumerable grids.
pub fn suite_dinkelbach(grids: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut failures = 0usize;
    for _ in 0..grids {
        let n = 1 + rng.random_range(0..30);
        let grid: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                (
                    rng.random::<f64>() * 10.0,
                    0.1 + rng.random::<f64>() * 9.9,
                )
            })
            .collect();
        if !dinkelbach_check(&grid).expect("grid is valid") {
            failures += 1;
        }
    }
    SuiteReport {
        name: "dinkelbach",
        samples: grids,
        passed: failures == 0,
        detail: format!("{failures} grids failed the argmax equivalence"),
    }
}

/// End-to-end learner sanity on the built-in quadratic bandit.
pub fn suite_bandit(seeds: &[u64]) -> SuiteReport {
    let mut detail = String::new();
    let mut passed = true;
    for &seed in seeds {
        let (greedy, episodes) = run_quadratic_bandit(seed, 200, 0.05);
        let ok = (greedy - 0.63).abs() < 0.05;
        passed &= ok;
        detail.push_str(&format!("seed {seed}: a={greedy:.3} @ep{episodes} "));
    }
    SuiteReport {
        name: "bandit_convergence",
        samples: seeds.len(),
        passed,
        detail,
    }
}

/// Full battery at the documented sample counts.
pub fn run_all() -> Vec<SuiteReport> {
    vec![
        suite_sic_telescoping(1000, 101),
        suite_drift_bound(10_000, 102),
        suite_gradient_checks(10, 103),
        suite_dinkelbach(1000, 104),
        suite_bandit(&[1, 2, 3]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suites_pass() {
        assert!(suite_sic_telescoping(50, 1).passed);
        assert!(suite_drift_bound(500, 2).passed);
        assert!(suite_dinkelbach(50, 3).passed);
        assert!(suite_gradient_checks(2, 4).passed);
    }

    #[test]
    fn report_lines_name_suite_and_samples() {
        let report = suite_dinkelbach(10, 5);
        let line = report.line();
        assert!(line.contains("dinkelbach"));
        assert!(line.contains("10"));
        assert!(line.contains("PASS"));
    }
}
