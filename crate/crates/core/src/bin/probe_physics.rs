// Scratch probe: maps the energy-efficiency landscape of hand-crafted
// static policies so learning results can be sanity-checked against what
// the physics permits. Not part of the shipped interface.

use irsmec::agents::{stream, stream_id, AlgorithmKind};
use irsmec::config::SystemConfig;
use irsmec::environment::{Action, Environment};
use rand::Rng;

fn aligned_theta(cfg: &SystemConfig, env: &Environment, target_ed: usize) -> Vec<f64> {
    // Phase-conjugate the LoS cascade for one ED from geometry alone.
    let irs = cfg.geometry.irs;
    let bs = cfg.geometry.bs;
    let pos = env.mobility.position[target_ed];
    let d_ib = (irs[0] - bs[0]).hypot(irs[1] - bs[1]);
    let sin_psi = (bs[1] - irs[1]) / d_ib;
    let d_di = (pos[0] - irs[0]).hypot(pos[1] - irs[1]);
    let sin_phi = (pos[1] - irs[1]) / d_di;
    (0..cfg.system.m)
        .map(|m| {
            let x = -(m as f64) * (sin_psi + sin_phi);
            // wrap into [-1, 1)
            let wrapped = (x + 1.0).rem_euclid(2.0) - 1.0;
            wrapped
        })
        .collect()
}

#[derive(Clone, Copy)]
enum Theta {
    Zero,
    Random,
    Aligned,
}

fn run(
    cfg: &SystemConfig,
    name: &str,
    offload: bool,
    power: f64,
    local: bool,
    f_local: f64,
    f_edge: f64,
    theta: Theta,
) {
    let mut env = Environment::new(cfg.clone());
    let mut env_rng = stream(42, stream_id::EVAL_ENV);
    let mut policy_rng = stream(42, stream_id::EVAL_POLICY);
    let k = cfg.system.k;
    let mut final_ratio = 0.0;
    let mut sum_r = 0.0;
    let mut sum_e = 0.0;
    let mut mean_q = 0.0;
    let mut clamped = 0usize;
    let slots = cfg.system.slots_per_episode;
    for _ in 0..slots {
        let theta_control = match theta {
            Theta::Zero => vec![0.0; cfg.system.m],
            Theta::Random => (0..cfg.system.m)
                .map(|_| policy_rng.random::<f64>() * 2.0 - 1.0)
                .collect(),
            Theta::Aligned => aligned_theta(cfg, &env, 0),
        };
        let action = Action {
            offload: vec![offload; k],
            local: vec![local; k],
            power: vec![power; k],
            freq_local: vec![f_local; k],
            freq_edge: f_edge,
            theta_control,
        };
        let out = env.step(&action, &mut env_rng);
        final_ratio = out.ratio;
        sum_r += out.throughput;
        sum_e += out.energy;
        mean_q += env.queues.local.iter().sum::<f64>() / k as f64;
        if offload {
            for kk in 0..k {
                let q = env.prev_queues.local[kk];
                if q > 0.0 && (out.rates_offload[kk] - q / cfg.system.slot_seconds).abs() < 1e-6 {
                    clamped += 1;
                }
            }
        }
    }
    println!(
        "{name::<44} EE = {:>10.3e} b/J   R = {:>8.2} Mb/s  E = {:>6.3} W  q = {:>7.2} Mb  queue-clamped {:>4.1}%",
        final_ratio,
        sum_r / slots as f64 / 1e6,
        sum_e / slots as f64,
        mean_q / slots as f64 / 1e6,
        100.0 * clamped as f64 / (slots * k) as f64
    );
}

fn main() {
    let cfg = SystemConfig::default();
    let no_irs = AlgorithmKind::NoIrs.effective_cfg(&cfg);

    println!("== local only ==");
    run(&no_irs, "local f=0.30 GHz", false, 0.0, true, 0.3e9, 0.0, Theta::Zero);
    run(&no_irs, "local f=0.28 GHz", false, 0.0, true, 0.28e9, 0.0, Theta::Zero);

    println!("== all offload p=0.5, f_e=1.26 GHz ==");
    run(&no_irs, "no IRS", true, 0.5, false, 0.0, 1.26e9, Theta::Zero);
    run(&cfg, "random phase", true, 0.5, false, 0.0, 1.26e9, Theta::Random);
    run(&cfg, "aligned phase (ED1)", true, 0.5, false, 0.0, 1.26e9, Theta::Aligned);

    println!("== all offload p=0.1, f_e=1.1 GHz ==");
    run(&no_irs, "no IRS", true, 0.1, false, 0.0, 1.1e9, Theta::Zero);
    run(&cfg, "random phase", true, 0.1, false, 0.0, 1.1e9, Theta::Random);
    run(&cfg, "aligned phase (ED1)", true, 0.1, false, 0.0, 1.1e9, Theta::Aligned);

    println!("== mixed: offload p + local 0.15 GHz, f_e=0.7 GHz ==");
    for p in [0.02, 0.1, 0.3, 1.0] {
        run(&no_irs, &format!("no IRS p={p}"), true, p, true, 0.15e9, 0.7e9, Theta::Zero);
        run(&cfg, &format!("random p={p}"), true, p, true, 0.15e9, 0.7e9, Theta::Random);
        run(&cfg, &format!("aligned p={p}"), true, p, true, 0.15e9, 0.7e9, Theta::Aligned);
    }
}
