// Scratch probe: trains one centralized run and dumps what the learned
// policy does over an evaluation episode. Not part of the shipped
// interface.

use irsmec::agents::{
    run_episode_centralized, stream, stream_id, AlgorithmKind, CentralizedAgent, EpisodeOptions,
};
use irsmec::config::SystemConfig;
use irsmec::ddpg::map_action;
use irsmec::environment::{normalize_state, Environment};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let episodes: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    let hidden: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(48);
    let layers: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(3);
    let kind = match args.get(4).map(|s| s.as_str()) {
        Some("no_irs") => AlgorithmKind::NoIrs,
        _ => AlgorithmKind::Lmiddpg,
    };
    let seed: u64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(1);

    let mut cfg = SystemConfig::default();
    cfg.train.episodes = episodes;
    cfg.train.hidden = hidden;
    cfg.train.actor_layers = layers;
    cfg.train.critic_layers = layers;

    let mut init = stream(seed, stream_id::INIT);
    let mut agent = CentralizedAgent::new(&cfg, kind, &mut init).unwrap();
    let mut env = Environment::new(agent.cfg.clone());
    env.seed_ratio_prior(cfg.ratio_prior(), cfg.train.ratio_warm_slots);
    let mut env_rng = stream(seed, stream_id::ENV);
    let mut explore_rng = stream(seed, stream_id::EXPLORE);
    let mut sample_rng = stream(seed, stream_id::SAMPLE);
    let mut policy_rng = stream(seed, stream_id::POLICY);
    let start = std::time::Instant::now();
    for ep in 0..episodes {
        env.reset_carry_ratio();
        let m = run_episode_centralized(
            &mut env,
            &mut agent,
            &mut env_rng,
            &mut explore_rng,
            &mut sample_rng,
            &mut policy_rng,
            &EpisodeOptions::training(),
        );
        if ep % 10 == 0 || ep == episodes - 1 {
            println!(
                "ep {ep:>3}: sumR {:>8.2}  finalEE {:>9.3e}  q_loc {:>7.2} Mb  q_edge {:>7.2} Mb  carriedEE {:>9.3e}  noise {:.3}",
                m.sum_reward,
                m.final_ratio,
                m.mean_queue_local / 1e6,
                m.mean_queue_edge / 1e6,
                env.running_ratio(),
                agent.ddpg.hyper.noise_scale,
            );
        }
    }
    println!("trained in {:.0} s", start.elapsed().as_secs_f64());

    // Critic beliefs at the initial state for three candidate actions.
    {
        let state = normalize_state(&env.observe(), &agent.scales);
        let dim = agent.ddpg.layout.dim();
        let k = cfg.system.k;
        let mut all_max = vec![1.0; dim];
        for x in all_max[4 * k + 1..].iter_mut() {
            *x = 0.0;
        }
        let mut moderate = vec![0.5; dim];
        moderate[2 * k..3 * k].fill(0.1); // power
        moderate[3 * k..4 * k].fill(0.5); // f_l
        moderate[4 * k] = 0.55; // f_e
        for x in moderate[4 * k + 1..].iter_mut() {
            *x = 0.0;
        }
        let mut low = vec![0.0; dim];
        low[..k].fill(1.0); // offload on, everything else off
        let q_of = |a: &Vec<f64>| {
            let mut joint = state.clone();
            joint.extend(a.iter());
            agent.ddpg.critic.forward_one(&joint)[0]
        };
        println!(
            "critic Q: all_max {:.3}  moderate {:.3}  low {:.3}  actor_greedy {:.3}",
            q_of(&all_max),
            q_of(&moderate),
            q_of(&low),
            {
                let a = agent.ddpg.act(&state);
                let mut joint = state.clone();
                joint.extend(a.iter());
                agent.ddpg.critic.forward_one(&joint)[0]
            }
        );
    }

    // Evaluation episode with action dumps.
    let eff = kind.effective_cfg(&cfg);
    let mut eval_env = Environment::new(eff.clone());
    let mut eval_rng = stream(seed, stream_id::EVAL_ENV);
    for t in 0..cfg.system.slots_per_episode {
        let state = normalize_state(&eval_env.observe(), &agent.scales);
        let a_con = agent.ddpg.act(&state);
        let action = map_action(&a_con, &agent.ddpg.layout, &eff);
        let out = eval_env.step(&action, &mut eval_rng);
        if t % 30 == 0 || t == cfg.system.slots_per_episode - 1 {
            let n_off = action.offload.iter().filter(|&&o| o).count();
            let n_loc = action.local.iter().filter(|&&l| l).count();
            let p_mean: f64 = action.power.iter().sum::<f64>() / 4.0;
            let f_mean: f64 = action.freq_local.iter().sum::<f64>() / 4.0 / 1e9;
            let ro: f64 = out.rates_offload.iter().sum::<f64>() / 1e6;
            println!(
                "t {t:>3}: off {n_off} loc {n_loc}  p {p_mean:.3} W  f_l {f_mean:.3}  f_e {:.3} GHz  R_o {ro:>5.2}  R {:>5.1} Mb/s  E {:>6.3} W  EE {:>9.3e}  q {:>6.2}/{:>6.2} Mb",
                action.freq_edge / 1e9,
                out.throughput / 1e6,
                out.energy,
                out.ratio,
                eval_env.queues.local.iter().sum::<f64>() / 4e6,
                eval_env.queues.edge / 1e6,
            );
        }
    }
}
