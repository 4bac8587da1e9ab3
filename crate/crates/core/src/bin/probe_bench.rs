// Scratch probe: reduced-scale benchmark sweeps for calibrating the
// learning configuration. Not part of the shipped interface.

use irsmec::cli::run_bench;
use irsmec::config::SystemConfig;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let episodes: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(40);
    let hidden: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(48);
    let layers: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(3);
    let noise: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let seeds: Vec<u64> = args
        .get(5)
        .map(|s| s.split(',').map(|x| x.parse().unwrap()).collect())
        .unwrap_or_else(|| vec![1, 2, 3]);

    let mut cfg = SystemConfig::default();
    cfg.train.episodes = episodes;
    cfg.train.hidden = hidden;
    cfg.train.actor_layers = layers;
    cfg.train.critic_layers = layers;
    cfg.train.noise_init = noise;
    let envf = |k: &str, d: f64| std::env::var(k).ok().and_then(|v| v.parse().ok()).unwrap_or(d);
    cfg.train.lr_actor = envf("LR_A", cfg.train.lr_actor);
    cfg.train.lr_critic = envf("LR_C", cfg.train.lr_critic);
    cfg.norm.queue_bound = envf("NORMQ", cfg.norm.queue_bound);
    cfg.norm.rate_bound = envf("NORMR", cfg.norm.rate_bound);
    cfg.train.grad_clip = envf("CLIP", cfg.train.grad_clip);
    cfg.train.explore_uniform_prob = envf("EPS", cfg.train.explore_uniform_prob);
    cfg.train.batch = envf("BATCH", cfg.train.batch as f64) as usize;
    cfg.train.buffer_capacity = envf("BUF", cfg.train.buffer_capacity as f64) as usize;
    cfg.train.actor_weight_decay = envf("WD", cfg.train.actor_weight_decay);
    cfg.train.noise_decay = envf("NDECAY", cfg.train.noise_decay);
    cfg.train.gamma = envf("GAMMA", cfg.train.gamma);
    cfg.train.update_every = envf("UPD", cfg.train.update_every as f64) as usize;
    cfg.train.updates_per_step = envf("UPS", cfg.train.updates_per_step as f64) as usize;
    cfg.train.reward_unit = envf("UNIT", cfg.train.reward_unit);
    cfg.train.reward_scale = envf("RSCALE", cfg.train.reward_scale);
    cfg.train.lr_critic = envf("LR_C", cfg.train.lr_critic);
    cfg.norm.queue_bound = envf("NORMQ", cfg.norm.queue_bound);
    cfg.norm.rate_bound = envf("NORMR", cfg.norm.rate_bound);
    println!(
        "lr {}/{} clip {} eps {} batch {} buf {} wd {} gamma {}",
        cfg.train.lr_actor, cfg.train.lr_critic, cfg.train.grad_clip,
        cfg.train.explore_uniform_prob, cfg.train.batch, cfg.train.buffer_capacity,
        cfg.train.actor_weight_decay, cfg.train.gamma
    );

    let workers: usize = std::env::var("WORKERS").ok().and_then(|v| v.parse().ok()).unwrap_or(24);
    let only = std::env::var("ONLY").ok();
    let start = std::time::Instant::now();
    let summaries = match only {
        Some(name) => {
            let kind = irsmec::agents::AlgorithmKind::parse(&name).unwrap();
            irsmec::cli::run_algorithms(&cfg, &[kind], &seeds, workers, None).unwrap()
        }
        None => run_bench(&cfg, &seeds, workers, None).unwrap(),
    };
    println!(
        "episodes={episodes} hidden={hidden} layers={layers} noise={noise} seeds={:?}  ({:.0} s)",
        seeds,
        start.elapsed().as_secs_f64()
    );
    for s in &summaries {
        let per_seed: Vec<String> = s
            .per_seed_final_ratio
            .iter()
            .map(|v| format!("{v:.3e}"))
            .collect();
        println!(
            "{:<26} EE = {:>10.4e}  (per seed: {})  R = {:>6.2} Mb/s  slope l/e = {:>9.1}/{:>9.1}  stable {}",
            s.algorithm.name(),
            s.mean_final_ratio,
            per_seed.join(" "),
            s.mean_throughput / 1e6,
            s.queue_slope_local,
            s.queue_slope_edge,
            s.stable
        );
    }
    let get = |name: &str| {
        summaries
            .iter()
            .find(|s| s.algorithm.name() == name)
            .map(|s| s.mean_final_ratio)
    };
    if let (Some(l), Some(n), Some(r), Some(h)) = (
        get("lmiddpg"),
        get("no_irs"),
        get("random_phase"),
        get("hma"),
    ) {
        println!(
            "ratios: lmiddpg/no_irs = {:.3}  random/no_irs = {:.3}  hma/lmiddpg = {:.3}",
            l / n,
            r / n,
            h / l
        );
    }
}
