//! Uplink channel model: ED mobility, three-segment fading, IRS reflection,
//! SIC decoding order and NOMA achievable rates.
//!
//! The equivalent baseband channel between ED k and the BS is
//!
//! ```text
//! h_k = h_d[k] + h_r^T diag(Theta) g[k]
//! ```
//!
//! where `g[k]` is the LoS-dominant ED-IRS link (unit-modulus steering
//! sequence times the path-loss amplitude), `h_d[k]` is the Rayleigh-faded
//! direct link and `h_r` is the Rician-faded IRS-BS link. The BS decodes
//! users in descending order of combined gain and subtracts each decoded
//! signal, so a user only sees interference from users decoded after it.

use crate::config::SystemConfig;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("path-loss distance must be strictly positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("transmit power must be non-negative, got {0} for ED {1}")]
    NegativePower(f64, usize),
}

/// Which of the three propagation segments a distance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    EdIrs,
    EdBs,
    IrsBs,
}

/// Per-ED planar position and velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityState {
    pub position: Vec<[f64; 2]>,
    pub velocity: Vec<[f64; 2]>,
}

impl MobilityState {
    /// Starting state: configured initial positions, velocity at the
    /// asymptotic mean.
    pub fn initial(cfg: &SystemConfig) -> Self {
        Self {
            position: cfg.geometry.eds.clone(),
            velocity: vec![cfg.mobility.v_bar; cfg.system.k],
        }
    }
}

/// One slot's channel draw. `h_combined` and `decode_order` reflect the
/// reflection control used at combination time; straight out of
/// [`draw_channels`] they describe the direct path only.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// ED-IRS links, K x M.
    pub g: Vec<Vec<Complex64>>,
    /// Direct ED-BS links, length K.
    pub h_d: Vec<Complex64>,
    /// IRS-BS link, length M.
    pub h_r: Vec<Complex64>,
    /// Effective per-ED gains after IRS combination, length K.
    pub h_combined: Vec<Complex64>,
    /// Permutation of 0..K, strongest combined gain first.
    pub decode_order: Vec<usize>,
    /// How many reflection controls were clamped into [-1, 1].
    pub theta_saturations: usize,
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Large-scale path loss `ref_gain * d^-exp` for the given segment.
pub fn path_loss(distance: f64, kind: LinkKind, cfg: &SystemConfig) -> Result<f64, ChannelError> {
    if !(distance > 0.0) {
        return Err(ChannelError::NonPositiveDistance(distance));
    }
    let exp = match kind {
        LinkKind::EdIrs => cfg.channel.exp_di,
        LinkKind::EdBs => cfg.channel.exp_db,
        LinkKind::IrsBs => cfg.channel.exp_ib,
    };
    Ok(cfg.channel.ref_gain * distance.powf(-exp))
}

/// Advance every ED one slot under the Gauss-Markov mobility model:
/// `v(t) = alpha v(t-1) + (1-alpha) v_bar + kappa_bar sqrt(1-alpha^2) w`
/// with `w ~ N(0, varsigma^2)`, then move by `v(t) * Delta_T`.
pub fn mobility_step<R: Rng + ?Sized>(
    state: &MobilityState,
    cfg: &SystemConfig,
    rng: &mut R,
) -> MobilityState {
    let mob = &cfg.mobility;
    let dt = cfg.system.slot_seconds;
    let mut next = state.clone();
    for k in 0..cfg.system.k {
        for axis in 0..2 {
            let a = mob.alpha[axis];
            let w: f64 = rng.sample::<f64, _>(StandardNormal) * mob.varsigma;
            let v = a * state.velocity[k][axis]
                + (1.0 - a) * mob.v_bar[axis]
                + mob.kappa_bar[axis] * (1.0 - a * a).sqrt() * w;
            next.velocity[k][axis] = v;
            next.position[k][axis] = state.position[k][axis] + v * dt;
        }
    }
    next
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / 2.0_f64.sqrt()
}

/// Unit-modulus uniform-linear-array steering entry `exp(j pi m sin(phi))`.
fn steering(m: usize, sin_phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::PI * m as f64 * sin_phi)
}

/// LoS/NLoS mixing weights for a Rician factor. An infinite factor keeps
/// only the LoS part.
fn rician_weights(delta: f64) -> (f64, f64) {
    if delta.is_infinite() {
        (1.0, 0.0)
    } else {
        ((delta / (1.0 + delta)).sqrt(), (1.0 / (1.0 + delta)).sqrt())
    }
}

/// Draw one slot's fading for every segment. The combined gain is seeded
/// with the direct path; apply [`combine_with_irs`] before computing rates.
pub fn draw_channels<R: Rng + ?Sized>(
    mob: &MobilityState,
    cfg: &SystemConfig,
    rng: &mut R,
) -> ChannelRealization {
    let k_total = cfg.system.k;
    let m_total = cfg.system.m;
    let irs = cfg.geometry.irs;
    let bs = cfg.geometry.bs;

    let mut h_d = Vec::with_capacity(k_total);
    let mut g = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let pos = mob.position[k];
        let d_db = distance(pos, bs);
        let beta_db = path_loss(d_db, LinkKind::EdBs, cfg)
            .expect("ED coincides with the BS");
        h_d.push(beta_db.sqrt() * complex_normal(rng));

        let d_di = distance(pos, irs);
        let beta_di = path_loss(d_di, LinkKind::EdIrs, cfg)
            .expect("ED coincides with the IRS");
        let sin_phi = (pos[1] - irs[1]) / d_di;
        let amp = beta_di.sqrt();
        g.push((0..m_total).map(|m| amp * steering(m, sin_phi)).collect());
    }

    let d_ib = distance(irs, bs);
    let beta_ib = path_loss(d_ib, LinkKind::IrsBs, cfg).expect("IRS coincides with the BS");
    let sin_psi = (bs[1] - irs[1]) / d_ib;
    let (w_los, w_nlos) = rician_weights(cfg.channel.delta);
    let h_r: Vec<Complex64> = (0..m_total)
        .map(|m| {
            let los = steering(m, sin_psi);
            let nlos = if w_nlos > 0.0 {
                complex_normal(rng)
            } else {
                Complex64::ZERO
            };
            beta_ib.sqrt() * (w_los * los + w_nlos * nlos)
        })
        .collect();

    let h_combined = h_d.clone();
    let decode_order = sort_decode_order(&h_combined);
    ChannelRealization {
        g,
        h_d,
        h_r,
        h_combined,
        decode_order,
        theta_saturations: 0,
    }
}

/// Reflection coefficient for a control value in [-1, 1]: a pure phase
/// shift `exp(j pi x)` at unit amplitude.
pub fn reflection_coefficient(control: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::PI * control)
}

fn sort_decode_order(h_combined: &[Complex64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..h_combined.len()).collect();
    order.sort_by(|&a, &b| {
        h_combined[b]
            .norm_sqr()
            .total_cmp(&h_combined[a].norm_sqr())
            .then(a.cmp(&b))
    });
    order
}

/// Apply a reflection control vector. Out-of-range controls are clamped
/// into [-1, 1] and counted, not rejected. Recomputes the combined gains
/// and the SIC decoding order (descending |h|^2, ties by ED index).
pub fn combine_with_irs(ch: &ChannelRealization, theta_control: &[f64]) -> ChannelRealization {
    assert_eq!(
        theta_control.len(),
        ch.h_r.len(),
        "reflection control length must match the element count"
    );
    let mut saturations = 0usize;
    let theta: Vec<Complex64> = theta_control
        .iter()
        .map(|&x| {
            let clamped = x.clamp(-1.0, 1.0);
            if clamped != x {
                saturations += 1;
            }
            reflection_coefficient(clamped)
        })
        .collect();

    let h_combined: Vec<Complex64> = ch
        .h_d
        .iter()
        .enumerate()
        .map(|(k, &hd)| {
            let cascade: Complex64 = ch
                .h_r
                .iter()
                .zip(&theta)
                .zip(&ch.g[k])
                .map(|((hr, th), gk)| hr * th * gk)
                .sum();
            hd + cascade
        })
        .collect();

    let decode_order = sort_decode_order(&h_combined);
    ChannelRealization {
        g: ch.g.clone(),
        h_d: ch.h_d.clone(),
        h_r: ch.h_r.clone(),
        h_combined,
        decode_order,
        theta_saturations: ch.theta_saturations + saturations,
    }
}

/// Per-ED NOMA achievable rates in bits/s under SIC:
/// `R_k = B' log2(1 + p_k |h_k|^2 / (I_k + sigma^2))` where `I_k` sums the
/// received powers of EDs decoded after k. EDs with zero power get zero
/// rate and contribute no interference.
pub fn noma_rates(
    ch: &ChannelRealization,
    powers: &[f64],
    cfg: &SystemConfig,
) -> Result<Vec<f64>, ChannelError> {
    assert_eq!(powers.len(), ch.h_combined.len(), "one power per ED");
    for (k, &p) in powers.iter().enumerate() {
        if p < 0.0 {
            return Err(ChannelError::NegativePower(p, k));
        }
    }
    let mut rates = vec![0.0; powers.len()];
    let mut later_power = 0.0;
    for &k in ch.decode_order.iter().rev() {
        let received = powers[k] * ch.h_combined[k].norm_sqr();
        if powers[k] > 0.0 {
            let sinr = received / (later_power + cfg.system.sigma2);
            rates[k] = cfg.system.bandwidth * (1.0 + sinr).log2();
            later_power += received;
        }
    }
    Ok(rates)
}

/// Worst-case single-user offload rate at the initial geometry with all
/// reflection phases aligned. `fade_margin` multiplies the random fading
/// amplitudes and `geometry_margin` the whole gain, so the result upper
/// bounds realized NOMA rates almost surely and stays finite.
pub fn offload_rate_cap(cfg: &SystemConfig, fade_margin: f64, geometry_margin: f64) -> f64 {
    let irs = cfg.geometry.irs;
    let bs = cfg.geometry.bs;
    let beta_ib = path_loss(distance(irs, bs), LinkKind::IrsBs, cfg)
        .expect("IRS coincides with the BS");
    let (w_los, w_nlos) = rician_weights(cfg.channel.delta);
    let element_amp = beta_ib.sqrt() * (w_los + w_nlos * fade_margin);

    let mut best = 0.0_f64;
    for ed in &cfg.geometry.eds {
        let beta_db = path_loss(distance(*ed, bs), LinkKind::EdBs, cfg)
            .expect("ED coincides with the BS");
        let beta_di = path_loss(distance(*ed, irs), LinkKind::EdIrs, cfg)
            .expect("ED coincides with the IRS");
        let amp = beta_db.sqrt() * fade_margin
            + cfg.system.m as f64 * beta_di.sqrt() * element_amp;
        best = best.max(amp);
    }
    let gain = (best * geometry_margin).powi(2);
    cfg.system.bandwidth * (1.0 + cfg.system.rho_max * gain / cfg.system.sigma2).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn cfg_with_k_m(k: usize, m: usize) -> SystemConfig {
        let mut cfg = SystemConfig::default();
        cfg.system.k = k;
        cfg.system.m = m;
        cfg.geometry.eds.truncate(k);
        while cfg.geometry.eds.len() < k {
            let n = cfg.geometry.eds.len() as f64;
            cfg.geometry.eds.push([60.0 + n, 2.0 * n - 3.0]);
        }
        cfg
    }

    #[test]
    fn mobility_memory_one_freezes_velocity() {
        let mut cfg = SystemConfig::default();
        cfg.mobility.alpha = [1.0, 1.0];
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let start = MobilityState::initial(&cfg);
        let one = mobility_step(&start, &cfg, &mut rng);
        let two = mobility_step(&one, &cfg, &mut rng);
        for k in 0..cfg.system.k {
            assert_eq!(one.velocity[k], start.velocity[k]);
            assert_eq!(two.velocity[k], start.velocity[k]);
            for axis in 0..2 {
                let drift = two.position[k][axis] - one.position[k][axis];
                let expect = start.velocity[k][axis] * cfg.system.slot_seconds;
                assert!((drift - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mobility_memoryless_deterministic_mean() {
        let mut cfg = SystemConfig::default();
        cfg.mobility.alpha = [0.0, 0.0];
        cfg.mobility.kappa_bar = [0.0, 0.0];
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let start = MobilityState::initial(&cfg);
        let next = mobility_step(&start, &cfg, &mut rng);
        for k in 0..cfg.system.k {
            assert_eq!(next.velocity[k], cfg.mobility.v_bar);
        }
    }

    #[test]
    fn mobility_stationary_mean_matches_v_bar() {
        let cfg = cfg_with_k_m(1, 0);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut state = MobilityState::initial(&cfg);
        let n = 100_000usize;
        let mut sum = [0.0f64; 2];
        for _ in 0..n {
            state = mobility_step(&state, &cfg, &mut rng);
            sum[0] += state.velocity[0][0];
            sum[1] += state.velocity[0][1];
        }
        // AR(1) stationary variance kappa^2 varsigma^2; the mean of n
        // correlated samples has se = sqrt(var (1+a)/(1-a) / n).
        let a = cfg.mobility.alpha[0];
        let var = (cfg.mobility.kappa_bar[0] * cfg.mobility.varsigma).powi(2);
        let se = (var * (1.0 + a) / (1.0 - a) / n as f64).sqrt();
        for axis in 0..2 {
            let mean = sum[axis] / n as f64;
            assert!(
                (mean - cfg.mobility.v_bar[axis]).abs() < 3.0 * se,
                "axis {axis}: mean {mean} vs {} (3se = {})",
                cfg.mobility.v_bar[axis],
                3.0 * se
            );
        }
    }

    #[test]
    fn path_loss_reference_points() {
        let cfg = SystemConfig::default();
        let direct = path_loss(10.0, LinkKind::EdBs, &cfg).unwrap();
        assert!((direct - 1e-7).abs() / 1e-7 < 1e-12);
        for kind in [LinkKind::EdIrs, LinkKind::EdBs, LinkKind::IrsBs] {
            assert!((path_loss(1.0, kind, &cfg).unwrap() - 1e-3).abs() < 1e-18);
        }
        let d = (50.0f64).hypot(10.0);
        let ib = path_loss(d, LinkKind::IrsBs, &cfg).unwrap();
        assert!((ib - 1e-3 * d.powf(-2.2)).abs() / ib < 1e-12);
    }

    #[test]
    fn path_loss_rejects_non_positive_distance() {
        let cfg = SystemConfig::default();
        assert!(path_loss(0.0, LinkKind::EdBs, &cfg).is_err());
        assert!(path_loss(-4.0, LinkKind::EdIrs, &cfg).is_err());
    }

    #[test]
    fn infinite_rician_factor_is_deterministic() {
        let mut cfg = cfg_with_k_m(2, 8);
        cfg.channel.delta = f64::INFINITY;
        let mob = MobilityState::initial(&cfg);
        let mut rng_a = ChaCha12Rng::seed_from_u64(1);
        let mut rng_b = ChaCha12Rng::seed_from_u64(2);
        let a = draw_channels(&mob, &cfg, &mut rng_a);
        let b = draw_channels(&mob, &cfg, &mut rng_b);
        for m in 0..cfg.system.m {
            assert_eq!(a.h_r[m], b.h_r[m], "LoS-only draw must not consume noise");
        }
    }

    #[test]
    fn zero_rician_factor_gives_rayleigh_power() {
        let mut cfg = cfg_with_k_m(1, 4);
        cfg.channel.delta = 0.0;
        let mob = MobilityState::initial(&cfg);
        let beta_ib = path_loss(
            distance(cfg.geometry.irs, cfg.geometry.bs),
            LinkKind::IrsBs,
            &cfg,
        )
        .unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let draws = 100_000usize;
        let mut sum = 0.0;
        for _ in 0..draws {
            let ch = draw_channels(&mob, &cfg, &mut rng);
            sum += ch.h_r.iter().map(|h| h.norm_sqr()).sum::<f64>();
        }
        let mean = sum / (draws * cfg.system.m) as f64;
        assert!(
            (mean - beta_ib).abs() / beta_ib < 0.03,
            "mean power {mean} vs {beta_ib}"
        );
    }

    #[test]
    fn direct_path_second_moment_matches_path_loss() {
        let cfg = cfg_with_k_m(4, 0);
        let mob = MobilityState::initial(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let draws = 100_000usize;
        let mut sums = vec![0.0f64; cfg.system.k];
        for _ in 0..draws {
            let ch = draw_channels(&mob, &cfg, &mut rng);
            for k in 0..cfg.system.k {
                sums[k] += ch.h_d[k].norm_sqr();
            }
        }
        for k in 0..cfg.system.k {
            let beta = path_loss(
                distance(cfg.geometry.eds[k], cfg.geometry.bs),
                LinkKind::EdBs,
                &cfg,
            )
            .unwrap();
            let mean = sums[k] / draws as f64;
            assert!(
                (mean - beta).abs() / beta < 0.03,
                "ED {k}: {mean} vs {beta}"
            );
        }
    }

    #[test]
    fn identity_reflection_sums_elements() {
        let cfg = cfg_with_k_m(2, 8);
        let mob = MobilityState::initial(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let ch = draw_channels(&mob, &cfg, &mut rng);
        let combined = combine_with_irs(&ch, &vec![0.0; cfg.system.m]);
        for k in 0..cfg.system.k {
            let direct_sum: Complex64 = ch
                .h_r
                .iter()
                .zip(&ch.g[k])
                .map(|(hr, gk)| hr * gk)
                .sum();
            let expect = ch.h_d[k] + direct_sum;
            assert!((combined.h_combined[k] - expect).norm() < 1e-18);
        }
    }

    #[test]
    fn no_elements_leaves_direct_path() {
        let cfg = cfg_with_k_m(3, 0);
        let mob = MobilityState::initial(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let ch = draw_channels(&mob, &cfg, &mut rng);
        let combined = combine_with_irs(&ch, &[]);
        assert_eq!(combined.h_combined, ch.h_d);
    }

    #[test]
    fn unit_modulus_phase_preserves_magnitude() {
        for x in [-1.0, -0.37, 0.0, 0.5, 1.0] {
            assert!((reflection_coefficient(x).norm() - 1.0).abs() < 1e-15);
        }
        let cfg = cfg_with_k_m(1, 1);
        let mob = MobilityState::initial(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        let mut ch = draw_channels(&mob, &cfg, &mut rng);
        ch.h_d[0] = Complex64::ZERO;
        let reference = (ch.h_r[0] * ch.g[0][0]).norm();
        for control in [-0.9, -0.2, 0.0, 0.4, 1.0] {
            let combined = combine_with_irs(&ch, &[control]);
            assert!((combined.h_combined[0].norm() - reference).abs() < 1e-18 + reference * 1e-12);
        }
    }

    #[test]
    fn out_of_range_controls_clamp_and_count() {
        let cfg = cfg_with_k_m(1, 3);
        let mob = MobilityState::initial(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let ch = draw_channels(&mob, &cfg, &mut rng);
        let wild = combine_with_irs(&ch, &[2.0, 0.1, -5.0]);
        let tame = combine_with_irs(&ch, &[1.0, 0.1, -1.0]);
        assert_eq!(wild.theta_saturations, 2);
        assert_eq!(tame.theta_saturations, 0);
        assert_eq!(wild.h_combined, tame.h_combined);
    }

    #[test]
    fn decode_order_sorts_descending_with_index_ties() {
        let gains = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(2.0, 0.0),
        ];
        let order = sort_decode_order(&gains);
        assert_eq!(order, vec![1, 3, 0, 2]);
        // Re-sorting the output is a no-op.
        let sorted_gains: Vec<Complex64> = order.iter().map(|&i| gains[i]).collect();
        let again = sort_decode_order(&sorted_gains);
        assert_eq!(again, vec![0, 1, 2, 3]);
    }

    #[test]
    fn zero_power_gives_zero_rates() {
        let cfg = cfg_with_k_m(4, 4);
        let mob = MobilityState::initial(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let ch = combine_with_irs(&draw_channels(&mob, &cfg, &mut rng), &vec![0.0; 4]);
        let rates = noma_rates(&ch, &[0.0; 4], &cfg).unwrap();
        assert_eq!(rates, vec![0.0; 4]);
    }

    #[test]
    fn single_user_rate_has_no_interference() {
        let cfg = cfg_with_k_m(1, 2);
        let mob = MobilityState::initial(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let ch = combine_with_irs(&draw_channels(&mob, &cfg, &mut rng), &[0.0, 0.0]);
        let p = cfg.system.rho_max;
        let rates = noma_rates(&ch, &[p], &cfg).unwrap();
        let expect = cfg.system.bandwidth
            * (1.0 + p * ch.h_combined[0].norm_sqr() / cfg.system.sigma2).log2();
        assert!((rates[0] - expect).abs() / expect < 1e-15);
    }

    #[test]
    fn negative_power_is_a_domain_error() {
        let cfg = cfg_with_k_m(2, 0);
        let mob = MobilityState::initial(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let ch = combine_with_irs(&draw_channels(&mob, &cfg, &mut rng), &[]);
        assert_eq!(
            noma_rates(&ch, &[0.5, -0.1], &cfg),
            Err(ChannelError::NegativePower(-0.1, 1))
        );
    }

    #[test]
    fn sic_rates_telescope_to_pooled_capacity() {
        let cfg = cfg_with_k_m(4, 8);
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let mut mob = MobilityState::initial(&cfg);
        for _ in 0..1000 {
            mob = mobility_step(&mob, &cfg, &mut rng);
            let controls: Vec<f64> = (0..cfg.system.m)
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect();
            let ch = combine_with_irs(&draw_channels(&mob, &cfg, &mut rng), &controls);
            let powers: Vec<f64> = (0..cfg.system.k)
                .map(|_| rng.random::<f64>() * cfg.system.rho_max)
                .collect();
            let rates = noma_rates(&ch, &powers, &cfg).unwrap();
            let sum: f64 = rates.iter().sum();
            let pooled: f64 = powers
                .iter()
                .zip(&ch.h_combined)
                .map(|(p, h)| p * h.norm_sqr())
                .sum();
            let capacity = cfg.system.bandwidth * (1.0 + pooled / cfg.system.sigma2).log2();
            assert!(
                (sum - capacity).abs() <= 1e-9 * capacity.abs().max(1e-300),
                "telescoping broke: {sum} vs {capacity}"
            );
        }
    }

    #[test]
    fn rate_is_monotone_in_own_power() {
        let cfg = cfg_with_k_m(4, 4);
        let mob = MobilityState::initial(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let ch = combine_with_irs(&draw_channels(&mob, &cfg, &mut rng), &vec![0.2; 4]);
        let mut powers = vec![0.3, 0.2, 0.7, 0.4];
        let mut last = 0.0;
        for step in 0..20 {
            powers[2] = 0.05 * step as f64;
            let r = noma_rates(&ch, &powers, &cfg).unwrap()[2];
            assert!(r >= last - 1e-12, "rate dropped when own power rose");
            last = r;
        }
    }

    #[test]
    fn rate_cap_dominates_realized_rates() {
        let cfg = SystemConfig::default();
        let cap = offload_rate_cap(&cfg, cfg.channel.fade_margin, cfg.channel.geometry_margin);
        let mut rng = ChaCha12Rng::seed_from_u64(40);
        let mut mob = MobilityState::initial(&cfg);
        for _ in 0..2000 {
            mob = mobility_step(&mob, &cfg, &mut rng);
            let controls: Vec<f64> = (0..cfg.system.m)
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect();
            let ch = combine_with_irs(&draw_channels(&mob, &cfg, &mut rng), &controls);
            let rates = noma_rates(&ch, &vec![cfg.system.rho_max; cfg.system.k], &cfg).unwrap();
            for r in rates {
                assert!(r <= cap, "realized rate {r} above cap {cap}");
            }
        }
    }
}
