//! Sampled statistics of the channel generator against independent
//! closed forms and numerical integrals.

use approx::assert_relative_eq;
use cellfree_gnn::channel::{
    compute_v, mmse_estimate, random_pilot_reuse, sample_channels, sample_topology, PathLoss,
    PilotNoise, SystemConfig,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Probability that `n` uniform draws from `d` values are not all distinct.
fn birthday(n: usize, d: usize) -> f64 {
    1.0 - (0..n).map(|i| (d - i) as f64 / d as f64).product::<f64>()
}

#[test]
fn pilot_reuse_collisions_follow_birthday_probability() {
    let expected = birthday(4, 4);
    assert_relative_eq!(expected, 0.90625, max_relative = 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 100_000;
    let hits = (0..draws)
        .filter(|_| {
            let mut idx = random_pilot_reuse(4, 4, &mut rng);
            idx.sort_unstable();
            idx.windows(2).any(|w| w[0] == w[1])
        })
        .count();
    assert_relative_eq!(hits as f64 / draws as f64, expected, max_relative = 0.02);
}

/// Mean of the clamped gain over a uniform point on the torus, by the
/// midpoint rule on one quadrant of the centered square.
fn spatial_mean_gain(pl: &PathLoss, side: f64, cells: usize) -> f64 {
    let h = side / 2.0 / cells as f64;
    let mut total = 0.0;
    for i in 0..cells {
        let x = (i as f64 + 0.5) * h;
        for j in 0..cells {
            let y = (j as f64 + 0.5) * h;
            total += pl.clamped_gain(x.hypot(y));
        }
    }
    total / (cells * cells) as f64
}

#[test]
fn mean_large_scale_fading_matches_spatial_average() {
    let cfg = SystemConfig {
        num_aps: 50,
        num_ues: 50,
        ..SystemConfig::default()
    };
    let analytic = spatial_mean_gain(&cfg.path_loss, cfg.area_side, 2000);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let draws = 10_000;
    let mut sum = 0.0;
    for _ in 0..draws {
        sum += sample_topology(&cfg, &mut rng)
            .sigma
            .data()
            .iter()
            .sum::<f64>();
    }
    let empirical = sum / (draws * cfg.num_aps * cfg.num_ues) as f64;
    assert_relative_eq!(empirical, analytic, max_relative = 0.02);
}

fn small_config() -> SystemConfig {
    SystemConfig {
        num_aps: 2,
        num_ues: 3,
        antennas: 2,
        pilot_len: 2,
        pilot_snr: 5.0,
        area_side: 150.0,
        ..SystemConfig::default()
    }
}

#[test]
fn channel_draws_have_the_fading_variance() {
    let cfg = small_config();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let topo = sample_topology(&cfg, &mut rng);
    let draws = 100_000;
    let (k, n) = topo.sigma.shape();
    let mut power = vec![0.0; k * n];
    let mut re = vec![0.0; k * n];
    let mut im = vec![0.0; k * n];
    for _ in 0..draws {
        let h = sample_channels(&topo, &cfg, &mut rng);
        for ap in 0..k {
            for ue in 0..n {
                for z in h.channel(ap, ue) {
                    power[ap * n + ue] += z.norm_sqr();
                    re[ap * n + ue] += z.re * z.re;
                    im[ap * n + ue] += z.im * z.im;
                }
            }
        }
    }
    let count = (draws * cfg.antennas) as f64;
    for ap in 0..k {
        for ue in 0..n {
            let s = topo.sigma.get(ap, ue);
            let i = ap * n + ue;
            assert_relative_eq!(power[i] / count, s, max_relative = 0.01);
            assert_relative_eq!(re[i] / count, s / 2.0, max_relative = 0.02);
            assert_relative_eq!(im[i] / count, s / 2.0, max_relative = 0.02);
        }
    }
}

#[test]
fn channel_draws_are_seeded() {
    let cfg = small_config();
    let topo = sample_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(14));
    let a = sample_channels(&topo, &cfg, &mut ChaCha8Rng::seed_from_u64(15));
    let b = sample_channels(&topo, &cfg, &mut ChaCha8Rng::seed_from_u64(15));
    for ap in 0..cfg.num_aps {
        for ue in 0..cfg.num_ues {
            assert_eq!(a.channel(ap, ue), b.channel(ap, ue));
        }
    }
}

/// Three UEs on two pilots, so two of them contaminate each other.
#[test]
fn estimates_have_power_v_and_are_orthogonal_to_their_error() {
    let cfg = small_config();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut topo = sample_topology(&cfg, &mut rng);
    topo.pilot_index = vec![0, 0, 1];
    let stats = compute_v(&topo, &cfg);
    let (k, n) = topo.sigma.shape();
    let draws = 100_000;
    let mut power = vec![0.0; k * n];
    // Per-sample products ĥ (h − ĥ)* for the orthogonality check.
    let mut cross = vec![Complex64::new(0.0, 0.0); k * n];
    let mut cross_sq = vec![[0.0; 2]; k * n];
    for _ in 0..draws {
        let h = sample_channels(&topo, &cfg, &mut rng);
        let noise = PilotNoise::sample(&cfg, &mut rng);
        let est = mmse_estimate(&h, &topo, &cfg, &noise);
        for ap in 0..k {
            for ue in 0..n {
                let i = ap * n + ue;
                for (e, t) in est.channel(ap, ue).iter().zip(h.channel(ap, ue)) {
                    power[i] += e.norm_sqr();
                    let c = e * (t - e).conj();
                    cross[i] += c;
                    cross_sq[i][0] += c.re * c.re;
                    cross_sq[i][1] += c.im * c.im;
                }
            }
        }
    }
    let count = (draws * cfg.antennas) as f64;
    for ap in 0..k {
        for ue in 0..n {
            let i = ap * n + ue;
            assert_relative_eq!(power[i] / count, stats.v.get(ap, ue), max_relative = 0.01);
            let mean = cross[i] / count;
            let se_re = ((cross_sq[i][0] / count - mean.re * mean.re) / count).sqrt();
            let se_im = ((cross_sq[i][1] / count - mean.im * mean.im) / count).sqrt();
            assert!(
                mean.re.abs() < 3.0 * se_re,
                "AP {ap} UE {ue}: re {} vs se {se_re}",
                mean.re
            );
            assert!(
                mean.im.abs() < 3.0 * se_im,
                "AP {ap} UE {ue}: im {} vs se {se_im}",
                mean.im
            );
        }
    }
}
