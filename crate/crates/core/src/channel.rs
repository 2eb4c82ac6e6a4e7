//! Random network instances and the channel statistics derived from them.
//!
//! A network is `K` multi-antenna APs and `N` single-antenna UEs dropped
//! uniformly on a square with wrap-around distances. Large-scale fading
//! follows a three-slope path-loss law; small-scale fading is i.i.d.
//! Rayleigh across antennas. APs estimate channels from uplink pilots with
//! an MMSE estimator, and the per-antenna second moment of that estimate
//! (`v`) is the sufficient statistic for the closed-form downlink rate.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::precise;

/// Three-slope path loss, normalized so the gain is 1 at the far breakpoint.
///
/// Gain is `(d1/d)^3.5` beyond `d1`, `(d1/d)^3` between `d0` and `d1`, and
/// continues with exponent 2 below `d0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathLoss {
    pub d0: f64,
    pub d1: f64,
    pub near_exponent: f64,
    pub mid_exponent: f64,
    pub far_exponent: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        Self {
            d0: 10.0,
            d1: 50.0,
            near_exponent: 2.0,
            mid_exponent: 3.0,
            far_exponent: 3.5,
        }
    }
}

impl PathLoss {
    /// Linear power gain at distance `d` meters.
    pub fn gain(&self, d: f64) -> f64 {
        if d >= self.d1 {
            (self.d1 / d).powf(self.far_exponent)
        } else if d >= self.d0 {
            (self.d1 / d).powf(self.mid_exponent)
        } else {
            (self.d1 / self.d0).powf(self.mid_exponent) * (self.d0 / d).powf(self.near_exponent)
        }
    }

    /// Gain with the distance clamped below at `d0`, as used for topologies.
    pub fn clamped_gain(&self, d: f64) -> f64 {
        self.gain(d.max(self.d0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    pub num_aps: usize,
    pub num_ues: usize,
    pub antennas: usize,
    pub pilot_len: usize,
    /// Normalized pilot SNR, linear.
    pub pilot_snr: f64,
    /// Normalized downlink SNR, linear.
    pub downlink_snr: f64,
    /// Side of the square deployment area in meters.
    pub area_side: f64,
    pub path_loss: PathLoss,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_aps: 20,
            num_ues: 6,
            antennas: 4,
            pilot_len: 10,
            pilot_snr: 100.0,
            downlink_snr: 100.0,
            area_side: 1000.0,
            path_loss: PathLoss::default(),
            seed: 0,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_aps", self.num_aps),
            ("num_ues", self.num_ues),
            ("antennas", self.antennas),
            ("pilot_len", self.pilot_len),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        let positive = [
            ("pilot_snr", self.pilot_snr),
            ("downlink_snr", self.downlink_snr),
            ("area_side", self.area_side),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
        let pl = &self.path_loss;
        if !(pl.d0 > 0.0 && pl.d1 > pl.d0) {
            return Err(Error::Config("path loss needs 0 < d0 < d1".into()));
        }
        Ok(())
    }

    /// Same system with a different network size.
    pub fn with_size(&self, num_aps: usize, num_ues: usize) -> Self {
        Self {
            num_aps,
            num_ues,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    pub ap_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    /// Large-scale fading, `K × N`, linear power gain.
    pub sigma: Tensor,
    pub pilot_index: Vec<usize>,
}

impl Topology {
    pub fn num_aps(&self) -> usize {
        self.sigma.rows()
    }

    pub fn num_ues(&self) -> usize {
        self.sigma.cols()
    }

    pub fn gram(&self) -> Tensor {
        pilot_gram(&self.pilot_index)
    }
}

/// A topology together with the system it was drawn for; this is the unit
/// written to and read from instance files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub config: SystemConfig,
    #[serde(serialize_with = "precise::serialize")]
    pub ap_positions: Vec<[f64; 2]>,
    #[serde(serialize_with = "precise::serialize")]
    pub ue_positions: Vec<[f64; 2]>,
    #[serde(
        serialize_with = "precise::serialize",
        deserialize_with = "precise::tensor_from_rows"
    )]
    pub sigma: Tensor,
    pub pilot_index: Vec<usize>,
}

impl Instance {
    pub fn new(config: SystemConfig, topology: Topology) -> Self {
        Self {
            config,
            ap_positions: topology.ap_positions,
            ue_positions: topology.ue_positions,
            sigma: topology.sigma,
            pilot_index: topology.pilot_index,
        }
    }

    /// Draws a fresh instance for `config`.
    pub fn sample<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Self {
        Self::new(config.clone(), sample_topology(config, rng))
    }

    pub fn topology(&self) -> Topology {
        Topology {
            ap_positions: self.ap_positions.clone(),
            ue_positions: self.ue_positions.clone(),
            sigma: self.sigma.clone(),
            pilot_index: self.pilot_index.clone(),
        }
    }

    pub fn stats(&self) -> ChannelStats {
        compute_v(&self.topology(), &self.config)
    }

    pub fn scenario(&self) -> Scenario {
        let topology = self.topology();
        let stats = compute_v(&topology, &self.config);
        Scenario {
            config: self.config.clone(),
            topology,
            stats,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(s)?;
        inst.config.validate()?;
        let (k, n) = inst.sigma.shape();
        if k != inst.config.num_aps
            || n != inst.config.num_ues
            || inst.ap_positions.len() != k
            || inst.ue_positions.len() != n
            || inst.pilot_index.len() != n
        {
            return Err(Error::Config(format!(
                "instance dimensions disagree with config (K={}, N={})",
                inst.config.num_aps, inst.config.num_ues
            )));
        }
        if inst.pilot_index.iter().any(|&p| p >= inst.config.pilot_len) {
            return Err(Error::Config("pilot index out of range".into()));
        }
        Ok(inst)
    }
}

/// An instance with its statistics computed, ready for allocators.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub config: SystemConfig,
    pub topology: Topology,
    pub stats: ChannelStats,
}

impl Scenario {
    pub fn sample<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Self {
        Instance::sample(config, rng).scenario()
    }

    pub fn num_aps(&self) -> usize {
        self.topology.num_aps()
    }

    pub fn num_ues(&self) -> usize {
        self.topology.num_ues()
    }
}

/// Orthonormal pilot book and the pilot cross-correlation of an assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct PilotBook {
    /// `τ_p × τ_p`; column `t` is pilot sequence `t`.
    pub pilots: Tensor,
    /// `N × N`, entry `(n, n')` is `|θ_nᴴ θ_n'|²`.
    pub gram: Tensor,
}

impl PilotBook {
    pub fn new(pilot_len: usize, pilot_index: &[usize]) -> Self {
        Self {
            pilots: Tensor::identity(pilot_len),
            gram: pilot_gram(pilot_index),
        }
    }

    pub fn sequence(&self, t: usize) -> Vec<f64> {
        (0..self.pilots.rows())
            .map(|r| self.pilots.get(r, t))
            .collect()
    }
}

fn pilot_gram(pilot_index: &[usize]) -> Tensor {
    let n = pilot_index.len();
    Tensor::from_fn(n, n, |a, b| {
        if pilot_index[a] == pilot_index[b] {
            1.0
        } else {
            0.0
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelStats {
    /// Per-antenna mean-square of the MMSE estimate, `K × N`.
    pub v: Tensor,
    pub sigma: Tensor,
    pub gram: Tensor,
    pub downlink_snr: f64,
    pub antennas: usize,
}

impl ChannelStats {
    pub fn num_aps(&self) -> usize {
        self.v.rows()
    }

    pub fn num_ues(&self) -> usize {
        self.v.cols()
    }
}

/// Toroidal distance on a square of side `side`.
pub fn wrap_distance(a: [f64; 2], b: [f64; 2], side: f64) -> f64 {
    let axis = |x: f64, y: f64| {
        let d = (x - y).abs();
        d.min(side - d)
    };
    axis(a[0], b[0]).hypot(axis(a[1], b[1]))
}

pub fn sample_topology<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Topology {
    let side = config.area_side;
    let mut point = || [rng.random::<f64>() * side, rng.random::<f64>() * side];
    let ap_positions: Vec<[f64; 2]> = (0..config.num_aps).map(|_| point()).collect();
    let ue_positions: Vec<[f64; 2]> = (0..config.num_ues).map(|_| point()).collect();
    let sigma = Tensor::from_fn(config.num_aps, config.num_ues, |k, n| {
        config
            .path_loss
            .clamped_gain(wrap_distance(ap_positions[k], ue_positions[n], side))
    });
    let (pilot_index, _) = assign_pilots(config.num_ues, config.pilot_len, rng);
    Topology {
        ap_positions,
        ue_positions,
        sigma,
        pilot_index,
    }
}

/// Distinct pilots when there are enough of them, otherwise uniform reuse.
pub fn assign_pilots<R: Rng + ?Sized>(
    num_ues: usize,
    pilot_len: usize,
    rng: &mut R,
) -> (Vec<usize>, Tensor) {
    let index = if num_ues <= pilot_len {
        let mut all: Vec<usize> = (0..pilot_len).collect();
        all.shuffle(rng);
        all.truncate(num_ues);
        all
    } else {
        random_pilot_reuse(num_ues, pilot_len, rng)
    };
    let gram = pilot_gram(&index);
    (index, gram)
}

/// Independent uniform pilot draws, collisions allowed.
pub fn random_pilot_reuse<R: Rng + ?Sized>(
    num_ues: usize,
    pilot_len: usize,
    rng: &mut R,
) -> Vec<usize> {
    (0..num_ues)
        .map(|_| rng.random_range(0..pilot_len))
        .collect()
}

/// `v_kn = τρ_p ς²_kn / (τρ_p Σ_n' ς_kn' |θ_nᴴθ_n'|² + 1)`.
pub fn compute_v(topology: &Topology, config: &SystemConfig) -> ChannelStats {
    let gram = topology.gram();
    let sigma = &topology.sigma;
    let (k, n) = sigma.shape();
    let tp = config.pilot_len as f64 * config.pilot_snr;
    let v = Tensor::from_fn(k, n, |ap, ue| {
        let contaminated: f64 = (0..n)
            .map(|other| sigma.get(ap, other) * gram.get(ue, other))
            .sum();
        tp * sigma.get(ap, ue).powi(2) / (tp * contaminated + 1.0)
    });
    ChannelStats {
        v,
        sigma: sigma.clone(),
        gram,
        downlink_snr: config.downlink_snr,
        antennas: config.antennas,
    }
}

/// One small-scale fading draw: `K × N` vectors of `M` complex gains.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub num_aps: usize,
    pub num_ues: usize,
    pub antennas: usize,
    data: Vec<Complex64>,
}

impl ChannelRealization {
    fn zeros(num_aps: usize, num_ues: usize, antennas: usize) -> Self {
        Self {
            num_aps,
            num_ues,
            antennas,
            data: vec![Complex64::new(0.0, 0.0); num_aps * num_ues * antennas],
        }
    }

    pub fn channel(&self, ap: usize, ue: usize) -> &[Complex64] {
        let start = (ap * self.num_ues + ue) * self.antennas;
        &self.data[start..start + self.antennas]
    }

    fn channel_mut(&mut self, ap: usize, ue: usize) -> &mut [Complex64] {
        let start = (ap * self.num_ues + ue) * self.antennas;
        &mut self.data[start..start + self.antennas]
    }
}

/// Receiver noise on the uplink pilot block, `K` matrices of `M × τ_p`.
#[derive(Clone, Debug)]
pub struct PilotNoise {
    pub antennas: usize,
    pub pilot_len: usize,
    data: Vec<Complex64>,
}

impl PilotNoise {
    pub fn zeros(num_aps: usize, antennas: usize, pilot_len: usize) -> Self {
        Self {
            antennas,
            pilot_len,
            data: vec![Complex64::new(0.0, 0.0); num_aps * antennas * pilot_len],
        }
    }

    pub fn sample<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Self {
        let mut out = Self::zeros(config.num_aps, config.antennas, config.pilot_len);
        for z in &mut out.data {
            *z = complex_normal(1.0, rng);
        }
        out
    }

    fn at(&self, ap: usize, antenna: usize, t: usize) -> Complex64 {
        self.data[(ap * self.antennas + antenna) * self.pilot_len + t]
    }
}

/// Circularly-symmetric complex Gaussian with the given variance.
pub fn complex_normal<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

pub fn sample_channels<R: Rng + ?Sized>(
    topology: &Topology,
    config: &SystemConfig,
    rng: &mut R,
) -> ChannelRealization {
    let (k, n) = topology.sigma.shape();
    let mut out = ChannelRealization::zeros(k, n, config.antennas);
    for ap in 0..k {
        for ue in 0..n {
            let var = topology.sigma.get(ap, ue);
            for h in out.channel_mut(ap, ue) {
                *h = complex_normal(var, rng);
            }
        }
    }
    out
}

/// MMSE channel estimates from the received pilot block
/// `Y_k = √(τρ_p) Σ_n h_kn θ_nᴴ + Ξ_k`, projected on each UE's pilot.
pub fn mmse_estimate(
    realization: &ChannelRealization,
    topology: &Topology,
    config: &SystemConfig,
    noise: &PilotNoise,
) -> ChannelRealization {
    let (k, n) = topology.sigma.shape();
    let m = config.antennas;
    let tau = config.pilot_len;
    let book = PilotBook::new(tau, &topology.pilot_index);
    let amp = (tau as f64 * config.pilot_snr).sqrt();
    let tp = tau as f64 * config.pilot_snr;
    let mut out = ChannelRealization::zeros(k, n, m);

    let mut received = vec![Complex64::new(0.0, 0.0); m * tau];
    for ap in 0..k {
        for antenna in 0..m {
            for t in 0..tau {
                received[antenna * tau + t] = noise.at(ap, antenna, t);
            }
        }
        for ue in 0..n {
            let theta = book.sequence(topology.pilot_index[ue]);
            let h = realization.channel(ap, ue);
            for antenna in 0..m {
                for (t, &th) in theta.iter().enumerate() {
                    // θ is real, so θᴴ = θᵀ.
                    received[antenna * tau + t] += amp * h[antenna] * th;
                }
            }
        }
        for ue in 0..n {
            let theta = book.sequence(topology.pilot_index[ue]);
            let contaminated: f64 = (0..n)
                .map(|other| topology.sigma.get(ap, other) * book.gram.get(ue, other))
                .sum();
            let coeff = amp * topology.sigma.get(ap, ue) / (tp * contaminated + 1.0);
            let est = out.channel_mut(ap, ue);
            for (antenna, e) in est.iter_mut().enumerate() {
                let projected: Complex64 = theta
                    .iter()
                    .enumerate()
                    .map(|(t, &th)| received[antenna * tau + t] * th)
                    .sum();
                *e = projected * coeff;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_config() -> SystemConfig {
        SystemConfig {
            num_aps: 3,
            num_ues: 2,
            antennas: 2,
            pilot_len: 2,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn topology_is_deterministic_per_seed() {
        let cfg = tiny_config();
        let a = sample_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let b = sample_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        let c = sample_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(6));
        assert_ne!(a, c);
    }

    #[test]
    fn colocated_pair_gets_clamped_gain() {
        let pl = PathLoss::default();
        let at_d0 = (50.0_f64 / 10.0).powi(3);
        assert_eq!(pl.clamped_gain(0.0), at_d0);
        assert_eq!(pl.clamped_gain(3.0), at_d0);
        assert_eq!(pl.gain(50.0), 1.0);
    }

    #[test]
    fn path_loss_is_continuous_and_non_increasing() {
        let pl = PathLoss::default();
        for &bp in &[pl.d0, pl.d1] {
            let lo = pl.gain(bp * (1.0 - 1e-12));
            let hi = pl.gain(bp);
            assert!((lo - hi).abs() / hi < 1e-9);
        }
        let mut prev = f64::INFINITY;
        for i in 0..2000 {
            let d = pl.d0 + i as f64 * 0.5;
            let g = pl.gain(d);
            assert!(g <= prev);
            prev = g;
        }
    }

    #[test]
    fn wrap_distance_uses_shorter_way_around() {
        assert!((wrap_distance([10.0, 0.0], [990.0, 0.0], 1000.0) - 20.0).abs() < 1e-12);
        assert!((wrap_distance([0.0, 0.0], [3.0, 4.0], 1000.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_pilots_when_enough() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (idx, gram) = assign_pilots(3, 5, &mut rng);
        assert_eq!(gram, Tensor::identity(3));
        let mut sorted = idx.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 3);
    }

    #[test]
    fn pigeonhole_forces_sharing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let (_, gram) = assign_pilots(4, 2, &mut rng);
            let off: f64 = gram.sum() - 4.0;
            assert!(off >= 2.0, "at least one colliding pair (counted twice)");
            for i in 0..4 {
                assert_eq!(gram.get(i, i), 1.0);
                for j in 0..4 {
                    assert_eq!(gram.get(i, j), gram.get(j, i));
                }
            }
        }
    }

    #[test]
    fn v_single_ue_substitution() {
        let cfg = SystemConfig {
            num_aps: 1,
            num_ues: 1,
            antennas: 1,
            pilot_len: 1,
            pilot_snr: 1.0,
            ..SystemConfig::default()
        };
        let topo = Topology {
            ap_positions: vec![[0.0, 0.0]],
            ue_positions: vec![[0.0, 0.0]],
            sigma: Tensor::scalar(1.0),
            pilot_index: vec![0],
        };
        assert_eq!(compute_v(&topo, &cfg).v.item(), Some(0.5));
    }

    #[test]
    fn v_approaches_sigma_at_high_pilot_snr() {
        let mut cfg = tiny_config();
        cfg.pilot_snr = 1e8 / cfg.pilot_len as f64;
        let mut topo = sample_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        topo.pilot_index = vec![1, 0];
        topo.sigma =
            Tensor::from_rows(&[vec![0.01, 1.0], vec![125.0, 0.3], vec![0.05, 2.0]]).unwrap();
        let stats = compute_v(&topo, &cfg);
        for (v, s) in stats.v.data().iter().zip(topo.sigma.data()) {
            assert!((v - s).abs() / s < 1e-6, "v={v} sigma={s}");
            assert!(v <= s);
        }
    }

    #[test]
    fn v_monotonicity() {
        let cfg = SystemConfig {
            num_aps: 1,
            num_ues: 2,
            antennas: 1,
            pilot_len: 1,
            ..SystemConfig::default()
        };
        let topo = |s0: f64, s1: f64| Topology {
            ap_positions: vec![[0.0, 0.0]],
            ue_positions: vec![[0.0, 0.0]; 2],
            sigma: Tensor::row_vector(vec![s0, s1]),
            pilot_index: vec![0, 0],
        };
        let v = |s0, s1| compute_v(&topo(s0, s1), &cfg).v.get(0, 0);
        assert!(v(0.2, 0.1) > v(0.1, 0.1));
        assert!(v(0.1, 0.2) < v(0.1, 0.1));
    }

    #[test]
    fn noise_free_estimate_recovers_channel() {
        let mut cfg = tiny_config();
        cfg.pilot_snr = 1e8 / cfg.pilot_len as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut topo = sample_topology(&cfg, &mut rng);
        topo.pilot_index = vec![0, 1];
        let h = sample_channels(&topo, &cfg, &mut rng);
        let noise = PilotNoise::zeros(cfg.num_aps, cfg.antennas, cfg.pilot_len);
        let est = mmse_estimate(&h, &topo, &cfg, &noise);
        for ap in 0..cfg.num_aps {
            for ue in 0..cfg.num_ues {
                for (a, b) in h.channel(ap, ue).iter().zip(est.channel(ap, ue)) {
                    assert!((a - b).norm() / a.norm() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn instance_json_roundtrip() {
        let cfg = tiny_config();
        let inst = Instance::sample(&cfg, &mut ChaCha8Rng::seed_from_u64(8));
        let text = inst.to_json().unwrap();
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = tiny_config();
        cfg.num_ues = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = tiny_config();
        cfg.downlink_snr = -1.0;
        assert!(cfg.validate().is_err());
    }
}
