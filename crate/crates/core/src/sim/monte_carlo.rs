//! Frame-level Monte Carlo: channel draw, allocation, transmission, ML
//! decision and error tallies.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{amplifier_caps, sample_channels_with, ChannelRealization, CsitMode, NetworkConfig, PowerAllocation};
use crate::objectives::{eta_from_code, PartialCsitObjective, PerfectCsitObjective, StatisticalCsitObjective};
use crate::onoff::solve_onoff;
use crate::rng::{complex_gaussian, derive_seed, shard_ranges, stream_rng};
use crate::sim::codebook::{generate_codebook, LdCodebook};
use crate::sim::link::{decode_with_gains, effective_channel, transmit_frame};
use crate::waterfill::solve_waterfill;
use crate::{Error, Result};

/// Smallest frame budget per point.
pub const MIN_FRAMES: u64 = 1_000;

const CODEBOOK_TAG: u64 = 0xC0DE;
const DRAW_CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// On-off gradient algorithm (perfect CSIT).
    OnOff,
    /// Waterfilling under the config's partial or statistical CSIT.
    Waterfill,
    /// Every relay at its cap.
    MaxPower,
    /// Coherent BPSK on one unit-variance Rayleigh link with the whole power.
    DirectLink,
}

impl Scheme {
    pub fn check_mode(self, mode: CsitMode) -> Result<()> {
        let ok = match self {
            Scheme::OnOff => mode == CsitMode::Perfect,
            Scheme::Waterfill => matches!(mode, CsitMode::Partial | CsitMode::Statistical),
            Scheme::MaxPower | Scheme::DirectLink => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("scheme {self:?} is incompatible with {mode:?} CSIT")))
        }
    }

    /// CSV label, e.g. `waterfill-statistical`.
    pub fn label(self, mode: CsitMode) -> String {
        match self {
            Scheme::OnOff => "onoff".into(),
            Scheme::Waterfill => match mode {
                CsitMode::Statistical => "waterfill-statistical".into(),
                _ => "waterfill-partial".into(),
            },
            Scheme::MaxPower => "maxpower".into(),
            Scheme::DirectLink => "direct".into(),
        }
    }
}

/// How an SNR value in dB maps to powers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrAxis {
    /// `p_s = p_r = 10^(snr/10) N0`.
    #[default]
    PerRelay,
    /// Network power `P = 10^(snr/10) N0` split as `p_s = p_r = P/(M+1)`.
    NetworkTotal,
}

/// Config with `p_s`, `p_r` set for one SNR point.
pub fn config_at_snr(cfg: &NetworkConfig, axis: SnrAxis, snr_db: f64) -> NetworkConfig {
    let power = 10f64.powf(snr_db / 10.0) * cfg.n0;
    let each = match axis {
        SnrAxis::PerRelay => power,
        SnrAxis::NetworkTotal => power / (cfg.relays + 1) as f64,
    };
    NetworkConfig {
        p_s: each,
        p_r: each,
        ..cfg.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub frames: u64,
    pub seed: u64,
    /// Work split; never changes results.
    pub shards: usize,
    pub axis: SnrAxis,
}

impl SimOptions {
    pub fn new(frames: u64, seed: u64) -> Self {
        SimOptions {
            frames,
            seed,
            shards: 1,
            axis: SnrAxis::PerRelay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimPoint {
    pub snr_db: f64,
    pub frames: u64,
    pub block_errors: u64,
    pub bit_errors: u64,
    /// Bits per frame.
    pub bits_per_frame: u64,
}

impl SimPoint {
    pub fn bler(&self) -> f64 {
        self.block_errors as f64 / self.frames as f64
    }

    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / (self.frames * self.bits_per_frame) as f64
    }

    /// Binomial standard error of [`bler`](Self::bler).
    pub fn stderr_bler(&self) -> f64 {
        let b = self.bler();
        (b * (1.0 - b) / self.frames as f64).sqrt()
    }

    pub fn stderr_ber(&self) -> f64 {
        let b = self.ber();
        (b * (1.0 - b) / (self.frames * self.bits_per_frame) as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub scheme: String,
    pub seed: u64,
    pub points: Vec<SimPoint>,
    pub elapsed: Duration,
}

pub const SIM_CSV_HEADER: &str = "scheme,snr_db,frames,block_errors,bit_errors,bler,ber,stderr_bler";

impl SimResult {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SIM_CSV_HEADER}\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6e},{:.6e},{:.6e}",
                self.scheme,
                p.snr_db,
                p.frames,
                p.block_errors,
                p.bit_errors,
                p.bler(),
                p.ber(),
                p.stderr_bler()
            );
        }
        out
    }
}

/// Per-draw allocation rule of a scheme, with anything that does not depend
/// on the draw computed up front.
#[derive(Debug, Clone)]
pub struct SchemeAllocator {
    cfg: NetworkConfig,
    scheme: Scheme,
    eta: f64,
    fixed: Option<PowerAllocation>,
}

impl SchemeAllocator {
    pub fn new(cfg: &NetworkConfig, scheme: Scheme, eta: f64) -> Result<Self> {
        cfg.validate()?;
        scheme.check_mode(cfg.csit_mode)?;
        if scheme == Scheme::DirectLink {
            return Err(Error::Config("the direct link has no relay allocation".into()));
        }
        let fixed = if cfg.csit_mode == CsitMode::Statistical {
            let caps = amplifier_caps(cfg, None)?;
            Some(match scheme {
                Scheme::Waterfill => {
                    let obj = StatisticalCsitObjective::from_variances(&cfg.gamma_h, &cfg.gamma_g, eta)?;
                    solve_waterfill(&obj, &caps)?.allocation
                }
                _ => PowerAllocation::full(&caps)?,
            })
        } else {
            None
        };
        Ok(SchemeAllocator {
            cfg: cfg.clone(),
            scheme,
            eta,
            fixed,
        })
    }

    pub fn allocate(&self, chan: &ChannelRealization) -> Result<PowerAllocation> {
        if let Some(p) = &self.fixed {
            return Ok(p.clone());
        }
        let caps = amplifier_caps(&self.cfg, Some(chan.h()))?;
        match self.scheme {
            Scheme::OnOff => {
                let obj = PerfectCsitObjective::from_channel(chan, self.eta)?;
                Ok(solve_onoff(&obj, &caps, None)?.0)
            }
            Scheme::Waterfill => {
                let obj = PartialCsitObjective::from_gains(&chan.h_gains(), &self.cfg.gamma_g, self.eta)?;
                Ok(solve_waterfill(&obj, &caps)?.allocation)
            }
            Scheme::MaxPower => PowerAllocation::full(&caps),
            Scheme::DirectLink => unreachable!("rejected in new"),
        }
    }
}

/// Codebook used by every run with this seed and block length.
pub fn run_codebook(block_len: usize, seed: u64) -> Result<LdCodebook> {
    generate_codebook(block_len, derive_seed(seed, CODEBOOK_TAG))
}

#[derive(Default, Clone, Copy)]
struct Tally {
    frames: u64,
    blocks: u64,
    bits: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            frames: self.frames + o.frames,
            blocks: self.blocks + o.blocks,
            bits: self.bits + o.bits,
        }
    }
}

fn run_sharded<F>(frames: u64, shards: usize, frame: F) -> Result<Tally>
where
    F: Fn(u64) -> Result<u32> + Sync,
{
    shard_ranges(frames, shards)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut t = Tally::default();
            for k in lo..hi {
                let bits = frame(k)?;
                t.frames += 1;
                t.bits += u64::from(bits);
                t.blocks += u64::from(bits > 0);
            }
            Ok(t)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
}

/// Simulate `frames` blocks of one relay configuration (powers already set
/// in `cfg`). Frame `k` draws everything from stream `k` of `point_seed`.
pub fn simulate_relay_point(
    cfg: &NetworkConfig,
    scheme: Scheme,
    code: &LdCodebook,
    frames: u64,
    point_seed: u64,
    shards: usize,
) -> Result<(u64, u64)> {
    if code.relays() != cfg.relays || cfg.block_len != cfg.relays {
        return Err(Error::Config(format!(
            "LD code needs M = T, got M = {}, T = {}",
            cfg.relays, cfg.block_len
        )));
    }
    let eta = eta_from_code(code.lambda_min(), cfg.p_s, cfg.n0);
    let alloc = SchemeAllocator::new(cfg, scheme, eta)?;
    let t = code.block_len();
    let tally = run_sharded(frames, shards, |k| {
        let mut rng = stream_rng(point_seed, k);
        let chan = sample_channels_with(cfg, &mut rng);
        let p = alloc.allocate(&chan)?;
        let sent = rng.random_range(0..1usize << t);
        let r = transmit_frame(code, &chan, &p, cfg.p_s, cfg.n0, &code.symbols(sent), &mut rng)?;
        let c = DVector::from_vec(effective_channel(&chan, &p, cfg.p_s));
        let got = decode_with_gains(code, &c, &r);
        Ok((sent ^ got).count_ones())
    })?;
    Ok((tally.blocks, tally.bits))
}

/// Coherent BPSK, `block_len` symbols per frame over one `CN(0,1)` fade with
/// power `power`.
pub fn simulate_direct_point(
    power: f64,
    n0: f64,
    block_len: usize,
    frames: u64,
    point_seed: u64,
    shards: usize,
) -> Result<(u64, u64)> {
    let a = power.sqrt();
    let tally = run_sharded(frames, shards, |k| {
        let mut rng = stream_rng(point_seed, k);
        let h = complex_gaussian(&mut rng, 1.0);
        let mut errors = 0;
        for _ in 0..block_len {
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let r = h * (a * s) + complex_gaussian(&mut rng, n0);
            let decided = if (h.conj() * r).re >= 0.0 { 1.0 } else { -1.0 };
            errors += u32::from(decided != s);
        }
        Ok(errors)
    })?;
    Ok((tally.blocks, tally.bits))
}

/// Error rates of `scheme` at each SNR of `snr_grid_db`.
pub fn run_monte_carlo(
    cfg: &NetworkConfig,
    scheme: Scheme,
    snr_grid_db: &[f64],
    opts: &SimOptions,
) -> Result<SimResult> {
    cfg.validate()?;
    scheme.check_mode(cfg.csit_mode)?;
    if opts.frames < MIN_FRAMES {
        return Err(Error::Config(format!(
            "need at least {MIN_FRAMES} frames per point, got {}",
            opts.frames
        )));
    }
    let start = Instant::now();
    let code = match scheme {
        Scheme::DirectLink => None,
        _ => Some(run_codebook(cfg.block_len, opts.seed)?),
    };
    let mut points = Vec::with_capacity(snr_grid_db.len());
    for (idx, &snr) in snr_grid_db.iter().enumerate() {
        let point_cfg = config_at_snr(cfg, opts.axis, snr);
        let point_seed = derive_seed(opts.seed, idx as u64);
        let (blocks, bits) = match &code {
            None => simulate_direct_point(
                10f64.powf(snr / 10.0) * cfg.n0,
                cfg.n0,
                cfg.block_len,
                opts.frames,
                point_seed,
                opts.shards,
            )?,
            Some(code) => simulate_relay_point(&point_cfg, scheme, code, opts.frames, point_seed, opts.shards)?,
        };
        points.push(SimPoint {
            snr_db: snr,
            frames: opts.frames,
            block_errors: blocks,
            bit_errors: bits,
            bits_per_frame: cfg.block_len as u64,
        });
    }
    Ok(SimResult {
        scheme: scheme.label(cfg.csit_mode),
        seed: opts.seed,
        points,
        elapsed: start.elapsed(),
    })
}

/// `gamma_h = 1/r^2`, `gamma_g = 1/(1-r)^2` for relays at distance `r` from
/// the transmitter on a unit-length link.
pub fn distance_variances(r: f64) -> Result<(f64, f64)> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("r must lie in (0, 1), got {r}")));
    }
    Ok((1.0 / (r * r), 1.0 / ((1.0 - r) * (1.0 - r))))
}

/// `cfg` with every relay placed at distance `r`.
pub fn config_at_distance(cfg: &NetworkConfig, r: f64) -> Result<NetworkConfig> {
    let (gh, gg) = distance_variances(r)?;
    Ok(NetworkConfig {
        gamma_h: vec![gh; cfg.relays],
        gamma_g: vec![gg; cfg.relays],
        ..cfg.clone()
    })
}

/// Average `sum_i p_i / P_i` over `trials` channel draws for every `r` in
/// `r_grid`. `cfg` supplies `M`, powers and the CSIT mode. No allocation
/// here depends on `eta`, so it is fixed at `p_s / N0`.
pub fn effective_relay_count(
    cfg: &NetworkConfig,
    scheme: Scheme,
    r_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    scheme.check_mode(cfg.csit_mode)?;
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let eta = cfg.p_s / cfg.n0;
    r_grid
        .iter()
        .enumerate()
        .map(|(idx, &r)| {
            let at = config_at_distance(cfg, r)?;
            let alloc = SchemeAllocator::new(&at, scheme, eta)?;
            let point_seed = derive_seed(seed, idx as u64);
            let sums: Vec<f64> = (0..trials.div_ceil(DRAW_CHUNK))
                .into_par_iter()
                .map(|c| {
                    let (lo, hi) = (c * DRAW_CHUNK, ((c + 1) * DRAW_CHUNK).min(trials));
                    let mut s = 0.0;
                    for k in lo..hi {
                        let mut rng = stream_rng(point_seed, k);
                        let chan = sample_channels_with(&at, &mut rng);
                        s += alloc.allocate(&chan)?.power_ratio();
                    }
                    Ok(s)
                })
                .collect::<Result<_>>()?;
            // fixed chunks merged in order: independent of the thread count
            Ok(sums.iter().sum::<f64>() / trials as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_relays(mode: CsitMode) -> NetworkConfig {
        NetworkConfig::symmetric(2, 2, 1.0, 1.0, 1.0, 1.0, 1.0, mode).unwrap()
    }

    #[test]
    fn scheme_mode_compatibility() {
        assert!(Scheme::OnOff.check_mode(CsitMode::Partial).is_err());
        assert!(Scheme::Waterfill.check_mode(CsitMode::Perfect).is_err());
        assert!(Scheme::MaxPower.check_mode(CsitMode::Statistical).is_ok());
        let opts = SimOptions::new(1000, 1);
        assert!(matches!(
            run_monte_carlo(&two_relays(CsitMode::Perfect), Scheme::Waterfill, &[10.0], &opts),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn too_few_frames_rejected() {
        let opts = SimOptions::new(999, 1);
        assert!(run_monte_carlo(&two_relays(CsitMode::Perfect), Scheme::OnOff, &[10.0], &opts).is_err());
    }

    #[test]
    fn deterministic_and_shard_invariant() {
        let cfg = two_relays(CsitMode::Perfect);
        let mut opts = SimOptions::new(2000, 42);
        let a = run_monte_carlo(&cfg, Scheme::OnOff, &[0.0, 6.0], &opts).unwrap();
        opts.shards = 7;
        let b = run_monte_carlo(&cfg, Scheme::OnOff, &[0.0, 6.0], &opts).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn tally_invariants() {
        let cfg = two_relays(CsitMode::Statistical);
        let r = run_monte_carlo(&cfg, Scheme::Waterfill, &[-5.0, 5.0], &SimOptions::new(2000, 3)).unwrap();
        assert_eq!(r.scheme, "waterfill-statistical");
        for p in &r.points {
            assert!(p.block_errors <= p.bit_errors);
            assert!(p.bit_errors <= 2 * p.block_errors);
            assert!((0.0..=1.0).contains(&p.bler()) && (0.0..=1.0).contains(&p.ber()));
        }
    }

    #[test]
    fn hopeless_snr_gives_coin_flips() {
        let cfg = two_relays(CsitMode::Perfect);
        let r = run_monte_carlo(&cfg, Scheme::OnOff, &[-30.0], &SimOptions::new(20_000, 9)).unwrap();
        let p = r.points[0];
        assert!((p.ber() - 0.5).abs() < 4.0 * p.stderr_ber(), "ber = {}", p.ber());
    }

    #[test]
    fn direct_link_matches_rayleigh_bpsk() {
        // coherent BPSK over Rayleigh: (1 - sqrt(g/(1+g)))/2 with g = P/N0
        let cfg = two_relays(CsitMode::Perfect);
        let r = run_monte_carlo(&cfg, Scheme::DirectLink, &[10.0], &SimOptions::new(50_000, 2)).unwrap();
        let g: f64 = 10.0;
        let exact = 0.5 * (1.0 - (g / (1.0 + g)).sqrt());
        let p = r.points[0];
        assert!((p.ber() - exact).abs() < 4.0 * p.stderr_ber(), "{} vs {exact}", p.ber());
    }

    #[test]
    fn network_axis_splits_power() {
        let cfg = two_relays(CsitMode::Perfect);
        let at = config_at_snr(&cfg, SnrAxis::NetworkTotal, 10.0 * 3f64.log10() + 10.0);
        assert!((at.p_s - 10.0).abs() < 1e-9 && (at.p_r - 10.0).abs() < 1e-9);
    }

    #[test]
    fn distance_domain() {
        assert!(matches!(distance_variances(0.0), Err(Error::Domain(_))));
        assert!(matches!(distance_variances(1.0), Err(Error::Domain(_))));
        let (h, g) = distance_variances(0.5).unwrap();
        assert_eq!((h, g), (4.0, 4.0));
    }

    #[test]
    fn statistical_symmetric_topology_uses_every_relay() {
        let cfg = NetworkConfig::symmetric(4, 4, 1.0, 1.0, 1.0, 1.0, 1.0, CsitMode::Statistical).unwrap();
        let v = effective_relay_count(&cfg, Scheme::Waterfill, &[0.3, 0.7], 50, 1).unwrap();
        for x in v {
            assert!((x - 4.0).abs() < 1e-12);
        }
    }
}
