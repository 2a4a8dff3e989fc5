//! Network scenario, fading draws, amplifier caps and the received-signal
//! noise model of the two-hop amplify-and-forward relay channel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{complex_gaussian, stream_rng};
use crate::{Error, Result, C64};

/// Averaging window of the per-relay transmit power constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Expectation over relay noise only; caps depend on `|h_i|^2`.
    ShortTerm,
    /// Expectation over relay noise and the first-hop fading.
    LongTerm,
}

/// What the transmitter knows about the channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsitMode {
    /// `|h_i|` and `|g_i|`.
    Perfect,
    /// `|h_i|` and the second-hop variances.
    Partial,
    /// First- and second-hop variances only.
    Statistical,
}

impl CsitMode {
    /// Constraint kind bound to this knowledge regime.
    pub fn constraint_kind(self) -> ConstraintKind {
        match self {
            CsitMode::Perfect | CsitMode::Partial => ConstraintKind::ShortTerm,
            CsitMode::Statistical => ConstraintKind::LongTerm,
        }
    }
}

/// Static scenario of an `M`-relay network. All powers are linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Relay count.
    #[serde(rename = "M")]
    pub relays: usize,
    /// Block length in channel uses.
    #[serde(rename = "T")]
    pub block_len: usize,
    pub p_s: f64,
    pub p_r: f64,
    #[serde(rename = "N0")]
    pub n0: f64,
    /// Transmitter-to-relay channel variances.
    pub gamma_h: Vec<f64>,
    /// Relay-to-receiver channel variances.
    pub gamma_g: Vec<f64>,
    pub constraint_kind: ConstraintKind,
    pub csit_mode: CsitMode,
}

impl NetworkConfig {
    /// Config with identical variances on every relay; the constraint kind
    /// follows from `csit_mode`.
    pub fn symmetric(
        relays: usize,
        block_len: usize,
        p_s: f64,
        p_r: f64,
        n0: f64,
        gamma_h: f64,
        gamma_g: f64,
        csit_mode: CsitMode,
    ) -> Result<Self> {
        let cfg = NetworkConfig {
            relays,
            block_len,
            p_s,
            p_r,
            n0,
            gamma_h: vec![gamma_h; relays],
            gamma_g: vec![gamma_g; relays],
            constraint_kind: csit_mode.constraint_kind(),
            csit_mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.relays == 0 {
            return Err(Error::Config("M must be at least 1".into()));
        }
        if self.block_len == 0 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        for (name, v) in [("p_s", self.p_s), ("p_r", self.p_r), ("N0", self.n0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("gamma_h", &self.gamma_h), ("gamma_g", &self.gamma_g)] {
            if v.len() != self.relays {
                return Err(Error::Config(format!(
                    "{name} has {} entries, expected M = {}",
                    v.len(),
                    self.relays
                )));
            }
            if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
                return Err(Error::Config(format!("{name}[{i}] must be finite and > 0, got {x}")));
            }
        }
        if self.constraint_kind != self.csit_mode.constraint_kind() {
            return Err(Error::Config(format!(
                "{:?} CSIT requires a {:?} power constraint, got {:?}",
                self.csit_mode,
                self.csit_mode.constraint_kind(),
                self.constraint_kind
            )));
        }
        Ok(())
    }

    /// Same scenario under another knowledge regime (constraint kind follows).
    pub fn with_csit(&self, mode: CsitMode) -> Self {
        NetworkConfig {
            csit_mode: mode,
            constraint_kind: mode.constraint_kind(),
            ..self.clone()
        }
    }

    /// First `m` relays of this scenario, with `T = m`.
    pub fn with_relays(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.gamma_h.len() || m > self.gamma_g.len() {
            return Err(Error::Config(format!(
                "cannot take {m} relays from a scenario with {} variances",
                self.gamma_h.len().min(self.gamma_g.len())
            )));
        }
        let cfg = NetworkConfig {
            relays: m,
            block_len: m,
            gamma_h: self.gamma_h[..m].to_vec(),
            gamma_g: self.gamma_g[..m].to_vec(),
            ..self.clone()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One block-fading draw of both hops; `f_i = h_i g_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h: Vec<C64>,
    g: Vec<C64>,
    f: Vec<C64>,
}

impl ChannelRealization {
    pub fn new(h: Vec<C64>, g: Vec<C64>) -> Result<Self> {
        if h.len() != g.len() {
            return Err(Error::Contract(format!(
                "h has {} entries but g has {}",
                h.len(),
                g.len()
            )));
        }
        if h.iter().chain(&g).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Domain("channel coefficients must be finite".into()));
        }
        let f = h.iter().zip(&g).map(|(a, b)| a * b).collect();
        Ok(ChannelRealization { h, g, f })
    }

    pub fn relays(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[C64] {
        &self.h
    }

    pub fn g(&self) -> &[C64] {
        &self.g
    }

    /// Composite channel `h_i g_i`.
    pub fn f(&self) -> &[C64] {
        &self.f
    }

    pub fn h_gains(&self) -> Vec<f64> {
        self.h.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn g_gains(&self) -> Vec<f64> {
        self.g.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Amplifier powers `p_i = |q_i|^2` together with their caps `P_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    p: Vec<f64>,
    caps: Vec<f64>,
}

/// Relative slack allowed above a cap for float round-off.
pub const CAP_TOLERANCE: f64 = 1e-12;

impl PowerAllocation {
    pub fn new(p: Vec<f64>, caps: Vec<f64>) -> Result<Self> {
        if p.len() != caps.len() {
            return Err(Error::Contract(format!(
                "{} powers for {} caps",
                p.len(),
                caps.len()
            )));
        }
        for (i, (&pi, &ci)) in p.iter().zip(&caps).enumerate() {
            if !(ci.is_finite() && ci > 0.0) {
                return Err(Error::Domain(format!("cap P_{i} = {ci} must be finite and > 0")));
            }
            if !(pi.is_finite() && pi >= 0.0 && pi <= ci * (1.0 + CAP_TOLERANCE)) {
                return Err(Error::Domain(format!("p_{i} = {pi} outside [0, {ci}]")));
            }
        }
        Ok(PowerAllocation { p, caps })
    }

    /// Every relay at its cap.
    pub fn full(caps: &[f64]) -> Result<Self> {
        PowerAllocation::new(caps.to_vec(), caps.to_vec())
    }

    /// Every relay silent.
    pub fn silent(caps: &[f64]) -> Result<Self> {
        PowerAllocation::new(vec![0.0; caps.len()], caps.to_vec())
    }

    /// Vertex with `on[i]` selecting `P_i` or 0.
    pub fn vertex(on: &[bool], caps: &[f64]) -> Result<Self> {
        if on.len() != caps.len() {
            return Err(Error::Contract("mask length differs from cap count".into()));
        }
        let p = on
            .iter()
            .zip(caps)
            .map(|(&b, &c)| if b { c } else { 0.0 })
            .collect();
        PowerAllocation::new(p, caps.to_vec())
    }

    pub fn powers(&self) -> &[f64] {
        &self.p
    }

    pub fn caps(&self) -> &[f64] {
        &self.caps
    }

    pub fn relays(&self) -> usize {
        self.p.len()
    }

    /// Amplifier coefficients `q_i = sqrt(p_i)` (phase fixed to zero).
    pub fn amplitudes(&self) -> Vec<f64> {
        self.p.iter().map(|p| p.sqrt()).collect()
    }

    /// `sum_i p_i / P_i`, the number of relays "effectively" in use.
    pub fn power_ratio(&self) -> f64 {
        self.p.iter().zip(&self.caps).map(|(p, c)| p / c).sum()
    }

    /// Whether each `p_i` is exactly 0 or exactly `P_i`.
    pub fn is_vertex(&self) -> bool {
        self.p
            .iter()
            .zip(&self.caps)
            .all(|(&p, &c)| p == 0.0 || p == c)
    }

    pub fn active(&self) -> Vec<bool> {
        self.p.iter().map(|&p| p > 0.0).collect()
    }

    /// On/off pattern as an `M`-character bitstring, relay 1 first. This is
    /// the one-bit-per-relay feedback a receiver would send.
    pub fn on_mask(&self) -> String {
        self.p.iter().map(|&p| if p > 0.0 { '1' } else { '0' }).collect()
    }
}

/// Maximum amplifier power of each relay.
///
/// Short-term caps use the instantaneous first-hop gain and therefore need
/// `h`; long-term caps use the variances and ignore it.
pub fn amplifier_caps(cfg: &NetworkConfig, h: Option<&[C64]>) -> Result<Vec<f64>> {
    match cfg.constraint_kind {
        ConstraintKind::ShortTerm => {
            let h = h.ok_or_else(|| {
                Error::Config("short-term caps need the first-hop channel h".into())
            })?;
            if h.len() != cfg.relays {
                return Err(Error::Contract(format!(
                    "h has {} entries, expected {}",
                    h.len(),
                    cfg.relays
                )));
            }
            Ok(h.iter()
                .map(|z| cfg.p_r / (cfg.p_s * z.norm_sqr() + cfg.n0))
                .collect())
        }
        ConstraintKind::LongTerm => Ok(cfg
            .gamma_h
            .iter()
            .map(|gh| cfg.p_r / (cfg.p_s * gh + cfg.n0))
            .collect()),
    }
}

/// Short-term caps straight from first-hop gains `|h_i|^2`.
pub fn short_term_caps(h_gains: &[f64], p_s: f64, p_r: f64, n0: f64) -> Vec<f64> {
    h_gains.iter().map(|x| p_r / (p_s * x + n0)).collect()
}

/// Draw `h_i ~ CN(0, gamma_hi)` and `g_i ~ CN(0, gamma_gi)` from `rng`.
pub fn sample_channels_with<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> ChannelRealization {
    let h: Vec<C64> = cfg.gamma_h.iter().map(|&v| complex_gaussian(rng, v)).collect();
    let g: Vec<C64> = cfg.gamma_g.iter().map(|&v| complex_gaussian(rng, v)).collect();
    let f = h.iter().zip(&g).map(|(a, b)| a * b).collect();
    ChannelRealization { h, g, f }
}

/// Seeded channel draw; identical seeds give identical realizations.
pub fn sample_channels(cfg: &NetworkConfig, seed: u64) -> Result<ChannelRealization> {
    cfg.validate()?;
    let mut rng = stream_rng(seed, 0);
    Ok(sample_channels_with(cfg, &mut rng))
}

/// Variance of the white noise seen by the receiver,
/// `N0 (sum_i p_i |g_i|^2 + 1)`.
pub fn overall_noise_variance(p: &PowerAllocation, g: &[C64], n0: f64) -> Result<f64> {
    if g.len() != p.relays() {
        return Err(Error::Contract(format!(
            "{} second-hop gains for {} relays",
            g.len(),
            p.relays()
        )));
    }
    let amplified: f64 = p.powers().iter().zip(g).map(|(p, z)| p * z.norm_sqr()).sum();
    Ok(n0 * (amplified + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn cfg(mode: CsitMode, gh: Vec<f64>) -> NetworkConfig {
        let m = gh.len();
        NetworkConfig {
            relays: m,
            block_len: m,
            p_s: 1.0,
            p_r: 1.0,
            n0: 1.0,
            gamma_h: gh,
            gamma_g: vec![1.0; m],
            constraint_kind: mode.constraint_kind(),
            csit_mode: mode,
        }
    }

    #[test]
    fn short_term_caps_unit_case() {
        let caps = amplifier_caps(&cfg(CsitMode::Perfect, vec![1.0]), Some(&[c(1.0)])).unwrap();
        assert_eq!(caps, vec![0.5]);
    }

    #[test]
    fn short_term_caps_two_relays() {
        let mut k = cfg(CsitMode::Perfect, vec![1.0, 1.0]);
        k.p_s = 10.0;
        k.p_r = 10.0;
        let h = [c(2.0), c(0.1)];
        let caps = amplifier_caps(&k, Some(&h)).unwrap();
        assert!((caps[0] - 10.0 / 41.0).abs() < 1e-15);
        assert!((caps[1] - 10.0 / 1.1).abs() < 1e-13);
    }

    #[test]
    fn long_term_caps_ignore_h() {
        let k = cfg(CsitMode::Statistical, vec![1.0, 1.0]);
        assert_eq!(amplifier_caps(&k, None).unwrap(), vec![0.5, 0.5]);
        assert_eq!(amplifier_caps(&k, Some(&[c(9.0), c(9.0)])).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn short_term_without_h_is_config_error() {
        let k = cfg(CsitMode::Partial, vec![1.0]);
        assert!(matches!(amplifier_caps(&k, None), Err(Error::Config(_))));
    }

    #[test]
    fn validation_rejects_bad_scenarios() {
        assert!(cfg(CsitMode::Perfect, vec![0.0]).validate().is_err());
        let mut k = cfg(CsitMode::Statistical, vec![1.0]);
        k.constraint_kind = ConstraintKind::ShortTerm;
        assert!(k.validate().is_err());
        let mut k = cfg(CsitMode::Perfect, vec![1.0, 1.0]);
        k.gamma_g.pop();
        assert!(k.validate().is_err());
        let mut k = cfg(CsitMode::Perfect, vec![1.0]);
        k.n0 = 0.0;
        assert!(k.validate().is_err());
        assert!(sample_channels(&cfg(CsitMode::Perfect, vec![0.0]), 1).is_err());
    }

    #[test]
    fn seeded_draws_repeat() {
        let k = cfg(CsitMode::Perfect, vec![1.0, 2.0, 3.0]);
        assert_eq!(sample_channels(&k, 11).unwrap(), sample_channels(&k, 11).unwrap());
        assert_ne!(sample_channels(&k, 11).unwrap(), sample_channels(&k, 12).unwrap());
    }

    #[test]
    fn composite_channel_is_exact_product() {
        let k = cfg(CsitMode::Perfect, vec![1.0, 0.5]);
        let ch = sample_channels(&k, 3).unwrap();
        for i in 0..2 {
            assert_eq!(ch.f()[i], ch.h()[i] * ch.g()[i]);
        }
    }

    #[test]
    fn empirical_gain_matches_variance() {
        let k = NetworkConfig::symmetric(1, 1, 1.0, 1.0, 1.0, 1.0, 1.0, CsitMode::Perfect).unwrap();
        let mut rng = stream_rng(99, 0);
        let n = 1_000_000;
        let (mut sh, mut sg) = (0.0, 0.0);
        for _ in 0..n {
            let ch = sample_channels_with(&k, &mut rng);
            sh += ch.h()[0].norm_sqr();
            sg += ch.g()[0].norm_sqr();
        }
        assert!((sh / n as f64 - 1.0).abs() < 0.01);
        assert!((sg / n as f64 - 1.0).abs() < 0.01);
    }

    #[test]
    fn noise_variance_cases() {
        let g = [c(1.0), c(1.0)];
        let p = PowerAllocation::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(overall_noise_variance(&p, &g, 1.0).unwrap(), 3.0);
        let z = PowerAllocation::silent(&[1.0, 1.0]).unwrap();
        assert_eq!(overall_noise_variance(&z, &g, 0.7).unwrap(), 0.7);
    }

    #[test]
    fn allocation_bounds_enforced() {
        assert!(PowerAllocation::new(vec![1.0 + 1e-14], vec![1.0]).is_ok());
        assert!(PowerAllocation::new(vec![1.001], vec![1.0]).is_err());
        assert!(PowerAllocation::new(vec![-0.1], vec![1.0]).is_err());
        let v = PowerAllocation::vertex(&[true, false, true], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v.on_mask(), "101");
        assert!(v.is_vertex());
        assert_eq!(v.power_ratio(), 2.0);
    }
}
