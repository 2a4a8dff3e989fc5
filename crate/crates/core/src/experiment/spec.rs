//! Experiment spec files (TOML) and their resolution to concrete values.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::model::{CsitMode, NetworkConfig};
use crate::sim::{Scheme, SnrAxis};
use crate::{Error, Result};

/// Second-hop variances of the heterogeneous network-power setup; smaller
/// networks take prefixes.
pub const NETWORK_POWER_GAMMA_G: [f64; 8] = [0.85, 3.17, 1.50, 1.89, 2.06, 2.36, 3.19, 3.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    BlerVsSnr,
    BerVsDistance,
    PowerRatioVsDistance,
    BerVsNetworkPower,
    Asymptotic,
    SaddleStudy,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::BlerVsSnr => "bler_vs_snr",
            ExperimentKind::BerVsDistance => "ber_vs_distance",
            ExperimentKind::PowerRatioVsDistance => "power_ratio_vs_distance",
            ExperimentKind::BerVsNetworkPower => "ber_vs_network_power",
            ExperimentKind::Asymptotic => "asymptotic",
            ExperimentKind::SaddleStudy => "saddle_study",
        }
    }

    /// Whether the kind runs the frame simulator (budget = frames) rather
    /// than allocation-only draws (budget = trials).
    pub fn simulates_frames(self) -> bool {
        matches!(
            self,
            ExperimentKind::BlerVsSnr | ExperimentKind::BerVsDistance | ExperimentKind::BerVsNetworkPower
        )
    }
}

/// Scheme together with the CSIT regime it runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeName {
    #[serde(rename = "onoff")]
    OnOff,
    #[serde(rename = "waterfill-partial")]
    WaterfillPartial,
    #[serde(rename = "waterfill-statistical")]
    WaterfillStatistical,
    #[serde(rename = "maxpower")]
    MaxPower,
    #[serde(rename = "direct")]
    Direct,
}

impl SchemeName {
    pub fn scheme(self) -> Scheme {
        match self {
            SchemeName::OnOff => Scheme::OnOff,
            SchemeName::WaterfillPartial | SchemeName::WaterfillStatistical => Scheme::Waterfill,
            SchemeName::MaxPower => Scheme::MaxPower,
            SchemeName::Direct => Scheme::DirectLink,
        }
    }

    pub fn csit(self) -> CsitMode {
        match self {
            SchemeName::WaterfillPartial => CsitMode::Partial,
            SchemeName::WaterfillStatistical => CsitMode::Statistical,
            _ => CsitMode::Perfect,
        }
    }

    pub fn label(self) -> String {
        self.scheme().label(self.csit())
    }
}

/// Network section; missing values are filled per experiment kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub relays: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_r: Option<f64>,
    #[serde(rename = "N0", skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_h: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_g: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// SNR grid in dB (per-relay or network power, see `snr_axis`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<Vec<f64>>,
    /// Transmitter-relay distances in `(0, 1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    /// Channel-gain scale factors of the asymptotic study.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_axis: Option<SnrAxis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// On-off updates recorded by the convergence study.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Code-gain factor of the saddle study (`p_s / N0` when absent).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schemes: Vec<SchemeName>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relays: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub network: NetworkSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
}

fn spec_err(text: &str, key: &str, msg: impl Into<String>) -> Error {
    Error::Spec {
        line: line_of(text, key),
        msg: msg.into(),
    }
}

/// 1-based line of the first `key = ...` assignment, or of a `[key]` table
/// header; 1 when absent.
fn line_of(text: &str, key: &str) -> usize {
    for (n, line) in text.lines().enumerate() {
        let t = line.trim_start();
        let assigns = t
            .strip_prefix(key)
            .map(|rest| rest.trim_start().starts_with('='))
            .unwrap_or(false);
        if assigns || t.starts_with(&format!("[{key}]")) {
            return n + 1;
        }
    }
    1
}

fn sorted_grid(text: &str, key: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(spec_err(text, key, format!("{key} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(spec_err(text, key, format!("{key} grid has a non-finite value")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(spec_err(text, key, format!("{key} grid must be strictly increasing")));
    }
    Ok(())
}

fn steps(lo: f64, step: f64, n: usize) -> Vec<f64> {
    // rounded so that e.g. 0.1 * 3 prints as 0.3
    (0..n).map(|k| ((lo + step * k as f64) * 1e9).round() / 1e9).collect()
}

impl ExperimentSpec {
    /// Parse and resolve a spec; errors carry the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec: ExperimentSpec = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(1);
            Error::Spec {
                line,
                msg: e.message().to_string(),
            }
        })?;
        spec.resolve(text)?;
        Ok(spec)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Fully resolved spec as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    fn resolve(&mut self, text: &str) -> Result<()> {
        use ExperimentKind::*;
        let kind = self.kind;

        if self.relays.is_empty() {
            self.relays = match (self.network.relays, kind) {
                (Some(m), _) => vec![m],
                (None, Convergence | SaddleStudy) => vec![2, 4, 8, 16],
                (None, BerVsDistance | PowerRatioVsDistance | Asymptotic) => vec![2, 4, 6],
                (None, BerVsNetworkPower) => vec![2, 4, 8],
                (None, BlerVsSnr) => vec![2],
            };
        }
        if self.relays.iter().any(|&m| m == 0) {
            return Err(spec_err(text, "relays", "relay counts must be positive"));
        }
        if let Some(m) = self.network.relays {
            if self.relays != [m] {
                return Err(spec_err(text, "M", "network.M conflicts with the relays list; give one"));
            }
        }
        let m_max = *self.relays.iter().max().expect("non-empty");
        if kind.simulates_frames() && m_max > crate::sim::codebook::MAX_BLOCK_LEN {
            return Err(spec_err(
                text,
                "relays",
                format!("frame simulation needs M = T <= {}", crate::sim::codebook::MAX_BLOCK_LEN),
            ));
        }

        if self.schemes.is_empty() {
            use SchemeName::*;
            self.schemes = match kind {
                Convergence | Asymptotic | SaddleStudy => vec![],
                BlerVsSnr => vec![OnOff, MaxPower, WaterfillStatistical],
                BerVsDistance | BerVsNetworkPower => {
                    vec![OnOff, WaterfillPartial, WaterfillStatistical, Direct]
                }
                PowerRatioVsDistance => vec![OnOff, WaterfillPartial, WaterfillStatistical, MaxPower],
            };
        }
        for s in &self.schemes {
            let ok = match kind {
                Convergence | Asymptotic | SaddleStudy => false,
                PowerRatioVsDistance => *s != SchemeName::Direct,
                _ => true,
            };
            if !ok {
                return Err(spec_err(
                    text,
                    "schemes",
                    format!("scheme {} does not apply to {}", s.label(), kind.as_str()),
                ));
            }
        }
        let mut seen = self.schemes.clone();
        seen.sort_by_key(|s| s.label());
        seen.dedup();
        if seen.len() != self.schemes.len() {
            return Err(spec_err(text, "schemes", "duplicate scheme"));
        }

        let net = &mut self.network;
        let (ps, pr) = match kind {
            Convergence | Asymptotic => (10.0, 10.0),
            SaddleStudy => (1.0, 10.0),
            _ => (1.0, 1.0),
        };
        net.p_s.get_or_insert(ps);
        net.p_r.get_or_insert(pr);
        net.n0.get_or_insert(1.0);
        if kind == BerVsNetworkPower {
            net.gamma_h.get_or_insert_with(|| vec![4.0; m_max]);
            if net.gamma_g.is_none() {
                if m_max > NETWORK_POWER_GAMMA_G.len() {
                    return Err(spec_err(text, "relays", "give network.gamma_g for more than 8 relays"));
                }
                net.gamma_g = Some(NETWORK_POWER_GAMMA_G[..m_max].to_vec());
            }
        }
        net.gamma_h.get_or_insert_with(|| vec![1.0; m_max]);
        net.gamma_g.get_or_insert_with(|| vec![1.0; m_max]);
        for key in ["gamma_h", "gamma_g"] {
            let v = if key == "gamma_h" { &net.gamma_h } else { &net.gamma_g };
            if v.as_ref().map_or(0, Vec::len) < m_max {
                return Err(spec_err(text, key, format!("{key} needs at least {m_max} entries")));
            }
        }

        let sweep = &mut self.sweep;
        match kind {
            BlerVsSnr => {
                sweep.snr_db.get_or_insert_with(|| steps(0.0, 2.0, 13));
                sweep.snr_axis.get_or_insert(SnrAxis::PerRelay);
            }
            BerVsNetworkPower => {
                sweep.snr_db.get_or_insert_with(|| steps(0.0, 5.0, 7));
                sweep.snr_axis.get_or_insert(SnrAxis::NetworkTotal);
            }
            BerVsDistance | PowerRatioVsDistance => {
                sweep.snr_db.get_or_insert_with(|| vec![15.0]);
                sweep.snr_axis.get_or_insert(SnrAxis::NetworkTotal);
                sweep.r.get_or_insert_with(|| steps(0.1, 0.1, 9));
            }
            Asymptotic => {
                sweep.scale.get_or_insert_with(|| (0..7).map(|k| 10f64.powi(k)).collect());
                sweep.r.get_or_insert_with(|| vec![0.1, 0.9]);
            }
            Convergence | SaddleStudy => {}
        }
        for (key, grid) in [("snr_db", &sweep.snr_db), ("r", &sweep.r), ("scale", &sweep.scale)] {
            if let Some(g) = grid {
                sorted_grid(text, key, g)?;
            }
        }
        if let Some(r) = &sweep.r {
            if r.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
                return Err(spec_err(text, "r", "distances must lie in (0, 1)"));
            }
        }
        if let Some(s) = &sweep.scale {
            if s.iter().any(|&x| x <= 0.0) {
                return Err(spec_err(text, "scale", "scale factors must be > 0"));
            }
        }
        if matches!(kind, BerVsDistance | PowerRatioVsDistance)
            && sweep.snr_db.as_ref().map_or(0, Vec::len) != 1
        {
            return Err(spec_err(text, "snr_db", "distance sweeps take exactly one power value"));
        }

        if kind.simulates_frames() {
            let f = *self.frames.get_or_insert(100_000);
            if f < crate::sim::monte_carlo::MIN_FRAMES {
                return Err(spec_err(
                    text,
                    "frames",
                    format!("frames must be at least {}", crate::sim::monte_carlo::MIN_FRAMES),
                ));
            }
        } else {
            let t = *self.trials.get_or_insert(match kind {
                SaddleStudy => 100_000,
                _ => 10_000,
            });
            if kind == SaddleStudy && t < crate::objectives::saddle::MIN_TRIALS {
                return Err(spec_err(
                    text,
                    "trials",
                    format!("saddle study needs at least {} trials", crate::objectives::saddle::MIN_TRIALS),
                ));
            }
            if t == 0 {
                return Err(spec_err(text, "trials", "trials must be positive"));
            }
        }
        if kind == Convergence {
            self.iterations.get_or_insert(10);
            if m_max > crate::onoff::MAX_ORACLE_RELAYS {
                return Err(spec_err(text, "relays", "convergence normalization needs M <= 20"));
            }
        }
        if kind == SaddleStudy {
            let eta = *self.eta.get_or_insert(self.network.p_s.unwrap() / self.network.n0.unwrap());
            if !(eta.is_finite() && eta >= 0.0) {
                return Err(spec_err(text, "eta", "eta must be finite and >= 0"));
            }
        }

        // every per-M config must validate
        for &m in &self.relays {
            self.network_config(m, CsitMode::Perfect)
                .map_err(|e| spec_err(text, "network", e.to_string()))?;
        }
        Ok(())
    }

    /// Concrete scenario with `M = T = m` under `mode`.
    pub fn network_config(&self, m: usize, mode: CsitMode) -> Result<NetworkConfig> {
        let net = &self.network;
        let cfg = NetworkConfig {
            relays: m,
            block_len: m,
            p_s: net.p_s.unwrap_or(1.0),
            p_r: net.p_r.unwrap_or(1.0),
            n0: net.n0.unwrap_or(1.0),
            gamma_h: net.gamma_h.as_ref().map_or(vec![1.0; m], |v| v[..m.min(v.len())].to_vec()),
            gamma_g: net.gamma_g.as_ref().map_or(vec![1.0; m], |v| v[..m.min(v.len())].to_vec()),
            constraint_kind: mode.constraint_kind(),
            csit_mode: mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Frames for simulating kinds, trials otherwise.
    pub fn budget(&self) -> u64 {
        if self.kind.simulates_frames() {
            self.frames.unwrap_or(0)
        } else {
            self.trials.unwrap_or(0)
        }
    }

    /// Replace the frame (or trial) budget.
    pub fn override_budget(&mut self, n: u64) -> Result<()> {
        if self.kind.simulates_frames() {
            if n < crate::sim::monte_carlo::MIN_FRAMES {
                return Err(Error::Config(format!(
                    "frames must be at least {}",
                    crate::sim::monte_carlo::MIN_FRAMES
                )));
            }
            self.frames = Some(n);
        } else {
            if n == 0 || (self.kind == ExperimentKind::SaddleStudy && n < crate::objectives::saddle::MIN_TRIALS) {
                return Err(Error::Config(format!("trial budget {n} too small")));
            }
            self.trials = Some(n);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_spec_resolves() {
        let s = ExperimentSpec::parse("kind = \"convergence\"\n").unwrap();
        assert_eq!(s.relays, vec![2, 4, 8, 16]);
        assert_eq!(s.trials, Some(10_000));
        assert_eq!(s.network.p_s, Some(10.0));
        let again = ExperimentSpec::parse(&s.to_toml()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn distance_defaults() {
        let s = ExperimentSpec::parse("kind = \"ber_vs_distance\"\nseed = 3\n").unwrap();
        assert_eq!(s.sweep.r.as_ref().unwrap().len(), 9);
        assert_eq!(s.sweep.r.as_ref().unwrap()[2], 0.3);
        assert_eq!(s.schemes.len(), 4);
        assert_eq!(s.sweep.snr_axis, Some(SnrAxis::NetworkTotal));
    }

    #[test]
    fn network_power_prefixes() {
        let s = ExperimentSpec::parse("kind = \"ber_vs_network_power\"\n").unwrap();
        let cfg = s.network_config(4, CsitMode::Partial).unwrap();
        assert_eq!(cfg.gamma_g, vec![0.85, 3.17, 1.50, 1.89]);
        assert_eq!(cfg.gamma_h, vec![4.0; 4]);
    }

    #[test]
    fn errors_point_at_lines() {
        let text = "kind = \"bler_vs_snr\"\nseed = 1\n\n[sweep]\nsnr_db = [10, 5]\n";
        match ExperimentSpec::parse(text) {
            Err(Error::Spec { line, msg }) => {
                assert_eq!(line, 5);
                assert!(msg.contains("increasing"));
            }
            other => panic!("{other:?}"),
        }
        match ExperimentSpec::parse("kind = \"bler_vs_snr\"\nframez = 10\n") {
            Err(Error::Spec { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match ExperimentSpec::parse("kind = \"convergence\"\nschemes = [\"onoff\"]\n") {
            Err(Error::Spec { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match ExperimentSpec::parse("kind = \"bler_vs_snr\"\nframes = 10\n") {
            Err(Error::Spec { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(ExperimentSpec::parse("kind = \"ber_vs_distance\"\n[sweep]\nr = [0.5, 1.0]\n").is_err());
    }
}
