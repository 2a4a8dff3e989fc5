//! Limiting behaviour of the allocators.
//!
//! When the first hop dominates (relays near the transmitter) every scheme
//! switches all relays to full power; when the second hop dominates (relays
//! near the receiver) on-off reduces to single-relay selection while
//! waterfilling keeps `p_i gamma_gi` equal across uncapped relays.

use rayon::prelude::*;

use crate::model::{sample_channels_with, short_term_caps, CsitMode, NetworkConfig, PowerAllocation};
use crate::objectives::{PartialCsitObjective, PerfectCsitObjective};
use crate::onoff::solve_onoff;
use crate::rng::{derive_seed, stream_rng};
use crate::sim::monte_carlo::{config_at_distance, SchemeAllocator};
use crate::sim::Scheme;
use crate::waterfill::solve_waterfill;
use crate::{Error, Result};

const DRAW_CHUNK: u64 = 4096;

/// Value of the single-relay vertex `i`: `|h_i|^2 / (1 + 1/(|g_i|^2 P_i))`.
pub fn selection_value(h_gain: f64, g_gain: f64, cap: f64) -> f64 {
    h_gain / (1.0 + 1.0 / (g_gain * cap))
}

/// Relay maximizing [`selection_value`]; lowest index on ties.
pub fn selected_relay(h_gains: &[f64], g_gains: &[f64], caps: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..h_gains.len() {
        let v = selection_value(h_gains[i], g_gains[i], caps[i]);
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

/// Which hop is strengthened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hop {
    First,
    Second,
}

/// Per-scale averages over channel draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub scale: f64,
    /// Mean `sum p_i / P_i` of on-off.
    pub onoff_ratio: f64,
    /// Share of draws where on-off uses every relay.
    pub all_on_fraction: f64,
    /// Share of draws where on-off uses exactly one relay.
    pub single_fraction: f64,
    /// Share of single-relay draws whose relay is [`selected_relay`].
    pub selection_agreement: f64,
    /// Mean `sum p_i / P_i` of partial-CSIT waterfilling.
    pub waterfill_ratio: f64,
    /// Mean number of relays waterfilling leaves at their cap.
    pub waterfill_capped: f64,
}

#[derive(Default, Clone, Copy)]
struct ScalingSums {
    onoff: f64,
    all_on: u64,
    single: u64,
    selected: u64,
    wf: f64,
    capped: u64,
}

/// Multiply `|h_i|^2` (first hop; the caps shrink accordingly) or `|g_i|^2`
/// (second hop) of every draw by each factor in `scales` and record how the
/// allocations respond. `cfg` supplies `M`, powers and variances.
pub fn scaling_study(
    cfg: &NetworkConfig,
    hop: Hop,
    scales: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<ScalingPoint>> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let eta = cfg.p_s / cfg.n0;
    scales
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Domain(format!("scale must be > 0, got {c}")));
            }
            let point_seed = derive_seed(seed, idx as u64);
            let chunks: Vec<ScalingSums> = (0..trials.div_ceil(DRAW_CHUNK))
                .into_par_iter()
                .map(|k| {
                    let mut s = ScalingSums::default();
                    for t in k * DRAW_CHUNK..((k + 1) * DRAW_CHUNK).min(trials) {
                        let mut rng = stream_rng(point_seed, t);
                        let chan = sample_channels_with(cfg, &mut rng);
                        let mut h = chan.h_gains();
                        let mut g = chan.g_gains();
                        let mut gamma_g = cfg.gamma_g.clone();
                        match hop {
                            Hop::First => h.iter_mut().for_each(|x| *x *= c),
                            Hop::Second => {
                                g.iter_mut().for_each(|x| *x *= c);
                                gamma_g.iter_mut().for_each(|x| *x *= c);
                            }
                        }
                        let caps = short_term_caps(&h, cfg.p_s, cfg.p_r, cfg.n0);
                        let obj = PerfectCsitObjective::from_gains(&h, &g, eta)?;
                        let (p, _) = solve_onoff(&obj, &caps, None)?;
                        let active = p.active().iter().filter(|&&a| a).count();
                        s.onoff += p.power_ratio();
                        s.all_on += u64::from(active == cfg.relays);
                        if active == 1 {
                            s.single += 1;
                            let on = p.active().iter().position(|&a| a).unwrap_or(0);
                            s.selected += u64::from(on == selected_relay(&h, &g, &caps));
                        }
                        let wobj = PartialCsitObjective::from_gains(&h, &gamma_g, eta)?;
                        let wf = solve_waterfill(&wobj, &caps)?;
                        s.wf += wf.allocation.power_ratio();
                        s.capped += wf.at_cap().iter().filter(|&&a| a).count() as u64;
                    }
                    Ok(s)
                })
                .collect::<Result<_>>()?;
            let mut tot = ScalingSums::default();
            for s in chunks {
                tot.onoff += s.onoff;
                tot.all_on += s.all_on;
                tot.single += s.single;
                tot.selected += s.selected;
                tot.wf += s.wf;
                tot.capped += s.capped;
            }
            let n = trials as f64;
            Ok(ScalingPoint {
                scale: c,
                onoff_ratio: tot.onoff / n,
                all_on_fraction: tot.all_on as f64 / n,
                single_fraction: tot.single as f64 / n,
                selection_agreement: if tot.single == 0 {
                    0.0
                } else {
                    tot.selected as f64 / tot.single as f64
                },
                waterfill_ratio: tot.wf / n,
                waterfill_capped: tot.capped as f64 / n,
            })
        })
        .collect()
}

/// Allocation statistics at one relay position on the unit
/// transmitter-receiver line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceDiagnostics {
    pub r: f64,
    pub onoff_ratio: f64,
    pub partial_ratio: f64,
    pub statistical_ratio: f64,
    pub maxpower_ratio: f64,
    /// Share of draws where partial waterfilling and on-off give the same
    /// powers (to `1e-9 P_i`).
    pub agreement: f64,
    /// Largest `|p_i gamma_gi - mu*| / mu*` over uncapped relays and draws,
    /// for both waterfilling variants.
    pub equalization_spread: f64,
}

fn same_powers(a: &PowerAllocation, b: &PowerAllocation) -> bool {
    a.powers()
        .iter()
        .zip(b.powers())
        .zip(a.caps())
        .all(|((x, y), c)| (x - y).abs() <= 1e-9 * c)
}

fn spread(p: &[f64], at_cap: &[bool], gamma_g: &[f64], mu: f64) -> f64 {
    p.iter()
        .zip(at_cap)
        .zip(gamma_g)
        .filter(|((_, &c), _)| !c)
        .map(|((p, _), g)| (p * g - mu).abs() / mu)
        .fold(0.0, f64::max)
}

#[derive(Default, Clone, Copy)]
struct DistanceSums {
    onoff: f64,
    partial: f64,
    maxpower: f64,
    agree: u64,
    spread: f64,
}

/// Run on-off, both waterfilling variants and maximum power on the same
/// `trials` draws with every relay at distance `r`. Powers come from `cfg`.
pub fn distance_diagnostics(cfg: &NetworkConfig, r: f64, trials: u64, seed: u64) -> Result<DistanceDiagnostics> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let at = config_at_distance(cfg, r)?;
    let eta = at.p_s / at.n0;
    let perfect = at.with_csit(CsitMode::Perfect);
    let onoff = SchemeAllocator::new(&perfect, Scheme::OnOff, eta)?;
    let maxpower = SchemeAllocator::new(&perfect, Scheme::MaxPower, eta)?;

    let stat_cfg = at.with_csit(CsitMode::Statistical);
    let stat_caps = crate::model::amplifier_caps(&stat_cfg, None)?;
    let stat_obj = crate::objectives::StatisticalCsitObjective::from_variances(&at.gamma_h, &at.gamma_g, eta)?;
    let stat = solve_waterfill(&stat_obj, &stat_caps)?;
    let stat_spread = spread(stat.allocation.powers(), &stat.at_cap(), &at.gamma_g, stat.mu_star);

    let chunks: Vec<DistanceSums> = (0..trials.div_ceil(DRAW_CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut s = DistanceSums::default();
            for t in k * DRAW_CHUNK..((k + 1) * DRAW_CHUNK).min(trials) {
                let mut rng = stream_rng(seed, t);
                let chan = sample_channels_with(&at, &mut rng);
                let p_on = onoff.allocate(&chan)?;
                let caps = p_on.caps().to_vec();
                let wobj = PartialCsitObjective::from_gains(&chan.h_gains(), &at.gamma_g, eta)?;
                let wf = solve_waterfill(&wobj, &caps)?;
                s.onoff += p_on.power_ratio();
                s.partial += wf.allocation.power_ratio();
                s.maxpower += maxpower.allocate(&chan)?.power_ratio();
                s.agree += u64::from(same_powers(&p_on, &wf.allocation));
                s.spread = s
                    .spread
                    .max(spread(wf.allocation.powers(), &wf.at_cap(), &at.gamma_g, wf.mu_star));
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let mut tot = DistanceSums::default();
    for s in chunks {
        tot.onoff += s.onoff;
        tot.partial += s.partial;
        tot.maxpower += s.maxpower;
        tot.agree += s.agree;
        tot.spread = tot.spread.max(s.spread);
    }
    let n = trials as f64;
    Ok(DistanceDiagnostics {
        r,
        onoff_ratio: tot.onoff / n,
        partial_ratio: tot.partial / n,
        statistical_ratio: stat.allocation.power_ratio(),
        maxpower_ratio: tot.maxpower / n,
        agreement: tot.agree as f64 / n,
        equalization_spread: tot.spread.max(stat_spread),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(m: usize) -> NetworkConfig {
        NetworkConfig::symmetric(m, m, 10.0, 10.0, 1.0, 1.0, 1.0, CsitMode::Perfect).unwrap()
    }

    #[test]
    fn strong_first_hop_turns_everything_on() {
        let pts = scaling_study(&base(4), Hop::First, &[1e6], 2000, 3).unwrap();
        assert_eq!(pts[0].all_on_fraction, 1.0);
        assert!((pts[0].waterfill_ratio - 4.0).abs() < 1e-9);
    }

    #[test]
    fn strong_second_hop_selects_one_relay() {
        let pts = scaling_study(&base(4), Hop::Second, &[1e6], 2000, 3).unwrap();
        let p = pts[0];
        assert_eq!(p.single_fraction, 1.0);
        assert_eq!(p.selection_agreement, 1.0);
        assert!((p.waterfill_capped - 1.0).abs() < 1e-12);
    }

    #[test]
    fn selection_tie_goes_low() {
        assert_eq!(selected_relay(&[1.0, 1.0], &[2.0, 2.0], &[1.0, 1.0]), 0);
        assert_eq!(selected_relay(&[1.0, 3.0], &[2.0, 2.0], &[1.0, 1.0]), 1);
    }

    #[test]
    fn distance_extremes() {
        let cfg = base(2);
        let near = distance_diagnostics(&cfg, 0.05, 500, 1).unwrap();
        assert!(near.onoff_ratio > 1.9 && near.maxpower_ratio == 2.0);
        let far = distance_diagnostics(&cfg, 0.95, 500, 1).unwrap();
        assert!(far.onoff_ratio < 1.2);
        assert!(far.equalization_spread < 1e-9);
        assert!((far.statistical_ratio - 2.0).abs() < 1e-12);
        assert!(distance_diagnostics(&cfg, 1.0, 10, 1).is_err());
    }
}
