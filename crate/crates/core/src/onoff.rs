//! Perfect-CSIT allocation.
//!
//! `f0` is monotone in each coordinate (the sign of `df0/dp_i` does not depend
//! on `p_i`), so the optimum sits on a vertex of the box `[0, P_1] x ... x
//! [0, P_M]`. The on-off gradient algorithm jumps every coordinate to `P_i` or
//! 0 according to the sign of its partial derivative and stops once the signs
//! agree with the on/off pattern.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::model::{sample_channels_with, short_term_caps, NetworkConfig, PowerAllocation};
use crate::rng::stream_rng;
use crate::objectives::{f0_gradient, f0_raw, gradient_numerator, PerfectCsitObjective};
use crate::{Error, Result};

/// Iteration budget before falling back to enumeration.
pub const MAX_ITERATIONS: usize = 100;

/// Largest relay count the exhaustive oracle accepts.
pub const MAX_ORACLE_RELAYS: usize = 20;

/// Path taken by [`solve_onoff`].
#[derive(Debug, Clone, PartialEq)]
pub struct OnOffTrace {
    /// Vertex visited at each step, starting with the initial vertex.
    pub iterates: Vec<PowerAllocation>,
    /// `f0` at each iterate.
    pub objective_values: Vec<f64>,
    /// Stationarity reached by the gradient updates alone.
    pub converged: bool,
    /// Number of updates applied.
    pub iterations: usize,
    /// The result came from vertex enumeration after a cycle or an exhausted
    /// iteration budget.
    pub fell_back: bool,
}

impl OnOffTrace {
    /// CSV rows `iteration,mask,objective` (mask = one feedback bit per relay).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,mask,objective\n");
        for (n, (p, v)) in self.iterates.iter().zip(&self.objective_values).enumerate() {
            let _ = writeln!(out, "{n},{},{v}", p.on_mask());
        }
        out
    }
}

fn check_caps(obj: &PerfectCsitObjective, caps: &[f64]) -> Result<()> {
    if caps.len() != obj.relays() {
        return Err(Error::Contract(format!(
            "{} caps for {} relays",
            caps.len(),
            obj.relays()
        )));
    }
    if caps.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::Domain("caps must be finite and > 0".into()));
    }
    Ok(())
}

/// Gradient-sign numerators at the vertex `on`.
fn signs(obj: &PerfectCsitObjective, p: &[f64]) -> Vec<f64> {
    let num: f64 = obj.alpha.iter().zip(p).map(|(a, p)| a * p).sum();
    let den: f64 = 1.0 + obj.beta.iter().zip(p).map(|(b, p)| b * p).sum::<f64>();
    (0..p.len())
        .map(|i| gradient_numerator(obj.alpha[i], obj.beta[i], p[i], num, den))
        .collect()
}

fn stationary(on: &[bool], grad: &[f64]) -> bool {
    on.iter().zip(grad).all(|(&o, &g)| if o { g > 0.0 } else { g <= 0.0 })
}

fn powers(on: &[bool], caps: &[f64]) -> Vec<f64> {
    on.iter().zip(caps).map(|(&o, &c)| if o { c } else { 0.0 }).collect()
}

/// On-off gradient algorithm. `start` defaults to every relay on.
///
/// All coordinates are updated at once; a relay with a zero partial
/// derivative is switched off. A revisited vertex or more than
/// [`MAX_ITERATIONS`] updates hands the problem to
/// [`vertex_enumeration_oracle`] (error beyond [`MAX_ORACLE_RELAYS`]) and
/// marks the trace.
pub fn solve_onoff(
    obj: &PerfectCsitObjective,
    caps: &[f64],
    start: Option<&[bool]>,
) -> Result<(PowerAllocation, OnOffTrace)> {
    check_caps(obj, caps)?;
    let m = obj.relays();
    let mut on: Vec<bool> = match start {
        Some(s) if s.len() != m => {
            return Err(Error::Contract("start vertex has the wrong length".into()))
        }
        Some(s) => s.to_vec(),
        None => vec![true; m],
    };

    let mut visited: Vec<Vec<bool>> = vec![on.clone()];
    let mut iterates = Vec::new();
    let mut values = Vec::new();
    let mut iterations = 0;
    loop {
        let p = powers(&on, caps);
        values.push(f0_raw(&obj.alpha, &obj.beta, &p));
        iterates.push(PowerAllocation::new(p.clone(), caps.to_vec())?);
        let grad = signs(obj, &p);
        if stationary(&on, &grad) {
            let result = iterates.last().cloned().expect("at least one iterate");
            let trace = OnOffTrace {
                iterates,
                objective_values: values,
                converged: true,
                iterations,
                fell_back: false,
            };
            return Ok((result, trace));
        }
        if iterations == MAX_ITERATIONS {
            break;
        }
        on = grad.iter().map(|&g| g > 0.0).collect();
        iterations += 1;
        if visited.contains(&on) {
            log::warn!("on-off iteration revisited vertex after {iterations} steps");
            break;
        }
        visited.push(on.clone());
    }

    if m > MAX_ORACLE_RELAYS {
        return Err(Error::Size(format!(
            "on-off iteration did not settle and M = {m} is too large for enumeration"
        )));
    }
    let result = vertex_enumeration_oracle(obj, caps)?;
    values.push(f0_raw(&obj.alpha, &obj.beta, result.powers()));
    iterates.push(result.clone());
    let trace = OnOffTrace {
        iterates,
        objective_values: values,
        converged: false,
        iterations,
        fell_back: true,
    };
    Ok((result, trace))
}

/// Exact maximizer of `f0` over all `2^M` on/off vertices.
///
/// Ties go to the vertex with fewer active relays, then to the
/// lexicographically smallest set of active relay indices.
pub fn vertex_enumeration_oracle(obj: &PerfectCsitObjective, caps: &[f64]) -> Result<PowerAllocation> {
    check_caps(obj, caps)?;
    let m = obj.relays();
    if m > MAX_ORACLE_RELAYS {
        return Err(Error::Size(format!(
            "vertex enumeration limited to M <= {MAX_ORACLE_RELAYS}, got {m}"
        )));
    }
    // Subset sums extended by the highest set bit add terms in index order,
    // matching `f0_raw` bit for bit.
    let n = 1usize << m;
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    let mut best_mask = 0u32;
    let mut best_value = 0.0;
    for mask in 1..n {
        let top = usize::BITS - 1 - mask.leading_zeros();
        let rest = mask ^ (1 << top);
        let i = top as usize;
        num[mask] = num[rest] + obj.alpha[i] * caps[i];
        den[mask] = den[rest] + obj.beta[i] * caps[i];
        let v = num[mask] / (1.0 + den[mask]);
        let mask = mask as u32;
        if v > best_value || (v == best_value && preferred(mask, best_mask)) {
            best_value = v;
            best_mask = mask;
        }
    }
    let on: Vec<bool> = (0..m).map(|i| best_mask >> i & 1 == 1).collect();
    PowerAllocation::vertex(&on, caps)
}

// Tie-break between two on-sets of equal objective.
fn preferred(candidate: u32, incumbent: u32) -> bool {
    let (a, b) = (candidate.count_ones(), incumbent.count_ones());
    if a != b {
        return a < b;
    }
    // equal size: whoever holds the lowest index where they differ sorts first
    let diff = candidate ^ incumbent;
    diff != 0 && candidate & (diff & diff.wrapping_neg()) != 0
}

/// Whether the gradient signs at vertex `p` match its on/off pattern:
/// strictly positive where `p_i = P_i`, non-positive where `p_i = 0`.
pub fn verify_stationarity(obj: &PerfectCsitObjective, p: &PowerAllocation) -> Result<bool> {
    if p.relays() != obj.relays() {
        return Err(Error::Contract("allocation length differs from objective".into()));
    }
    if !p.is_vertex() {
        return Err(Error::Contract("stationarity is only defined at vertices".into()));
    }
    let grad = f0_gradient(obj, p);
    Ok(stationary(&p.active(), &grad))
}

/// Sign data deciding the two-relay optimum:
/// `delta = alpha_1 beta_2 - beta_1 alpha_2`, `xi_1(P_2) = alpha_1 + delta P_2`,
/// `xi_2(P_1) = alpha_2 - delta P_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M2Discriminant {
    pub delta: f64,
    pub xi1_at_p2: f64,
    pub xi2_at_p1: f64,
}

impl M2Discriminant {
    pub fn new(alpha: [f64; 2], beta: [f64; 2], caps: [f64; 2]) -> Self {
        let delta = alpha[0] * beta[1] - beta[0] * alpha[1];
        M2Discriminant {
            delta,
            xi1_at_p2: alpha[0] + delta * caps[1],
            xi2_at_p1: alpha[1] - delta * caps[0],
        }
    }

    /// Optimal on/off pattern: relay 2 off when `xi_2(P_1) <= 0`, relay 1 off
    /// when `xi_1(P_2) <= 0`, both on otherwise. (The two "off" conditions
    /// cannot hold together.)
    pub fn vertex(&self) -> [bool; 2] {
        if self.xi2_at_p1 <= 0.0 {
            [true, false]
        } else if self.xi1_at_p2 <= 0.0 {
            [false, true]
        } else {
            [true, true]
        }
    }
}

/// Two-relay optimum under short-term caps.
///
/// In channel terms, `(P_1, 0)` is chosen when
/// `|h_2|^2 <= p_r |g_1|^2 |h_1|^2 / (p_s |h_1|^2 + p_r |g_1|^2 + N0)` and
/// `(0, P_2)` under the mirrored condition; both relays transmit otherwise.
pub fn onoff_m2_closed_form(
    h_gains: [f64; 2],
    g_gains: [f64; 2],
    p_s: f64,
    p_r: f64,
    n0: f64,
) -> Result<PowerAllocation> {
    let caps = short_term_caps(&h_gains, p_s, p_r, n0);
    let alpha = [h_gains[0] * g_gains[0], h_gains[1] * g_gains[1]];
    let disc = M2Discriminant::new(alpha, g_gains, [caps[0], caps[1]]);
    PowerAllocation::vertex(&disc.vertex(), &caps)
}

/// Mean trajectory of the on-off algorithm over random instances, each
/// objective value normalized by the enumerated optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceProfile {
    pub relays: usize,
    pub instances: u64,
    /// Entry `n`: mean normalized `f0` after `n` updates. A run that stopped
    /// earlier contributes its final value.
    pub mean_normalized: Vec<f64>,
    /// Entry `n`: instances stationary after at most `n` updates.
    pub stationary_by: Vec<u64>,
    pub fallbacks: u64,
    /// Instances whose final `f0` differs from the optimum by more than
    /// `1e-12` relative.
    pub mismatches: u64,
}

const PROFILE_CHUNK: u64 = 1024;

/// Runs [`solve_onoff`] from the all-on vertex on `instances` draws of
/// `cfg` (short-term caps, `M <= MAX_ORACLE_RELAYS`) and records the first
/// `horizon + 1` iterates.
pub fn convergence_profile(
    cfg: &NetworkConfig,
    instances: u64,
    seed: u64,
    horizon: usize,
) -> Result<ConvergenceProfile> {
    cfg.validate()?;
    let m = cfg.relays;
    if m > MAX_ORACLE_RELAYS {
        return Err(Error::Size(format!("normalization needs M <= {MAX_ORACLE_RELAYS}")));
    }
    if instances == 0 {
        return Err(Error::Config("instances must be positive".into()));
    }
    let eta = cfg.p_s / cfg.n0;
    let parts: Vec<(Vec<f64>, Vec<u64>, u64, u64)> = (0..instances.div_ceil(PROFILE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut sums = vec![0.0; horizon + 1];
            let mut stat = vec![0u64; horizon + 1];
            let (mut fell, mut bad) = (0, 0);
            for k in c * PROFILE_CHUNK..((c + 1) * PROFILE_CHUNK).min(instances) {
                let mut rng = stream_rng(seed, k);
                let chan = sample_channels_with(cfg, &mut rng);
                let h = chan.h_gains();
                let caps = short_term_caps(&h, cfg.p_s, cfg.p_r, cfg.n0);
                let obj = PerfectCsitObjective::from_gains(&h, &chan.g_gains(), eta)?;
                let best = vertex_enumeration_oracle(&obj, &caps)?;
                let opt = f0_raw(&obj.alpha, &obj.beta, best.powers());
                let (_, trace) = solve_onoff(&obj, &caps, None)?;
                let last = *trace.objective_values.last().expect("non-empty trace");
                for (n, s) in sums.iter_mut().enumerate() {
                    *s += trace.objective_values.get(n).copied().unwrap_or(last) / opt;
                }
                if trace.converged {
                    for st in stat.iter_mut().skip(trace.iterations) {
                        *st += 1;
                    }
                }
                fell += u64::from(trace.fell_back);
                bad += u64::from((last - opt).abs() > 1e-12 * opt);
            }
            Ok((sums, stat, fell, bad))
        })
        .collect::<Result<_>>()?;
    let mut mean = vec![0.0; horizon + 1];
    let mut stationary_by = vec![0u64; horizon + 1];
    let (mut fallbacks, mut mismatches) = (0, 0);
    for (sums, stat, fell, bad) in parts {
        for n in 0..=horizon {
            mean[n] += sums[n];
            stationary_by[n] += stat[n];
        }
        fallbacks += fell;
        mismatches += bad;
    }
    mean.iter_mut().for_each(|v| *v /= instances as f64);
    Ok(ConvergenceProfile {
        relays: m,
        instances,
        mean_normalized: mean,
        stationary_by,
        fallbacks,
        mismatches,
    })
}
