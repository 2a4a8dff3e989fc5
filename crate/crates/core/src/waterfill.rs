//! Partial- and statistical-CSIT allocation by waterfilling.
//!
//! In log-powers the objective `J` is strictly concave and its KKT conditions
//! give `p_i = min(mu / gamma_gi, P_i)` for a single water level `mu`. The
//! optimal level is one of `M` candidates built from the relays sorted by
//! `P_i gamma_gi`; each candidate is clamped to `[1/M, (1 + sum gamma_g P)/M]`
//! and scored with its cap membership recomputed from the level itself.

use std::fmt::Write as _;

use crate::model::PowerAllocation;
use crate::objectives::{
    allocation_at_level, objective_at_level_unchecked, water_level_range, WaterfillObjective,
};
use crate::{Error, Result};

/// The `M` candidate water levels and how they scored.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterLevelCandidates {
    /// Relay indices sorted by `P_i gamma_gi` ascending (stable on ties).
    pub order: Vec<usize>,
    /// `mu_j = (1 + sum_{i<=j} P_pi(i) gamma_g,pi(i)) / j`, unclamped.
    pub levels: Vec<f64>,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Whether `levels[j]` lies inside `[mu_min, mu_max]`.
    pub feasible: Vec<bool>,
    /// `J` at each level after clamping.
    pub objective_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillResult {
    pub allocation: PowerAllocation,
    pub mu_star: f64,
    pub candidates: WaterLevelCandidates,
}

impl WaterfillResult {
    /// Relays transmitting at their cap.
    pub fn at_cap(&self) -> Vec<bool> {
        let a = &self.allocation;
        a.powers().iter().zip(a.caps()).map(|(p, c)| p == c).collect()
    }

    /// CSV rows `relay,gamma_g,cap,p,at_cap,mu_star` (relays numbered from 1).
    pub fn to_csv(&self, gamma_g: &[f64]) -> String {
        let mut out = String::from("relay,gamma_g,cap,p,at_cap,mu_star\n");
        let a = &self.allocation;
        for (i, capped) in self.at_cap().into_iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                i + 1,
                gamma_g[i],
                a.caps()[i],
                a.powers()[i],
                u8::from(capped),
                self.mu_star
            );
        }
        out
    }
}

fn check<O: WaterfillObjective + ?Sized>(obj: &O, caps: &[f64]) -> Result<()> {
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
    if obj.weights().iter().any(|a| !(*a > 0.0)) {
        return Err(Error::Domain("waterfilling needs every a_i > 0".into()));
    }
    Ok(())
}

/// Candidate water levels for `(gamma_g, caps)`; `objective_values` use the
/// weights of `obj`.
pub fn water_level_candidates<O: WaterfillObjective + ?Sized>(
    obj: &O,
    caps: &[f64],
) -> Result<WaterLevelCandidates> {
    check(obj, caps)?;
    let gamma = obj.gamma_g();
    let m = gamma.len();
    let load: Vec<f64> = caps.iter().zip(gamma).map(|(c, g)| c * g).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| load[i].total_cmp(&load[j]));

    let (mu_min, mu_max) = water_level_range(gamma, caps);
    let mut levels = Vec::with_capacity(m);
    let mut running = 0.0;
    for (j, &i) in order.iter().enumerate() {
        running += load[i];
        levels.push((1.0 + running) / (j + 1) as f64);
    }
    // the last candidate is mu_max by definition; pin it against round-off
    if let Some(last) = levels.last_mut() {
        *last = mu_max;
    }
    let feasible = levels.iter().map(|&mu| (mu_min..=mu_max).contains(&mu)).collect();
    let objective_values = levels
        .iter()
        .map(|&mu| objective_at_level_unchecked(obj.weights(), gamma, caps, mu.clamp(mu_min, mu_max)))
        .collect();
    Ok(WaterLevelCandidates {
        order,
        levels,
        mu_min,
        mu_max,
        feasible,
        objective_values,
    })
}

/// Optimal waterfilling allocation. Never returns a zero power.
pub fn solve_waterfill<O: WaterfillObjective + ?Sized>(obj: &O, caps: &[f64]) -> Result<WaterfillResult> {
    let candidates = water_level_candidates(obj, caps)?;
    let mut best = 0;
    for (j, v) in candidates.objective_values.iter().enumerate() {
        if *v > candidates.objective_values[best] {
            best = j;
        }
    }
    let mu_star = candidates.levels[best].clamp(candidates.mu_min, candidates.mu_max);
    let p = allocation_at_level(obj.gamma_g(), caps, mu_star);
    Ok(WaterfillResult {
        allocation: PowerAllocation::new(p, caps.to_vec())?,
        mu_star,
        candidates,
    })
}

/// Two-relay waterfilling in closed form.
///
/// With `L_i = P_i gamma_gi`: if `L_2 > L_1 + 1` relay 2 is filled to
/// `(1 + L_1)/gamma_g2`; if `L_1 > L_2 + 1` relay 1 is filled to
/// `(1 + L_2)/gamma_g1`; otherwise both transmit at their caps.
pub fn waterfill_m2_closed_form(gamma_g: [f64; 2], caps: [f64; 2]) -> Result<PowerAllocation> {
    let l1 = caps[0] * gamma_g[0];
    let l2 = caps[1] * gamma_g[1];
    let p = if l2 > l1 + 1.0 {
        vec![caps[0], (1.0 + l1) / gamma_g[1]]
    } else if l1 > l2 + 1.0 {
        vec![(1.0 + l2) / gamma_g[0], caps[1]]
    } else {
        caps.to_vec()
    };
    PowerAllocation::new(p, caps.to_vec())
}

/// `dJ/d ln(mu) = |C| (1 - M mu / (1 + |C| mu + sum_{Cbar} gamma_g P))`, where
/// `Cbar` holds the relays with `P_i gamma_gi <= mu` and `C` the rest. The
/// weights `a_i` do not enter.
pub fn water_level_derivative<O: WaterfillObjective + ?Sized>(
    obj: &O,
    mu: f64,
    caps: &[f64],
) -> Result<f64> {
    check(obj, caps)?;
    let m = caps.len() as f64;
    let mut filled = 0usize;
    let mut capped_load = 0.0;
    for (&g, &c) in obj.gamma_g().iter().zip(caps) {
        if c * g <= mu {
            capped_load += c * g;
        } else {
            filled += 1;
        }
    }
    let n = filled as f64;
    Ok(n * (1.0 - m * mu / (1.0 + n * mu + capped_load)))
}

/// Smallest grid accepted by [`grid_search_oracle`].
pub const MIN_GRID_POINTS: usize = 10_000;

/// Best water level over a uniform grid on `[mu_min, mu_max]` together with
/// the `M` candidate levels, returned as `(mu, J)`.
pub fn grid_search_oracle<O: WaterfillObjective + ?Sized>(
    obj: &O,
    caps: &[f64],
    grid_points: usize,
) -> Result<(f64, f64)> {
    check(obj, caps)?;
    if grid_points < MIN_GRID_POINTS {
        return Err(Error::Contract(format!(
            "grid needs at least {MIN_GRID_POINTS} points, got {grid_points}"
        )));
    }
    let gamma = obj.gamma_g();
    let m = gamma.len();
    let weights: f64 = obj.weights().iter().map(|a| a.ln()).sum();

    // relays sorted by the level at which they hit their cap
    let mut relays: Vec<(f64, f64, f64)> = (0..m)
        .map(|i| (caps[i] * gamma[i], caps[i].ln(), gamma[i].ln()))
        .collect();
    relays.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (lo, hi) = water_level_range(gamma, caps);
    let mut capped = 0usize;
    let mut capped_log_cap = 0.0;
    let mut capped_load = 0.0;
    let mut filled_log_gamma: f64 = relays.iter().map(|r| r.2).sum();
    let mf = m as f64;

    let mut best = (lo, f64::NEG_INFINITY);
    let step = (hi - lo) / (grid_points - 1) as f64;
    for t in 0..grid_points {
        let mu = if t + 1 == grid_points { hi } else { lo + step * t as f64 };
        while capped < m && relays[capped].0 <= mu {
            capped_log_cap += relays[capped].1;
            capped_load += relays[capped].0;
            filled_log_gamma -= relays[capped].2;
            capped += 1;
        }
        let n = (m - capped) as f64;
        let j = n * mu.ln() - filled_log_gamma + capped_log_cap
            - mf * (1.0 + n * mu + capped_load).ln()
            + weights;
        if j > best.1 {
            best = (mu, j);
        }
    }
    for c in water_level_candidates(obj, caps)?.levels {
        let mu = c.clamp(lo, hi);
        let j = objective_at_level_unchecked(obj.weights(), gamma, caps, mu);
        if j > best.1 {
            best = (mu, j);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{log_objective, water_level_objective, PartialCsitObjective};

    fn unit(m: usize, gamma: &[f64]) -> PartialCsitObjective {
        PartialCsitObjective::new(vec![1.0; m], gamma.to_vec()).unwrap()
    }

    #[test]
    fn two_relay_example() {
        let obj = unit(2, &[1.0, 1.0]);
        let r = solve_waterfill(&obj, &[1.0, 3.0]).unwrap();
        assert_eq!(r.mu_star, 2.0);
        assert_eq!(r.allocation.powers(), &[1.0, 2.0]);
        let j2 = water_level_objective(&obj, 2.0, &[1.0, 3.0]).unwrap();
        let j25 = water_level_objective(&obj, 2.5, &[1.0, 3.0]).unwrap();
        assert!(j2 > j25);
    }

    #[test]
    fn three_relay_example() {
        let obj = unit(3, &[1.0; 3]);
        let caps = [0.5, 1.0, 5.0];
        let r = solve_waterfill(&obj, &caps).unwrap();
        assert_eq!(r.mu_star, 1.25);
        assert_eq!(r.allocation.powers(), &[0.5, 1.0, 1.25]);
        assert_eq!(r.candidates.levels, vec![1.5, 1.25, 2.5]);
        let j = log_objective(&obj, r.allocation.powers()).unwrap();
        assert!((j - (-4.435_271_149_192_694)).abs() < 1e-9);
        let at = |mu| water_level_objective(&obj, mu, &caps).unwrap();
        assert!((at(1.5) - (-4.446_565)).abs() < 1e-6);
        assert!((at(2.5) - (-4.605_170)).abs() < 1e-6);
        assert_eq!(r.at_cap(), vec![true, true, false]);
    }

    #[test]
    fn symmetric_pair_at_caps() {
        let r = solve_waterfill(&unit(2, &[1.0, 1.0]), &[1.0, 1.0]).unwrap();
        assert_eq!(r.allocation.powers(), &[1.0, 1.0]);
    }

    #[test]
    fn single_relay_always_capped() {
        let obj = unit(1, &[2.0]);
        let r = solve_waterfill(&obj, &[3.0]).unwrap();
        assert_eq!(r.mu_star, 7.0);
        assert_eq!(r.allocation.powers(), &[3.0]);
        let (mu, _) = grid_search_oracle(&obj, &[3.0], 10_000).unwrap();
        // J is flat once the relay is capped; every level in the domain ties
        assert!(mu <= 7.0);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(waterfill_m2_closed_form([1.0, 1.0], [1.0, 3.0]).unwrap().powers(), &[1.0, 2.0]);
        assert_eq!(waterfill_m2_closed_form([1.0, 1.0], [3.0, 1.0]).unwrap().powers(), &[2.0, 1.0]);
        assert_eq!(waterfill_m2_closed_form([2.0, 1.0], [1.0, 2.5]).unwrap().powers(), &[1.0, 2.5]);
    }

    #[test]
    fn derivative_vanishes_at_interior_optimum() {
        let obj = unit(3, &[1.0; 3]);
        let caps = [0.5, 1.0, 5.0];
        assert!(water_level_derivative(&obj, 1.25, &caps).unwrap().abs() < 1e-9);
        assert!(water_level_derivative(&obj, 1.3, &caps).unwrap() < 0.0);
        assert!(water_level_derivative(&obj, 1.2, &caps).unwrap() > 0.0);
    }

    #[test]
    fn grid_oracle_examples() {
        let (mu, _) = grid_search_oracle(&unit(2, &[1.0, 1.0]), &[1.0, 3.0], 10_000).unwrap();
        assert!((mu - 2.0).abs() < 1e-3);
        let (mu, j) = grid_search_oracle(&unit(3, &[1.0; 3]), &[0.5, 1.0, 5.0], 10_000).unwrap();
        assert!((mu - 1.25).abs() < 1e-3);
        assert!((j - (-4.435_271_149_192_694)).abs() < 1e-9);
        assert!(grid_search_oracle(&unit(1, &[1.0]), &[1.0], 10).is_err());
    }

    #[test]
    fn csv_rows() {
        let r = solve_waterfill(&unit(3, &[1.0; 3]), &[0.5, 1.0, 5.0]).unwrap();
        let csv = r.to_csv(&[1.0; 3]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "relay,gamma_g,cap,p,at_cap,mu_star");
        assert_eq!(lines[3], "3,1,5,1.25,0,1.25");
    }

    #[test]
    fn rejects_zero_weight() {
        let obj = PartialCsitObjective::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(solve_waterfill(&obj, &[1.0, 1.0]).is_err());
    }
}
