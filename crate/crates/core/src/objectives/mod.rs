//! Conditional pairwise-error-probability bounds and the objectives the
//! allocators maximize.
//!
//! * Perfect CSIT: Chernoff bound `exp(-eta f0(p))` with the quasi-linear
//!   ratio `f0 = sum alpha_i p_i / (1 + sum beta_i p_i)`.
//! * Partial / statistical CSIT: products over per-relay SNR contributions
//!   `rho_i = a_i p_i / (1 + sum_j gamma_gj p_j)` and, at high `eta`, the
//!   log objective `J(p) = sum_i ln rho_i`, which is concave in `ln p`.

mod e1;
pub mod saddle;

pub use e1::{exp_integral_e1, exp_scaled_e1, EULER_GAMMA};
pub use saddle::{saddle_point_error, SaddleEstimate};

use crate::model::{ChannelRealization, PowerAllocation};
use crate::{Error, Result, C64};

/// `eta = lambda_min p_s / (4 N0)`.
pub fn eta_from_code(lambda_min: f64, p_s: f64, n0: f64) -> f64 {
    lambda_min * p_s / (4.0 * n0)
}

/// Perfect-CSIT objective data: `alpha_i = |h_i|^2 |g_i|^2`, `beta_i = |g_i|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfectCsitObjective {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub eta: f64,
}

impl PerfectCsitObjective {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, eta: f64) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::Contract("alpha and beta lengths differ".into()));
        }
        if alpha.iter().chain(&beta).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain("alpha and beta must be finite and >= 0".into()));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Domain(format!("eta must be > 0, got {eta}")));
        }
        Ok(PerfectCsitObjective { alpha, beta, eta })
    }

    pub fn from_channel(ch: &ChannelRealization, eta: f64) -> Result<Self> {
        Self::from_gains(&ch.h_gains(), &ch.g_gains(), eta)
    }

    pub fn from_gains(h_gains: &[f64], g_gains: &[f64], eta: f64) -> Result<Self> {
        let alpha = h_gains.iter().zip(g_gains).map(|(h, g)| h * g).collect();
        Self::new(alpha, g_gains.to_vec(), eta)
    }

    pub fn relays(&self) -> usize {
        self.alpha.len()
    }
}

/// `f0(p) = sum alpha_i p_i / (1 + sum beta_i p_i)`; `eta f0` is the
/// approximate receive SNR.
pub fn f0_value(obj: &PerfectCsitObjective, p: &PowerAllocation) -> f64 {
    f0_raw(&obj.alpha, &obj.beta, p.powers())
}

pub(crate) fn f0_raw(alpha: &[f64], beta: &[f64], p: &[f64]) -> f64 {
    let num: f64 = alpha.iter().zip(p).map(|(a, p)| a * p).sum();
    let den: f64 = 1.0 + beta.iter().zip(p).map(|(b, p)| b * p).sum::<f64>();
    num / den
}

/// Closed-form gradient of `f0`:
/// `(alpha_i (1 + sum_{j!=i} beta_j p_j) - beta_i sum_{j!=i} alpha_j p_j) / (1 + sum_j beta_j p_j)^2`.
pub fn f0_gradient(obj: &PerfectCsitObjective, p: &PowerAllocation) -> Vec<f64> {
    let p = p.powers();
    let num: f64 = obj.alpha.iter().zip(p).map(|(a, p)| a * p).sum();
    let den: f64 = 1.0 + obj.beta.iter().zip(p).map(|(b, p)| b * p).sum::<f64>();
    let den2 = den * den;
    (0..p.len())
        .map(|i| gradient_numerator(obj.alpha[i], obj.beta[i], p[i], num, den) / den2)
        .collect()
}

/// Sign-carrying numerator of `df0/dp_i` given the full sums
/// `num = sum alpha p`, `den = 1 + sum beta p`.
#[inline]
pub(crate) fn gradient_numerator(alpha: f64, beta: f64, p: f64, num: f64, den: f64) -> f64 {
    let others_beta = den - beta * p; // 1 + sum_{j != i} beta_j p_j
    let others_alpha = num - alpha * p; // sum_{j != i} alpha_j p_j
    alpha * others_beta - beta * others_alpha
}

/// Chernoff bound on the PEP given `|h|`, `|g|`, evaluated straight from the
/// channels rather than from the cached `alpha`/`beta`.
pub fn pep_bound_perfect(
    obj: &PerfectCsitObjective,
    p: &PowerAllocation,
    h: &[C64],
    g: &[C64],
) -> Result<f64> {
    let m = p.relays();
    if h.len() != m || g.len() != m {
        return Err(Error::Contract("channel lengths differ from allocation".into()));
    }
    let mut signal = 0.0;
    let mut amplified = 0.0;
    for i in 0..m {
        let pg = p.powers()[i] * g[i].norm_sqr();
        signal += pg * h[i].norm_sqr();
        amplified += pg;
    }
    Ok((-obj.eta * signal / (1.0 + amplified)).exp())
}

/// Shared shape of the partial- and statistical-CSIT objectives: weights
/// `a_i` and second-hop variances `gamma_gi`.
pub trait WaterfillObjective {
    fn weights(&self) -> &[f64];
    fn gamma_g(&self) -> &[f64];

    fn relays(&self) -> usize {
        self.weights().len()
    }

    /// Per-relay SNR contributions `rho_i = a_i p_i / (1 + sum_j gamma_gj p_j)`.
    fn rho(&self, p: &[f64]) -> Vec<f64> {
        let den = 1.0 + self.gamma_g().iter().zip(p).map(|(g, p)| g * p).sum::<f64>();
        self.weights().iter().zip(p).map(|(a, p)| a * p / den).collect()
    }
}

/// Partial CSIT: `a_i = eta gamma_gi |h_i|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCsitObjective {
    pub a: Vec<f64>,
    pub gamma_g: Vec<f64>,
}

impl PartialCsitObjective {
    pub fn new(a: Vec<f64>, gamma_g: Vec<f64>) -> Result<Self> {
        check_weights(&a, &gamma_g, false)?;
        Ok(PartialCsitObjective { a, gamma_g })
    }

    pub fn from_gains(h_gains: &[f64], gamma_g: &[f64], eta: f64) -> Result<Self> {
        let a = h_gains.iter().zip(gamma_g).map(|(h, g)| eta * g * h).collect();
        Self::new(a, gamma_g.to_vec())
    }
}

impl WaterfillObjective for PartialCsitObjective {
    fn weights(&self) -> &[f64] {
        &self.a
    }
    fn gamma_g(&self) -> &[f64] {
        &self.gamma_g
    }
}

/// Statistical CSIT: `a_i = eta gamma_gi gamma_hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticalCsitObjective {
    pub a: Vec<f64>,
    pub gamma_g: Vec<f64>,
}

impl StatisticalCsitObjective {
    pub fn new(a: Vec<f64>, gamma_g: Vec<f64>) -> Result<Self> {
        check_weights(&a, &gamma_g, true)?;
        Ok(StatisticalCsitObjective { a, gamma_g })
    }

    pub fn from_variances(gamma_h: &[f64], gamma_g: &[f64], eta: f64) -> Result<Self> {
        let a = gamma_h.iter().zip(gamma_g).map(|(h, g)| eta * g * h).collect();
        Self::new(a, gamma_g.to_vec())
    }
}

impl WaterfillObjective for StatisticalCsitObjective {
    fn weights(&self) -> &[f64] {
        &self.a
    }
    fn gamma_g(&self) -> &[f64] {
        &self.gamma_g
    }
}

fn check_weights(a: &[f64], gamma_g: &[f64], strictly_positive: bool) -> Result<()> {
    if a.len() != gamma_g.len() {
        return Err(Error::Contract("weight and variance lengths differ".into()));
    }
    if gamma_g.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::Domain("gamma_g entries must be > 0".into()));
    }
    let ok = |x: &f64| x.is_finite() && if strictly_positive { *x > 0.0 } else { *x >= 0.0 };
    if !a.iter().all(ok) {
        return Err(Error::Domain("objective weights a_i out of range".into()));
    }
    Ok(())
}

fn check_len(p: &PowerAllocation, m: usize) -> Result<()> {
    if p.relays() != m {
        return Err(Error::Contract(format!(
            "allocation has {} relays, objective has {m}",
            p.relays()
        )));
    }
    Ok(())
}

/// Saddle-point PEP bound under partial CSIT, `prod_i (1 + rho_i)^-1`.
pub fn pep_bound_partial(obj: &PartialCsitObjective, p: &PowerAllocation) -> Result<f64> {
    check_len(p, obj.relays())?;
    Ok(obj.rho(p.powers()).iter().map(|r| 1.0 / (1.0 + r)).product())
}

/// Exact-average form of the statistical bound,
/// `prod_j (1/rho_j) e^{1/rho_j} E1(1/rho_j)`. Needs every `p_j > 0`.
pub fn pep_bound_statistical_exact(
    obj: &StatisticalCsitObjective,
    p: &PowerAllocation,
) -> Result<f64> {
    check_len(p, obj.relays())?;
    let mut out = 1.0;
    for (j, rho) in obj.rho(p.powers()).into_iter().enumerate() {
        if rho <= 0.0 {
            return Err(Error::Domain(format!("rho_{j} = 0; every relay needs p_j > 0")));
        }
        let x = 1.0 / rho;
        out *= x * exp_scaled_e1(x)?;
    }
    Ok(out)
}

/// Value of an approximation together with whether its validity condition
/// held.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlaggedValue {
    pub value: f64,
    pub valid: bool,
}

/// High-SNR form `prod_j ln(rho_j) / rho_j`; flagged invalid unless every
/// `rho_j > 1`.
pub fn pep_bound_statistical_asymptotic(
    obj: &StatisticalCsitObjective,
    p: &PowerAllocation,
) -> Result<FlaggedValue> {
    check_len(p, obj.relays())?;
    let rho = obj.rho(p.powers());
    let valid = rho.iter().all(|&r| r > 1.0);
    let value = rho.iter().map(|&r| r.ln() / r).product();
    Ok(FlaggedValue { value, valid })
}

/// Exact partial-CSIT log objective `f1 = sum ln(1 + rho_i)` (neither
/// concave nor convex; exposed for evaluation only).
pub fn f1_value(obj: &PartialCsitObjective, p: &PowerAllocation) -> Result<f64> {
    check_len(p, obj.relays())?;
    Ok(obj.rho(p.powers()).iter().map(|r| r.ln_1p()).sum())
}

/// `J(p) = sum_i ln(a_i p_i / (1 + sum_j gamma_gj p_j))`.
pub fn log_objective<O: WaterfillObjective + ?Sized>(obj: &O, p: &[f64]) -> Result<f64> {
    if p.len() != obj.relays() {
        return Err(Error::Contract("allocation length differs from objective".into()));
    }
    if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Domain(format!("J needs p_i > 0, p_{i} = {v}")));
    }
    let den = 1.0 + obj.gamma_g().iter().zip(p).map(|(g, p)| g * p).sum::<f64>();
    let m = p.len() as f64;
    Ok(obj.weights().iter().zip(p).map(|(a, p)| (a * p).ln()).sum::<f64>() - m * den.ln())
}

/// `J` as a function of the log-powers `ln p`.
pub fn log_objective_tilde<O: WaterfillObjective + ?Sized>(obj: &O, log_p: &[f64]) -> Result<f64> {
    let p: Vec<f64> = log_p.iter().map(|x| x.exp()).collect();
    log_objective(obj, &p)
}

/// Water-level bounds `[1/M, (1 + sum gamma_gi P_i)/M]`.
pub fn water_level_range(gamma_g: &[f64], caps: &[f64]) -> (f64, f64) {
    let m = gamma_g.len() as f64;
    let total: f64 = gamma_g.iter().zip(caps).map(|(g, c)| g * c).sum();
    (1.0 / m, (1.0 + total) / m)
}

/// Allocation `p_i = min(mu / gamma_gi, P_i)` at water level `mu`. A relay
/// with `P_i gamma_gi <= mu` is clamped at its cap.
pub fn allocation_at_level(gamma_g: &[f64], caps: &[f64], mu: f64) -> Vec<f64> {
    gamma_g
        .iter()
        .zip(caps)
        .map(|(&g, &c)| if c * g <= mu { c } else { mu / g })
        .collect()
}

/// `J` along the waterfilling path, via the piecewise closed form
/// `|C| ln mu - sum_C ln gamma_g + sum_Cbar ln P - M ln(1 + |C| mu + sum_Cbar gamma_g P) + sum ln a`.
///
/// Levels outside `[mu_min, mu_max]` are clamped with a warning.
pub fn water_level_objective<O: WaterfillObjective + ?Sized>(
    obj: &O,
    mu: f64,
    caps: &[f64],
) -> Result<f64> {
    if caps.len() != obj.relays() {
        return Err(Error::Contract("cap count differs from objective".into()));
    }
    let (lo, hi) = water_level_range(obj.gamma_g(), caps);
    let clamped = mu.clamp(lo, hi);
    if clamped != mu {
        log::warn!("water level {mu} outside [{lo}, {hi}], clamped to {clamped}");
    }
    Ok(objective_at_level_unchecked(obj.weights(), obj.gamma_g(), caps, clamped))
}

pub(crate) fn objective_at_level_unchecked(a: &[f64], gamma_g: &[f64], caps: &[f64], mu: f64) -> f64 {
    let m = a.len() as f64;
    let mut filled = 0usize;
    let mut log_sum = 0.0;
    let mut capped_load = 0.0;
    for (&g, &c) in gamma_g.iter().zip(caps) {
        if c * g <= mu {
            log_sum += c.ln();
            capped_load += g * c;
        } else {
            filled += 1;
            log_sum -= g.ln();
        }
    }
    let n = filled as f64;
    let weights: f64 = a.iter().map(|x| x.ln()).sum();
    n * mu.ln() + log_sum - m * (1.0 + n * mu + capped_load).ln() + weights
}
