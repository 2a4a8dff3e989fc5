//! Monte Carlo check of the saddle-point (Laplace) approximation behind the
//! partial-CSIT bound: `E_g[exp(-eta a/b)]` with `a = g^H H^H P H g`,
//! `b = 1 + g^H P g`, against `prod_i (1 + eta |h_i|^2 gamma_gi p_i / E[b])^-1`.

use rayon::prelude::*;

use crate::rng::{complex_gaussian, stream_rng};
use crate::{Error, Result, C64};

/// Draws per RNG stream. Fixed, so the estimate does not depend on how many
/// workers run.
const CHUNK: u64 = 4096;

/// Minimum number of channel draws accepted.
pub const MIN_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleEstimate {
    /// Monte Carlo mean of `exp(-eta a/b)`.
    pub monte_carlo: f64,
    /// Standard error of `monte_carlo`.
    pub monte_carlo_stderr: f64,
    /// Closed-form saddle-point value.
    pub saddle_point: f64,
    /// `|monte_carlo - saddle_point| / monte_carlo`.
    pub relative_error: f64,
    /// Standard error of `relative_error` (delta method).
    pub relative_error_stderr: f64,
}

pub fn saddle_point_error(
    h: &[C64],
    gamma_g: &[f64],
    p: &[f64],
    eta: f64,
    trials: u64,
    seed: u64,
) -> Result<SaddleEstimate> {
    let m = h.len();
    if gamma_g.len() != m || p.len() != m {
        return Err(Error::Contract("h, gamma_g and p lengths differ".into()));
    }
    if trials < MIN_TRIALS {
        return Err(Error::Contract(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::Domain(format!("eta must be finite and >= 0, got {eta}")));
    }
    let h_gain: Vec<f64> = h.iter().map(|z| z.norm_sqr()).collect();

    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let n = CHUNK.min(trials - c * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let (mut a, mut b) = (0.0, 1.0);
                for i in 0..m {
                    let gp = p[i] * complex_gaussian(&mut rng, gamma_g[i]).norm_sqr();
                    a += h_gain[i] * gp;
                    b += gp;
                }
                let x = (-eta * a / b).exp();
                s1 += x;
                s2 += x * x;
            }
            (s1, s2)
        })
        .collect();
    // ordered merge keeps the float sum reproducible
    let (s1, s2) = partial
        .iter()
        .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));

    let n = trials as f64;
    let mean = s1 / n;
    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let stderr = (var / n).sqrt();

    let expected_b = 1.0 + gamma_g.iter().zip(p).map(|(g, p)| g * p).sum::<f64>();
    let saddle: f64 = (0..m)
        .map(|i| 1.0 / (1.0 + eta * h_gain[i] * gamma_g[i] * p[i] / expected_b))
        .product();

    let relative_error = (mean - saddle).abs() / mean;
    // d/dmean |mean - s|/mean = s/mean^2 in magnitude
    let relative_error_stderr = saddle / (mean * mean) * stderr;
    Ok(SaddleEstimate {
        monte_carlo: mean,
        monte_carlo_stderr: stderr,
        saddle_point: saddle,
        relative_error,
        relative_error_stderr,
    })
}
