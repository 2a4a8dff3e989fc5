//! Reproducible experiment runs driven by TOML spec files.
//!
//! A run computes every CSV in memory, then writes them together with a
//! plot script and the resolved spec. Nothing is left behind when a run
//! fails. Results depend only on the spec and its seed, never on the shard
//! count.

mod plot;
mod spec;

pub use plot::emit_plot_script;
pub use spec::{ExperimentKind, ExperimentSpec, NetworkSpec, SchemeName, SweepSpec, NETWORK_POWER_GAMMA_G};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::asymptotic::{distance_diagnostics, scaling_study, Hop};
use crate::model::{short_term_caps, CsitMode};
use crate::objectives::saddle_point_error;
use crate::onoff::convergence_profile;
use crate::rng::derive_seed;
use crate::sim::monte_carlo::{
    config_at_distance, config_at_snr, effective_relay_count, run_codebook, run_monte_carlo,
    simulate_direct_point, simulate_relay_point, SimOptions, SimPoint,
};
use crate::sim::{Scheme, SnrAxis};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides the spec's `output`; `out` when neither is given.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    pub shards: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out_dir: None,
            shards: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Frames per point, or trials for allocation-only studies.
    pub frames: u64,
    pub elapsed: Duration,
    /// CSV files written, in order.
    pub csv_files: Vec<PathBuf>,
    pub plot_script: PathBuf,
}

impl RunSummary {
    pub fn line(&self) -> String {
        format!(
            "kind={} seed={} frames={} elapsed_s={:.3}",
            self.kind.as_str(),
            self.seed,
            self.frames,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Run `spec` and write its outputs.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<RunSummary> {
    let start = Instant::now();
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| spec.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.shards.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let tables = pool.install(|| compute(spec, opts.shards.max(1)))?;

    let mut written: Vec<PathBuf> = Vec::new();
    let result = write_outputs(spec, &out_dir, &tables, &mut written);
    match result {
        Ok(plot_script) => Ok(RunSummary {
            kind: spec.kind,
            seed: spec.seed,
            frames: spec.budget(),
            elapsed: start.elapsed(),
            csv_files: written[..tables.len()].to_vec(),
            plot_script,
        }),
        Err(e) => {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            Err(e)
        }
    }
}

fn write_outputs(
    spec: &ExperimentSpec,
    out_dir: &Path,
    tables: &[(String, String)],
    written: &mut Vec<PathBuf>,
) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    for (name, body) in tables {
        let path = out_dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
    }
    let script = emit_plot_script(written, spec.kind)?;
    let script_path = out_dir.join(format!("plot_{}.py", spec.kind.as_str()));
    std::fs::write(&script_path, script)?;
    written.push(script_path.clone());
    let cfg_path = out_dir.join(format!("{}_config.toml", spec.kind.as_str()));
    std::fs::write(&cfg_path, spec.to_toml())?;
    written.push(cfg_path);
    Ok(script_path)
}

/// `(file name, CSV text)` for every output of `spec`.
pub fn compute(spec: &ExperimentSpec, shards: usize) -> Result<Vec<(String, String)>> {
    use ExperimentKind::*;
    let kind = spec.kind.as_str();
    match spec.kind {
        Convergence => Ok(vec![(format!("{kind}_onoff.csv"), convergence_csv(spec)?)]),
        BlerVsSnr => spec
            .schemes
            .iter()
            .map(|s| Ok((format!("{kind}_{}.csv", s.label()), bler_csv(spec, *s, shards)?)))
            .collect(),
        BerVsDistance | BerVsNetworkPower => spec
            .schemes
            .iter()
            .map(|s| Ok((format!("{kind}_{}.csv", s.label()), swept_ber_csv(spec, *s, shards)?)))
            .collect(),
        PowerRatioVsDistance => spec
            .schemes
            .iter()
            .map(|s| Ok((format!("{kind}_{}.csv", s.label()), power_ratio_csv(spec, *s)?)))
            .collect(),
        Asymptotic => Ok(vec![
            (format!("{kind}_scaling.csv"), scaling_csv(spec)?),
            (format!("{kind}_distance.csv"), distance_csv(spec)?),
        ]),
        SaddleStudy => Ok(vec![(format!("{kind}.csv"), saddle_csv(spec)?)]),
    }
}

fn convergence_csv(spec: &ExperimentSpec) -> Result<String> {
    let mut out = String::from("M,iteration,mean_normalized_objective,stationary_fraction\n");
    let horizon = spec.iterations.unwrap_or(10);
    for &m in &spec.relays {
        let cfg = spec.network_config(m, CsitMode::Perfect)?;
        let trials = spec.budget();
        let prof = convergence_profile(&cfg, trials, derive_seed(spec.seed, m as u64), horizon)?;
        for n in 0..=horizon {
            let _ = writeln!(
                out,
                "{m},{n},{:.9},{:.6}",
                prof.mean_normalized[n],
                prof.stationary_by[n] as f64 / trials as f64
            );
        }
    }
    Ok(out)
}

fn bler_csv(spec: &ExperimentSpec, scheme: SchemeName, shards: usize) -> Result<String> {
    let cfg = spec.network_config(spec.relays[0], scheme.csit())?;
    let opts = SimOptions {
        frames: spec.budget(),
        seed: spec.seed,
        shards,
        axis: spec.sweep.snr_axis.unwrap_or_default(),
    };
    let grid = spec.sweep.snr_db.as_deref().unwrap_or(&[]);
    Ok(run_monte_carlo(&cfg, scheme.scheme(), grid, &opts)?.to_csv())
}

fn swept_row(out: &mut String, label: &str, m: usize, x: f64, p: &SimPoint) {
    let _ = writeln!(
        out,
        "{label},{m},{x},{},{},{},{:.6e},{:.6e},{:.6e}",
        p.frames,
        p.block_errors,
        p.bit_errors,
        p.bler(),
        p.ber(),
        p.stderr_bler()
    );
}

// BER over distance (one power) or over network power (fixed topology).
fn swept_ber_csv(spec: &ExperimentSpec, scheme: SchemeName, shards: usize) -> Result<String> {
    let by_distance = spec.kind == ExperimentKind::BerVsDistance;
    let axis = spec.sweep.snr_axis.unwrap_or(SnrAxis::NetworkTotal);
    let snr = spec.sweep.snr_db.clone().unwrap_or_default();
    let xs: Vec<f64> = if by_distance {
        spec.sweep.r.clone().unwrap_or_default()
    } else {
        snr.clone()
    };
    let frames = spec.budget();
    let label = scheme.label();
    let mut out = format!(
        "scheme,M,{},frames,block_errors,bit_errors,bler,ber,stderr_bler\n",
        if by_distance { "r" } else { "snr_db" }
    );
    for &m in &spec.relays {
        let base = spec.network_config(m, scheme.csit())?;
        let m_seed = derive_seed(spec.seed, m as u64);
        let code = match scheme.scheme() {
            Scheme::DirectLink => None,
            _ => Some(run_codebook(m, m_seed)?),
        };
        for (j, &x) in xs.iter().enumerate() {
            let snr_db = if by_distance { snr[0] } else { x };
            let point_seed = derive_seed(m_seed, j as u64);
            let (blocks, bits) = match &code {
                None => simulate_direct_point(
                    10f64.powf(snr_db / 10.0) * base.n0,
                    base.n0,
                    m,
                    frames,
                    point_seed,
                    shards,
                )?,
                Some(code) => {
                    let placed = if by_distance { config_at_distance(&base, x)? } else { base.clone() };
                    let cfg = config_at_snr(&placed, axis, snr_db);
                    simulate_relay_point(&cfg, scheme.scheme(), code, frames, point_seed, shards)?
                }
            };
            let p = SimPoint {
                snr_db,
                frames,
                block_errors: blocks,
                bit_errors: bits,
                bits_per_frame: m as u64,
            };
            swept_row(&mut out, &label, m, x, &p);
        }
    }
    Ok(out)
}

fn power_ratio_csv(spec: &ExperimentSpec, scheme: SchemeName) -> Result<String> {
    let axis = spec.sweep.snr_axis.unwrap_or(SnrAxis::NetworkTotal);
    let snr = spec.sweep.snr_db.as_ref().map_or(15.0, |v| v[0]);
    let r_grid = spec.sweep.r.clone().unwrap_or_default();
    let trials = spec.budget();
    let label = scheme.label();
    let mut out = String::from("scheme,M,r,trials,power_ratio\n");
    for &m in &spec.relays {
        let cfg = config_at_snr(&spec.network_config(m, scheme.csit())?, axis, snr);
        let ratios = effective_relay_count(&cfg, scheme.scheme(), &r_grid, trials, derive_seed(spec.seed, m as u64))?;
        for (r, v) in r_grid.iter().zip(ratios) {
            let _ = writeln!(out, "{label},{m},{r},{trials},{v:.9}");
        }
    }
    Ok(out)
}

fn study_config(spec: &ExperimentSpec, m: usize) -> Result<crate::NetworkConfig> {
    let cfg = spec.network_config(m, CsitMode::Perfect)?;
    Ok(match spec.sweep.snr_db.as_deref() {
        Some([snr, ..]) => config_at_snr(&cfg, spec.sweep.snr_axis.unwrap_or_default(), *snr),
        _ => cfg,
    })
}

fn scaling_csv(spec: &ExperimentSpec) -> Result<String> {
    let mut out = String::from(
        "hop,M,scale,onoff_ratio,all_on_fraction,single_fraction,selection_agreement,waterfill_ratio,waterfill_capped\n",
    );
    let scales = spec.sweep.scale.clone().unwrap_or_default();
    for (hop, name) in [(Hop::First, "first"), (Hop::Second, "second")] {
        for &m in &spec.relays {
            let cfg = study_config(spec, m)?;
            let seed = derive_seed(derive_seed(spec.seed, m as u64), hop as u64);
            for p in scaling_study(&cfg, hop, &scales, spec.budget(), seed)? {
                let _ = writeln!(
                    out,
                    "{name},{m},{},{:.9},{:.6},{:.6},{:.6},{:.9},{:.6}",
                    p.scale,
                    p.onoff_ratio,
                    p.all_on_fraction,
                    p.single_fraction,
                    p.selection_agreement,
                    p.waterfill_ratio,
                    p.waterfill_capped
                );
            }
        }
    }
    Ok(out)
}

fn distance_csv(spec: &ExperimentSpec) -> Result<String> {
    let mut out = String::from(
        "M,r,onoff_ratio,partial_ratio,statistical_ratio,maxpower_ratio,agreement,equalization_spread\n",
    );
    for &m in &spec.relays {
        let cfg = study_config(spec, m)?;
        for (j, &r) in spec.sweep.r.as_deref().unwrap_or(&[]).iter().enumerate() {
            let seed = derive_seed(derive_seed(spec.seed, m as u64), 100 + j as u64);
            let d = distance_diagnostics(&cfg, r, spec.budget(), seed)?;
            let _ = writeln!(
                out,
                "{m},{r},{:.9},{:.9},{:.9},{:.9},{:.6},{:.3e}",
                d.onoff_ratio, d.partial_ratio, d.statistical_ratio, d.maxpower_ratio, d.agreement, d.equalization_spread
            );
        }
    }
    Ok(out)
}

/// Saddle-point accuracy on the unit-gain instance `|h_i|^2 = 1`, `p = P`.
fn saddle_csv(spec: &ExperimentSpec) -> Result<String> {
    let mut out = String::from(
        "M,trials,monte_carlo,monte_carlo_stderr,saddle_point,relative_error,relative_error_stderr\n",
    );
    let eta = spec.eta.unwrap_or(1.0);
    for &m in &spec.relays {
        let cfg = spec.network_config(m, CsitMode::Partial)?;
        let caps = short_term_caps(&vec![1.0; m], cfg.p_s, cfg.p_r, cfg.n0);
        let h = vec![C64::new(1.0, 0.0); m];
        let e = saddle_point_error(&h, &cfg.gamma_g, &caps, eta, spec.budget(), derive_seed(spec.seed, m as u64))?;
        let _ = writeln!(
            out,
            "{m},{},{:.9e},{:.3e},{:.9e},{:.6e},{:.3e}",
            spec.budget(),
            e.monte_carlo,
            e.monte_carlo_stderr,
            e.saddle_point,
            e.relative_error,
            e.relative_error_stderr
        );
    }
    Ok(out)
}
