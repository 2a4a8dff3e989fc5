//! Generated matplotlib scripts for experiment CSVs.

use std::path::{Path, PathBuf};

use super::spec::ExperimentKind;
use crate::{Error, Result};

struct Layout {
    x: &'static str,
    y: &'static str,
    group: Option<&'static str>,
    log_y: bool,
    xlabel: &'static str,
    ylabel: &'static str,
}

fn layout(kind: ExperimentKind) -> Layout {
    use ExperimentKind::*;
    match kind {
        Convergence => Layout {
            x: "iteration",
            y: "mean_normalized_objective",
            group: Some("M"),
            log_y: false,
            xlabel: "iteration",
            ylabel: "normalized objective",
        },
        BlerVsSnr => Layout {
            x: "snr_db",
            y: "bler",
            group: None,
            log_y: true,
            xlabel: "p_r/N0 [dB]",
            ylabel: "block error rate",
        },
        BerVsDistance => Layout {
            x: "r",
            y: "ber",
            group: Some("M"),
            log_y: true,
            xlabel: "transmitter-relay distance r",
            ylabel: "bit error rate",
        },
        PowerRatioVsDistance => Layout {
            x: "r",
            y: "power_ratio",
            group: Some("M"),
            log_y: false,
            xlabel: "transmitter-relay distance r",
            ylabel: "effective number of relays",
        },
        BerVsNetworkPower => Layout {
            x: "snr_db",
            y: "ber",
            group: Some("M"),
            log_y: true,
            xlabel: "network power P/N0 [dB]",
            ylabel: "bit error rate",
        },
        Asymptotic => Layout {
            x: "scale",
            y: "onoff_ratio",
            group: Some("hop"),
            log_y: false,
            xlabel: "channel gain scale",
            ylabel: "effective number of relays",
        },
        SaddleStudy => Layout {
            x: "M",
            y: "relative_error",
            group: None,
            log_y: true,
            xlabel: "relays M",
            ylabel: "relative error of the saddle-point bound",
        },
    }
}

/// Standalone Python script that plots `csv_paths` with the plot layout
/// of `kind`: one series per file (and per group value, e.g. per `M`).
pub fn emit_plot_script(csv_paths: &[PathBuf], kind: ExperimentKind) -> Result<String> {
    let missing: Vec<String> = csv_paths
        .iter()
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Config(format!("missing CSV: {}", missing.join(", "))));
    }
    let l = layout(kind);
    let files: Vec<String> = csv_paths
        .iter()
        .map(|p| format!("    {:?},", file_name(p)))
        .collect();
    let group = l.group.map_or("None".to_string(), |g| format!("{g:?}"));
    let log_x = matches!(kind, ExperimentKind::Asymptotic);
    let mut ylim = String::new();
    if kind == ExperimentKind::PowerRatioVsDistance {
        ylim.push_str("ax.set_ylim(bottom=0)\n");
    }
    Ok(format!(
        r#"#!/usr/bin/env python3
# Plots {kind} results. Run from the directory holding the CSV files.
import csv
import os
from collections import defaultdict

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
FILES = [
{files}
]
X, Y, GROUP = {x:?}, {y:?}, {group}

fig, ax = plt.subplots()
for name in FILES:
    with open(os.path.join(HERE, name), newline="") as fh:
        rows = list(csv.DictReader(fh))
    series = defaultdict(list)
    for row in rows:
        key = row.get("scheme", os.path.splitext(name)[0])
        if GROUP is not None and GROUP in row:
            key = f"{{key}} {{GROUP}}={{row[GROUP]}}"
        series[key].append((float(row[X]), float(row[Y])))
    for key, pts in series.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=key)
{yscale}{xscale}{ylim}ax.set_xlabel({xlabel:?})
ax.set_ylabel({ylabel:?})
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.savefig(os.path.join(HERE, "{kind}.pdf"))
plt.show()
"#,
        kind = kind.as_str(),
        files = files.join("\n"),
        x = l.x,
        y = l.y,
        yscale = if l.log_y { "ax.set_yscale(\"log\")\n" } else { "" },
        xscale = if log_x { "ax.set_xscale(\"log\")\n" } else { "" },
        xlabel = l.xlabel,
        ylabel = l.ylabel,
    ))
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}
