use std::path::Path;
use std::process::Command;

use af_relay::experiment::{run_experiment, ExperimentKind, ExperimentSpec, RunOptions};

const SMALL: &[(&str, &str)] = &[
    ("convergence", "kind = \"convergence\"\ntrials = 300\nrelays = [2, 5]\n"),
    (
        "bler_vs_snr",
        "kind = \"bler_vs_snr\"\nframes = 1500\n[sweep]\nsnr_db = [0, 10]\n",
    ),
    (
        "ber_vs_distance",
        "kind = \"ber_vs_distance\"\nframes = 1000\nrelays = [2, 3]\n[sweep]\nr = [0.2, 0.8]\nsnr_db = [15]\n",
    ),
    (
        "power_ratio_vs_distance",
        "kind = \"power_ratio_vs_distance\"\ntrials = 500\nrelays = [2, 4]\n[sweep]\nr = [0.1, 0.5, 0.9]\n",
    ),
    (
        "ber_vs_network_power",
        "kind = \"ber_vs_network_power\"\nframes = 1000\nrelays = [2]\n[sweep]\nsnr_db = [5, 15]\n",
    ),
    (
        "asymptotic",
        "kind = \"asymptotic\"\ntrials = 300\nrelays = [2, 3]\n[sweep]\nscale = [1, 1000]\n",
    ),
    ("saddle_study", "kind = \"saddle_study\"\ntrials = 10000\nrelays = [2, 4]\n"),
];

fn run(text: &str, dir: &Path, shards: usize) -> Vec<(String, String)> {
    let spec = ExperimentSpec::parse(text).unwrap();
    let summary = run_experiment(
        &spec,
        &RunOptions {
            out_dir: Some(dir.to_path_buf()),
            shards,
        },
    )
    .unwrap();
    assert!(summary.plot_script.is_file());
    summary
        .csv_files
        .iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read_to_string(p).unwrap(),
            )
        })
        .collect()
}

fn header(csvs: &[(String, String)], name: &str) -> String {
    let (_, body) = csvs.iter().find(|(n, _)| n == name).unwrap_or_else(|| panic!("no {name}"));
    body.lines().next().unwrap().to_string()
}

#[test]
fn csv_headers_per_kind() {
    let dir = tempfile::tempdir().unwrap();
    let mut all = Vec::new();
    for (kind, text) in SMALL {
        let out = dir.path().join(kind);
        all.extend(run(text, &out, 2));
    }
    assert_eq!(
        header(&all, "convergence_onoff.csv"),
        "M,iteration,mean_normalized_objective,stationary_fraction"
    );
    assert_eq!(
        header(&all, "bler_vs_snr_onoff.csv"),
        "scheme,snr_db,frames,block_errors,bit_errors,bler,ber,stderr_bler"
    );
    assert_eq!(
        header(&all, "ber_vs_distance_waterfill-partial.csv"),
        "scheme,M,r,frames,block_errors,bit_errors,bler,ber,stderr_bler"
    );
    assert_eq!(
        header(&all, "ber_vs_network_power_direct.csv"),
        "scheme,M,snr_db,frames,block_errors,bit_errors,bler,ber,stderr_bler"
    );
    assert_eq!(header(&all, "power_ratio_vs_distance_maxpower.csv"), "scheme,M,r,trials,power_ratio");
    assert!(header(&all, "asymptotic_scaling.csv").starts_with("hop,M,scale,onoff_ratio"));
    assert!(header(&all, "asymptotic_distance.csv").starts_with("M,r,onoff_ratio"));
    assert!(header(&all, "saddle_study.csv").starts_with("M,trials,monte_carlo"));
}

#[test]
fn distance_run_writes_one_csv_per_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let csvs = run(SMALL[2].1, dir.path(), 1);
    let names: Vec<&str> = csvs.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "ber_vs_distance_onoff.csv",
            "ber_vs_distance_waterfill-partial.csv",
            "ber_vs_distance_waterfill-statistical.csv",
            "ber_vs_distance_direct.csv"
        ]
    );
    // 2 relay counts x 2 distances
    assert!(csvs.iter().all(|(_, b)| b.lines().count() == 5));
    assert!(dir.path().join("plot_ber_vs_distance.py").is_file());
    assert!(dir.path().join("ber_vs_distance_config.toml").is_file());
}

#[test]
fn shard_count_never_changes_bytes() {
    for (kind, text) in [SMALL[1], SMALL[3], SMALL[5]] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert_eq!(run(text, a.path(), 1), run(text, b.path(), 4), "{kind}");
    }
}

#[test]
fn resolved_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    run(SMALL[0].1, dir.path(), 1);
    let written = std::fs::read_to_string(dir.path().join("convergence_config.toml")).unwrap();
    let again = ExperimentSpec::parse(&written).unwrap();
    assert_eq!(again, ExperimentSpec::parse(SMALL[0].1).unwrap());
    assert_eq!(again.kind, ExperimentKind::Convergence);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_af-relay"))
}

#[test]
fn cli_prints_summary_line() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.toml");
    std::fs::write(&spec, SMALL[3].1).unwrap();
    let out = cli()
        .args(["run", spec.to_str().unwrap(), "--seed", "9", "--shards", "2", "--frames-override", "200"])
        .arg("--out-dir")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let line = stdout.lines().last().unwrap();
    assert!(line.starts_with("kind=power_ratio_vs_distance seed=9 frames=200 elapsed_s="), "{line}");
    assert!(dir.path().join("o/power_ratio_vs_distance_onoff.csv").is_file());
}

#[test]
fn cli_print_config_does_not_run() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.toml");
    std::fs::write(&spec, "kind = \"bler_vs_snr\"\n").unwrap();
    let out = cli()
        .args(["run", spec.to_str().unwrap(), "--print-config", "--seed", "4"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed = ExperimentSpec::parse(&text).unwrap();
    assert_eq!(parsed.seed, 4);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn cli_reports_bad_spec_line() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.toml");
    std::fs::write(&spec, "kind = \"bler_vs_snr\"\n\n[sweep]\nsnr_db = [4, 2]\n").unwrap();
    let out = cli().args(["run", spec.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
}
