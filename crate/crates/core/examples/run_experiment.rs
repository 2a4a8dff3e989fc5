//! Run an experiment spec from code. Pass a spec path (see `examples/specs`)
//! or run the built-in convergence study.

use af_relay::experiment::{run_experiment, ExperimentSpec, RunOptions};

const DEFAULT: &str = r#"
kind = "convergence"
seed = 1
trials = 2000
relays = [2, 4, 8]
"#;

fn main() -> af_relay::Result<()> {
    let spec = match std::env::args().nth(1) {
        Some(path) => ExperimentSpec::from_file(path.as_ref())?,
        None => ExperimentSpec::parse(DEFAULT)?,
    };
    let out = std::env::temp_dir().join("af-relay-example");
    let summary = run_experiment(
        &spec,
        &RunOptions {
            out_dir: Some(out),
            shards: 2,
        },
    )?;
    println!("{}", summary.line());
    for f in &summary.csv_files {
        println!("{}", f.display());
        print!("{}", std::fs::read_to_string(f)?);
    }
    Ok(())
}
