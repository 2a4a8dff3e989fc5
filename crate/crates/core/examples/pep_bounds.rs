//! Error-probability bounds under the three CSIT regimes, and how well the
//! saddle-point approximation tracks Monte Carlo.

use af_relay::model::PowerAllocation;
use af_relay::objectives::{
    exp_integral_e1, pep_bound_partial, pep_bound_statistical_asymptotic,
    pep_bound_statistical_exact, saddle_point_error, PartialCsitObjective,
    StatisticalCsitObjective,
};
use af_relay::C64;

fn main() -> af_relay::Result<()> {
    println!("E1(1) = {:.15}", exp_integral_e1(1.0)?);

    let caps = [5.0; 4];
    let p = PowerAllocation::full(&caps)?;
    let partial = PartialCsitObjective::from_gains(&[1.0; 4], &[1.0; 4], 20.0)?;
    println!("partial-CSIT bound: {:.4e}", pep_bound_partial(&partial, &p)?);

    let stat = StatisticalCsitObjective::from_variances(&[1.0; 4], &[1.0; 4], 20.0)?;
    let asym = pep_bound_statistical_asymptotic(&stat, &p)?;
    println!(
        "statistical bound: exact {:.4e}, high-SNR {:.4e} (valid: {})",
        pep_bound_statistical_exact(&stat, &p)?,
        asym.value,
        asym.valid
    );

    for m in [2, 4, 8, 16] {
        let h = vec![C64::new(1.0, 0.0); m];
        let e = saddle_point_error(&h, &vec![1.0; m], &vec![5.0; m], 1.0, 100_000, 7)?;
        println!(
            "M = {m:>2}: relative error {:.4} +- {:.4}",
            e.relative_error, e.relative_error_stderr
        );
    }
    Ok(())
}
