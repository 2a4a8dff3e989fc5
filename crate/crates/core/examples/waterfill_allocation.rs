//! Partial-CSIT waterfilling: candidate water levels and the chosen one.

use af_relay::objectives::{water_level_objective, PartialCsitObjective};
use af_relay::waterfill::{solve_waterfill, waterfill_m2_closed_form};

fn main() -> af_relay::Result<()> {
    let gamma_g = [1.0, 1.0, 1.0];
    let caps = [0.5, 1.0, 5.0];
    let obj = PartialCsitObjective::from_gains(&[1.0; 3], &gamma_g, 1.0)?;
    let r = solve_waterfill(&obj, &caps)?;

    println!("candidate  mu      J(mu)");
    for (mu, j) in r.candidates.levels.iter().zip(&r.candidates.objective_values) {
        println!("           {mu:<7.4} {j:.6}");
    }
    println!("mu* = {}", r.mu_star);
    print!("{}", r.to_csv(&gamma_g));
    println!("J just above mu*: {:.6}", water_level_objective(&obj, r.mu_star * 1.1, &caps)?);

    let two = waterfill_m2_closed_form([1.0, 1.0], [1.0, 3.0])?;
    println!("two-relay closed form: {:?}", two.powers());
    Ok(())
}
