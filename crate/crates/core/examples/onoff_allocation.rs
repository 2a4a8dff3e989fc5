//! Perfect-CSIT allocation: the on-off gradient algorithm, its trace, and
//! the exhaustive check.

use af_relay::model::{amplifier_caps, sample_channels};
use af_relay::objectives::{f0_value, PerfectCsitObjective};
use af_relay::onoff::{onoff_m2_closed_form, solve_onoff, vertex_enumeration_oracle};
use af_relay::{CsitMode, NetworkConfig};

fn main() -> af_relay::Result<()> {
    let cfg = NetworkConfig::symmetric(8, 8, 10.0, 10.0, 1.0, 1.0, 1.0, CsitMode::Perfect)?;
    let chan = sample_channels(&cfg, 11)?;
    let caps = amplifier_caps(&cfg, Some(chan.h()))?;
    let obj = PerfectCsitObjective::from_channel(&chan, 1.0)?;

    let (p, trace) = solve_onoff(&obj, &caps, None)?;
    print!("{}", trace.to_csv());
    println!("feedback bits: {}  (converged after {} updates)", p.on_mask(), trace.iterations);

    let best = vertex_enumeration_oracle(&obj, &caps)?;
    println!("f0 on-off {:.6}, f0 optimum {:.6}", f0_value(&obj, &p), f0_value(&obj, &best));

    let two = onoff_m2_closed_form([4.0, 0.01], [1.0, 1.0], 10.0, 10.0, 1.0)?;
    println!("two-relay closed form for |h|^2 = (4, 0.01): {:?}", two.powers());
    Ok(())
}
