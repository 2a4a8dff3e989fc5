//! Draw a fading realization and look at the quantities the allocators see.

use af_relay::model::{amplifier_caps, overall_noise_variance, sample_channels, PowerAllocation};
use af_relay::{CsitMode, NetworkConfig};

fn main() -> af_relay::Result<()> {
    let cfg = NetworkConfig::symmetric(4, 4, 10.0, 10.0, 1.0, 1.0, 1.0, CsitMode::Perfect)?;
    let chan = sample_channels(&cfg, 2024)?;
    let caps = amplifier_caps(&cfg, Some(chan.h()))?;

    println!("relay  |h|^2     |g|^2     cap P_i");
    for i in 0..cfg.relays {
        println!(
            "{:>5}  {:<8.4}  {:<8.4}  {:.4}",
            i + 1,
            chan.h_gains()[i],
            chan.g_gains()[i],
            caps[i]
        );
    }

    let full = PowerAllocation::full(&caps)?;
    let sigma = overall_noise_variance(&full, chan.g(), cfg.n0)?;
    println!("receiver noise variance, all relays at cap: {sigma:.4}");

    let long = cfg.with_csit(CsitMode::Statistical);
    println!("long-term caps: {:?}", amplifier_caps(&long, None)?);
    Ok(())
}
