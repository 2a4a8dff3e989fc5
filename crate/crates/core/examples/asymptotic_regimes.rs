//! Relays close to the transmitter use everything; relays close to the
//! receiver collapse to one (on-off) or equalize (waterfilling).

use af_relay::asymptotic::{distance_diagnostics, scaling_study, Hop};
use af_relay::sim::monte_carlo::{config_at_snr, effective_relay_count};
use af_relay::sim::{Scheme, SnrAxis};
use af_relay::{CsitMode, NetworkConfig};

fn main() -> af_relay::Result<()> {
    let base = NetworkConfig::symmetric(4, 4, 1.0, 1.0, 1.0, 1.0, 1.0, CsitMode::Perfect)?;
    let cfg = config_at_snr(&base, SnrAxis::NetworkTotal, 15.0);

    println!("r     on-off  partial  statistical  agree");
    for r in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let d = distance_diagnostics(&cfg, r, 4000, 1)?;
        println!(
            "{r:<5} {:<7.3} {:<8.3} {:<12.3} {:.3}",
            d.onoff_ratio, d.partial_ratio, d.statistical_ratio, d.agreement
        );
    }

    let counts = effective_relay_count(&cfg, Scheme::OnOff, &[0.05, 0.95], 4000, 2)?;
    println!("on-off effective relays at r = 0.05 / 0.95: {counts:?}");

    for hop in [Hop::First, Hop::Second] {
        let pts = scaling_study(&cfg, hop, &[1.0, 1e3, 1e6], 2000, 3)?;
        for p in pts {
            println!(
                "{hop:?} x{:<8} all-on {:.3}  single {:.3}  waterfill capped {:.2}",
                p.scale, p.all_on_fraction, p.single_fraction, p.waterfill_capped
            );
        }
    }
    Ok(())
}
