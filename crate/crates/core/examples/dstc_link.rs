//! One block through the relay network, then a short error-rate sweep.

use af_relay::model::{amplifier_caps, sample_channels};
use af_relay::objectives::{eta_from_code, PerfectCsitObjective};
use af_relay::onoff::solve_onoff;
use af_relay::rng::stream_rng;
use af_relay::sim::{generate_codebook, ml_decode, run_monte_carlo, transmit_frame, Scheme, SimOptions};
use af_relay::{CsitMode, NetworkConfig};

fn main() -> af_relay::Result<()> {
    let code = generate_codebook(2, 1)?;
    println!("lambda_min = {:.4}", code.lambda_min());

    let cfg = NetworkConfig::symmetric(2, 2, 100.0, 100.0, 1.0, 1.0, 1.0, CsitMode::Perfect)?;
    let chan = sample_channels(&cfg, 3)?;
    let caps = amplifier_caps(&cfg, Some(chan.h()))?;
    let eta = eta_from_code(code.lambda_min(), cfg.p_s, cfg.n0);
    let (p, _) = solve_onoff(&PerfectCsitObjective::from_channel(&chan, eta)?, &caps, None)?;

    let mut rng = stream_rng(5, 0);
    let sent = 2;
    let r = transmit_frame(&code, &chan, &p, cfg.p_s, cfg.n0, &code.symbols(sent), &mut rng)?;
    println!("sent codeword {sent}, decoded {}", ml_decode(&code, &chan, &p, cfg.p_s, &r)?);

    let grid = [0.0, 5.0, 10.0, 15.0];
    for (scheme, mode) in [(Scheme::OnOff, CsitMode::Perfect), (Scheme::MaxPower, CsitMode::Perfect)] {
        let res = run_monte_carlo(&cfg.with_csit(mode), scheme, &grid, &SimOptions::new(20_000, 9))?;
        print!("{}", res.to_csv());
    }
    Ok(())
}
