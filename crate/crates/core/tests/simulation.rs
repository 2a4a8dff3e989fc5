use af_relay::model::{amplifier_caps, overall_noise_variance, sample_channels, CsitMode, NetworkConfig};
use af_relay::rng::stream_rng;
use af_relay::sim::{
    effective_relay_count, generate_codebook, run_monte_carlo, transmit_frame_signals, Scheme,
    SimOptions, SnrAxis,
};
use af_relay::PowerAllocation;
use nalgebra::DMatrix;

fn cfg(m: usize, p: f64, mode: CsitMode) -> NetworkConfig {
    NetworkConfig::symmetric(m, m, p, p, 1.0, 1.0, 1.0, mode).unwrap()
}

#[test]
fn received_noise_is_white_with_the_predicted_variance() {
    let c = cfg(4, 3.0, CsitMode::Perfect);
    let code = generate_codebook(4, 7).unwrap();
    let chan = sample_channels(&c, 11).unwrap();
    let caps = amplifier_caps(&c, Some(chan.h())).unwrap();
    let alloc = PowerAllocation::new(vec![caps[0], 0.5 * caps[1], caps[2], 0.0], caps).unwrap();
    let sigma2 = overall_noise_variance(&alloc, chan.g(), c.n0).unwrap();

    let frames = 100_000;
    let mut cov = DMatrix::<af_relay::C64>::zeros(4, 4);
    let mut tx_power = vec![0.0; 4];
    let mut rng = stream_rng(5, 0);
    for k in 0..frames {
        let s = code.symbols(k % 16);
        let sig = transmit_frame_signals(&code, &chan, &alloc, c.p_s, c.n0, &s, &mut rng).unwrap();
        cov += &sig.noise * sig.noise.adjoint();
        for (acc, x) in tx_power.iter_mut().zip(&sig.relay_tx) {
            *acc += x.norm_squared() / 4.0;
        }
    }
    cov /= af_relay::C64::new(frames as f64, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            let v = cov[(i, j)];
            if i == j {
                assert!((v.re - sigma2).abs() <= 0.02 * sigma2, "diag {} vs {sigma2}", v.re);
            } else {
                assert!(v.norm() <= 0.02 * sigma2, "off-diagonal {v}");
            }
        }
    }
    for (i, acc) in tx_power.iter().enumerate() {
        assert!(acc / frames as f64 <= c.p_r * 1.02, "relay {i} power {}", acc / frames as f64);
    }
}

#[test]
fn error_rates_fall_with_snr() {
    let c = cfg(2, 1.0, CsitMode::Perfect);
    let r = run_monte_carlo(&c, Scheme::MaxPower, &[0.0, 10.0, 20.0], &SimOptions::new(20_000, 3)).unwrap();
    let ber: Vec<f64> = r.points.iter().map(|p| p.ber()).collect();
    assert!(ber[0] > ber[1] && ber[1] > ber[2], "{ber:?}");
}

#[test]
fn high_snr_onoff_is_nearly_error_free() {
    let c = cfg(2, 1.0, CsitMode::Perfect);
    let r = run_monte_carlo(&c, Scheme::OnOff, &[40.0], &SimOptions::new(20_000, 9)).unwrap();
    assert!(r.points[0].bler() < 1e-3, "{}", r.points[0].bler());
}

#[test]
fn scheme_ordering_at_high_snr() {
    let grid = [15.0, 20.0];
    let opts = SimOptions::new(50_000, 21);
    let onoff = run_monte_carlo(&cfg(2, 1.0, CsitMode::Perfect), Scheme::OnOff, &grid, &opts).unwrap();
    let max = run_monte_carlo(&cfg(2, 1.0, CsitMode::Perfect), Scheme::MaxPower, &grid, &opts).unwrap();
    let stat = run_monte_carlo(&cfg(2, 1.0, CsitMode::Statistical), Scheme::Waterfill, &grid, &opts).unwrap();
    for k in 0..grid.len() {
        let (a, b, s) = (onoff.points[k].bler(), max.points[k].bler(), stat.points[k].bler());
        assert!(a < b, "onoff {a} vs maxpower {b}");
        assert!(a <= s, "onoff {a} vs statistical {s}");
    }
}

#[test]
fn network_axis_splits_power() {
    let c = cfg(2, 1.0, CsitMode::Perfect);
    let mut opts = SimOptions::new(5_000, 2);
    opts.axis = SnrAxis::NetworkTotal;
    let r = run_monte_carlo(&c, Scheme::OnOff, &[10.0, 30.0], &opts).unwrap();
    assert!(r.points[1].ber() < r.points[0].ber());
    assert!(r.to_csv().starts_with("scheme,snr_db,frames"));
}

#[test]
fn codebook_is_full_rank_for_four_relays() {
    let code = generate_codebook(4, 1).unwrap();
    assert!(code.lambda_min() > 1e-9);
    assert!(code.unitarity_residual() < 1e-12);
    assert_eq!(code.codewords().len(), 16);
}

#[test]
fn effective_count_at_the_extremes() {
    let base = cfg(4, 15.0, CsitMode::Perfect);
    let near = effective_relay_count(&base, Scheme::OnOff, &[0.05, 0.95], 4_000, 4).unwrap();
    assert!((near[0] - 4.0).abs() <= 0.05 * 4.0, "{near:?}");
    assert!((near[1] - 1.0).abs() <= 0.2, "{near:?}");
    let partial = base.with_csit(CsitMode::Partial);
    let wf = effective_relay_count(&partial, Scheme::Waterfill, &[0.05], 4_000, 4).unwrap();
    assert!((wf[0] - 4.0).abs() <= 0.05 * 4.0, "{wf:?}");
}

#[test]
fn shards_do_not_change_results() {
    let c = cfg(3, 1.0, CsitMode::Partial);
    let mut a = SimOptions::new(3_000, 8);
    let mut b = a;
    a.shards = 1;
    b.shards = 5;
    let ra = run_monte_carlo(&c, Scheme::Waterfill, &[5.0, 10.0], &a).unwrap();
    let rb = run_monte_carlo(&c, Scheme::Waterfill, &[5.0, 10.0], &b).unwrap();
    assert_eq!(ra.points, rb.points);
}
