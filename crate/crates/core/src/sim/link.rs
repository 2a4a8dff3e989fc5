//! One block through the two-hop channel and its maximum-likelihood decision.

use nalgebra::DVector;
use rand::Rng;

use crate::model::{ChannelRealization, PowerAllocation};
use crate::rng::complex_gaussian;
use crate::sim::codebook::LdCodebook;
use crate::{Error, Result, C64};

/// Everything that crosses the air in one block.
#[derive(Debug, Clone)]
pub struct FrameSignals {
    /// Relay transmit vectors `x_i = q_i A_i y_i`.
    pub relay_tx: Vec<DVector<C64>>,
    /// Overall receiver noise `v = sum_i q_i g_i A_i n_i + w`.
    pub noise: DVector<C64>,
    /// `r = sum_i g_i x_i + w`.
    pub received: DVector<C64>,
}

/// `sqrt(p_s) q_i f_i`: the per-relay gain applied to column `i` of the
/// codeword at the receiver.
pub fn effective_channel(chan: &ChannelRealization, alloc: &PowerAllocation, p_s: f64) -> Vec<C64> {
    let sp = p_s.sqrt();
    chan.f()
        .iter()
        .zip(alloc.powers())
        .map(|(f, p)| f * (sp * p.sqrt()))
        .collect()
}

fn check_shapes(code: &LdCodebook, chan: &ChannelRealization, alloc: &PowerAllocation) -> Result<()> {
    let m = code.relays();
    if chan.relays() != m || alloc.relays() != m {
        return Err(Error::Contract(format!(
            "code has {m} relays, channel {}, allocation {}",
            chan.relays(),
            alloc.relays()
        )));
    }
    Ok(())
}

/// Simulate one block: broadcast `s`, amplify-and-forward at every relay
/// (`q_i = sqrt(p_i)`), add receiver noise.
pub fn transmit_frame_signals<R: Rng + ?Sized>(
    code: &LdCodebook,
    chan: &ChannelRealization,
    alloc: &PowerAllocation,
    p_s: f64,
    n0: f64,
    s: &DVector<C64>,
    rng: &mut R,
) -> Result<FrameSignals> {
    check_shapes(code, chan, alloc)?;
    let t = code.block_len();
    if s.len() != t {
        return Err(Error::Contract(format!("symbol vector length {} != T = {t}", s.len())));
    }
    let sp = p_s.sqrt();
    let mut relay_tx = Vec::with_capacity(code.relays());
    let mut noise = DVector::<C64>::zeros(t);
    let mut received = DVector::<C64>::zeros(t);
    for (i, a) in code.dispersion().iter().enumerate() {
        let q = alloc.powers()[i].sqrt();
        let h = chan.h()[i];
        let g = chan.g()[i];
        let relay_noise = DVector::from_fn(t, |_, _| complex_gaussian(rng, n0));
        let y = s * (h * sp) + &relay_noise;
        let x = (a * y) * C64::new(q, 0.0);
        received.axpy(g, &x, C64::new(1.0, 0.0));
        noise.axpy(g * q, &(a * relay_noise), C64::new(1.0, 0.0));
        relay_tx.push(x);
    }
    let w = DVector::from_fn(t, |_, _| complex_gaussian(rng, n0));
    received += &w;
    noise += &w;
    Ok(FrameSignals {
        relay_tx,
        noise,
        received,
    })
}

/// Received block `r = sqrt(p_s) S Q f + v`.
pub fn transmit_frame<R: Rng + ?Sized>(
    code: &LdCodebook,
    chan: &ChannelRealization,
    alloc: &PowerAllocation,
    p_s: f64,
    n0: f64,
    s: &DVector<C64>,
    rng: &mut R,
) -> Result<DVector<C64>> {
    Ok(transmit_frame_signals(code, chan, alloc, p_s, n0, s, rng)?.received)
}

/// Exhaustive ML: index of the codeword minimizing `|r - sqrt(p_s) S Q f|^2`,
/// lowest index on ties.
pub fn ml_decode(
    code: &LdCodebook,
    chan: &ChannelRealization,
    alloc: &PowerAllocation,
    p_s: f64,
    r: &DVector<C64>,
) -> Result<usize> {
    check_shapes(code, chan, alloc)?;
    if r.len() != code.block_len() {
        return Err(Error::Contract("received vector has the wrong length".into()));
    }
    let c = DVector::from_vec(effective_channel(chan, alloc, p_s));
    Ok(decode_with_gains(code, &c, r))
}

pub(crate) fn decode_with_gains(code: &LdCodebook, c: &DVector<C64>, r: &DVector<C64>) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (k, s) in code.codewords().iter().enumerate() {
        let y = s * c;
        let dist: f64 = r.iter().zip(y.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
        if dist < best_dist {
            best_dist = dist;
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::sim::codebook::generate_codebook;
    use nalgebra::DMatrix;

    fn one(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn identity_chain_without_noise() {
        let code = LdCodebook::from_dispersion(vec![DMatrix::from_element(1, 1, one(1.0))]).unwrap();
        let chan = ChannelRealization::new(vec![one(1.0)], vec![one(1.0)]).unwrap();
        let alloc = PowerAllocation::new(vec![1.0], vec![1.0]).unwrap();
        let mut rng = stream_rng(0, 0);
        let r = transmit_frame(&code, &chan, &alloc, 1.0, 0.0, &code.symbols(0), &mut rng).unwrap();
        assert_eq!(r[0], one(1.0));
        assert_eq!(ml_decode(&code, &chan, &alloc, 1.0, &r).unwrap(), 0);
    }

    #[test]
    fn noiseless_part_is_code_times_channel() {
        let code = generate_codebook(3, 8).unwrap();
        let chan = ChannelRealization::new(
            vec![C64::new(0.3, 1.0), C64::new(-0.7, 0.2), C64::new(1.1, -0.4)],
            vec![C64::new(0.9, 0.1), C64::new(0.5, -0.5), C64::new(-0.2, 0.8)],
        )
        .unwrap();
        let alloc = PowerAllocation::new(vec![0.2, 0.5, 0.9], vec![1.0; 3]).unwrap();
        let mut rng = stream_rng(1, 0);
        for k in 0..8 {
            let sig =
                transmit_frame_signals(&code, &chan, &alloc, 2.0, 0.0, &code.symbols(k), &mut rng)
                    .unwrap();
            let c = DVector::from_vec(effective_channel(&chan, &alloc, 2.0));
            let expected = &code.codewords()[k] * c;
            assert!((&sig.received - expected).norm() < 1e-12);
            assert_eq!(ml_decode(&code, &chan, &alloc, 2.0, &sig.received).unwrap(), k);
        }
    }

    #[test]
    fn silent_relays_leave_only_receiver_noise() {
        let code = generate_codebook(2, 3).unwrap();
        let chan = ChannelRealization::new(vec![one(1.0); 2], vec![one(1.0); 2]).unwrap();
        let alloc = PowerAllocation::silent(&[1.0, 1.0]).unwrap();
        let mut a = stream_rng(9, 0);
        let sig = transmit_frame_signals(&code, &chan, &alloc, 1.0, 1.0, &code.symbols(1), &mut a).unwrap();
        assert_eq!(sig.received, sig.noise);
        assert!(sig.relay_tx.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn scalar_ml_is_sign_detection() {
        let a = C64::new(0.6, 0.8);
        let code = LdCodebook::from_dispersion(vec![DMatrix::from_element(1, 1, a)]).unwrap();
        let chan = ChannelRealization::new(vec![C64::new(0.4, -1.2)], vec![C64::new(-0.3, 0.5)]).unwrap();
        let alloc = PowerAllocation::new(vec![0.7], vec![1.0]).unwrap();
        let gain = effective_channel(&chan, &alloc, 1.5)[0] * a;
        let mut rng = stream_rng(4, 0);
        for _ in 0..200 {
            let r = DVector::from_element(1, complex_gaussian(&mut rng, 4.0));
            let by_sign = if (gain.conj() * r[0]).re >= 0.0 { 0 } else { 1 };
            assert_eq!(ml_decode(&code, &chan, &alloc, 1.5, &r).unwrap(), by_sign);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let code = generate_codebook(2, 3).unwrap();
        let chan = ChannelRealization::new(vec![one(1.0)], vec![one(1.0)]).unwrap();
        let alloc = PowerAllocation::silent(&[1.0]).unwrap();
        let r = DVector::from_element(2, one(0.0));
        assert!(ml_decode(&code, &chan, &alloc, 1.0, &r).is_err());
    }
}
