//! Binary-input AWGN channel with BPSK, SNR conversions and the BEEC
//! reliability of extrinsic ternary messages.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Channel operating point. `mu_ch` and `sigma_ch` describe the channel LLR
/// `L_ch ~ N(mu_ch, sigma_ch^2)` conditioned on `X = +1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub ebn0_db: f64,
    pub rate: f64,
    pub sigma: f64,
    pub mu_ch: f64,
    pub sigma_ch: f64,
}

impl ChannelParams {
    pub fn from_ebn0(ebn0_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rate {rate} outside (0,1)"
            )));
        }
        let ebn0 = 10f64.powf(ebn0_db / 10.0);
        let mu_ch = 4.0 * rate * ebn0;
        Ok(Self {
            ebn0_db,
            rate,
            sigma: (1.0 / (2.0 * rate * ebn0)).sqrt(),
            mu_ch,
            sigma_ch: (2.0 * mu_ch).sqrt(),
        })
    }

    pub fn from_sigma(sigma: f64, rate: f64) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma {sigma} must be positive"
            )));
        }
        Self::from_ebn0(ebn0_db_from_sigma(sigma, rate), rate)
    }

    /// Noise variance `sigma^2`.
    pub fn noise_variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// `channel_from_ebn0`.
pub fn channel_from_ebn0(ebn0_db: f64, rate: f64) -> Result<ChannelParams> {
    ChannelParams::from_ebn0(ebn0_db, rate)
}

/// Inverse of the `sigma` conversion: `Eb/N0 = 1 / (2 R sigma^2)` in dB.
pub fn ebn0_db_from_sigma(sigma: f64, rate: f64) -> f64 {
    10.0 * (1.0 / (2.0 * rate * sigma * sigma)).log10()
}

/// Channel LLR `2y / sigma^2`.
#[inline]
pub fn llr_from_observation(y: f64, sigma: f64) -> f64 {
    2.0 * y / (sigma * sigma)
}

/// `n` channel outputs for the all-`+1` transmitted sequence.
pub fn sample_awgn_allzero<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; n];
    fill_awgn_allzero(&mut out, sigma, rng);
    out
}

/// Writes `1 + N(0, sigma^2)` samples into `out`.
pub fn fill_awgn_allzero<R: Rng + ?Sized>(out: &mut [f64], sigma: f64, rng: &mut R) {
    if sigma == 0.0 {
        out.fill(1.0);
        return;
    }
    let normal = Normal::new(1.0, sigma).expect("sigma is finite and non-negative");
    for y in out.iter_mut() {
        *y = normal.sample(rng);
    }
}

/// Deterministic RNG substream derived from a master seed and a stream
/// index (thread, batch, ...).
pub fn substream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Reliability `D = ln((1 - theta - epsilon) / theta)` of a binary
/// error-and-erasure channel with error probability `theta` and erasure
/// probability `epsilon`.
pub fn beec_reliability(theta: f64, epsilon: f64) -> Result<f64> {
    if theta == 0.0 {
        return Err(Error::InvalidParameter(
            "zero error probability gives infinite reliability".into(),
        ));
    }
    if theta < 0.0 || epsilon < 0.0 || theta + epsilon >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "invalid BEEC parameters theta={theta}, epsilon={epsilon}"
        )));
    }
    Ok(((1.0 - theta - epsilon) / theta).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn channel_mean_at_two_db() {
        let c = channel_from_ebn0(2.0, 0.75).unwrap();
        assert_relative_eq!(c.mu_ch, 4.0 * 0.75 * 10f64.powf(0.2), epsilon = 1e-14);
        assert_relative_eq!(c.mu_ch, 4.754679577, epsilon = 1e-9);
        assert_relative_eq!(c.sigma_ch * c.sigma_ch, 2.0 * c.mu_ch, epsilon = 1e-12);
    }

    #[test]
    fn channel_at_zero_db() {
        let c = channel_from_ebn0(0.0, 0.5).unwrap();
        assert_relative_eq!(c.mu_ch, 2.0, epsilon = 1e-15);
        assert_relative_eq!(c.sigma_ch, 2.0, epsilon = 1e-15);
        assert_relative_eq!(c.sigma, 1.0, epsilon = 1e-15);
        // mu_ch = 2 / sigma^2 is the LLR of y = 1
        assert_relative_eq!(llr_from_observation(1.0, c.sigma), c.mu_ch, epsilon = 1e-15);
    }

    #[test]
    fn invalid_rate() {
        assert!(channel_from_ebn0(1.0, 1.0).is_err());
        assert!(channel_from_ebn0(1.0, 0.0).is_err());
    }

    #[test]
    fn llr_examples() {
        assert_eq!(llr_from_observation(0.0, 0.7), 0.0);
        let s = 0.8f64;
        assert_relative_eq!(llr_from_observation(s * s / 2.0, s), 1.0, epsilon = 1e-15);
        assert_eq!(llr_from_observation(1.0, 1.0), 2.0);
    }

    #[test]
    fn noiseless_samples() {
        let mut rng = substream(1, 0);
        assert!(sample_awgn_allzero(16, 0.0, &mut rng)
            .iter()
            .all(|&y| y == 1.0));
    }

    #[test]
    fn sample_mean_concentrates() {
        let sigma = 0.9;
        let mut rng = substream(42, 3);
        let ys = sample_awgn_allzero(1_000_000, sigma, &mut rng);
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        assert!((mean - 1.0).abs() < 4.0 * sigma / 1e3, "mean {mean}");
    }

    #[test]
    fn same_seed_same_samples() {
        let a = sample_awgn_allzero(100, 0.5, &mut substream(7, 2));
        let b = sample_awgn_allzero(100, 0.5, &mut substream(7, 2));
        let c = sample_awgn_allzero(100, 0.5, &mut substream(7, 3));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn beec_examples() {
        assert_relative_eq!(
            beec_reliability(0.1, 0.2).unwrap(),
            7f64.ln(),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            beec_reliability(0.1, 0.2).unwrap(),
            1.945910149,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            beec_reliability(0.25, 0.0).unwrap(),
            3f64.ln(),
            epsilon = 1e-14
        );
        let eps = 0.3;
        assert_relative_eq!(
            beec_reliability((1.0 - eps) / 2.0, eps).unwrap(),
            0.0,
            epsilon = 1e-14
        );
        assert!(beec_reliability(0.0, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn llr_is_linear_and_odd(y in -10.0f64..10.0, z in -10.0f64..10.0, s in 0.1f64..3.0) {
            prop_assert!((llr_from_observation(-y, s) + llr_from_observation(y, s)).abs() < 1e-12);
            let lhs = llr_from_observation(y + z, s);
            let rhs = llr_from_observation(y, s) + llr_from_observation(z, s);
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn ebn0_round_trip(db in -5.0f64..15.0, rate in 0.05f64..0.95) {
            let c = channel_from_ebn0(db, rate).unwrap();
            prop_assert!((ebn0_db_from_sigma(c.sigma, rate) - db).abs() < 1e-12);
        }

        #[test]
        fn beec_decreasing(theta in 0.01f64..0.3, eps in 0.0f64..0.3, d in 0.001f64..0.05) {
            let base = beec_reliability(theta, eps).unwrap();
            prop_assert!(beec_reliability(theta + d, eps).unwrap() < base);
            prop_assert!(beec_reliability(theta, eps + d).unwrap() < base);
        }
    }
}
