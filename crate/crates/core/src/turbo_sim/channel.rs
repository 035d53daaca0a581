//! Antipodal Gaussian channel and hard decisions.
//!
//! Bit 0 is sent as `+1`, bit 1 as `-1`.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use super::SimError;
use crate::seed;

#[inline]
pub fn antipodal(bit: u8) -> f64 {
    1.0 - 2.0 * (bit & 1) as f64
}

/// Adds white Gaussian noise of standard deviation `sigma` to the antipodal
/// image of `bits`, reproducibly from `seed`.
pub fn channel_awgn(bits: &[u8], sigma: f64, seed: u64) -> Result<Vec<f64>, SimError> {
    let mut rng = seed::rng(seed);
    channel_awgn_with(bits, sigma, &mut rng)
}

pub fn channel_awgn_with<R: Rng + ?Sized>(bits: &[u8], sigma: f64, rng: &mut R) -> Result<Vec<f64>, SimError> {
    check_sigma(sigma)?;
    Ok(bits
        .iter()
        .map(|&b| {
            let n: f64 = rng.sample(StandardNormal);
            antipodal(b) + sigma * n
        })
        .collect())
}

pub(crate) fn check_sigma(sigma: f64) -> Result<(), SimError> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(SimError::InvalidSigma(sigma))
    }
}

/// Sign decision: negative values decide 1, everything else 0.
#[inline]
pub fn hard_bit(soft: f64) -> u8 {
    (soft < 0.0) as u8
}

pub fn hard_decide(soft: &[f64]) -> Vec<u8> {
    soft.iter().map(|&v| hard_bit(v)).collect()
}

/// Crossover probability of the hard-decided channel, `P[N(0,1) > 1/sigma]`.
pub fn tau_from_sigma(sigma: f64) -> Result<f64, SimError> {
    check_sigma(sigma)?;
    Ok(0.5 * erfc(1.0 / (sigma * std::f64::consts::SQRT_2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn empirical_rate(sigma: f64, n: usize, seed: u64) -> f64 {
        let bits: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let soft = channel_awgn(&bits, sigma, seed).unwrap();
        let errs = hard_decide(&soft).iter().zip(&bits).filter(|(a, b)| a != b).count();
        errs as f64 / n as f64
    }

    #[test]
    fn tau_values() {
        assert_abs_diff_eq!(tau_from_sigma(0.43).unwrap(), 0.0100, epsilon = 2e-4);
        assert_abs_diff_eq!(tau_from_sigma(1.0).unwrap(), 0.1587, epsilon = 2e-4);
        assert!(tau_from_sigma(0.0).is_err());
        assert!(tau_from_sigma(-1.0).is_err());
    }

    #[test]
    fn sign_rule() {
        assert_eq!(hard_decide(&[3.2, -0.1, 0.0, -7.0]), vec![0, 1, 0, 1]);
    }

    #[test]
    fn vanishing_noise_is_exact() {
        let bits: Vec<u8> = (0..5000).map(|i| ((i * 7) % 3 == 0) as u8).collect();
        let soft = channel_awgn(&bits, 1e-6, 3).unwrap();
        assert_eq!(hard_decide(&soft), bits);
    }

    #[test]
    fn crossover_within_three_standard_errors() {
        let n = 1_000_000;
        for (sigma, seed) in [(0.43, 1u64), (1.0, 2)] {
            let tau = tau_from_sigma(sigma).unwrap();
            let se = (tau * (1.0 - tau) / n as f64).sqrt();
            let rate = empirical_rate(sigma, n, seed);
            assert!((rate - tau).abs() < 3.0 * se, "sigma {sigma}: {rate} vs {tau}");
        }
    }

    #[test]
    fn reproducible_from_seed() {
        let bits = [0u8, 1, 1, 0, 1];
        assert_eq!(channel_awgn(&bits, 0.8, 9).unwrap(), channel_awgn(&bits, 0.8, 9).unwrap());
        assert!(channel_awgn(&bits, 0.0, 9).is_err());
    }
}
