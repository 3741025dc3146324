//! The observation sampler for `y_k = b_k theta_k + eps xi_k`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::signal::Signal;
use super::spectrum::OperatorSpectrum;

/// Draws `y_1..y_D` with i.i.d. standard Gaussian noise from a stream that
/// is a pure function of `seed`; identical inputs and seed give identical
/// output. `eps = 0` is the noiseless debug mode.
pub fn sample_observations(
    sig: &Signal,
    spec: &OperatorSpectrum,
    eps: f64,
    d: u64,
    seed: u64,
) -> Vec<f64> {
    assert!(d >= 1, "need at least one observation");
    assert!(
        (0.0..=1.0).contains(&eps),
        "noise level must be in [0, 1]; eps = 0 is the noiseless debug mode"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=d)
        .map(|k| {
            let xi: f64 = rng.sample(StandardNormal);
            spec.value(k) * sig.coordinate(k) + eps * xi
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_mode_returns_means() {
        let sig = Signal::finite_support(vec![1.0, 2.0, 3.0]);
        let spec = OperatorSpectrum::mildly_ill_posed(1.0).unwrap();
        let y = sample_observations(&sig, &spec, 0.0, 3, 99);
        assert_eq!(y, vec![1.0, 2.0 * 0.5, 3.0 / 3.0]);
    }

    #[test]
    fn same_seed_same_vector() {
        let sig = Signal::power_decay(1.0, 1.0).unwrap();
        let spec = OperatorSpectrum::Identity;
        let a = sample_observations(&sig, &spec, 0.3, 100, 7);
        let b = sample_observations(&sig, &spec, 0.3, 100, 7);
        assert_eq!(a, b);
        let c = sample_observations(&sig, &spec, 0.3, 100, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn null_second_moment_is_chi_square() {
        // zero signal, eps close to 1: mean of y_k^2/eps^2 ~ 1 with
        // var 2/n, so 4 standard errors is 4*sqrt(2/n)
        let n = 1_000_000u64;
        let eps = 1.0;
        let y = sample_observations(&Signal::zero(), &OperatorSpectrum::Identity, eps, n, 2024);
        let mean: f64 = y.iter().map(|v| v * v / (eps * eps)).sum::<f64>() / n as f64;
        let tol = 4.0 * (2.0 / n as f64).sqrt();
        assert!((mean - 1.0).abs() < tol, "mean {mean}");
    }
}
