//! Secret and noise samplers shared by the schemes.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::modmath::{Modulus, Residue};

/// Standard deviation of the rounded-Gaussian error distribution.
pub const DEFAULT_SIGMA: f64 = 3.2;

/// Ternary vector: 0 with probability 1/2, ±1 with probability 1/4 each.
pub fn ternary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<i64> {
    (0..n)
        .map(|_| match rng.random_range(0..4u8) {
            0 => 1,
            1 => -1,
            _ => 0,
        })
        .collect()
}

/// Uniform binary vector.
pub fn binary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(0..2i64)).collect()
}

/// Rounded Gaussian with standard deviation `sigma`; `sigma = 0` yields zeros.
pub fn gaussian<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> Vec<i64> {
    if sigma <= 0.0 {
        return vec![0; n];
    }
    let dist = Normal::new(0.0, sigma).expect("finite sigma");
    (0..n).map(|_| dist.sample(rng).round() as i64).collect()
}

/// A single rounded-Gaussian sample.
pub fn gaussian_one<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> i64 {
    gaussian(1, sigma, rng)[0]
}

pub fn uniform<R: Rng + ?Sized>(n: usize, m: &Modulus, rng: &mut R) -> Vec<Residue> {
    (0..n).map(|_| rng.random_range(0..m.value())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn ternary_density_is_half() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = ternary(1 << 16, &mut rng);
        let nz = s.iter().filter(|&&x| x != 0).count() as f64 / s.len() as f64;
        assert!((nz - 0.5).abs() < 0.01, "{nz}");
        assert!(s.iter().all(|&x| (-1..=1).contains(&x)));
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let e = gaussian(1 << 16, DEFAULT_SIGMA, &mut rng);
        let mean = e.iter().sum::<i64>() as f64 / e.len() as f64;
        let var = e.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / e.len() as f64;
        assert!(mean.abs() < 0.05);
        // rounding adds 1/12 to the variance
        assert!((var.sqrt() - (DEFAULT_SIGMA.powi(2) + 1.0 / 12.0).sqrt()).abs() < 0.05);
        assert_eq!(gaussian(4, 0.0, &mut rng), vec![0; 4]);
    }
}
