//! Action distributions for discrete and continuous policies.

use rand::Rng;
use rand_distr::StandardNormal;

use super::NnError;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Debug, PartialEq)]
pub struct CategoricalDist {
    probabilities: Vec<f64>,
}

impl CategoricalDist {
    pub fn new(probabilities: Vec<f64>) -> Result<Self, NnError> {
        let sum: f64 = probabilities.iter().sum();
        if probabilities.is_empty()
            || probabilities.iter().any(|p| !p.is_finite() || *p < 0.0)
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(NnError::InvalidDistribution(format!(
                "not a probability simplex: {probabilities:?}"
            )));
        }
        Ok(CategoricalDist { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Inverse-CDF sampling from one uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // rounding left u >= acc; take the last action with positive mass
        self.probabilities
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(self.probabilities.len() - 1)
    }

    pub fn log_prob(&self, action: usize) -> Result<f64, NnError> {
        match self.probabilities.get(action) {
            None => Err(NnError::InvalidAction {
                action,
                n: self.probabilities.len(),
            }),
            Some(&p) if p <= 0.0 => Err(NnError::ZeroProbability(action)),
            Some(&p) => Ok(p.ln()),
        }
    }

    pub fn entropy(&self) -> f64 {
        -self
            .probabilities
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }
}

/// Diagonal Gaussian with a state-independent log standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagGaussianDist {
    mean: Vec<f64>,
    log_std: Vec<f64>,
}

impl DiagGaussianDist {
    pub fn new(mean: Vec<f64>, log_std: Vec<f64>) -> Result<Self, NnError> {
        if mean.len() != log_std.len() {
            return Err(NnError::DimensionMismatch {
                expected: mean.len(),
                actual: log_std.len(),
            });
        }
        if mean.iter().chain(&log_std).any(|v| !v.is_finite()) {
            return Err(NnError::InvalidDistribution(
                "non-finite gaussian parameters".into(),
            ));
        }
        Ok(DiagGaussianDist { mean, log_std })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.log_std)
            .map(|(m, ls)| {
                let z: f64 = rng.sample(StandardNormal);
                m + ls.exp() * z
            })
            .collect()
    }

    pub fn log_prob(&self, x: &[f64]) -> Result<f64, NnError> {
        if x.len() != self.mean.len() {
            return Err(NnError::DimensionMismatch {
                expected: self.mean.len(),
                actual: x.len(),
            });
        }
        Ok(gaussian_log_density(x, &self.mean, &self.log_std))
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| 0.5 + 0.5 * LN_2PI + ls).sum()
    }
}

/// Sum of per-component normal log-densities.
pub fn gaussian_log_density(x: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((x, m), ls)| {
            let z = (x - m) / ls.exp();
            -0.5 * z * z - ls - 0.5 * LN_2PI
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_categorical() {
        let d = CategoricalDist::new(vec![0.2; 5]).unwrap();
        for a in 0..5 {
            assert_abs_diff_eq!(d.log_prob(a).unwrap(), -1.60944, epsilon = 1e-5);
        }
        assert_abs_diff_eq!(d.entropy(), 5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn one_hot_has_zero_entropy_and_rejects_impossible_actions() {
        let d = CategoricalDist::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(d.entropy(), 0.0);
        assert_eq!(d.log_prob(1).unwrap(), 0.0);
        assert!(matches!(d.log_prob(0), Err(NnError::ZeroProbability(0))));
        assert!(d.log_prob(3).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..1000).all(|_| d.sample(&mut rng) == 1));
    }

    #[test]
    fn rejects_non_simplex() {
        assert!(CategoricalDist::new(vec![0.5, 0.6]).is_err());
        assert!(CategoricalDist::new(vec![-0.1, 1.1]).is_err());
        assert!(CategoricalDist::new(vec![]).is_err());
    }

    #[test]
    fn categorical_sampling_frequency() {
        let d = CategoricalDist::new(vec![0.7, 0.3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let zeros = (0..n).filter(|_| d.sample(&mut rng) == 0).count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.7).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn standard_normal_density_and_entropy() {
        let d = DiagGaussianDist::new(vec![0.0], vec![0.0]).unwrap();
        assert_abs_diff_eq!(d.log_prob(&[0.0]).unwrap(), -0.91894, epsilon = 1e-5);
        assert_abs_diff_eq!(d.entropy(), 1.41894, epsilon = 1e-5);
        assert_abs_diff_eq!(d.entropy(), 0.5 + 0.5 * (2.0 * std::f64::consts::PI).ln(), epsilon = 1e-15);
    }

    #[test]
    fn gaussian_log_prob_matches_closed_form() {
        let d = DiagGaussianDist::new(vec![0.5, -1.0], vec![0.3, -0.7]).unwrap();
        let x = [1.0, 0.0];
        let expected: f64 = [(1.0, 0.5, 0.3f64), (0.0, -1.0, -0.7f64)]
            .iter()
            .map(|&(x, m, ls)| {
                let s = ls.exp();
                (-(x - m) * (x - m) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
            })
            .map(f64::ln)
            .sum();
        assert_abs_diff_eq!(d.log_prob(&x).unwrap(), expected, epsilon = 1e-12);
        assert!(d.log_prob(&[1.0]).is_err());
    }

    #[test]
    fn gaussian_sample_moments() {
        let d = DiagGaussianDist::new(vec![0.0], vec![0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)[0]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn gaussian_rejects_mismatched_or_non_finite() {
        assert!(DiagGaussianDist::new(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(DiagGaussianDist::new(vec![f64::NAN], vec![0.0]).is_err());
    }
}
