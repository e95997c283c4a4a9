//! Central finite-difference oracle for [`Mlp::backward`].

use rand::Rng;

use super::mlp::{Head, Mlp, MlpGrads};
use super::NnError;

/// A scalar loss of the network output with a known output gradient.
pub trait OutputLoss {
    fn value(&self, output: &[f64]) -> f64;
    fn grad(&self, output: &[f64]) -> Vec<f64>;
}

/// `sum_k c_k y_k + 0.5 * q * sum_k y_k^2`.
#[derive(Clone, Debug)]
pub struct MixedLoss {
    pub coeffs: Vec<f64>,
    pub quadratic: f64,
}

impl OutputLoss for MixedLoss {
    fn value(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(&self.coeffs)
            .map(|(y, c)| c * y + 0.5 * self.quadratic * y * y)
            .sum()
    }

    fn grad(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(&self.coeffs)
            .map(|(y, c)| c + self.quadratic * y)
            .collect()
    }
}

/// Denominator floor of the relative error. Central differences with step
/// `h` carry roundoff of roughly `eps * |loss| / h` (about 1e-10 at
/// `h = 1e-6`), so components much smaller than this floor cannot be
/// resolved relatively and are compared on an absolute scale instead.
pub const REL_FLOOR: f64 = 1e-5;

/// Worst relative error between `analytic` and central differences of the loss.
///
/// The relative error of each parameter is `|a - n| / max(|a|, |n|, REL_FLOOR)`.
pub fn compare_gradients(
    net: &Mlp,
    input: &[f64],
    loss: &dyn OutputLoss,
    analytic: &MlpGrads,
    fd_step: f64,
) -> Result<f64, NnError> {
    if !(fd_step > 0.0) {
        return Err(NnError::InvalidHyperparameter(format!("fd_step = {fd_step}")));
    }
    let mut probe = net.clone();
    let analytic = analytic.tensors();
    let n_tensors = analytic.len();
    let mut worst = 0.0f64;
    for k in 0..n_tensors {
        for i in 0..analytic[k].len() {
            let orig = probe.tensors()[k][i];
            probe.tensors_mut()[k][i] = orig + fd_step;
            let plus = loss.value(&probe.forward(input)?);
            probe.tensors_mut()[k][i] = orig - fd_step;
            let minus = loss.value(&probe.forward(input)?);
            probe.tensors_mut()[k][i] = orig;

            let numeric = (plus - minus) / (2.0 * fd_step);
            let a = analytic[k][i];
            if !numeric.is_finite() || !a.is_finite() {
                return Err(NnError::NonFiniteGradient {
                    tensor: k,
                    index: i,
                    value: if a.is_finite() { numeric } else { a },
                });
            }
            let denom = a.abs().max(numeric.abs()).max(REL_FLOOR);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    Ok(worst)
}

/// Checks [`Mlp::backward`] against central finite differences.
pub fn gradient_check(
    net: &Mlp,
    input: &[f64],
    loss: &dyn OutputLoss,
    fd_step: f64,
) -> Result<f64, NnError> {
    let out = net.forward(input)?;
    let (grads, _) = net.backward(input, &loss.grad(&out))?;
    compare_gradients(net, input, loss, &grads, fd_step)
}

/// Summary of a batch of random gradient checks.
#[derive(Clone, Debug)]
pub struct GradcheckReport {
    pub instances: usize,
    pub max_relative_error: f64,
    pub worst_architecture: Vec<usize>,
    pub worst_head: Head,
}

/// Runs `instances` checks on random two-hidden-layer networks with hidden
/// widths in 4..=64, cycling through every output head.
pub fn random_gradcheck<R: Rng + ?Sized>(
    instances: usize,
    fd_step: f64,
    rng: &mut R,
) -> Result<GradcheckReport, NnError> {
    let heads = [Head::Linear, Head::Tanh, Head::Softmax];
    let mut report = GradcheckReport {
        instances,
        max_relative_error: 0.0,
        worst_architecture: Vec::new(),
        worst_head: Head::Linear,
    };
    for n in 0..instances {
        let head = heads[n % heads.len()];
        let sizes = [
            rng.random_range(1..=16),
            rng.random_range(4..=64),
            rng.random_range(4..=64),
            rng.random_range(1..=8),
        ];
        let mut net = Mlp::init(&sizes, head, 1.0, 1.0, rng)?;
        for k in 0..net.num_layers() {
            for b in net.biases_mut(k) {
                *b = rng.random_range(-0.5..0.5);
            }
        }
        let input: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = MixedLoss {
            coeffs: (0..sizes[3]).map(|_| rng.random_range(-1.0..1.0)).collect(),
            quadratic: 1.0,
        };
        let err = gradient_check(&net, &input, &loss, fd_step)?;
        if err >= report.max_relative_error {
            report.max_relative_error = err;
            report.worst_architecture = sizes.to_vec();
            report.worst_head = head;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_net_quadratic_loss_is_near_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::init(&[5, 3], Head::Linear, 1.0, 1.0, &mut rng).unwrap();
        let loss = MixedLoss {
            coeffs: vec![0.3, -0.2, 1.0],
            quadratic: 1.0,
        };
        let err = gradient_check(&net, &[0.1, -0.5, 0.9, 0.3, -1.0], &loss, 1e-6).unwrap();
        assert!(err < 1e-9, "err {err}");
    }

    #[test]
    fn random_4_8_8_2_net_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for head in [Head::Linear, Head::Tanh, Head::Softmax] {
            let net = Mlp::init(&[4, 8, 8, 2], head, 1.0, 1.0, &mut rng).unwrap();
            let loss = MixedLoss {
                coeffs: vec![0.7, -1.1],
                quadratic: 1.0,
            };
            let err = gradient_check(&net, &[0.2, -0.3, 0.5, 0.9], &loss, 1e-6).unwrap();
            assert!(err < 1e-4, "{head:?}: {err}");
        }
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::init(&[4, 8, 8, 2], Head::Tanh, 1.0, 1.0, &mut rng).unwrap();
        let loss = MixedLoss {
            coeffs: vec![1.0, -1.0],
            quadratic: 1.0,
        };
        let x = [0.5, -0.5, 0.25, 0.1];
        let out = net.forward(&x).unwrap();
        let (mut grads, _) = net.backward(&x, &loss.grad(&out)).unwrap();
        let i = grads.weights[1]
            .iter()
            .position(|g| g.abs() > 1e-3)
            .unwrap();
        grads.weights[1][i] *= 2.0;
        let err = compare_gradients(&net, &x, &loss, &grads, 1e-6).unwrap();
        assert!(err > 1e-2, "err {err}");
    }

    #[test]
    fn rejects_non_positive_step() {
        let net = Mlp::zeros(&[1, 1], Head::Linear).unwrap();
        let loss = MixedLoss {
            coeffs: vec![1.0],
            quadratic: 0.0,
        };
        assert!(gradient_check(&net, &[1.0], &loss, 0.0).is_err());
    }
}
