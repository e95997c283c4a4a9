use super::NnError;

/// Moment estimates for a list of parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Zeroed moments shaped like `tensor_lens`, with the usual 0.9 / 0.999 / 1e-8.
    pub fn new(tensor_lens: &[usize]) -> Self {
        AdamState {
            first_moment: tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn tensor_lens(&self) -> Vec<usize> {
        self.first_moment.iter().map(Vec::len).collect()
    }
}

/// One bias-corrected Adam update over every tensor.
///
/// Gradients are validated before anything is written, so a rejected step
/// leaves both the parameters and the state untouched.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut AdamState,
    lr: f64,
) -> Result<(), NnError> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(NnError::DimensionMismatch {
            expected: state.first_moment.len(),
            actual: grads.len(),
        });
    }
    for (k, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || g.len() != state.first_moment[k].len() {
            return Err(NnError::DimensionMismatch {
                expected: state.first_moment[k].len(),
                actual: g.len(),
            });
        }
        if let Some(index) = g.iter().position(|v| !v.is_finite()) {
            return Err(NnError::NonFiniteGradient {
                tensor: k,
                index,
                value: g[index],
            });
        }
    }
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(NnError::InvalidHyperparameter(format!("lr = {lr}")));
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.first_moment[k];
        let v = &mut state.second_moment[k];
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(p: &mut Vec<f64>, g: &[f64], s: &mut AdamState, lr: f64) -> Result<(), NnError> {
        adam_step(&mut [p.as_mut_slice()], &[g], s, lr)
    }

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut s = AdamState::new(&[2]);
        let mut p = vec![1.0, -2.0];
        step(&mut p, &[1.0, 1.0], &mut s, 0.1).unwrap();
        let before = p.clone();
        let m_before = s.first_moment[0].clone();
        step(&mut p, &[0.0, 0.0], &mut s, 0.1).unwrap();
        // m decays but is nonzero, so the parameter keeps moving; only a fresh
        // state leaves parameters fixed under zero gradient
        assert!(s.first_moment[0][0].abs() < m_before[0].abs());
        let mut fresh = AdamState::new(&[2]);
        let mut q = before.clone();
        step(&mut q, &[0.0, 0.0], &mut fresh, 0.1).unwrap();
        assert_eq!(q, before);
        assert_eq!(fresh.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        for g in [1e-3, 0.5, 42.0, -7.0] {
            let mut s = AdamState::new(&[1]);
            let mut p = vec![0.0];
            step(&mut p, &[g], &mut s, 0.01).unwrap();
            let expected = -0.01 * g / (g.abs() + 1e-8);
            assert!((p[0] - expected).abs() < 1e-15, "g={g}: {}", p[0]);
            assert!((p[0] + 0.01 * g.signum()).abs() < 1e-7);
        }
    }

    #[test]
    fn constant_gradient_moves_monotonically() {
        let mut s = AdamState::new(&[1]);
        let mut p = vec![0.0];
        let mut prev = 0.0;
        for _ in 0..500 {
            step(&mut p, &[-0.3], &mut s, 1e-3).unwrap();
            assert!(p[0] > prev);
            prev = p[0];
        }
        assert_eq!(s.step_count, 500);
    }

    #[test]
    fn zero_lr_is_bit_identical() {
        let mut s = AdamState::new(&[3]);
        let mut p = vec![0.1, -3.7, 1e-9];
        let orig = p.clone();
        for _ in 0..10 {
            step(&mut p, &[5.0, -1.0, 0.3], &mut s, 0.0).unwrap();
        }
        assert_eq!(
            p.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            orig.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn non_finite_gradient_names_tensor_and_changes_nothing() {
        let mut s = AdamState::new(&[2, 2]);
        let mut a = vec![1.0, 1.0];
        let mut b = vec![1.0, 1.0];
        let err = adam_step(
            &mut [a.as_mut_slice(), b.as_mut_slice()],
            &[&[0.1, 0.1], &[0.2, f64::NAN]],
            &mut s,
            0.1,
        )
        .unwrap_err();
        assert!(matches!(err, NnError::NonFiniteGradient { tensor: 1, index: 1, .. }));
        assert_eq!(a, vec![1.0, 1.0]);
        assert_eq!(s.step_count, 0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut s = AdamState::new(&[2]);
        let mut p = vec![0.0; 3];
        assert!(step(&mut p, &[0.0; 3], &mut s, 0.1).is_err());
    }
}
