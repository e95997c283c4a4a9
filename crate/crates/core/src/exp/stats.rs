//! Curve smoothing and multi-seed aggregation.

/// Trailing mean over the last `min(t, window)` values.
pub fn rolling_mean(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for (t, &x) in series.iter().enumerate() {
        sum += x;
        if t >= window {
            sum -= series[t - window];
        }
        out.push(sum / (t + 1).min(window) as f64);
    }
    out
}

/// Mean of the last `window` values (or all of them if fewer).
pub fn final_score(series: &[f64], window: usize) -> f64 {
    let tail = &series[series.len().saturating_sub(window.max(1))..];
    if tail.is_empty() {
        return f64::NAN;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Mean of the first `window` values (or all of them if fewer).
pub fn initial_score(series: &[f64], window: usize) -> f64 {
    let head = &series[..series.len().min(window.max(1))];
    if head.is_empty() {
        return f64::NAN;
    }
    head.iter().sum::<f64>() / head.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateResult {
    pub seeds: Vec<u64>,
    /// Final score of each seed, in `seeds` order.
    pub scores: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(num_seeds)`; `None` for one seed.
    pub std_error: Option<f64>,
    pub fingerprint: String,
}

pub fn aggregate(seeds: Vec<u64>, scores: Vec<f64>, fingerprint: String) -> AggregateResult {
    assert_eq!(seeds.len(), scores.len());
    let k = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / k;
    let std_error = (scores.len() >= 2).then(|| {
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
        var.sqrt() / k.sqrt()
    });
    AggregateResult {
        seeds,
        scores,
        mean,
        std_error,
        fingerprint,
    }
}
