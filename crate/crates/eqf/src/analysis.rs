//! Small time-series estimators for checking the periodic structure of a
//! run: autocorrelation, local peaks, and logarithmic decay rates.

/// Biased autocorrelation of a series, demeaned and normalized so lag 0 is
/// one. Returns one value per lag in `0..max_lag` (clamped to the series
/// length). A series with no variance has no correlation structure; it
/// yields all zeros so that peak queries fail cleanly.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    let lags = max_lag.min(n);
    if lags == 0 {
        return Vec::new();
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let zero_lag: f64 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    // variation at the level of rounding noise in the mean is no signal
    if zero_lag.sqrt() <= 1e-12 * mean.abs().max(1.0) {
        return vec![0.0; lags];
    }
    (0..lags)
        .map(|k| {
            let dot: f64 = centered[..n - k]
                .iter()
                .zip(&centered[k..])
                .map(|(a, b)| a * b)
                .sum();
            dot / (n as f64 * zero_lag)
        })
        .collect()
}

/// Indices of interior local maxima (strictly above the left neighbor, at
/// least the right one).
pub fn local_peaks(series: &[f64]) -> Vec<usize> {
    if series.len() < 3 {
        return Vec::new();
    }
    (1..series.len() - 1)
        .filter(|&i| series[i] > series[i - 1] && series[i] >= series[i + 1])
        .collect()
}

/// True when some local peak of a lag series sampled at `dt` lies within
/// `rel_tol` (relative) of the target lag in seconds.
pub fn has_peak_near(lag_series: &[f64], dt: f64, target: f64, rel_tol: f64) -> bool {
    nearest_peak_lag(lag_series, dt, target)
        .map(|lag| (lag - target).abs() <= rel_tol * target)
        .unwrap_or(false)
}

/// Lag in seconds of the local peak closest to the target, if any.
pub fn nearest_peak_lag(lag_series: &[f64], dt: f64, target: f64) -> Option<f64> {
    local_peaks(lag_series)
        .into_iter()
        .map(|i| i as f64 * dt)
        .min_by(|a, b| {
            (a - target)
                .abs()
                .partial_cmp(&(b - target).abs())
                .expect("lags are finite")
        })
}

/// Central-difference derivative of the natural log of a positive series:
/// the instantaneous exponential decay rate. Output is two samples shorter
/// than the input (one trimmed from each end). Non-positive entries have no
/// logarithm and produce an empty result.
pub fn log_derivative(series: &[f64], dt: f64) -> Vec<f64> {
    if series.len() < 3 || series.iter().any(|&x| x <= 0.0) {
        return Vec::new();
    }
    let logs: Vec<f64> = series.iter().map(|x| x.ln()).collect();
    (1..series.len() - 1)
        .map(|i| (logs[i + 1] - logs[i - 1]) / (2.0 * dt))
        .collect()
}
