//! Fixed-order reductions and small statistics helpers.

/// Pairwise (cascade) summation in index order. The association order
/// depends only on the slice length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let m = mean(values);
    if n < 2 {
        return (m, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Unbiased sample variance.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&sq) / (values.len() - 1) as f64
}

/// Half-width of the settle band around an asymptotic current: 2% of `|J|`,
/// or 0.05 absolute when the current is near zero.
pub fn settle_band(asymptote: f64) -> f64 {
    let rel = 0.02 * asymptote.abs();
    if rel < 0.05 {
        0.05
    } else {
        rel
    }
}

/// First index after which every value stays within `band` of `target`.
/// `None` when the last value is still outside.
pub fn settle_time(series: &[f64], target: f64, band: f64) -> Option<usize> {
    let mut first = None;
    for (t, v) in series.iter().enumerate().rev() {
        if (v - target).abs() > band {
            break;
        }
        first = Some(t);
    }
    first
}

/// Period-2 content of a series: half the alternating mean of the first
/// differences, and the level white noise of the given standard error
/// would reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alternation {
    pub amplitude: f64,
    pub noise: f64,
}

impl Alternation {
    /// Amplitude above four noise levels.
    pub fn present(&self) -> bool {
        self.amplitude > 4.0 * self.noise
    }
}

/// Measures period-2 alternation of `series[window]`. Differencing removes a
/// slow drift before the alternating sign is applied.
pub fn period_two_alternation(
    series: &[f64],
    std_err: &[f64],
    window: std::ops::Range<usize>,
) -> Alternation {
    let end = window.end.min(series.len());
    let start = window.start.max(1);
    if end <= start {
        return Alternation { amplitude: 0.0, noise: f64::INFINITY };
    }
    let w = (end - start) as f64;
    let signed: Vec<f64> = (start..end)
        .map(|t| {
            let d = series[t] - series[t - 1];
            if t % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect();
    let amplitude = (pairwise_sum(&signed) / w).abs() / 2.0;
    let se = if std_err.len() >= end { mean(&std_err[start..end]) } else { 0.0 };
    Alternation { amplitude, noise: se / w.sqrt() }
}

/// Runs `f` on a dedicated pool of `workers` threads, or the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}
