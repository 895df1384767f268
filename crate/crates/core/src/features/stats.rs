use crate::error::{Error, Result};

/// Suffixes for the seven summary statistics, in output order.
pub const STAT_NAMES: [&str; 7] = ["mean", "max", "min", "std", "variance", "skewness", "kurtosis"];

/// Mean, max, min, standard deviation, variance, skewness and kurtosis using
/// population moments. Kurtosis is non-excess (`m4 / m2^2`); skewness and
/// kurtosis are 0 when the variance is 0.
pub fn stats7(xs: &[f64]) -> Result<[f64; 7]> {
    if xs.is_empty() {
        return Err(Error::EmptyStats);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skew, kurt) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2)) } else { (0.0, 0.0) };
    Ok([mean, max, min, m2.sqrt(), m2, skew, kurt])
}

/// Shannon entropy (natural log) of a non-negative sequence after scaling it
/// to sum 1. An all-zero sequence has entropy 0.
pub fn shannon_entropy(xs: &[f64]) -> f64 {
    let total: f64 = xs.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    xs.iter()
        .map(|&x| x / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}
