//! Sample statistics with replicate-derived standard errors.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Pairwise summation; deterministic for a given input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// A mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub n: usize,
}

impl Estimate {
    /// Sample mean and `s / √n`.
    pub fn of_mean(xs: &[f64]) -> Self {
        let n = xs.len();
        let m = mean(xs);
        let se = if n > 1 {
            (sample_variance_about(xs, m) / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Self {
            value: m,
            std_err: se,
            n,
        }
    }

    /// Whether `|self - other| <= k` combined standard errors.
    pub fn agrees_with(&self, other: &Estimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * self.std_err.hypot(other.std_err)
    }

    /// `(value - target) / std_err`; zero when both coincide exactly.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.value - target;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_err
        }
    }
}

fn sample_variance_about(xs: &[f64], m: f64) -> f64 {
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() - 1) as f64
}

/// Sample covariance with the standard error of the mean of the centered
/// products.
pub fn covariance(xs: &[f64], ys: &[f64]) -> Estimate {
    assert_eq!(xs.len(), ys.len(), "paired samples");
    let n = xs.len();
    let (mx, my) = (mean(xs), mean(ys));
    let prods: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    let raw = Estimate::of_mean(&prods);
    let scale = if n > 1 {
        n as f64 / (n - 1) as f64
    } else {
        f64::NAN
    };
    Estimate {
        value: raw.value * scale,
        std_err: raw.std_err * scale,
        n,
    }
}

/// Standardized skewness and excess kurtosis; `NaN` for a constant sample.
pub fn shape(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let central = |k: i32| mean(&xs.iter().map(|x| (x - m).powi(k)).collect::<Vec<_>>());
    let m2 = central(2);
    if m2 == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    (central(3) / m2.powf(1.5), central(4) / (m2 * m2) - 3.0)
}

/// Kolmogorov–Smirnov distance between the sample and the normal law with
/// the sample's mean and standard deviation.
pub fn ks_normal(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let sd = sample_variance_about(xs, m).sqrt();
    if sd == 0.0 {
        return f64::NAN;
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut z: Vec<f64> = xs.iter().map(|x| (x - m) / sd).collect();
    z.sort_by(f64::total_cmp);
    z.iter()
        .enumerate()
        .map(|(i, v)| {
            let f = normal.cdf(*v);
            (f - i as f64 / n as f64)
                .abs()
                .max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Least-squares line `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(xs), mean(ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some(LineFit {
        intercept: my - slope * mx,
        slope,
    })
}
