//! Exact numerical kernels: token entropy, descriptive statistics, and the
//! distribution-shape metrics used by the feature hierarchy.
//!
//! Everything here is a pure function. Degenerate denominators (zero mean,
//! zero IQR) zero-fill rather than producing non-finite values, because the
//! downstream tree training requires finite feature vectors.

use thiserror::Error;

use crate::real::Real;

/// Tolerance for the "probabilities sum to one" check.
pub const DIST_SUM_TOLERANCE: f64 = 1e-9;
/// Denominators with magnitude below this zero-fill the dependent metric.
pub const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    /// Vector has a negative component or does not sum to one.
    #[error("not a probability distribution: {0}")]
    NonDistribution(String),
    #[error("empty input")]
    EmptyInput,
    #[error("summary over an empty set has no shape")]
    EmptySummary,
}

/// Distributional measures over one list of values.
///
/// `count == 0` means the zero summary: every numeric field is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatSummary<F> {
    pub total: F,
    pub mean: F,
    pub max: F,
    pub min: F,
    pub std: F,
    pub variance: F,
    pub median: F,
    pub q1: F,
    pub q3: F,
    pub count: usize,
}

impl<F: Real> StatSummary<F> {
    pub fn zero() -> Self {
        let z = F::zero();
        StatSummary {
            total: z,
            mean: z,
            max: z,
            min: z,
            std: z,
            variance: z,
            median: z,
            q1: z,
            q3: z,
            count: 0,
        }
    }
}

/// Shape metrics derived from a summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeMetrics<F> {
    pub range: F,
    pub iqr: F,
    pub bowley_skewness: F,
    pub cv: F,
    pub tail_weight: F,
    pub stability_index: F,
}

/// Shannon entropy −Σ p ln p of a finite probability vector, in nats.
///
/// `0·ln 0 ≡ 0`. The components must be nonnegative and sum to 1 within
/// [`DIST_SUM_TOLERANCE`].
pub fn token_entropy<F: Real>(dist: &[F]) -> Result<F, StatsError> {
    let mut sum = F::zero();
    for &p in dist {
        if p < F::zero() {
            return Err(StatsError::NonDistribution(format!(
                "negative component {p}"
            )));
        }
        sum = sum + p;
    }
    let deviation = (sum - F::one()).abs().as_f64();
    if deviation > DIST_SUM_TOLERANCE {
        return Err(StatsError::NonDistribution(format!(
            "sum deviates from 1 by {deviation:e}"
        )));
    }
    let mut h = F::zero();
    for &p in dist {
        if p > F::zero() {
            h = h - p * p.ln();
        }
    }
    Ok(h.max(F::zero()))
}

/// Entropy lower bound from a truncated top-K (token, logprob) list.
///
/// The residual mass `r = max(0, 1 − Σ exp(lp))` is treated as one synthetic
/// outcome, so the result is a lower bound on the true entropy; callers record
/// the truncation K alongside.
pub fn entropy_from_truncated_logprobs<S, F: Real>(pairs: &[(S, F)]) -> Result<F, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut h = F::zero();
    let mut mass = F::zero();
    for (_, lp) in pairs {
        let p = lp.exp();
        mass = mass + p;
        // −p ln p with ln p taken from the wire, which is exact where it matters.
        h = h - p * *lp;
    }
    let residual = (F::one() - mass).max(F::zero());
    if residual > F::zero() {
        h = h - residual * residual.ln();
    }
    Ok(h.max(F::zero()))
}

/// Descriptive statistics with population variance and linear-interpolation
/// quantiles (`h = (N−1)·q`, interpolate between closest ranks).
///
/// An empty list returns the zero summary with `count == 0`. Values must be
/// finite (non-finite inputs would poison every downstream feature).
pub fn describe<F: Real>(values: &[F]) -> StatSummary<F> {
    let count = values.len();
    if count == 0 {
        return StatSummary::zero();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values must be finite"));

    let n = F::of(count as f64);
    let mut total = F::zero();
    for &v in values {
        total = total + v;
    }
    let mean = total / n;
    let mut ss = F::zero();
    for &v in values {
        let d = v - mean;
        ss = ss + d * d;
    }
    let variance = ss / n;
    StatSummary {
        total,
        mean,
        max: sorted[count - 1],
        min: sorted[0],
        std: variance.sqrt(),
        variance,
        median: quantile_sorted(&sorted, 0.5),
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
        count,
    }
}

/// Quantile of an ascending-sorted non-empty slice by linear interpolation.
pub fn quantile_sorted<F: Real>(sorted: &[F], q: f64) -> F {
    debug_assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + F::of(frac) * (sorted[lo + 1] - sorted[lo])
    }
}

/// Distribution-shape metrics from a summary; `count == 0` has no shape.
pub fn shape<F: Real>(s: &StatSummary<F>) -> Result<ShapeMetrics<F>, StatsError> {
    if s.count == 0 {
        return Err(StatsError::EmptySummary);
    }
    let eps = F::of(DEGENERATE_EPS);
    let iqr = s.q3 - s.q1;
    let bowley = if iqr < eps {
        F::zero()
    } else {
        (s.q3 + s.q1 - F::of(2.0) * s.median) / iqr
    };
    let cv = if s.mean.abs() < eps {
        F::zero()
    } else {
        s.std / s.mean
    };
    let tail_weight = if iqr < eps {
        F::zero()
    } else {
        (s.max - s.q3) / iqr
    };
    Ok(ShapeMetrics {
        range: s.max - s.min,
        iqr,
        bowley_skewness: bowley,
        cv,
        tail_weight,
        stability_index: F::one() - cv,
    })
}

/// Pearson correlation of two equal-length series. A zero-variance side (or
/// length < 2) has no defined correlation and yields 0, which downstream
/// consumers treat as "uninformative" rather than an error.
pub fn pearson<F: Real>(x: &[F], y: &[F]) -> F {
    let n = x.len().min(y.len());
    if n < 2 {
        return F::zero();
    }
    let nf = F::of(n as f64);
    let mut mx = F::zero();
    let mut my = F::zero();
    for i in 0..n {
        mx = mx + x[i];
        my = my + y[i];
    }
    mx = mx / nf;
    my = my / nf;
    let mut sxy = F::zero();
    let mut sxx = F::zero();
    let mut syy = F::zero();
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    let denom = (sxx * syy).sqrt();
    if denom.as_f64() < DEGENERATE_EPS {
        F::zero()
    } else {
        sxy / denom
    }
}
