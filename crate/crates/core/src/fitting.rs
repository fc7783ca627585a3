//! Power-law fits of degree distributions.
//!
//! Two estimators:
//!
//! * [`fit_cdf_ls`]: ordinary least squares of `log10(ccdf)` on `log10(x)`
//!   over the observed degrees. A density `p(x) ∝ x^-α` has a CCDF decaying
//!   as `x^-(α-1)`, so the reported exponent is `1 + |slope|`.
//! * [`fit_mle_ks`]: discrete power-law maximum likelihood on the tail
//!   `x ≥ x_min`, with `x_min` chosen to minimise the Kolmogorov–Smirnov
//!   distance between the empirical and fitted tail CCDFs.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{CcdfPoints, DegreeDistribution};

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 3 points at or above x_min = {x_min}, got {got}")]
    TooFewPoints { x_min: u32, got: usize },
    #[error("log-degree has zero variance")]
    ZeroVariance,
    #[error("no valid x_min candidate: all tail mass sits at one degree")]
    NoCandidate,
    #[error("x_min must be at least 1")]
    InvalidXMin,
    #[error("cannot summarise an empty list of fits")]
    EmptySummary,
    #[error("cannot summarise fits from different methods")]
    MixedMethods,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    CdfLs,
    MleKs,
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMethod::CdfLs => "cdf_ls",
            FitMethod::MleKs => "mle_ks",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub method: FitMethod,
    pub alpha: f64,
    /// Coefficient of determination; only for [`FitMethod::CdfLs`].
    pub r_squared: Option<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub x_min: u32,
    /// Only for [`FitMethod::MleKs`].
    pub ks_distance: Option<f64>,
    pub n_tail: usize,
    pub tail_ratio: f64,
    /// Set when the distribution has fewer than 10 distinct positive degrees.
    pub low_confidence: bool,
}

/// Least-squares line through the log-log CCDF points with `x ≥ x_min`.
pub fn fit_cdf_ls(points: &CcdfPoints, x_min: u32) -> Result<FitResult, FitError> {
    if x_min == 0 {
        return Err(FitError::InvalidXMin);
    }
    let tail: Vec<_> = points.points.iter().filter(|p| p.x >= x_min).collect();
    if tail.len() < 3 {
        return Err(FitError::TooFewPoints { x_min, got: tail.len() });
    }
    let xs: Vec<f64> = tail.iter().map(|p| (p.x as f64).log10()).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.fraction.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::ZeroVariance);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    let first = tail[0];
    Ok(FitResult {
        method: FitMethod::CdfLs,
        alpha: 1.0 + slope.abs(),
        r_squared: Some(r_squared),
        slope: Some(slope),
        intercept: Some(intercept),
        x_min,
        ks_distance: None,
        n_tail: first.at_least,
        tail_ratio: first.fraction,
        low_confidence: points.len() < 10,
    })
}

/// Hurwitz zeta `ζ(s, q) = Σ_{k≥0} (k + q)^-s` for `s > 1`, `q > 0`.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    // Euler–Maclaurin: direct sum of N terms, then integral and Bernoulli corrections
    const N: usize = 12;
    // B_{2j} / (2j)!
    const COEF: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
    ];
    let mut sum = 0.0;
    for k in 0..N {
        sum += (q + k as f64).powf(-s);
    }
    let a = q + N as f64;
    let a_pow = a.powf(-s);
    sum += a * a_pow / (s - 1.0) + 0.5 * a_pow;
    // term_j = s(s+1)...(s+2j-2) a^{-s-2j+1}
    let mut rising = s;
    let mut a_term = a_pow / a;
    for (j, c) in COEF.iter().enumerate() {
        let t = c * rising * a_term;
        sum += t;
        if t.abs() < 1e-17 * sum.abs() {
            break;
        }
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        a_term /= a * a;
    }
    sum
}

/// Closed-form approximate MLE `1 + n / Σ ln(x_i / (x_min - ½))` over `x ≥ x_min`.
pub fn approx_alpha(degrees: &[u32], x_min: u32) -> Option<f64> {
    let shift = x_min as f64 - 0.5;
    let (n, s) = degrees
        .iter()
        .filter(|&&x| x >= x_min)
        .fold((0usize, 0.0), |(n, s), &x| (n + 1, s + (x as f64 / shift).ln()));
    (n > 0 && s > 0.0).then(|| 1.0 + n as f64 / s)
}

/// Discrete power-law log-likelihood of the tail summary `(n, Σ ln x)`.
pub fn discrete_log_likelihood(alpha: f64, x_min: u32, n: usize, sum_ln: f64) -> f64 {
    -(n as f64) * hurwitz_zeta(alpha, x_min as f64).ln() - alpha * sum_ln
}

/// A tail of the distribution: distinct degrees `≥ x_min` with their counts.
struct Tail<'a> {
    x_min: u32,
    values: &'a [(u32, usize)],
    n: usize,
    sum_ln: f64,
}

impl<'a> Tail<'a> {
    fn new(values: &'a [(u32, usize)]) -> Self {
        let n = values.iter().map(|v| v.1).sum();
        let sum_ln = values.iter().map(|&(x, c)| c as f64 * (x as f64).ln()).sum();
        Tail {
            x_min: values[0].0,
            values,
            n,
            sum_ln,
        }
    }

    fn approx_alpha(&self) -> f64 {
        let shift = self.x_min as f64 - 0.5;
        let s: f64 = self
            .values
            .iter()
            .map(|&(x, c)| c as f64 * (x as f64 / shift).ln())
            .sum();
        1.0 + self.n as f64 / s
    }

    /// Maximises the discrete likelihood by golden-section search. The
    /// likelihood is concave in α, so the bracket around the closed-form
    /// estimate only needs to contain the optimum.
    fn mle_alpha(&self) -> f64 {
        let ll = |a: f64| discrete_log_likelihood(a, self.x_min, self.n, self.sum_ln);
        let guess = self.approx_alpha();
        let mut lo = 1.0 + 1e-9;
        let mut hi = (guess * 2.0).max(guess + 5.0);
        // widen until the optimum is bracketed
        while ll(hi) > ll(hi - 1e-6) && hi < 1e4 {
            hi *= 2.0;
        }
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let (mut fc, mut fd) = (ll(c), ll(d));
        while hi - lo > 1e-10 {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = ll(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = ll(d);
            }
        }
        0.5 * (lo + hi)
    }

    /// Largest gap between the empirical and fitted tail CCDFs at the
    /// observed degrees.
    fn ks(&self, alpha: f64) -> f64 {
        let z0 = hurwitz_zeta(alpha, self.x_min as f64);
        let mut remaining = self.n;
        let mut worst: f64 = 0.0;
        for &(x, c) in self.values {
            let empirical = remaining as f64 / self.n as f64;
            let model = hurwitz_zeta(alpha, x as f64) / z0;
            worst = worst.max((empirical - model).abs());
            remaining -= c;
        }
        worst
    }
}

fn positive_values(dist: &DegreeDistribution) -> Vec<(u32, usize)> {
    dist.counts().range(1..).map(|(&x, &c)| (x, c)).collect()
}

fn mle_result(tail: &Tail<'_>, alpha: f64, positive: usize, distinct: usize) -> FitResult {
    FitResult {
        method: FitMethod::MleKs,
        alpha,
        r_squared: None,
        slope: None,
        intercept: None,
        x_min: tail.x_min,
        ks_distance: Some(tail.ks(alpha)),
        n_tail: tail.n,
        tail_ratio: tail.n as f64 / positive as f64,
        low_confidence: distinct < 10,
    }
}

/// Discrete power-law MLE for a fixed `x_min`.
pub fn fit_mle_fixed(dist: &DegreeDistribution, x_min: u32) -> Result<FitResult, FitError> {
    if x_min == 0 {
        return Err(FitError::InvalidXMin);
    }
    let values = positive_values(dist);
    let start = values.partition_point(|v| v.0 < x_min);
    if values.len() - start < 2 {
        return Err(FitError::NoCandidate);
    }
    let positive = values.iter().map(|v| v.1).sum();
    let tail = Tail::new(&values[start..]);
    Ok(mle_result(&tail, tail.mle_alpha(), positive, values.len()))
}

/// Minimum tail size, in distinct degrees, for an `x_min` candidate.
pub const MIN_TAIL_POINTS: usize = 5;

/// Discrete MLE with `x_min` chosen by minimum KS distance. Candidates are
/// the observed degrees that leave at least [`MIN_TAIL_POINTS`] distinct
/// degrees in the tail (at least two when the whole distribution has fewer);
/// ties go to the smaller `x_min`.
pub fn fit_mle_ks(dist: &DegreeDistribution) -> Result<FitResult, FitError> {
    let values = positive_values(dist);
    if values.len() < 2 {
        return Err(FitError::NoCandidate);
    }
    if values.len() < 10 {
        log::warn!(
            "only {} distinct positive degrees; power-law fit is low confidence",
            values.len()
        );
    }
    let keep = if values.len() >= MIN_TAIL_POINTS { MIN_TAIL_POINTS } else { 2 };
    let positive: usize = values.iter().map(|v| v.1).sum();
    let candidates = values.len() + 1 - keep;
    let scored: Vec<(f64, f64)> = (0..candidates)
        .into_par_iter()
        .map(|i| {
            let tail = Tail::new(&values[i..]);
            let alpha = tail.mle_alpha();
            (tail.ks(alpha), alpha)
        })
        .collect();
    let (best, &(_, alpha)) = scored
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .ok_or(FitError::NoCandidate)?;
    let tail = Tail::new(&values[best..]);
    Ok(mle_result(&tail, alpha, positive, values.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitSummary {
    pub method: FitMethod,
    pub n: usize,
    pub mean_alpha: f64,
    pub sd_alpha: f64,
    /// Absent for methods that do not report R².
    pub mean_r2: Option<f64>,
    pub sd_r2: Option<f64>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean and population standard deviation of α and R².
pub fn summarize(fits: &[FitResult]) -> Result<FitSummary, FitError> {
    let first = fits.first().ok_or(FitError::EmptySummary)?;
    if fits.iter().any(|f| f.method != first.method) {
        return Err(FitError::MixedMethods);
    }
    let alphas: Vec<f64> = fits.iter().map(|f| f.alpha).collect();
    let (mean_alpha, sd_alpha) = mean_sd(&alphas);
    let r2: Vec<f64> = fits.iter().filter_map(|f| f.r_squared).collect();
    let (mean_r2, sd_r2) = if r2.len() == fits.len() {
        let (m, s) = mean_sd(&r2);
        (Some(m), Some(s))
    } else {
        (None, None)
    };
    Ok(FitSummary {
        method: first.method,
        n: fits.len(),
        mean_alpha,
        sd_alpha,
        mean_r2,
        sd_r2,
    })
}
