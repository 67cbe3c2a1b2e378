//! Decay-constant estimation and distribution tests.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{abs, exp, log, pairwise_sum, pairwise_sum_by, sqrt, PI};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn from_parts(edges: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if edges.len() != counts.len() + 1 || counts.is_empty() {
            return Err(Error::param("edges", "need exactly one more edge than counts"));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) || edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::param("edges", "edges must be finite and strictly increasing"));
        }
        Ok(Histogram { edges, counts })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| w[1] - w[0])
    }
}

/// Bins `samples` into half-open bins `[lo + k w, lo + (k+1) w)` covering
/// `range`. The last edge is rounded up to a whole number of bins.
/// Samples outside the binned span are dropped.
pub fn build_histogram(samples: &[f64], bin_width: f64, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::param("bin_width", "bin width must be positive"));
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::param("range", "histogram range is empty"));
    }
    let span = (hi - lo) / bin_width;
    let mut n_bins = span as usize;
    if (n_bins as f64) < span * (1.0 - 1e-12) {
        n_bins += 1;
    }
    let n_bins = n_bins.max(1);
    let mut edges: Vec<f64> = (0..=n_bins).map(|k| lo + k as f64 * bin_width).collect();
    // when the range divides evenly, keep `hi` exact as the top edge
    if abs(edges[n_bins] - hi) <= 1e-12 * (hi - lo) {
        edges[n_bins] = hi;
    }
    let top = edges[n_bins];
    let mut counts = alloc::vec![0u64; n_bins];
    for &x in samples {
        if !(x >= lo && x < top) {
            continue;
        }
        let mut k = (((x - lo) / bin_width) as usize).min(n_bins - 1);
        // correct for rounding in the division near an edge
        if x < edges[k] {
            k -= 1;
        } else if x >= edges[k + 1] {
            k += 1;
        }
        counts[k] += 1;
    }
    Histogram::from_parts(edges, counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    Mle,
    HistogramLsq,
    /// Least squares on the empirical cumulative curve `N(t) = A (1 - e^{-rate t})`.
    CumulativeLsq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub rate_hat: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub method: FitMethod,
    /// KS statistic for the raw-sample fits, reduced chi-square for the
    /// histogram fit.
    pub goodness: f64,
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} samples, at least 2 required",
            samples.len()
        )));
    }
    if samples.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::param("samples", "times must be finite and non-negative"));
    }
    Ok(())
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Maximum-likelihood rate `1 / mean` with standard error `rate / sqrt(n)`.
pub fn fit_exponential_mle(samples: &[f64]) -> Result<FitResult> {
    check_samples(samples)?;
    let n = samples.len() as f64;
    let mean = pairwise_sum(samples) / n;
    if !(mean > 0.0) {
        return Err(Error::InsufficientData("sample mean is zero".into()));
    }
    let rate = 1.0 / mean;
    let goodness = ks_statistic_sorted(&sorted(samples), |t| -crate::math::expm1(-rate * t));
    Ok(FitResult {
        rate_hat: rate,
        std_error: rate / sqrt(n),
        n_samples: samples.len() as u64,
        method: FitMethod::Mle,
        goodness,
    })
}

/// Two-sided exponential `(rate/2) e^{-rate |tau|}`: MLE on `|tau|`.
pub fn fit_two_sided_exponential(taus: &[f64]) -> Result<FitResult> {
    if taus.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("taus", "differences must be finite"));
    }
    let abs_taus: Vec<f64> = taus.iter().map(|&t| abs(t)).collect();
    fit_exponential_mle(&abs_taus)
}

/// Weighted least squares of `ln(count / width)` against bin centers with
/// weights equal to the counts. Empty bins are skipped.
pub fn fit_exponential_histogram(h: &Histogram) -> Result<FitResult> {
    let pts: Vec<(f64, f64, f64)> = h
        .centers()
        .zip(h.widths())
        .zip(h.counts())
        .filter(|(_, &c)| c > 0)
        .map(|((x, w), &c)| (x, log(c as f64 / w), c as f64))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} non-empty bins, at least 3 required",
            pts.len()
        )));
    }
    let k = pts.len();
    let sw = pairwise_sum_by(k, &|i| pts[i].2);
    let xbar = pairwise_sum_by(k, &|i| pts[i].2 * pts[i].0) / sw;
    let ybar = pairwise_sum_by(k, &|i| pts[i].2 * pts[i].1) / sw;
    let sxx = pairwise_sum_by(k, &|i| pts[i].2 * (pts[i].0 - xbar) * (pts[i].0 - xbar));
    let sxy = pairwise_sum_by(k, &|i| pts[i].2 * (pts[i].0 - xbar) * (pts[i].1 - ybar));
    if !(sxx > 0.0) {
        return Err(Error::NumericalDegeneracy("bin centers have no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rate = -slope;
    if !(rate > 0.0) {
        return Err(Error::NumericalDegeneracy(format!(
            "fitted slope {slope} is not a decay"
        )));
    }
    let chi2 = pairwise_sum_by(k, &|i| {
        let r = pts[i].1 - (intercept + slope * pts[i].0);
        pts[i].2 * r * r
    });
    let dof = if k > 2 { (k - 2) as f64 } else { 1.0 };
    Ok(FitResult {
        rate_hat: rate,
        std_error: 1.0 / sqrt(sxx),
        n_samples: h.total(),
        method: FitMethod::HistogramLsq,
        goodness: chi2 / dof,
    })
}

/// Fits `F(t) = 1 - e^{-rate t}` to the empirical CDF of `samples` on
/// `n_points` equally spaced times up to the 99th percentile, i.e. the
/// cumulative curve `N(t) = A (1 - e^{-rate t})` with `A` pinned to the
/// sample count. The standard error uses the exact ECDF covariance
/// `(F(min(s, t)) - F(s) F(t)) / n`.
pub fn fit_cumulative_exponential(samples: &[f64], n_points: usize) -> Result<FitResult> {
    check_samples(samples)?;
    if n_points < 2 {
        return Err(Error::param("n_points", "need at least two evaluation times"));
    }
    let xs = sorted(samples);
    let n = xs.len();
    let t_max = xs[((n as f64 * 0.99) as usize).min(n - 1)];
    if !(t_max > 0.0) {
        return Err(Error::InsufficientData("samples concentrated at zero".into()));
    }
    let ts: Vec<f64> = (1..=n_points).map(|k| t_max * k as f64 / n_points as f64).collect();
    let ecdf: Vec<f64> = ts
        .iter()
        .map(|&t| xs.partition_point(|&x| x <= t) as f64 / n as f64)
        .collect();

    let mut rate = n as f64 / pairwise_sum(&xs);
    for _ in 0..100 {
        let jtj = pairwise_sum_by(n_points, &|k| {
            let j = ts[k] * exp(-rate * ts[k]);
            j * j
        });
        let jtr = pairwise_sum_by(n_points, &|k| {
            let model = 1.0 - exp(-rate * ts[k]);
            ts[k] * exp(-rate * ts[k]) * (ecdf[k] - model)
        });
        let step = jtr / jtj;
        rate += step;
        if abs(step) <= 1e-14 * rate {
            break;
        }
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::NumericalDegeneracy("cumulative fit diverged".into()));
    }

    let jac: Vec<f64> = ts.iter().map(|&t| t * exp(-rate * t)).collect();
    let cdf: Vec<f64> = ts.iter().map(|&t| 1.0 - exp(-rate * t)).collect();
    let jtj = pairwise_sum_by(n_points, &|k| jac[k] * jac[k]);
    let jcj = pairwise_sum_by(n_points, &|k| {
        pairwise_sum_by(n_points, &|l| {
            let f_min = cdf[k.min(l)];
            jac[k] * jac[l] * (f_min - cdf[k] * cdf[l])
        })
    }) / n as f64;
    let goodness = ks_statistic_sorted(&xs, |t| 1.0 - exp(-rate * t));
    Ok(FitResult {
        rate_hat: rate,
        std_error: sqrt(jcj) / jtj,
        n_samples: n as u64,
        method: FitMethod::CumulativeLsq,
        goodness,
    })
}

/// One-sample KS statistic of sorted data against `cdf`.
pub fn ks_statistic_sorted<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    })
}

/// Asymptotic Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small arguments
        let y = -PI * PI / (8.0 * lambda * lambda);
        let cdf = sqrt(2.0 * PI) / lambda
            * (1..=8)
                .map(|j| {
                    let m = (2 * j - 1) as f64;
                    exp(m * m * y)
                })
                .sum::<f64>();
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut q = 0.0;
        let mut sign = 1.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = exp(-2.0 * jf * jf * lambda * lambda);
            q += sign * term;
            if term < 1e-18 {
                break;
            }
            sign = -sign;
        }
        (2.0 * q).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: u64,
    pub n_b: u64,
}

impl KsResult {
    /// Whether the equal-distribution hypothesis survives at level `alpha`.
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Two-sample Kolmogorov–Smirnov test. The p-value uses the asymptotic
/// Kolmogorov distribution at `(sqrt(m) + 0.12 + 0.11 / sqrt(m)) D` with
/// `m = n_a n_b / (n_a + n_b)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("both samples must be non-empty".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::param("samples", "NaN in input"));
    }
    let xa = sorted(a);
    let xb = sorted(b);
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = if xa[i] <= xb[j] { xa[i] } else { xb[j] };
        while i < na && xa[i] == x {
            i += 1;
        }
        while j < nb && xb[j] == x {
            j += 1;
        }
        d = d.max(abs(i as f64 / na as f64 - j as f64 / nb as f64));
    }
    let m = (na as f64 * nb as f64) / (na + nb) as f64;
    let sm = sqrt(m);
    let p = kolmogorov_survival((sm + 0.12 + 0.11 / sm) * d);
    Ok(KsResult {
        statistic: d,
        p_value: p,
        n_a: na as u64,
        n_b: nb as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn histogram_single_bin() {
        let h = build_histogram(&[0.31, 0.32, 0.33], 0.1, (0.0, 1.0)).unwrap();
        assert_eq!(h.counts().len(), 10);
        assert_eq!(h.counts().iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.counts()[3], 3);
    }

    #[test]
    fn histogram_edges_are_half_open() {
        let h = build_histogram(&[0.0, 0.5, 1.0], 0.5, (0.0, 1.0)).unwrap();
        assert_eq!(h.counts(), &[1, 1]);
        assert_eq!(h.edges(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn histogram_rejects_bad_arguments() {
        assert!(build_histogram(&[1.0], 0.0, (0.0, 1.0)).is_err());
        assert!(build_histogram(&[1.0], 0.1, (1.0, 1.0)).is_err());
        assert!(Histogram::from_parts(vec![0.0, 1.0], vec![1, 2]).is_err());
        assert!(Histogram::from_parts(vec![0.0, 0.0, 1.0], vec![1, 2]).is_err());
    }

    #[test]
    fn mle_on_unit_samples() {
        let f = fit_exponential_mle(&[1.0; 10]).unwrap();
        assert_eq!(f.rate_hat, 1.0);
        assert_eq!(f.method, FitMethod::Mle);
    }

    #[test]
    fn mle_rejects_short_or_degenerate_input() {
        assert!(matches!(fit_exponential_mle(&[]), Err(Error::InsufficientData(_))));
        assert!(matches!(fit_exponential_mle(&[3.0]), Err(Error::InsufficientData(_))));
        assert!(matches!(fit_exponential_mle(&[0.0, 0.0]), Err(Error::InsufficientData(_))));
        assert!(fit_exponential_mle(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn histogram_fit_needs_three_bins() {
        let h = Histogram::from_parts(vec![0.0, 1.0, 2.0, 3.0], vec![0, 50, 0]).unwrap();
        assert!(matches!(fit_exponential_histogram(&h), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn exact_exponential_table_recovers_rate() {
        let rate = 1.7;
        let n = 1e15;
        let w = 0.2;
        let edges: Vec<f64> = (0..=25).map(|k| k as f64 * w).collect();
        let counts = edges
            .windows(2)
            .map(|e| (n * (exp(-rate * e[0]) - exp(-rate * e[1]))).round() as u64)
            .collect();
        let h = Histogram::from_parts(edges, counts).unwrap();
        let f = fit_exponential_histogram(&h).unwrap();
        assert!((f.rate_hat - rate).abs() < 1e-6, "{}", f.rate_hat);
    }

    #[test]
    fn ks_identical_samples() {
        let a = [0.3, 1.2, 0.7, 2.5];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(ks_two_sample(&a, &[]).is_err());
    }

    #[test]
    fn ks_handles_ties_across_samples() {
        let r = ks_two_sample(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap();
        assert!((r.statistic - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_branches_agree_at_switch() {
        let lo = kolmogorov_survival(1.18 - 1e-12);
        let hi = kolmogorov_survival(1.18 + 1e-12);
        assert!((lo - hi).abs() < 1e-10);
        // tabulated critical values
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
    }
}
