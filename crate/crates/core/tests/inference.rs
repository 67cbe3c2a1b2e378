use pairemit_core::inference::*;
use pairemit_core::rng::{Domain, Substream};

fn exp_samples(rate: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut s = Substream::new(seed, Domain::Emission, 0);
    (0..n).map(|_| s.exponential(rate)).collect()
}

#[test]
fn mle_within_three_standard_errors() {
    for (rate, seed) in [(1.0, 1), (2.0, 2), (6.25e8, 3)] {
        let xs = exp_samples(rate, 100_000, seed);
        let fit = fit_exponential_mle(&xs).unwrap();
        assert_eq!(fit.method, FitMethod::Mle);
        assert_eq!(fit.n_samples, 100_000);
        assert!((fit.rate_hat - rate).abs() < 3.0 * fit.std_error, "{fit:?}");
        assert!((fit.std_error - fit.rate_hat / (100_000f64).sqrt()).abs() < 1e-12 * rate);
        assert!(fit.goodness < 0.01);
    }
}

#[test]
fn histogram_fit_agrees_with_mle() {
    let rate = 2.0;
    let xs = exp_samples(rate, 200_000, 10);
    let mle = fit_exponential_mle(&xs).unwrap();
    let h = build_histogram(&xs, 0.02, (0.0, 3.0)).unwrap();
    let lsq = fit_exponential_histogram(&h).unwrap();
    assert_eq!(lsq.method, FitMethod::HistogramLsq);
    let joint = (mle.std_error.powi(2) + lsq.std_error.powi(2)).sqrt();
    assert!((lsq.rate_hat - mle.rate_hat).abs() < 2.0 * joint, "{lsq:?} {mle:?}");
    assert!((lsq.rate_hat - rate).abs() < 3.0 * lsq.std_error);
    // reduced chi-square of a correct model sits near one
    assert!(lsq.goodness > 0.7 && lsq.goodness < 1.4, "{}", lsq.goodness);
}

#[test]
fn cumulative_fit_recovers_rate() {
    let rate = 1.0;
    let xs = exp_samples(rate, 100_000, 4);
    let fit = fit_cumulative_exponential(&xs, 200).unwrap();
    assert_eq!(fit.method, FitMethod::CumulativeLsq);
    assert!((fit.rate_hat - rate).abs() < 3.0 * fit.std_error, "{fit:?}");
    // not more efficient than the MLE
    let mle = fit_exponential_mle(&xs).unwrap();
    assert!(fit.std_error >= 0.99 * mle.std_error);
}

#[test]
fn standard_error_scales_as_inverse_sqrt_n() {
    let small = fit_exponential_mle(&exp_samples(1.0, 10_000, 5)).unwrap();
    let large = fit_exponential_mle(&exp_samples(1.0, 160_000, 6)).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
}

#[test]
fn rates_scale_inversely_with_time_units() {
    let xs = exp_samples(1.0, 50_000, 7);
    let c = 1.6e-9;
    let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
    let a = fit_exponential_mle(&xs).unwrap();
    let b = fit_exponential_mle(&scaled).unwrap();
    assert!((b.rate_hat * c / a.rate_hat - 1.0).abs() < 1e-12);
    let ha = fit_exponential_histogram(&build_histogram(&xs, 0.05, (0.0, 5.0)).unwrap()).unwrap();
    let hb =
        fit_exponential_histogram(&build_histogram(&scaled, 0.05 * c, (0.0, 5.0 * c)).unwrap()).unwrap();
    assert!((hb.rate_hat * c / ha.rate_hat - 1.0).abs() < 1e-9);
}

#[test]
fn second_stage_waits_recover_second_rate() {
    let (gf, gs) = (2.0, 1.0);
    let mut s = Substream::new(77, Domain::Emission, 3);
    let pairs: Vec<(f64, f64)> = (0..100_000)
        .map(|_| {
            let t_f = s.exponential(gf);
            (t_f, t_f + s.exponential(gs))
        })
        .collect();
    let gaps: Vec<f64> = pairs.iter().map(|(a, b)| b - a).collect();
    let firsts: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let fg = fit_exponential_mle(&gaps).unwrap();
    let ff = fit_exponential_mle(&firsts).unwrap();
    assert!((fg.rate_hat - gs).abs() < 3.0 * fg.std_error);
    assert!((ff.rate_hat - gf).abs() < 3.0 * ff.std_error);
    // |t_s - t_f| as a two-sided fit is the same number
    let signed: Vec<f64> = gaps.iter().enumerate().map(|(i, g)| if i % 2 == 0 { *g } else { -g }).collect();
    let two = fit_two_sided_exponential(&signed).unwrap();
    assert!((two.rate_hat - fg.rate_hat).abs() < 1e-12);
}

#[test]
fn ks_detects_different_rates() {
    let a = exp_samples(1.0, 20_000, 8);
    let b = exp_samples(1.1, 20_000, 9);
    let r = ks_two_sample(&a, &b).unwrap();
    assert!(!r.passes(0.01), "{r:?}");
    assert_eq!((r.n_a, r.n_b), (20_000, 20_000));
}

#[test]
fn ks_power_against_threefold_rate() {
    let a = exp_samples(1.0, 10_000, 31);
    let b = exp_samples(3.0, 10_000, 32);
    assert!(ks_two_sample(&a, &b).unwrap().p_value < 1e-6);
}

#[test]
fn constant_unit_samples_give_unit_rate() {
    let fit = fit_exponential_mle(&[1.0; 10]).unwrap();
    assert_eq!(fit.rate_hat, 1.0);
}

#[test]
fn histogram_fit_is_exact_on_tabulated_curve() {
    let g = 1.7;
    let w = 0.05;
    let edges: Vec<f64> = (0..=80).map(|k| k as f64 * w).collect();
    // counts proportional to the density at the bin center, scaled so that
    // rounding to integers stays far below the tolerance
    let counts: Vec<u64> = edges
        .windows(2)
        .map(|e| (1e15 * g * (-g * 0.5 * (e[0] + e[1])).exp()).round() as u64)
        .collect();
    let fit = fit_exponential_histogram(&Histogram::from_parts(edges, counts).unwrap()).unwrap();
    assert!((fit.rate_hat - g).abs() < 1e-6, "{}", fit.rate_hat);
}

#[test]
fn histogram_fit_needs_three_bins() {
    let h = Histogram::from_parts(vec![0.0, 1.0, 2.0, 3.0], vec![0, 50, 0]).unwrap();
    assert!(matches!(
        fit_exponential_histogram(&h),
        Err(pairemit_core::Error::InsufficientData(_))
    ));
}

#[test]
fn error_shrinks_with_sample_size() {
    let g_f = 2.0;
    let mut last = f64::INFINITY;
    for (k, n) in [1_000usize, 10_000, 100_000, 1_000_000].into_iter().enumerate() {
        let fit = fit_exponential_mle(&exp_samples(g_f, n, 50 + k as u64)).unwrap();
        assert!((fit.rate_hat - g_f).abs() < 3.0 * fit.std_error);
        let relative = fit.std_error / fit.rate_hat;
        assert!((relative * (n as f64).sqrt() - 1.0).abs() < 1e-12);
        assert!(relative < last);
        last = relative;
    }
}

#[test]
fn ks_false_rejection_rate_is_calibrated() {
    let mut passes = 0;
    for rep in 0..200u64 {
        let a = exp_samples(1.0, 2_000, 1_000 + 2 * rep);
        let b = exp_samples(1.0, 3_000, 1_001 + 2 * rep);
        if ks_two_sample(&a, &b).unwrap().passes(0.01) {
            passes += 1;
        }
    }
    // expected 198; binomial sd is about 1.4
    assert!(passes >= 194, "{passes}");
}

#[test]
fn kolmogorov_survival_reference_values() {
    // tabulated critical values of the Kolmogorov distribution
    for (lambda, p) in [(1.2238, 0.10), (1.3581, 0.05), (1.6276, 0.01), (0.8276, 0.50)] {
        assert!((kolmogorov_survival(lambda) - p).abs() < 2e-4, "{lambda}");
    }
    // both branches agree where they meet
    let l = 1.18;
    assert!((kolmogorov_survival(l - 1e-12) - kolmogorov_survival(l)).abs() < 1e-10);
    assert_eq!(kolmogorov_survival(0.0), 1.0);
}

#[test]
fn ks_handles_ties_and_identical_samples() {
    let a = vec![1.0, 1.0, 2.0, 3.0];
    let r = ks_two_sample(&a, &a).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert_eq!(r.p_value, 1.0);
    let r = ks_two_sample(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
    assert_eq!(r.statistic, 1.0);
}

#[test]
fn histogram_binning_is_half_open() {
    let h = build_histogram(&[0.0, 0.1, 0.2, 0.25, 0.3, 1.0], 0.1, (0.0, 0.3)).unwrap();
    assert_eq!(h.edges().len(), 4);
    assert_eq!(h.counts(), &[1, 1, 2]);
    assert_eq!(h.total(), 4);
    assert!(Histogram::from_parts(vec![0.0, 1.0], vec![1, 2]).is_err());
    assert!(build_histogram(&[1.0], 0.0, (0.0, 1.0)).is_err());
}

#[test]
fn degenerate_inputs_rejected() {
    assert!(matches!(fit_exponential_mle(&[]), Err(pairemit_core::Error::InsufficientData(_))));
    assert!(fit_exponential_mle(&[1.0]).is_err());
    assert!(fit_exponential_mle(&[0.0, 0.0]).is_err());
    assert!(fit_exponential_mle(&[1.0, -1.0]).is_err());
    assert!(ks_two_sample(&[], &[1.0]).is_err());
}
