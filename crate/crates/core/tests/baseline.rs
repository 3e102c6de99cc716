use diffraxis_core::baseline::*;
use diffraxis_core::multiscale::{self, IntervalScheme};
use diffraxis_core::taut_string::{denoise_two_pass, DenoiseConfig, StepFunction};
use diffraxis_core::weighted_spline::{fit_adaptive_weights, smoothing_spline, AdaptiveSplineConfig, WeightVector};
use diffraxis_core::{rng, Diffractogram, NoiseProfile};

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize + 1;
    (0..n).map(|i| lo + step * i as f64).collect()
}

fn gaussian(t: f64, mu: f64, fwhm: f64, height: f64) -> f64 {
    let s = fwhm / (2.0 * (2.0 * 2f64.ln()).sqrt());
    height * (-0.5 * ((t - mu) / s).powi(2)).exp()
}

fn noisy(truth: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut g = rng::stream(seed, 31);
    truth.iter().map(|&f| f + sigma * rng::standard_normal(&mut g)).collect()
}

struct Stages {
    d: Diffractogram,
    scale: NoiseProfile,
    intervals: Vec<PeakInterval>,
}

fn stages(x: Vec<f64>, y: Vec<f64>) -> Stages {
    let d = Diffractogram::new(x, y).unwrap();
    let den = denoise_two_pass(&d, &DenoiseConfig::default()).unwrap();
    let n = d.len();
    let spl = fit_adaptive_weights(
        d.angles(),
        d.counts(),
        &den.scale,
        &IntervalScheme::dyadic(n),
        multiscale::threshold(n, 2.5),
        &AdaptiveSplineConfig::default(),
    )
    .unwrap();
    let intervals = peak_intervals(&den.fit, &spl.spline).unwrap();
    Stages {
        d,
        scale: den.scale,
        intervals,
    }
}

fn check_nesting(p: &PeakInterval) {
    assert!(p.left_outer <= p.left_inner && p.left_inner <= p.anchor);
    assert!(p.anchor <= p.right_inner && p.right_inner <= p.right_outer);
    assert!(p.width() <= MAX_WIDTH + 1e-9);
    assert!(p.len() >= MIN_POINTS);
}

#[test]
fn flat_step_function_has_no_intervals() {
    let x = grid(20.0, 30.0, 0.1);
    let y = vec![50.0; x.len()];
    let spl = smoothing_spline(&x, &y, &WeightVector::uniform(x.len(), 1.0).unwrap()).unwrap();
    let ts = StepFunction {
        knots: vec![0, x.len()],
        walls: vec![diffraxis_core::taut_string::Wall::Pinned; 2],
        values: vec![50.0],
        slopes: vec![50.0],
    };
    assert!(peak_intervals(&ts, &spl.spline).unwrap().is_empty());
}

#[test]
fn single_bump_gives_one_interval() {
    let x = grid(20.0, 40.0, 0.01);
    for seed in 0..5 {
        let truth: Vec<f64> = x.iter().map(|&t| 100.0 + gaussian(t, 30.0, 0.3, 300.0)).collect();
        let s = stages(x.clone(), noisy(&truth, 3.0, seed));
        assert_eq!(s.intervals.len(), 1, "seed {seed}");
        let p = &s.intervals[0];
        check_nesting(p);
        assert!(p.left_outer < 30.0 && 30.0 < p.right_outer);
        assert!(p.width() < 5.0);
        assert!((p.anchor - 30.0).abs() < 0.05);
    }
}

#[test]
fn wide_bump_is_capped() {
    let x = grid(10.0, 50.0, 0.01);
    let truth: Vec<f64> = x.iter().map(|&t| 100.0 + gaussian(t, 30.0, 8.0, 400.0)).collect();
    let s = stages(x, noisy(&truth, 2.0, 7));
    assert_eq!(s.intervals.len(), 1);
    let p = &s.intervals[0];
    check_nesting(p);
    assert!(p.truncated);
    assert!((p.width() - MAX_WIDTH).abs() < 1e-9, "width {}", p.width());
}

#[test]
fn intervals_ignore_added_constant() {
    let x = grid(20.0, 40.0, 0.01);
    let truth: Vec<f64> = x
        .iter()
        .map(|&t| 80.0 + gaussian(t, 26.0, 0.3, 200.0) + gaussian(t, 33.0, 0.4, 120.0))
        .collect();
    let y = noisy(&truth, 4.0, 3);
    let s = stages(x.clone(), y.clone());
    assert_eq!(s.intervals.len(), 2);

    // Same weights and a shifted step function: only the derivative matters.
    let d = Diffractogram::new(x.clone(), y.clone()).unwrap();
    let den = denoise_two_pass(&d, &DenoiseConfig::default()).unwrap();
    let fit = fit_adaptive_weights(
        &x,
        &y,
        &den.scale,
        &IntervalScheme::dyadic(x.len()),
        multiscale::threshold(x.len(), 2.5),
        &AdaptiveSplineConfig::default(),
    )
    .unwrap();
    for c in [-50.0, 37.5, 1000.0] {
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let spl = smoothing_spline(&x, &shifted, &fit.weights).unwrap().spline;
        let mut ts = den.fit.clone();
        ts.values.iter_mut().for_each(|v| *v += c);
        ts.slopes.iter_mut().for_each(|v| *v += c);
        let a = peak_intervals(&den.fit, &fit.spline).unwrap();
        let b = peak_intervals(&ts, &spl).unwrap();
        let bounds = |v: &[PeakInterval]| v.iter().map(|p| (p.start, p.end, p.anchor_index)).collect::<Vec<_>>();
        assert_eq!(bounds(&a), bounds(&b), "shift {c}");
    }
}

#[test]
fn baseline_ignores_data_inside_intervals() {
    let x = grid(20.0, 40.0, 0.01);
    let truth: Vec<f64> = x.iter().map(|&t| 100.0 + gaussian(t, 30.0, 0.3, 300.0)).collect();
    let s = stages(x, noisy(&truth, 3.0, 11));
    let cfg = BaselineConfig::default();
    let a = baseline_fit(&s.d, &s.intervals, &s.scale, &cfg).unwrap();
    let mut y = s.d.counts().to_vec();
    let p = &s.intervals[0];
    for v in &mut y[p.start + 1..p.end] {
        *v = 1e4 - *v;
    }
    let d2 = Diffractogram::new(s.d.angles().to_vec(), y).unwrap();
    let b = baseline_fit(&d2, &s.intervals, &s.scale, &cfg).unwrap();
    for &t in s.d.angles() {
        assert_eq!(a.spline.value(t).to_bits(), b.spline.value(t).to_bits());
    }
}

#[test]
fn constant_data_gives_constant_baseline() {
    let x = grid(15.0, 25.0, 0.02);
    let d = Diffractogram::new(x.clone(), vec![42.0; x.len()]).unwrap();
    let scale = NoiseProfile::constant(x.len(), 1.0).unwrap();
    let fit = baseline_fit(&d, &[], &scale, &BaselineConfig::default()).unwrap();
    for &t in &x {
        assert!((fit.spline.value(t) - 42.0).abs() < 1e-6);
    }
}

#[test]
fn baseline_rejects_full_coverage() {
    let x = grid(0.0, 1.0, 0.25);
    let d = Diffractogram::new(x.clone(), vec![1.0; 5]).unwrap();
    let p = PeakInterval {
        start: 0,
        end: 4,
        anchor_index: 2,
        anchor: 0.5,
        left_outer: 0.0,
        left_inner: 0.25,
        right_inner: 0.75,
        right_outer: 1.0,
        truncated: false,
        merged_anchors: vec![],
    };
    let scale = NoiseProfile::unit(5);
    assert!(baseline_fit(&d, &[p], &scale, &BaselineConfig::default()).is_err());
}

#[test]
fn smooth_baseline_is_recovered() {
    let x = grid(15.0, 85.0, 0.02);
    let sigma = 3.0;
    let truth: Vec<f64> = x.iter().map(|&t| 100.0 + 20.0 * (t / 20.0).sin()).collect();
    let runs = 20;
    let mut good = 0;
    for seed in 0..runs {
        let d = Diffractogram::new(x.clone(), noisy(&truth, sigma, 100 + seed)).unwrap();
        let scale = NoiseProfile::constant(x.len(), sigma).unwrap();
        let fit = baseline_fit(&d, &[], &scale, &BaselineConfig::default()).unwrap();
        let err = x
            .iter()
            .zip(&truth)
            .map(|(&t, &b)| (fit.spline.value(t) - b).abs())
            .fold(0.0, f64::max);
        good += usize::from(err <= 3.0 * sigma);
    }
    assert!(good * 10 >= runs as usize * 9, "{good}/{runs}");
}

#[test]
fn baseline_under_three_peaks() {
    let x = grid(15.0, 85.0, 0.01);
    let sigma = 7.0;
    let base = |t: f64| 80.0 + 0.5 * t;
    let truth: Vec<f64> = x
        .iter()
        .map(|&t| {
            base(t) + gaussian(t, 30.4, 0.27, 300.0) + gaussian(t, 35.4, 0.29, 180.0) + gaussian(t, 50.8, 0.3, 140.0)
        })
        .collect();
    let runs = 10;
    let mut good = 0;
    for seed in 0..runs {
        let s = stages(x.clone(), noisy(&truth, sigma, 200 + seed));
        if s.intervals.len() != 3 {
            continue;
        }
        s.intervals.iter().for_each(check_nesting);
        let fit = baseline_fit(&s.d, &s.intervals, &s.scale, &BaselineConfig::default()).unwrap();
        let ok = s.intervals.iter().all(|p| {
            (p.start..=p.end).all(|i| (fit.spline.value(x[i]) - base(x[i])).abs() <= 5.0 * sigma)
        });
        good += usize::from(ok);
    }
    assert!(good * 10 >= runs as usize * 9, "{good}/{runs}");
}
