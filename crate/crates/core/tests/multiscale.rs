use diffraxis_core::multiscale::*;
use diffraxis_core::rng;
use diffraxis_core::{Diffractogram, NoiseProfile};
use proptest::prelude::*;

/// Direct O(L²) maximum with an independent running sum per start index.
fn brute_force(r: &[f64], s: &[f64]) -> f64 {
    let mut best = 0.0_f64;
    for a in 0..r.len() {
        let mut sum = 0.0;
        for b in a..r.len() {
            sum += r[b] / s[b];
            best = best.max(sum.abs() / ((b - a + 1) as f64).sqrt());
        }
    }
    best
}

#[test]
fn max_subinterval_matches_brute_force() {
    let mut g = rng::stream(2024, 0);
    for trial in 0..1000 {
        let len = 1 + (rng::uniform(&mut g) * 200.0) as usize;
        let r: Vec<f64> = (0..len).map(|_| rng::standard_normal(&mut g) * 3.0).collect();
        let s: Vec<f64> = (0..len).map(|_| 0.5 + rng::uniform(&mut g)).collect();
        let scale = NoiseProfile::new(s.clone()).unwrap();
        let fast = max_subinterval_stat(&r, &scale).unwrap();
        let slow = max_subinterval_stat_exhaustive(&r, &scale).unwrap();
        assert_eq!(fast.value.to_bits(), slow.value.to_bits(), "trial {trial}");
        let oracle = brute_force(&r, &s);
        assert!((fast.value - oracle).abs() <= 1e-12 * oracle, "trial {trial}");
        let iv = fast.argmax;
        let w = multires_statistic(&r, iv, &scale).unwrap().abs();
        assert!((w - fast.value).abs() <= 1e-12 * fast.value);
    }
}

#[test]
fn max_subinterval_exhaustive_on_tiny_inputs() {
    // Every sign pattern of length ≤ 12 with magnitudes 1 and 2.
    for len in 1..=12usize {
        for mask in 0..(1u32 << len) {
            let r: Vec<f64> = (0..len)
                .map(|i| {
                    let mag = if (mask >> ((i * 5) % len)) & 1 == 1 { 2.0 } else { 1.0 };
                    if (mask >> i) & 1 == 1 { mag } else { -mag }
                })
                .collect();
            let unit = NoiseProfile::unit(len);
            let v = max_subinterval_stat(&r, &unit).unwrap().value;
            assert!((v - brute_force(&r, &vec![1.0; len])).abs() < 1e-12);
        }
    }
}

#[test]
fn threshold_reference_values() {
    assert!((threshold(7001, 2.5) - 4.704734).abs() < 1e-6);
    assert!((1.0 / (0.6744897501960817 * 2f64.sqrt()) - 1.04836).abs() < 1e-5);
}

#[test]
fn violating_singleton_is_listed() {
    let n = 7001;
    let mut r = vec![0.0; n];
    r[1234] = 10.0;
    let check = adequacy_check(&r, &IntervalScheme::dyadic(n), &NoiseProfile::unit(n), threshold(n, 2.5)).unwrap();
    assert!(!check.adequate);
    assert!(check.violating.contains(&diffraxis_core::Interval::new(1234, 1234)));
}

#[test]
fn dyadic_scheme_is_small_and_complete() {
    for n in [1usize, 2, 3, 7, 8, 9, 100, 1000, 7001] {
        let iv = IntervalScheme::dyadic(n).intervals();
        assert!(iv.len() <= 2 * n, "n = {n}");
        for i in 0..n {
            assert!(iv.contains(&diffraxis_core::Interval::new(i, i)));
        }
        assert!(iv.contains(&diffraxis_core::Interval::new(0, n - 1)));
        let mut w = 2;
        while w <= n {
            for k in 0..n / w {
                assert!(iv.contains(&diffraxis_core::Interval::new(k * w, k * w + w - 1)));
            }
            if n % w != 0 {
                assert!(iv.contains(&diffraxis_core::Interval::new(n - n % w, n - 1)));
            }
            w *= 2;
        }
    }
    assert_eq!(IntervalScheme::all_subintervals(10).count(), 55);
}

#[test]
fn gaussian_noise_scale_estimate() {
    let mut g = rng::stream(1, 0);
    let y: Vec<f64> = (0..10_000).map(|_| 50.0 + rng::standard_normal(&mut g)).collect();
    let x: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
    let s = global_scale_estimate(&Diffractogram::new(x, y).unwrap()).unwrap();
    assert!((s - 1.0).abs() < 0.05, "{s}");
}

#[test]
fn simulated_threshold_gives_nominal_acceptance() {
    let n = 256;
    let alpha = 0.95;
    let tau = threshold_quantile(n, SchemeKind::Dyadic, alpha, 99, 20_000).unwrap();
    let scheme = IntervalScheme::dyadic(n);
    let unit = NoiseProfile::unit(n);
    let mut g = rng::stream(12345, 0);
    let mut accepted = 0;
    for _ in 0..10_000 {
        let z: Vec<f64> = (0..n).map(|_| rng::standard_normal(&mut g)).collect();
        if adequacy_check(&z, &scheme, &unit, tau).unwrap().adequate {
            accepted += 1;
        }
    }
    assert!(accepted as f64 / 1e4 >= alpha - 0.02, "{accepted}");
}

#[test]
fn single_point_critical_value() {
    let c = threshold_quantile(1, SchemeKind::AllSubintervals, 0.95, 7, 100_000).unwrap();
    assert!((c - 1.96).abs() < 0.02, "{c}");
}

#[test]
fn critical_values_increase_with_length() {
    let c = subinterval_critical_values(200, 0.95, 11, 20_000).unwrap();
    // Entry L − 1 belongs to length L.
    assert_eq!(c.len(), 200);
    for l in 1..200 {
        assert!(c[l] >= c[l - 1], "L = {}", l + 1);
    }
    let again = subinterval_critical_values(200, 0.95, 11, 20_000).unwrap();
    assert_eq!(c, again);
    // The nested table agrees with independent per-length simulation up to
    // Monte Carlo error.
    for l in [5usize, 40, 150] {
        let direct = threshold_quantile(l, SchemeKind::AllSubintervals, 0.95, 5, 20_000).unwrap();
        assert!((direct - c[l - 1]).abs() < 0.05, "L = {l}: {direct} vs {}", c[l - 1]);
    }
}

#[test]
fn tau_decreases_toward_two() {
    let tau: Vec<f64> = [100usize, 1000, 10_000]
        .iter()
        .map(|&n| {
            let q = threshold_quantile(n, SchemeKind::Dyadic, 0.95, 3, 4000).unwrap();
            q * q / (n as f64).ln()
        })
        .collect();
    assert!(tau[0] > tau[1] && tau[1] > tau[2], "{tau:?}");
    assert!(tau[2] > 2.0 && tau[2] < 3.0, "{tau:?}");
}

proptest! {
    #[test]
    fn statistic_is_linear_and_scale_free(
        r in prop::collection::vec(-10.0f64..10.0, 1..40),
        c in 0.1f64..10.0,
    ) {
        let n = r.len();
        let unit = NoiseProfile::unit(n);
        let iv = diffraxis_core::Interval::new(0, n - 1);
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let a = multires_statistic(&r, iv, &unit).unwrap();
        prop_assert!((multires_statistic(&neg, iv, &unit).unwrap() + a).abs() < 1e-12);
        let scaled: Vec<f64> = r.iter().map(|v| c * v).collect();
        let cs = NoiseProfile::constant(n, c).unwrap();
        prop_assert!((multires_statistic(&scaled, iv, &cs).unwrap() - a).abs() < 1e-9);
        let m1 = max_subinterval_stat(&r, &unit).unwrap().value;
        let m2 = max_subinterval_stat(&scaled, &cs).unwrap().value;
        prop_assert!((m1 - m2).abs() < 1e-9 * (1.0 + m1));
    }

    #[test]
    fn adequacy_is_monotone_in_threshold(
        r in prop::collection::vec(-5.0f64..5.0, 1..64),
        t in 0.1f64..5.0,
        extra in 0.0f64..3.0,
    ) {
        let n = r.len();
        let scheme = IntervalScheme::dyadic(n);
        let unit = NoiseProfile::unit(n);
        if adequacy_check(&r, &scheme, &unit, t).unwrap().adequate {
            prop_assert!(adequacy_check(&r, &scheme, &unit, t + extra).unwrap().adequate);
        }
    }
}
