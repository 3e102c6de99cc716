//! Synthetic diffractograms with known decomposition.

use diffraxis_core::peak_fit::{pearson_eval, PearsonComponent};
use diffraxis_core::{rng, Diffractogram};

/// Truth behind a synthetic scan.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub data: Diffractogram,
    pub baseline: Vec<f64>,
    pub signal: Vec<f64>,
    pub components: Vec<PearsonComponent>,
}

/// Grid `lo, lo + step, …, hi`.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize + 1;
    (0..n).map(|i| lo + step * i as f64).collect()
}

/// Adds Gaussian noise with standard deviation `max(floor, √f)`, clamping
/// counts at zero.
pub fn synthesize(
    angles: Vec<f64>,
    baseline: impl Fn(f64) -> f64,
    components: Vec<PearsonComponent>,
    floor: f64,
    seed: u64,
) -> Synthetic {
    let mut g = rng::stream(seed, 0xF1);
    let base: Vec<f64> = angles.iter().map(|&t| baseline(t)).collect();
    let signal: Vec<f64> = angles
        .iter()
        .zip(&base)
        .map(|(&t, &b)| b + components.iter().map(|c| pearson_eval(t, c)).sum::<f64>())
        .collect();
    let counts = signal
        .iter()
        .map(|&f| (f + floor.max(f.max(0.0).sqrt()) * rng::standard_normal(&mut g)).max(0.0))
        .collect();
    Synthetic {
        data: Diffractogram::new(angles, counts).expect("synthetic grid is valid"),
        baseline: base,
        signal,
        components,
    }
}

/// Three kernels modelled on reflections of indium tin oxide on a sloped
/// background, 7001 points on [15°, 85°].
pub fn three_peaks(seed: u64) -> Synthetic {
    let kernel = |gamma: f64, mu: f64, m: f64, fwhm: f64| PearsonComponent {
        gamma,
        mu,
        m,
        a: PearsonComponent::a_from_fwhm(fwhm, m),
    };
    synthesize(
        grid(15.0, 85.0, 0.01),
        |t| 80.0 + 0.5 * t,
        vec![
            kernel(324.0, 30.4, 7.2, 0.27),
            kernel(200.0, 35.4, 3.5, 0.29),
            kernel(150.0, 50.8, 2.0, 0.30),
        ],
        7.0,
        seed,
    )
}

/// Flat background of 50 counts with no peaks.
pub fn flat_noise(seed: u64) -> Synthetic {
    synthesize(grid(15.0, 85.0, 0.01), |_| 50.0, Vec::new(), 7.0, seed)
}

/// Two-column text as accepted by [`crate::parse_str`].
pub fn to_text(d: &Diffractogram) -> String {
    let mut s = String::from("# two_theta counts\n");
    for (t, y) in d.angles().iter().zip(d.counts()) {
        s.push_str(&format!("{t:.2} {y:.3}\n"));
    }
    s
}
