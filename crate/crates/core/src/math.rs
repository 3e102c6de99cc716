//! Special functions needed by the criteria: the standard normal quantile,
//! regularized incomplete gamma functions and chi-square quantiles.
//!
//! Everything is built on `libm` so the crate stays `no_std`.

use alloc::vec::Vec;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// `Φ⁻¹(0.75)`, the quartile of the standard normal distribution.
pub const NORMAL_Q75: f64 = 0.674_489_750_196_081_7;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Inverse of the standard normal CDF.
///
/// Rational approximation followed by one Halley step against `erfc`, which
/// brings the result to full double precision.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log1p(-p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    let e = normal_cdf(x) - p;
    let u = e * SQRT_2PI * libm::exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Series for P(a, x), valid for x < a + 1.
fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..100_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * libm::exp(-x + a * libm::log(x) - ln_gamma(a))
}

/// Continued fraction for Q(a, x), valid for x ≥ a + 1 (modified Lentz).
fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    libm::exp(-x + a * libm::log(x) - ln_gamma(a)) * h
}

/// Regularized lower incomplete gamma function P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma function Q(a, x) = 1 − P(a, x),
/// computed without cancellation in the upper tail.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

pub fn chisq_cdf(x: f64, dof: f64) -> f64 {
    gamma_p(0.5 * dof, 0.5 * x)
}

pub fn chisq_pdf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * dof;
    libm::exp((a - 1.0) * libm::log(x) - 0.5 * x - a * core::f64::consts::LN_2 - ln_gamma(a))
}

/// Chi-square quantile: the `x` with `P(χ²_dof ≤ x) = p`.
pub fn chisq_quantile(p: f64, dof: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        invert_chisq(1.0 - p, dof, true)
    } else {
        invert_chisq(p, dof, false)
    }
}

/// Upper chi-square quantile: the `x` with `P(χ²_dof > x) = q`.
///
/// Prefer this over `chisq_quantile(1 - q, dof)` when `q` is tiny.
pub fn chisq_upper_quantile(q: f64, dof: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return 0.0;
    }
    if q < 0.5 {
        invert_chisq(q, dof, true)
    } else {
        invert_chisq(1.0 - q, dof, false)
    }
}

/// Solves `P(a, x/2) = target` (or `Q(a, x/2) = target` for the upper tail)
/// by safeguarded Newton iteration inside a shrinking bracket.
fn invert_chisq(target: f64, dof: f64, upper: bool) -> f64 {
    let a = 0.5 * dof;
    let z = if upper {
        -normal_quantile(target)
    } else {
        normal_quantile(target)
    };
    let c = 2.0 / (9.0 * dof);
    let wh = 1.0 - c + z * libm::sqrt(c);
    let mut x = dof * wh * wh * wh;
    if !(x > 0.0) || !x.is_finite() {
        // Lower tail for small x: P ≈ (x/2)^a / Γ(a + 1).
        x = 2.0 * libm::exp((libm::log(target) + ln_gamma(a + 1.0)) / a);
        if !(x > 0.0) {
            x = 1e-300;
        }
    }

    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    for _ in 0..400 {
        let value = if upper {
            gamma_q(a, 0.5 * x)
        } else {
            gamma_p(a, 0.5 * x)
        };
        let diff = value - target;
        if diff == 0.0 {
            return x;
        }
        // Both tails are written as increasing functions of x.
        let (signed_diff, slope) = if upper {
            (-diff, chisq_pdf(x, dof))
        } else {
            (diff, chisq_pdf(x, dof))
        };
        if signed_diff < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - signed_diff / slope;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if hi.is_finite() {
            if lo > 0.0 {
                libm::sqrt(lo * hi)
            } else {
                0.5 * hi
            }
        } else {
            2.0 * x
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x {
            return next;
        }
        if hi.is_finite() && lo > 0.0 && (hi - lo) <= 4.0 * f64::EPSILON * hi {
            return next;
        }
        x = next;
    }
    x
}

/// Median of a slice; the mean of the two central order statistics for even
/// lengths. Returns `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    })
}

/// Empirical quantile (inverse of the empirical CDF) of already sorted data.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = libm::ceil(level * n as f64) as usize;
    sorted[rank.clamp(1, n) - 1]
}
