//! Quasi-Newton minimization with an inverse-Hessian BFGS update and
//! backtracking (Armijo) line search.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BfgsConfig {
    /// Stop once the largest gradient component is below this.
    pub gtol: f64,
    pub max_iterations: usize,
    /// Relative decrease per iteration regarded as stagnation.
    pub ftol: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        Self {
            gtol: 1e-8,
            max_iterations: 500,
            ftol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Gradient tolerance reached or progress stalled at a point.
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const STALL_ITERATIONS: usize = 3;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Minimizes `f`, which returns the value and writes the gradient into its
/// second argument. Non-finite values are treated as failed trial steps.
pub fn minimize(mut f: impl FnMut(&[f64], &mut [f64]) -> f64, x0: Vec<f64>, config: &BfgsConfig) -> Minimum {
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut h = identity(n);
    let mut fresh = true;
    let mut stalled = 0;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut iterations = 0;

    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Minimum {
            grad_norm: f64::INFINITY,
            x,
            f: fx,
            iterations,
            converged: false,
        };
    }

    while iterations < config.max_iterations {
        if inf_norm(&g) < config.gtol {
            return done(x, fx, &g, iterations, true);
        }
        iterations += 1;
        for i in 0..n {
            p[i] = -dot(&h[i * n..(i + 1) * n], &g);
        }
        let mut slope = dot(&g, &p);
        if !(slope < 0.0) {
            h = identity(n);
            fresh = true;
            for i in 0..n {
                p[i] = -g[i];
            }
            slope = dot(&g, &p);
        }
        let mut step = if fresh { 1.0_f64.min(1.0 / libm::sqrt(dot(&g, &g))) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            for i in 0..n {
                x_new[i] = x[i] + step * p[i];
            }
            let f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && g_new.iter().all(|v| v.is_finite()) && f_new <= fx + ARMIJO * step * slope {
                accepted = Some(f_new);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            if fresh {
                return done(x, fx, &g, iterations, false);
            }
            h = identity(n);
            fresh = true;
            continue;
        };

        let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * libm::sqrt(dot(&s, &s) * dot(&y, &y)) {
            if fresh {
                let scale = sy / dot(&y, &y);
                for i in 0..n {
                    h[i * n + i] = scale;
                }
            }
            update_inverse_hessian(&mut h, &s, &y, sy);
            fresh = false;
        }

        if fx - f_new <= config.ftol * fx.abs() {
            stalled += 1;
        } else {
            stalled = 0;
        }
        core::mem::swap(&mut x, &mut x_new);
        core::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        if stalled >= STALL_ITERATIONS {
            return done(x, fx, &g, iterations, true);
        }
    }
    let converged = inf_norm(&g) < config.gtol;
    done(x, fx, &g, iterations, converged)
}

fn done(x: Vec<f64>, f: f64, g: &[f64], iterations: usize, converged: bool) -> Minimum {
    Minimum {
        x,
        f,
        grad_norm: inf_norm(g),
        iterations,
        converged,
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ` with `ρ = 1/(yᵀs)`.
fn update_inverse_hessian(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let m = minimize(
            |x, g| {
                let (a, b) = (1.0 - x[0], x[1] - x[0] * x[0]);
                g[0] = -2.0 * a - 400.0 * x[0] * b;
                g[1] = 200.0 * b;
                a * a + 100.0 * b * b
            },
            vec![-1.2, 1.0],
            &BfgsConfig::default(),
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn quadratic_in_few_steps() {
        let m = minimize(
            |x, g| {
                g[0] = 2.0 * (x[0] - 3.0);
                g[1] = 20.0 * (x[1] + 1.0);
                (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2)
            },
            vec![0.0, 0.0],
            &BfgsConfig::default(),
        );
        assert!(m.converged && m.iterations < 30);
        assert!((m.x[0] - 3.0).abs() < 1e-8 && (m.x[1] + 1.0).abs() < 1e-8);
    }
}
