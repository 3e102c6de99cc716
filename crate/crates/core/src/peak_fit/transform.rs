//! Map between unconstrained optimizer coordinates and bounded model
//! parameters.
//!
//! Layout of the raw vector for `k` components (length `2 + 4k`):
//! `[θβ₀, θβ₁, φ₁ … φ_k, (ln γ, ln a, ln(m − 1)) × k]`.
//! `β = d · tanh θ`; the locations use ordered spacings: with
//! `c = (0, φ₁, φ₁ + φ₂, …)` and `s = softmax(c)` (k + 1 spacings),
//! `μ_i = t_lo + (t_hi − t_lo) Σ_{p ≤ i} s_p`, so `φ_p = ln(s_p / s_{p−1})`.

use alloc::vec;
use alloc::vec::Vec;

use super::PearsonComponent;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub beta0: f64,
    pub beta1: f64,
    /// Sorted by location.
    pub components: Vec<PearsonComponent>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamTransform {
    pub k: usize,
    /// Open interval the locations live in.
    pub lo: f64,
    pub hi: f64,
    /// Intercept bound `d₀`.
    pub d0: f64,
    /// Slope bound `d₁`.
    pub d1: f64,
}

impl ParamTransform {
    pub fn new(k: usize, lo: f64, hi: f64, d0: f64, d1: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("at least one component is required"));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput("location range must be a finite interval"));
        }
        if !(d0 > 0.0) || !(d1 > 0.0) {
            return Err(Error::InvalidInput("tilt bounds must be positive"));
        }
        Ok(Self { k, lo, hi, d0, d1 })
    }

    pub fn dim(&self) -> usize {
        2 + 4 * self.k
    }

    /// Spacings `s_0 … s_k` for the raw location block.
    pub(crate) fn spacings(&self, phi: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.k + 1];
        for p in 1..=self.k {
            c[p] = c[p - 1] + phi[p - 1];
        }
        let top = c.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut total = 0.0;
        for v in &mut c {
            *v = libm::exp(*v - top);
            total += *v;
        }
        for v in &mut c {
            *v /= total;
        }
        c
    }

    pub fn forward(&self, raw: &[f64]) -> Params {
        let k = self.k;
        let s = self.spacings(&raw[2..2 + k]);
        let width = self.hi - self.lo;
        let mut acc = 0.0;
        let components = (0..k)
            .map(|i| {
                acc += s[i];
                let b = 2 + k + 3 * i;
                PearsonComponent {
                    gamma: libm::exp(raw[b]),
                    mu: self.lo + width * acc,
                    m: 1.0 + libm::exp(raw[b + 2]),
                    a: libm::exp(raw[b + 1]),
                }
            })
            .collect();
        Params {
            beta0: self.d0 * libm::tanh(raw[0]),
            beta1: self.d1 * libm::tanh(raw[1]),
            components,
        }
    }

    pub fn inverse(&self, p: &Params) -> Result<Vec<f64>> {
        let k = self.k;
        if p.components.len() != k {
            return Err(Error::InvalidInput("component count does not match the transform"));
        }
        if !(p.beta0.abs() < self.d0) || !(p.beta1.abs() < self.d1) {
            return Err(Error::Domain("tilt outside its bounds"));
        }
        let mut raw = vec![0.0; self.dim()];
        raw[0] = libm::atanh(p.beta0 / self.d0);
        raw[1] = libm::atanh(p.beta1 / self.d1);
        let width = self.hi - self.lo;
        let mut prev = self.lo;
        let mut log_s = Vec::with_capacity(k + 1);
        for c in &p.components {
            if !(c.mu > prev) {
                return Err(Error::Domain("locations must increase strictly inside the range"));
            }
            log_s.push(libm::log((c.mu - prev) / width));
            prev = c.mu;
        }
        if !(self.hi > prev) {
            return Err(Error::Domain("locations must increase strictly inside the range"));
        }
        log_s.push(libm::log((self.hi - prev) / width));
        for q in 0..k {
            raw[2 + q] = log_s[q + 1] - log_s[q];
        }
        for (i, c) in p.components.iter().enumerate() {
            if !(c.gamma > 0.0) || !(c.a > 0.0) || !(c.m > 1.0) {
                return Err(Error::Domain("component needs gamma > 0, a > 0, m > 1"));
            }
            let b = 2 + k + 3 * i;
            raw[b] = libm::log(c.gamma);
            raw[b + 1] = libm::log(c.a);
            raw[b + 2] = libm::log(c.m - 1.0);
        }
        Ok(raw)
    }
}
