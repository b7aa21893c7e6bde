//! Seeded random inputs for the verification suites.
//!
//! Item `i` of a corpus with seed `s` is drawn from its own generator
//! `draw_rng(s, i)`, so a corpus can be built in parallel and any single
//! item rebuilt without the others.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::darboux::mobius_angle;
use crate::error::Result;
use crate::gaussian::{draw_rng, MarkedConfig};
use crate::params::OrbitParams;
use crate::qpfunc::{PeriodicFn, QuasiPeriodicFn};

/// Highest harmonic in random diffeos and tangents.
pub const MAX_MODE: usize = 4;

/// Bound on `Σ k(|a_k| + |b_k|)`, hence `f' ≥ 1 − MAX_DISTORTION`.
pub const MAX_DISTORTION: f64 = 0.9;

pub fn item_rng(seed: u64, index: usize) -> ChaCha8Rng {
    draw_rng(seed, index as u64)
}

/// Random `(a_k, b_k)`, `k = 1..=MAX_MODE`, rescaled so that `Σ k(|a_k|+|b_k|) = budget`.
fn trig_coeffs(rng: &mut ChaCha8Rng, budget: f64) -> Vec<(f64, f64)> {
    let raw: Vec<(f64, f64)> = (0..MAX_MODE).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm: f64 = raw.iter().enumerate().map(|(i, (a, b))| (i + 1) as f64 * (a.abs() + b.abs())).sum();
    raw.into_iter().map(|(a, b)| (a * budget / norm, b * budget / norm)).collect()
}

fn trig_eval(coeffs: &[(f64, f64)], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let (s, c) = ((i + 1) as f64 * x).sin_cos();
            a * s + b * c
        })
        .sum()
}

/// `f(x) = x + shift + Σ a_k sin kx + b_k cos kx` with distortion in `[0.1, max]`.
pub fn random_diffeo_with(rng: &mut ChaCha8Rng, n: usize, max_distortion: f64) -> Result<QuasiPeriodicFn> {
    let budget = rng.random_range(0.1..=max_distortion.max(0.1));
    let coeffs = trig_coeffs(rng, budget);
    let shift = rng.random_range(0.0..TAU);
    QuasiPeriodicFn::from_fn(n, 1.0, |x| x + shift + trig_eval(&coeffs, x))
}

pub fn random_diffeo(rng: &mut ChaCha8Rng, n: usize) -> Result<QuasiPeriodicFn> {
    random_diffeo_with(rng, n, MAX_DISTORTION)
}

/// A disc automorphism with `|a| < 0.3` after a mild trigonometric diffeo.
pub fn mobius_diffeo(rng: &mut ChaCha8Rng, n: usize) -> Result<QuasiPeriodicFn> {
    let budget = rng.random_range(0.0..0.3);
    let coeffs = trig_coeffs(rng, budget);
    let a = Complex64::from_polar(rng.random_range(0.0..0.3), rng.random_range(0.0..TAU));
    let shift = rng.random_range(0.0..TAU);
    QuasiPeriodicFn::from_fn(n, 1.0, |x| mobius_angle(a, x + trig_eval(&coeffs, x)) + shift)
}

/// Tangent `δf` from the diffeo family: a constant plus harmonics up to
/// `MAX_MODE` with `Σ k(|a_k|+|b_k|) ≤ MAX_DISTORTION`, so `sup|δf'| < 1`.
pub fn random_tangent(rng: &mut ChaCha8Rng, n: usize) -> Result<PeriodicFn> {
    let c0 = rng.random_range(-0.5..0.5);
    let budget = rng.random_range(0.1..=MAX_DISTORTION);
    let coeffs = trig_coeffs(rng, budget);
    PeriodicFn::from_fn(n, |x| c0 + trig_eval(&coeffs, x))
}

/// `k` points on the circle at least `min_gap` apart, charges summing to zero.
pub fn random_marked_config(rng: &mut ChaCha8Rng, k: usize, min_gap: f64) -> Result<MarkedConfig> {
    let points = loop {
        let mut p: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..TAU)).collect();
        p.sort_by(f64::total_cmp);
        let wrap_gap = if k > 1 { p[0] + TAU - p[k - 1] } else { TAU };
        if p.windows(2).all(|w| w[1] - w[0] >= min_gap) && wrap_gap >= min_gap {
            break p;
        }
    };
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = raw.iter().sum::<f64>() / k as f64;
    MarkedConfig::new(points, raw.into_iter().map(|c| c - mean).collect())
}

/// Hyperbolic parameters with `c ∈ [6, 48]`, `α ∈ [0.1, 3]`.
pub fn random_hyperbolic(rng: &mut ChaCha8Rng) -> Result<OrbitParams> {
    OrbitParams::from_alpha(rng.random_range(6.0..48.0), rng.random_range(0.1..3.0))
}

/// Ordered pair `x₁ < x₂` in `[0, 2π)` at least `min_sep` apart.
pub fn random_pair(rng: &mut ChaCha8Rng, min_sep: f64) -> (f64, f64) {
    loop {
        let a = rng.random_range(0.0..TAU);
        let b = rng.random_range(0.0..TAU);
        let (x1, x2) = if a < b { (a, b) } else { (b, a) };
        if x2 - x1 >= min_sep {
            return (x1, x2);
        }
    }
}

/// Four sorted points `p₀<p₁<p₂<p₃` in `[0, 2π)` with gaps at least `min_sep`.
pub fn random_quad(rng: &mut ChaCha8Rng, min_sep: f64) -> [f64; 4] {
    loop {
        let mut p = [0.0; 4];
        p.iter_mut().for_each(|v| *v = rng.random_range(0.0..TAU));
        p.sort_by(f64::total_cmp);
        if p.windows(2).all(|w| w[1] - w[0] >= min_sep) {
            return p;
        }
    }
}
