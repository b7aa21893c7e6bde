//! Gaussian measure on the Darboux field: Green's function, saddle solver,
//! exact expectation of exponential observables, Monte Carlo and `Z(t)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::OrbitParams;
use crate::util::pairwise_sum;

const SUM_TOL: f64 = 1e-12;
const MIN_GAP: f64 = 1e-9;
/// Relative tolerance of the `Z(t)` assembly identity.
pub const Z_ASSEMBLY_TOL: f64 = 1e-14;

pub(crate) fn check_ct(params: &OrbitParams, t: f64) -> Result<f64> {
    params.require_non_elliptic()?;
    let ct = params.c * t;
    if !(t > 0.0 && ct.is_finite() && ct > 0.0) {
        return Err(Error::InvalidParams(format!("need c·t > 0, got c = {}, t = {t}", params.c)));
    }
    Ok(ct)
}

/// Connected two-point function of the winding-free field,
/// `G(θ) = (12/(πct))(π²/6 − πθ/2 + θ²/4)` with `θ` reduced to `[0, 2π)`.
pub fn covariance(theta: f64, params: &OrbitParams, t: f64) -> Result<f64> {
    let ct = check_ct(params, t)?;
    Ok(covariance_ct(theta, ct))
}

fn covariance_ct(theta: f64, ct: f64) -> f64 {
    let th = theta.rem_euclid(TAU);
    12.0 / (PI * ct) * (PI * PI / 6.0 - PI * th / 2.0 + th * th / 4.0)
}

/// Partial sum of `Σ_{n=1}^{N} 12/(πct n²) cos nθ`, the mode expansion of
/// [`covariance`].
pub fn covariance_mode_sum(theta: f64, ct: f64, n_modes: usize) -> f64 {
    let s: f64 = (1..=n_modes).rev().map(|n| (n as f64 * theta).cos() / (n * n) as f64).sum();
    12.0 / (PI * ct) * s
}

/// Insertion points with real weights `Σ c_k = 0` for `exp(Σ c_k u(p_k))`.
///
/// Points are real lifts, strictly increasing, spanning less than a full
/// turn, so a configuration may be rotated without re-sorting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkedConfig {
    points: Vec<f64>,
    coeffs: Vec<f64>,
}

impl MarkedConfig {
    pub fn new(points: Vec<f64>, coeffs: Vec<f64>) -> Result<Self> {
        if points.len() != coeffs.len() {
            return Err(Error::InvalidConfig(format!("{} points but {} coefficients", points.len(), coeffs.len())));
        }
        if points.iter().chain(&coeffs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite entry".into()));
        }
        for w in points.windows(2) {
            if !(w[1] - w[0] > MIN_GAP) {
                return Err(Error::InvalidConfig(format!("points must be strictly increasing: {} then {}", w[0], w[1])));
            }
        }
        if let (Some(a), Some(b)) = (points.first(), points.last()) {
            if !(b - a < TAU - MIN_GAP) {
                return Err(Error::InvalidConfig("points must lie within one turn".into()));
            }
        }
        let total: f64 = coeffs.iter().sum();
        let scale = coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        if total.abs() > SUM_TOL * scale {
            return Err(Error::InvalidConfig(format!("coefficients must sum to zero, got {total:e}")));
        }
        Ok(Self { points, coeffs })
    }

    /// Unsorted input is sorted first; points are reduced into `[0, 2π)`.
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        for p in &mut pairs {
            p.0 = p.0.rem_euclid(TAU);
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (p, c) = pairs.into_iter().unzip();
        Self::new(p, c)
    }

    /// `exp(−u(x₁)/2 − u(x₂)/2 + u(s))`.
    pub fn bilocal(x1: f64, x2: f64, s: f64) -> Result<Self> {
        Self::from_pairs(vec![(x1, -0.5), (x2, -0.5), (s, 1.0)])
    }

    pub fn empty() -> Self {
        Self { points: Vec::new(), coeffs: Vec::new() }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rotated(&self, theta: f64) -> Self {
        Self { points: self.points.iter().map(|p| p + theta).collect(), coeffs: self.coeffs.clone() }
    }
}

/// Piecewise-linear critical path of `−(ct/24)∫u'² + Σ c_k u(p_k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleSolution {
    pub breakpoints: Vec<f64>,
    /// Slope on `(p_k, p_{k+1})`; the last entry covers the wrap-around
    /// segment and equals `base_slope`.
    pub slopes: Vec<f64>,
    pub base_slope: f64,
    /// Values at the breakpoints in the gauge `u(0) = gauge`.
    pub values: Vec<f64>,
    pub gauge: f64,
    pub alpha: f64,
    pub action: f64,
}

impl SaddleSolution {
    pub fn eval(&self, x: f64) -> f64 {
        let Some(&p1) = self.breakpoints.first() else {
            return self.alpha * x + self.gauge;
        };
        let turns = ((x - p1) / TAU).floor();
        let xr = x - turns * TAU;
        let k = self.breakpoints.partition_point(|&p| p <= xr) - 1;
        self.values[k] + self.slopes[k] * (xr - self.breakpoints[k]) + TAU * self.alpha * turns
    }

    /// `∫₀^{2π} u'²`.
    pub fn dirichlet(&self) -> f64 {
        if self.breakpoints.is_empty() {
            return TAU * self.alpha * self.alpha;
        }
        let k = self.breakpoints.len();
        (0..k)
            .map(|i| {
                let next = if i + 1 < k { self.breakpoints[i + 1] } else { self.breakpoints[0] + TAU };
                self.slopes[i] * self.slopes[i] * (next - self.breakpoints[i])
            })
            .sum()
    }

    /// New solution with `u → u + shift`.
    pub fn regauged(&self, shift: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + shift).collect(),
            gauge: self.gauge + shift,
            ..self.clone()
        }
    }
}

/// Solves the saddle equations exactly: slope jumps `−12c_k/(ct)` at each
/// point and total increase `2πα` over a turn. Gauge `u(0) = 0`.
pub fn solve_saddle(config: &MarkedConfig, params: &OrbitParams, t: f64) -> Result<SaddleSolution> {
    let ct = check_ct(params, t)?;
    let alpha = params.alpha();
    let k = config.len();
    let (p, c) = (config.points(), config.coeffs());
    let jumps: Vec<f64> = c.iter().map(|ck| -12.0 * ck / ct).collect();
    let m = alpha + jumps.iter().zip(p).map(|(j, pk)| j * pk).sum::<f64>() / TAU;
    let mut slopes = Vec::with_capacity(k);
    let mut s = m;
    for j in &jumps {
        s += j;
        slopes.push(s);
    }
    if let Some(last) = slopes.last_mut() {
        *last = m;
    }
    let mut values = Vec::with_capacity(k);
    let mut v = 0.0;
    for i in 0..k {
        if i > 0 {
            v += slopes[i - 1] * (p[i] - p[i - 1]);
        }
        values.push(v);
    }
    let mut sol = SaddleSolution { breakpoints: p.to_vec(), slopes, base_slope: m, values, gauge: 0.0, alpha, action: 0.0 };
    let shift = -sol.eval(0.0);
    sol = sol.regauged(shift);
    sol.gauge = 0.0;
    sol.action = effective_action(&sol, config, params, t)?;
    Ok(sol)
}

/// `−(ct/24)∫u'² + Σ c_k u(p_k)` evaluated on `sol`.
pub fn effective_action(sol: &SaddleSolution, config: &MarkedConfig, params: &OrbitParams, t: f64) -> Result<f64> {
    let ct = check_ct(params, t)?;
    let source: f64 = config.points().iter().zip(config.coeffs()).map(|(p, c)| c * sol.eval(*p)).sum();
    Ok(-ct / 24.0 * sol.dirichlet() + source)
}

/// `α Σ c_k p_k + ½ ΣΣ c_k c_j G(p_k − p_j) + 2πb₀t`: the log of the Gaussian
/// expectation of `exp(Σ c_k u(p_k))` with the background weight included.
pub fn exp_expectation(config: &MarkedConfig, params: &OrbitParams, t: f64) -> Result<f64> {
    let ct = check_ct(params, t)?;
    Ok(log_weight(config.points(), config.coeffs(), params.alpha(), ct) + TAU * params.b0 * t)
}

/// `α Σ c_k p_k + ½ ΣΣ c_k c_j G(p_k − p_j)` for points in any order.
/// Callers guarantee `Σ c_k = 0`.
pub fn log_weight(points: &[f64], coeffs: &[f64], alpha: f64, ct: f64) -> f64 {
    let drift: f64 = points.iter().zip(coeffs).map(|(p, c)| p * c).sum::<f64>() * alpha;
    let mut var = 0.0;
    for (i, (pi, ci)) in points.iter().zip(coeffs).enumerate() {
        var += ci * ci * covariance_ct(0.0, ct);
        for (pj, cj) in points.iter().zip(coeffs).skip(i + 1) {
            var += 2.0 * ci * cj * covariance_ct(pi - pj, ct);
        }
    }
    drift + 0.5 * var
}

/// Truncated field `u(x) = αx + Σ_{0<|n|≤N} u_n e^{inx}`, `u_{−n} = conj(u_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    pub alpha: f64,
    /// `u_1, …, u_N`.
    pub modes: Vec<Complex64>,
}

impl FourierField {
    pub fn eval(&self, x: f64) -> f64 {
        let step = Complex64::from_polar(1.0, x);
        let mut e = step;
        let mut acc = 0.0;
        for (i, un) in self.modes.iter().enumerate() {
            if i > 0 {
                e *= step;
                // Renormalize now and then against drift of |e|.
                if i % 64 == 0 {
                    e = Complex64::from_polar(1.0, (i + 1) as f64 * x);
                }
            }
            acc += (un * e).re;
        }
        self.alpha * x + 2.0 * acc
    }

    /// `u(x) − αx`.
    pub fn fluctuation(&self, x: f64) -> f64 {
        self.eval(x) - self.alpha * x
    }
}

/// Per-mode standard deviation of `Re u_n` and `Im u_n`: `√(3/(πct n²))`.
pub fn mode_sigma(n: usize, ct: f64) -> f64 {
    (3.0 / (PI * ct)).sqrt() / n as f64
}

fn draw_field(rng: &mut ChaCha8Rng, alpha: f64, ct: f64, n_modes: usize) -> FourierField {
    let modes = (1..=n_modes)
        .map(|n| {
            let s = mode_sigma(n, ct);
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(s * re, s * im)
        })
        .collect();
    FourierField { alpha, modes }
}

/// Generator for draw `index`: one ChaCha stream per draw, so results do not
/// depend on how draws are spread over threads.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draw `index` of the Gaussian field.
pub fn sample_field(params: &OrbitParams, t: f64, n_modes: usize, seed: u64, index: u64) -> Result<FourierField> {
    let ct = check_ct(params, t)?;
    if n_modes == 0 {
        return Err(Error::InvalidArgument("need at least one mode".into()));
    }
    Ok(draw_field(&mut draw_rng(seed, index), params.alpha(), ct, n_modes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_used: usize,
    pub n_nonfinite: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct McOptions {
    pub n_modes: usize,
    pub n_samples: usize,
    pub seed: u64,
}

/// Sample mean and standard error of `observable` over independent draws.
/// The observable also receives the draw's generator for auxiliary
/// randomness (e.g. a uniform integration point).
pub fn mc_estimate_with<F>(observable: F, params: &OrbitParams, t: f64, opts: McOptions) -> Result<McEstimate>
where
    F: Fn(&FourierField, &mut ChaCha8Rng) -> f64 + Sync,
{
    let ct = check_ct(params, t)?;
    if opts.n_samples < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 samples, got {}", opts.n_samples)));
    }
    if opts.n_modes == 0 {
        return Err(Error::InvalidArgument("need at least one mode".into()));
    }
    let alpha = params.alpha();
    let values: Vec<f64> = (0..opts.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(opts.seed, i);
            let field = draw_field(&mut rng, alpha, ct, opts.n_modes);
            observable(&field, &mut rng)
        })
        .collect();
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let n_nonfinite = values.len() - finite.len();
    let n = finite.len();
    if n < 2 {
        return Err(Error::Numeric(format!("{n_nonfinite} of {} samples were not finite", values.len())));
    }
    let mean = pairwise_sum(&finite) / n as f64;
    let dev: Vec<f64> = finite.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    Ok(McEstimate { mean, stderr: (var / n as f64).sqrt(), n_used: n, n_nonfinite })
}

pub fn mc_estimate<F>(observable: F, params: &OrbitParams, t: f64, opts: McOptions) -> Result<McEstimate>
where
    F: Fn(&FourierField) -> f64 + Sync,
{
    mc_estimate_with(|f, _| observable(f), params, t, opts)
}

/// `Z(t)` assembled from its regularized pieces, with the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionFunction {
    pub value: f64,
    pub closed_form: f64,
    pub pfaffian: f64,
    pub determinant: f64,
    pub classical_moment: f64,
}

/// `Pf_ζ(ω) e^{tμ(u_cl)} / √det_ζ(−(ct/12)Δ)`, checked against
/// `(t/2π)^{1/2} e^{2πb₀t}`.
pub fn partition_function(params: &OrbitParams, t: f64) -> Result<PartitionFunction> {
    let ct = check_ct(params, t)?;
    let pfaffian = (24.0 * PI / params.c).sqrt();
    let determinant = 48.0 * PI * PI / ct;
    let alpha = params.alpha();
    let classical_moment = -params.c / 24.0 * TAU * alpha * alpha;
    let value = pfaffian * (t * classical_moment).exp() / determinant.sqrt();
    let closed_form = (t / TAU).sqrt() * (TAU * params.b0 * t).exp();
    let rel = (value - closed_form).abs() / closed_form.abs().max(f64::MIN_POSITIVE);
    if !(rel <= Z_ASSEMBLY_TOL) {
        return Err(Error::Numeric(format!("Z assembly {value:e} differs from closed form {closed_form:e} by {rel:e}")));
    }
    Ok(PartitionFunction { value, closed_form, pfaffian, determinant, classical_moment })
}

/// `⟨μ_{S¹}⟩ = d log Z/dt = 2πb₀ + 1/(2t)`.
pub fn mean_moment(params: &OrbitParams, t: f64) -> Result<f64> {
    check_ct(params, t)?;
    Ok(TAU * params.b0 + 0.5 / t)
}

/// `ζ(0)`, the regularized value of `Σ_{n≥1} 1`.
pub const ZETA_ZERO: f64 = -0.5;

/// Mode-by-mode `⟨μ_{S¹}⟩`: each mode `n ≥ 1` carries two real Gaussian
/// directions contributing `−1/(2t)` each. Returns the sum truncated at
/// `n_modes` and the value with the mode count replaced by `ζ(0)`.
pub fn mean_moment_mode_sum(params: &OrbitParams, t: f64, n_modes: usize) -> Result<(f64, f64)> {
    check_ct(params, t)?;
    let per_mode = -1.0 / t;
    let classical = TAU * params.b0;
    let truncated = classical + (0..n_modes).map(|_| per_mode).sum::<f64>();
    let regularized = classical + per_mode * ZETA_ZERO;
    Ok((truncated, regularized))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};

    fn hyp(c: f64, alpha: f64) -> OrbitParams {
        OrbitParams::from_alpha(c, alpha).unwrap()
    }

    #[test]
    fn covariance_values() {
        let p = hyp(12.0, 1.0);
        let t = 0.7;
        let ct = 12.0 * t;
        assert!((covariance(0.0, &p, t).unwrap() - TAU / ct).abs() < 1e-15);
        assert!((covariance(PI, &p, t).unwrap() + PI / ct).abs() < 1e-15);
        for th in [0.1, 1.3, 2.9, 5.0] {
            let a = covariance(th, &p, t).unwrap();
            let b = covariance(TAU - th, &p, t).unwrap();
            assert!((a - b).abs() <= 1e-14);
        }
        assert!(covariance(1.0, &p, -1.0).is_err());
        assert!(covariance(1.0, &OrbitParams::teichmuller(12.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn covariance_matches_mode_sum() {
        let ct = 3.0;
        let n = 100_000;
        for th in [0.0, 0.5, PI, 4.0] {
            let g = covariance_ct(th, ct);
            let s = covariance_mode_sum(th, ct, n);
            // Tail of Σ 1/n² is below 1/N.
            assert!((g - s).abs() <= 12.0 / (PI * ct) / n as f64, "{th}: {g} vs {s}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(MarkedConfig::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_ok());
        assert!(matches!(MarkedConfig::new(vec![0.0, 1.0], vec![1.0, -0.9]), Err(Error::InvalidConfig(_))));
        assert!(MarkedConfig::new(vec![1.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(MarkedConfig::new(vec![0.0, 7.0], vec![1.0, -1.0]).is_err());
        let c = MarkedConfig::from_pairs(vec![(7.0, 1.0), (0.2, -1.0)]).unwrap();
        assert!((c.points()[1] - (7.0 - TAU)).abs() < 1e-15);
    }

    fn bilocal_action_closed(x1: f64, x2: f64, s: f64, ct: f64, alpha: f64) -> f64 {
        let q = 2.0 * s - x1 - x2 - ct * PI * alpha / 3.0;
        1.5 * (x2 - x1) / ct - 3.0 / (4.0 * PI * ct) * q * q
    }

    #[test]
    fn saddle_one_bilocal() {
        let (x1, x2, t) = (0.5, 2.5, 0.8);
        let p = hyp(12.0, 0.4);
        let ct = 12.0 * t;
        let mid = MarkedConfig::bilocal(x1, x2, 1.5).unwrap();
        let sol = solve_saddle(&mid, &p, t).unwrap();
        assert!((sol.base_slope - 0.4).abs() < 1e-15);
        let s = 2.1;
        let sol = solve_saddle(&MarkedConfig::bilocal(x1, x2, s).unwrap(), &p, t).unwrap();
        let m = 0.4 - 3.0 / (ct * PI) * (2.0 * s - x1 - x2);
        assert!((sol.base_slope - m).abs() < 1e-14);
        assert!((sol.action - bilocal_action_closed(x1, x2, s, ct, 0.4)).abs() < 1e-13);
        let zero = hyp(12.0, 0.0);
        let sol = solve_saddle(&mid, &zero, t).unwrap();
        assert!((sol.action - 1.5 * (x2 - x1) / ct).abs() < 1e-14);
    }

    #[test]
    fn saddle_invariants() {
        let cfg = MarkedConfig::new(vec![0.3, 1.1, 2.0, 4.4], vec![0.7, -1.2, 1.0, -0.5]).unwrap();
        let p = hyp(5.0, 0.9);
        let t = 1.3;
        let ct = 5.0 * t;
        let sol = solve_saddle(&cfg, &p, t).unwrap();
        let h = 1e-7;
        for (k, &pk) in cfg.points().iter().enumerate() {
            let left = if k == 0 { sol.base_slope } else { sol.slopes[k - 1] };
            let jump = sol.slopes[k] - left;
            if k + 1 < cfg.len() {
                assert!((jump + 12.0 * cfg.coeffs()[k] / ct).abs() < 1e-12);
            }
            assert!((sol.eval(pk + h) - sol.eval(pk - h)).abs() < 1e-5);
        }
        assert!((sol.eval(TAU) - sol.eval(0.0) - TAU * 0.9).abs() < 1e-12);
        assert_eq!(sol.eval(0.0), 0.0);
        let shifted = sol.regauged(3.0);
        let a = effective_action(&shifted, &cfg, &p, t).unwrap();
        assert!((a - sol.action).abs() < 1e-12);
    }

    #[test]
    fn saddle_matches_green() {
        let cfg = MarkedConfig::new(vec![0.3, 1.1, 2.0, 4.4, 5.9], vec![0.7, -1.2, 1.0, -0.5, 0.0]).unwrap();
        for alpha in [0.0, 0.3, 2.0] {
            let p = hyp(7.0, alpha);
            let a = solve_saddle(&cfg, &p, 0.6).unwrap().action;
            let b = exp_expectation(&cfg, &p, 0.6).unwrap();
            assert!((a - b).abs() < 1e-12, "{alpha}: {a} vs {b}");
        }
        let p = hyp(7.0, 0.3);
        let e = exp_expectation(&MarkedConfig::empty(), &p, 0.6).unwrap();
        assert!((e - TAU * p.b0 * 0.6).abs() < 1e-15);
        let r = exp_expectation(&cfg.rotated(0.37), &p, 0.6).unwrap();
        assert!((r - exp_expectation(&cfg, &p, 0.6).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn sampled_mode_variance() {
        let p = hyp(12.0, 0.5);
        let t = 0.5;
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|i| sample_field(&p, t, 4, 9, i).unwrap().modes[0].re).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let target = 3.0 / (PI * 6.0);
        // Var of the sample variance is 2σ⁴/n.
        assert!((var - target).abs() <= 3.0 * target * (2.0 / n as f64).sqrt());
        assert!(mean.abs() <= 4.0 * (target / n as f64).sqrt());
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = hyp(12.0, 0.5);
        let a = sample_field(&p, 1.0, 8, 42, 17).unwrap();
        let b = sample_field(&p, 1.0, 8, 42, 17).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_field(&p, 1.0, 8, 42, 18).unwrap());
        let opts = McOptions { n_modes: 16, n_samples: 2000, seed: 5 };
        let e1 = mc_estimate(|f| f.eval(1.0), &p, 1.0, opts).unwrap();
        let e2 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| mc_estimate(|f| f.eval(1.0), &p, 1.0, opts).unwrap());
        assert_eq!(e1, e2);
    }

    #[test]
    fn field_eval_matches_direct_sum() {
        let p = hyp(12.0, 0.5);
        let f = sample_field(&p, 0.3, 300, 1, 0).unwrap();
        for x in [0.0, 1.7, 6.1] {
            let direct: f64 = f.modes.iter().enumerate().map(|(i, u)| 2.0 * (u * Complex64::from_polar(1.0, (i + 1) as f64 * x)).re).sum();
            assert!((f.fluctuation(x) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn mc_constant_and_pair() {
        let p = hyp(12.0, 0.5);
        let t = 2.0;
        let opts = McOptions { n_modes: 64, n_samples: 200, seed: 1 };
        let one = mc_estimate(|_| 1.0, &p, t, opts).unwrap();
        assert_eq!((one.mean, one.stderr), (1.0, 0.0));
        let bad = mc_estimate(|f| if f.modes[0].re > 0.0 { f64::NAN } else { 1.0 }, &p, t, opts).unwrap();
        assert!(bad.n_nonfinite > 0 && bad.n_used + bad.n_nonfinite == 200);
        assert!(mc_estimate(|_| 1.0, &p, t, McOptions { n_samples: 10, ..opts }).is_err());

        // exp(u(p) − u(q)) at large ct, where 256 modes leave little truncation bias.
        let p = hyp(100.0, 0.2);
        let (a, b) = (2.0, 0.5);
        let cfg = MarkedConfig::from_pairs(vec![(a, 1.0), (b, -1.0)]).unwrap();
        let exact = (exp_expectation(&cfg, &p, 1.0).unwrap() - TAU * p.b0).exp();
        let opts = McOptions { n_modes: 256, n_samples: 20_000, seed: 3 };
        let est = mc_estimate(|f| (f.eval(a) - f.eval(b)).exp(), &p, 1.0, opts).unwrap();
        assert!((est.mean - exact).abs() <= 3.0 * est.stderr, "{est:?} vs {exact}");
    }

    #[test]
    fn partition_function_values() {
        let z = partition_function(&OrbitParams::parabolic(3.0).unwrap(), TAU).unwrap();
        assert!((z.value - 1.0).abs() < 1e-15);
        let z = partition_function(&hyp(24.0, 1.0), 1.0).unwrap();
        let expect = (1.0 / TAU).sqrt() * (-TAU).exp();
        assert!(((z.value - expect) / expect).abs() < 1e-14);
        assert!(matches!(partition_function(&hyp(24.0, 1.0), 0.0), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn mean_moment_values() {
        let p = OrbitParams::parabolic(12.0).unwrap();
        assert_eq!(mean_moment(&p, 1.0).unwrap(), 0.5);
        let p = hyp(9.0, 0.7);
        let t = 1.4;
        let h = 1e-5;
        let lz = |t: f64| partition_function(&p, t).unwrap().value.ln();
        let fd = (lz(t + h) - lz(t - h)) / (2.0 * h);
        assert!((fd - mean_moment(&p, t).unwrap()).abs() < 1e-8);
        let (trunc, reg) = mean_moment_mode_sum(&p, t, 50).unwrap();
        assert!((trunc - (TAU * p.b0 - 50.0 / t)).abs() < 1e-12);
        assert_eq!(reg, mean_moment(&p, t).unwrap());
    }

    #[test]
    fn one_bilocal_integral_matches_green() {
        // ∫ ds exp(S(s)) by quadrature from the Green route vs the saddle.
        let p = hyp(12.0, 0.6);
        let t = 0.9;
        let (x1, x2) = (0.4, 2.2);
        let g = |s: f64| exp_expectation(&MarkedConfig::bilocal(x1, x2, s).unwrap(), &p, t).unwrap().exp();
        let h = |s: f64| solve_saddle(&MarkedConfig::bilocal(x1, x2, s).unwrap(), &p, t).unwrap().action.exp();
        let a = integrate(|s| g(s), x1 + 1e-12, x2, QuadOptions::rel(1e-12)).unwrap().value;
        let b = integrate(|s| h(s), x1 + 1e-12, x2, QuadOptions::rel(1e-12)).unwrap().value;
        assert!(((a - b) / a).abs() < 1e-11);
    }
}
