//! Periodic and quasi-periodic functions on the circle.
//!
//! Both types store samples on the uniform grid `x_j = 2πj/N` and are
//! evaluated between nodes by trigonometric interpolation. A quasi-periodic
//! function `f(x + 2π) = f(x) + 2πw` is kept as its winding `w` together
//! with the periodic part `f(x) - w x`.

use std::cell::RefCell;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::jet::Jet3;

pub const DEFAULT_GRID: usize = 1024;

/// Fourier coefficients below this fraction of the sample sup-norm are
/// treated as round-off before differentiating.
const CHOP_REL: f64 = 5e-16;

/// Coefficients below this fraction are dropped from pointwise evaluation.
const EVAL_TRIM_REL: f64 = 1e-18;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Grid node `x_j = 2πj/N`.
pub fn grid_point(n: usize, j: usize) -> f64 {
    TAU * j as f64 / n as f64
}

fn check_grid_size(n: usize) -> Result<()> {
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "grid size must be a power of two >= 4, got {n}"
        )));
    }
    Ok(())
}

/// Half spectrum of a real periodic sample vector.
///
/// `coeffs[k]` for `k = 0..=N/2` with `p(x) = Σ_{|k|<N/2} c_k e^{ikx} + c_{N/2} cos(Nx/2)`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    n: usize,
    coeffs: Vec<Complex64>,
    scale: f64,
}

impl Spectrum {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        forward_plan(n).process(&mut buf);
        let inv_n = 1.0 / n as f64;
        let coeffs = buf[..=n / 2].iter().map(|c| c * inv_n).collect();
        let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self { n, coeffs, scale }
    }

    /// Raises the magnitude used for the round-off floor, e.g. to the size of
    /// the full values when the samples are a small remainder.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = self.scale.max(scale);
        self
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Mean value (the zero mode).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Number of leading modes above the round-off floor; the rest are
    /// treated as noise.
    pub fn bandwidth(&self) -> usize {
        let floor = CHOP_REL * self.scale;
        self.coeffs.iter().rposition(|c| c.norm() > floor).map_or(0, |k| k + 1)
    }

    fn truncated(&self, keep: usize) -> Vec<Complex64> {
        let mut c = self.coeffs.clone();
        for ck in &mut c[keep.min(self.coeffs.len())..] {
            *ck = Complex64::new(0.0, 0.0);
        }
        c
    }

    /// Samples on the grid from a half spectrum.
    pub(crate) fn synthesize(n: usize, half: &[Complex64]) -> Vec<f64> {
        let mut full = vec![Complex64::new(0.0, 0.0); n];
        full[0] = half[0];
        for k in 1..n / 2 {
            full[k] = half[k];
            full[n - k] = half[k].conj();
        }
        full[n / 2] = Complex64::new(half[n / 2].re, 0.0);
        inverse_plan(n).process(&mut full);
        full.into_iter().map(|c| c.re).collect()
    }

    /// Spectral derivative of the given order, Nyquist mode zeroed.
    pub fn derivative_samples(&self, order: u32) -> Vec<f64> {
        self.derivative_samples_band(order, self.bandwidth())
    }

    /// Spectral derivative keeping only modes `k < keep`.
    pub fn derivative_samples_band(&self, order: u32, keep: usize) -> Vec<f64> {
        let mut c = self.truncated(keep);
        c[0] = Complex64::new(0.0, 0.0);
        let m = self.n / 2;
        c[m] = Complex64::new(0.0, 0.0);
        for (k, ck) in c.iter_mut().enumerate().take(m).skip(1) {
            *ck *= Complex64::new(0.0, k as f64).powu(order);
        }
        Self::synthesize(self.n, &c)
    }

    /// Samples of the zero-mean antiderivative `P` with `P' = p - mean`.
    pub fn antiderivative_samples(&self) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        c[0] = Complex64::new(0.0, 0.0);
        let m = self.n / 2;
        c[m] = Complex64::new(0.0, 0.0);
        for (k, ck) in c.iter_mut().enumerate().take(m).skip(1) {
            *ck /= Complex64::new(0.0, k as f64);
        }
        Self::synthesize(self.n, &c)
    }

    /// Trigonometric interpolant for repeated pointwise evaluation.
    pub fn interpolant(&self) -> Interpolant {
        Interpolant::new(self.coeffs.clone(), self.n, self.scale)
    }

    pub fn antiderivative_interpolant(&self) -> Interpolant {
        let m = self.n / 2;
        let mut c = self.coeffs.clone();
        c[0] = Complex64::new(0.0, 0.0);
        c[m] = Complex64::new(0.0, 0.0);
        for (k, ck) in c.iter_mut().enumerate().take(m).skip(1) {
            *ck /= Complex64::new(0.0, k as f64);
        }
        Interpolant::new(c, self.n, self.scale)
    }
}

/// Direct mode summation of a trigonometric polynomial, `O(K)` per point.
#[derive(Debug, Clone)]
pub struct Interpolant {
    coeffs: Vec<Complex64>,
    nyquist: f64,
    half_n: usize,
}

impl Interpolant {
    fn new(mut coeffs: Vec<Complex64>, n: usize, scale: f64) -> Self {
        let m = n / 2;
        let nyquist = coeffs[m].re;
        coeffs.truncate(m);
        let floor = EVAL_TRIM_REL * scale.max(f64::MIN_POSITIVE);
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() <= floor) {
            coeffs.pop();
        }
        Self { coeffs, nyquist, half_n: m }
    }

    /// Highest retained mode.
    pub fn bandwidth(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_derivative(x, 0)
    }

    /// `order`-th derivative of the interpolant at `x`.
    pub fn eval_derivative(&self, x: f64, order: u32) -> f64 {
        let mut acc = if order == 0 { self.coeffs[0].re } else { 0.0 };
        let z = Complex64::from_polar(1.0, x);
        let mut zk = z;
        let mut s = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let term = c * zk;
            s += if order == 0 { term } else { term * Complex64::new(0.0, k as f64).powu(order) };
            zk *= z;
        }
        acc += 2.0 * s.re;
        if order == 0 && self.nyquist != 0.0 {
            acc += self.nyquist * (self.half_n as f64 * x).cos();
        }
        acc
    }

    /// Value and first three derivatives at `x`.
    pub fn jet(&self, x: f64) -> [f64; 4] {
        let z = Complex64::from_polar(1.0, x);
        let mut zk = z;
        let mut s = [Complex64::new(0.0, 0.0); 4];
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let kk = k as f64;
            let t = c * zk;
            s[0] += t;
            s[1] += t * Complex64::new(0.0, kk);
            s[2] += t * (-kk * kk);
            s[3] += t * Complex64::new(0.0, -kk * kk * kk);
            zk *= z;
        }
        let mut v = [2.0 * s[0].re, 2.0 * s[1].re, 2.0 * s[2].re, 2.0 * s[3].re];
        v[0] += self.coeffs[0].re;
        if self.nyquist != 0.0 {
            v[0] += self.nyquist * (self.half_n as f64 * x).cos();
        }
        v
    }
}

/// A 2π-periodic real function sampled on the uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFn {
    samples: Vec<f64>,
}

impl PeriodicFn {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        check_grid_size(samples.len())?;
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(Self { samples })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, f: F) -> Result<Self> {
        check_grid_size(n)?;
        Self::new((0..n).map(|j| f(grid_point(n, j))).collect())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_fn(n, |_| 0.0)
    }

    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.grid_size();
        (0..n).map(move |j| grid_point(n, j))
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::from_samples(&self.samples)
    }

    pub fn interpolant(&self) -> Interpolant {
        self.spectrum().interpolant()
    }

    /// Evaluates the interpolant at one point; build an [`Interpolant`] for many.
    pub fn eval(&self, x: f64) -> f64 {
        self.interpolant().eval(x)
    }

    pub fn derivative(&self, order: u32) -> Result<PeriodicFn> {
        check_order(order)?;
        Ok(Self { samples: self.spectrum().derivative_samples(order) })
    }

    /// Trapezoid rule over one period.
    pub fn integral(&self) -> f64 {
        TAU * crate::util::pairwise_sum(&self.samples) / self.grid_size() as f64
    }

    pub fn mean(&self) -> f64 {
        self.integral() / TAU
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> PeriodicFn {
        Self { samples: self.samples.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise map with access to the node.
    pub fn map_nodes<F: Fn(f64, f64) -> f64>(&self, f: F) -> PeriodicFn {
        let n = self.grid_size();
        Self {
            samples: self.samples.iter().enumerate().map(|(j, &v)| f(grid_point(n, j), v)).collect(),
        }
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &PeriodicFn, f: F) -> Result<PeriodicFn> {
        if self.grid_size() != other.grid_size() {
            return Err(Error::InvalidArgument(format!(
                "grid mismatch: {} vs {}",
                self.grid_size(),
                other.grid_size()
            )));
        }
        Ok(Self {
            samples: self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &PeriodicFn) -> Result<PeriodicFn> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &PeriodicFn) -> Result<PeriodicFn> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &PeriodicFn) -> Result<PeriodicFn> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> PeriodicFn {
        self.map(|v| v * s)
    }

    pub fn shift_value(&self, c: f64) -> PeriodicFn {
        self.map(|v| v + c)
    }

    pub fn sup_norm(&self) -> f64 {
        crate::util::sup_norm(self.samples.iter().copied())
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &PeriodicFn) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// `x ↦ p(x + θ)`.
    pub fn rotated(&self, theta: f64) -> PeriodicFn {
        let it = self.interpolant();
        self.map_nodes(|x, _| it.eval(x + theta))
    }

    /// Value at 2π minus value at 0 of the interpolant; zero up to round-off.
    pub fn periodicity_defect(&self) -> f64 {
        let it = self.interpolant();
        (it.eval(TAU) - it.eval(0.0)).abs()
    }
}

fn check_order(order: u32) -> Result<()> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidArgument(format!("derivative order must be 1..=3, got {order}")));
    }
    Ok(())
}

/// A function with `f(x + 2π) = f(x) + 2πw`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiPeriodicFn {
    winding: f64,
    periodic: PeriodicFn,
}

/// Outcome of [`QuasiPeriodicFn::check_diffeo`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub min_derivative: f64,
    pub winding: f64,
    pub max_quasi_periodicity_defect: f64,
    pub passed: bool,
}

impl QuasiPeriodicFn {
    pub fn new(winding: f64, periodic: PeriodicFn) -> Result<Self> {
        if !winding.is_finite() {
            return Err(Error::InvalidArgument("winding must be finite".into()));
        }
        Ok(Self { winding, periodic })
    }

    /// Samples `f` on an `n`-point grid, storing `f(x) - w x`.
    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, winding: f64, f: F) -> Result<Self> {
        let periodic = PeriodicFn::from_fn(n, |x| f(x) - winding * x)?;
        Self::new(winding, periodic)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(1.0, PeriodicFn::zeros(n)?)
    }

    /// `x ↦ x + θ`.
    pub fn rotation(n: usize, theta: f64) -> Result<Self> {
        Self::new(1.0, PeriodicFn::from_fn(n, |_| theta)?)
    }

    pub fn winding(&self) -> f64 {
        self.winding
    }

    pub fn periodic_part(&self) -> &PeriodicFn {
        &self.periodic
    }

    pub fn grid_size(&self) -> usize {
        self.periodic.grid_size()
    }

    /// Full values `f(x_j)` on the grid.
    pub fn values(&self) -> Vec<f64> {
        let n = self.grid_size();
        self.periodic
            .samples()
            .iter()
            .enumerate()
            .map(|(j, &p)| self.winding * grid_point(n, j) + p)
            .collect()
    }

    pub fn evaluator(&self) -> QpEvaluator {
        QpEvaluator { winding: self.winding, periodic: self.periodic.interpolant() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.evaluator().eval(x)
    }

    /// Spectrum of the periodic part, with the round-off floor set by the
    /// full values `w x + p(x)`.
    pub fn spectrum(&self) -> Spectrum {
        self.periodic.spectrum().with_scale(TAU * self.winding.abs())
    }

    /// Derivative of the full function; the winding enters order one only.
    pub fn derivative(&self, order: u32) -> Result<PeriodicFn> {
        check_order(order)?;
        let d = PeriodicFn { samples: self.spectrum().derivative_samples(order) };
        Ok(if order == 1 { d.shift_value(self.winding) } else { d })
    }

    /// Adds a constant: `f + c`.
    pub fn shifted(&self, c: f64) -> QuasiPeriodicFn {
        Self { winding: self.winding, periodic: self.periodic.shift_value(c) }
    }

    pub fn scaled(&self, s: f64) -> QuasiPeriodicFn {
        Self { winding: self.winding * s, periodic: self.periodic.scale(s) }
    }

    /// `f + g` with windings added.
    pub fn add_periodic(&self, g: &PeriodicFn) -> Result<QuasiPeriodicFn> {
        Ok(Self { winding: self.winding, periodic: self.periodic.add(g)? })
    }

    pub fn check_diffeo(&self) -> ValidationReport {
        let min_derivative = self.derivative(1).map(|d| d.min()).unwrap_or(f64::NAN);
        let ev = self.evaluator();
        let n = self.grid_size();
        let defect = (0..n)
            .map(|j| {
                let x = grid_point(n, j);
                (ev.eval(x + TAU) - ev.eval(x) - TAU * self.winding).abs()
            })
            .fold(0.0, f64::max);
        let passed = min_derivative > 0.0 && (self.winding - 1.0).abs() <= 1e-12 && defect <= 1e-12;
        ValidationReport {
            min_derivative,
            winding: self.winding,
            max_quasi_periodicity_defect: defect,
            passed,
        }
    }

    fn require_monotone(&self, what: &str) -> Result<PeriodicFn> {
        let d = self.derivative(1)?;
        let m = d.min();
        if !(m > 0.0) || self.winding <= 0.0 {
            return Err(Error::Domain(format!("{what} is not increasing (min derivative {m:.3e})")));
        }
        Ok(d)
    }

    /// `self ∘ inner`; the inner map must be increasing with integer winding.
    pub fn compose(&self, inner: &QuasiPeriodicFn) -> Result<QuasiPeriodicFn> {
        if self.grid_size() != inner.grid_size() {
            return Err(Error::InvalidArgument("grid mismatch in composition".into()));
        }
        inner.require_monotone("inner map")?;
        let wi = inner.winding;
        if (wi - wi.round()).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "inner winding {wi} is not an integer; composite is not quasi-periodic"
            )));
        }
        let w = self.winding * wi.round();
        let outer = self.evaluator();
        let n = self.grid_size();
        let samples = inner
            .values()
            .into_iter()
            .enumerate()
            .map(|(j, h)| outer.eval(h) - w * grid_point(n, j))
            .collect();
        Self::new(w, PeriodicFn::new(samples)?)
    }

    /// Solves `f(y) = target` for an increasing `f`.
    pub fn solve(&self, target: f64) -> Result<f64> {
        self.require_monotone("function")?;
        Ok(self.evaluator().solve(target))
    }

    /// The inverse diffeomorphism `g` with `f(g(x)) = x`.
    pub fn invert(&self) -> Result<QuasiPeriodicFn> {
        self.require_monotone("function")?;
        let ev = self.evaluator();
        let n = self.grid_size();
        let w = 1.0 / self.winding;
        let samples = (0..n)
            .map(|j| {
                let x = grid_point(n, j);
                ev.solve(x) - w * x
            })
            .collect();
        Self::new(w, PeriodicFn::new(samples)?)
    }

    /// The Schwarzian `f'''/f' - (3/2)(f''/f')²`.
    pub fn schwarzian(&self) -> Result<PeriodicFn> {
        let spec = self.spectrum();
        let d1 = spec.derivative_samples(1);
        let d2 = spec.derivative_samples(2);
        let d3 = spec.derivative_samples(3);
        let mut out = Vec::with_capacity(d1.len());
        for ((a, b), c) in d1.iter().zip(&d2).zip(&d3) {
            let fp = a + self.winding;
            if !(fp > 0.0) {
                return Err(Error::Domain(format!("f' = {fp:.3e} is not positive")));
            }
            out.push(schwarzian_from_derivatives(fp, *b, *c));
        }
        PeriodicFn::new(out)
    }
}

/// Pointwise evaluator of a quasi-periodic function.
#[derive(Debug, Clone)]
pub struct QpEvaluator {
    winding: f64,
    periodic: Interpolant,
}

impl QpEvaluator {
    pub fn eval(&self, x: f64) -> f64 {
        self.winding * x + self.periodic.eval(x)
    }

    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        let d = self.periodic.eval_derivative(x, order);
        if order == 1 {
            d + self.winding
        } else {
            d
        }
    }

    /// `[f, f', f'', f''']` at `x`.
    pub fn jet(&self, x: f64) -> [f64; 4] {
        let mut j = self.periodic.jet(x);
        j[0] += self.winding * x;
        j[1] += self.winding;
        j
    }

    /// Safeguarded Newton iteration inside a bracket; assumes monotonicity.
    pub fn solve(&self, target: f64) -> f64 {
        let w = self.winding;
        let mut guess = target / w;
        let p0 = self.periodic.eval(guess);
        guess -= p0 / w;
        let amp = self.periodic.coeffs.iter().skip(1).map(|c| 2.0 * c.norm()).sum::<f64>()
            + self.periodic.nyquist.abs();
        let c0 = self.periodic.coeffs[0].re;
        let mut lo = (target - c0 - amp) / w - 1e-9;
        let mut hi = (target - c0 + amp) / w + 1e-9;
        let mut x = guess.clamp(lo, hi);
        for _ in 0..200 {
            let fx = self.eval(x) - target;
            if fx == 0.0 {
                return x;
            }
            if fx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.derivative(x, 1);
            let mut next = x - fx / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) || hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

pub fn schwarzian_from_derivatives(d1: f64, d2: f64, d3: f64) -> f64 {
    let r = d2 / d1;
    d3 / d1 - 1.5 * r * r
}

/// Schwarzian of an analytic map written against [`Jet3`], at `x`.
pub fn schwarzian_at<F: Fn(Jet3) -> Jet3>(f: F, x: f64) -> Result<f64> {
    let j = f(Jet3::var(x));
    let d1 = j.derivative(1);
    if d1 == 0.0 || !d1.is_finite() {
        return Err(Error::Domain(format!("vanishing derivative at x = {x}")));
    }
    Ok(schwarzian_from_derivatives(d1, j.derivative(2), j.derivative(3)))
}

/// Samples the Schwarzian of an analytic map on an `n`-point grid.
pub fn schwarzian_of_fn<F: Fn(Jet3) -> Jet3>(n: usize, f: F) -> Result<PeriodicFn> {
    check_grid_size(n)?;
    let vals = (0..n).map(|j| schwarzian_at(&f, grid_point(n, j))).collect::<Result<Vec<_>>>()?;
    PeriodicFn::new(vals)
}

/// Largest grid spacing-resolved mode for an `n`-point grid.
pub fn nyquist(n: usize) -> usize {
    n / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_err<F: Fn(f64) -> f64>(p: &PeriodicFn, exact: F) -> f64 {
        p.samples().iter().zip(p.nodes()).map(|(v, x)| (v - exact(x)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_derivative_is_one() {
        let id = QuasiPeriodicFn::identity(64).unwrap();
        let d = id.derivative(1).unwrap();
        assert!(max_err(&d, |_| 1.0) == 0.0);
    }

    #[test]
    fn second_derivative_of_sine() {
        let f = PeriodicFn::from_fn(256, f64::sin).unwrap();
        let d = f.derivative(2).unwrap();
        assert!(max_err(&d, |x| -x.sin()) <= 1e-10);
    }

    #[test]
    fn third_derivative_of_perturbed_identity() {
        let f = QuasiPeriodicFn::from_fn(512, 1.0, |x| x + 0.3 * x.sin()).unwrap();
        let d = f.derivative(3).unwrap();
        assert!(max_err(&d, |x| -0.3 * x.cos()) <= 1e-9);
    }

    #[test]
    fn derivative_order_is_validated() {
        let f = PeriodicFn::zeros(16).unwrap();
        assert!(matches!(f.derivative(0), Err(Error::InvalidArgument(_))));
        assert!(matches!(f.derivative(4), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn grid_size_must_be_power_of_two() {
        assert!(PeriodicFn::new(vec![0.0; 12]).is_err());
        assert!(PeriodicFn::new(vec![0.0; 2]).is_err());
    }

    #[test]
    fn compose_with_identity_is_exact_on_grid() {
        let n = 128;
        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.2 * x.sin()).unwrap();
        let id = QuasiPeriodicFn::identity(n).unwrap();
        let a = f.compose(&id).unwrap();
        assert!(a.periodic_part().max_abs_diff(f.periodic_part()).unwrap() <= 1e-14);
        let b = id.compose(&f).unwrap();
        assert!(b.periodic_part().max_abs_diff(f.periodic_part()).unwrap() <= 1e-15);
    }

    #[test]
    fn compose_matches_direct_evaluation() {
        let n = 1024;
        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.2 * x.sin()).unwrap();
        let h = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.1 * x.cos()).unwrap();
        let fh = f.compose(&h).unwrap();
        let vals = fh.values();
        for (j, v) in vals.iter().enumerate() {
            let x = grid_point(n, j);
            let hx = x + 0.1 * x.cos();
            assert!((v - (hx + 0.2 * hx.sin())).abs() <= 1e-10);
        }
    }

    #[test]
    fn compose_rejects_non_monotone_inner() {
        let n = 64;
        let f = QuasiPeriodicFn::identity(n).unwrap();
        let h = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 1.5 * x.sin()).unwrap();
        assert!(matches!(f.compose(&h), Err(Error::Domain(_))));
    }

    #[test]
    fn invert_identity_and_round_trip() {
        let n = 256;
        let id = QuasiPeriodicFn::identity(n).unwrap();
        let g = id.invert().unwrap();
        assert!(g.periodic_part().sup_norm() <= 1e-15);

        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.3 * x.sin()).unwrap();
        let g = f.invert().unwrap();
        // Bisection oracle per node.
        for (j, gv) in g.values().iter().enumerate() {
            let x = grid_point(n, j);
            let (mut lo, mut hi) = (x - 1.0, x + 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid + 0.3 * mid.sin() < x {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((gv - 0.5 * (lo + hi)).abs() <= 1e-12);
            assert!((gv + 0.3 * gv.sin() - x).abs() <= 1e-10);
        }
        let ff = g.invert().unwrap();
        assert!(ff.periodic_part().max_abs_diff(f.periodic_part()).unwrap() <= 1e-9);
    }

    #[test]
    fn invert_rejects_non_monotone() {
        let f = QuasiPeriodicFn::from_fn(64, 1.0, |x| x + 1.5 * x.sin()).unwrap();
        assert!(matches!(f.invert(), Err(Error::Domain(_))));
    }

    #[test]
    fn schwarzian_examples() {
        let id = QuasiPeriodicFn::identity(64).unwrap();
        assert!(id.schwarzian().unwrap().sup_norm() == 0.0);

        let alpha = 1.0;
        let s = schwarzian_at(|y| (y * alpha).exp() / alpha, 0.4).unwrap();
        assert!((s + 0.5 * alpha * alpha).abs() < 1e-14);

        for y in [0.0, 0.3, 1.0, 2.5, 4.0] {
            let v = schwarzian_at(|y| (y * 0.5).tan() * 2.0, y).unwrap();
            assert!((v - 0.5).abs() < 1e-12, "{y}: {v}");
        }
    }

    #[test]
    fn schwarzian_rejects_vanishing_derivative() {
        assert!(schwarzian_at(|y| y * y, 0.0).is_err());
        let f = QuasiPeriodicFn::from_fn(64, 1.0, |x| x + 1.5 * x.sin()).unwrap();
        assert!(matches!(f.schwarzian(), Err(Error::Domain(_))));
    }

    #[test]
    fn check_diffeo_reports() {
        let id = QuasiPeriodicFn::identity(64).unwrap().check_diffeo();
        assert!(id.passed && id.min_derivative == 1.0);
        let bad = QuasiPeriodicFn::from_fn(64, 1.0, |x| x + 1.5 * x.sin()).unwrap().check_diffeo();
        assert!(!bad.passed && bad.min_derivative < 0.0);
        let ok = QuasiPeriodicFn::from_fn(64, 1.0, |x| x + 0.5 * x.sin()).unwrap().check_diffeo();
        assert!(ok.passed);
        assert!((ok.min_derivative - 0.5).abs() < 1e-13);
    }

    #[test]
    fn antiderivative_of_cosine() {
        let f = PeriodicFn::from_fn(64, |x| 2.0 + x.cos()).unwrap();
        let spec = f.spectrum();
        assert!((spec.mean() - 2.0).abs() < 1e-15);
        let p = spec.antiderivative_interpolant();
        for x in [0.1, 1.7, 4.4] {
            assert!((p.eval(x) - x.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolant_jet_matches_derivatives() {
        let f = PeriodicFn::from_fn(64, |x| (x.sin()).exp()).unwrap();
        let it = f.interpolant();
        let x = 0.77;
        let j = it.jet(x);
        let e = x.sin().exp();
        assert!((j[0] - e).abs() < 1e-13);
        assert!((j[1] - x.cos() * e).abs() < 1e-12);
        assert!((j[2] - (x.cos().powi(2) - x.sin()) * e).abs() < 1e-11);
    }
}
