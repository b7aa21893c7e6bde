//! Symplectic form and moment maps in the diffeomorphism and Darboux charts.

use std::f64::consts::PI;

use crate::darboux::{DarbouxField, TeichPoint, REMOVABLE_DELTA};
use crate::error::{Error, Result};
use crate::params::{OrbitKind, OrbitParams};
use crate::qpfunc::{PeriodicFn, QuasiPeriodicFn};
use crate::util::removable;

/// Which coordinates a tangent vector is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// A variation `δf` of a diffeomorphism.
    Diffeo,
    /// A variation `δu` of a Darboux field.
    Darboux,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub chart: Chart,
    pub delta: PeriodicFn,
}

impl TangentVector {
    pub fn diffeo(delta: PeriodicFn) -> Self {
        Self { chart: Chart::Diffeo, delta }
    }

    pub fn darboux(delta: PeriodicFn) -> Self {
        Self { chart: Chart::Darboux, delta }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { chart: self.chart, delta: self.delta.scale(s) }
    }

    fn expect(&self, chart: Chart) -> Result<&PeriodicFn> {
        if self.chart != chart {
            return Err(Error::InvalidArgument(format!("expected a {chart:?} tangent, got {:?}", self.chart)));
        }
        Ok(&self.delta)
    }
}

fn check_grid(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument(format!("grid mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// KKS form `∫ b0(v'w − w'v) + (c/24)(A(v)B(w) − A(w)B(v))` with
/// `A = δf'/f'` and `B = A'`.
pub fn kks_form(f: &QuasiPeriodicFn, v: &TangentVector, w: &TangentVector, params: &OrbitParams) -> Result<f64> {
    let (v, w) = (v.expect(Chart::Diffeo)?, w.expect(Chart::Diffeo)?);
    check_grid(f.grid_size(), v.grid_size())?;
    check_grid(f.grid_size(), w.grid_size())?;
    let fp = f.derivative(1)?;
    let vp = v.derivative(1)?;
    let wp = w.derivative(1)?;
    let av = vp.zip_map(&fp, |a, b| a / b)?;
    let aw = wp.zip_map(&fp, |a, b| a / b)?;
    let bv = av.derivative(1)?;
    let bw = aw.derivative(1)?;
    let c24 = params.c / 24.0;
    let n = f.grid_size();
    let dens: Vec<f64> = (0..n)
        .map(|j| {
            let s = |p: &PeriodicFn| p.samples()[j];
            params.b0 * (s(&vp) * s(w) - s(&wp) * s(v)) + c24 * (s(&av) * s(&bw) - s(&aw) * s(&bv))
        })
        .collect();
    Ok(PeriodicFn::new(dens)?.integral())
}

/// Constant form `(c/24) ∫ (δu₁ δu₂' − δu₂ δu₁')`.
pub fn darboux_form(u: &DarbouxField, a: &TangentVector, b: &TangentVector, params: &OrbitParams) -> Result<f64> {
    let (a, b) = (a.expect(Chart::Darboux)?, b.expect(Chart::Darboux)?);
    check_grid(u.grid_size(), a.grid_size())?;
    check_grid(u.grid_size(), b.grid_size())?;
    let ap = a.derivative(1)?;
    let bp = b.derivative(1)?;
    let d = a.mul(&bp)?.sub(&b.mul(&ap)?)?;
    Ok(params.c / 24.0 * d.integral())
}

/// The same form from Fourier modes: `(πc/3) Σ_{n>0} n Im(a_n conj(b_n))`.
pub fn darboux_form_modes(a: &TangentVector, b: &TangentVector, params: &OrbitParams) -> Result<f64> {
    let (a, b) = (a.expect(Chart::Darboux)?, b.expect(Chart::Darboux)?);
    check_grid(a.grid_size(), b.grid_size())?;
    let sa = a.spectrum();
    let sb = b.spectrum();
    let m = a.grid_size() / 2;
    let s: f64 = (1..m).map(|n| n as f64 * (sa.coeffs()[n] * sb.coeffs()[n].conj()).im).sum();
    Ok(PI * params.c / 3.0 * s)
}

/// Linearized chart map `δf ↦ δu`.
///
/// Hyperbolic and parabolic: `δu = α δf + δf'/f'`. Teichmüller:
/// `δu = tan(f/2) δf + δf'/f' + cot((x−y)/2) δf(y)/f'(y)`, the last term
/// coming from the motion of `y`.
pub fn pushforward_tangent(f: &QuasiPeriodicFn, df: &TangentVector, params: &OrbitParams) -> Result<TangentVector> {
    let df = df.expect(Chart::Diffeo)?;
    check_grid(f.grid_size(), df.grid_size())?;
    let fp = f.derivative(1)?;
    let log_part = df.derivative(1)?.zip_map(&fp, |a, b| a / b)?;
    let delta = match params.kind {
        OrbitKind::Hyperbolic | OrbitKind::Parabolic => log_part.add(&df.scale(params.alpha()))?,
        OrbitKind::Teichmuller => {
            let fe = f.evaluator();
            let de = df.interpolant();
            let y = crate::darboux::to_teichmuller(f)?.y;
            let k = de.eval(y) / fe.derivative(y, 1);
            let g = |x: f64| (fe.eval(x) / 2.0).tan() * de.eval(x) + k / ((x - y) / 2.0).tan();
            let n = f.grid_size();
            let sing = PeriodicFn::from_fn(n, |x| removable(x, y, REMOVABLE_DELTA, g))?;
            log_part.add(&sing)?
        }
    };
    Ok(TangentVector::darboux(delta))
}

/// Removes the `psl(2,R)` part of `δf` so that the variation preserves the
/// normalization `f(0) = 0`, `f(π) = π`, `f'(π) = 1`.
///
/// Subtracts `a + b cos f + c sin f`, which lies in the kernel of the KKS form
/// at `b0 = c/24`.
pub fn project_to_section(f: &QuasiPeriodicFn, df: &TangentVector) -> Result<TangentVector> {
    let d = df.expect(Chart::Diffeo)?;
    check_grid(f.grid_size(), d.grid_size())?;
    let fe = f.evaluator();
    let de = d.interpolant();
    let (f0, fpi, fppi) = (fe.eval(0.0), fe.eval(PI), fe.derivative(PI, 1));
    let m = [
        [1.0, f0.cos(), f0.sin()],
        [1.0, fpi.cos(), fpi.sin()],
        [0.0, -fpi.sin() * fppi, fpi.cos() * fppi],
    ];
    let rhs = [de.eval(0.0), de.eval(PI), de.eval_derivative(PI, 1)];
    let [a, b, c] = solve3(m, rhs)?;
    let out: Vec<f64> = d
        .samples()
        .iter()
        .zip(f.values())
        .map(|(v, t)| v - (a + b * t.cos() + c * t.sin()))
        .collect();
    let out = PeriodicFn::new(out)?;
    Ok(TangentVector::diffeo(out))
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap_or(col);
        if m[piv][col].abs() < 1e-12 {
            return Err(Error::Numeric("singular normalization system".into()));
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for i in col + 1..3 {
            let k = m[i][col] / m[col][col];
            for j in col..3 {
                m[i][j] -= k * m[col][j];
            }
            r[i] -= k * r[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Ok(x)
}

/// A point of the orbit in one of the available charts.
#[derive(Debug, Clone, Copy)]
pub enum ChartState<'a> {
    Diffeo(&'a QuasiPeriodicFn),
    Darboux(&'a DarbouxField),
    /// Teichmüller model away from the section `y = π`.
    Teich(&'a TeichPoint),
}

/// `u' tan(x/2)` near `x = π` needs `u'(π) = 0`.
const TEICH_SLOPE_GUARD: f64 = 1e-6;

/// Pointwise moment density whose integral is the rotation moment.
///
/// Diffeomorphism chart: `b0 f'² + (c/12) S(f)`. Darboux chart:
/// `(c/12)(u'' − u'²/2)`, plus `−u' tan(x/2) + 1/2` on the Teichmüller
/// section. A general Teichmüller point uses `+u' cot((x−y)/2) + 1/2`.
pub fn moment_density(state: ChartState<'_>, params: &OrbitParams) -> Result<PeriodicFn> {
    let c12 = params.c / 12.0;
    match state {
        ChartState::Diffeo(f) => {
            let fp = f.derivative(1)?;
            let s = f.schwarzian()?;
            fp.zip_map(&s, |d, s| params.b0 * d * d + c12 * s)
        }
        ChartState::Darboux(u) => {
            let up = u.field().derivative(1)?;
            let upp = u.field().derivative(2)?;
            let base = upp.zip_map(&up, |a, b| c12 * (a - 0.5 * b * b))?;
            match u.kind() {
                OrbitKind::Teichmuller => {
                    params.require(OrbitKind::Teichmuller)?;
                    teich_correction(&base, u.field().periodic_part(), PI, c12, |x| -(x / 2.0).tan())
                }
                _ => Ok(base),
            }
        }
        ChartState::Teich(p) => {
            params.require(OrbitKind::Teichmuller)?;
            let up = p.u.derivative(1)?;
            let upp = p.u.derivative(2)?;
            let base = upp.zip_map(&up, |a, b| c12 * (a - 0.5 * b * b))?;
            let y = p.y;
            teich_correction(&base, &p.u, y, c12, move |x| 1.0 / ((x - y) / 2.0).tan())
        }
    }
}

/// Adds `(c/12)(u'·k(x) + 1/2)` where `k` has a simple pole at `y`.
fn teich_correction<K: Fn(f64) -> f64>(base: &PeriodicFn, u: &PeriodicFn, y: f64, c12: f64, kernel: K) -> Result<PeriodicFn> {
    let it = u.interpolant();
    let slope = it.eval_derivative(y, 1);
    if slope.abs() > TEICH_SLOPE_GUARD {
        return Err(Error::Domain(format!("u'({y:.6}) = {slope:.3e}; the density is singular there")));
    }
    // u'(y) vanishes on the model; dropping its round-off keeps the pole out.
    let g = |x: f64| (it.eval_derivative(x, 1) - slope) * kernel(x);
    Ok(base.map_nodes(|x, b| b + c12 * (removable(x, y, REMOVABLE_DELTA, g) + 0.5)))
}

/// Moment of rigid rotations, the integral of [`moment_density`].
pub fn moment_s1(state: ChartState<'_>, params: &OrbitParams) -> Result<f64> {
    match state {
        ChartState::Darboux(u) if u.kind() != OrbitKind::Teichmuller => {
            let up = u.field().derivative(1)?;
            Ok(-params.c / 24.0 * up.mul(&up)?.integral())
        }
        _ => Ok(moment_density(state, params)?.integral()),
    }
}

/// Outcome of the finite-difference check of `δS = 2S Y' + Y S' + Y'''`, `Y = δf/f'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Report {
    pub h: f64,
    pub residual: f64,
    /// Residual at `h/2`.
    pub residual_half: f64,
    /// `residual / residual_half`; close to 4 for second-order behaviour.
    pub ratio: f64,
    /// Residual at a step where the `O(h²)` term is negligible; bounds the
    /// round-off and discretization floor for every larger step.
    pub noise: f64,
    /// Set when round-off dominates at `h/2` and `ratio` carries no information.
    pub at_noise_floor: bool,
    /// Step at which the order was measured: `h`, or larger when `h` sits at the floor.
    pub order_h: f64,
    /// Residual ratio at `order_h` and `order_h/2`.
    pub order_ratio: f64,
}

/// Step small enough that the residual is all floor.
const NOISE_PROBE_H: f64 = 1e-6;
/// Signal must exceed this multiple of the round-off to measure the order.
const NOISE_MARGIN: f64 = 10.0;
/// Largest step tried when escalating past the floor.
const MAX_ORDER_H: f64 = 1e-2;

fn schwarzian_band(f: &QuasiPeriodicFn, keep: usize) -> Result<PeriodicFn> {
    let spec = f.spectrum();
    let d1 = spec.derivative_samples_band(1, keep);
    let d2 = spec.derivative_samples_band(2, keep);
    let d3 = spec.derivative_samples_band(3, keep);
    let w = f.winding();
    let mut out = Vec::with_capacity(d1.len());
    for ((a, b), c) in d1.iter().zip(&d2).zip(&d3) {
        let fp = a + w;
        if !(fp > 0.0) {
            return Err(Error::Domain(format!("f' = {fp:.3e} is not positive")));
        }
        out.push(crate::qpfunc::schwarzian_from_derivatives(fp, *b, *c));
    }
    PeriodicFn::new(out)
}

fn lemma1_residual(f: &QuasiPeriodicFn, df: &PeriodicFn, h: f64, keep: usize) -> Result<f64> {
    let plus = f.add_periodic(&df.scale(h))?;
    let minus = f.add_periodic(&df.scale(-h))?;
    let sp = schwarzian_band(&plus, keep)?;
    let sm = schwarzian_band(&minus, keep)?;
    let fd = sp.sub(&sm)?.scale(0.5 / h);
    let s = schwarzian_band(f, keep)?;
    let fspec = f.spectrum();
    let fp: Vec<f64> = fspec.derivative_samples_band(1, keep).iter().map(|d| d + f.winding()).collect();
    let y = PeriodicFn::new(df.samples().iter().zip(&fp).map(|(a, b)| a / b).collect())?;
    // Y and S(f) are not band limited; their derivatives use the full spectrum.
    let y1 = y.derivative(1)?;
    let y3 = y.derivative(3)?;
    let s1 = s.derivative(1)?;
    let (y1, y3, s1) = (y1.samples(), y3.samples(), s1.samples());
    let n = f.grid_size();
    let mut r = 0.0f64;
    for j in 0..n {
        let rhs = 2.0 * s.samples()[j] * y1[j] + y.samples()[j] * s1[j] + y3[j];
        r = r.max((fd.samples()[j] - rhs).abs());
    }
    Ok(r)
}

/// Finite-difference check of the variation formula for the Schwarzian.
///
/// Derivatives are taken on the common band of `f` and `δf` so that both
/// shifted maps see the same spectral truncation.
pub fn verify_lemma1(f: &QuasiPeriodicFn, df: &PeriodicFn, h: f64) -> Result<Lemma1Report> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    check_grid(f.grid_size(), df.grid_size())?;
    let fmin = f.derivative(1)?.min();
    if !(fmin > 0.0) {
        return Err(Error::Domain("f is not a diffeomorphism".into()));
    }
    let keep = f.spectrum().bandwidth().max(df.spectrum().bandwidth()).min(f.grid_size() / 2);
    let noise = lemma1_residual(f, df, NOISE_PROBE_H, keep)?;
    let floored = |r_half: f64| r_half < NOISE_MARGIN * noise;
    let residual = lemma1_residual(f, df, h, keep)?;
    let residual_half = lemma1_residual(f, df, h / 2.0, keep)?;
    let ratio = residual / residual_half;
    let at_noise_floor = floored(residual_half);
    let (mut order_h, mut order_ratio, mut stuck) = (h, ratio, at_noise_floor);
    while stuck && order_h * 10.0 <= MAX_ORDER_H * (1.0 + 1e-12) {
        order_h *= 10.0;
        let half = lemma1_residual(f, df, order_h / 2.0, keep)?;
        order_ratio = lemma1_residual(f, df, order_h, keep)? / half;
        stuck = floored(half);
    }
    Ok(Lemma1Report { h, residual, residual_half, ratio, noise, at_noise_floor, order_h, order_ratio })
}

/// `ω(∂_θ u, δu)` and `−d/dε μ(u + ε δu)`; equal for the rotation moment.
pub fn hamiltonian_check(u: &DarbouxField, du: &PeriodicFn, params: &OrbitParams, eps: f64) -> Result<(f64, f64)> {
    let gen = u.field().derivative(1)?;
    let omega = darboux_form(u, &TangentVector::darboux(gen), &TangentVector::darboux(du.clone()), params)?;
    let shifted = |s: f64| -> Result<f64> {
        let v = DarbouxField::new(u.field().add_periodic(&du.scale(s))?, u.kind())?;
        moment_s1(ChartState::Darboux(&v), params)
    };
    let deriv = (shifted(eps)? - shifted(-eps)?) / (2.0 * eps);
    Ok((omega, -deriv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darboux::{to_darboux_hyperbolic, to_darboux_parabolic, to_teichmuller, teichmuller_section};

    fn p(n: usize, f: impl Fn(f64) -> f64) -> PeriodicFn {
        PeriodicFn::from_fn(n, f).unwrap()
    }

    #[test]
    fn kks_antisymmetry_and_bilinearity() {
        let n = 256;
        let params = OrbitParams::from_alpha(24.0, 1.0).unwrap();
        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.3 * x.sin()).unwrap();
        let v = TangentVector::diffeo(p(n, |x| (2.0 * x).sin() + 0.1));
        let w = TangentVector::diffeo(p(n, |x| x.cos() - 0.3 * (3.0 * x).sin()));
        assert_eq!(kks_form(&f, &v, &v, &params).unwrap(), 0.0);
        let a = kks_form(&f, &v.scaled(2.0), &w, &params).unwrap();
        let b = kks_form(&f, &v, &w, &params).unwrap();
        assert!((a - 2.0 * b).abs() <= 1e-12 * b.abs().max(1.0));
        let c = kks_form(&f, &w, &v, &params).unwrap();
        assert!((b + c).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn kks_matches_darboux_at_identity() {
        let n = 128;
        let params = OrbitParams::from_alpha(24.0, 1.0).unwrap();
        let f = QuasiPeriodicFn::identity(n).unwrap();
        let u = to_darboux_hyperbolic(&f, &params).unwrap();
        let v = TangentVector::diffeo(p(n, f64::sin));
        let w = TangentVector::diffeo(p(n, f64::cos));
        let k = kks_form(&f, &v, &w, &params).unwrap();
        let dv = pushforward_tangent(&f, &v, &params).unwrap();
        let dw = pushforward_tangent(&f, &w, &params).unwrap();
        let d = darboux_form(&u, &dv, &dw, &params).unwrap();
        assert!((k - d).abs() <= 1e-8, "{k} vs {d}");
        assert!((k + 4.0 * PI).abs() <= 1e-12);
    }

    #[test]
    fn darboux_form_sine_cosine() {
        let n = 64;
        let params = OrbitParams::from_alpha(12.0, 1.0).unwrap();
        let u = DarbouxField::from_periodic(PeriodicFn::zeros(n).unwrap(), &params).unwrap();
        for k in 1..4 {
            let kf = k as f64;
            let a = TangentVector::darboux(p(n, |x| (kf * x).sin()));
            let b = TangentVector::darboux(p(n, |x| (kf * x).cos()));
            let v = darboux_form(&u, &a, &b, &params).unwrap();
            assert!((v + PI * kf).abs() <= 1e-12, "{v}");
            let m = darboux_form_modes(&a, &b, &params).unwrap();
            assert!((v - m).abs() <= 1e-12);
            assert_eq!(darboux_form(&u, &a, &a, &params).unwrap(), 0.0);
        }
    }

    #[test]
    fn darboux_modes_random_field() {
        let n = 128;
        let params = OrbitParams::from_alpha(7.0, 0.3).unwrap();
        let u = DarbouxField::from_periodic(PeriodicFn::zeros(n).unwrap(), &params).unwrap();
        let a = TangentVector::darboux(p(n, |x| (x.sin() + 0.2 * (3.0 * x).cos()).exp()));
        let b = TangentVector::darboux(p(n, |x| (2.0 * x).cos() * x.sin() + 0.7 * (5.0 * x).sin()));
        let v = darboux_form(&u, &a, &b, &params).unwrap();
        let m = darboux_form_modes(&a, &b, &params).unwrap();
        assert!((v - m).abs() <= 1e-12);
    }

    #[test]
    fn pushforward_examples() {
        let n = 64;
        let params = OrbitParams::from_alpha(12.0, 1.0).unwrap();
        let id = QuasiPeriodicFn::identity(n).unwrap();
        let z = pushforward_tangent(&id, &TangentVector::diffeo(PeriodicFn::zeros(n).unwrap()), &params).unwrap();
        assert_eq!(z.delta.sup_norm(), 0.0);
        let s = pushforward_tangent(&id, &TangentVector::diffeo(p(n, f64::sin)), &params).unwrap();
        assert!(s.delta.max_abs_diff(&p(n, |x| x.sin() + x.cos())).unwrap() <= 1e-14);
    }

    #[test]
    fn pushforward_is_chart_derivative() {
        let n = 256;
        let params = OrbitParams::from_alpha(12.0, 0.8).unwrap();
        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.3 * x.sin() + 0.05 * (2.0 * x).cos()).unwrap();
        let df = p(n, |x| (2.0 * x).sin() - 0.4 * x.cos());
        let du = pushforward_tangent(&f, &TangentVector::diffeo(df.clone()), &params).unwrap().delta;
        let fd = |h: f64| {
            let a = to_darboux_hyperbolic(&f.add_periodic(&df.scale(h)).unwrap(), &params).unwrap();
            let b = to_darboux_hyperbolic(&f.add_periodic(&df.scale(-h)).unwrap(), &params).unwrap();
            // Gauge: compare derivatives of the unnormalized difference up to a constant.
            let d = a.field().periodic_part().sub(b.field().periodic_part()).unwrap().scale(0.5 / h);
            let off = du.samples()[0] - d.samples()[0];
            d.shift_value(off).max_abs_diff(&du).unwrap()
        };
        let (e1, e2) = (fd(1e-3), fd(5e-4));
        assert!(e1 < 1e-5 && (e1 / e2 - 4.0).abs() < 0.5, "{e1} {e2}");
    }

    #[test]
    fn moment_density_examples() {
        let n = 64;
        let params = OrbitParams::new(12.0, -0.5).unwrap();
        let id = QuasiPeriodicFn::identity(n).unwrap();
        let d = moment_density(ChartState::Diffeo(&id), &params).unwrap();
        assert!(d.shift_value(0.5).sup_norm() <= 1e-14);
        let u = to_darboux_hyperbolic(&id, &params).unwrap();
        let du = moment_density(ChartState::Darboux(&u), &params).unwrap();
        assert!(du.shift_value(0.5).sup_norm() <= 1e-14);
        let m = moment_s1(ChartState::Darboux(&u), &params).unwrap();
        assert!((m - 2.0 * PI * params.b0).abs() <= 1e-13);
    }

    #[test]
    fn moment_density_transport_hyperbolic_and_parabolic() {
        let n = 512;
        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.3 * x.sin() + 0.1 * (3.0 * x).cos()).unwrap();
        let params = OrbitParams::from_alpha(12.0, 0.7).unwrap();
        let u = to_darboux_hyperbolic(&f, &params).unwrap();
        let a = moment_density(ChartState::Diffeo(&f), &params).unwrap();
        let b = moment_density(ChartState::Darboux(&u), &params).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-9);
        let par = OrbitParams::parabolic(12.0).unwrap();
        let u = to_darboux_parabolic(&f).unwrap();
        let a = moment_density(ChartState::Diffeo(&f), &par).unwrap();
        let b = moment_density(ChartState::Darboux(&u), &par).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-9);
    }

    #[test]
    fn teichmuller_identity_moment() {
        let n = 128;
        let params = OrbitParams::teichmuller(12.0).unwrap();
        let id = QuasiPeriodicFn::identity(n).unwrap();
        let u = to_teichmuller(&id).unwrap().into_field().unwrap();
        let m = moment_s1(ChartState::Darboux(&u), &params).unwrap();
        assert!((m - PI * params.c / 12.0).abs() <= 1e-12);
        let mf = moment_s1(ChartState::Diffeo(&id), &params).unwrap();
        assert!((m - mf).abs() <= 1e-12);
    }

    #[test]
    fn teichmuller_density_transport() {
        let n = 1024;
        let params = OrbitParams::teichmuller(12.0).unwrap();
        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.3 * x.sin() + 0.1 * (2.0 * x).cos() + 0.5).unwrap();
        let a = moment_density(ChartState::Diffeo(&f), &params).unwrap();
        let p = to_teichmuller(&f).unwrap();
        let b = moment_density(ChartState::Teich(&p), &params).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-6);
        let s = teichmuller_section(&f).unwrap();
        let u = to_teichmuller(&s).unwrap().into_field().unwrap();
        let c = moment_density(ChartState::Darboux(&u), &params).unwrap();
        assert!(a.max_abs_diff(&c).unwrap() <= 1e-6);
    }

    #[test]
    fn teichmuller_density_requires_flat_point() {
        let params = OrbitParams::teichmuller(12.0).unwrap();
        let u = DarbouxField::new(QuasiPeriodicFn::from_fn(64, 0.0, |x| x.sin()).unwrap(), OrbitKind::Teichmuller).unwrap();
        assert!(matches!(moment_density(ChartState::Darboux(&u), &params), Err(Error::Domain(_))));
    }

    #[test]
    fn lemma1_identity_case() {
        let n = 1024;
        let id = QuasiPeriodicFn::identity(n).unwrap();
        let r = verify_lemma1(&id, &PeriodicFn::zeros(n).unwrap(), 1e-4).unwrap();
        assert_eq!(r.residual, 0.0);
        let r = verify_lemma1(&id, &p(n, f64::sin), 1e-4).unwrap();
        assert!(r.residual <= 1e-7, "{r:?}");
    }

    #[test]
    fn lemma1_generic_case() {
        let n = 1024;
        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.3 * x.sin() + 0.1 * (3.0 * x).cos()).unwrap();
        let df = p(n, |x| 0.5 * (2.0 * x).sin() + 0.2 * x.cos());
        let r = verify_lemma1(&f, &df, 1e-4).unwrap();
        assert!(r.residual <= 1e-5, "{r:?}");
        assert!((r.ratio - 4.0).abs() <= 0.5, "{r:?}");
    }

    #[test]
    fn hamiltonian_vector_field() {
        let n = 256;
        let params = OrbitParams::from_alpha(12.0, 0.6).unwrap();
        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.3 * x.sin()).unwrap();
        let u = to_darboux_hyperbolic(&f, &params).unwrap();
        let du = p(n, |x| (2.0 * x).cos() + 0.3 * x.sin());
        let (a, b) = hamiltonian_check(&u, &du, &params, 1e-4).unwrap();
        assert!((a - b).abs() <= 1e-5, "{a} {b}");
    }

    #[test]
    fn chart_mismatch_is_rejected() {
        let n = 32;
        let params = OrbitParams::from_alpha(12.0, 1.0).unwrap();
        let id = QuasiPeriodicFn::identity(n).unwrap();
        let v = TangentVector::darboux(p(n, f64::sin));
        assert!(matches!(kks_form(&id, &v, &v, &params), Err(Error::InvalidArgument(_))));
    }

    fn kks_vs_darboux(params: &OrbitParams, f: &QuasiPeriodicFn, v: &TangentVector, w: &TangentVector) -> (f64, f64) {
        let k = kks_form(f, v, w, params).unwrap();
        let dv = pushforward_tangent(f, v, params).unwrap();
        let dw = pushforward_tangent(f, w, params).unwrap();
        let u = DarbouxField::from_periodic(PeriodicFn::zeros(f.grid_size()).unwrap(), params).unwrap();
        (k, darboux_form(&u, &dv, &dw, params).unwrap())
    }

    fn generic_pair(n: usize) -> (QuasiPeriodicFn, TangentVector, TangentVector) {
        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.3 * x.sin() + 0.1 * (2.0 * x).cos() + 0.5).unwrap();
        let v = TangentVector::diffeo(p(n, |x| (2.0 * x).sin() - 0.4 * x.cos() + 0.2));
        let w = TangentVector::diffeo(p(n, |x| 0.3 * (3.0 * x).cos() + x.sin() - 0.1));
        (f, v, w)
    }

    #[test]
    fn kks_matches_darboux_generic() {
        let (f, v, w) = generic_pair(1024);
        for params in [OrbitParams::from_alpha(12.0, 0.8).unwrap(), OrbitParams::parabolic(12.0).unwrap()] {
            let (k, d) = kks_vs_darboux(&params, &f, &v, &w);
            assert!((k - d).abs() <= 1e-8 * k.abs().max(1.0), "{:?}: {k} vs {d}", params.kind);
        }
    }

    #[test]
    fn kks_matches_darboux_on_teichmuller_section() {
        let params = OrbitParams::teichmuller(12.0).unwrap();
        let (f0, v, w) = generic_pair(1024);
        let f = teichmuller_section(&f0).unwrap();
        let k = kks_form(&f, &v, &w, &params).unwrap();
        let pv = project_to_section(&f, &v).unwrap();
        let pw = project_to_section(&f, &w).unwrap();
        // The removed part is KKS-degenerate.
        assert!((kks_form(&f, &pv, &pw, &params).unwrap() - k).abs() <= 1e-10);
        let (_, d) = kks_vs_darboux(&params, &f, &pv, &pw);
        assert!((k - d).abs() <= 1e-8, "{k} vs {d}");
    }

    #[test]
    fn teichmuller_push_of_mobius_direction_is_not_zero() {
        // The chart depends on the representative, hence the projection above.
        let n = 512;
        let params = OrbitParams::teichmuller(12.0).unwrap();
        let (f, _, _) = generic_pair(n);
        let d = pushforward_tangent(&f, &TangentVector::diffeo(p(n, |_| 1.0)), &params).unwrap();
        assert!(d.delta.sup_norm() > 0.1);
        let s = teichmuller_section(&f).unwrap();
        let pd = project_to_section(&s, &TangentVector::diffeo(p(n, |_| 1.0))).unwrap();
        assert!(pd.delta.sup_norm() <= 1e-12);
    }

    #[test]
    fn teichmuller_pushforward_matches_finite_difference() {
        let n = 1024;
        let params = OrbitParams::teichmuller(12.0).unwrap();
        let (f, v, _) = generic_pair(n);
        let du = pushforward_tangent(&f, &v, &params).unwrap().delta;
        let err = |h: f64| {
            let a = to_teichmuller(&f.add_periodic(&v.delta.scale(h)).unwrap()).unwrap();
            let b = to_teichmuller(&f.add_periodic(&v.delta.scale(-h)).unwrap()).unwrap();
            a.u.sub(&b.u).unwrap().scale(0.5 / h).max_abs_diff(&du).unwrap()
        };
        let (e1, e2) = (err(1e-3), err(5e-4));
        assert!(e1 < 1e-4 && (e1 / e2 - 4.0).abs() < 0.5, "{e1} {e2}");
    }

    #[test]
    fn teichmuller_moment_matches_diffeo_chart() {
        let params = OrbitParams::teichmuller(12.0).unwrap();
        let (f, _, _) = generic_pair(1024);
        let s = teichmuller_section(&f).unwrap();
        let u = to_teichmuller(&s).unwrap().into_field().unwrap();
        let a = moment_s1(ChartState::Darboux(&u), &params).unwrap();
        let b = moment_s1(ChartState::Diffeo(&f), &params).unwrap();
        assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }
}
