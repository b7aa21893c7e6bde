//! Chart maps between circle diffeomorphisms and Darboux fields.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{OrbitKind, OrbitParams};
use crate::qpfunc::{grid_point, PeriodicFn, QuasiPeriodicFn, Spectrum};
use crate::quadrature::kronrod_mean;
use crate::util::{circle_offset, pairwise_sum, removable};

/// Half-width of the interpolation window around removable singularities.
pub const REMOVABLE_DELTA: f64 = 1e-3;

/// `u'(y) = 0` tolerance for Teichmüller points.
pub const TEICH_SLOPE_TOL: f64 = 1e-8;
/// Integral-constraint tolerance for Teichmüller points.
pub const TEICH_CONSTRAINT_TOL: f64 = 1e-6;

/// Darboux field `u` with its additive constant fixed.
///
/// Hyperbolic and parabolic fields satisfy `u(0) = 0`, Teichmüller fields
/// `u(π) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxField {
    u: QuasiPeriodicFn,
    kind: OrbitKind,
}

impl DarbouxField {
    /// Wraps `u` and shifts it into gauge.
    pub fn new(u: QuasiPeriodicFn, kind: OrbitKind) -> Result<Self> {
        if kind != OrbitKind::Hyperbolic && u.winding() != 0.0 {
            return Err(Error::InvalidParams(format!("{kind:?} fields carry no winding, got {}", u.winding())));
        }
        let node = gauge_node(kind, u.grid_size());
        let shift = u.periodic_part().samples()[node] + u.winding() * grid_point(u.grid_size(), node);
        Ok(Self { u: u.shifted(-shift), kind })
    }

    /// Field `αx + p(x)` for the orbit described by `params`.
    pub fn from_periodic(p: PeriodicFn, params: &OrbitParams) -> Result<Self> {
        Self::new(QuasiPeriodicFn::new(params.alpha(), p)?, params.kind)
    }

    pub fn field(&self) -> &QuasiPeriodicFn {
        &self.u
    }

    pub fn kind(&self) -> OrbitKind {
        self.kind
    }

    pub fn winding(&self) -> f64 {
        self.u.winding()
    }

    pub fn grid_size(&self) -> usize {
        self.u.grid_size()
    }

    /// Residual of the gauge condition; zero up to round-off.
    pub fn gauge_residual(&self) -> f64 {
        let node = gauge_node(self.kind, self.grid_size());
        (self.u.values()[node]).abs()
    }

    /// `x ↦ u(x + θ)`, re-gauged.
    pub fn rotated(&self, theta: f64) -> Result<Self> {
        let n = self.grid_size();
        let ev = self.u.evaluator();
        let w = self.u.winding();
        let p = PeriodicFn::from_fn(n, |x| ev.eval(x + theta) - w * x)?;
        Self::new(QuasiPeriodicFn::new(w, p)?, self.kind)
    }
}

fn gauge_node(kind: OrbitKind, n: usize) -> usize {
    match kind {
        OrbitKind::Teichmuller => n / 2,
        _ => 0,
    }
}

fn require_diffeo(f: &QuasiPeriodicFn, what: &str) -> Result<PeriodicFn> {
    let d = f.derivative(1)?;
    let m = d.min();
    if !(m > 0.0) {
        return Err(Error::Domain(format!("{what} is not a diffeomorphism (min f' = {m:.3e})")));
    }
    if (f.winding() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("{what} has winding {} instead of 1", f.winding())));
    }
    Ok(d)
}

/// `u = αf + log f'`.
pub fn to_darboux_hyperbolic(f: &QuasiPeriodicFn, params: &OrbitParams) -> Result<DarbouxField> {
    params.require(OrbitKind::Hyperbolic)?;
    let alpha = params.alpha();
    let d = require_diffeo(f, "f")?;
    let p = f.periodic_part().scale(alpha).add(&d.map(f64::ln))?;
    DarbouxField::new(QuasiPeriodicFn::new(alpha, p)?, OrbitKind::Hyperbolic)
}

/// Inverse of the hyperbolic chart, normalized to `f(0) = 0`.
///
/// With `u = αx + p`, `e^{αf} ∝ e^{αx} Q(x)` where `Q` has Fourier
/// coefficients `q_k/(α + ik)` and `q_k` are those of `e^p`.
pub fn from_darboux_hyperbolic(u: &DarbouxField, params: &OrbitParams) -> Result<QuasiPeriodicFn> {
    params.require(OrbitKind::Hyperbolic)?;
    let alpha = params.alpha();
    let w = u.winding();
    if (w - alpha).abs() > 1e-12 * alpha.max(1.0) {
        return Err(Error::InvalidParams(format!("field winding {w} does not match alpha {alpha}")));
    }
    let n = u.grid_size();
    let e = u.field().periodic_part().map(f64::exp);
    let spec = e.spectrum();
    let mut q: Vec<Complex64> = spec.coeffs().to_vec();
    for (k, qk) in q.iter_mut().enumerate().take(n / 2) {
        *qk /= Complex64::new(alpha, k as f64);
    }
    q[n / 2] = Complex64::new(0.0, 0.0);
    let big_q = Spectrum::synthesize(n, &q);
    let mut vals = Vec::with_capacity(n);
    for qv in big_q {
        if !(qv > 0.0) {
            return Err(Error::Numeric(format!("hyperbolic inverse lost positivity ({qv:.3e})")));
        }
        vals.push((alpha * qv).ln() / alpha);
    }
    let f0 = vals[0];
    let p = PeriodicFn::new(vals.into_iter().map(|v| v - f0).collect())?;
    QuasiPeriodicFn::new(1.0, p)
}

/// `u = log f'`.
pub fn to_darboux_parabolic(f: &QuasiPeriodicFn) -> Result<DarbouxField> {
    let d = require_diffeo(f, "f")?;
    DarbouxField::new(QuasiPeriodicFn::new(0.0, d.map(f64::ln))?, OrbitKind::Parabolic)
}

/// Inverse of the parabolic chart, normalized to `f(0) = 0`.
pub fn from_darboux_parabolic(u: &DarbouxField) -> Result<QuasiPeriodicFn> {
    if u.winding() != 0.0 {
        return Err(Error::InvalidParams("parabolic fields are periodic".into()));
    }
    let e = u.field().periodic_part().map(f64::exp);
    let spec = e.spectrum();
    let q0 = spec.mean();
    let anti = spec.antiderivative_samples();
    let p0 = anti[0];
    let p = PeriodicFn::new(anti.into_iter().map(|v| (v - p0) / q0).collect())?;
    QuasiPeriodicFn::new(1.0, p)
}

/// Dispatches on the orbit kind; Teichmüller points need [`to_teichmuller`].
pub fn to_darboux(f: &QuasiPeriodicFn, params: &OrbitParams) -> Result<DarbouxField> {
    match params.kind {
        OrbitKind::Hyperbolic => to_darboux_hyperbolic(f, params),
        OrbitKind::Parabolic => to_darboux_parabolic(f),
        OrbitKind::Teichmuller => Ok(to_teichmuller(f)?.into_field()?),
    }
}

pub fn from_darboux(u: &DarbouxField, params: &OrbitParams) -> Result<QuasiPeriodicFn> {
    match params.kind {
        OrbitKind::Hyperbolic => from_darboux_hyperbolic(u, params),
        OrbitKind::Parabolic => from_darboux_parabolic(u),
        OrbitKind::Teichmuller => Err(Error::InvalidArgument(
            "Teichmüller fields need the marked points; use from_teichmuller".into(),
        )),
    }
}

/// `u^h(x) = u(h(x)) + log h'(x)`, re-gauged.
pub fn apply_diffeo_action(u: &DarbouxField, h: &QuasiPeriodicFn) -> Result<DarbouxField> {
    let d = require_diffeo(h, "h")?;
    let composed = u.field().compose(h)?;
    DarbouxField::new(composed.add_periodic(&d.map(f64::ln))?, u.kind())
}

/// A point of the Teichmüller model: `u` together with `f(y) = π`, `f(z) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TeichPoint {
    pub u: PeriodicFn,
    pub y: f64,
    pub z: f64,
}

/// Residuals of the two defining constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeichConstraints {
    pub slope_at_y: f64,
    pub integral: f64,
}

impl TeichConstraints {
    pub fn satisfied(&self) -> bool {
        self.slope_at_y.abs() <= TEICH_SLOPE_TOL && self.integral.abs() <= TEICH_CONSTRAINT_TOL
    }
}

/// `∫ (e^{u(x)} − e^{u(y)}) / sin²((x−y)/2) dx` by the trapezoid rule.
fn constraint_integrand(u: &PeriodicFn, y: f64) -> (Vec<f64>, f64) {
    let it = u.interpolant();
    let eu_y = it.eval(y).exp();
    let n = u.grid_size();
    let vals = (0..n)
        .map(|j| {
            let x = grid_point(n, j);
            removable(x, y, REMOVABLE_DELTA, |s| {
                let sn = ((s - y) / 2.0).sin();
                (it.eval(s).exp() - eu_y) / (sn * sn)
            })
        })
        .collect();
    (vals, eu_y)
}

impl TeichPoint {
    pub fn constraints(&self) -> TeichConstraints {
        let it = self.u.interpolant();
        let slope_at_y = it.eval_derivative(self.y, 1);
        let (vals, _) = constraint_integrand(&self.u, self.y);
        let integral = TAU * pairwise_sum(&vals) / vals.len() as f64;
        TeichConstraints { slope_at_y, integral }
    }

    /// Drops the marked points; meaningful on the section `y = π`, `z = 0`.
    pub fn into_field(self) -> Result<DarbouxField> {
        DarbouxField::new(QuasiPeriodicFn::new(0.0, self.u)?, OrbitKind::Teichmuller)
    }
}

/// Reduces to `[0, 2π)`.
fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Inside this distance from `y` the singular ratio is taken through the mean slope.
const NEAR_Y: f64 = 0.5;

/// `u(x) = log sin²((x−y)/2) − log cos²(f(x)/2) + log f'(x)` with `f(y) ≡ π`, `f(z) ≡ 0`.
///
/// Near `y` both sines vanish. With `d = x − y` and `F` the mean of `f'` on
/// `[y, x]`, `cos(f/2) = −sin(F d/2)`, and `sin(d/2)/sin(F d/2)` loses no
/// digits as `d → 0`.
pub fn to_teichmuller(f: &QuasiPeriodicFn) -> Result<TeichPoint> {
    require_diffeo(f, "f")?;
    let ev = f.evaluator();
    let y = wrap(ev.solve(PI));
    let z = wrap(ev.solve(0.0));
    let n = f.grid_size();
    let g = |x: f64| {
        let d = circle_offset(x, y);
        let ratio = if d.abs() < NEAR_Y {
            let fbar = kronrod_mean(|s| ev.derivative(s, 1), y, y + d);
            if d == 0.0 {
                1.0 / fbar
            } else {
                (d / 2.0).sin() / (fbar * d / 2.0).sin()
            }
        } else {
            ((x - y) / 2.0).sin() / (ev.eval(x) / 2.0).cos()
        };
        (ratio * ratio).ln() + ev.derivative(x, 1).ln()
    };
    let u = PeriodicFn::from_fn(n, g)?;
    Ok(TeichPoint { u, y, z })
}

/// Inverse Teichmüller map `f = 2 arctan(½ ∫_z^x e^{u}/sin²((s−y)/2) ds)`.
///
/// The integral is split into the smooth part `∫ h` with
/// `h = (e^u − e^{u(y)})/sin²((s−y)/2)` and the exact `−2e^{u(y)} cot((s−y)/2)`.
/// The arctangent branch is chosen from the position of `x` relative to `z`
/// and `y`. The result satisfies `f(z) = 0`; it matches a diffeomorphism
/// with the same `(u, y, z)` up to a multiple of 2π.
pub fn from_teichmuller(p: &TeichPoint) -> Result<QuasiPeriodicFn> {
    let cons = p.constraints();
    if !cons.satisfied() {
        return Err(Error::InvalidInput(format!(
            "not a Teichmüller point: u'(y) = {:.3e}, constraint = {:.3e}",
            cons.slope_at_y, cons.integral
        )));
    }
    let n = p.u.grid_size();
    let (h, eu_y) = constraint_integrand(&p.u, p.y);
    let hspec = Spectrum::from_samples(&h);
    let anti = hspec.antiderivative_interpolant();
    let (y, z) = (p.y, p.z);
    let a0 = -anti.eval(z) + 2.0 * eu_y / ((z - y) / 2.0).tan();
    let yz = (y - z).rem_euclid(TAU);
    let mut samples = Vec::with_capacity(n);
    for j in 0..n {
        let x = grid_point(n, j);
        let a = anti.eval(x) + a0;
        let theta = (x - y) / 2.0;
        let (s, c) = theta.sin_cos();
        let phi = (a * s - 2.0 * eu_y * c).atan2(2.0 * s);
        let xz = (x - z).rem_euclid(TAU);
        let lo = if xz < yz { -FRAC_PI_4 } else { FRAC_PI_4 };
        let rep = lo + (phi - lo).rem_euclid(PI);
        let mut fx = 2.0 * rep;
        if x < z {
            fx -= TAU;
        }
        samples.push(fx - x);
    }
    let f = QuasiPeriodicFn::new(1.0, PeriodicFn::new(samples)?)?;
    let d = f.derivative(1)?;
    if !(d.min() > 0.0) {
        return Err(Error::Numeric(format!("reconstructed map is not monotone (min f' = {:.3e})", d.min())));
    }
    Ok(f)
}

/// Sup-norm residual of `f' = e^{u} cos²(f/2)/sin²((x−y)/2)` on the grid.
pub fn teichmuller_ode_residual(p: &TeichPoint, f: &QuasiPeriodicFn) -> Result<f64> {
    let d = f.derivative(1)?;
    let ev = f.evaluator();
    let it = p.u.interpolant();
    let y = p.y;
    let n = f.grid_size();
    let rhs = |x: f64| {
        let c = (ev.eval(x) / 2.0).cos();
        let s = ((x - y) / 2.0).sin();
        it.eval(x).exp() * c * c / (s * s)
    };
    Ok((0..n)
        .map(|j| {
            let x = grid_point(n, j);
            (d.samples()[j] - removable(x, y, REMOVABLE_DELTA, rhs)).abs()
        })
        .fold(0.0, f64::max))
}

/// Representative of the PSL(2,R) class of `f` with `f(0) = 0`, `f(π) = π`, `f'(π) = 1`.
///
/// A rotation moves `f(π)` to `π`; then `tan(f/2) ↦ A tan(f/2) + B` fixes the
/// slope at `π` and the value at `0`.
pub fn teichmuller_section(f: &QuasiPeriodicFn) -> Result<QuasiPeriodicFn> {
    require_diffeo(f, "f")?;
    let ev = f.evaluator();
    let shift = PI - ev.eval(PI);
    let a = ev.derivative(PI, 1);
    let t0 = ev.eval(0.0) + shift;
    let b = -a * (t0 / 2.0).tan();
    let n = f.grid_size();
    let mut samples = Vec::with_capacity(n);
    for j in 0..n {
        let x = grid_point(n, j);
        let v = if j == n / 2 {
            PI
        } else {
            let (xr, lift) = if x < PI { (x, 0.0) } else { (x - TAU, TAU) };
            let f1 = ev.eval(xr) + shift;
            2.0 * (a * (f1 / 2.0).tan() + b).atan() + lift
        };
        samples.push(v - x);
    }
    QuasiPeriodicFn::new(1.0, PeriodicFn::new(samples)?)
}

/// Angle form of the disc automorphism `e^{iθ} ↦ (e^{iθ} − a)/(1 − ā e^{iθ})`.
pub fn mobius_angle(a: Complex64, theta: f64) -> f64 {
    let w = Complex64::new(1.0, 0.0) - a * Complex64::from_polar(1.0, -theta);
    theta + 2.0 * w.arg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::circle_offset;

    fn hyp(alpha: f64) -> OrbitParams {
        OrbitParams::from_alpha(12.0, alpha).unwrap()
    }

    fn sup_mod_const(a: &QuasiPeriodicFn, b: &QuasiPeriodicFn) -> f64 {
        let d = a.periodic_part().sub(b.periodic_part()).unwrap();
        let m = d.samples()[0];
        d.shift_value(-m).sup_norm()
    }

    #[test]
    fn identity_maps_to_linear_field() {
        for alpha in [1.0, 0.5] {
            let id = QuasiPeriodicFn::identity(64).unwrap();
            let u = to_darboux_hyperbolic(&id, &hyp(alpha)).unwrap();
            assert_eq!(u.winding(), alpha);
            assert!(u.field().periodic_part().sup_norm() <= 1e-15);
        }
    }

    #[test]
    fn hyperbolic_chart_rejects_wrong_orbit() {
        let id = QuasiPeriodicFn::identity(64).unwrap();
        let par = OrbitParams::parabolic(12.0).unwrap();
        assert!(matches!(to_darboux_hyperbolic(&id, &par), Err(Error::InvalidParams(_))));
        let bad = QuasiPeriodicFn::from_fn(64, 1.0, |x| x + 1.5 * x.sin()).unwrap();
        assert!(matches!(to_darboux_hyperbolic(&bad, &hyp(1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn linear_field_inverts_to_rotation() {
        let params = hyp(0.5);
        let u = DarbouxField::from_periodic(PeriodicFn::zeros(64).unwrap(), &params).unwrap();
        let f = from_darboux_hyperbolic(&u, &params).unwrap();
        assert!(f.periodic_part().sup_norm() <= 1e-14);
    }

    #[test]
    fn hyperbolic_inverse_solves_defining_relation() {
        let n = 512;
        let params = hyp(1.0);
        let u = DarbouxField::from_periodic(PeriodicFn::from_fn(n, |x| 0.2 * x.sin()).unwrap(), &params).unwrap();
        let f = from_darboux_hyperbolic(&u, &params).unwrap();
        let back = to_darboux_hyperbolic(&f, &params).unwrap();
        assert!(back.field().periodic_part().max_abs_diff(u.field().periodic_part()).unwrap() <= 1e-9);
        // f' ∝ e^{u − αf}
        let d = f.derivative(1).unwrap();
        let uv = u.field().values();
        let fv = f.values();
        let ratio: Vec<f64> = (0..n).map(|j| d.samples()[j] / (uv[j] - fv[j]).exp()).collect();
        let spread = ratio.iter().fold(0.0f64, |m, r| m.max((r / ratio[0] - 1.0).abs()));
        assert!(spread <= 1e-8);
    }

    #[test]
    fn hyperbolic_round_trip() {
        let params = hyp(1.0);
        let f = QuasiPeriodicFn::from_fn(1024, 1.0, |x| x + 0.3 * x.sin()).unwrap();
        let u = to_darboux_hyperbolic(&f, &params).unwrap();
        let g = from_darboux_hyperbolic(&u, &params).unwrap();
        assert!(sup_mod_const(&f, &g) <= 1e-9);
    }

    #[test]
    fn parabolic_examples() {
        let id = QuasiPeriodicFn::identity(64).unwrap();
        assert!(to_darboux_parabolic(&id).unwrap().field().periodic_part().sup_norm() == 0.0);
        let zero = DarbouxField::new(QuasiPeriodicFn::new(0.0, PeriodicFn::zeros(64).unwrap()).unwrap(), OrbitKind::Parabolic).unwrap();
        assert!(from_darboux_parabolic(&zero).unwrap().periodic_part().sup_norm() <= 1e-15);
        let f = QuasiPeriodicFn::from_fn(1024, 1.0, |x| x + 0.4 * x.sin()).unwrap();
        let g = from_darboux_parabolic(&to_darboux_parabolic(&f).unwrap()).unwrap();
        assert!(sup_mod_const(&f, &g) <= 1e-9);
    }

    #[test]
    fn action_examples() {
        let n = 256;
        let params = hyp(1.0);
        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.3 * x.sin()).unwrap();
        let u = to_darboux_hyperbolic(&f, &params).unwrap();
        let id = QuasiPeriodicFn::identity(n).unwrap();
        let same = apply_diffeo_action(&u, &id).unwrap();
        assert!(same.field().periodic_part().max_abs_diff(u.field().periodic_part()).unwrap() <= 1e-14);

        let theta = 0.7;
        let rot = QuasiPeriodicFn::rotation(n, theta).unwrap();
        let a = apply_diffeo_action(&u, &rot).unwrap();
        let b = u.rotated(theta).unwrap();
        assert!(a.field().periodic_part().max_abs_diff(b.field().periodic_part()).unwrap() <= 1e-12);

        let h = QuasiPeriodicFn::from_fn(n, 1.0, |x| x + 0.2 * (2.0 * x).cos()).unwrap();
        let lhs = to_darboux_hyperbolic(&f.compose(&h).unwrap(), &params).unwrap();
        let rhs = apply_diffeo_action(&u, &h).unwrap();
        assert!(lhs.field().periodic_part().max_abs_diff(rhs.field().periodic_part()).unwrap() <= 1e-9);
    }

    #[test]
    fn identity_teichmuller_point() {
        let id = QuasiPeriodicFn::identity(256).unwrap();
        let p = to_teichmuller(&id).unwrap();
        assert!((p.y - PI).abs() < 1e-15 && p.z == 0.0);
        assert!(p.u.sup_norm() <= 1e-12);
        let c = p.constraints();
        assert!(c.slope_at_y.abs() <= 1e-12 && c.integral.abs() <= 1e-12);
        let f = from_teichmuller(&p).unwrap();
        assert!(f.periodic_part().sup_norm() <= 1e-9);
    }

    #[test]
    fn mobius_perturbed_point_satisfies_constraints() {
        let n = 1024;
        let a = Complex64::from_polar(0.25, 1.1);
        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| mobius_angle(a, x + 0.1 * (2.0 * x).sin()) + 0.4).unwrap();
        let p = to_teichmuller(&f).unwrap();
        let c = p.constraints();
        assert!(c.slope_at_y.abs() <= 1e-8, "{c:?}");
        assert!(c.integral.abs() <= 1e-6, "{c:?}");
        let g = from_teichmuller(&p).unwrap();
        let diff = f.periodic_part().sub(g.periodic_part()).unwrap();
        let k = (diff.samples()[0] / TAU).round();
        assert!(diff.shift_value(-k * TAU).sup_norm() <= 1e-7);
        assert!(teichmuller_ode_residual(&p, &g).unwrap() <= 1e-7);
    }

    #[test]
    fn teichmuller_rejects_invalid_point() {
        let u = PeriodicFn::from_fn(128, |x| 0.3 * x.cos()).unwrap();
        let p = TeichPoint { u, y: 1.0, z: 0.0 };
        assert!(matches!(from_teichmuller(&p), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn section_normalization() {
        let n = 1024;
        let a = Complex64::from_polar(0.2, -0.4);
        let f = QuasiPeriodicFn::from_fn(n, 1.0, |x| mobius_angle(a, x + 0.15 * x.sin()) + 1.0).unwrap();
        let s = teichmuller_section(&f).unwrap();
        let ev = s.evaluator();
        assert!(ev.eval(0.0).abs() <= 1e-12);
        assert!((ev.eval(PI) - PI).abs() <= 1e-12);
        assert!((ev.derivative(PI, 1) - 1.0).abs() <= 1e-9);
        // Same class: the Schwarzian density ½f'² + S(f) is PSL invariant.
        let dens = |g: &QuasiPeriodicFn| {
            let d = g.derivative(1).unwrap();
            g.schwarzian().unwrap().add(&d.mul(&d).unwrap().scale(0.5)).unwrap()
        };
        assert!(dens(&f).max_abs_diff(&dens(&s)).unwrap() <= 1e-8);
        let p = to_teichmuller(&s).unwrap();
        assert!((p.y - PI).abs() <= 1e-12 && p.z.min(TAU - p.z) <= 1e-12);
        assert!(p.u.samples()[n / 2].abs() <= 1e-9);
    }

    #[test]
    fn gauge_is_fixed() {
        let u = QuasiPeriodicFn::from_fn(64, 0.0, |x| 1.0 + x.cos()).unwrap();
        let t = DarbouxField::new(u.clone(), OrbitKind::Teichmuller).unwrap();
        assert!(t.gauge_residual() <= 1e-15);
        let p = DarbouxField::new(u, OrbitKind::Parabolic).unwrap();
        assert!(p.gauge_residual() <= 1e-15);
        let circ = circle_offset(0.1, TAU - 0.1);
        assert!((circ - 0.2).abs() < 1e-15);
    }
}
