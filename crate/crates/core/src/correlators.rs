//! Bilocal correlators: closed erf formulas, saddle and Green quadrature
//! routes, Monte Carlo, and the small-separation expansion.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{self, check_ct, McEstimate, McOptions};
use crate::params::OrbitParams;
use crate::quadrature::{integrate, integrate_2d, QuadOptions};
use crate::special::{erfcx, scaled_erf_diff};
use crate::symplectic::ChartState;

pub use crate::special::erf;

/// Requested relative tolerance of the quadrature routes.
pub const QUAD_REL_TOL: f64 = 1e-10;
/// Closed-vs-oracle threshold above which an OTO case is flagged.
pub const OTO_FLAG_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Closed,
    SaddleQuadrature,
    GreenOracle,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    To,
    Oto,
}

/// Which exponent feeds a quadrature: the saddle action or the Green form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Saddle,
    Green,
}

/// Constants shared by the closed forms: `a = 3/(4πct)`, `k = √(−2πb₀t)`,
/// `K = ctπα/3`.
#[derive(Debug, Clone, Copy)]
struct Consts {
    ct: f64,
    a: f64,
    k: f64,
    big_k: f64,
    alpha: f64,
}

impl Consts {
    fn new(params: &OrbitParams, t: f64) -> Result<Self> {
        let ct = check_ct(params, t)?;
        let alpha = params.alpha();
        Ok(Self {
            ct,
            a: 3.0 / (4.0 * PI * ct),
            k: (-TAU * params.b0 * t).max(0.0).sqrt(),
            big_k: ct * PI * alpha / 3.0,
            alpha,
        })
    }
}

fn check_point(x: f64) -> Result<()> {
    if !(0.0..TAU).contains(&x) {
        return Err(Error::InvalidArgument(format!("insertion point {x} outside [0, 2π)")));
    }
    Ok(())
}

fn check_pair(x1: f64, x2: f64) -> Result<()> {
    check_point(x1)?;
    check_point(x2)?;
    if !(x1 < x2) {
        return Err(Error::InvalidArgument(format!("need x₁ < x₂, got {x1}, {x2}")));
    }
    Ok(())
}

/// `O(x₁, x₂)` on a single field configuration.
///
/// Darboux chart: `e^{−(u(x₁)+u(x₂))/2} ∫_{x₁}^{x₂} e^{u}`. Diffeomorphism
/// chart: `(2/α) sinh(α(f(x₂)−f(x₁))/2)/√(f'(x₁)f'(x₂))`, or its `α → 0` limit.
pub fn bilocal_value(state: ChartState<'_>, x1: f64, x2: f64, params: &OrbitParams) -> Result<f64> {
    params.require_non_elliptic()?;
    if !(x1 < x2) {
        return Err(Error::InvalidArgument(format!("need x₁ < x₂, got {x1}, {x2}")));
    }
    match state {
        ChartState::Diffeo(f) => {
            let ev = f.evaluator();
            let df = ev.eval(x2) - ev.eval(x1);
            let alpha = params.alpha();
            let num = if alpha == 0.0 { df } else { 2.0 / alpha * (alpha * df / 2.0).sinh() };
            Ok(num / (ev.derivative(x1, 1) * ev.derivative(x2, 1)).sqrt())
        }
        ChartState::Darboux(u) => {
            let ev = u.field().evaluator();
            let (u1, u2) = (ev.eval(x1), ev.eval(x2));
            let shift = 0.5 * (u1 + u2);
            let r = integrate(|s| (ev.eval(s) - shift).exp(), x1, x2, QuadOptions::rel(1e-13))?;
            Ok(r.value)
        }
        ChartState::Teich(_) => Err(Error::InvalidParams("bilocal needs a hyperbolic or parabolic chart".into())),
    }
}

/// `⟨O(x₁,x₂)⟩ = π e^{−2πb₀t + 3x₂₁/(2ct)} √(ct/12) [erf(k + x₂₁√a) − erf(k − x₂₁√a)]`.
pub fn one_point_closed(x1: f64, x2: f64, params: &OrbitParams, t: f64) -> Result<f64> {
    check_pair(x1, x2)?;
    let c = Consts::new(params, t)?;
    Ok(one_point_closed_sep(x2 - x1, &c))
}

fn one_point_closed_sep(x21: f64, c: &Consts) -> f64 {
    let ra = c.a.sqrt();
    let shift = c.k * c.k + 1.5 * x21 / c.ct;
    PI * (c.ct / 12.0).sqrt() * scaled_erf_diff(shift, c.k + x21 * ra, c.k - x21 * ra)
}

fn bilocal_density(x1: f64, x2: f64, s: f64, params: &OrbitParams, t: f64, route: Route) -> f64 {
    match route {
        Route::Green => {
            let ct = params.c * t;
            gaussian::log_weight(&[x1, x2, s], &[-0.5, -0.5, 1.0], params.alpha(), ct).exp()
        }
        Route::Saddle => gaussian::MarkedConfig::bilocal(x1, x2, s)
            .and_then(|cfg| gaussian::solve_saddle(&cfg, params, t))
            .map_or(f64::NAN, |sol| (sol.action - TAU * params.b0 * t).exp()),
    }
}

/// `e^{−2πb₀t} ∫_{x₁}^{x₂} e^{S(u_cl, s, t)} ds` by adaptive quadrature.
pub fn one_point_quadrature(x1: f64, x2: f64, params: &OrbitParams, t: f64, route: Route) -> Result<f64> {
    check_pair(x1, x2)?;
    check_ct(params, t)?;
    let r = integrate(|s| bilocal_density(x1, x2, s, params, t, route), x1, x2, QuadOptions::rel(QUAD_REL_TOL))?;
    Ok(r.value)
}

/// Unbiased estimator `x₂₁ exp(u(s) − (u(x₁)+u(x₂))/2)`, `s` uniform on `[x₁, x₂]`.
pub fn one_point_mc(x1: f64, x2: f64, params: &OrbitParams, t: f64, opts: McOptions) -> Result<McEstimate> {
    check_pair(x1, x2)?;
    gaussian::mc_estimate_with(
        |f, rng| {
            let s = rng.random_range(x1..x2);
            (x2 - x1) * (f.eval(s) - 0.5 * (f.eval(x1) + f.eval(x2))).exp()
        },
        params,
        t,
        opts,
    )
}

/// `1/√(πa) − w erfcx(√a w)` for `w ≥ 0`, without cancellation at large `w`.
fn phi(w: f64, a: f64) -> f64 {
    let y = a.sqrt() * w;
    let g = if y < 4.0 {
        1.0 - PI.sqrt() * y * erfcx(y)
    } else {
        // erfcx(y) = 1/(√π D), D = y + (1/2)/R, R = y + 1/(y + (3/2)/(y + …)),
        // so 1 − √π y erfcx(y) = (1/2)/(R D).
        let mut tail = y;
        for j in (2..60).rev() {
            tail = y + (j as f64 / 2.0) / tail;
        }
        let d = y + 0.5 / tail;
        0.5 / (tail * d)
    };
    g / (PI * a).sqrt()
}

/// `(1/4) e^{−2πb₀t + A} √(π/a)/2 · Σ ε₁ε₂ H(ε₁x + ε₂y − K)` with
/// `H(z) = |z| + e^{−az²} φ(|z|)`; the double integral of a Gaussian ridge
/// over a rectangle of half-widths `x`, `y`.
fn rectangle_closed(x: f64, y: f64, extra: f64, c: &Consts) -> f64 {
    let zs = [(1.0, x + y - c.big_k), (-1.0, x - y - c.big_k), (-1.0, -x + y - c.big_k), (1.0, -x - y - c.big_k)];
    let k2 = c.k * c.k;
    let same_sign = zs.iter().all(|(_, z)| *z <= 0.0) || zs.iter().all(|(_, z)| *z >= 0.0);
    // Σ ε₁ε₂|z| vanishes identically when every z has the same sign.
    let linear = if same_sign { 0.0 } else { zs.iter().map(|(e, z)| e * z.abs()).sum::<f64>() * (k2 + extra).exp() };
    let gauss: f64 = zs.iter().map(|(e, z)| e * (k2 + extra - c.a * z * z).exp() * phi(z.abs(), c.a)).sum();
    0.25 * 0.5 * (PI / c.a).sqrt() * (linear + gauss)
}

fn check_to(x: &[f64; 4]) -> Result<()> {
    x.iter().try_for_each(|&v| check_point(v))?;
    if !(x[0] < x[1] && x[1] < x[2] && x[2] < x[3]) {
        return Err(Error::InvalidArgument(format!("time-ordered insertion needs x₁<x₂<x₃<x₄, got {x:?}")));
    }
    Ok(())
}

fn check_oto(x: &[f64; 4]) -> Result<()> {
    x.iter().try_for_each(|&v| check_point(v))?;
    if !(x[0] < x[2] && x[2] < x[1] && x[1] < x[3]) {
        return Err(Error::InvalidArgument(format!("out-of-time-ordered insertion needs x₁<x₃<x₂<x₄, got {x:?}")));
    }
    Ok(())
}

/// Time-ordered `⟨O(x₁,x₂)O(x₃,x₄)⟩ = (π/2) e^{−2πb₀t + 3(x₄₃+x₂₁)/(2ct)} √(ct/12) [E + G]`.
pub fn two_point_to_closed(x: [f64; 4], params: &OrbitParams, t: f64) -> Result<f64> {
    check_to(&x)?;
    let c = Consts::new(params, t)?;
    let (x21, x43) = (x[1] - x[0], x[3] - x[2]);
    Ok(rectangle_closed(x21, x43, 1.5 * (x43 + x21) / c.ct, &c))
}

/// The closed form with `E` and `G` summed directly, term by term. Loses accuracy
/// to cancellation once `−2πb₀t` is large.
pub fn two_point_to_closed_literal(x: [f64; 4], params: &OrbitParams, t: f64) -> Result<f64> {
    check_to(&x)?;
    let c = Consts::new(params, t)?;
    Ok(literal_e_g(x[1] - x[0], x[3] - x[2], &c))
}

fn literal_e_g(x: f64, y: f64, c: &Consts) -> f64 {
    let ra = c.a.sqrt();
    let s12 = (c.ct / 12.0).sqrt();
    let mut e = 0.0;
    let mut g = 0.0;
    for e1 in [1.0, -1.0] {
        for e2 in [1.0, -1.0] {
            let w = e1 * x + e2 * y;
            e += e1 * e2 * (-c.a * (w - c.big_k).powi(2)).exp();
            g += e1 * e2 * erf(c.k - w * ra) * (PI * c.ct / 3.0 * c.alpha - w);
        }
    }
    PI / 2.0 * (c.k * c.k + 1.5 * (x + y) / c.ct).exp() * s12 * (4.0 * s12 * e + g)
}

/// Normalized weight `exp(Σ c_k u(p_k))` for two bilocals at `τ`, `σ`.
fn two_point_density(x: &[f64; 4], tau: f64, sigma: f64, params: &OrbitParams, t: f64, route: Route) -> f64 {
    let pts = [x[0], x[1], x[2], x[3], tau, sigma];
    let cs = [-0.5, -0.5, -0.5, -0.5, 1.0, 1.0];
    match route {
        Route::Green => gaussian::log_weight(&pts, &cs, params.alpha(), params.c * t).exp(),
        Route::Saddle => gaussian::MarkedConfig::from_pairs(pts.into_iter().zip(cs).collect())
            .and_then(|cfg| gaussian::solve_saddle(&cfg, params, t))
            .map_or(f64::NAN, |sol| (sol.action - TAU * params.b0 * t).exp()),
    }
}

fn rect_oracle(x: &[f64; 4], tau: (f64, f64), sigma: (f64, f64), params: &OrbitParams, t: f64, route: Route) -> Result<f64> {
    let r = integrate_2d(
        |s, tt| two_point_density(x, tt, s, params, t, route),
        sigma.0,
        sigma.1,
        |_| tau.0,
        |_| tau.1,
        QuadOptions::rel(QUAD_REL_TOL),
    )?;
    Ok(r.value)
}

/// Time-ordered correlator by 2D quadrature over `[x₁,x₂]×[x₃,x₄]`.
pub fn two_point_to_oracle(x: [f64; 4], params: &OrbitParams, t: f64, route: Route) -> Result<f64> {
    check_to(&x)?;
    check_ct(params, t)?;
    rect_oracle(&x, (x[0], x[1]), (x[2], x[3]), params, t, route)
}

/// Estimator `x₂₁x₄₃ exp(u(τ)+u(σ) − Σu(x_i)/2)` with uniform `τ`, `σ`.
pub fn two_point_mc(x: [f64; 4], params: &OrbitParams, t: f64, opts: McOptions) -> Result<McEstimate> {
    x.iter().try_for_each(|&v| check_point(v))?;
    if !(x[0] < x[1] && x[2] < x[3]) {
        return Err(Error::InvalidArgument(format!("need x₁<x₂ and x₃<x₄, got {x:?}")));
    }
    gaussian::mc_estimate_with(
        |f, rng| {
            let tau = rng.random_range(x[0]..x[1]);
            let sigma = rng.random_range(x[2]..x[3]);
            let base: f64 = x.iter().map(|&p| f.eval(p)).sum();
            (x[1] - x[0]) * (x[3] - x[2]) * (f.eval(tau) + f.eval(sigma) - 0.5 * base).exp()
        },
        params,
        t,
        opts,
    )
}

/// One OTO region: `τ` and `σ` placement per the case label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OtoCase {
    pub label: &'static str,
    pub region: &'static str,
    /// Closed form for the region, transcribed term by term.
    pub closed: f64,
    /// Adaptive 2D quadrature of the Green weight over the region.
    pub oracle: f64,
    /// `(closed − oracle)/|oracle|`.
    pub rel_diff: f64,
    pub flagged: bool,
    /// Corrected closed form; equals `closed` where no correction was needed.
    pub amended: f64,
    pub amended_rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OtoReport {
    pub cases: Vec<OtoCase>,
    /// Sum of the region oracles; the authoritative value.
    pub value: f64,
    /// Sum of the transcribed closed forms.
    pub closed_sum: f64,
    /// Single quadrature over `[x₁,x₂]×[x₃,x₄]`.
    pub whole_oracle: f64,
    /// `|value − whole_oracle|/|whole_oracle|`.
    pub decomposition_rel_err: f64,
}

impl OtoReport {
    pub fn flags(&self) -> Vec<&'static str> {
        self.cases.iter().filter(|c| c.flagged).map(|c| c.label).collect()
    }
}

/// `e^{k² + E}(erf(k + p r) − erf(k + q r))`.
fn pair(c: &Consts, e: f64, p: f64, q: f64) -> f64 {
    let r = c.a.sqrt();
    scaled_erf_diff(c.k * c.k + e, c.k + p * r, c.k + q * r)
}

/// The five OTO case formulas transcribed term by term.
pub fn oto_case_closed(x: [f64; 4], params: &OrbitParams, t: f64) -> Result<[f64; 5]> {
    check_oto(&x)?;
    let c = Consts::new(params, t)?;
    let (x21, x43, x23) = (x[1] - x[0], x[3] - x[2], x[1] - x[2]);
    let (x31, x42) = (x[2] - x[0], x[3] - x[1]);
    let ct = c.ct;
    let h = 1.5 / ct;
    let k2 = TAU / 3.0 * ct * c.alpha;
    let pre = (ct / 12.0).powf(1.5);

    let case1 = rectangle_closed(x31, x42, h * (x42 + x31), &c);

    let case2 = TAU
        * pre
        * (pair(&c, h * (x43 + x21 - 2.0 * x23), x43 - x21, x43 + x21 - 2.0 * x23)
            + pair(&c, h * (x43 + x21 + 2.0 * x23), x21 + x43, x43 - x21 + 2.0 * x23)
            + pair(&c, -h * (k2 - TAU + x43 - 3.0 * x21 + 2.0 * x23), x43 - x21 + 2.0 * x23 - TAU, x43 - x21 - TAU)
            + pair(&c, -h * (k2 - TAU + x43 + x21 - 2.0 * x23), x43 + x21 - 2.0 * x23 - TAU, x43 + x21 - TAU));

    let case3 = TAU
        * pre
        * (pair(&c, h * (x43 + x21 - 2.0 * x23), -(x43 + x21 - 2.0 * x23), x43 - x21)
            + pair(&c, h * (x43 + x21 + 2.0 * x23), x43 - x21 - 2.0 * x23, -(x43 + x21))
            + pair(&c, h * (k2 + TAU - x43 - x21 + x23), -(x43 + x21 - TAU), -(x43 + x21 - 2.0 * x23 - TAU))
            + pair(&c, h * (k2 + TAU + 3.0 * x43 - x21 - 2.0 * x23), x43 - x21 + TAU, x43 - x21 - 2.0 * x23 + TAU));

    let case4 = PI
        * pre
        * (pair(&c, h * (x43 + x21 + 2.0 * x23), x43 - x21 + 2.0 * x23, x43 - x21 - 2.0 * x23)
            + pair(&c, -h * (k2 - TAU + x43 - 3.0 * x21 - 2.0 * x23), x43 - x21 - TAU, x43 - x21 + 2.0 * x23 - TAU)
            + pair(&c, h * (k2 + TAU + 3.0 * x43 - x21 - 2.0 * x23), x43 - x21 - 2.0 * x23 + TAU, x43 - x21 + TAU));

    let case5 = TAU
        * pre
        * (pair(&c, h * (x43 + x21 + 2.0 * x23), x43 - x21 + 2.0 * x23, x43 - x21 - 2.0 * x23)
            + pair(&c, -(4.0 / (2.0 * ct)) * (k2 - TAU + x43 - 3.0 * x21 + 2.0 * x23), x43 - x21 - TAU, x43 - x21 + 2.0 * x23 - TAU)
            + pair(&c, h * (k2 + TAU + 3.0 * x43 - x21 - x23), x43 - x21 - 2.0 * x23 + TAU, x43 - x21 + TAU));

    Ok([case1, case2, case3, case4, case5])
}

/// Cases III–V with the corrections that reproduce the region oracles.
///
/// III: `x₂₃ → 2x₂₃` in the third exponent. IV: sign of `2x₂₃` in the second
/// exponent. V: prefactor `π`, coefficient `3/(2ct)`, `x₂₃ → 2x₂₃`; it then
/// coincides with IV, as the `τ ↔ σ` symmetry of the weight requires.
pub fn oto_case_amended(x: [f64; 4], params: &OrbitParams, t: f64) -> Result<[f64; 5]> {
    let mut out = oto_case_closed(x, params, t)?;
    let c = Consts::new(params, t)?;
    let (x21, x43, x23) = (x[1] - x[0], x[3] - x[2], x[1] - x[2]);
    let h = 1.5 / c.ct;
    let k2 = TAU / 3.0 * c.ct * c.alpha;
    let pre = (c.ct / 12.0).powf(1.5);

    out[2] = TAU
        * pre
        * (pair(&c, h * (x43 + x21 - 2.0 * x23), -(x43 + x21 - 2.0 * x23), x43 - x21)
            + pair(&c, h * (x43 + x21 + 2.0 * x23), x43 - x21 - 2.0 * x23, -(x43 + x21))
            + pair(&c, h * (k2 + TAU - x43 - x21 + 2.0 * x23), -(x43 + x21 - TAU), -(x43 + x21 - 2.0 * x23 - TAU))
            + pair(&c, h * (k2 + TAU + 3.0 * x43 - x21 - 2.0 * x23), x43 - x21 + TAU, x43 - x21 - 2.0 * x23 + TAU));

    out[3] = PI
        * pre
        * (pair(&c, h * (x43 + x21 + 2.0 * x23), x43 - x21 + 2.0 * x23, x43 - x21 - 2.0 * x23)
            + pair(&c, -h * (k2 - TAU + x43 - 3.0 * x21 + 2.0 * x23), x43 - x21 - TAU, x43 - x21 + 2.0 * x23 - TAU)
            + pair(&c, h * (k2 + TAU + 3.0 * x43 - x21 - 2.0 * x23), x43 - x21 - 2.0 * x23 + TAU, x43 - x21 + TAU));
    out[4] = out[3];
    Ok(out)
}

/// Region oracles (a)–(e) for `x₁<x₃<x₂<x₄`.
pub fn oto_region_oracles(x: [f64; 4], params: &OrbitParams, t: f64, route: Route) -> Result<[f64; 5]> {
    check_oto(&x)?;
    check_ct(params, t)?;
    let [x1, x2, x3, x4] = x;
    let opts = QuadOptions::rel(QUAD_REL_TOL);
    let a = rect_oracle(&x, (x1, x3), (x2, x4), params, t, route)?;
    let b = rect_oracle(&x, (x1, x3), (x3, x2), params, t, route)?;
    let c = rect_oracle(&x, (x3, x2), (x2, x4), params, t, route)?;
    // (d): x₃ < τ < σ < x₂; (e): x₃ < σ < τ < x₂.
    let d = integrate_2d(|s, tt| two_point_density(&x, tt, s, params, t, route), x3, x2, |_| x3, |s| s, opts)?.value;
    let e = integrate_2d(|s, tt| two_point_density(&x, tt, s, params, t, route), x3, x2, |s| s, |_| x2, opts)?.value;
    Ok([a, b, c, d, e])
}

const OTO_LABELS: [(&str, &str); 5] = [
    ("I", "x1<tau<x3<x2<sigma<x4"),
    ("II", "x1<tau<x3<sigma<x2<x4"),
    ("III", "x1<x3<tau<x2<sigma<x4"),
    ("IV", "x1<x3<tau<sigma<x2<x4"),
    ("V", "x1<x3<sigma<tau<x2<x4"),
];

/// `[x₁,x₂]×[x₃,x₄]` as one iterated integral, the inner `τ` range cut at its kinks `x₃` and `σ`.
fn whole_oto_oracle(x: &[f64; 4], params: &OrbitParams, t: f64) -> Result<f64> {
    let [x1, x2, x3, x4] = *x;
    let opts = QuadOptions::rel(QUAD_REL_TOL);
    let inner_opts = QuadOptions::rel(QUAD_REL_TOL * 0.1);
    let mut failure = None;
    let inner = |s: f64| -> f64 {
        let mut cuts = vec![x1, x3, x2];
        if s > x3 && s < x2 {
            cuts.insert(2, s);
        }
        let parts: Vec<f64> = cuts
            .windows(2)
            .map(|w| match integrate(|tt| two_point_density(x, tt, s, params, t, Route::Green), w[0], w[1], inner_opts) {
                Ok(r) => r.value,
                Err(_) => f64::NAN,
            })
            .collect();
        gaussian_sum(&parts)
    };
    let mut outer = Vec::with_capacity(2);
    for (lo, hi) in [(x3, x2), (x2, x4)] {
        match integrate(inner, lo, hi, opts) {
            Ok(r) if r.value.is_finite() => outer.push(r.value),
            Ok(_) => {
                failure.get_or_insert(Error::Numeric("whole-rectangle OTO quadrature produced a non-finite value".into()));
            }
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(gaussian_sum(&outer)),
    }
}

/// Per-case closed forms against region oracles, with the whole-domain check.
pub fn two_point_oto(x: [f64; 4], params: &OrbitParams, t: f64) -> Result<OtoReport> {
    let closed = oto_case_closed(x, params, t)?;
    let amended = oto_case_amended(x, params, t)?;
    let oracle = oto_region_oracles(x, params, t, Route::Green)?;
    let whole = whole_oto_oracle(&x, params, t)?;
    let cases: Vec<OtoCase> = (0..5)
        .map(|i| {
            let rel = (closed[i] - oracle[i]) / oracle[i].abs();
            OtoCase {
                label: OTO_LABELS[i].0,
                region: OTO_LABELS[i].1,
                closed: closed[i],
                oracle: oracle[i],
                rel_diff: rel,
                flagged: !(rel.abs() <= OTO_FLAG_TOL),
                amended: amended[i],
                amended_rel_diff: (amended[i] - oracle[i]) / oracle[i].abs(),
            }
        })
        .collect();
    let value = gaussian_sum(&oracle);
    Ok(OtoReport {
        closed_sum: gaussian_sum(&closed),
        decomposition_rel_err: (value - whole).abs() / whole.abs(),
        cases,
        value,
        whole_oracle: whole,
    })
}

fn gaussian_sum(xs: &[f64]) -> f64 {
    crate::util::pairwise_sum(xs)
}

/// `∫₀^{2π}⟨O(x, x+ε)⟩dx = 2π⟨O(0, ε)⟩` against the naive expansion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub eps: Vec<f64>,
    pub exact: Vec<f64>,
    pub naive: Vec<f64>,
    pub exact_c1: f64,
    pub exact_c2: f64,
    pub naive_c1: f64,
    pub naive_c2: f64,
    pub target_c1: f64,
    pub target_exact_c2: f64,
    pub target_naive_c2: f64,
}

/// Neville extrapolation of the interpolating polynomial to zero.
fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    p[0]
}

/// Default grid `ε_k = 0.1/2^k`, `k = 0..8`.
pub fn default_eps_grid() -> Vec<f64> {
    (0..8).map(|k| 0.1 / f64::powi(2.0, k)).collect()
}

/// Fits the `ε` and `ε²` coefficients of the exact and naive curves.
pub fn taylor_vs_exact(params: &OrbitParams, t: f64, eps: &[f64]) -> Result<ComparisonReport> {
    let c = Consts::new(params, t)?;
    if eps.len() < 3 {
        return Err(Error::InvalidArgument("need at least three ε values".into()));
    }
    if let Some(bad) = eps.iter().find(|e| !(**e > 0.0 && **e <= 0.1)) {
        return Err(Error::InvalidArgument(format!("ε must lie in (0, 0.1], got {bad}")));
    }
    let mu = gaussian::mean_moment(params, t)?;
    let exact: Vec<f64> = eps.iter().map(|&e| TAU * one_point_closed_sep(e, &c)).collect();
    let naive: Vec<f64> = eps.iter().map(|&e| TAU * e - e.powi(3) / params.c * mu).collect();
    let fit = |ys: &[f64]| {
        let g: Vec<f64> = ys.iter().zip(eps).map(|(y, e)| y / e).collect();
        let c1 = extrapolate_to_zero(eps, &g);
        let h: Vec<f64> = g.iter().zip(eps).map(|(g, e)| (g - c1) / e).collect();
        (c1, extrapolate_to_zero(eps, &h))
    };
    let (exact_c1, exact_c2) = fit(&exact);
    let (naive_c1, naive_c2) = fit(&naive);
    Ok(ComparisonReport {
        eps: eps.to_vec(),
        exact,
        naive,
        exact_c1,
        exact_c2,
        naive_c1,
        naive_c2,
        target_c1: TAU,
        target_exact_c2: 3.0 * PI / c.ct,
        target_naive_c2: 0.0,
    })
}

/// A correlator to evaluate: one bilocal (two points) or two (four points).
#[derive(Debug, Clone)]
pub struct CorrelatorRequest {
    pub points: Vec<f64>,
    /// Ignored for a single bilocal.
    pub ordering: Ordering,
    pub params: OrbitParams,
    pub t: f64,
    pub method: Method,
    /// Used by `Method::MonteCarlo` only.
    pub mc: McOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelatorResult {
    pub method: Method,
    pub value: f64,
    /// OTO regions I–V; `value` is the sum of their oracles.
    pub per_case: Vec<OtoCase>,
    /// Closed forms: distance to the independent Green quadrature.
    /// Quadrature: requested tolerance. Monte Carlo: standard error.
    pub error_estimate: f64,
    /// OTO cases whose transcribed closed form misses its oracle.
    pub flags: Vec<&'static str>,
}

impl CorrelatorResult {
    fn single(method: Method, value: f64, error_estimate: f64) -> Self {
        CorrelatorResult { method, value, per_case: Vec::new(), error_estimate, flags: Vec::new() }
    }
}

pub fn evaluate(req: &CorrelatorRequest) -> Result<CorrelatorResult> {
    let (p, t, m) = (&req.params, req.t, req.method);
    let route = |m: Method| if m == Method::SaddleQuadrature { Route::Saddle } else { Route::Green };
    match (req.points.as_slice(), req.ordering) {
        (&[x1, x2], _) => Ok(match m {
            Method::Closed => {
                let v = one_point_closed(x1, x2, p, t)?;
                CorrelatorResult::single(m, v, (v - one_point_quadrature(x1, x2, p, t, Route::Green)?).abs())
            }
            Method::SaddleQuadrature | Method::GreenOracle => {
                let v = one_point_quadrature(x1, x2, p, t, route(m))?;
                CorrelatorResult::single(m, v, QUAD_REL_TOL * v.abs())
            }
            Method::MonteCarlo => {
                let e = one_point_mc(x1, x2, p, t, req.mc)?;
                CorrelatorResult::single(m, e.mean, e.stderr)
            }
        }),
        (&[a, b, c, d], Ordering::To) => {
            let x = [a, b, c, d];
            Ok(match m {
                Method::Closed => {
                    let v = two_point_to_closed(x, p, t)?;
                    CorrelatorResult::single(m, v, (v - two_point_to_oracle(x, p, t, Route::Green)?).abs())
                }
                Method::SaddleQuadrature | Method::GreenOracle => {
                    let v = two_point_to_oracle(x, p, t, route(m))?;
                    CorrelatorResult::single(m, v, QUAD_REL_TOL * v.abs())
                }
                Method::MonteCarlo => {
                    check_to(&x)?;
                    let e = two_point_mc(x, p, t, req.mc)?;
                    CorrelatorResult::single(m, e.mean, e.stderr)
                }
            })
        }
        (&[a, b, c, d], Ordering::Oto) => {
            let x = [a, b, c, d];
            Ok(match m {
                Method::Closed => {
                    let r = two_point_oto(x, p, t)?;
                    let flags = r.flags();
                    let err = (r.value - r.whole_oracle).abs();
                    CorrelatorResult { method: m, value: r.value, per_case: r.cases, error_estimate: err, flags }
                }
                Method::SaddleQuadrature | Method::GreenOracle => {
                    let v = gaussian_sum(&oto_region_oracles(x, p, t, route(m))?);
                    CorrelatorResult::single(m, v, QUAD_REL_TOL * v.abs())
                }
                Method::MonteCarlo => {
                    check_oto(&x)?;
                    let e = two_point_mc(x, p, t, req.mc)?;
                    CorrelatorResult::single(m, e.mean, e.stderr)
                }
            })
        }
        (pts, _) => Err(Error::InvalidArgument(format!("need 2 or 4 insertion points, got {}", pts.len()))),
    }
}
