//! Invariant suites over seeded random corpora.
//!
//! Each check reduces a corpus to its worst item. A check passes when that
//! item's error is within the named tolerance. Checks marked non-gating
//! (transcribed closed forms that are known to disagree) are reported but do not
//! decide the outcome.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlators::{self, Route};
use crate::corpus::{self, item_rng};
use crate::darboux::{self, apply_diffeo_action, DarbouxField};
use crate::error::{Error, Result};
use crate::gaussian::{self, MarkedConfig, McOptions};
use crate::params::{OrbitKind, OrbitParams};
use crate::qpfunc::{PeriodicFn, QuasiPeriodicFn};
use crate::symplectic::{self, ChartState, TangentVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Charts,
    Symplectic,
    Lemma1,
    Gaussian,
    Correlators,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["charts", "symplectic", "lemma1", "gaussian", "correlators", "all"];

    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Charts, Suite::Symplectic, Suite::Lemma1, Suite::Gaussian, Suite::Correlators],
            s => vec![s],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Charts => "charts",
            Suite::Symplectic => "symplectic",
            Suite::Lemma1 => "lemma1",
            Suite::Gaussian => "gaussian",
            Suite::Correlators => "correlators",
            Suite::All => "all",
        }
    }

    /// Suites that integrate against the Gaussian measure.
    pub fn needs_measure(self) -> bool {
        matches!(self, Suite::Gaussian | Suite::Correlators | Suite::All)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "charts" => Suite::Charts,
            "symplectic" => Suite::Symplectic,
            "lemma1" => Suite::Lemma1,
            "gaussian" => Suite::Gaussian,
            "correlators" => Suite::Correlators,
            "all" => Suite::All,
            _ => return Err(Error::InvalidArgument(format!("unknown suite {s:?}; expected one of {:?}", Suite::NAMES))),
        })
    }
}

/// Name, default and meaning of every tolerance.
pub const DEFAULT_TOLERANCES: &[(&str, f64, &str)] = &[
    ("round_trip", 1e-8, "chart round trip, sup norm modulo gauge"),
    ("round_trip_teichmuller", 1e-7, "Teichmüller round trip, sup norm"),
    ("equivariance", 1e-8, "q(f∘h) against the affine action"),
    ("group_law", 1e-9, "(u^h)^g against u^(h∘g)"),
    ("cocycle", 1e-6, "Schwarzian cocycle, sup norm"),
    ("kks", 1e-6, "KKS form against the pulled-back Darboux form"),
    ("moment_density", 1e-6, "moment density across charts, sup norm"),
    ("moment_chart", 1e-6, "rotation moment across charts"),
    ("hamiltonian", 1e-5, "ω(∂u, δu) against −dμ(δu)"),
    ("lemma1", 1e-5, "variation formula residual at h = 1e-4"),
    ("lemma1_ratio", 0.5, "|ratio − 4| when h halves"),
    ("z", 1e-14, "partition function, relative"),
    ("mean_moment", 1e-8, "⟨μ⟩ against d log Z/dt"),
    ("zeta_sum", 1e-15, "⟨μ⟩ against the ζ-regularized mode sum"),
    ("saddle_closed", 1e-12, "saddle action against the bilocal closed form"),
    ("saddle_green", 1e-10, "saddle action against the Green-function sum"),
    ("gauge", 1e-12, "gauge and rotation invariance of the action"),
    ("mc_sigma", 3.0, "Monte Carlo deviation in standard errors"),
    ("mc_rate", 0.2, "relative deviation of the stderr ratio from 2"),
    ("one_point", 1e-8, "one-bilocal closed form against quadratures, relative"),
    ("to_two_point", 1e-6, "time-ordered closed form against quadratures, relative"),
    ("oto_decomposition", 1e-9, "Σ region oracles against the whole rectangle, relative"),
    ("oto_case", 1e-6, "OTO case I closed form against its oracle, relative"),
    ("oto_flag", 1e-5, "OTO closed-vs-oracle agreement threshold"),
    ("oto_amended", 1e-8, "corrected OTO case forms against their oracles"),
    ("rotation", 1e-9, "correlators under a common shift, relative"),
    ("coincidence", 1e-6, "⟨O(x,x+ε)⟩/ε against e^(3ε/2ct) at ε = 1e-3"),
    ("expand_c1", 1e-6, "fitted ε coefficient against 2π"),
    ("expand_naive_c2", 1e-8, "fitted naive ε² coefficient against 0"),
    ("expand_c2", 1e-2, "fitted exact ε² coefficient against 3π/(ct), relative"),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances(DEFAULT_TOLERANCES.iter().map(|(k, v, _)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance {name} must be a non-negative number, got {value}")));
        }
        match self.0.get_mut(name) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(Error::InvalidArgument(format!("unknown tolerance {name:?}"))),
        }
    }

    pub fn as_map(&self) -> &BTreeMap<String, f64> {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub params: OrbitParams,
    pub t: f64,
    pub grid_n: usize,
    pub modes_n: usize,
    pub mc_samples: usize,
    pub seed: u64,
    /// Items per random corpus.
    pub corpus: usize,
    pub tol: Tolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            params: OrbitParams::from_alpha(12.0, 1.0).expect("valid defaults"),
            t: 1.0,
            grid_n: 1024,
            modes_n: 256,
            mc_samples: 100_000,
            seed: 20_240_501,
            corpus: 100,
            tol: Tolerances::default(),
        }
    }
}

impl VerifyOptions {
    /// Winding used for hyperbolic checks when the configured orbit is not hyperbolic.
    fn hyperbolic(&self) -> Result<OrbitParams> {
        match self.params.kind {
            OrbitKind::Hyperbolic => Ok(self.params),
            _ => OrbitParams::from_alpha(self.params.c, 1.0),
        }
    }
}

/// How `error` was measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Abs,
    Rel,
    /// `|value − oracle|` in standard errors.
    Sigma,
}

/// Worst item of one check over its corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub inputs: String,
    pub value: f64,
    pub oracle: f64,
    pub abs_err: f64,
    /// `abs_err/|oracle|`, or `abs_err` when the oracle is zero.
    pub rel_err: f64,
    pub metric: Metric,
    pub error: f64,
    pub tol: f64,
    pub pass: bool,
    /// Non-gating checks are reported only.
    pub gating: bool,
    pub items: usize,
    pub note: String,
}

/// One corpus item: the compared values and the error measured under the check's metric.
#[derive(Debug, Clone)]
struct Item {
    inputs: String,
    value: f64,
    oracle: f64,
    error: f64,
}

impl Item {
    fn new(inputs: String, value: f64, oracle: f64, metric: Metric) -> Self {
        let error = match metric {
            Metric::Abs => (value - oracle).abs(),
            Metric::Rel => (value - oracle).abs() / oracle.abs(),
            Metric::Sigma => f64::NAN,
        };
        Item { inputs, value, oracle, error }
    }

    fn sigma(inputs: String, value: f64, oracle: f64, stderr: f64) -> Self {
        Item { inputs, value, oracle, error: (value - oracle).abs() / stderr }
    }

    /// A deviation that is itself the measured quantity.
    fn deviation(inputs: String, dev: f64) -> Self {
        Item { inputs, value: dev, oracle: 0.0, error: dev.abs() }
    }
}

struct Ctx<'a> {
    suite: Suite,
    opts: &'a VerifyOptions,
    out: Vec<Check>,
}

impl Ctx<'_> {
    fn push(&mut self, name: &str, tol_name: &str, metric: Metric, items: Vec<Result<Item>>) {
        let tol = self.opts.tol.get(tol_name);
        self.out.push(reduce(self.suite, name, metric, tol, true, items));
    }

    fn push_advisory(&mut self, name: &str, tol_name: &str, metric: Metric, items: Vec<Result<Item>>) {
        let tol = self.opts.tol.get(tol_name);
        self.out.push(reduce(self.suite, name, metric, tol, false, items));
    }
}

fn reduce(suite: Suite, name: &str, metric: Metric, tol: f64, gating: bool, items: Vec<Result<Item>>) -> Check {
    let n = items.len();
    let mut failures = Vec::new();
    let mut worst: Option<Item> = None;
    for it in items {
        match it {
            Ok(it) => {
                // NaN errors win so that they cannot hide behind a finite worst case.
                let replace = match &worst {
                    None => true,
                    Some(w) => it.error.is_nan() || (!w.error.is_nan() && it.error > w.error),
                };
                if replace {
                    worst = Some(it);
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    let mut note = String::new();
    if !failures.is_empty() {
        note = format!("{} of {n} items failed; first: {}", failures.len(), failures[0]);
    }
    let w = worst.unwrap_or(Item { inputs: String::new(), value: f64::NAN, oracle: f64::NAN, error: f64::NAN });
    let abs_err = (w.value - w.oracle).abs();
    let pass = failures.is_empty() && w.error <= tol;
    Check {
        suite: suite.name(),
        name: name.to_string(),
        inputs: w.inputs,
        value: w.value,
        oracle: w.oracle,
        abs_err,
        rel_err: if w.oracle == 0.0 { abs_err } else { abs_err / w.oracle.abs() },
        metric,
        error: w.error,
        tol,
        pass,
        gating,
        items: n,
        note,
    }
}

/// Runs one suite, or all of them.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<Check>> {
    check_options(opts)?;
    if suite.needs_measure() && opts.params.kind == OrbitKind::Teichmuller {
        return Err(Error::InvalidParams(format!("suite {suite} needs b0 <= 0")));
    }
    let mut out = Vec::new();
    for s in suite.expand() {
        let mut ctx = Ctx { suite: s, opts, out: Vec::new() };
        match s {
            Suite::Charts => charts(&mut ctx)?,
            Suite::Symplectic => symplectic_suite(&mut ctx)?,
            Suite::Lemma1 => lemma1(&mut ctx),
            Suite::Gaussian => gaussian_suite(&mut ctx)?,
            Suite::Correlators => correlators_suite(&mut ctx)?,
            Suite::All => unreachable!("expanded above"),
        }
        out.extend(ctx.out);
    }
    Ok(out)
}

fn check_options(opts: &VerifyOptions) -> Result<()> {
    if !(opts.grid_n >= 64 && opts.grid_n.is_power_of_two()) {
        return Err(Error::InvalidArgument(format!("grid size must be a power of two ≥ 64, got {}", opts.grid_n)));
    }
    if !(opts.t > 0.0 && opts.t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {}", opts.t)));
    }
    if opts.modes_n == 0 || opts.mc_samples < 400 || opts.corpus == 0 {
        return Err(Error::InvalidArgument("need modes ≥ 1, at least 400 samples and a non-empty corpus".into()));
    }
    Ok(())
}

// Offsets separating the random streams of different checks.
const TANGENT_V: usize = 1 << 20;
const TANGENT_W: usize = 2 << 20;
const SECOND_DIFFEO: usize = 3 << 20;
const THIRD_DIFFEO: usize = 4 << 20;
const GAUSS: usize = 5 << 20;
const CORR: usize = 6 << 20;

/// Corpus diffeo `i`, shared by every suite.
pub fn corpus_diffeo(seed: u64, i: usize, n: usize) -> Result<QuasiPeriodicFn> {
    corpus::random_diffeo(&mut item_rng(seed, i), n)
}

pub fn corpus_tangent(seed: u64, i: usize, n: usize, which: usize) -> Result<PeriodicFn> {
    let base = if which == 0 { TANGENT_V } else { TANGENT_W };
    corpus::random_tangent(&mut item_rng(seed, base + i), n)
}

/// `sup |a − b − (a − b)(0)|` on the periodic parts.
fn sup_mod_const(a: &PeriodicFn, b: &PeriodicFn) -> Result<f64> {
    let d = a.sub(b)?;
    let m = d.samples()[0];
    Ok(d.shift_value(-m).sup_norm())
}

fn par_items<F>(n: usize, f: F) -> Vec<Result<Item>>
where
    F: Fn(usize) -> Result<Item> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

fn charts(ctx: &mut Ctx<'_>) -> Result<()> {
    let o = ctx.opts;
    let (n, seed, m) = (o.grid_n, o.seed, o.corpus);
    let hyp = o.hyperbolic()?;
    let par = OrbitParams::parabolic(o.params.c)?;

    for (label, params) in [("hyperbolic", hyp), ("parabolic", par)] {
        let items = par_items(m, |i| {
            let f = corpus_diffeo(seed, i, n)?;
            let u = darboux::to_darboux(&f, &params)?;
            let g = darboux::from_darboux(&u, &params)?;
            let u2 = darboux::to_darboux(&g, &params)?;
            let e1 = sup_mod_const(f.periodic_part(), g.periodic_part())?;
            let e2 = u.field().periodic_part().max_abs_diff(u2.field().periodic_part())?;
            Ok(Item::deviation(format!("item={i}"), e1.max(e2)))
        });
        ctx.push(&format!("round_trip.{label}"), "round_trip", Metric::Abs, items);
    }

    let items = par_items(m, |i| {
        let f = corpus_diffeo(seed, i, n)?;
        let p = darboux::to_teichmuller(&f)?;
        let g = darboux::from_teichmuller(&p)?;
        let d = f.periodic_part().sub(g.periodic_part())?;
        let k = (d.samples()[0] / TAU).round();
        let e1 = d.shift_value(-k * TAU).sup_norm();
        let e2 = darboux::to_teichmuller(&g)?.u.max_abs_diff(&p.u)?;
        Ok(Item::deviation(format!("item={i}"), e1.max(e2)))
    });
    ctx.push("round_trip.teichmuller", "round_trip_teichmuller", Metric::Abs, items);

    for (label, params) in [("hyperbolic", hyp), ("parabolic", par)] {
        let items = par_items(m, |i| {
            let f = corpus_diffeo(seed, i, n)?;
            let h = corpus::random_diffeo(&mut item_rng(seed, SECOND_DIFFEO + i), n)?;
            let lhs = darboux::to_darboux(&f.compose(&h)?, &params)?;
            let rhs = apply_diffeo_action(&darboux::to_darboux(&f, &params)?, &h)?;
            let e = sup_mod_const(lhs.field().periodic_part(), rhs.field().periodic_part())?;
            Ok(Item::deviation(format!("item={i}"), e))
        });
        ctx.push(&format!("equivariance.{label}"), "equivariance", Metric::Abs, items);
    }

    let items = par_items(m, |i| {
        let f = corpus_diffeo(seed, i, n)?;
        let h = corpus::random_diffeo(&mut item_rng(seed, SECOND_DIFFEO + i), n)?;
        let g = corpus::random_diffeo(&mut item_rng(seed, THIRD_DIFFEO + i), n)?;
        let u = darboux::to_darboux(&f, &hyp)?;
        let lhs = apply_diffeo_action(&apply_diffeo_action(&u, &h)?, &g)?;
        let rhs = apply_diffeo_action(&u, &h.compose(&g)?)?;
        let e = lhs.field().periodic_part().max_abs_diff(rhs.field().periodic_part())?;
        Ok(Item::deviation(format!("item={i}"), e))
    });
    ctx.push("group_law", "group_law", Metric::Abs, items);

    let items = par_items(m, |i| {
        let f = corpus_diffeo(seed, i, n)?;
        let h = corpus::random_diffeo(&mut item_rng(seed, SECOND_DIFFEO + i), n)?;
        Ok(Item::deviation(format!("item={i}"), cocycle_defect(&f, &h)?))
    });
    ctx.push("schwarzian_cocycle", "cocycle", Metric::Abs, items);
    Ok(())
}

/// `sup |S(f∘h) − (S(f)∘h)·h'² − S(h)|`.
pub fn cocycle_defect(f: &QuasiPeriodicFn, h: &QuasiPeriodicFn) -> Result<f64> {
    let lhs = f.compose(h)?.schwarzian()?;
    let sf = f.schwarzian()?.interpolant();
    let sh = h.schwarzian()?;
    let hp = h.derivative(1)?;
    let hv = h.values();
    let mut worst = 0.0f64;
    for j in 0..lhs.grid_size() {
        let rhs = sf.eval(hv[j]) * hp.samples()[j] * hp.samples()[j] + sh.samples()[j];
        worst = worst.max((lhs.samples()[j] - rhs).abs());
    }
    Ok(worst)
}

fn kks_pair(params: &OrbitParams, f: &QuasiPeriodicFn, v: &TangentVector, w: &TangentVector) -> Result<(f64, f64)> {
    let k = symplectic::kks_form(f, v, w, params)?;
    let dv = symplectic::pushforward_tangent(f, v, params)?;
    let dw = symplectic::pushforward_tangent(f, w, params)?;
    let u = DarbouxField::from_periodic(PeriodicFn::zeros(f.grid_size())?, params)?;
    Ok((k, symplectic::darboux_form(&u, &dv, &dw, params)?))
}

fn symplectic_suite(ctx: &mut Ctx<'_>) -> Result<()> {
    let o = ctx.opts;
    let (n, seed, m) = (o.grid_n, o.seed, o.corpus);
    let hyp = o.hyperbolic()?;
    let par = OrbitParams::parabolic(o.params.c)?;
    let teich = OrbitParams::teichmuller(o.params.c)?;
    let tangents = |i: usize| -> Result<(TangentVector, TangentVector)> {
        Ok((TangentVector::diffeo(corpus_tangent(seed, i, n, 0)?), TangentVector::diffeo(corpus_tangent(seed, i, n, 1)?)))
    };

    for (label, params) in [("hyperbolic", hyp), ("parabolic", par)] {
        let items = par_items(m, |i| {
            let f = corpus_diffeo(seed, i, n)?;
            let (v, w) = tangents(i)?;
            let (k, d) = kks_pair(&params, &f, &v, &w)?;
            Ok(Item::new(format!("item={i}"), d, k, Metric::Abs))
        });
        ctx.push(&format!("kks.{label}"), "kks", Metric::Abs, items);
    }
    let items = par_items(m, |i| {
        let f = darboux::teichmuller_section(&corpus_diffeo(seed, i, n)?)?;
        let (v, w) = tangents(i)?;
        let pv = symplectic::project_to_section(&f, &v)?;
        let pw = symplectic::project_to_section(&f, &w)?;
        let (k, d) = kks_pair(&teich, &f, &pv, &pw)?;
        Ok(Item::new(format!("item={i} section"), d, k, Metric::Abs))
    });
    ctx.push("kks.teichmuller", "kks", Metric::Abs, items);

    for (label, params) in [("hyperbolic", hyp), ("parabolic", par)] {
        let items = par_items(m, |i| {
            let f = corpus_diffeo(seed, i, n)?;
            let u = darboux::to_darboux(&f, &params)?;
            let a = symplectic::moment_density(ChartState::Diffeo(&f), &params)?;
            let b = symplectic::moment_density(ChartState::Darboux(&u), &params)?;
            Ok(Item::deviation(format!("item={i}"), a.max_abs_diff(&b)?))
        });
        ctx.push(&format!("moment_density.{label}"), "moment_density", Metric::Abs, items);
    }
    let items = par_items(m, |i| {
        let f = corpus_diffeo(seed, i, n)?;
        let a = symplectic::moment_density(ChartState::Diffeo(&f), &teich)?;
        let p = darboux::to_teichmuller(&f)?;
        let b = symplectic::moment_density(ChartState::Teich(&p), &teich)?;
        let s = darboux::teichmuller_section(&f)?;
        let u = darboux::to_teichmuller(&s)?.into_field()?;
        let c = symplectic::moment_density(ChartState::Darboux(&u), &teich)?;
        Ok(Item::deviation(format!("item={i}"), a.max_abs_diff(&b)?.max(a.max_abs_diff(&c)?)))
    });
    ctx.push("moment_density.teichmuller", "moment_density", Metric::Abs, items);

    for (label, params) in [("hyperbolic", hyp), ("parabolic", par), ("teichmuller", teich)] {
        let items = par_items(m, |i| {
            let f = corpus_diffeo(seed, i, n)?;
            let a = symplectic::moment_s1(ChartState::Diffeo(&f), &params)?;
            let b = if params.kind == OrbitKind::Teichmuller {
                let u = darboux::to_teichmuller(&darboux::teichmuller_section(&f)?)?.into_field()?;
                symplectic::moment_s1(ChartState::Darboux(&u), &params)?
            } else {
                symplectic::moment_s1(ChartState::Darboux(&darboux::to_darboux(&f, &params)?), &params)?
            };
            Ok(Item::new(format!("item={i}"), b, a, Metric::Abs))
        });
        ctx.push(&format!("moment_chart.{label}"), "moment_chart", Metric::Abs, items);
    }

    let items = par_items(m.min(20), |i| {
        let f = corpus_diffeo(seed, i, n)?;
        let u = darboux::to_darboux(&f, &hyp)?;
        let du = corpus_tangent(seed, i, n, 0)?;
        let (a, b) = symplectic::hamiltonian_check(&u, &du, &hyp, 1e-4)?;
        Ok(Item::new(format!("item={i}"), a, b, Metric::Abs))
    });
    ctx.push("hamiltonian", "hamiltonian", Metric::Abs, items);
    Ok(())
}

fn lemma1(ctx: &mut Ctx<'_>) {
    let o = ctx.opts;
    let (n, seed, m) = (o.grid_n, o.seed, o.corpus);
    let reports: Vec<Result<(usize, symplectic::Lemma1Report)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let f = corpus_diffeo(seed, i, n)?;
            let df = corpus_tangent(seed, i, n, 0)?;
            Ok((i, symplectic::verify_lemma1(&f, &df, 1e-4)?))
        })
        .collect();
    let residuals = reports
        .iter()
        .map(|r| r.clone().map(|(i, r)| Item::deviation(format!("item={i} h={}", r.h), r.residual)))
        .collect();
    ctx.push("lemma1.residual", "lemma1", Metric::Abs, residuals);
    let floor = reports.iter().filter(|r| matches!(r, Ok((_, r)) if r.at_noise_floor)).count();
    let ratios = reports
        .iter()
        .map(|r| r.clone().map(|(i, r)| Item::new(format!("item={i} h={}", r.order_h), r.order_ratio, 4.0, Metric::Abs)))
        .collect();
    ctx.push("lemma1.order", "lemma1_ratio", Metric::Abs, ratios);
    if floor > 0 {
        if let Some(c) = ctx.out.last_mut() {
            c.note = format!("{floor} items at the round-off floor at h=1e-4, order measured at a larger step");
        }
    }
}

/// Random `(c, α, t)` with moderate `ct` for the deterministic checks.
fn random_params(rng: &mut impl Rng) -> Result<(OrbitParams, f64)> {
    let c = rng.random_range(6.0..48.0);
    let alpha = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.05..3.0) };
    Ok((OrbitParams::from_alpha(c, alpha)?, rng.random_range(0.3..3.0)))
}

fn describe(p: &OrbitParams, t: f64) -> String {
    format!("c={} b0={} t={}", p.c, p.b0, t)
}

fn gaussian_suite(ctx: &mut Ctx<'_>) -> Result<()> {
    let o = ctx.opts;
    let seed = o.seed;

    let mut grid = Vec::new();
    for c in [6.0, 12.0, 24.0, 48.0, 96.0] {
        for (alpha, t) in [(0.0, 0.5), (0.5, 1.0), (1.0, 2.0), (2.0, 4.0)] {
            grid.push((OrbitParams::from_alpha(c, alpha)?, t));
        }
    }
    let z: Vec<Result<Item>> = grid
        .iter()
        .map(|(p, t)| {
            let z = gaussian::partition_function(p, *t)?;
            let closed = (t / TAU).sqrt() * (TAU * p.b0 * t).exp();
            let assembled = z.pfaffian * (t * z.classical_moment).exp() / z.determinant.sqrt();
            let e = ((z.value - closed) / closed).abs().max(((assembled - closed) / closed).abs());
            Ok(Item { inputs: describe(p, *t), value: z.value, oracle: closed, error: e })
        })
        .collect();
    ctx.push("partition_function", "z", Metric::Rel, z);

    let mm: Vec<Result<Item>> = grid
        .iter()
        .map(|(p, t)| {
            let h = 1e-5 * t;
            let lz = |s: f64| gaussian::partition_function(p, s).map(|z| z.value.ln());
            let fd = (lz(t + h)? - lz(t - h)?) / (2.0 * h);
            Ok(Item::new(describe(p, *t), gaussian::mean_moment(p, *t)?, fd, Metric::Abs))
        })
        .collect();
    ctx.push("mean_moment.log_z_derivative", "mean_moment", Metric::Abs, mm);
    let zs: Vec<Result<Item>> = grid
        .iter()
        .map(|(p, t)| {
            let (_, reg) = gaussian::mean_moment_mode_sum(p, *t, o.modes_n)?;
            Ok(Item::new(describe(p, *t), reg, gaussian::mean_moment(p, *t)?, Metric::Abs))
        })
        .collect();
    ctx.push("mean_moment.zeta_sum", "zeta_sum", Metric::Abs, zs);

    let items = par_items(o.corpus, |i| {
        let mut rng = item_rng(seed, GAUSS + i);
        let c = rng.random_range(6.0..24.0);
        let alpha = rng.random_range(0.0..2.0);
        let t = rng.random_range(0.5..2.0);
        let p = OrbitParams::from_alpha(c, alpha)?;
        let (x1, x2) = corpus::random_pair(&mut rng, 0.05);
        let s = rng.random_range(x1..x2);
        let sol = gaussian::solve_saddle(&MarkedConfig::bilocal(x1, x2, s)?, &p, t)?;
        let ct = c * t;
        let q = 2.0 * s - x1 - x2 - ct * PI * alpha / 3.0;
        let closed = 1.5 * (x2 - x1) / ct - 3.0 / (4.0 * PI * ct) * q * q;
        Ok(Item::new(format!("{} x1={x1} x2={x2} s={s}", describe(&p, t)), sol.action, closed, Metric::Abs))
    });
    ctx.push("saddle.closed_form", "saddle_closed", Metric::Abs, items);

    let configs = 10 * o.corpus;
    let items = par_items(configs, |i| {
        let mut rng = item_rng(seed, GAUSS + (1 << 18) + i);
        let (p, t) = random_params(&mut rng)?;
        let k = rng.random_range(2..=6);
        let cfg = corpus::random_marked_config(&mut rng, k, 1e-3)?;
        let a = gaussian::solve_saddle(&cfg, &p, t)?.action;
        let b = gaussian::exp_expectation(&cfg, &p, t)?;
        Ok(Item::new(format!("{} points={:?}", describe(&p, t), cfg.points()), a, b, Metric::Abs))
    });
    ctx.push("saddle.green", "saddle_green", Metric::Abs, items);

    let items = par_items(o.corpus, |i| {
        let mut rng = item_rng(seed, GAUSS + (2 << 18) + i);
        let (p, t) = random_params(&mut rng)?;
        let cfg = corpus::random_marked_config(&mut rng, 4, 1e-3)?;
        let sol = gaussian::solve_saddle(&cfg, &p, t)?;
        let shift = rng.random_range(-3.0..3.0);
        let g = gaussian::effective_action(&sol.regauged(shift), &cfg, &p, t)?;
        let theta = rng.random_range(0.0..TAU);
        let r = gaussian::exp_expectation(&cfg.rotated(theta), &p, t)?;
        let base = gaussian::exp_expectation(&cfg, &p, t)?;
        let e = (g - sol.action).abs().max((r - base).abs());
        Ok(Item { inputs: format!("{} shift={shift} theta={theta}", describe(&p, t)), value: g, oracle: sol.action, error: e })
    });
    ctx.push("gauge_and_rotation", "gauge", Metric::Abs, items);

    let p = o.params;
    let mc = McOptions { n_modes: o.modes_n, n_samples: o.mc_samples, seed };
    let var = mode_variance(&p, o.t, mc);
    ctx.push("mc.mode_variance", "mc_sigma", Metric::Sigma, vec![var]);

    let rate = mc_rate(&p, o.t, mc);
    ctx.push("mc.convergence_rate", "mc_rate", Metric::Rel, vec![rate]);
    Ok(())
}

/// Sample variance of `Re u₁` against `3/(πct)`.
fn mode_variance(p: &OrbitParams, t: f64, mc: McOptions) -> Result<Item> {
    let ct = p.c * t;
    let target = 3.0 / (PI * ct);
    // The mean is known to vanish, so the variance is the mean of X².
    let est = gaussian::mc_estimate(|f| f.modes[0].re * f.modes[0].re, p, t, mc)?;
    Ok(Item::sigma(format!("{} samples={}", describe(p, t), mc.n_samples), est.mean, target, est.stderr))
}

/// `stderr(n)/stderr(4n)` for the one-bilocal estimator.
fn mc_rate(p: &OrbitParams, t: f64, mc: McOptions) -> Result<Item> {
    let small = McOptions { n_samples: mc.n_samples / 4, ..mc };
    let a = correlators::one_point_mc(0.5, 2.0, p, t, small)?;
    let b = correlators::one_point_mc(0.5, 2.0, p, t, mc)?;
    Ok(Item::new(format!("{} n={} and {}", describe(p, t), small.n_samples, mc.n_samples), a.stderr / b.stderr, 2.0, Metric::Rel))
}

fn correlators_suite(ctx: &mut Ctx<'_>) -> Result<()> {
    let o = ctx.opts;
    let seed = o.seed;
    let n_one = (o.corpus / 2).max(1);
    let n_to = (o.corpus / 4).max(1);

    let one: Vec<Result<(String, f64, f64, f64)>> = (0..n_one)
        .into_par_iter()
        .map(|i| {
            let mut rng = item_rng(seed, CORR + i);
            let (p, t) = random_params(&mut rng)?;
            let (x1, x2) = corpus::random_pair(&mut rng, 0.05);
            let a = correlators::one_point_closed(x1, x2, &p, t)?;
            let s = correlators::one_point_quadrature(x1, x2, &p, t, Route::Saddle)?;
            let g = correlators::one_point_quadrature(x1, x2, &p, t, Route::Green)?;
            Ok((format!("{} x1={x1} x2={x2}", describe(&p, t)), a, s, g))
        })
        .collect();
    let pick = |f: fn(&(String, f64, f64, f64)) -> (f64, f64)| -> Vec<Result<Item>> {
        one.iter().map(|r| r.clone().map(|v| {
            let (a, b) = f(&v);
            Item::new(v.0.clone(), a, b, Metric::Rel)
        })).collect()
    };
    ctx.push("one_point.closed_vs_saddle", "one_point", Metric::Rel, pick(|v| (v.1, v.2)));
    ctx.push("one_point.closed_vs_green", "one_point", Metric::Rel, pick(|v| (v.1, v.3)));
    let positive = one
        .iter()
        .map(|r| r.clone().map(|v| Item { inputs: v.0, value: v.1, oracle: 0.0, error: if v.1 > 0.0 { 0.0 } else { 1.0 } }))
        .collect();
    ctx.push("one_point.positivity", "one_point", Metric::Abs, positive);

    let mc = McOptions { n_modes: o.modes_n, n_samples: o.mc_samples, seed };
    let mc_items = (0..3)
        .map(|i| {
            let mut rng = item_rng(seed, CORR + (1 << 18) + i);
            let p = OrbitParams::from_alpha(rng.random_range(60.0..150.0), rng.random_range(0.0..1.0))?;
            let (x1, x2) = corpus::random_pair(&mut rng, 0.3);
            let e = correlators::one_point_mc(x1, x2, &p, 1.0, McOptions { seed: seed.wrapping_add(i as u64), ..mc })?;
            let a = correlators::one_point_closed(x1, x2, &p, 1.0)?;
            Ok(Item::sigma(format!("{} x1={x1} x2={x2}", describe(&p, 1.0)), e.mean, a, e.stderr))
        })
        .collect();
    ctx.push("one_point.monte_carlo", "mc_sigma", Metric::Sigma, mc_items);

    let to: Vec<Result<(String, f64, f64, f64, f64, f64)>> = (0..n_to)
        .into_par_iter()
        .map(|i| {
            let mut rng = item_rng(seed, CORR + (2 << 18) + i);
            let c = rng.random_range(6.0..48.0);
            let alpha = rng.random_range(0.0..2.0);
            let t = rng.random_range(0.3..2.0);
            let p = OrbitParams::from_alpha(c, alpha)?;
            let x = corpus::random_quad(&mut rng, 0.05);
            let a = correlators::two_point_to_closed(x, &p, t)?;
            let s = correlators::two_point_to_oracle(x, &p, t, Route::Saddle)?;
            let g = correlators::two_point_to_oracle(x, &p, t, Route::Green)?;
            let literal = correlators::two_point_to_closed_literal(x, &p, t)?;
            Ok((format!("{} x={x:?}", describe(&p, t)), a, s, g, literal, -TAU * p.b0 * t))
        })
        .collect();
    let to_items = |f: fn(&(String, f64, f64, f64, f64, f64)) -> (f64, f64)| -> Vec<Result<Item>> {
        to.iter().map(|r| r.clone().map(|v| {
            let (a, b) = f(&v);
            Item::new(v.0.clone(), a, b, Metric::Rel)
        })).collect()
    };
    ctx.push("to_two_point.closed_vs_saddle", "to_two_point", Metric::Rel, to_items(|v| (v.1, v.2)));
    ctx.push("to_two_point.closed_vs_green", "to_two_point", Metric::Rel, to_items(|v| (v.1, v.3)));
    let literal: Vec<Result<Item>> = to
        .iter()
        .filter(|r| matches!(r, Ok(v) if v.5 < 10.0))
        .map(|r| r.clone().map(|v| Item::new(v.0, v.4, v.3, Metric::Rel)))
        .collect();
    ctx.push("to_two_point.literal_form", "to_two_point", Metric::Rel, literal);

    let to_mc = (0..2)
        .map(|i| {
            let mut rng = item_rng(seed, CORR + (3 << 18) + i);
            let p = OrbitParams::from_alpha(rng.random_range(60.0..150.0), rng.random_range(0.0..1.0))?;
            let x = corpus::random_quad(&mut rng, 0.3);
            let e = correlators::two_point_mc(x, &p, 1.0, McOptions { seed: seed.wrapping_add(100 + i as u64), ..mc })?;
            let a = correlators::two_point_to_closed(x, &p, 1.0)?;
            Ok(Item::sigma(format!("{} x={x:?}", describe(&p, 1.0)), e.mean, a, e.stderr))
        })
        .collect();
    ctx.push("to_two_point.monte_carlo", "mc_sigma", Metric::Sigma, to_mc);

    oto_checks(ctx)?;
    rotation_checks(ctx)?;

    let p = o.params;
    let r = correlators::taylor_vs_exact(&p, o.t, &correlators::default_eps_grid());
    let inputs = describe(&p, o.t);
    let item = |f: fn(&correlators::ComparisonReport) -> (f64, f64), m: Metric| -> Vec<Result<Item>> {
        vec![r.clone().map(|r| {
            let (a, b) = f(&r);
            Item::new(inputs.clone(), a, b, m)
        })]
    };
    ctx.push("expansion.c1_exact", "expand_c1", Metric::Abs, item(|r| (r.exact_c1, r.target_c1), Metric::Abs));
    ctx.push("expansion.c1_naive", "expand_c1", Metric::Abs, item(|r| (r.naive_c1, r.target_c1), Metric::Abs));
    ctx.push("expansion.c2_naive", "expand_naive_c2", Metric::Abs, item(|r| (r.naive_c2, r.target_naive_c2), Metric::Abs));
    ctx.push("expansion.c2_exact", "expand_c2", Metric::Rel, item(|r| (r.exact_c2, r.target_exact_c2), Metric::Rel));

    let eps = 1e-3;
    let coincidence = vec![(|| {
        let v = correlators::one_point_closed(1.0, 1.0 + eps, &p, o.t)? / eps;
        Ok(Item::new(format!("{inputs} eps={eps}"), v, (1.5 * eps / (p.c * o.t)).exp(), Metric::Rel))
    })()];
    ctx.push("coincidence_limit", "coincidence", Metric::Rel, coincidence);
    Ok(())
}

/// Configurations for the OTO checks: the configured orbit plus two fixed ones.
fn oto_configs(o: &VerifyOptions) -> Result<Vec<(OrbitParams, f64, [f64; 4])>> {
    Ok(vec![
        (o.params, o.t, [0.4, 2.5, 1.3, 4.0]),
        (OrbitParams::from_alpha(6.0, 0.0)?, 0.7, [0.2, 3.0, 1.0, 5.0]),
        (OrbitParams::from_alpha(24.0, 1.0)?, 0.5, [1.0, 2.2, 1.7, 3.0]),
    ])
}

fn oto_checks(ctx: &mut Ctx<'_>) -> Result<()> {
    let configs = oto_configs(ctx.opts)?;
    let reports: Vec<Result<(String, correlators::OtoReport)>> = configs
        .par_iter()
        .map(|(p, t, x)| Ok((format!("{} x={x:?}", describe(p, *t)), correlators::two_point_oto(*x, p, *t)?)))
        .collect();
    let decomposition = reports
        .iter()
        .map(|r| r.clone().map(|(s, r)| Item::new(s, r.value, r.whole_oracle, Metric::Rel)))
        .collect();
    ctx.push("oto.decomposition", "oto_decomposition", Metric::Rel, decomposition);
    for (k, label) in ["I", "II", "III", "IV", "V"].iter().enumerate() {
        let literal: Vec<Result<Item>> = reports
            .iter()
            .map(|r| r.clone().map(|(s, r)| Item::new(s, r.cases[k].closed, r.cases[k].oracle, Metric::Rel)))
            .collect();
        if k == 0 {
            ctx.push("oto.case_I", "oto_case", Metric::Rel, literal);
        } else {
            // Literal forms of II–V are compared at the flag threshold and reported.
            ctx.push_advisory(&format!("oto.case_{label}.literal"), "oto_flag", Metric::Rel, literal);
            let amended = reports
                .iter()
                .map(|r| r.clone().map(|(s, r)| Item::new(s, r.cases[k].amended, r.cases[k].oracle, Metric::Rel)))
                .collect();
            ctx.push(&format!("oto.case_{label}.amended"), "oto_amended", Metric::Rel, amended);
        }
    }
    Ok(())
}

fn rotation_checks(ctx: &mut Ctx<'_>) -> Result<()> {
    let o = ctx.opts;
    let p = o.params;
    let t = o.t;
    let mut items = Vec::new();
    // One bilocal: shift inside [0, 2π).
    for (x1, x2, th) in [(0.3, 1.9, 2.0), (1.0, 4.0, 1.7)] {
        items.push((|| {
            let a = correlators::one_point_quadrature(x1, x2, &p, t, Route::Green)?;
            let b = correlators::one_point_quadrature(x1 + th, x2 + th, &p, t, Route::Green)?;
            Ok(Item::new(format!("one_point x1={x1} x2={x2} shift={th}"), b, a, Metric::Rel))
        })());
    }
    // Time ordered: a shift past 2π swaps the two bilocals.
    items.push((|| {
        let x = [0.3, 1.2, 2.0, 4.1];
        let th = TAU - 2.0 + 0.1;
        let y = [x[2] + th - TAU, x[3] + th - TAU, x[0] + th, x[1] + th];
        let a = correlators::two_point_to_oracle(x, &p, t, Route::Green)?;
        let b = correlators::two_point_to_oracle(y, &p, t, Route::Green)?;
        Ok(Item::new(format!("to x={x:?} shift={th}"), b, a, Metric::Rel))
    })());
    items.push((|| {
        let x = [0.4, 2.5, 1.3, 4.0];
        let th = 1.1;
        let a = correlators::two_point_oto(x, &p, t)?.value;
        let b = correlators::two_point_oto(x.map(|v| v + th), &p, t)?.value;
        Ok(Item::new(format!("oto x={x:?} shift={th}"), b, a, Metric::Rel))
    })());
    ctx.push("rotation_invariance", "rotation", Metric::Rel, items);
    Ok(())
}

/// True when every gating check passed.
pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().filter(|c| c.gating).all(|c| c.pass)
}
