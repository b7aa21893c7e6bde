//! Globally adaptive Gauss-Kronrod quadrature (7/15 point pair).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 2000 }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod panel with its embedded Gauss estimate.
fn qk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Mean of `f` over `[a, b]` from a single Kronrod panel; `a = b` gives `f(a)`.
pub fn kronrod_mean<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = f(c) * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        acc += WGK[j] * (f(c - dx) + f(c + dx));
    }
    0.5 * acc
}

/// Integrates `f` over `[a, b]`; `a > b` flips the sign.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0, evaluations: 0 });
    }
    if b < a {
        let r = integrate(f, b, a, opts)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument("integration limits must be finite".into()));
    }
    let mut heap = BinaryHeap::new();
    let (v, e) = qk15(&mut f, a, b);
    let mut evals = 15;
    let mut total = v;
    let mut err = e;
    heap.push(Segment { a, b, value: v, error: e });
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if !total.is_finite() {
            return Err(Error::Numeric(format!("non-finite integrand on [{a}, {b}]")));
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Numeric(format!(
                "quadrature did not converge on [{a}, {b}]: estimate {total:.6e}, error {err:.3e} after {} intervals",
                heap.len()
            )));
        }
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // Interval at machine resolution; accept what we have.
            heap.push(worst);
            break;
        }
        let (v1, e1) = qk15(&mut f, worst.a, m);
        let (v2, e2) = qk15(&mut f, m, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Segment { a: m, b: worst.b, value: v2, error: e2 });
        if err < 0.0 {
            err = heap.iter().map(|s| s.error).sum();
        }
    }
    // Resum to shed the drift from incremental updates.
    let mut parts: Vec<&Segment> = heap.iter().collect();
    parts.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = parts.iter().map(|s| s.value).sum();
    let error = parts.iter().map(|s| s.error).sum();
    Ok(QuadResult { value, error, intervals: parts.len(), evaluations: evals })
}

/// Iterated integral `∫_a^b ∫_{lo(x)}^{hi(x)} f(x, y) dy dx`.
pub fn integrate_2d<F, L, H>(f: F, a: f64, b: f64, lo: L, hi: H, opts: QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let inner_opts = QuadOptions { rel_tol: opts.rel_tol * 0.1, ..opts };
    let mut failure = None;
    let mut evals = 0;
    let outer = integrate(
        |x| match integrate(|y| f(x, y), lo(x), hi(x), inner_opts) {
            Ok(r) => {
                evals += r.evaluations;
                r.value
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        a,
        b,
        opts,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let r = outer?;
    Ok(QuadResult { evaluations: evals, ..r })
}
