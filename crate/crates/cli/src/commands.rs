use std::time::Instant;

use clap::ValueEnum;
use orbit_bosonizer::correlators::{self, default_eps_grid, taylor_vs_exact, ComparisonReport, CorrelatorRequest, CorrelatorResult, Method, Ordering};
use orbit_bosonizer::gaussian::{self, McOptions};
use orbit_bosonizer::verify::{all_pass, run_suite, Check, Metric, Suite, VerifyOptions};
use orbit_bosonizer::OrbitParams;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::config::{ConfigRecord, Format, RunConfig};
use crate::exit::Failure;
use crate::output::{check_finite, emit, to_csv, to_json, SCHEMA_VERSION};

/// Exit status of a command that ran to completion.
pub enum Status {
    Pass,
    Fail,
}

fn only_json(cfg: &RunConfig, cmd: &str) -> Result<(), Failure> {
    match cfg.format {
        Some(Format::Csv) => Err(Failure::usage(format!("{cmd} writes JSON only"))),
        _ => Ok(()),
    }
}

/// Finite numbers as numbers, anything else as a string, so failing records still print.
fn lossless<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

#[derive(Debug, Serialize)]
pub struct ReportRecord {
    pub schema_version: u32,
    pub suite: &'static str,
    pub name: String,
    pub inputs: String,
    #[serde(serialize_with = "lossless")]
    pub value: f64,
    #[serde(serialize_with = "lossless")]
    pub oracle: f64,
    #[serde(serialize_with = "lossless")]
    pub abs_err: f64,
    #[serde(serialize_with = "lossless")]
    pub rel_err: f64,
    pub metric: Metric,
    #[serde(serialize_with = "lossless")]
    pub error: f64,
    pub tol: f64,
    pub pass: bool,
    pub gating: bool,
    pub items: usize,
    pub note: String,
    /// Wall time of the whole suite the record belongs to.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite_wall_time_s: Option<f64>,
}

impl ReportRecord {
    fn new(c: Check, wall: Option<f64>) -> Self {
        ReportRecord {
            schema_version: SCHEMA_VERSION,
            suite: c.suite,
            name: c.name,
            inputs: c.inputs,
            value: c.value,
            oracle: c.oracle,
            abs_err: c.abs_err,
            rel_err: c.rel_err,
            metric: c.metric,
            error: c.error,
            tol: c.tol,
            pass: c.pass,
            gating: c.gating,
            items: c.items,
            note: c.note,
            suite_wall_time_s: wall,
        }
    }

    fn finite(&self) -> bool {
        [self.value, self.oracle, self.abs_err, self.rel_err, self.error, self.tol].iter().all(|v| v.is_finite())
    }
}

#[derive(Serialize)]
struct VerifyDoc<'a> {
    schema_version: u32,
    command: &'static str,
    suite: &'static str,
    config: ConfigRecord,
    corpus: usize,
    tolerances: &'a std::collections::BTreeMap<String, f64>,
    pass: bool,
    records: Vec<ReportRecord>,
}

pub fn verify(cfg: &RunConfig, suite: Suite, corpus: usize, timing: bool) -> Result<Status, Failure> {
    let opts = VerifyOptions {
        params: cfg.params,
        t: cfg.t,
        grid_n: cfg.grid_n,
        modes_n: cfg.modes_n,
        mc_samples: cfg.mc_samples,
        seed: cfg.seed,
        corpus,
        tol: cfg.tolerances.clone(),
    };
    let mut records = Vec::new();
    let mut pass = true;
    for s in suite.expand() {
        let t0 = Instant::now();
        let checks = run_suite(s, &opts)?;
        let wall = timing.then(|| t0.elapsed().as_secs_f64());
        pass &= all_pass(&checks);
        for c in checks {
            eprintln!(
                "{} {:<34} err {:>10.3e} tol {:>8.1e}{}",
                if c.pass { "PASS" } else if c.gating { "FAIL" } else { "NOTE" },
                c.name,
                c.error,
                c.tol,
                if c.gating { "" } else { " (advisory)" }
            );
            records.push(ReportRecord::new(c, wall));
        }
    }
    // A non-finite value is a failure even on an advisory record.
    pass &= records.iter().all(ReportRecord::finite);
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&VerifyDoc {
            schema_version: SCHEMA_VERSION,
            command: "verify",
            suite: suite.name(),
            config: cfg.record(),
            corpus,
            tolerances: cfg.tolerances.as_map(),
            pass,
            records,
        })?,
        Format::Csv => to_csv(&records)?,
    };
    emit(&text, cfg.out.as_deref())?;
    Ok(if pass { Status::Pass } else { Status::Fail })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Closed,
    SaddleQuadrature,
    GreenOracle,
    MonteCarlo,
    /// Closed forms together with their quadrature oracles.
    Both,
}

impl MethodArg {
    fn method(self) -> Method {
        match self {
            MethodArg::Closed | MethodArg::Both => Method::Closed,
            MethodArg::SaddleQuadrature => Method::SaddleQuadrature,
            MethodArg::GreenOracle => Method::GreenOracle,
            MethodArg::MonteCarlo => Method::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderingArg {
    To,
    Oto,
}

impl OrderingArg {
    fn ordering(self) -> Ordering {
        match self {
            OrderingArg::To => Ordering::To,
            OrderingArg::Oto => Ordering::Oto,
        }
    }
}

#[derive(Serialize)]
struct CorrelateDoc {
    schema_version: u32,
    command: &'static str,
    config: ConfigRecord,
    points: Vec<f64>,
    ordering: Ordering,
    #[serde(flatten)]
    result: CorrelatorResult,
}

fn mc_options(cfg: &RunConfig) -> McOptions {
    McOptions { n_modes: cfg.modes_n, n_samples: cfg.mc_samples, seed: cfg.seed }
}

pub fn correlate(cfg: &RunConfig, points: &[f64], ordering: OrderingArg, method: MethodArg) -> Result<Status, Failure> {
    only_json(cfg, "correlate")?;
    let req = CorrelatorRequest {
        points: points.to_vec(),
        ordering: ordering.ordering(),
        params: cfg.params,
        t: cfg.t,
        method: method.method(),
        mc: mc_options(cfg),
    };
    let result = correlators::evaluate(&req)?;
    let doc = CorrelateDoc {
        schema_version: SCHEMA_VERSION,
        command: "correlate",
        config: cfg.record(),
        points: req.points,
        ordering: req.ordering,
        result,
    };
    emit(&to_json(&doc)?, cfg.out.as_deref())?;
    Ok(Status::Pass)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    T,
    C,
    B0,
    Alpha,
    /// Separation of a short bilocal; pairs with the `taylor` quantity.
    Eps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    /// Partition function.
    Z,
    /// Expected rotation moment.
    MeanMoment,
    /// One-bilocal correlator at the first two points.
    OnePoint,
    /// Time-ordered two-point correlator.
    To,
    /// Out-of-time-ordered two-point correlator, oracle value.
    Oto,
    /// Exact and naive integrated short-bilocal curves.
    Taylor,
}

impl Quantity {
    fn columns(self) -> &'static [&'static str] {
        match self {
            Quantity::Z => &["Z[1]"],
            Quantity::MeanMoment => &["mean_moment[1]"],
            Quantity::OnePoint => &["one_point[1]"],
            Quantity::To => &["to_two_point[1]"],
            Quantity::Oto => &["oto_two_point[1]"],
            Quantity::Taylor => &["exact[rad]", "naive[rad]"],
        }
    }
}

pub struct SweepSpec {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub quantities: Vec<Quantity>,
    pub points: Vec<f64>,
}

fn param_column(p: SweepParam) -> &'static str {
    match p {
        SweepParam::T => "t[1]",
        SweepParam::C => "c[1]",
        SweepParam::B0 => "b0[1]",
        SweepParam::Alpha => "alpha[1]",
        SweepParam::Eps => "eps[rad]",
    }
}

fn point_set(points: &[f64], n: usize, q: Quantity) -> Result<[f64; 4], Failure> {
    if points.len() < n {
        return Err(Failure::usage(format!("quantity {q:?} needs --points with {n} values")));
    }
    let mut x = [0.0; 4];
    x[..n].copy_from_slice(&points[..n]);
    Ok(x)
}

fn sweep_row(cfg: &RunConfig, spec: &SweepSpec, v: f64) -> Result<Vec<f64>, Failure> {
    let (params, t): (OrbitParams, f64) = match spec.param {
        SweepParam::T => (cfg.params, v),
        SweepParam::C => (cfg.params_with_c(v)?, cfg.t),
        SweepParam::B0 => (OrbitParams::new(cfg.params.c, v)?, cfg.t),
        SweepParam::Alpha => (OrbitParams::from_alpha(cfg.params.c, v)?, cfg.t),
        SweepParam::Eps => (cfg.params, cfg.t),
    };
    let mut row = vec![v];
    for &q in &spec.quantities {
        match q {
            Quantity::Z => row.push(gaussian::partition_function(&params, t)?.value),
            Quantity::MeanMoment => row.push(gaussian::mean_moment(&params, t)?),
            Quantity::OnePoint => {
                let x = point_set(&spec.points, 2, q)?;
                row.push(correlators::one_point_closed(x[0], x[1], &params, t)?);
            }
            Quantity::To => row.push(correlators::two_point_to_closed(point_set(&spec.points, 4, q)?, &params, t)?),
            Quantity::Oto => row.push(correlators::two_point_oto(point_set(&spec.points, 4, q)?, &params, t)?.value),
            Quantity::Taylor => {
                // Two extra points satisfy the fit's minimum; only the `v` column is kept.
                let r = taylor_vs_exact(&params, t, &[v, v * 0.5, v * 0.25])?;
                row.push(r.exact[0]);
                row.push(r.naive[0]);
            }
        }
    }
    Ok(row)
}

#[derive(Serialize)]
struct SweepDoc {
    schema_version: u32,
    command: &'static str,
    config: ConfigRecord,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

pub fn sweep(cfg: &RunConfig, spec: &SweepSpec) -> Result<Status, Failure> {
    if spec.steps < 2 {
        return Err(Failure::usage(format!("--steps must be at least 2, got {}", spec.steps)));
    }
    if !(spec.from.is_finite() && spec.to.is_finite()) {
        return Err(Failure::usage("sweep range must be finite"));
    }
    if spec.quantities.is_empty() {
        return Err(Failure::usage("no quantities requested"));
    }
    let taylor = spec.quantities.contains(&Quantity::Taylor);
    if taylor != (spec.param == SweepParam::Eps) || (taylor && spec.quantities.len() > 1) {
        return Err(Failure::usage("the taylor quantity is swept over eps alone"));
    }
    let grid: Vec<f64> = (0..spec.steps)
        .map(|i| {
            let s = i as f64 / (spec.steps - 1) as f64;
            if i + 1 == spec.steps {
                spec.to
            } else {
                spec.from + s * (spec.to - spec.from)
            }
        })
        .collect();
    let rows: Vec<Vec<f64>> = grid.par_iter().map(|&v| sweep_row(cfg, spec, v)).collect::<Result<_, _>>()?;
    for (i, r) in rows.iter().enumerate() {
        check_finite(r, &format!("sweep row {i}"))?;
    }
    let mut columns = vec![param_column(spec.param).to_string()];
    columns.extend(spec.quantities.iter().flat_map(|q| q.columns().iter().map(|s| s.to_string())));
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            let header = std::iter::once("schema_version".to_string()).chain(columns.iter().cloned());
            w.write_record(header).map_err(|e| Failure::numeric(e.to_string()))?;
            for r in &rows {
                let fields = std::iter::once(SCHEMA_VERSION.to_string()).chain(r.iter().map(|v| v.to_string()));
                w.write_record(fields).map_err(|e| Failure::numeric(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Failure::numeric(e.to_string()))?).map_err(|e| Failure::numeric(e.to_string()))?
        }
        Format::Json => to_json(&SweepDoc { schema_version: SCHEMA_VERSION, command: "sweep", config: cfg.record(), columns, rows })?,
    };
    emit(&text, cfg.out.as_deref())?;
    Ok(Status::Pass)
}

#[derive(Serialize)]
struct Fit {
    name: &'static str,
    value: f64,
    target: f64,
    metric: Metric,
    error: f64,
    tol: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ExpandDoc {
    schema_version: u32,
    command: &'static str,
    config: ConfigRecord,
    fits: Vec<Fit>,
    pass: bool,
    report: ComparisonReport,
}

pub fn expand(cfg: &RunConfig, eps: Option<Vec<f64>>) -> Result<Status, Failure> {
    only_json(cfg, "expand")?;
    let eps = eps.unwrap_or_else(default_eps_grid);
    let r = taylor_vs_exact(&cfg.params, cfg.t, &eps)?;
    let tol = |n: &str| cfg.tolerances.get(n);
    let fit = |name, value: f64, target: f64, metric, tol: f64| {
        let error = match metric {
            Metric::Rel => ((value - target) / target).abs(),
            _ => (value - target).abs(),
        };
        Fit { name, value, target, metric, error, tol, pass: error <= tol }
    };
    let fits = vec![
        fit("exact_c1", r.exact_c1, r.target_c1, Metric::Abs, tol("expand_c1")),
        fit("naive_c1", r.naive_c1, r.target_c1, Metric::Abs, tol("expand_c1")),
        fit("naive_c2", r.naive_c2, r.target_naive_c2, Metric::Abs, tol("expand_naive_c2")),
        fit("exact_c2", r.exact_c2, r.target_exact_c2, Metric::Rel, tol("expand_c2")),
    ];
    let pass = fits.iter().all(|f| f.pass);
    let doc = ExpandDoc { schema_version: SCHEMA_VERSION, command: "expand", config: cfg.record(), fits, pass, report: r };
    emit(&to_json(&doc)?, cfg.out.as_deref())?;
    Ok(if pass { Status::Pass } else { Status::Fail })
}

#[derive(Serialize)]
struct ZDoc {
    schema_version: u32,
    command: &'static str,
    config: ConfigRecord,
    value: f64,
    closed_form: f64,
    pfaffian: f64,
    determinant: f64,
    classical_moment: f64,
    mean_moment: f64,
    rel_err: f64,
    tol: f64,
    pass: bool,
}

pub fn z(cfg: &RunConfig) -> Result<Status, Failure> {
    only_json(cfg, "z")?;
    let z = gaussian::partition_function(&cfg.params, cfg.t)?;
    let rel_err = ((z.value - z.closed_form) / z.closed_form).abs();
    let tol = cfg.tolerances.get("z");
    let doc = ZDoc {
        schema_version: SCHEMA_VERSION,
        command: "z",
        config: cfg.record(),
        value: z.value,
        closed_form: z.closed_form,
        pfaffian: z.pfaffian,
        determinant: z.determinant,
        classical_moment: z.classical_moment,
        mean_moment: gaussian::mean_moment(&cfg.params, cfg.t)?,
        rel_err,
        tol,
        pass: rel_err <= tol,
    };
    let pass = doc.pass;
    emit(&to_json(&doc)?, cfg.out.as_deref())?;
    Ok(if pass { Status::Pass } else { Status::Fail })
}
