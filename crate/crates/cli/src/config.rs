use std::path::PathBuf;

use clap::{Args, ValueEnum};
use orbit_bosonizer::verify::Tolerances;
use orbit_bosonizer::OrbitParams;
use serde::Serialize;

use crate::exit::Failure;

pub const DEFAULT_SEED: u64 = 20_240_501;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Central charge.
    #[arg(long, global = true, default_value_t = 12.0)]
    pub c: f64,
    /// Constant coadjoint representative; hyperbolic for b0 < 0.
    #[arg(long, global = true, conflicts_with = "alpha", allow_negative_numbers = true)]
    pub b0: Option<f64>,
    /// Hyperbolic winding, b0 = -c α²/24. Default 1 when neither is given.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Euclidean time.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, global = true, default_value_t = 1024)]
    pub grid_n: usize,
    /// Fourier modes per Monte Carlo draw.
    #[arg(long, global = true, default_value_t = 256)]
    pub modes_n: usize,
    #[arg(long, global = true, default_value_t = 100_000)]
    pub mc_samples: usize,
    #[arg(long, global = true, env = "ORBIT_BOSONIZER_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Tolerance override, repeatable: --tol lemma1=1e-6.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub format: Option<Format>,
}

/// Validated configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: OrbitParams,
    /// Set when the orbit was given by its winding.
    pub alpha: Option<f64>,
    pub t: f64,
    pub grid_n: usize,
    pub modes_n: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// The configuration as echoed in reports.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigRecord {
    pub c: f64,
    pub b0: f64,
    pub alpha: f64,
    pub kind: orbit_bosonizer::OrbitKind,
    pub t: f64,
    pub grid_n: usize,
    pub modes_n: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_args(a: &ConfigArgs) -> Result<Self, Failure> {
        let alpha = match (a.b0, a.alpha) {
            (None, None) => Some(1.0),
            (_, alpha) => alpha,
        };
        let params = match (a.b0, alpha) {
            (Some(b0), _) => OrbitParams::new(a.c, b0),
            (None, Some(alpha)) => OrbitParams::from_alpha(a.c, alpha),
            (None, None) => unreachable!("alpha defaulted above"),
        }
        .map_err(Failure::from)?;
        if !(a.t > 0.0 && a.t.is_finite()) {
            return Err(Failure::usage(format!("--t must be positive, got {}", a.t)));
        }
        if !(a.grid_n >= 64 && a.grid_n.is_power_of_two()) {
            return Err(Failure::usage(format!("--grid-n must be a power of two ≥ 64, got {}", a.grid_n)));
        }
        if a.modes_n == 0 {
            return Err(Failure::usage("--modes-n must be positive"));
        }
        let mut tolerances = Tolerances::default();
        for spec in &a.tol {
            let (name, value) = spec.split_once('=').ok_or_else(|| Failure::usage(format!("--tol expects NAME=VALUE, got {spec:?}")))?;
            let value: f64 = value.trim().parse().map_err(|_| Failure::usage(format!("--tol {name}: {value:?} is not a number")))?;
            tolerances.set(name.trim(), value).map_err(Failure::from)?;
        }
        Ok(RunConfig {
            params,
            alpha,
            t: a.t,
            grid_n: a.grid_n,
            modes_n: a.modes_n,
            mc_samples: a.mc_samples,
            seed: a.seed,
            tolerances,
            out: a.out.clone(),
            format: a.format,
        })
    }

    /// Orbit with central charge `c`, keeping whichever of `b0`/`α` was given.
    pub fn params_with_c(&self, c: f64) -> Result<OrbitParams, Failure> {
        match self.alpha {
            Some(alpha) => OrbitParams::from_alpha(c, alpha),
            None => OrbitParams::new(c, self.params.b0),
        }
        .map_err(Failure::from)
    }

    pub fn record(&self) -> ConfigRecord {
        ConfigRecord {
            c: self.params.c,
            b0: self.params.b0,
            alpha: self.params.alpha(),
            kind: self.params.kind,
            t: self.t,
            grid_n: self.grid_n,
            modes_n: self.modes_n,
            mc_samples: self.mc_samples,
            seed: self.seed,
        }
    }
}
