//! Named, seeded experiments with auditable pass/fail reports.
//!
//! A run is a pure function of its resolved [`ExperimentConfig`]: every
//! default is written back into the config echo, so re-running from a
//! report's `config` reproduces every estimate bit for bit, whatever the
//! worker count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::control::{
    estimate_control_value, girsanov_identity_check, h_transform_euclidean_linear,
    h_transform_zonal, log_partition_gaussian_linear, log_partition_spectral, verify_variational,
    ExpMixture, PathFunctional, PolicyCase, ValueKind, VariationalGap, ZonalValue,
    MAX_ABORTED_FRACTION,
};
use crate::entropy::{
    alpha_trajectory_batch, bridge_law_check_sphere, euclidean_oracle, follmer_euclidean_batch,
    follmer_sphere_batch, logsob_check, EntropyReport, PathFunctional as TraceFunctional,
    ZonalLogDensity, ZonalTarget, ARITHMETIC_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::geometry::{SphereFrame, SpherePoint};
use crate::inequalities::{
    bl_lhs, bl_rhs, bl_rhs_l1, drift_coordinate_decomposition, frame_lemma_check,
    uniform_marginal_check, BLInstance, BL_ROUNDING, DECOMPOSITION_TOLERANCE,
};
use crate::simulate::{
    run_batch_with, simulate_horizontal, ControlVariate, ControlledSystem, EuclideanModel,
    EuclideanSystem, JacobiSystem, SphereSystem,
};
use crate::spectral::{
    gauss_hermite_probabilists, laplacian_eigen_check, nu_quadrature, semigroup_apply,
    SpectralSemigroup, ZonalFunction,
};
use crate::stats::{combined_std_error, MeanEstimate};
use crate::stochastics::{
    sample_brownian, BrownianBatch, ConstantPolicy, FnPolicy, PiecewisePolicy, PolicyInfo,
    TimeGrid, ZeroPolicy,
};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TOLERANCE_MULTIPLIER: f64 = 3.0;

// ---------------------------------------------------------------------------
// Configuration

/// One experiment run. Missing fields take the experiment's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance_multiplier: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// A config naming `experiment` with every other field defaulted.
    pub fn named(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            n: None,
            horizon: None,
            steps: None,
            paths: None,
            seed: None,
            params: BTreeMap::new(),
            tolerance_multiplier: None,
            workers: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Fills defaults and validates every field against the experiment's
    /// parameter table.
    pub fn resolve(&self) -> Result<Self> {
        let entry = entry(&self.experiment)?;
        let d = &entry.defaults;
        let mut out = self.clone();
        out.n = field("n", self.n, d.n)?;
        out.horizon = field("horizon", self.horizon, d.horizon)?;
        out.steps = field("steps", self.steps, d.steps)?;
        out.paths = field("paths", self.paths, d.paths)?;
        out.seed = Some(self.seed.unwrap_or(DEFAULT_SEED));
        out.tolerance_multiplier = Some(
            self.tolerance_multiplier
                .unwrap_or(DEFAULT_TOLERANCE_MULTIPLIER),
        );
        out.workers = Some(self.workers.unwrap_or(0));

        let k = out.tolerance_multiplier.unwrap_or_default();
        if !(k.is_finite() && k > 0.0) {
            return invalid(format!("tolerance_multiplier must be positive, got {k}"));
        }
        if let Some(n) = out.n {
            if n < d.n_range.0 || n > d.n_range.1 {
                return invalid(format!(
                    "n = {n} outside [{}, {}]",
                    d.n_range.0, d.n_range.1
                ));
            }
        }
        if let Some(t) = out.horizon {
            if !(t.is_finite() && t > 0.0) {
                return invalid(format!("horizon must be positive, got {t}"));
            }
            if d.unit_horizon && t != 1.0 {
                return invalid(format!(
                    "this experiment needs horizon 1 (the reference is the law of B_1), got {t}"
                ));
            }
        }
        if let Some(s) = out.steps {
            if s == 0 || s % d.steps_multiple != 0 {
                return invalid(format!(
                    "steps must be a positive multiple of {}, got {s}",
                    d.steps_multiple
                ));
            }
        }
        if let Some(m) = out.paths {
            if m < 2 {
                return invalid(format!("paths must be at least 2, got {m}"));
            }
        }
        for key in out.params.keys() {
            if !entry.params.iter().any(|p| p.key == key) {
                return invalid(format!("unknown parameter '{key}' for {}", entry.info.name));
            }
        }
        for p in entry.params {
            let v = out
                .params
                .entry(p.key.to_string())
                .or_insert_with(|| p.default());
            p.kind.check(p.key, v)?;
        }
        Ok(out)
    }
}

fn field<T: Copy + std::fmt::Debug>(
    name: &str,
    given: Option<T>,
    default: Option<T>,
) -> Result<Option<T>> {
    match (given, default) {
        (Some(v), None) => invalid(format!(
            "'{name}' is not used by this experiment (got {v:?})"
        )),
        (g, d) => Ok(g.or(d)),
    }
}

fn invalid<T>(msg: String) -> Result<T> {
    Err(Error::InvalidConfig(msg))
}

#[derive(Debug, Clone, Copy)]
enum ParamKind {
    Real,
    /// A real in [−1, 1].
    Coordinate,
    Count,
    Reals,
    /// Positive reals.
    Weights,
    /// Sphere dimensions ≥ the given minimum.
    Dims(usize),
}

impl ParamKind {
    fn check(self, key: &str, v: &Value) -> Result<()> {
        let real = |x: &Value| x.as_f64().filter(|x| x.is_finite());
        let ok = match self {
            Self::Real => real(v).is_some(),
            Self::Coordinate => real(v).is_some_and(|x| x.abs() <= 1.0),
            Self::Count => v.as_u64().is_some_and(|c| c > 0),
            Self::Reals | Self::Weights | Self::Dims(_) => v.as_array().is_some_and(|a| {
                !a.is_empty()
                    && a.iter().all(|x| match self {
                        Self::Reals => real(x).is_some(),
                        Self::Weights => real(x).is_some_and(|w| w > 0.0),
                        Self::Dims(min) => x.as_u64().is_some_and(|n| n as usize >= min && n <= 64),
                        _ => false,
                    })
            }),
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("parameter '{key}' = {v} is not a valid {self:?}"))
        }
    }
}

struct Param {
    key: &'static str,
    kind: ParamKind,
    default: &'static [f64],
}

impl Param {
    const fn new(key: &'static str, kind: ParamKind, default: &'static [f64]) -> Self {
        Self { key, kind, default }
    }

    fn default(&self) -> Value {
        let num = |x: f64| match self.kind {
            ParamKind::Count | ParamKind::Dims(_) => Value::from(x as u64),
            _ => Value::from(x),
        };
        match self.kind {
            ParamKind::Reals | ParamKind::Weights | ParamKind::Dims(_) => {
                Value::Array(self.default.iter().map(|x| num(*x)).collect())
            }
            _ => num(self.default[0]),
        }
    }
}

struct Defaults {
    n: Option<usize>,
    n_range: (usize, usize),
    horizon: Option<f64>,
    unit_horizon: bool,
    steps: Option<usize>,
    steps_multiple: usize,
    paths: Option<usize>,
}

const NONE: Defaults = Defaults {
    n: None,
    n_range: (1, 64),
    horizon: None,
    unit_horizon: false,
    steps: None,
    steps_multiple: 1,
    paths: None,
};

/// Catalog entry of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub module: &'static str,
    pub section: &'static str,
    pub description: &'static str,
}

type Runner = fn(&Ctx) -> Result<Vec<Check>>;

struct Entry {
    info: ExperimentInfo,
    defaults: Defaults,
    params: &'static [Param],
    run: Runner,
}

use ParamKind::*;

static CATALOG: &[Entry] = &[
    Entry {
        info: ExperimentInfo {
            name: "alpha-trajectory",
            module: "entropy",
            section: "Dimensional log-Sobolev inequality: integrated Fisher information along the Föllmer path",
            description: "∫α dt against 2H and the α-bound on S^2 with a zonal tilt",
        },
        defaults: Defaults {
            n: Some(2),
            n_range: (2, 64),
            horizon: Some(4.0),
            steps: Some(2000),
            steps_multiple: 2,
            paths: Some(20_000),
            ..NONE
        },
        params: &[Param::new("a", Real, &[1.0]), Param::new("start", Coordinate, &[1.0])],
        run: alpha_trajectory_experiment,
    },
    Entry {
        info: ExperimentInfo {
            name: "borell-euclidean",
            module: "control",
            section: "Borell formula in R^n",
            description: "log E e^{f(B_T)} against control values of constant, zero and optimal drifts for linear f",
        },
        defaults: Defaults {
            n: Some(1),
            horizon: Some(1.0),
            steps: Some(1000),
            paths: Some(100_000),
            ..NONE
        },
        params: &[Param::new("a", Real, &[1.0])],
        run: borell_euclidean,
    },
    Entry {
        info: ExperimentInfo {
            name: "borell-sphere",
            module: "control",
            section: "Borell formula on a Riemannian manifold (S^n)",
            description: "spectral log Q_T(e^f) against the h-transform control value, bias certified by halving dt",
        },
        defaults: Defaults {
            n: Some(2),
            n_range: (1, 64),
            horizon: Some(1.0),
            steps: Some(1000),
            paths: Some(100_000),
            ..NONE
        },
        params: &[Param::new("a", Reals, &[0.5, 1.0]), Param::new("start", Coordinate, &[0.0])],
        run: borell_sphere,
    },
    Entry {
        info: ExperimentInfo {
            name: "brascamp-lieb",
            module: "inequalities",
            section: "Brascamp–Lieb inequality on S^n and the frame lemma",
            description: "random exponential tilts, constants, an L^1 counterexample, θ^i sums and drift decompositions",
        },
        defaults: Defaults {
            horizon: Some(1.0),
            steps: Some(200),
            paths: Some(100_000),
            ..NONE
        },
        params: &[
            Param::new("dims", Dims(1), &[2.0, 3.0, 5.0]),
            Param::new("instances", Count, &[100.0]),
            Param::new("frame_dims", Dims(1), &[2.0, 3.0, 5.0, 10.0]),
            Param::new("pairs", Count, &[100_000.0]),
            Param::new("decomposition_paths", Count, &[1000.0]),
        ],
        run: brascamp_lieb,
    },
    Entry {
        info: ExperimentInfo {
            name: "bridge-law",
            module: "entropy",
            section: "Law of the Föllmer path on S^n",
            description: "path functionals under the Föllmer drift against f(X_T)-reweighted driftless paths",
        },
        defaults: Defaults {
            n: Some(2),
            n_range: (1, 64),
            horizon: Some(2.0),
            steps: Some(1000),
            steps_multiple: 2,
            paths: Some(100_000),
            ..NONE
        },
        params: &[Param::new("a", Real, &[1.0]), Param::new("start", Coordinate, &[0.0])],
        run: bridge_law,
    },
    Entry {
        info: ExperimentInfo {
            name: "convergence",
            module: "simulate",
            section: "Horizontal Brownian motion on S^n: weak error of the stepper",
            description: "E f(X_T) against the spectral value at dt, 2dt, 4dt with common random numbers",
        },
        defaults: Defaults {
            n: Some(2),
            horizon: Some(1.0),
            steps: Some(1000),
            steps_multiple: 4,
            paths: Some(50_000),
            ..NONE
        },
        params: &[Param::new("a", Real, &[1.0]), Param::new("start", Coordinate, &[1.0])],
        run: convergence,
    },
    Entry {
        info: ExperimentInfo {
            name: "follmer-euclidean",
            module: "entropy",
            section: "Entropy dual and the Föllmer drift in R^n",
            description: "drift energy against H(μ|γ_n) and a terminal KS test for a shift and a mixture",
        },
        defaults: Defaults {
            n: Some(1),
            n_range: (1, 3),
            horizon: Some(1.0),
            unit_horizon: true,
            steps: Some(1000),
            steps_multiple: 2,
            paths: Some(100_000),
        },
        params: &[
            Param::new("m", Real, &[1.0]),
            Param::new("centers", Reals, &[-1.0, 1.0]),
            Param::new("weights", Weights, &[0.5, 0.5]),
        ],
        run: follmer_euclidean,
    },
    Entry {
        info: ExperimentInfo {
            name: "follmer-sphere",
            module: "entropy",
            section: "Entropy dual and the Föllmer drift on S^n",
            description: "drift energy against H(μ|δ_xP_T), terminal KS test and moments for a zonal tilt",
        },
        defaults: Defaults {
            n: Some(2),
            horizon: Some(2.0),
            steps: Some(2000),
            steps_multiple: 2,
            paths: Some(100_000),
            ..NONE
        },
        params: &[Param::new("a", Real, &[1.0]), Param::new("start", Coordinate, &[0.0])],
        run: follmer_sphere,
    },
    Entry {
        info: ExperimentInfo {
            name: "girsanov",
            module: "control",
            section: "Girsanov change of measure",
            description: "E[D_T H(B+U)] against E[H(B)] for constant and bounded feedback drifts",
        },
        defaults: Defaults {
            n: Some(1),
            horizon: Some(1.0),
            steps: Some(500),
            steps_multiple: 2,
            paths: Some(100_000),
            ..NONE
        },
        params: &[Param::new("constant", Real, &[0.5]), Param::new("amplitude", Real, &[0.8])],
        run: girsanov,
    },
    Entry {
        info: ExperimentInfo {
            name: "jacobi-stationary",
            module: "simulate",
            section: "Coordinate process of spherical Brownian motion and the Jacobi diffusion",
            description: "moments of x_i(T) from the sphere against the Jacobi SDE, and the stationary second moment",
        },
        defaults: Defaults {
            horizon: Some(1.0),
            steps: Some(1000),
            paths: Some(100_000),
            ..NONE
        },
        params: &[
            Param::new("dims", Dims(1), &[2.0, 3.0, 5.0]),
            Param::new("start", Coordinate, &[0.5]),
            Param::new("long_horizon", Real, &[20.0]),
            Param::new("long_steps", Count, &[2000.0]),
            Param::new("long_paths", Count, &[20_000.0]),
        ],
        run: jacobi_stationary,
    },
    Entry {
        info: ExperimentInfo {
            name: "logsob",
            module: "entropy",
            section: "Dimensional log-Sobolev inequality on S^n",
            description: "H ≤ (n/2)log(1 + I/(nκ)) ≤ I/κ by quadrature for zonal tilts",
        },
        defaults: NONE,
        params: &[
            Param::new("dims", Dims(2), &[2.0, 3.0, 5.0]),
            Param::new("tilts", Reals, &[0.25, 0.5, 1.0, 2.0]),
        ],
        run: logsob,
    },
    Entry {
        info: ExperimentInfo {
            name: "marginal-nu",
            module: "spectral",
            section: "Coordinate marginal ν_n of the uniform measure and the zonal heat semigroup",
            description: "KS test of uniform coordinates against ν_n and spectral oracle integrity",
        },
        defaults: Defaults {
            horizon: Some(1.0),
            paths: Some(100_000),
            ..NONE
        },
        params: &[Param::new("dims", Dims(1), &[2.0, 3.0, 5.0])],
        run: marginal_nu,
    },
];

fn entry(name: &str) -> Result<&'static Entry> {
    CATALOG
        .iter()
        .find(|e| e.info.name == name)
        .ok_or_else(|| Error::UnknownExperiment(name.to_string()))
}

/// Every experiment, sorted by name.
pub fn list_experiments() -> Vec<ExperimentInfo> {
    let mut v: Vec<ExperimentInfo> = CATALOG.iter().map(|e| e.info).collect();
    v.sort_by_key(|i| i.name);
    v
}

// ---------------------------------------------------------------------------
// Reports

/// How `value` is compared with `oracle`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// |value − oracle| ≤ tol.
    Within,
    /// value ≤ oracle + tol.
    AtMost,
    /// value > oracle + tol.
    Above,
    /// |value − oracle| > tol.
    Apart,
}

impl Relation {
    pub fn holds(self, value: f64, oracle: f64, tol: f64) -> bool {
        let ok = match self {
            Self::Within => (value - oracle).abs() <= tol,
            Self::AtMost => value <= oracle + tol,
            Self::Above => value > oracle + tol,
            Self::Apart => (value - oracle).abs() > tol,
        };
        ok && value.is_finite() && oracle.is_finite() && tol.is_finite()
    }
}

fn nan_if_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// One check row. `pass` is a function of the other fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(deserialize_with = "nan_if_null")]
    pub value: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub stderr: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub oracle: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub tol: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        value: f64,
        stderr: f64,
        oracle: f64,
        tol: f64,
        relation: Relation,
    ) -> Self {
        Self {
            name: name.into(),
            value,
            stderr,
            oracle,
            tol,
            relation,
            pass: relation.holds(value, oracle, tol),
        }
    }

    /// The pass flag recomputed from the stored values.
    pub fn recheck(&self) -> bool {
        self.relation.holds(self.value, self.oracle, self.tol)
    }
}

#[derive(Serialize)]
struct Body<'a> {
    config: &'a ExperimentConfig,
    version: &'a str,
    checks: &'a [Check],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub version: String,
    pub checks: Vec<Check>,
    pub wallclock_seconds: f64,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// Stored pass flags agree with the values they were computed from.
    pub fn consistent(&self) -> bool {
        self.checks.iter().all(|c| c.pass == c.recheck())
    }

    /// The JSON report without the wall-clock time.
    pub fn body_json(&self) -> Result<String> {
        let body = Body {
            config: &self.config,
            version: &self.version,
            checks: &self.checks,
        };
        Ok(serde_json::to_string_pretty(&body)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The check rows as CSV.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.checks {
            w.serialize(c)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
    }

    /// Writes `<experiment>.json` and `<experiment>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.json", self.config.experiment));
        let csv = dir.join(format!("{}.csv", self.config.experiment));
        std::fs::write(&json, self.to_json()? + "\n")?;
        std::fs::write(&csv, self.to_csv()?)?;
        Ok((json, csv))
    }
}

/// Resolves `config`, runs the experiment and collects its checks.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let config = config.resolve()?;
    let entry = entry(&config.experiment)?;
    let start = Instant::now();
    let ctx = Ctx { cfg: &config };
    let checks = (entry.run)(&ctx)?;
    Ok(ExperimentReport {
        config,
        version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
        checks,
        wallclock_seconds: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Shared helpers

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
}

impl Ctx<'_> {
    fn n(&self) -> usize {
        self.cfg.n.unwrap_or(1)
    }
    fn horizon(&self) -> f64 {
        self.cfg.horizon.unwrap_or(1.0)
    }
    fn steps(&self) -> usize {
        self.cfg.steps.unwrap_or(1)
    }
    fn paths(&self) -> usize {
        self.cfg.paths.unwrap_or(2)
    }
    fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or(DEFAULT_SEED)
    }
    fn k(&self) -> f64 {
        self.cfg
            .tolerance_multiplier
            .unwrap_or(DEFAULT_TOLERANCE_MULTIPLIER)
    }
    fn workers(&self) -> usize {
        self.cfg.workers.unwrap_or(0)
    }
    fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon(), self.steps())
    }
    fn real(&self, key: &str) -> f64 {
        self.cfg.params[key].as_f64().unwrap_or(f64::NAN)
    }
    fn count(&self, key: &str) -> usize {
        self.cfg.params[key].as_u64().unwrap_or(0) as usize
    }
    fn reals(&self, key: &str) -> Vec<f64> {
        let arr = self.cfg.params[key].as_array();
        arr.map(|a| a.iter().filter_map(Value::as_f64).collect())
            .unwrap_or_default()
    }
    fn dims(&self, key: &str) -> Vec<usize> {
        self.reals(key).into_iter().map(|x| x as usize).collect()
    }
    /// A seed for an independent sub-stream, derived from the run seed.
    fn seed_for(&self, tag: u64) -> u64 {
        let mut z = self.seed() ^ tag.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

/// A point with x_0 = start and the remaining mass on x_1.
fn start_frame(n: usize, start: f64) -> Result<SphereFrame> {
    let mut c = vec![0.0; n + 1];
    c[0] = start;
    c[1] = (1.0 - start * start).max(0.0).sqrt();
    Ok(SphereFrame::standard_at(SpherePoint::new(c)?))
}

/// Terminal x_0 of driftless paths, dropping aborted ones.
fn terminal_coordinates<Sys: ControlledSystem>(
    sys: &Sys,
    batch: &BrownianBatch,
    workers: usize,
    coord: impl Fn(&Sys::State) -> f64 + Sync + Send,
) -> Result<Vec<f64>> {
    let out = run_batch_with(
        sys,
        &ZeroPolicy,
        ControlVariate::None,
        batch,
        workers,
        |_| (),
        |o, _| (!o.aborted).then(|| coord(&o.terminal)),
    );
    let aborted = out.iter().filter(|v| v.is_none()).count();
    let limit = (MAX_ABORTED_FRACTION * batch.paths() as f64) as usize;
    if aborted > limit {
        return Err(Error::TooManyAborted {
            aborted,
            paths: batch.paths(),
            limit,
        });
    }
    Ok(out.into_iter().flatten().collect())
}

fn powers(xs: &[f64], k: i32) -> MeanEstimate {
    let v: Vec<f64> = xs.iter().map(|x| x.powi(k)).collect();
    MeanEstimate::from_samples(&v)
}

/// Band for an estimate at step dt whose coarse (2dt) counterpart is `coarse`:
/// k s.e. plus the observed dt-to-2dt change.
fn dt_band(k: f64, fine: &MeanEstimate, coarse: &MeanEstimate) -> f64 {
    k * fine.std_error + (fine.mean - coarse.mean).abs()
}

fn entropy_rows(
    label: &str,
    k: f64,
    fine: &EntropyReport,
    coarse: &EntropyReport,
    oracle: f64,
    floor: f64,
) -> Vec<Check> {
    let mut rows = vec![
        Check::new(
            format!("{label}: drift energy vs entropy"),
            fine.drift_energy.mean,
            fine.drift_energy.std_error,
            oracle,
            dt_band(k, &fine.drift_energy, &coarse.drift_energy) + floor,
            Relation::Within,
        ),
        Check::new(
            format!("{label}: E log f(Y_T) vs entropy"),
            fine.sample_entropy.mean,
            fine.sample_entropy.std_error,
            oracle,
            dt_band(k, &fine.sample_entropy, &coarse.sample_entropy) + floor,
            Relation::Within,
        ),
    ];
    if let Some(d) = fine.ks_statistic {
        rows.push(Check::new(
            format!("{label}: terminal KS distance (1% level)"),
            d,
            0.0,
            fine.ks_critical,
            0.0,
            Relation::AtMost,
        ));
    }
    rows
}

// ---------------------------------------------------------------------------
// Experiments

fn borell_euclidean(c: &Ctx) -> Result<Vec<Check>> {
    let (n, t, k) = (c.n(), c.horizon(), c.k());
    let a = vec![c.real("a"); n];
    let lhs = log_partition_gaussian_linear(&a, &vec![0.0; n], t);
    // log E e^{⟨a, √T Z⟩} as a product of one-dimensional Gauss–Hermite rules
    let gh = gauss_hermite_probabilists(64);
    let quad: f64 = a
        .iter()
        .map(|ai| {
            gh.nodes
                .iter()
                .zip(&gh.weights)
                .map(|(z, w)| w * (ai * t.sqrt() * z).exp())
                .sum::<f64>()
                .ln()
        })
        .sum();
    let sys = EuclideanSystem {
        model: EuclideanModel::brownian(n),
        x0: vec![0.0; n],
    };
    let batch = sample_brownian(c.grid()?, n, c.paths(), c.seed())?;
    let payoff = |x: &Vec<f64>| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>();
    let constant = ConstantPolicy::new(a.clone());
    let optimal = h_transform_euclidean_linear(&a)?;
    let cases = [
        PolicyCase::plain(&constant),
        PolicyCase::plain(&ZeroPolicy),
        PolicyCase::optimal(&optimal),
    ];
    let gaps = verify_variational(&sys, &payoff, lhs, &cases, &batch, c.workers())?;
    let value = &gaps[0].rhs.plain;
    Ok(vec![
        Check::new(
            "log-partition closed form vs quadrature",
            lhs.value,
            0.0,
            quad,
            1e-12 * quad.abs().max(1.0),
            Relation::Within,
        ),
        Check::new(
            "constant drift a: control value",
            value.mean,
            value.std_error,
            quad,
            k * value.std_error + 1e-12,
            Relation::Within,
        ),
        Check::new(
            "zero drift: gap",
            gaps[1].gap,
            gaps[1].std_error,
            0.0,
            k * gaps[1].std_error,
            Relation::Above,
        ),
        Check::new(
            "optimal drift: gap",
            gaps[2].gap,
            gaps[2].std_error,
            0.0,
            k * gaps[2].std_error + 1e-9,
            Relation::Within,
        ),
    ])
}

fn borell_sphere(c: &Ctx) -> Result<Vec<Check>> {
    let (n, t, k) = (c.n(), c.horizon(), c.k());
    let start = c.real("start");
    let s = SpectralSemigroup::with_defaults(n)?;
    let sys = SphereSystem {
        frame0: start_frame(n, start)?,
    };
    let half = sample_brownian(TimeGrid::new(t, 2 * c.steps())?, n, c.paths(), c.seed())?;
    let full = half.coarsened(2)?;
    let mut rows = Vec::new();
    for a in c.reals("a") {
        let f = ZonalFunction::linear(a);
        let lhs = log_partition_spectral(&s, &f, t, start)?;
        let payoff = move |fr: &SphereFrame| a * fr.base().coords()[0];
        let gap = |b: &BrownianBatch| -> Result<VariationalGap> {
            let h = h_transform_zonal(&s, &f, 0, b.grid())?;
            let v =
                estimate_control_value(&sys, &payoff, &h, ControlVariate::Policy, b, c.workers())?;
            Ok(VariationalGap::new(lhs, v))
        };
        let (g1, g2) = (gap(&full)?, gap(&half)?);
        let drop = (g1.gap - g2.gap).abs();
        let ratio = g1.gap / g2.gap;
        let ratio_se = ratio.abs() * (g1.std_error / g1.gap).hypot(g2.std_error / g2.gap);
        let (n1, n2) = (full.grid().steps(), half.grid().steps());
        rows.extend([
            Check::new(
                format!("a={a}: gap, N={n1}"),
                g1.gap,
                g1.std_error,
                0.0,
                k * g1.std_error + 2.0 * drop,
                Relation::Within,
            ),
            Check::new(
                format!("a={a}: gap, N={n2}"),
                g2.gap,
                g2.std_error,
                0.0,
                k * g2.std_error + drop,
                Relation::Within,
            ),
            Check::new(
                format!("a={a}: gap, N={n2}, above noise"),
                g2.gap.abs(),
                g2.std_error,
                0.0,
                k * g2.std_error,
                Relation::Above,
            ),
            Check::new(
                format!("a={a}: gap ratio N={n1}/N={n2}"),
                ratio,
                ratio_se,
                2.25,
                0.75,
                Relation::Within,
            ),
        ]);
    }
    Ok(rows)
}

fn girsanov(c: &Ctx) -> Result<Vec<Check>> {
    let (n, k) = (c.n(), c.k());
    let grid = c.grid()?;
    let amp = c.real("amplitude");
    let constant = ConstantPolicy::new(vec![c.real("constant"); n]);
    let bounded = FnPolicy::new(
        PolicyInfo::named("bounded").with("amplitude", amp),
        move |_, x: &Vec<f64>, out: &mut [f64]| {
            for (o, xi) in out.iter_mut().zip(x) {
                *o = amp * xi.sin();
            }
        },
    );
    let terminal = |p: &[f64], d: usize| p[p.len() - d];
    let midpoint = |p: &[f64], d: usize| p[(p.len() / d - 1) / 2 * d];
    let running_max = |p: &[f64], d: usize| {
        p.iter()
            .step_by(d)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let one = |_: &[f64], _: usize| 1.0;
    let functionals: [(&str, &PathFunctional); 4] = [
        ("terminal value", &terminal),
        ("mid-time value", &midpoint),
        ("running max", &running_max),
        ("one", &one),
    ];
    let hs: Vec<&PathFunctional> = functionals.iter().map(|f| f.1).collect();
    let mut rows = Vec::new();
    let policies: [(&str, &dyn crate::stochastics::DriftPolicy<Vec<f64>>); 2] =
        [("constant", &constant), ("bounded", &bounded)];
    for (j, (label, policy)) in policies.into_iter().enumerate() {
        let checks = girsanov_identity_check(
            policy,
            &hs,
            grid,
            n,
            c.paths(),
            c.seed_for(j as u64),
            c.workers(),
        )?;
        for ((name, _), g) in functionals.iter().zip(&checks) {
            if *name == "one" {
                let w = g.weighted;
                rows.push(Check::new(
                    format!("{label}: E[D_T]"),
                    w.mean,
                    w.std_error,
                    1.0,
                    k * w.std_error,
                    Relation::Within,
                ));
            } else {
                rows.push(Check::new(
                    format!("{label}: {name}, weighted vs plain"),
                    g.difference,
                    g.std_error,
                    0.0,
                    k * g.std_error,
                    Relation::Within,
                ));
            }
        }
    }
    Ok(rows)
}

fn jacobi_stationary(c: &Ctx) -> Result<Vec<Check>> {
    let k = c.k();
    let start = c.real("start");
    let grid = c.grid()?;
    let long = TimeGrid::new(c.real("long_horizon"), c.count("long_steps"))?;
    let mut rows = Vec::new();
    for n in c.dims("dims") {
        let sphere = SphereSystem {
            frame0: start_frame(n, start)?,
        };
        let jacobi = JacobiSystem { n, x0: start };
        let tag = 16 * n as u64;
        let on_sphere = |f: &SphereFrame| f.base().coords()[0];
        let xs = terminal_coordinates(
            &sphere,
            &sample_brownian(grid, n, c.paths(), c.seed_for(tag))?,
            c.workers(),
            on_sphere,
        )?;
        let js = terminal_coordinates(
            &jacobi,
            &sample_brownian(grid, 1, c.paths(), c.seed_for(tag + 1))?,
            c.workers(),
            |x: &f64| *x,
        )?;
        for p in 1..=4 {
            let (a, b) = (powers(&xs, p), powers(&js, p));
            let se = combined_std_error(&a, &b);
            rows.push(Check::new(
                format!("n={n}: moment {p}, sphere vs Jacobi"),
                a.mean - b.mean,
                se,
                0.0,
                k * se,
                Relation::Within,
            ));
        }
        let batch = sample_brownian(long, n, c.count("long_paths"), c.seed_for(tag + 2))?;
        let sq = powers(
            &terminal_coordinates(&sphere, &batch, c.workers(), on_sphere)?,
            2,
        );
        rows.push(Check::new(
            format!("n={n}: second moment at T={}", long.horizon()),
            sq.mean,
            sq.std_error,
            1.0 / (n + 1) as f64,
            k * sq.std_error,
            Relation::Within,
        ));
    }
    Ok(rows)
}

fn marginal_nu(c: &Ctx) -> Result<Vec<Check>> {
    let (k, t) = (c.k(), c.horizon());
    let xs: Vec<f64> = (0..=40).map(|j| -1.0 + j as f64 / 20.0).collect();
    let mut rows = Vec::new();
    for n in c.dims("dims") {
        let m = uniform_marginal_check(n, c.paths(), c.seed_for(n as u64))?;
        rows.extend([
            Check::new(
                format!("n={n}: KS distance to ν_n (1% level)"),
                m.ks_statistic,
                0.0,
                m.ks_critical,
                0.0,
                Relation::AtMost,
            ),
            Check::new(
                format!("n={n}: mean"),
                m.mean.mean,
                m.mean.std_error,
                0.0,
                k * m.mean.std_error,
                Relation::Within,
            ),
            Check::new(
                format!("n={n}: second moment"),
                m.second_moment.mean,
                m.second_moment.std_error,
                m.second_moment_oracle,
                k * m.second_moment.std_error,
                Relation::Within,
            ),
        ]);

        let s = SpectralSemigroup::with_defaults(n)?;
        let mut eig: f64 = 0.0;
        for &x in &xs {
            let q = semigroup_apply(&s, t, &ZonalFunction::linear(1.0), x)?.value;
            eig = eig.max((q - (-0.5 * n as f64 * t).exp() * x).abs());
        }
        rows.push(Check::new(
            format!("n={n}: Q_T t vs e^(-nT/2) x"),
            eig,
            0.0,
            0.0,
            1e-10,
            Relation::Within,
        ));

        let g = ZonalFunction::exp_tilt(1.0);
        let e = s.project(&g)?;
        let (t1, t2) = (0.4 * t, 0.6 * t);
        let inner = e.clone();
        let q1 = ZonalFunction::new("Q_s g", move |x| inner.apply(t1, x));
        let e1 = s.project(&q1)?;
        let semi = xs
            .iter()
            .map(|&x| (e1.apply(t2, x) - e.apply(t, x)).abs())
            .fold(0.0, f64::max);
        rows.push(Check::new(
            format!("n={n}: Q_s Q_t g vs Q_(s+t) g"),
            semi,
            0.0,
            0.0,
            1e-9,
            Relation::Within,
        ));

        let mean = nu_quadrature(n, &g)?;
        let long = xs
            .iter()
            .map(|&x| (e.apply(50.0, x) - mean).abs())
            .fold(0.0, f64::max);
        rows.push(Check::new(
            format!("n={n}: Q_50 g vs ∫g dν_n"),
            long,
            0.0,
            0.0,
            1e-10,
            Relation::Within,
        ));

        let lap = laplacian_eigen_check(n, 1)?;
        rows.push(Check::new(
            format!("n={n}: L p_1 + λ_1 p_1"),
            lap,
            0.0,
            0.0,
            1e-10,
            Relation::Within,
        ));
    }
    Ok(rows)
}

fn brascamp_lieb(c: &Ctx) -> Result<Vec<Check>> {
    let k = c.k();
    let m = c.paths();
    let mut rows = Vec::new();
    for n in c.dims("dims") {
        let tilt_seed = c.seed_for(1000 + n as u64);
        let mut worst = f64::NEG_INFINITY;
        for i in 0..c.count("instances") {
            let inst = BLInstance::random_tilts(n, tilt_seed, i as u64)?;
            let lhs = bl_lhs(
                &inst,
                m,
                c.seed_for(((n as u64) << 32) | i as u64),
                c.workers(),
            );
            let rhs = bl_rhs(&inst)? * (1.0 + BL_ROUNDING);
            worst = worst.max((lhs.mean - rhs) / lhs.std_error.max(f64::MIN_POSITIVE));
        }
        rows.push(Check::new(
            format!("n={n}: largest (lhs - rhs)/s.e. over random tilts"),
            worst,
            1.0,
            0.0,
            k,
            Relation::AtMost,
        ));
        let inst = BLInstance::constant(n, 1.7)?;
        let lhs = bl_lhs(&inst, m, c.seed_for(2000 + n as u64), c.workers());
        let rhs = bl_rhs(&inst)?;
        rows.push(Check::new(
            format!("n={n}: constants, lhs/rhs"),
            lhs.mean / rhs,
            lhs.std_error / rhs,
            1.0,
            k * lhs.std_error / rhs + BL_ROUNDING,
            Relation::Within,
        ));
    }

    let ridge = BLInstance::ridge_bump()?;
    let lhs = bl_lhs(&ridge, m, c.seed_for(3000), c.workers());
    rows.push(Check::new(
        "ridge bump: lhs exceeds the L1 bound",
        lhs.mean,
        lhs.std_error,
        bl_rhs_l1(&ridge)?,
        k * lhs.std_error,
        Relation::Above,
    ));
    rows.push(Check::new(
        "ridge bump: lhs within the L2 bound",
        lhs.mean,
        lhs.std_error,
        bl_rhs(&ridge)?,
        k * lhs.std_error,
        Relation::AtMost,
    ));

    for n in c.dims("frame_dims") {
        let r = frame_lemma_check(
            n,
            c.count("pairs"),
            c.seed_for(4000 + n as u64),
            c.workers(),
        )?;
        rows.push(Check::new(
            format!("n={n}: frame lemma violations"),
            r.violations as f64,
            0.0,
            0.0,
            0.0,
            Relation::Within,
        ));
        rows.push(Check::new(
            format!("n={n}: frame lemma max ratio"),
            r.max_ratio,
            0.0,
            2.0,
            1e-10,
            Relation::AtMost,
        ));
    }

    let grid = c.grid()?;
    let frame = start_frame(2, 0.3)?;
    let batch = sample_brownian(grid, 2, c.count("decomposition_paths"), c.seed_for(5000))?;
    let piecewise = PiecewisePolicy::random(grid, 2, 8, 2.0, c.seed_for(5001))?;
    let feedback = h_transform_zonal(
        &SpectralSemigroup::with_defaults(2)?,
        &ZonalFunction::linear(2.0),
        0,
        grid,
    )?;
    let policies: [(&str, &dyn crate::stochastics::DriftPolicy<SphereFrame>); 2] = [
        ("piecewise drift", &piecewise),
        ("feedback drift", &feedback),
    ];
    for (label, policy) in policies {
        let mut worst = f64::NEG_INFINITY;
        for (path, drift) in simulate_horizontal(&frame, policy, &grid, &batch)? {
            let d = drift_coordinate_decomposition(&path, &drift)?;
            worst = worst.max(d.energies.iter().sum::<f64>() - 2.0 * d.energy);
        }
        rows.push(Check::new(
            format!("{label}: max of sum |U^i|^2 - 2|U|^2 over paths"),
            worst,
            0.0,
            0.0,
            DECOMPOSITION_TOLERANCE,
            Relation::AtMost,
        ));
    }
    Ok(rows)
}

fn follmer_euclidean(c: &Ctx) -> Result<Vec<Check>> {
    let (n, k) = (c.n(), c.k());
    let axis = |x: f64| {
        let mut v = vec![0.0; n];
        v[0] = x;
        v
    };
    let m = c.real("m");
    let shift = ExpMixture::gaussian_mixture_density(&[1.0], vec![axis(m)])?;
    let mixture = ExpMixture::gaussian_mixture_density(
        &c.reals("weights"),
        c.reals("centers").into_iter().map(axis).collect(),
    )?;
    let fine = sample_brownian(c.grid()?, n, c.paths(), c.seed())?;
    let coarse = fine.coarsened(2)?;
    let mut rows = Vec::new();
    let oracle = euclidean_oracle(&shift)?;
    rows.push(Check::new(
        "shift: quadrature entropy vs m^2/2",
        oracle.entropy,
        0.0,
        0.5 * m * m,
        1e-10,
        Relation::Within,
    ));
    for (label, target, h) in [
        ("shift", &shift, 0.5 * m * m),
        ("mixture", &mixture, euclidean_oracle(&mixture)?.entropy),
    ] {
        let a = follmer_euclidean_batch(target, &fine, c.workers())?.report;
        let b = follmer_euclidean_batch(target, &coarse, c.workers())?.report;
        rows.extend(entropy_rows(label, k, &a, &b, h, 1e-12));
    }
    Ok(rows)
}

fn zonal_target(c: &Ctx) -> Result<ZonalTarget> {
    let s = SpectralSemigroup::with_defaults(c.n())?;
    ZonalTarget::finite_horizon(
        &s,
        &ZonalFunction::exp_tilt(c.real("a")),
        0,
        c.real("start"),
        c.horizon(),
    )
}

fn follmer_sphere(c: &Ctx) -> Result<Vec<Check>> {
    let k = c.k();
    let target = zonal_target(c)?;
    let frame = target.start_frame()?;
    let fine = sample_brownian(c.grid()?, c.n(), c.paths(), c.seed())?;
    let a = follmer_sphere_batch(&target, &frame, &fine, c.workers())?.report;
    let b = follmer_sphere_batch(&target, &frame, &fine.coarsened(2)?, c.workers())?.report;
    let mut rows = entropy_rows(target.label(), k, &a, &b, a.entropy, 1e-12);
    for (ma, mb) in a.moments.iter().zip(&b.moments) {
        rows.push(Check::new(
            format!("{}: moment {} of x_0(Y_T)", target.label(), ma.order),
            ma.sample.mean,
            ma.sample.std_error,
            ma.oracle,
            dt_band(k, &ma.sample, &mb.sample),
            Relation::Within,
        ));
    }
    Ok(rows)
}

fn bridge_law(c: &Ctx) -> Result<Vec<Check>> {
    let target = zonal_target(c)?;
    let frame = target.start_frame()?;
    let mut functionals = TraceFunctional::standard_set();
    functionals.push(TraceFunctional::constant());
    let rows = bridge_law_check_sphere(
        &target,
        &frame,
        &functionals,
        c.grid()?,
        c.paths(),
        (c.seed_for(1), c.seed_for(2)),
        c.workers(),
    )?;
    Ok(rows
        .iter()
        .map(|r| {
            Check::new(
                format!("{}: Föllmer vs reweighted", r.name),
                r.difference(),
                r.combined_std_error,
                0.0,
                c.k() * r.combined_std_error,
                Relation::Within,
            )
        })
        .collect())
}

fn logsob(c: &Ctx) -> Result<Vec<Check>> {
    let family: Vec<ZonalLogDensity> = c
        .reals("tilts")
        .into_iter()
        .map(ZonalLogDensity::exp_tilt)
        .collect();
    let mut rows = Vec::new();
    for n in c.dims("dims") {
        for r in logsob_check(n, n as f64 - 1.0, &family)? {
            rows.push(Check::new(
                format!("n={n} {}: H vs (n/2)log(1+I/(nκ))", r.label),
                r.entropy,
                0.0,
                r.rhs_dimensional,
                ARITHMETIC_TOLERANCE,
                Relation::AtMost,
            ));
            rows.push(Check::new(
                format!("n={n} {}: (n/2)log(1+I/(nκ)) vs I/κ", r.label),
                r.rhs_dimensional,
                0.0,
                r.rhs_classical,
                ARITHMETIC_TOLERANCE,
                Relation::AtMost,
            ));
        }
    }
    Ok(rows)
}

fn alpha_trajectory_experiment(c: &Ctx) -> Result<Vec<Check>> {
    let k = c.k();
    let target = zonal_target(c)?;
    let frame = target.start_frame()?;
    let fine = sample_brownian(c.grid()?, c.n(), c.paths(), c.seed())?;
    let a = alpha_trajectory_batch(&target, &frame, &fine, c.workers())?;
    let b = alpha_trajectory_batch(&target, &frame, &fine.coarsened(2)?, c.workers())?;
    let (at, bt) = (a.alpha[a.alpha.len() - 1], b.alpha[b.alpha.len() - 1]);
    Ok(vec![
        Check::new(
            "∫α dt vs 2H",
            a.integral.mean,
            a.integral.std_error,
            2.0 * a.entropy,
            dt_band(k, &a.integral, &b.integral),
            Relation::Within,
        ),
        Check::new(
            "∫α dt vs the α(T) bound",
            a.integral.mean,
            a.integral.std_error,
            a.bound,
            k * a.integral.std_error,
            Relation::AtMost,
        ),
        Check::new(
            "α(T) vs Fisher information",
            at.mean,
            at.std_error,
            a.fisher,
            dt_band(k, &at, &bt),
            Relation::Within,
        ),
    ])
}

fn convergence(c: &Ctx) -> Result<Vec<Check>> {
    let (n, t, k) = (c.n(), c.horizon(), c.k());
    let (a, start) = (c.real("a"), c.real("start"));
    let s = SpectralSemigroup::with_defaults(n)?;
    let f = ZonalFunction::linear(a);
    let exact = semigroup_apply(&s, t, &f, start)?.value;
    let sys = SphereSystem {
        frame0: start_frame(n, start)?,
    };
    let finest = sample_brownian(c.grid()?, n, c.paths(), c.seed())?;
    let payoff = move |fr: &SphereFrame| a * fr.base().coords()[0];
    let mut errors = Vec::new();
    for factor in [4, 2, 1] {
        let b = finest.coarsened(factor)?;
        let v = ZonalValue::new(&s, &f, 0, b.grid(), ValueKind::Linear)?;
        let est = estimate_control_value(
            &sys,
            &payoff,
            &ZeroPolicy,
            ControlVariate::Value(&v),
            &b,
            c.workers(),
        )?;
        errors.push((b.grid().steps(), est.best()));
    }
    let mut rows: Vec<Check> = errors
        .iter()
        .map(|(steps, e)| {
            Check::new(
                format!("error at N={steps}, above noise"),
                e.mean - exact,
                e.std_error,
                0.0,
                k * e.std_error,
                Relation::Apart,
            )
        })
        .collect();
    for w in errors.windows(2) {
        let ((n1, e1), (n2, e2)) = (w[0], w[1]);
        let (d1, d2) = (e1.mean - exact, e2.mean - exact);
        let ratio = d1 / d2;
        rows.push(Check::new(
            format!("error ratio N={n1}/N={n2}"),
            ratio,
            ratio.abs() * (e1.std_error / d1).hypot(e2.std_error / d2),
            2.25,
            0.75,
            Relation::Within,
        ));
    }
    Ok(rows)
}
