//! Flat dotted-key configuration with typed defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use drivewave_core::models::{
    DemographyKind, DemographySpec, ModelSpec, Selection, SystemKind, WolbachiaParams,
};
use drivewave_core::solver::SolverSettings;
use drivewave_core::stochastic::{StochasticConfig, StochasticSweepConfig};
use drivewave_core::sweep::{AxisParam, AxisSpec, SweepConfig};
use drivewave_core::wave::Tolerances;

pub const WORKERS_ENV: &str = "DRIVEWAVE_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Bool,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Value {
    fn toml_literal(&self) -> String {
        match self {
            Value::Float(v) => format!("{v:.16e}"),
            Value::Int(v) => v.to_string(),
            Value::Bool(v) => v.to_string(),
            Value::Text(v) => toml::Value::String(v.clone()).to_string(),
        }
    }
}

pub struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

macro_rules! keys {
    ($(($key:literal, $kind:ident, $help:literal)),* $(,)?) => {
        pub const KEYS: &[KeySpec] = &[$(KeySpec { key: $key, kind: Kind::$kind, help: $help }),*];
    };
}

keys![
    (
        "model.system",
        Text,
        "density, frequency, frequency-gcd, cubic, tsn or wolbachia"
    ),
    (
        "model.demography",
        Text,
        "logistic-b, allee-b, logistic-d or allee-d"
    ),
    ("model.selection", Text, "survival or fecundity"),
    ("model.s", Float, "drive fitness cost"),
    ("model.r", Float, "wild-type growth rate"),
    ("model.a", Float, "Allee threshold"),
    ("model.f_w", Float, "fertility factor of infected mothers"),
    (
        "model.omega_h",
        Float,
        "hatching factor of incompatible crosses"
    ),
    ("solver.x_min", Float, "left end of the domain"),
    ("solver.x_max", Float, "right end of the domain"),
    ("solver.dx", Float, "grid spacing"),
    ("solver.dt", Float, "time step"),
    ("solver.t_final", Float, "simulated time"),
    (
        "solver.snapshot_every",
        Float,
        "interval between stored snapshots"
    ),
    (
        "solver.interface_x",
        Float,
        "position of the initial interface"
    ),
    ("wave.level", Float, "tracked level of the resident field"),
    (
        "wave.p_trivial",
        Float,
        "max drive frequency of a trivial wave"
    ),
    (
        "wave.presence",
        Float,
        "density below which cells are ignored"
    ),
    ("wave.min_r2", Float, "minimum r^2 of a converged speed fit"),
    (
        "wave.max_rms",
        Float,
        "fit residual accepted regardless of r^2"
    ),
    (
        "wave.window_fraction",
        Float,
        "fraction of the usable track used by the fit"
    ),
    (
        "wave.boundary_margin",
        Float,
        "distance from the boundary of usable crossings"
    ),
    ("wave.min_points", Int, "minimum number of fitted points"),
    ("wave.monotone_eps", Float, "monotonicity tolerance"),
    (
        "sweep.axis1.param",
        Text,
        "first axis parameter: s, r, a, fw_cost or omega_h"
    ),
    ("sweep.axis1.min", Float, "first axis lower bound"),
    ("sweep.axis1.max", Float, "first axis upper bound"),
    ("sweep.axis1.count", Int, "first axis point count"),
    ("sweep.axis2.param", Text, "second axis parameter"),
    ("sweep.axis2.min", Float, "second axis lower bound"),
    ("sweep.axis2.max", Float, "second axis upper bound"),
    ("sweep.axis2.count", Int, "second axis point count"),
    ("stochastic.deme_count", Int, "number of demes"),
    ("stochastic.capacity", Int, "deme carrying capacity K"),
    (
        "stochastic.emigration_prob",
        Float,
        "emigration probability of a newborn"
    ),
    ("stochastic.t_final", Float, "time horizon"),
    ("stochastic.seed", Int, "base random seed"),
    (
        "stochastic.gene_conversion",
        Bool,
        "heterozygotes transmit the drive only"
    ),
    ("stochastic.s_min", Float, "grid lower bound of s"),
    ("stochastic.s_max", Float, "grid upper bound of s"),
    (
        "stochastic.s_count",
        Int,
        "grid point count along s (1 runs model.s)"
    ),
    ("stochastic.r_min", Float, "grid lower bound of r"),
    ("stochastic.r_max", Float, "grid upper bound of r"),
    (
        "stochastic.r_count",
        Int,
        "grid point count along r (1 runs model.r)"
    ),
    ("run.workers", Int, "worker threads"),
    ("run.out", Text, "output directory"),
];

pub fn key_spec(key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.key == key)
}

/// Worker count from the environment, falling back to the available cores.
pub fn default_workers() -> u64 {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get() as u64))
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<&'static str, Value>,
}

impl Default for Settings {
    fn default() -> Self {
        let solver = SolverSettings::<f64>::default();
        let tol = Tolerances::<f64>::default();
        let sweep = SweepConfig::drive_default();
        let stoch = StochasticSweepConfig::default_grid();
        let base = StochasticConfig::default();
        let f = Value::Float;
        let i = Value::Int;
        let t = |s: &str| Value::Text(s.to_string());
        let values = BTreeMap::from([
            ("model.system", t("density")),
            ("model.demography", t("logistic-b")),
            ("model.selection", t("survival")),
            ("model.s", f(0.5)),
            ("model.r", f(1.0)),
            ("model.a", f(0.0)),
            ("model.f_w", f(0.9)),
            ("model.omega_h", f(0.1)),
            ("solver.x_min", f(solver.x_min)),
            ("solver.x_max", f(solver.x_max)),
            ("solver.dx", f(solver.dx)),
            ("solver.dt", f(solver.dt)),
            ("solver.t_final", f(solver.t_final)),
            ("solver.snapshot_every", f(solver.snapshot_every)),
            ("solver.interface_x", f(solver.interface_x)),
            ("wave.level", f(tol.level)),
            ("wave.p_trivial", f(tol.p_trivial)),
            ("wave.presence", f(tol.presence)),
            ("wave.min_r2", f(tol.min_r2)),
            ("wave.max_rms", f(tol.max_rms)),
            ("wave.window_fraction", f(tol.window_fraction)),
            ("wave.boundary_margin", f(tol.boundary_margin)),
            ("wave.min_points", i(tol.min_points as u64)),
            ("wave.monotone_eps", f(tol.monotone_eps)),
            ("sweep.axis1.param", t(sweep.axis1.param.name())),
            ("sweep.axis1.min", f(sweep.axis1.min)),
            ("sweep.axis1.max", f(sweep.axis1.max)),
            ("sweep.axis1.count", i(sweep.axis1.count as u64)),
            ("sweep.axis2.param", t(sweep.axis2.param.name())),
            ("sweep.axis2.min", f(sweep.axis2.min)),
            ("sweep.axis2.max", f(sweep.axis2.max)),
            ("sweep.axis2.count", i(sweep.axis2.count as u64)),
            ("stochastic.deme_count", i(base.deme_count as u64)),
            ("stochastic.capacity", i(u64::from(base.capacity))),
            ("stochastic.emigration_prob", f(base.emigration_prob)),
            ("stochastic.t_final", f(base.t_final)),
            ("stochastic.seed", i(base.seed)),
            (
                "stochastic.gene_conversion",
                Value::Bool(base.gene_conversion),
            ),
            ("stochastic.s_min", f(stoch.s.min)),
            ("stochastic.s_max", f(stoch.s.max)),
            ("stochastic.s_count", i(1)),
            ("stochastic.r_min", f(stoch.r.min)),
            ("stochastic.r_max", f(stoch.r.max)),
            ("stochastic.r_count", i(1)),
            ("run.workers", i(default_workers())),
            ("run.out", t("out")),
        ]);
        debug_assert_eq!(values.len(), KEYS.len());
        Self { values }
    }
}

impl Settings {
    /// Sets `key` from command-line text.
    pub fn set_str(&mut self, key: &str, raw: &str) -> Result<()> {
        let spec = key_spec(key).ok_or_else(|| anyhow!("unknown config key {key:?}"))?;
        let bad = |what: &str| anyhow!("invalid value {raw:?} for {key}: expected {what}");
        let value = match spec.kind {
            Kind::Float => Value::Float(raw.trim().parse().map_err(|_| bad("a number"))?),
            Kind::Int => Value::Int(
                raw.trim()
                    .parse()
                    .map_err(|_| bad("a nonnegative integer"))?,
            ),
            Kind::Bool => Value::Bool(raw.trim().parse().map_err(|_| bad("true or false"))?),
            Kind::Text => Value::Text(raw.to_string()),
        };
        self.values.insert(spec.key, value);
        Ok(())
    }

    fn set_toml(&mut self, key: &str, raw: &toml::Value) -> Result<()> {
        let spec = key_spec(key).ok_or_else(|| anyhow!("unknown config key {key:?}"))?;
        let bad = || anyhow!("invalid value {raw} for {key}: expected {:?}", spec.kind);
        let value = match (spec.kind, raw) {
            (Kind::Float, toml::Value::Float(v)) => Value::Float(*v),
            (Kind::Float, toml::Value::Integer(v)) => Value::Float(*v as f64),
            (Kind::Int, toml::Value::Integer(v)) => {
                Value::Int(u64::try_from(*v).map_err(|_| bad())?)
            }
            (Kind::Bool, toml::Value::Boolean(v)) => Value::Bool(*v),
            (Kind::Text, toml::Value::String(v)) => Value::Text(v.clone()),
            _ => return Err(bad()),
        };
        self.values.insert(spec.key, value);
        Ok(())
    }

    /// Applies every key of a TOML document, or of its `[config]` table when it is a manifest.
    pub fn merge_toml(&mut self, text: &str) -> Result<()> {
        let doc: toml::Table = text.parse().context("config is not valid TOML")?;
        let table = match doc.get("config") {
            Some(toml::Value::Table(t)) if doc.contains_key("subcommand") => t.clone(),
            _ => doc,
        };
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        for (key, value) in flat {
            self.set_toml(&key, &value)?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        self.merge_toml(&text)
            .with_context(|| format!("in config {}", path.display()))
    }

    /// Dotted `key = value` lines in key order.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        for spec in KEYS {
            let _ = writeln!(
                out,
                "{} = {}",
                spec.key,
                self.values[spec.key].toml_literal()
            );
        }
        out
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(Value::Float(v)) => *v,
            other => panic!("config key {key} is not a float: {other:?}"),
        }
    }

    pub fn int(&self, key: &str) -> u64 {
        match self.values.get(key) {
            Some(Value::Int(v)) => *v,
            other => panic!("config key {key} is not an integer: {other:?}"),
        }
    }

    pub fn boolean(&self, key: &str) -> bool {
        match self.values.get(key) {
            Some(Value::Bool(v)) => *v,
            other => panic!("config key {key} is not a boolean: {other:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some(Value::Text(v)) => v,
            other => panic!("config key {key} is not text: {other:?}"),
        }
    }

    fn usize(&self, key: &str) -> Result<usize> {
        usize::try_from(self.int(key)).map_err(|_| anyhow!("{key} is too large"))
    }

    pub fn workers(&self) -> Result<usize> {
        let n = self.usize("run.workers")?;
        if n == 0 {
            bail!("run.workers must be at least 1");
        }
        Ok(n)
    }

    pub fn model(&self) -> Result<ModelSpec<f64>> {
        let system = self.text("model.system");
        let kind = SystemKind::from_name(system)
            .ok_or_else(|| anyhow!("model.system: unknown system {system:?}"))?;
        let demo_name = self.text("model.demography");
        let demo_kind = DemographyKind::from_name(demo_name)
            .ok_or_else(|| anyhow!("model.demography: unknown demography {demo_name:?}"))?;
        let sel_name = self.text("model.selection");
        let selection = Selection::from_name(sel_name)
            .ok_or_else(|| anyhow!("model.selection: unknown selection {sel_name:?}"))?;
        let s = self.float("model.s");
        if !(0.0..=1.0).contains(&s) {
            bail!("model.s must lie in [0, 1], got {s}");
        }
        let r = self.float("model.r");
        if !(r > 0.0 && r.is_finite()) {
            bail!("model.r must be positive, got {r}");
        }
        let demography = DemographySpec {
            kind: demo_kind,
            r,
            a: self.float("model.a"),
        };
        let wolbachia = WolbachiaParams {
            f_w: self.float("model.f_w"),
            omega_h: self.float("model.omega_h"),
        };
        Ok(ModelSpec::build(kind, demography, selection, s, wolbachia))
    }

    pub fn solver(&self) -> SolverSettings<f64> {
        SolverSettings {
            x_min: self.float("solver.x_min"),
            x_max: self.float("solver.x_max"),
            dx: self.float("solver.dx"),
            dt: self.float("solver.dt"),
            t_final: self.float("solver.t_final"),
            snapshot_every: self.float("solver.snapshot_every"),
            interface_x: self.float("solver.interface_x"),
            left: None,
            right: None,
        }
    }

    pub fn tolerances(&self) -> Result<Tolerances<f64>> {
        Ok(Tolerances {
            p_trivial: self.float("wave.p_trivial"),
            presence: self.float("wave.presence"),
            min_r2: self.float("wave.min_r2"),
            max_rms: self.float("wave.max_rms"),
            window_fraction: self.float("wave.window_fraction"),
            boundary_margin: self.float("wave.boundary_margin"),
            min_points: self.usize("wave.min_points")?,
            monotone_eps: self.float("wave.monotone_eps"),
            level: self.float("wave.level"),
        })
    }

    fn axis(&self, prefix: &str) -> Result<AxisSpec> {
        let key = format!("{prefix}.param");
        let param: AxisParam = self.text(&key).parse().map_err(|e| anyhow!("{key}: {e}"))?;
        Ok(AxisSpec::new(
            param,
            self.float(&format!("{prefix}.min")),
            self.float(&format!("{prefix}.max")),
            self.usize(&format!("{prefix}.count"))?,
        ))
    }

    pub fn sweep(&self) -> Result<SweepConfig> {
        Ok(SweepConfig {
            template: self.model()?,
            axis1: self.axis("sweep.axis1")?,
            axis2: self.axis("sweep.axis2")?,
            solver: self.solver(),
            tolerances: self.tolerances()?,
            workers: self.workers()?,
        })
    }

    pub fn stochastic(&self) -> Result<StochasticSweepConfig> {
        let capacity = u32::try_from(self.int("stochastic.capacity"))
            .map_err(|_| anyhow!("stochastic.capacity is too large"))?;
        let base = StochasticConfig {
            deme_count: self.usize("stochastic.deme_count")?,
            capacity,
            emigration_prob: self.float("stochastic.emigration_prob"),
            model: self.model()?,
            t_final: self.float("stochastic.t_final"),
            seed: self.int("stochastic.seed"),
            gene_conversion: self.boolean("stochastic.gene_conversion"),
            ..StochasticConfig::default()
        };
        let (s_count, r_count) = (
            self.usize("stochastic.s_count")?,
            self.usize("stochastic.r_count")?,
        );
        let (s, r) = if s_count == 1 && r_count == 1 {
            (
                AxisSpec::fixed(AxisParam::S, self.float("model.s")),
                AxisSpec::fixed(AxisParam::R, self.float("model.r")),
            )
        } else {
            (
                AxisSpec::new(
                    AxisParam::S,
                    self.float("stochastic.s_min"),
                    self.float("stochastic.s_max"),
                    s_count,
                ),
                AxisSpec::new(
                    AxisParam::R,
                    self.float("stochastic.r_min"),
                    self.float("stochastic.r_max"),
                    r_count,
                ),
            )
        };
        Ok(StochasticSweepConfig {
            base,
            s,
            r,
            workers: self.workers()?,
        })
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

/// Parses `NxM` into two counts.
pub fn parse_grid(raw: &str) -> Result<(u64, u64)> {
    let (a, b) = raw
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow!("--grid expects NxM, got {raw:?}"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<u64>()
            .map_err(|_| anyhow!("--grid expects NxM, got {raw:?}"))
    };
    Ok((parse(a)?, parse(b)?))
}
