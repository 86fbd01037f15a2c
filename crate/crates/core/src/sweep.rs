//! Parallel parameter sweeps: one simulation and wave classification per grid cell.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{DemographyKind, ModelSpec, Selection};
use crate::solver::{simulate, SolverSettings};
use crate::theory::{sign_verdict, AnalyticSign, AnalyticVerdict, Clause, SpeedBounds};
use crate::wave::{classify_wave, energy_sign, nsv_sign, Tolerances, WaveClass};

/// Model parameter varied along a sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisParam {
    /// Drive fitness cost.
    S,
    /// Wild-type growth rate.
    R,
    /// Allee threshold.
    A,
    /// Fertility cost `1 - f_w` of infected mothers.
    FertilityCost,
    /// Hatching factor of incompatible crosses.
    OmegaH,
}

impl AxisParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::S => "s",
            Self::R => "r",
            Self::A => "a",
            Self::FertilityCost => "fw_cost",
            Self::OmegaH => "omega_h",
        }
    }

    /// Returns `model` with this parameter set to `value`.
    pub fn apply(self, model: ModelSpec<f64>, value: f64) -> Result<ModelSpec<f64>> {
        let unsupported = || {
            Error::InvalidConfig(format!(
                "axis {} does not apply to {}",
                self.name(),
                model.kind().name()
            ))
        };
        let mut model = model;
        match (self, &mut model) {
            (
                Self::S,
                ModelSpec::DensityDrive { s, .. }
                | ModelSpec::FrequencyDrive { s, .. }
                | ModelSpec::FrequencyDriveGcd { s, .. }
                | ModelSpec::ScalarCubic { s }
                | ModelSpec::ScalarTsn { s },
            ) => *s = value,
            (
                Self::R,
                ModelSpec::DensityDrive { demography, .. }
                | ModelSpec::FrequencyDrive { demography, .. }
                | ModelSpec::FrequencyDriveGcd { demography, .. }
                | ModelSpec::WolbachiaDensity { demography, .. },
            ) => demography.r = value,
            (
                Self::A,
                ModelSpec::DensityDrive { demography, .. }
                | ModelSpec::FrequencyDrive { demography, .. }
                | ModelSpec::FrequencyDriveGcd { demography, .. }
                | ModelSpec::WolbachiaDensity { demography, .. },
            ) => demography.a = value,
            (Self::FertilityCost, ModelSpec::WolbachiaDensity { params, .. }) => {
                params.f_w = 1.0 - value
            }
            (Self::OmegaH, ModelSpec::WolbachiaDensity { params, .. }) => params.omega_h = value,
            _ => return Err(unsupported()),
        }
        Ok(model)
    }
}

impl fmt::Display for AxisParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AxisParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s" => Ok(Self::S),
            "r" => Ok(Self::R),
            "a" => Ok(Self::A),
            "fw_cost" | "1-f_w" => Ok(Self::FertilityCost),
            "omega_h" => Ok(Self::OmegaH),
            other => Err(Error::InvalidConfig(format!(
                "unknown axis parameter {other:?}"
            ))),
        }
    }
}

/// Evenly spaced values of one parameter, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub param: AxisParam,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(param: AxisParam, min: f64, max: f64, count: usize) -> Self {
        Self {
            param,
            min,
            max,
            count,
        }
    }

    /// A single-value axis.
    pub fn fixed(param: AxisParam, value: f64) -> Self {
        Self {
            param,
            min: value,
            max: value,
            count: 1,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.max
                } else {
                    self.min + step * k as f64
                }
            })
            .collect()
    }

    /// Requires at least `min_count` values and a nonempty range when there are several.
    pub fn validate(&self, min_count: usize) -> Result<()> {
        if self.count < min_count.max(1) {
            return Err(Error::InvalidConfig(format!(
                "axis {} needs at least {} values, got {}",
                self.param,
                min_count.max(1),
                self.count
            )));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "axis {} bounds must be finite",
                self.param
            )));
        }
        if self.count > 1 && !(self.max > self.min) {
            return Err(Error::InvalidConfig(format!(
                "axis {} range [{}, {}] is empty",
                self.param, self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Grid of runs over two model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub template: ModelSpec<f64>,
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    pub solver: SolverSettings<f64>,
    pub tolerances: Tolerances<f64>,
    pub workers: usize,
}

impl SweepConfig {
    /// 25 x 25 over `s in [0.3, 0.8]`, `r in [0.1, 12]` for the logistic density system.
    pub fn drive_default() -> Self {
        Self {
            template: ModelSpec::density_drive(0.5, 1.0),
            axis1: AxisSpec::new(AxisParam::S, 0.3, 0.8, 25),
            axis2: AxisSpec::new(AxisParam::R, 0.1, 12.0, 25),
            solver: SolverSettings::default(),
            tolerances: Tolerances::default(),
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate(2)?;
        self.axis2.validate(2)?;
        if self.axis1.param == self.axis2.param {
            return Err(Error::InvalidConfig("sweep axes must differ".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        for (a, b) in [
            (self.axis1.min, self.axis2.min),
            (self.axis1.max, self.axis2.max),
        ] {
            self.model_at(a, b)?;
        }
        self.solver.config_for(self.template)?;
        Ok(())
    }

    pub fn model_at(&self, v1: f64, v2: f64) -> Result<ModelSpec<f64>> {
        let model = self.axis1.param.apply(self.template, v1)?;
        self.axis2.param.apply(model, v2)
    }

    pub fn cell_count(&self) -> usize {
        self.axis1.count.max(1) * self.axis2.count.max(1)
    }

    /// Axis values in row-major order (`axis1` outer).
    pub fn points(&self) -> Vec<(f64, f64)> {
        let v2 = self.axis2.values();
        self.axis1
            .values()
            .into_iter()
            .flat_map(|a| v2.iter().map(move |&b| (a, b)))
            .collect()
    }
}

/// One sweep grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub axis1: f64,
    pub axis2: f64,
    pub speed: f64,
    pub fit_r2: f64,
    pub class: WaveClass,
    pub p_monotone: bool,
    pub n_monotone: bool,
    pub plateau_n: f64,
    pub verdict: AnalyticVerdict,
    /// Integral sign formulas evaluated on the extracted `h`, when available.
    pub nsv: Option<f64>,
    pub energy: Option<f64>,
    pub max_clip: f64,
    pub error: Option<String>,
}

impl SweepCell {
    pub fn monotonic_count(&self) -> u8 {
        u8::from(self.p_monotone) + u8::from(self.n_monotone)
    }

    fn failed(axis1: f64, axis2: f64, verdict: AnalyticVerdict, error: String) -> Self {
        Self {
            axis1,
            axis2,
            speed: f64::NAN,
            fit_r2: 0.0,
            class: WaveClass::NotConverged,
            p_monotone: false,
            n_monotone: false,
            plateau_n: f64::NAN,
            verdict,
            nsv: None,
            energy: None,
            max_clip: f64::NAN,
            error: Some(error),
        }
    }
}

/// `(s, r)` when the model is the logistic, survival-selection drive system the analytic criteria cover.
pub fn logistic_drive_params(model: &ModelSpec<f64>) -> Option<(f64, f64)> {
    match *model {
        ModelSpec::DensityDrive {
            demography,
            selection: Selection::Survival,
            s,
        }
        | ModelSpec::FrequencyDrive {
            demography,
            selection: Selection::Survival,
            s,
        } if demography.kind == DemographyKind::LogisticBirth => Some((s, demography.r)),
        _ => None,
    }
}

/// Analytic predictions for the model, `Unknown` outside their scope.
pub fn analytic_verdict(model: &ModelSpec<f64>) -> AnalyticVerdict {
    match logistic_drive_params(model) {
        Some((s, r)) if s > 0.0 && s < 1.0 && r > 0.0 => sign_verdict(s, r),
        _ => AnalyticVerdict {
            trivial_only: false,
            sign: AnalyticSign::Unknown,
            clause: Clause::None,
            bounds: SpeedBounds::default(),
        },
    }
}

/// Simulates and classifies one model.
pub fn run_cell(
    model: ModelSpec<f64>,
    solver: &SolverSettings<f64>,
    tol: &Tolerances<f64>,
    axis1: f64,
    axis2: f64,
) -> SweepCell {
    let verdict = analytic_verdict(&model);
    let config = match solver.config_for(model) {
        Ok(c) => c,
        Err(e) => return SweepCell::failed(axis1, axis2, verdict, e.to_string()),
    };
    let output = match simulate(&config) {
        Ok(o) => o,
        Err(e) => return SweepCell::failed(axis1, axis2, verdict, e.to_string()),
    };
    let report = classify_wave(&config.grid, &model, &output.snapshots, tol);
    let (nsv, energy) = match (&report.h_table, logistic_drive_params(&model)) {
        (Some(h), Some((s, r))) if report.class.is_nontrivial() => {
            (Some(nsv_sign(h, s, r)), Some(energy_sign(h, s, r)))
        }
        _ => (None, None),
    };
    SweepCell {
        axis1,
        axis2,
        speed: report.speed,
        fit_r2: report.fit_r2,
        class: report.class,
        p_monotone: report.p_monotone,
        n_monotone: report.n_monotone,
        plateau_n: report.plateau_n,
        verdict,
        nsv,
        energy,
        max_clip: output.max_clip,
        error: None,
    }
}

/// Runs every cell on a pool of `config.workers` threads; output is row-major.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepCell>> {
    config.validate()?;
    let points = config.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let cells = pool.install(|| {
        points
            .par_iter()
            .map(|&(a, b)| match config.model_at(a, b) {
                Ok(model) => run_cell(model, &config.solver, &config.tolerances, a, b),
                Err(e) => SweepCell::failed(
                    a,
                    b,
                    AnalyticVerdict {
                        trivial_only: false,
                        sign: AnalyticSign::Unknown,
                        clause: Clause::None,
                        bounds: SpeedBounds::default(),
                    },
                    e.to_string(),
                ),
            })
            .collect()
    });
    Ok(cells)
}

/// Minimum `|speed|` for a cell to enter sign comparisons.
pub const SIGN_SPEED_FLOOR: f64 = 0.05;

/// Minimum speed-fit `r^2` for a cell to enter any comparison.
pub const AGREEMENT_MIN_R2: f64 = 0.99;

/// Cell that disagrees with the analytic prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub axis1: f64,
    pub axis2: f64,
    pub speed: f64,
    pub class: WaveClass,
    pub sign: AnalyticSign,
    pub clause: Clause,
}

/// Comparison of measured cells with the analytic predictions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgreementReport {
    /// Nontrivial converged cells with a definite sign and `|speed| > 0.05`.
    pub sign_checked: usize,
    pub sign_matches: usize,
    pub sign_mismatches: Vec<Mismatch>,
    /// Converged cells inside the trivial-only region.
    pub trivial_checked: usize,
    pub trivial_matches: usize,
    pub trivial_mismatches: Vec<Mismatch>,
}

impl AgreementReport {
    pub fn is_clean(&self) -> bool {
        self.sign_mismatches.is_empty() && self.trivial_mismatches.is_empty()
    }
}

/// Checks measured signs against the sign clauses and trivial-region cells against the
/// trivial-wave criterion. Unconverged cells and fits with `r^2 < 0.99` are skipped.
pub fn agreement_report(cells: &[SweepCell]) -> AgreementReport {
    let mut report = AgreementReport::default();
    for cell in cells
        .iter()
        .filter(|c| c.class.is_converged() && c.fit_r2 >= AGREEMENT_MIN_R2)
    {
        let mismatch = || Mismatch {
            axis1: cell.axis1,
            axis2: cell.axis2,
            speed: cell.speed,
            class: cell.class,
            sign: cell.verdict.sign,
            clause: cell.verdict.clause,
        };
        if cell.verdict.trivial_only {
            report.trivial_checked += 1;
            if cell.class == WaveClass::TrivialKpp {
                report.trivial_matches += 1;
            } else {
                report.trivial_mismatches.push(mismatch());
            }
        }
        if !cell.class.is_nontrivial() || cell.speed.abs() <= SIGN_SPEED_FLOOR {
            continue;
        }
        if let Some(ok) = cell.verdict.sign.matches(cell.speed) {
            report.sign_checked += 1;
            if ok {
                report.sign_matches += 1;
            } else {
                report.sign_mismatches.push(mismatch());
            }
        }
    }
    report
}

/// Interpolated location of a speed sign change between two adjacent cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignChange {
    pub axis1: f64,
    pub axis2: f64,
    /// True for an edge along `axis1` (between consecutive `axis1` values).
    pub along_axis1: bool,
}

/// Sign changes of the measured speed across grid edges whose ends both converged.
///
/// `cells` is row-major with `count2` values of the second axis per row.
pub fn sign_changes(cells: &[SweepCell], count2: usize) -> Vec<SignChange> {
    let ok = |c: &SweepCell| c.class.is_converged() && c.speed.is_finite() && c.speed != 0.0;
    let crossing = |a: &SweepCell, b: &SweepCell, along_axis1: bool| {
        if !(ok(a) && ok(b)) || (a.speed < 0.0) == (b.speed < 0.0) {
            return None;
        }
        let w = a.speed / (a.speed - b.speed);
        Some(SignChange {
            axis1: a.axis1 + w * (b.axis1 - a.axis1),
            axis2: a.axis2 + w * (b.axis2 - a.axis2),
            along_axis1,
        })
    };
    let mut out = Vec::new();
    for (k, cell) in cells.iter().enumerate() {
        if (k + 1) % count2 != 0 {
            out.extend(crossing(cell, &cells[k + 1], false));
        }
        if k + count2 < cells.len() {
            out.extend(crossing(cell, &cells[k + count2], true));
        }
    }
    out
}

/// Bisection for the parameter where `speed_of` changes sign, using `iterations` evaluations.
///
/// Requires opposite signs at `lo` and `hi`.
pub fn bisect_sign_change(
    mut speed_of: impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    iterations: usize,
) -> Result<f64> {
    let lo_negative = speed_of(lo)? < 0.0;
    if lo_negative == (speed_of(hi)? < 0.0) {
        return Err(Error::InvalidConfig(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if (speed_of(mid)? < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
