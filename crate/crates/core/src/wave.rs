//! Front diagnostics on snapshot sequences: level-set tracking, speed fits,
//! monotonicity, trivial/nontrivial classification and the `h(P) = N` link.

use std::fmt;
use std::str::FromStr;

use crate::models::ModelSpec;
use crate::quadrature::simpson;
use crate::scalar::Scalar;
use crate::solver::{FieldState, Grid1D};

/// Number of nodes in an [`HTable`].
pub const H_NODES: usize = 512;

/// Thresholds used by [`classify_wave`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// A run is trivial when `max p` (over occupied cells) stays below this.
    pub p_trivial: T,
    /// Cells with total density below this are ignored by the trivial-wave test.
    pub presence: T,
    /// Minimum coefficient of determination of the speed fit.
    pub min_r2: T,
    /// Residual RMS below which a fit counts as converged whatever its `r^2`
    /// (a front at rest has no variance to explain).
    pub max_rms: T,
    /// Fraction of the usable time range used by the speed fit.
    pub window_fraction: T,
    /// Crossings closer than this to either boundary are unusable.
    pub boundary_margin: T,
    pub min_points: usize,
    pub monotone_eps: T,
    /// Level of the tracked resident field.
    pub level: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            p_trivial: T::lit(1e-3),
            presence: T::lit(1e-3),
            min_r2: T::lit(0.99),
            max_rms: T::lit(1e-3),
            window_fraction: T::lit(0.5),
            boundary_margin: T::lit(20.0),
            min_points: 5,
            monotone_eps: T::lit(1e-6),
            level: T::lit(0.5),
        }
    }
}

/// Outcome of [`classify_wave`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveClass {
    TrivialKpp,
    NontrivialViable,
    NontrivialNonviable,
    NotConverged,
}

impl WaveClass {
    pub fn name(self) -> &'static str {
        match self {
            Self::TrivialKpp => "TrivialKPP",
            Self::NontrivialViable => "NontrivialViable",
            Self::NontrivialNonviable => "NontrivialNonviable",
            Self::NotConverged => "NotConverged",
        }
    }

    pub fn is_nontrivial(self) -> bool {
        matches!(self, Self::NontrivialViable | Self::NontrivialNonviable)
    }

    pub fn is_converged(self) -> bool {
        self != Self::NotConverged
    }
}

impl fmt::Display for WaveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Self::TrivialKpp,
            Self::NontrivialViable,
            Self::NontrivialNonviable,
            Self::NotConverged,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| format!("unknown wave class {s:?}"))
    }
}

/// Position of the tracked level at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelPoint<T> {
    pub t: T,
    /// `None` when the profile never crosses the level.
    pub x: Option<T>,
    /// False when missing or within the boundary margin.
    pub usable: bool,
}

/// Least-squares front speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedFit<T> {
    pub speed: T,
    pub r2: T,
    pub rms: T,
    pub points: usize,
}

/// `N` tabulated against `P` on [`H_NODES`] uniform nodes of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HTable<T> {
    pub h: Vec<T>,
}

impl<T: Scalar> HTable<T> {
    pub fn nodes(&self) -> Vec<T> {
        uniform_nodes(self.h.len())
    }

    pub fn step(&self) -> T {
        T::one() / T::lit((self.h.len() - 1) as f64)
    }

    /// Table of a constant link `h(V) = value`.
    pub fn constant(value: T) -> Self {
        Self {
            h: vec![value; H_NODES],
        }
    }

    /// Table sampled from a function of `V`.
    pub fn from_fn(f: impl Fn(T) -> T) -> Self {
        Self {
            h: uniform_nodes(H_NODES).into_iter().map(f).collect(),
        }
    }
}

fn uniform_nodes<T: Scalar>(count: usize) -> Vec<T> {
    let last = T::lit((count - 1) as f64);
    (0..count).map(|k| T::lit(k as f64) / last).collect()
}

/// Everything measured on one run.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveReport<T> {
    pub speed: T,
    pub fit_r2: T,
    pub class: WaveClass,
    pub p_monotone: bool,
    pub n_monotone: bool,
    pub plateau_n: T,
    pub h_table: Option<HTable<T>>,
    /// Largest drive frequency over occupied cells of the analysed snapshot.
    pub max_p: T,
    /// Time of the snapshot used for the profile diagnostics.
    pub analysis_time: T,
    pub track: Vec<LevelPoint<T>>,
}

/// Drive (or infection) frequency and total density profiles of a snapshot.
///
/// Scalar equations report `n = 1`.
pub fn frequency_profiles<T: Scalar>(
    model: &ModelSpec<T>,
    state: &FieldState<T>,
) -> (Vec<T>, Vec<T>) {
    let tiny = T::min_positive_value();
    match (model, &state.u2) {
        (ModelSpec::FrequencyDrive { .. } | ModelSpec::FrequencyDriveGcd { .. }, Some(n)) => {
            (state.u1.clone(), n.clone())
        }
        (ModelSpec::ScalarCubic { .. } | ModelSpec::ScalarTsn { .. }, _) | (_, None) => {
            (state.u1.clone(), vec![T::one(); state.u1.len()])
        }
        (_, Some(u2)) => state
            .u1
            .iter()
            .zip(u2)
            .map(|(&a, &b)| {
                let n = a + b;
                (a / n.max(tiny), n)
            })
            .unzip(),
    }
}

/// Resident (wild-type, uninfected) density whose 1/2 level is tracked.
pub fn level_field<T: Scalar>(model: &ModelSpec<T>, state: &FieldState<T>) -> Vec<T> {
    match (model, &state.u2) {
        (ModelSpec::FrequencyDrive { .. } | ModelSpec::FrequencyDriveGcd { .. }, Some(n)) => state
            .u1
            .iter()
            .zip(n)
            .map(|(&p, &n)| (T::one() - p) * n)
            .collect(),
        (ModelSpec::ScalarCubic { .. } | ModelSpec::ScalarTsn { .. }, _) | (_, None) => {
            state.u1.iter().map(|&p| T::one() - p).collect()
        }
        (_, Some(u2)) => u2.clone(),
    }
}

/// Leftmost crossing of `level`, linearly interpolated.
pub fn leftmost_crossing<T: Scalar>(xs: &[T], profile: &[T], level: T) -> Option<T> {
    for i in 0..profile.len().saturating_sub(1) {
        let (a, b) = (profile[i] - level, profile[i + 1] - level);
        if a == T::zero() {
            return Some(xs[i]);
        }
        if (a < T::zero()) != (b < T::zero()) {
            let w = a / (a - b);
            return Some(xs[i] + w * (xs[i + 1] - xs[i]));
        }
    }
    None
}

/// Level-set positions of the resident density in every snapshot.
pub fn track_level_set<T: Scalar>(
    grid: &Grid1D<T>,
    model: &ModelSpec<T>,
    snapshots: &[FieldState<T>],
    tol: &Tolerances<T>,
) -> Vec<LevelPoint<T>> {
    let xs = grid.points();
    snapshots
        .iter()
        .map(|state| {
            let x = leftmost_crossing(&xs, &level_field(model, state), tol.level);
            let usable = x.is_some_and(|x| {
                x - grid.x_min >= tol.boundary_margin && grid.x_max - x >= tol.boundary_margin
            });
            LevelPoint {
                t: state.t,
                x,
                usable,
            }
        })
        .collect()
}

/// Linear fit of `x(t)` over the final `window_fraction` of the usable time range.
///
/// Returns `None` with fewer than `min_points` usable points in the window.
pub fn estimate_speed<T: Scalar>(
    track: &[LevelPoint<T>],
    window_fraction: T,
    min_points: usize,
) -> Option<SpeedFit<T>> {
    let usable: Vec<(T, T)> = track
        .iter()
        .filter(|p| p.usable)
        .filter_map(|p| p.x.map(|x| (p.t, x)))
        .collect();
    let (first, last) = (usable.first()?.0, usable.last()?.0);
    let start = last - window_fraction * (last - first);
    let window: Vec<(T, T)> = usable.into_iter().filter(|&(t, _)| t >= start).collect();
    if window.len() < min_points.max(2) {
        return None;
    }
    Some(linear_fit(&window))
}

fn linear_fit<T: Scalar>(points: &[(T, T)]) -> SpeedFit<T> {
    let n = T::lit(points.len() as f64);
    let mean_t = points.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let mean_x = points.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let (mut stt, mut stx, mut sxx) = (T::zero(), T::zero(), T::zero());
    for &(t, x) in points {
        let (dt, dx) = (t - mean_t, x - mean_x);
        stt += dt * dt;
        stx += dt * dx;
        sxx += dx * dx;
    }
    let speed = if stt > T::zero() {
        stx / stt
    } else {
        T::zero()
    };
    let ss_res = (sxx - speed * stx).max(T::zero());
    let r2 = if sxx > T::zero() {
        T::one() - ss_res / sxx
    } else {
        T::one()
    };
    SpeedFit {
        speed,
        r2,
        rms: (ss_res / n).sqrt(),
        points: points.len(),
    }
}

/// Expected monotonicity direction of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Nondecreasing,
    Nonincreasing,
}

/// Normalised centred-difference test: `min u'/|u'|_inf > -eps` (or `max < eps`).
///
/// Profiles flat up to rounding are monotone.
pub fn monotonicity_check<T: Scalar>(profile: &[T], direction: Direction, eps: T) -> bool {
    if profile.len() < 3 {
        return true;
    }
    let derivative: Vec<T> = profile.windows(3).map(|w| w[2] - w[0]).collect();
    let sup = derivative.iter().fold(T::zero(), |m, d| m.max(d.abs()));
    let scale = profile.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    // differences at rounding level carry no shape information
    if sup <= T::lit(64.0) * T::epsilon() * scale || sup == T::zero() {
        return true;
    }
    match direction {
        Direction::Nondecreasing => derivative.iter().all(|&d| d / sup > -eps),
        Direction::Nonincreasing => derivative.iter().all(|&d| d / sup < eps),
    }
}

/// Tabulates `N` against `P` from a front with `P` nondecreasing and `N` nonincreasing in `x`.
///
/// Returns `None` when `P` spans less than 0.5.
pub fn extract_h<T: Scalar>(p: &[T], n: &[T]) -> Option<HTable<T>> {
    if p.len() < 2 || p.len() != n.len() {
        return None;
    }
    // running maximum makes P monotone without reordering the cells
    let mut pm = Vec::with_capacity(p.len());
    let mut acc = T::neg_infinity();
    for &v in p {
        acc = acc.max(v);
        pm.push(acc);
    }
    let (p_min, p_max) = (pm[0], pm[pm.len() - 1]);
    if !(p_max - p_min > T::lit(0.5)) {
        return None;
    }
    let (n_left, n_right) = (n[0], n[n.len() - 1]);
    let mut h = Vec::with_capacity(H_NODES);
    let mut j = 0;
    for v in uniform_nodes::<T>(H_NODES) {
        if v <= p_min {
            h.push(n_left);
            continue;
        }
        if v >= p_max {
            h.push(n_right);
            continue;
        }
        while pm[j] < v {
            j += 1;
        }
        // pm[j-1] < v <= pm[j]
        let (p0, p1) = (pm[j - 1], pm[j]);
        let w = (v - p0) / (p1 - p0);
        h.push(n[j - 1] + w * (n[j] - n[j - 1]));
    }
    Some(HTable { h })
}

/// `-int_0^1 h^4 (r(1-h)+1) V s(1-V)(V - (2s-1)/s) dV`; its sign is the sign of the speed.
pub fn nsv_sign<T: Scalar>(table: &HTable<T>, s: T, r: T) -> T {
    let one = T::one();
    let integrand: Vec<T> = table
        .nodes()
        .into_iter()
        .zip(&table.h)
        .map(|(v, &h)| {
            let h2 = h * h;
            h2 * h2 * (r * (one - h) + one) * v * (one - v) * (s * v - (T::lit(2.0) * s - one))
        })
        .collect();
    -simpson(&integrand, table.step())
}

/// `r/6 (1 - (1-s) n*^3) - int_0^1 s(1-V) h^2 (r(1 - 2h/3) + 1) dV` with
/// `n* = max(0, 1 - s/(r(1-s)))`; its sign is the sign of the speed.
pub fn energy_sign<T: Scalar>(table: &HTable<T>, s: T, r: T) -> T {
    let one = T::one();
    let n_star = if s >= one {
        T::zero()
    } else {
        (one - s / (r * (one - s))).max(T::zero())
    };
    let integrand: Vec<T> = table
        .nodes()
        .into_iter()
        .zip(&table.h)
        .map(|(v, &h)| s * (one - v) * h * h * (r * (one - T::lit(2.0) * h / T::lit(3.0)) + one))
        .collect();
    r / T::lit(6.0) * (one - (one - s) * n_star * n_star * n_star)
        - simpson(&integrand, table.step())
}

/// Index of the last snapshot whose front is usable, else the final one.
fn analysis_index<T>(track: &[LevelPoint<T>]) -> usize {
    track
        .iter()
        .rposition(|p| p.usable)
        .unwrap_or(track.len().saturating_sub(1))
}

/// Speed, classification and profile diagnostics of one run.
///
/// Profiles are read from the last snapshot whose front is still away from the boundaries.
pub fn classify_wave<T: Scalar>(
    grid: &Grid1D<T>,
    model: &ModelSpec<T>,
    snapshots: &[FieldState<T>],
    tol: &Tolerances<T>,
) -> WaveReport<T> {
    let track = track_level_set(grid, model, snapshots, tol);
    let fit = estimate_speed(&track, tol.window_fraction, tol.min_points);
    let Some(state) = snapshots.get(analysis_index(&track)) else {
        return WaveReport {
            speed: T::nan(),
            fit_r2: T::zero(),
            class: WaveClass::NotConverged,
            p_monotone: true,
            n_monotone: true,
            plateau_n: T::nan(),
            h_table: None,
            max_p: T::nan(),
            analysis_time: T::nan(),
            track,
        };
    };
    let (p, n) = frequency_profiles(model, state);
    let max_p = p
        .iter()
        .zip(&n)
        .filter(|(_, &n)| n >= tol.presence)
        .fold(T::zero(), |m, (&p, _)| m.max(p));
    let tail = (n.len() / 10).max(1);
    let plateau_n = n[n.len() - tail..].iter().fold(T::zero(), |a, &v| a + v) / T::lit(tail as f64);
    let trivial = max_p < tol.p_trivial;
    let converged = fit.is_some_and(|f| f.r2 >= tol.min_r2 || f.rms <= tol.max_rms);
    let speed = fit.map_or(T::nan(), |f| f.speed);
    let class = if !converged {
        WaveClass::NotConverged
    } else if trivial {
        WaveClass::TrivialKpp
    } else if speed < T::zero() {
        WaveClass::NontrivialViable
    } else {
        WaveClass::NontrivialNonviable
    };
    WaveReport {
        speed,
        fit_r2: fit.map_or(T::zero(), |f| f.r2),
        class,
        // a trivial wave has P = 0 identically
        p_monotone: trivial || monotonicity_check(&p, Direction::Nondecreasing, tol.monotone_eps),
        n_monotone: monotonicity_check(&n, Direction::Nonincreasing, tol.monotone_eps),
        plateau_n,
        h_table: if trivial { None } else { extract_h(&p, &n) },
        max_p,
        analysis_time: state.t,
        track,
    }
}
