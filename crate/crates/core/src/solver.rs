//! Semi-implicit finite-difference integration on a 1D grid with zero-flux boundaries.
//!
//! Each step evaluates the reaction explicitly and then solves one tridiagonal system per
//! field for diffusion (plus the drift term of the `(p, n)` systems).

use crate::error::{Error, Result};
use crate::models::{
    drive_reaction, frequency_reaction, frequency_reaction_gcd, scalar_reaction,
    wolbachia_reaction, ModelSpec, ScalarKind, N_FLOOR,
};
use crate::scalar::Scalar;
use crate::tridiag::{solve_tridiagonal, FactoredTridiagonal};

/// Uniform grid on `[x_min, x_max]` with `nx` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T> {
    pub x_min: T,
    pub x_max: T,
    pub nx: usize,
}

impl<T: Scalar> Grid1D<T> {
    pub fn new(x_min: T, x_max: T, nx: usize) -> Result<Self> {
        if nx < 3 {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 3 points, got {nx}"
            )));
        }
        if !(x_max > x_min) {
            return Err(Error::InvalidConfig(format!(
                "grid bounds {x_min} >= {x_max}"
            )));
        }
        Ok(Self { x_min, x_max, nx })
    }

    /// Grid whose spacing is as close as possible to `dx`.
    pub fn with_spacing(x_min: T, x_max: T, dx: T) -> Result<Self> {
        if !(dx > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "dx must be positive, got {dx}"
            )));
        }
        let cells = ((x_max - x_min) / dx).round().to_usize().unwrap_or(0);
        Self::new(x_min, x_max, cells + 1)
    }

    #[inline]
    pub fn dx(&self) -> T {
        (self.x_max - self.x_min) / T::lit((self.nx - 1) as f64)
    }

    #[inline]
    pub fn x(&self, i: usize) -> T {
        self.x_min + self.dx() * T::lit(i as f64)
    }

    pub fn points(&self) -> Vec<T> {
        let dx = self.dx();
        (0..self.nx)
            .map(|i| self.x_min + dx * T::lit(i as f64))
            .collect()
    }

    pub fn length(&self) -> T {
        self.x_max - self.x_min
    }
}

/// Solution fields at one time. `u2` is `None` for scalar equations.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState<T> {
    pub t: T,
    pub u1: Vec<T>,
    pub u2: Option<Vec<T>>,
}

impl<T: Scalar> FieldState<T> {
    pub fn field(&self, k: usize) -> Option<&[T]> {
        match k {
            0 => Some(&self.u1),
            1 => self.u2.as_deref(),
            _ => None,
        }
    }
}

/// Sharp interface between two constant states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition<T> {
    pub interface_x: T,
    /// Field values for `x < interface_x`.
    pub left: [T; 2],
    /// Field values for `x >= interface_x`.
    pub right: [T; 2],
}

impl<T: Scalar> InitialCondition<T> {
    pub fn build(&self, grid: &Grid1D<T>, fields: usize) -> FieldState<T> {
        let xs = grid.points();
        let pick = |k: usize| -> Vec<T> {
            xs.iter()
                .map(|&x| {
                    if x < self.interface_x {
                        self.left[k]
                    } else {
                        self.right[k]
                    }
                })
                .collect()
        };
        FieldState {
            t: T::zero(),
            u1: pick(0),
            u2: (fields == 2).then(|| pick(1)),
        }
    }

    /// Same data reflected through `x = (x_min + x_max) / 2`, with sides swapped.
    pub fn mirrored(&self, grid: &Grid1D<T>) -> Self {
        Self {
            interface_x: grid.x_min + grid.x_max - self.interface_x,
            left: self.right,
            right: self.left,
        }
    }
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub grid: Grid1D<T>,
    pub dt: T,
    pub t_final: T,
    pub snapshot_times: Vec<T>,
    pub initial: InitialCondition<T>,
    pub model: ModelSpec<T>,
}

impl<T: Scalar> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        Grid1D::new(self.grid.x_min, self.grid.x_max, self.grid.nx)?;
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final >= T::zero()) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "t_final must be nonnegative, got {}",
                self.t_final
            )));
        }
        if let Some(&t) = self
            .snapshot_times
            .iter()
            .find(|&&t| !(t >= T::zero() && t <= self.t_final))
        {
            return Err(Error::InvalidConfig(format!(
                "snapshot time {t} outside [0, {}]",
                self.t_final
            )));
        }
        for v in self.initial.left.iter().chain(&self.initial.right) {
            if !(*v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "initial value {v} must be finite and >= 0"
                )));
            }
        }
        if self.model.kind().is_scalar() || self.model.kind().is_frequency() {
            let p_max = self.initial.left[0].max(self.initial.right[0]);
            if p_max > T::one() {
                return Err(Error::InvalidConfig(format!(
                    "initial frequency {p_max} exceeds 1"
                )));
            }
        }
        Ok(())
    }

    /// Number of time steps, `round(t_final / dt)`.
    pub fn step_count(&self) -> usize {
        (self.t_final / self.dt).round().to_usize().unwrap_or(0)
    }

    /// Replaces the snapshot schedule with a uniform one, `0, every, 2 every, ...`.
    pub fn with_snapshot_every(mut self, every: T) -> Self {
        self.snapshot_times = uniform_times(self.t_final, every);
        self
    }
}

/// `0, every, 2 every, ..., <= t_final`.
pub fn uniform_times<T: Scalar>(t_final: T, every: T) -> Vec<T> {
    if !(every > T::zero()) {
        return vec![T::zero()];
    }
    let count = (t_final / every + T::lit(1e-9))
        .floor()
        .to_usize()
        .unwrap_or(0);
    (0..=count).map(|k| every * T::lit(k as f64)).collect()
}

/// Default domain, resolution and initial data for a model.
///
/// `[-200, 800]` with `dx = 0.1`, `dt = 0.02`, `T = 200` and a snapshot every time unit.
/// The drive (or infection, or `p = 0.95`) occupies `x >= 0`; wild type fills the rest.
pub fn default_config<T: Scalar>(model: ModelSpec<T>) -> SimConfig<T> {
    let grid = Grid1D {
        x_min: T::lit(-200.0),
        x_max: T::lit(800.0),
        nx: 10001,
    };
    let t_final = T::lit(200.0);
    SimConfig {
        grid,
        dt: T::lit(0.02),
        t_final,
        snapshot_times: uniform_times(t_final, T::one()),
        initial: default_initial(&model),
        model,
    }
}

/// Drive block `(0.95, 0.05)` on the right of `x = 0`, wild type `(0, 1)` on the left,
/// expressed in the model's own variables.
pub fn default_initial<T: Scalar>(model: &ModelSpec<T>) -> InitialCondition<T> {
    let zero = T::zero();
    let one = T::one();
    let drive = T::lit(0.95);
    let (left, right) = match model {
        ModelSpec::DensityDrive { .. } | ModelSpec::WolbachiaDensity { .. } => {
            ([zero, one], [drive, T::lit(0.05)])
        }
        ModelSpec::FrequencyDrive { .. } | ModelSpec::FrequencyDriveGcd { .. } => {
            ([zero, one], [drive, one])
        }
        ModelSpec::ScalarCubic { .. } | ModelSpec::ScalarTsn { .. } => {
            ([zero, zero], [drive, zero])
        }
    };
    InitialCondition {
        interface_x: zero,
        left,
        right,
    }
}

/// Resolution and horizon shared by every run of a sweep or CLI invocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings<T> {
    pub x_min: T,
    pub x_max: T,
    pub dx: T,
    pub dt: T,
    pub t_final: T,
    pub snapshot_every: T,
    pub interface_x: T,
    /// Replaces the model's default left state when set.
    pub left: Option<[T; 2]>,
    /// Replaces the model's default right state when set.
    pub right: Option<[T; 2]>,
}

impl<T: Scalar> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            x_min: T::lit(-200.0),
            x_max: T::lit(800.0),
            dx: T::lit(0.1),
            dt: T::lit(0.02),
            t_final: T::lit(200.0),
            snapshot_every: T::one(),
            interface_x: T::zero(),
            left: None,
            right: None,
        }
    }
}

impl<T: Scalar> SolverSettings<T> {
    pub fn config_for(&self, model: ModelSpec<T>) -> Result<SimConfig<T>> {
        if !(self.snapshot_every > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "snapshot interval must be positive, got {}",
                self.snapshot_every
            )));
        }
        let mut initial = default_initial(&model);
        initial.interface_x = self.interface_x;
        if let Some(left) = self.left {
            initial.left = left;
        }
        if let Some(right) = self.right {
            initial.right = right;
        }
        let config = SimConfig {
            grid: Grid1D::with_spacing(self.x_min, self.x_max, self.dx)?,
            dt: self.dt,
            t_final: self.t_final,
            snapshot_times: uniform_times(self.t_final, self.snapshot_every),
            initial,
            model,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Time stepper holding the factored diffusion matrix and scratch buffers.
#[derive(Debug, Clone)]
pub struct Integrator<T> {
    model: ModelSpec<T>,
    grid: Grid1D<T>,
    dt: T,
    diffusion: FactoredTridiagonal<T>,
    rate1: Vec<T>,
    rate2: Vec<T>,
    velocity: Vec<T>,
    lower: Vec<T>,
    diag: Vec<T>,
    upper: Vec<T>,
    scratch: Vec<T>,
    reaction: bool,
    last_clip: T,
    max_clip: T,
}

impl<T: Scalar> Integrator<T> {
    pub fn new(model: ModelSpec<T>, grid: Grid1D<T>, dt: T) -> Self {
        let n = grid.nx;
        let dx = grid.dx();
        let lambda = dt / (dx * dx);
        let (lower, diag, upper) = neumann_laplacian_system(n, lambda);
        Self {
            model,
            grid,
            dt,
            diffusion: FactoredTridiagonal::new(&lower, &diag, &upper),
            rate1: vec![T::zero(); n],
            rate2: vec![T::zero(); n],
            velocity: vec![T::zero(); n],
            lower,
            diag,
            upper,
            scratch: vec![T::zero(); n],
            reaction: true,
            last_clip: T::zero(),
            max_clip: T::zero(),
        }
    }

    pub fn from_config(config: &SimConfig<T>) -> Self {
        Self::new(config.model, config.grid, config.dt)
    }

    /// Turns the reaction terms off, leaving pure diffusion (and drift).
    pub fn without_reaction(mut self) -> Self {
        self.reaction = false;
        self
    }

    /// Largest amount removed by clipping during the last step.
    pub fn last_clip(&self) -> T {
        self.last_clip
    }

    /// Largest amount removed by clipping in any step so far.
    pub fn max_clip(&self) -> T {
        self.max_clip
    }

    /// Advances `state` by one time step.
    pub fn step(&mut self, state: &mut FieldState<T>) -> Result<()> {
        let n = self.grid.nx;
        if state.u1.len() != n || state.u2.as_ref().is_some_and(|u| u.len() != n) {
            return Err(Error::InvalidConfig(format!(
                "state length does not match grid of {n}"
            )));
        }
        if state.u2.is_none() && self.model.field_count() == 2 {
            return Err(Error::InvalidConfig("model needs two fields".into()));
        }
        if self.reaction {
            self.evaluate_reaction(state)?;
        } else {
            self.rate1.iter_mut().for_each(|v| *v = T::zero());
            self.rate2.iter_mut().for_each(|v| *v = T::zero());
        }
        let dt = self.dt;
        let is_frequency = self.model.kind().is_frequency();
        if is_frequency {
            let density = state.u2.as_deref().expect("two fields checked above");
            self.assemble_drift_system(density);
        }

        for (u, r) in state.u1.iter_mut().zip(&self.rate1) {
            *u += dt * *r;
        }
        if is_frequency {
            solve_tridiagonal(
                &self.lower,
                &self.diag,
                &self.upper,
                &mut state.u1,
                &mut self.scratch,
            );
        } else {
            self.diffusion.solve(&mut state.u1);
        }
        if let Some(u2) = state.u2.as_mut() {
            for (u, r) in u2.iter_mut().zip(&self.rate2) {
                *u += dt * *r;
            }
            self.diffusion.solve(u2);
        }

        state.t += dt;
        self.check_finite(state)?;
        self.clip(state);
        Ok(())
    }

    #[allow(clippy::needless_range_loop)]
    fn evaluate_reaction(&mut self, state: &FieldState<T>) -> Result<()> {
        let floor = T::lit(N_FLOOR);
        match self.model {
            ModelSpec::DensityDrive {
                demography,
                selection,
                s,
            } => {
                let geno = selection.genotype(s);
                let u2 = state.u2.as_deref().unwrap_or(&[]);
                for i in 0..self.grid.nx {
                    let (a, b) = drive_reaction(&demography, &geno, state.u1[i], u2[i]);
                    self.rate1[i] = a;
                    self.rate2[i] = b;
                }
            }
            ModelSpec::FrequencyDrive {
                demography,
                selection,
                s,
            } => {
                let geno = selection.genotype(s);
                let u2 = state.u2.as_deref().unwrap_or(&[]);
                for i in 0..self.grid.nx {
                    let rates =
                        frequency_reaction(&demography, &geno, state.u1[i], u2[i].max(floor))?;
                    self.rate1[i] = rates.rate_p;
                    self.rate2[i] = rates.rate_n;
                }
            }
            ModelSpec::FrequencyDriveGcd { demography, s } => {
                let u2 = state.u2.as_deref().unwrap_or(&[]);
                for i in 0..self.grid.nx {
                    let rates =
                        frequency_reaction_gcd(&demography, s, state.u1[i], u2[i].max(floor))?;
                    self.rate1[i] = rates.rate_p;
                    self.rate2[i] = rates.rate_n;
                }
            }
            ModelSpec::ScalarCubic { s } | ModelSpec::ScalarTsn { s } => {
                let kind = if matches!(self.model, ModelSpec::ScalarCubic { .. }) {
                    ScalarKind::Cubic
                } else {
                    ScalarKind::Tsn
                };
                for i in 0..self.grid.nx {
                    self.rate1[i] = scalar_reaction(kind, s, state.u1[i])?;
                }
            }
            ModelSpec::WolbachiaDensity { demography, params } => {
                let u2 = state.u2.as_deref().unwrap_or(&[]);
                for i in 0..self.grid.nx {
                    let (a, b) = wolbachia_reaction(&params, &demography, state.u1[i], u2[i]);
                    self.rate1[i] = a;
                    self.rate2[i] = b;
                }
            }
        }
        Ok(())
    }

    /// Implicit matrix for `p_t = p_xx + v p_x`, `v = 2 (ln n)_x`.
    ///
    /// Centred differences while the cell Peclet number `|v| dx / 2` stays below 1,
    /// first-order upwinding beyond.
    fn assemble_drift_system(&mut self, density: &[T]) {
        let n = self.grid.nx;
        let dx = self.grid.dx();
        let dt = self.dt;
        let lambda = dt / (dx * dx);
        let floor = T::lit(N_FLOOR);
        let two = T::lit(2.0);
        self.velocity[0] = T::zero();
        self.velocity[n - 1] = T::zero();
        for i in 1..n - 1 {
            self.velocity[i] =
                (density[i + 1].max(floor).ln() - density[i - 1].max(floor).ln()) / dx;
        }
        let (lower, diag, upper) = (&mut self.lower, &mut self.diag, &mut self.upper);
        lower[0] = T::zero();
        diag[0] = T::one() + two * lambda;
        upper[0] = -two * lambda;
        lower[n - 1] = -two * lambda;
        diag[n - 1] = T::one() + two * lambda;
        upper[n - 1] = T::zero();
        for i in 1..n - 1 {
            let v = self.velocity[i];
            lower[i] = -lambda;
            diag[i] = T::one() + two * lambda;
            upper[i] = -lambda;
            if v.abs() * dx / two <= T::one() {
                let c = dt * v / (two * dx);
                lower[i] += c;
                upper[i] -= c;
            } else if v > T::zero() {
                let c = dt * v / dx;
                diag[i] += c;
                upper[i] -= c;
            } else {
                let c = dt * v / dx;
                diag[i] -= c;
                lower[i] += c;
            }
        }
    }

    fn check_finite(&self, state: &FieldState<T>) -> Result<()> {
        for (k, field) in [Some(&state.u1[..]), state.u2.as_deref()]
            .into_iter()
            .enumerate()
        {
            let Some(field) = field else { continue };
            if let Some(cell) = field.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    field: k,
                    cell,
                    x: self.grid.x(cell).to_f64_lossy(),
                    time: state.t.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }

    fn clip(&mut self, state: &mut FieldState<T>) {
        let mut worst = T::zero();
        let upper_bound = if self.model.kind().is_scalar() || self.model.kind().is_frequency() {
            Some(T::one())
        } else {
            None
        };
        for v in state.u1.iter_mut() {
            if *v < T::zero() {
                worst = worst.max(-*v);
                *v = T::zero();
            } else if let Some(cap) = upper_bound {
                if *v > cap {
                    worst = worst.max(*v - cap);
                    *v = cap;
                }
            }
        }
        if let Some(u2) = state.u2.as_mut() {
            for v in u2.iter_mut() {
                if *v < T::zero() {
                    worst = worst.max(-*v);
                    *v = T::zero();
                }
            }
        }
        self.last_clip = worst;
        self.max_clip = self.max_clip.max(worst);
    }
}

/// Rows of `I - dt * Laplacian` with mirrored ghost points at both ends.
fn neumann_laplacian_system<T: Scalar>(n: usize, lambda: T) -> (Vec<T>, Vec<T>, Vec<T>) {
    let two = T::lit(2.0);
    let mut lower = vec![-lambda; n];
    let diag = vec![T::one() + two * lambda; n];
    let mut upper = vec![-lambda; n];
    lower[0] = T::zero();
    upper[0] = -two * lambda;
    lower[n - 1] = -two * lambda;
    upper[n - 1] = T::zero();
    (lower, diag, upper)
}

/// Trapezoid-weighted total of a field, conserved exactly by the diffusion step.
pub fn total_mass<T: Scalar>(field: &[T], dx: T) -> T {
    crate::quadrature::trapezoid(field, dx)
}

/// Output of [`simulate`].
#[derive(Debug, Clone)]
pub struct SimOutput<T> {
    pub snapshots: Vec<FieldState<T>>,
    /// Largest clipping correction applied in any step.
    pub max_clip: T,
}

/// Runs `config` and returns the requested snapshots plus the final state.
///
/// Snapshot times are rounded to the nearest step.
pub fn simulate<T: Scalar>(config: &SimConfig<T>) -> Result<SimOutput<T>> {
    let mut snapshots = Vec::new();
    let max_clip = simulate_with(config, |state| snapshots.push(state.clone()))?;
    Ok(SimOutput {
        snapshots,
        max_clip,
    })
}

/// Runs `config`, handing each snapshot to `observe` instead of storing it.
pub fn simulate_with<T: Scalar>(
    config: &SimConfig<T>,
    mut observe: impl FnMut(&FieldState<T>),
) -> Result<T> {
    config.validate()?;
    let steps = config.step_count();
    let mut marks: Vec<usize> = config
        .snapshot_times
        .iter()
        .map(|&t| (t / config.dt).round().to_usize().unwrap_or(0).min(steps))
        .collect();
    marks.push(steps);
    marks.sort_unstable();
    marks.dedup();

    let mut integrator = Integrator::from_config(config);
    let mut state = config
        .initial
        .build(&config.grid, config.model.field_count());
    let mut next = 0;
    for k in 0..=steps {
        if k > 0 {
            integrator.step(&mut state)?;
            // exact multiple of dt, free of accumulated rounding
            state.t = config.dt * T::lit(k as f64);
        }
        if next < marks.len() && marks[next] == k {
            observe(&state);
            next += 1;
        }
    }
    Ok(integrator.max_clip())
}
