//! Demography, genotype reaction terms and ecological predicates.
//!
//! Densities are normalised so that the wild-type carrying capacity is 1 and
//! `min D = 1` on `[0, 1]`. Every function here is pure.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Total density below which frequency ratios use `n_floor` as denominator.
pub const N_FLOOR: f64 = 1e-12;

/// Number of uniform pre-scan points used by the Allee carrying-capacity search.
pub const CAPACITY_SCAN_POINTS: usize = 10_000;

/// Bisection tolerance of the carrying-capacity search.
pub const CAPACITY_TOL: f64 = 1e-12;

/// Closed-form per-capita birth and death rate families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DemographyKind {
    /// `B(n) = r(1-n) + 1`, `D(n) = 1`.
    LogisticBirth,
    /// `B(n) = max(r(1-n)(n-a) + 1, 0)`, `D(n) = 1`.
    AlleeBirth,
    /// `B(n) = r + 1`, `D(n) = 1 + rn`.
    LogisticDeath,
    /// `B(n) = r + 1`, `D(n) = 1 + r + r(n-1)(n-a)`.
    AlleeDeath,
}

impl DemographyKind {
    pub fn has_allee(self) -> bool {
        matches!(self, Self::AlleeBirth | Self::AlleeDeath)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::LogisticBirth => "logistic-b",
            Self::AlleeBirth => "allee-b",
            Self::LogisticDeath => "logistic-d",
            Self::AlleeDeath => "allee-d",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "logistic-b" | "logistic" => Some(Self::LogisticBirth),
            "allee-b" => Some(Self::AlleeBirth),
            "logistic-d" => Some(Self::LogisticDeath),
            "allee-d" => Some(Self::AlleeDeath),
            _ => None,
        }
    }
}

/// Birth/death pair with the wild-type intrinsic growth rate `r` and Allee threshold `a`.
///
/// `a` is ignored by the logistic families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemographySpec<T> {
    pub kind: DemographyKind,
    pub r: T,
    pub a: T,
}

impl<T: Scalar> DemographySpec<T> {
    pub fn logistic(r: T) -> Self {
        Self {
            kind: DemographyKind::LogisticBirth,
            r,
            a: T::zero(),
        }
    }

    pub fn allee_birth(r: T, a: T) -> Self {
        Self {
            kind: DemographyKind::AlleeBirth,
            r,
            a,
        }
    }

    pub fn logistic_death(r: T) -> Self {
        Self {
            kind: DemographyKind::LogisticDeath,
            r,
            a: T::zero(),
        }
    }

    pub fn allee_death(r: T, a: T) -> Self {
        Self {
            kind: DemographyKind::AlleeDeath,
            r,
            a,
        }
    }

    pub fn with_r(self, r: T) -> Self {
        Self { r, ..self }
    }

    /// Per-capita birth rate `B(n)`.
    #[inline]
    pub fn birth(&self, n: T) -> T {
        let one = T::one();
        match self.kind {
            DemographyKind::LogisticBirth => self.r * (one - n) + one,
            DemographyKind::AlleeBirth => (self.r * (one - n) * (n - self.a) + one).max(T::zero()),
            DemographyKind::LogisticDeath | DemographyKind::AlleeDeath => self.r + one,
        }
    }

    /// Per-capita death rate `D(n)`.
    #[inline]
    pub fn death(&self, n: T) -> T {
        let one = T::one();
        match self.kind {
            DemographyKind::LogisticBirth | DemographyKind::AlleeBirth => one,
            DemographyKind::LogisticDeath => one + self.r * n,
            DemographyKind::AlleeDeath => one + self.r + self.r * (n - one) * (n - self.a),
        }
    }

    /// Density where the quadratic Allee factor `(1-n)(n-a)` peaks.
    fn allee_vertex(&self) -> T {
        (T::one() + self.a) / T::lit(2.0)
    }
}

/// Free function form of [`DemographySpec::birth`].
pub fn birth_rate<T: Scalar>(demo: &DemographySpec<T>, n: T) -> T {
    demo.birth(n)
}

/// Free function form of [`DemographySpec::death`].
pub fn death_rate<T: Scalar>(demo: &DemographySpec<T>, n: T) -> T {
    demo.death(n)
}

/// Relative juvenile survival, gamete fecundity and death rate of the drive homozygote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenotypeParams<T> {
    pub omega_d: T,
    pub beta_d: T,
    pub death_d: T,
}

impl<T: Scalar> GenotypeParams<T> {
    /// Selection on survival: `(1-s, 1, 1)`.
    pub fn survival(s: T) -> Self {
        Self {
            omega_d: T::one() - s,
            beta_d: T::one(),
            death_d: T::one(),
        }
    }

    /// Selection on fecundity: `(1, 1-s, 1)`.
    pub fn fecundity(s: T) -> Self {
        Self {
            omega_d: T::one(),
            beta_d: T::one() - s,
            death_d: T::one(),
        }
    }

    /// Multiplicative factor on `B` in the growth rate of a pure drive population.
    pub fn drive_growth_factor(&self) -> T {
        self.omega_d * self.beta_d * self.beta_d / self.death_d
    }
}

/// Which fitness component the drive cost acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selection {
    Survival,
    Fecundity,
}

impl Selection {
    pub fn name(self) -> &'static str {
        match self {
            Self::Survival => "survival",
            Self::Fecundity => "fecundity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "survival" => Some(Self::Survival),
            "fecundity" => Some(Self::Fecundity),
            _ => None,
        }
    }

    pub fn genotype<T: Scalar>(self, s: T) -> GenotypeParams<T> {
        match self {
            Self::Survival => GenotypeParams::survival(s),
            Self::Fecundity => GenotypeParams::fecundity(s),
        }
    }
}

/// Cytoplasmic-incompatibility parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WolbachiaParams<T> {
    /// Fertility factor of infected mothers.
    pub f_w: T,
    /// Hatching factor of crosses between infected fathers and uninfected mothers.
    pub omega_h: T,
}

/// Tag naming the dynamical system without its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemKind {
    DensityDrive,
    FrequencyDrive,
    FrequencyDriveGcd,
    ScalarCubic,
    ScalarTsn,
    WolbachiaDensity,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::DensityDrive => "density",
            Self::FrequencyDrive => "frequency",
            Self::FrequencyDriveGcd => "frequency-gcd",
            Self::ScalarCubic => "cubic",
            Self::ScalarTsn => "tsn",
            Self::WolbachiaDensity => "wolbachia",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "density" => Some(Self::DensityDrive),
            "frequency" => Some(Self::FrequencyDrive),
            "frequency-gcd" | "gcd" => Some(Self::FrequencyDriveGcd),
            "cubic" => Some(Self::ScalarCubic),
            "tsn" => Some(Self::ScalarTsn),
            "wolbachia" => Some(Self::WolbachiaDensity),
            _ => None,
        }
    }

    pub fn is_scalar(self) -> bool {
        matches!(self, Self::ScalarCubic | Self::ScalarTsn)
    }

    /// True for systems integrated in `(p, n)` variables.
    pub fn is_frequency(self) -> bool {
        matches!(self, Self::FrequencyDrive | Self::FrequencyDriveGcd)
    }
}

/// Dynamical system to integrate, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec<T> {
    /// `(n_D, n_O)` densities.
    DensityDrive {
        demography: DemographySpec<T>,
        selection: Selection,
        s: T,
    },
    /// `(p, n)` with the opposing advection term.
    FrequencyDrive {
        demography: DemographySpec<T>,
        selection: Selection,
        s: T,
    },
    /// `(p, n)` where the `p` reaction is the density-independent rational term.
    FrequencyDriveGcd { demography: DemographySpec<T>, s: T },
    /// Scalar cubic bistable equation for `p`.
    ScalarCubic { s: T },
    /// Scalar equation for `p` with the rational reaction term.
    ScalarTsn { s: T },
    /// `(n_w, n_s)` infected and uninfected densities.
    WolbachiaDensity {
        demography: DemographySpec<T>,
        params: WolbachiaParams<T>,
    },
}

impl<T: Scalar> ModelSpec<T> {
    pub fn density_drive(s: T, r: T) -> Self {
        Self::DensityDrive {
            demography: DemographySpec::logistic(r),
            selection: Selection::Survival,
            s,
        }
    }

    /// Assembles a model of `kind`, ignoring the parameters it does not use.
    pub fn build(
        kind: SystemKind,
        demography: DemographySpec<T>,
        selection: Selection,
        s: T,
        wolbachia: WolbachiaParams<T>,
    ) -> Self {
        match kind {
            SystemKind::DensityDrive => Self::DensityDrive {
                demography,
                selection,
                s,
            },
            SystemKind::FrequencyDrive => Self::FrequencyDrive {
                demography,
                selection,
                s,
            },
            SystemKind::FrequencyDriveGcd => Self::FrequencyDriveGcd { demography, s },
            SystemKind::ScalarCubic => Self::ScalarCubic { s },
            SystemKind::ScalarTsn => Self::ScalarTsn { s },
            SystemKind::WolbachiaDensity => Self::WolbachiaDensity {
                demography,
                params: wolbachia,
            },
        }
    }

    pub fn kind(&self) -> SystemKind {
        match self {
            Self::DensityDrive { .. } => SystemKind::DensityDrive,
            Self::FrequencyDrive { .. } => SystemKind::FrequencyDrive,
            Self::FrequencyDriveGcd { .. } => SystemKind::FrequencyDriveGcd,
            Self::ScalarCubic { .. } => SystemKind::ScalarCubic,
            Self::ScalarTsn { .. } => SystemKind::ScalarTsn,
            Self::WolbachiaDensity { .. } => SystemKind::WolbachiaDensity,
        }
    }

    pub fn demography(&self) -> Option<DemographySpec<T>> {
        match *self {
            Self::DensityDrive { demography, .. }
            | Self::FrequencyDrive { demography, .. }
            | Self::FrequencyDriveGcd { demography, .. }
            | Self::WolbachiaDensity { demography, .. } => Some(demography),
            Self::ScalarCubic { .. } | Self::ScalarTsn { .. } => None,
        }
    }

    /// Fitness cost of the drive, when the system has one.
    pub fn cost(&self) -> Option<T> {
        match *self {
            Self::DensityDrive { s, .. }
            | Self::FrequencyDrive { s, .. }
            | Self::FrequencyDriveGcd { s, .. }
            | Self::ScalarCubic { s }
            | Self::ScalarTsn { s } => Some(s),
            Self::WolbachiaDensity { .. } => None,
        }
    }

    pub fn selection(&self) -> Option<Selection> {
        match *self {
            Self::DensityDrive { selection, .. } | Self::FrequencyDrive { selection, .. } => {
                Some(selection)
            }
            Self::FrequencyDriveGcd { .. } => Some(Selection::Survival),
            _ => None,
        }
    }

    /// Number of solution fields (1 for scalar equations).
    pub fn field_count(&self) -> usize {
        if self.kind().is_scalar() {
            1
        } else {
            2
        }
    }

    /// Density the invader settles at behind a successful front.
    pub fn invader_capacity(&self) -> T {
        match *self {
            Self::DensityDrive {
                demography,
                selection,
                s,
            }
            | Self::FrequencyDrive {
                demography,
                selection,
                s,
            } => carrying_capacity(&demography, selection.genotype(s).drive_growth_factor()),
            Self::FrequencyDriveGcd { demography, s } => {
                carrying_capacity(&demography, T::one() - s)
            }
            Self::WolbachiaDensity { demography, params } => {
                carrying_capacity(&demography, params.f_w)
            }
            Self::ScalarCubic { .. } | Self::ScalarTsn { .. } => T::one(),
        }
    }
}

#[inline]
fn regularized<T: Scalar>(n: T) -> T {
    n.max(T::lit(N_FLOOR))
}

/// Reaction terms `(rate_D, rate_O)` of the two-genotype density system.
///
/// `rate_D = n_D (omega beta B (2 n_O + beta n_D) / n - d D)` and
/// `rate_O = n_O (B n_O / n - D)`, with `n` floored at [`N_FLOOR`].
#[inline]
pub fn drive_reaction<T: Scalar>(
    demo: &DemographySpec<T>,
    geno: &GenotypeParams<T>,
    nd: T,
    no: T,
) -> (T, T) {
    let n = nd + no;
    let denom = regularized(n);
    let b = demo.birth(n);
    let d = demo.death(n);
    let two = T::lit(2.0);
    let rate_d = nd
        * (geno.omega_d * geno.beta_d * b * (two * no + geno.beta_d * nd) / denom
            - geno.death_d * d);
    let rate_o = no * (b * no / denom - d);
    (rate_d, rate_o)
}

/// Reaction part of the `(p, n)` formulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyRates<T> {
    pub rate_p: T,
    pub rate_n: T,
    /// Coefficient multiplying `dn/dx * dp/dx` in the `p` equation, `2 / n`.
    pub advection: T,
}

/// `(p, n)` reaction terms of the drive system for arbitrary genotype parameters.
///
/// With survival selection this is `B p s (1-p)(p - (2s-1)/s)` and
/// `n((1 - s + s(1-p)^2) B - D)`.
pub fn frequency_reaction<T: Scalar>(
    demo: &DemographySpec<T>,
    geno: &GenotypeParams<T>,
    p: T,
    n: T,
) -> Result<FrequencyRates<T>> {
    if !(n > T::zero()) {
        return Err(Error::NonPositiveDensity(n.to_f64_lossy()));
    }
    let (growth_d, growth_o) = per_capita_growth(demo, geno, p, n);
    let q = T::one() - p;
    Ok(FrequencyRates {
        rate_p: p * q * (growth_d - growth_o),
        rate_n: n * (p * growth_d + q * growth_o),
        advection: T::lit(2.0) / n,
    })
}

/// Per-capita growth rates of the drive and wild-type alleles at frequency `p`.
#[inline]
fn per_capita_growth<T: Scalar>(
    demo: &DemographySpec<T>,
    geno: &GenotypeParams<T>,
    p: T,
    n: T,
) -> (T, T) {
    let b = demo.birth(n);
    let d = demo.death(n);
    let q = T::one() - p;
    let growth_d =
        geno.omega_d * geno.beta_d * b * (T::lit(2.0) * q + geno.beta_d * p) - geno.death_d * d;
    let growth_o = b * q - d;
    (growth_d, growth_o)
}

/// `(p, n)` reaction terms where the `p` equation uses the rational density-independent term.
pub fn frequency_reaction_gcd<T: Scalar>(
    demo: &DemographySpec<T>,
    s: T,
    p: T,
    n: T,
) -> Result<FrequencyRates<T>> {
    let survival = frequency_reaction(demo, &GenotypeParams::survival(s), p, n)?;
    Ok(FrequencyRates {
        rate_p: scalar_reaction(ScalarKind::Tsn, s, p)?,
        ..survival
    })
}

/// The two density-independent scalar equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    Cubic,
    Tsn,
}

/// Scalar bistable reaction: `s p (1-p)(p - (2s-1)/s)`, divided by `1 - s + s(1-p)^2` for `Tsn`.
#[inline]
pub fn scalar_reaction<T: Scalar>(kind: ScalarKind, s: T, p: T) -> Result<T> {
    let one = T::one();
    // s (p - (2s-1)/s) written without dividing by s
    let cubic = p * (one - p) * (s * p - (T::lit(2.0) * s - one));
    match kind {
        ScalarKind::Cubic => Ok(cubic),
        ScalarKind::Tsn => {
            let denom = tsn_denominator(s, p);
            if denom == T::zero() {
                return Err(Error::ZeroDenominator {
                    s: s.to_f64_lossy(),
                    p: p.to_f64_lossy(),
                });
            }
            Ok(cubic / denom)
        }
    }
}

#[inline]
pub(crate) fn tsn_denominator<T: Scalar>(s: T, p: T) -> T {
    let q = T::one() - p;
    T::one() - s + s * q * q
}

/// Infected / uninfected reaction terms of the Wolbachia system.
#[inline]
pub fn wolbachia_reaction<T: Scalar>(
    params: &WolbachiaParams<T>,
    demo: &DemographySpec<T>,
    nw: T,
    ns: T,
) -> (T, T) {
    let n = nw + ns;
    let denom = regularized(n);
    let fw = nw / denom;
    let fs = ns / denom;
    let b = demo.birth(n);
    let d = demo.death(n);
    let rate_w = (fw * fw * params.f_w + fw * fs * params.f_w) * b * n - d * nw;
    let rate_s = (fs * fs + fw * fs * params.omega_h) * b * n - d * ns;
    (rate_w, rate_s)
}

/// Largest `n` in `[0, 1]` with `factor B(n) - D(n) >= 0`, or `None` when negative everywhere.
pub fn capacity_root<T: Scalar>(demo: &DemographySpec<T>, factor: T) -> Option<T> {
    let one = T::one();
    let zero = T::zero();
    match demo.kind {
        DemographyKind::LogisticBirth => {
            // factor (r(1-n) + 1) - 1 is nonincreasing in n
            let g0 = factor * (demo.r + one) - one;
            if g0 < zero {
                return None;
            }
            if factor * demo.r == zero {
                return Some(if factor >= one { one } else { zero });
            }
            Some(
                (one - (one - factor) / (factor * demo.r))
                    .max(zero)
                    .min(one),
            )
        }
        DemographyKind::LogisticDeath => {
            let g0 = factor * (demo.r + one) - one;
            if g0 < zero {
                return None;
            }
            if demo.r == zero {
                return Some(one);
            }
            Some((g0 / demo.r).max(zero).min(one))
        }
        DemographyKind::AlleeBirth | DemographyKind::AlleeDeath => scan_capacity(demo, factor),
    }
}

fn scan_capacity<T: Scalar>(demo: &DemographySpec<T>, factor: T) -> Option<T> {
    let zero = T::zero();
    let growth = |n: T| factor * demo.birth(n) - demo.death(n);
    let step = T::one() / T::lit(CAPACITY_SCAN_POINTS as f64);
    let vertex = demo.allee_vertex();

    let mut rightmost: Option<(T, T)> = None;
    for k in (0..=CAPACITY_SCAN_POINTS).rev() {
        let n = T::lit(k as f64) * step;
        if growth(n) >= zero {
            let upper = if k == CAPACITY_SCAN_POINTS {
                None
            } else {
                Some(T::lit((k + 1) as f64) * step)
            };
            rightmost = Some((n, upper.unwrap_or(n)));
            break;
        }
    }
    // A narrow positive bump around the quadratic vertex can fall between scan points.
    if vertex > zero && vertex < T::one() && growth(vertex) >= zero {
        let beats_scan = match rightmost {
            None => true,
            Some((lo, _)) => vertex > lo,
        };
        if beats_scan {
            let k = (vertex / step).floor().to_usize().unwrap_or(0) + 1;
            rightmost = Some((vertex, T::lit(k as f64) * step));
        }
    }
    let (mut lo, mut hi) = rightmost?;
    if hi <= lo {
        return Some(lo);
    }
    let tol = T::lit(CAPACITY_TOL);
    while hi - lo > tol {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if growth(mid) >= zero {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Carrying capacity under a multiplicative factor on `B` (1 wild type, `1-s` drive, `f_w` Wolbachia).
pub fn carrying_capacity<T: Scalar>(demo: &DemographySpec<T>, factor: T) -> T {
    capacity_root(demo, factor).unwrap_or_else(T::zero)
}

/// Closed-form eradication condition `max_[0,1] ((1-s) B - D) < 0` for each demography family.
pub fn is_eradication_drive<T: Scalar>(demo: &DemographySpec<T>, s: T) -> bool {
    let one = T::one();
    let zero = T::zero();
    if s <= zero {
        return false;
    }
    if s >= one {
        return true;
    }
    let r = demo.r;
    let four = T::lit(4.0);
    let gap = (one - demo.a) * (one - demo.a);
    match demo.kind {
        DemographyKind::LogisticBirth | DemographyKind::LogisticDeath => r < s / (one - s),
        DemographyKind::AlleeBirth => r < four * s / ((one - s) * gap),
        DemographyKind::AlleeDeath => gap <= four * s || r < four * s / (gap - four * s),
    }
}

/// Same predicate as [`is_eradication_drive`], evaluated with the carrying-capacity search.
pub fn is_eradication_drive_by_root<T: Scalar>(demo: &DemographySpec<T>, s: T) -> bool {
    capacity_root(demo, T::one() - s).is_none()
}

/// Unstable interior frequency `(2s-1)/s` for threshold-dependent drives (`s > 1/2`).
pub fn bistability_threshold<T: Scalar>(s: T) -> Option<T> {
    if s <= T::lit(0.5) {
        None
    } else {
        Some((T::lit(2.0) * s - T::one()) / s)
    }
}

/// Interior infection frequency `(1 - f_w) / (1 - omega_H)` when admissible.
pub fn wolbachia_equilibrium<T: Scalar>(params: &WolbachiaParams<T>) -> Result<Option<T>> {
    let one = T::one();
    if params.omega_h == one {
        return Err(Error::DegenerateWolbachia);
    }
    if params.omega_h <= params.f_w {
        Ok(Some((one - params.f_w) / (one - params.omega_h)))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn all_kinds(r: f64, a: f64) -> [DemographySpec<f64>; 4] {
        [
            DemographySpec::logistic(r),
            DemographySpec::allee_birth(r, a),
            DemographySpec::logistic_death(r),
            DemographySpec::allee_death(r, a),
        ]
    }

    #[test]
    fn birth_rate_examples() {
        assert_abs_diff_eq!(
            DemographySpec::logistic(10.0 / 9.0).birth(1.0),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(DemographySpec::logistic(2.0).birth(0.0), 3.0);
        assert_abs_diff_eq!(
            DemographySpec::allee_birth(1.0, 0.2).birth(0.0),
            0.8,
            epsilon = 1e-15
        );
        // strong Allee clamp
        assert_eq!(DemographySpec::allee_birth(10.0, 0.5).birth(0.0), 0.0);
        assert_eq!(DemographySpec::logistic_death(3.0).birth(0.7), 4.0);
    }

    #[test]
    fn death_rate_examples() {
        assert_eq!(DemographySpec::logistic(5.0).death(0.3), 1.0);
        assert_eq!(DemographySpec::logistic_death(2.0).death(0.5), 2.0);
        assert_eq!(DemographySpec::allee_death(1.0, 0.2).death(1.0), 2.0);
    }

    #[test]
    fn normalisation_on_grid() {
        for &(r, a) in &[
            (0.1, -0.5),
            (1.0, 0.2),
            (5.0, 0.0),
            (12.0, 0.9),
            (3.0, -0.99),
        ] {
            for demo in all_kinds(r, a) {
                for k in 0..100 {
                    let n = k as f64 / 99.0;
                    assert!(demo.birth(n) >= 0.0);
                    assert!(demo.death(n) >= 1.0 - 1e-12, "{demo:?} n={n}");
                }
                assert_abs_diff_eq!(demo.birth(1.0), demo.death(1.0), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn drive_reaction_examples() {
        let demo = DemographySpec::logistic(10.0 / 9.0);
        let geno = GenotypeParams::survival(0.5);
        let (rd, ro) = drive_reaction(&demo, &geno, 0.0, 1.0);
        assert_eq!((rd, ro), (0.0, 0.0));
        let (rd, ro) = drive_reaction(&demo, &geno, 0.1, 0.0);
        assert_abs_diff_eq!(rd, 0.0, epsilon = 1e-15);
        assert_eq!(ro, 0.0);
    }

    /// Direct transcription of the reduced two-genotype system, kept apart from the implementation.
    fn reduced_system(b: f64, d: f64, w: f64, beta: f64, dd: f64, nd: f64, no: f64) -> (f64, f64) {
        let n = nd + no;
        (
            nd * (w * beta * b * (2.0 * no + beta * nd) / n - dd * d),
            no * (b * no / n - d),
        )
    }

    #[test]
    fn fecundity_lethal_against_transcription() {
        let demo = DemographySpec::logistic(2.0);
        let geno = GenotypeParams::fecundity(1.0);
        let points = [
            (0.3, 0.6),
            (0.05, 0.9),
            (0.5, 0.2),
            (0.8, 0.1),
            (0.01, 0.01),
        ];
        for &(nd, no) in &points {
            let n = nd + no;
            let (rd, ro) = drive_reaction(&demo, &geno, nd, no);
            let (ed, eo) = reduced_system(2.0 * (1.0 - n) + 1.0, 1.0, 1.0, 0.0, 1.0, nd, no);
            assert_abs_diff_eq!(rd, ed, epsilon = 1e-14);
            assert_abs_diff_eq!(ro, eo, epsilon = 1e-14);
            assert!(rd <= 0.0);
        }
    }

    #[test]
    fn frequency_reaction_examples() {
        let demo = DemographySpec::logistic(10.0 / 9.0);
        let rates = frequency_reaction(&demo, &GenotypeParams::survival(0.5), 0.0, 0.4).unwrap();
        assert_eq!(rates.rate_p, 0.0);
        let rates =
            frequency_reaction(&demo, &GenotypeParams::survival(0.7), 4.0 / 7.0, 1.0).unwrap();
        assert_abs_diff_eq!(rates.rate_p, 0.0, epsilon = 1e-15);
        let rates = frequency_reaction(&demo, &GenotypeParams::survival(0.5), 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(rates.rate_n, -0.5, epsilon = 1e-15);
        assert_eq!(rates.advection, 2.0);
        assert!(frequency_reaction(&demo, &GenotypeParams::survival(0.5), 0.5, 0.0).is_err());
    }

    #[test]
    fn frequency_reaction_matches_closed_form_for_survival() {
        let demo = DemographySpec::logistic(3.0);
        for &(s, p, n) in &[
            (0.3, 0.2, 0.9),
            (0.7, 0.8, 0.3),
            (0.55, 0.5, 0.5),
            (0.9, 0.99, 0.01),
        ] {
            let b: f64 = 3.0 * (1.0 - n) + 1.0;
            let theta = (2.0 * s - 1.0) / s;
            let rates = frequency_reaction(&demo, &GenotypeParams::survival(s), p, n).unwrap();
            assert_abs_diff_eq!(
                rates.rate_p,
                b * p * s * (1.0 - p) * (p - theta),
                epsilon = 1e-14
            );
            let growth = (1.0 - s + s * (1.0 - p) * (1.0 - p)) * b - 1.0;
            assert_abs_diff_eq!(rates.rate_n, n * growth, epsilon = 1e-14);
        }
    }

    #[test]
    fn scalar_reaction_examples() {
        assert_abs_diff_eq!(
            scalar_reaction(ScalarKind::Cubic, 2.0 / 3.0, 0.5).unwrap(),
            0.0,
            epsilon = 1e-16
        );
        assert_abs_diff_eq!(
            scalar_reaction(ScalarKind::Tsn, 0.5, 0.5).unwrap(),
            0.1,
            epsilon = 1e-15
        );
        assert_eq!(scalar_reaction(ScalarKind::Cubic, 0.5, 0.0).unwrap(), 0.0);
        assert_eq!(scalar_reaction(ScalarKind::Cubic, 0.5, 1.0).unwrap(), 0.0);
        assert!(matches!(
            scalar_reaction(ScalarKind::Tsn, 1.0, 1.0),
            Err(Error::ZeroDenominator { .. })
        ));
    }

    #[test]
    fn gcd_variant_swaps_only_the_p_reaction() {
        let demo = DemographySpec::logistic(2.0);
        let plain = frequency_reaction(&demo, &GenotypeParams::survival(0.6), 0.3, 0.7).unwrap();
        let gcd = frequency_reaction_gcd(&demo, 0.6, 0.3, 0.7).unwrap();
        assert_eq!(plain.rate_n, gcd.rate_n);
        assert_eq!(
            gcd.rate_p,
            scalar_reaction(ScalarKind::Tsn, 0.6, 0.3).unwrap()
        );
    }

    /// Direct transcription of the infected/uninfected system.
    fn wolbachia_transcription(fw: f64, wh: f64, r: f64, nw: f64, ns: f64) -> (f64, f64) {
        let n = nw + ns;
        let b = r * (1.0 - n) + 1.0;
        let (x, y) = (nw / n, ns / n);
        (
            (x * x * fw + x * y * fw) * b * n - nw,
            (y * y + x * y * wh) * b * n - ns,
        )
    }

    #[test]
    fn wolbachia_reaction_examples() {
        let demo = DemographySpec::logistic(1.0);
        let neutral = WolbachiaParams {
            f_w: 1.0,
            omega_h: 1.0,
        };
        let (rw, rs) = wolbachia_reaction(&neutral, &demo, 0.5, 0.5);
        assert_abs_diff_eq!(rw, rs, epsilon = 1e-15);

        let params = WolbachiaParams {
            f_w: 0.9,
            omega_h: 0.8,
        };
        assert_eq!(wolbachia_reaction(&params, &demo, 0.0, 1.0), (0.0, 0.0));

        let demo = DemographySpec::logistic(2.0);
        for &(nw, ns) in &[(0.3, 0.3), (0.1, 0.7), (0.9, 0.05), (0.02, 0.4), (0.5, 0.5)] {
            let (rw, rs) = wolbachia_reaction(&params, &demo, nw, ns);
            let (ew, es) = wolbachia_transcription(0.9, 0.8, 2.0, nw, ns);
            assert_abs_diff_eq!(rw, ew, epsilon = 1e-14);
            assert_abs_diff_eq!(rs, es, epsilon = 1e-14);
        }
    }

    #[test]
    fn carrying_capacity_examples() {
        let demo = DemographySpec::logistic(10.0 / 9.0);
        assert_abs_diff_eq!(carrying_capacity(&demo, 0.5), 0.1, epsilon = 1e-12);
        for demo in all_kinds(2.5, 0.2) {
            assert_abs_diff_eq!(carrying_capacity(&demo, 1.0), 1.0, epsilon = 1e-10);
        }
        assert_eq!(carrying_capacity(&DemographySpec::logistic(0.5), 0.3), 0.0);
    }

    #[test]
    fn allee_capacity_matches_quadratic_root() {
        // (1-s)(r(1-n)(n-a)+1) = 1 has its largest root in closed form
        let (r, a, s): (f64, f64, f64) = (6.0, 0.2, 0.3);
        let demo = DemographySpec::allee_birth(r, a);
        let c = s / ((1.0 - s) * r);
        // (1-n)(n-a) = c  <=>  n^2 - (1+a) n + a + c = 0
        let disc = ((1.0 + a) * (1.0 + a) - 4.0 * (a + c)).sqrt();
        let root = ((1.0 + a) + disc) / 2.0;
        assert_abs_diff_eq!(carrying_capacity(&demo, 1.0 - s), root, epsilon = 1e-10);
    }

    #[test]
    fn eradication_examples() {
        assert!(is_eradication_drive(&DemographySpec::logistic(0.5), 0.7));
        assert!(!is_eradication_drive(
            &DemographySpec::logistic(10.0 / 9.0),
            0.5
        ));
        for demo in all_kinds(0.01, 0.5) {
            assert!(!is_eradication_drive(&demo, 0.0));
            assert!(!is_eradication_drive_by_root(&demo, 0.0));
        }
    }

    #[test]
    fn eradication_closed_forms_agree_with_root_finder() {
        for &a in &[-0.2, 0.2] {
            for i in 0..50 {
                let s = 0.01 + 0.98 * i as f64 / 49.0;
                for j in 0..50 {
                    let r = 0.1 + 11.9 * j as f64 / 49.0;
                    for demo in all_kinds(r, a) {
                        assert_eq!(
                            is_eradication_drive(&demo, s),
                            is_eradication_drive_by_root(&demo, s),
                            "{demo:?} s={s}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn bistability_threshold_examples() {
        assert_eq!(bistability_threshold(0.5), None);
        assert_abs_diff_eq!(
            bistability_threshold(0.7).unwrap(),
            4.0 / 7.0,
            epsilon = 1e-15
        );
        assert_eq!(bistability_threshold(1.0), Some(1.0));
    }

    #[test]
    fn wolbachia_equilibrium_examples() {
        let eq = |f_w, omega_h| wolbachia_equilibrium(&WolbachiaParams { f_w, omega_h });
        assert_eq!(eq(1.0, 0.3).unwrap(), Some(0.0));
        assert_abs_diff_eq!(eq(0.9, 0.8).unwrap().unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(eq(0.5, 0.6).unwrap(), None);
        assert_eq!(eq(0.5, 1.0), Err(Error::DegenerateWolbachia));
    }

    #[test]
    fn single_precision_agrees() {
        let d32 = DemographySpec::<f32>::logistic(10.0 / 9.0);
        let d64 = DemographySpec::<f64>::logistic(10.0 / 9.0);
        let (a32, b32) = drive_reaction(&d32, &GenotypeParams::survival(0.5f32), 0.3, 0.4);
        let (a64, b64) = drive_reaction(&d64, &GenotypeParams::survival(0.5), 0.3, 0.4);
        assert!((a32 as f64 - a64).abs() < 1e-6 && (b32 as f64 - b64).abs() < 1e-6);
        assert!((carrying_capacity(&d32, 0.5) as f64 - 0.1).abs() < 1e-6);
    }

    fn demography_strategy() -> impl Strategy<Value = DemographySpec<f64>> {
        (0usize..4, 0.05f64..12.0, -0.95f64..0.95).prop_map(|(k, r, a)| all_kinds(r, a)[k])
    }

    proptest! {
        #[test]
        fn density_and_frequency_forms_agree(
            demo in demography_strategy(),
            s in 0.0f64..1.0,
            fecundity in any::<bool>(),
            nd in 1e-6f64..1.5,
            no in 1e-6f64..1.5,
        ) {
            let geno = if fecundity { GenotypeParams::fecundity(s) } else { GenotypeParams::survival(s) };
            let (rd, ro) = drive_reaction(&demo, &geno, nd, no);
            let n = nd + no;
            let p = nd / n;
            let rates = frequency_reaction(&demo, &geno, p, n).unwrap();
            // chain rule: dp/dt = (rd n - nd (rd + ro)) / n^2
            let dp = (rd * n - nd * (rd + ro)) / (n * n);
            prop_assert!((dp - rates.rate_p).abs() < 1e-10);
            prop_assert!((rd + ro - rates.rate_n).abs() < 1e-10);
        }

        #[test]
        fn cubic_is_tsn_numerator(s in 0.0f64..0.999, p in 0.0f64..=1.0) {
            let cubic = scalar_reaction(ScalarKind::Cubic, s, p).unwrap();
            let tsn = scalar_reaction(ScalarKind::Tsn, s, p).unwrap();
            prop_assert!((tsn * tsn_denominator(s, p) - cubic).abs() < 1e-14);
        }
    }

    #[test]
    fn capacity_nonincreasing_in_cost() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let k = rng.random_range(0..4);
            let demo = all_kinds(rng.random_range(0.05..12.0), rng.random_range(-0.95..0.95))[k];
            let mut costs: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..1.0)).collect();
            costs.sort_by(f64::total_cmp);
            let caps: Vec<f64> = costs
                .iter()
                .map(|&s| carrying_capacity(&demo, 1.0 - s))
                .collect();
            for w in caps.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{demo:?}: {caps:?}");
            }
        }
    }
}
