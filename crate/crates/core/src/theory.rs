//! Closed-form results for the logistic drive system: trivial-wave region, sign clauses
//! for nontrivial waves, reference speeds and the spreading bound.

use std::fmt;

use crate::error::{Error, Result};
use crate::models::{scalar_reaction, ScalarKind};
use crate::quadrature::simpson_fn;

/// Inequality slack below which a clause boundary counts as a tie.
pub const TIE_TOL: f64 = 1e-12;

/// Predicted sign of a nontrivial wave speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnalyticSign {
    Negative,
    Positive,
    Unknown,
}

impl AnalyticSign {
    pub fn name(self) -> &'static str {
        match self {
            Self::Negative => "Negative",
            Self::Positive => "Positive",
            Self::Unknown => "Unknown",
        }
    }

    /// Whether a measured speed has this sign; `None` for [`AnalyticSign::Unknown`].
    pub fn matches(self, speed: f64) -> Option<bool> {
        match self {
            Self::Negative => Some(speed < 0.0),
            Self::Positive => Some(speed > 0.0),
            Self::Unknown => None,
        }
    }
}

impl fmt::Display for AnalyticSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sign clauses, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Clause {
    C1a,
    C1b,
    C1c,
    C2a,
    C2b,
    None,
}

impl Clause {
    pub const ORDERED: [Clause; 5] = [Self::C1a, Self::C1b, Self::C1c, Self::C2a, Self::C2b];

    pub fn label(self) -> &'static str {
        match self {
            Self::C1a => "1a",
            Self::C1b => "1b",
            Self::C1c => "1c",
            Self::C2a => "2a",
            Self::C2b => "2b",
            Self::None => "none",
        }
    }

    pub fn sign(self) -> AnalyticSign {
        match self {
            Self::C1a | Self::C1b | Self::C1c => AnalyticSign::Negative,
            Self::C2a | Self::C2b => AnalyticSign::Positive,
            Self::None => AnalyticSign::Unknown,
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Known bounds on the wave speed; `None` means unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpeedBounds {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl fmt::Display for SpeedBounds {
    /// `lower..upper` with `-inf` / `inf` for missing sides.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lower {
            Some(v) => write!(f, "{v:.16e}")?,
            None => f.write_str("-inf")?,
        }
        f.write_str("..")?;
        match self.upper {
            Some(v) => write!(f, "{v:.16e}"),
            None => f.write_str("inf"),
        }
    }
}

/// Analytic prediction for one `(s, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticVerdict {
    pub trivial_only: bool,
    pub sign: AnalyticSign,
    pub clause: Clause,
    pub bounds: SpeedBounds,
}

/// `(2s - 1) / (2(1 - s))`, infinite at `s = 1`.
pub fn trivial_threshold(s: f64) -> f64 {
    if s >= 1.0 {
        f64::INFINITY
    } else {
        (2.0 * s - 1.0) / (2.0 * (1.0 - s))
    }
}

/// Every traveling wave is trivial when `s > 1/2` and `0 < r <= (2s-1)/(2(1-s))`.
pub fn trivial_only_region(s: f64, r: f64) -> bool {
    s > 0.5 && r > 0.0 && r <= trivial_threshold(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Truth {
    Holds,
    Fails,
    Tie,
}

/// Truth of `slack >= 0` (or `> 0`), with ties inside [`TIE_TOL`].
fn check(slack: f64) -> Truth {
    if slack.is_nan() {
        Truth::Fails
    } else if slack.abs() < TIE_TOL {
        Truth::Tie
    } else if slack > 0.0 {
        Truth::Holds
    } else {
        Truth::Fails
    }
}

fn all_hold(conditions: &[Truth]) -> Truth {
    if conditions.contains(&Truth::Fails) {
        Truth::Fails
    } else if conditions.contains(&Truth::Tie) {
        Truth::Tie
    } else {
        Truth::Holds
    }
}

fn theta(s: f64) -> f64 {
    (2.0 * s - 1.0) / s
}

/// Lower end of the `r` range in clause 1b.
pub fn clause_1b_lower_bound(s: f64) -> f64 {
    let th3 = theta(s).powi(3);
    let ratio = (1.0 - s) * th3 / (2.0 - 3.0 * s + th3);
    (s / (1.0 - s)) / (1.0 - ratio.powf(0.25))
}

/// Upper end of the `r` range in clause 2b, `s^3(3s-2) / ((2s-1)^3 - s^3(3s-2))`.
pub fn clause_2b_upper_bound(s: f64) -> f64 {
    let a = s.powi(3) * (3.0 * s - 2.0);
    a / ((2.0 * s - 1.0).powi(3) - a)
}

fn clause_truth(clause: Clause, s: f64, r: f64) -> Truth {
    let ratio = s / (1.0 - s);
    match clause {
        Clause::C1a => check(0.5 - s),
        Clause::C1b => all_hold(&[
            check(s - 0.5),
            check(2.0 / 3.0 - s),
            check(r - ratio),
            check(4.0 - r),
            check(r - clause_1b_lower_bound(s)),
        ]),
        Clause::C1c => {
            let m4 = (1.0 - ratio / r).powi(4);
            let lhs = m4 * (2.0 - 3.0 * s);
            let rhs = (r + 1.0 - m4) * theta(s).powi(3);
            all_hold(&[
                check(s - 0.5),
                check(2.0 / 3.0 - s),
                check(r - 4.0),
                check(r - ratio),
                check(lhs - rhs),
            ])
        }
        Clause::C2a => all_hold(&[check(s - 2.0 / 3.0), check(4.0 - r)]),
        Clause::C2b => {
            // r < (3s-2) / (theta^3 - (3s-2)) with the positive denominator cleared
            let slack = (r + 1.0) * (s - 2.0 / 3.0) - r / 3.0 * theta(s).powi(3);
            all_hold(&[check(s - 2.0 / 3.0), check(slack)])
        }
        Clause::None => Truth::Fails,
    }
}

/// Whether `(s, r)` lies strictly inside a clause region.
pub fn clause_holds(clause: Clause, s: f64, r: f64) -> bool {
    clause_truth(clause, s, r) == Truth::Holds
}

/// Sign of a nontrivial wave speed from the first clause that applies (order 1a..2b).
///
/// A tie on the first clause that is not clearly false yields `Unknown`.
pub fn sign_verdict(s: f64, r: f64) -> AnalyticVerdict {
    let trivial_only = trivial_only_region(s, r);
    let mut bounds = SpeedBounds::default();
    if trivial_only {
        bounds.lower = Some(kpp_speed(r));
    }
    for clause in Clause::ORDERED {
        match clause_truth(clause, s, r) {
            Truth::Fails => continue,
            Truth::Tie => break,
            Truth::Holds => {
                if clause == Clause::C1a {
                    bounds.upper = Some(-2.0 * (1.0 - 2.0 * s).sqrt());
                }
                return AnalyticVerdict {
                    trivial_only,
                    sign: clause.sign(),
                    clause,
                    bounds,
                };
            }
        }
    }
    AnalyticVerdict {
        trivial_only,
        sign: AnalyticSign::Unknown,
        clause: Clause::None,
        bounds,
    }
}

/// Speed `(2 - 3s) / sqrt(2s)` of the cubic bistable front with `p = 1` on the left.
pub fn cubic_speed(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::ZeroCost(s));
    }
    Ok((2.0 - 3.0 * s) / (2.0 * s).sqrt())
}

/// Fisher-KPP minimal speed `2 sqrt(r)`.
pub fn kpp_speed(r: f64) -> f64 {
    2.0 * r.sqrt()
}

/// Largest rightward spreading speed of the drive, `None` inside the extinction regime.
pub fn spreading_upper_bound(s: f64, r: f64) -> Option<f64> {
    let threshold = trivial_threshold(s);
    if r <= threshold {
        return None;
    }
    Some(2.0 * (2.0 * (1.0 - s) * (r - threshold)).sqrt())
}

/// `int_0^1 f(s, p) dp` for a scalar reaction.
pub fn reaction_integral(kind: ScalarKind, s: f64) -> f64 {
    simpson_fn(
        |p| scalar_reaction(kind, s, p).unwrap_or(0.0),
        0.0,
        1.0,
        2000,
    )
}

/// Cost at which `int_0^1 f(s, p) dp` changes sign, by bisection on `[0.5, 0.95]` to `1e-4`.
pub fn zero_level(kind: ScalarKind) -> f64 {
    let (mut lo, mut hi) = (0.5, 0.95);
    let f_lo = reaction_integral(kind, lo);
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if (reaction_integral(kind, mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zero level of the rational (gene-conversion) scalar reaction.
pub fn tsn_zero_level() -> f64 {
    zero_level(ScalarKind::Tsn)
}
