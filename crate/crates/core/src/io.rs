//! CSV export. Floats use 17 significant digits so values round-trip exactly.

use std::io::{self, Write};

use crate::scalar::Scalar;
use crate::solver::{FieldState, Grid1D};
use crate::stochastic::StochasticCell;
use crate::sweep::SweepCell;
use crate::theory::AnalyticVerdict;
use crate::wave::{HTable, WaveReport};

pub const SNAPSHOT_HEADER: &str = "t,x,u1,u2";
pub const REPORT_HEADER: &str = "s,r,speed,fit_r2,class,p_monotone,n_monotone,plateau_n";
pub const H_TABLE_HEADER: &str = "V,h";
pub const SWEEP_HEADER: &str =
    "axis1,axis2,speed,fit_r2,class,p_monotone,n_monotone,monotonic_count,plateau_n,trivial_only,analytic_sign,clause";
pub const STOCHASTIC_HEADER: &str = "s,r,seed,result,extinction_time,events";
pub const VERDICT_HEADER: &str = "s,r,trivial_only,sign,clause,bounds";

/// Formats a float with 17 significant digits.
pub fn fmt_float<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

/// One row per grid point per snapshot; `u2` is blank for scalar models.
pub fn write_snapshots<T: Scalar, W: Write>(
    mut w: W,
    grid: &Grid1D<T>,
    snapshots: &[FieldState<T>],
) -> io::Result<()> {
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    for state in snapshots {
        let t = fmt_float(state.t);
        for (i, &u1) in state.u1.iter().enumerate() {
            let u2 = state
                .u2
                .as_ref()
                .map(|u| fmt_float(u[i]))
                .unwrap_or_default();
            writeln!(w, "{t},{},{},{u2}", fmt_float(grid.x(i)), fmt_float(u1))?;
        }
    }
    Ok(())
}

pub fn write_report<T: Scalar, W: Write>(
    mut w: W,
    s: T,
    r: T,
    report: &WaveReport<T>,
) -> io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    writeln!(w, "{}", report_row(s, r, report))
}

/// Data line of the report CSV.
pub fn report_row<T: Scalar>(s: T, r: T, report: &WaveReport<T>) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        fmt_float(s),
        fmt_float(r),
        fmt_float(report.speed),
        fmt_float(report.fit_r2),
        report.class,
        report.p_monotone,
        report.n_monotone,
        fmt_float(report.plateau_n)
    )
}

pub fn write_h_table<T: Scalar, W: Write>(mut w: W, table: &HTable<T>) -> io::Result<()> {
    writeln!(w, "{H_TABLE_HEADER}")?;
    for (v, h) in table.nodes().into_iter().zip(&table.h) {
        writeln!(w, "{},{}", fmt_float(v), fmt_float(*h))?;
    }
    Ok(())
}

pub fn write_sweep<W: Write>(mut w: W, cells: &[SweepCell]) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for c in cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_float(c.axis1),
            fmt_float(c.axis2),
            fmt_float(c.speed),
            fmt_float(c.fit_r2),
            c.class,
            c.p_monotone,
            c.n_monotone,
            c.monotonic_count(),
            fmt_float(c.plateau_n),
            c.verdict.trivial_only,
            c.verdict.sign,
            c.verdict.clause.label()
        )?;
    }
    Ok(())
}

pub fn write_stochastic<W: Write>(mut w: W, cells: &[StochasticCell]) -> io::Result<()> {
    writeln!(w, "{STOCHASTIC_HEADER}")?;
    for c in cells {
        let time = c.outcome.extinction_time.map(fmt_float).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{time},{}",
            fmt_float(c.s),
            fmt_float(c.r),
            c.seed,
            c.outcome.result,
            c.outcome.events
        )?;
    }
    Ok(())
}

/// Data line of the verdict CSV.
pub fn verdict_row(s: f64, r: f64, v: &AnalyticVerdict) -> String {
    format!(
        "{},{},{},{},{},{}",
        fmt_float(s),
        fmt_float(r),
        v.trivial_only,
        v.sign,
        v.clause.label(),
        v.bounds
    )
}

pub fn write_verdicts<W: Write>(mut w: W, rows: &[(f64, f64, AnalyticVerdict)]) -> io::Result<()> {
    writeln!(w, "{VERDICT_HEADER}")?;
    for (s, r, v) in rows {
        writeln!(w, "{}", verdict_row(*s, *r, v))?;
    }
    Ok(())
}
