//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::Instant;

use drivewave_core::models::{
    bistability_threshold, carrying_capacity, is_eradication_drive, is_eradication_drive_by_root,
    wolbachia_equilibrium, DemographySpec, ModelSpec, Selection, WolbachiaParams,
};
use drivewave_core::solver::{
    simulate, total_mass, FieldState, InitialCondition, Integrator, SolverSettings,
};
use drivewave_core::stochastic::{
    run_stochastic, stochastic_sweep, StochasticConfig, StochasticResult, StochasticSweepConfig,
};
use drivewave_core::sweep::{
    agreement_report, bisect_sign_change, run_sweep, sign_changes, AxisParam, AxisSpec, SweepCell,
    SweepConfig, SIGN_SPEED_FLOOR,
};
use drivewave_core::theory::{cubic_speed, kpp_speed};
use drivewave_core::wave::{classify_wave, Tolerances, WaveClass, WaveReport};
use drivewave_core::{io, Error};

type Check = Result<String, String>;

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn report(
    model: ModelSpec<f64>,
    solver: &SolverSettings<f64>,
) -> Result<(WaveReport<f64>, f64), String> {
    let config = solver.config_for(model).map_err(|e| e.to_string())?;
    let out = simulate(&config).map_err(|e| e.to_string())?;
    Ok((
        classify_wave(&config.grid, &model, &out.snapshots, &Tolerances::default()),
        out.max_clip,
    ))
}

fn speed_of(model: ModelSpec<f64>) -> Result<f64, String> {
    let (r, _) = report(model, &SolverSettings::default())?;
    if r.class.is_converged() {
        Ok(r.speed)
    } else {
        Err(format!("{model:?} did not converge"))
    }
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scalar_cubic() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for s in [0.5, 0.6, 2.0 / 3.0, 0.75] {
        let measured = speed_of(ModelSpec::ScalarCubic { s })?;
        // the drive starts on the right, so an advancing drive moves the front left
        let expected = -cubic_speed(s).map_err(|e| e.to_string())?;
        let pass = if expected.abs() < 1e-12 {
            measured.abs() < 0.05
        } else {
            (measured - expected).abs() <= 0.05 * expected.abs()
        };
        ok &= pass;
        lines.push(format!("s={s:.4}: {measured:.4} vs {expected:.4}"));
    }
    ensure(ok, lines.join("; "))
}

fn tsn_zero_level() -> Check {
    let mut runs = 0;
    let root = bisect_sign_change(
        |s| {
            runs += 1;
            speed_of(ModelSpec::ScalarTsn { s }).map_err(Error::InvalidConfig)
        },
        0.67,
        0.73,
        6,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        (root - 0.697).abs() <= 0.015,
        format!("sign change at s={root:.4} after {runs} runs, target 0.697 +- 0.015"),
    )
}

fn reference_front() -> Check {
    let (r, _) = report(
        ModelSpec::density_drive(0.5, 10.0 / 9.0),
        &SolverSettings::default(),
    )?;
    ensure(
        r.class == WaveClass::NontrivialViable
            && r.speed < -0.05
            && (r.plateau_n - 0.1).abs() <= 0.01,
        format!(
            "class {} speed {:.4} plateau_n {:.4}",
            r.class, r.speed, r.plateau_n
        ),
    )
}

fn trivial_regime() -> Check {
    let (r, _) = report(
        ModelSpec::density_drive(0.7, 0.5),
        &SolverSettings::default(),
    )?;
    let target = kpp_speed(0.5);
    ensure(
        r.class == WaveClass::TrivialKpp && (r.speed - target).abs() <= 0.05 * target,
        format!("class {} speed {:.4} vs {:.4}", r.class, r.speed, target),
    )
}

fn sign_agreement(cells: &[SweepCell]) -> Check {
    let a = agreement_report(cells);
    let not_converged = cells.iter().filter(|c| !c.class.is_converged()).count();
    let detail = format!(
        "{}/{} sign matches, {}/{} trivial-region matches, {} not converged",
        a.sign_matches, a.sign_checked, a.trivial_matches, a.trivial_checked, not_converged
    );
    for m in a.sign_mismatches.iter().chain(&a.trivial_mismatches) {
        eprintln!(
            "  mismatch s={:.4} r={:.4} speed={:.4} class={} clause={}",
            m.axis1,
            m.axis2,
            m.speed,
            m.class,
            m.clause.label()
        );
    }
    ensure(
        a.is_clean() && a.sign_checked > 0 && a.trivial_checked > 0,
        detail,
    )
}

fn zero_level(cells: &[SweepCell], count2: usize) -> Check {
    let changes = sign_changes(cells, count2);
    let (lo, hi) = changes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c.axis1), hi.max(c.axis1))
        });
    ensure(
        !changes.is_empty() && lo >= 0.48 && hi <= 0.72,
        format!(
            "{} sign-change edges, s in [{lo:.4}, {hi:.4}]",
            changes.len()
        ),
    )
}

fn monotone(cells: &[SweepCell]) -> Check {
    let converged: Vec<&SweepCell> = cells.iter().filter(|c| c.class.is_converged()).collect();
    let bad: Vec<String> = converged
        .iter()
        .filter(|c| c.monotonic_count() != 2)
        .map(|c| format!("({:.3}, {:.3})", c.axis1, c.axis2))
        .collect();
    ensure(
        bad.is_empty(),
        format!(
            "{} of {} converged cells not fully monotone {}",
            bad.len(),
            converged.len(),
            bad.join(" ")
        ),
    )
}

fn integral_signs(cells: &[SweepCell]) -> Check {
    let mut checked = 0;
    let mut bad = Vec::new();
    for c in cells {
        if !(c.class.is_converged() && c.class.is_nontrivial() && c.speed.abs() > SIGN_SPEED_FLOOR)
        {
            continue;
        }
        checked += 1;
        let (Some(nsv), Some(energy)) = (c.nsv, c.energy) else {
            bad.push(format!("({:.3}, {:.3}) missing h", c.axis1, c.axis2));
            continue;
        };
        let want = c.speed < 0.0;
        if (nsv < 0.0) != want || (energy < 0.0) != want {
            bad.push(format!(
                "({:.3}, {:.3}) speed {:.3} nsv {:.3e} energy {:.3e}",
                c.axis1, c.axis2, c.speed, nsv, energy
            ));
        }
    }
    ensure(
        checked > 0 && bad.is_empty(),
        format!(
            "{} of {checked} cells disagree {}",
            bad.len(),
            bad.join("; ")
        ),
    )
}

fn kpp_spread(cells: &[SweepCell]) -> Check {
    let mut worst: f64 = 0.0;
    let mut columns = 0;
    let mut rs: Vec<f64> = cells.iter().map(|c| c.axis2).collect();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    for r in rs {
        let speeds: Vec<f64> = cells
            .iter()
            .filter(|c| c.axis2 == r && c.class == WaveClass::TrivialKpp)
            .map(|c| c.speed)
            .collect();
        if speeds.len() < 2 {
            continue;
        }
        columns += 1;
        let max = speeds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = speeds.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max((max - min) / min.abs());
    }
    ensure(
        columns > 0 && worst < 0.03,
        format!(
            "largest relative spread {:.4} over {columns} r values",
            worst
        ),
    )
}

fn speed_continuity(cells: &[SweepCell], count2: usize) -> Check {
    // neighbours along s at fixed r
    let mut worst = (0.0f64, 0.0, 0.0, 0.0);
    for (a, b) in cells.iter().zip(cells.iter().skip(count2)) {
        let jump = (a.speed - b.speed).abs();
        if a.class == b.class && a.class.is_converged() && jump > worst.0 {
            worst = (jump, a.axis1, b.axis1, a.axis2);
        }
    }
    let (jump, s0, s1, r) = worst;
    ensure(
        jump < 0.3,
        format!("largest same-class neighbour speed jump along s {jump:.4} (s {s0:.3} to {s1:.3}, r {r:.3})"),
    )
}

fn mini_sweep(template: ModelSpec<f64>, axis1: AxisSpec) -> Result<Vec<SweepCell>, String> {
    let config = SweepConfig {
        template,
        axis1,
        axis2: AxisSpec::new(AxisParam::R, 1.0, 8.0, 3),
        workers: workers(),
        ..SweepConfig::drive_default()
    };
    run_sweep(&config).map_err(|e| e.to_string())
}

fn alternative_demographies() -> Check {
    let variants = [
        ("logistic-d", DemographySpec::logistic_death(1.0)),
        ("allee-b a=-0.2", DemographySpec::allee_birth(1.0, -0.2)),
        ("allee-b a=0.2", DemographySpec::allee_birth(1.0, 0.2)),
        ("allee-d a=0.2", DemographySpec::allee_death(1.0, 0.2)),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, demo) in variants {
        let mut disagreements = 0;
        for i in 0..50 {
            let s = 0.01 + 0.98 * i as f64 / 49.0;
            for j in 0..50 {
                let d = demo.with_r(0.1 + 11.9 * j as f64 / 49.0);
                if is_eradication_drive(&d, s) != is_eradication_drive_by_root(&d, s) {
                    disagreements += 1;
                }
            }
        }
        let template = ModelSpec::DensityDrive {
            demography: demo,
            selection: Selection::Survival,
            s: 0.5,
        };
        let cells = mini_sweep(template, AxisSpec::new(AxisParam::S, 0.45, 0.75, 3))?;
        let changes = sign_changes(&cells, 3);
        let inside = changes.iter().all(|c| (0.45..=0.75).contains(&c.axis1));
        let pass = disagreements == 0 && !changes.is_empty() && inside;
        ok &= pass;
        let speeds: Vec<String> = cells.iter().map(|c| format!("{:.2}", c.speed)).collect();
        lines.push(format!(
            "{name}: {disagreements} eradication disagreements, {} sign changes in bracket={inside}, speeds [{}]",
            changes.len(),
            speeds.join(" ")
        ));
    }
    ensure(ok, lines.join("; "))
}

fn wolbachia() -> Check {
    let p = wolbachia_equilibrium(&WolbachiaParams {
        f_w: 0.9,
        omega_h: 0.8,
    })
    .map_err(|e| e.to_string())?;
    let template = ModelSpec::WolbachiaDensity {
        demography: DemographySpec::logistic(1.0),
        params: WolbachiaParams {
            f_w: 0.9,
            omega_h: 0.1,
        },
    };
    let cells = mini_sweep(
        template,
        AxisSpec::new(AxisParam::FertilityCost, 0.1, 0.5, 3),
    )?;
    let flips = (0..3)
        .filter(|&j| {
            let column: Vec<&SweepCell> = cells.iter().skip(j).step_by(3).collect();
            column.iter().all(|c| c.class.is_converged())
                && column
                    .windows(2)
                    .any(|w| (w[0].speed < 0.0) != (w[1].speed < 0.0))
        })
        .count();
    let speeds: Vec<String> = cells.iter().map(|c| format!("{:.2}", c.speed)).collect();
    ensure(
        p == Some(0.5) && flips == 3,
        format!(
            "p*(0.9, 0.8) = {p:?}; sign flips along 1-f_w at {flips}/3 r values; speeds [{}]",
            speeds.join(" ")
        ),
    )
}

fn stochastic_concordance() -> Check {
    let config = StochasticSweepConfig {
        workers: workers(),
        ..StochasticSweepConfig::default_grid()
    };
    let cells = stochastic_sweep(&config).map_err(|e| e.to_string())?;
    let deterministic = run_sweep(&SweepConfig {
        axis1: config.s,
        axis2: config.r,
        workers: workers(),
        ..SweepConfig::drive_default()
    })
    .map_err(|e| e.to_string())?;
    let agree = cells
        .iter()
        .zip(&deterministic)
        .filter(|(st, det)| {
            matches!(
                (st.outcome.result, det.class),
                (StochasticResult::DriveFixed, WaveClass::NontrivialViable)
                    | (
                        StochasticResult::DriveLost,
                        WaveClass::NontrivialNonviable | WaveClass::TrivialKpp
                    )
            )
        })
        .count();
    let max_pop = cells
        .iter()
        .map(|c| c.outcome.max_deme_population)
        .max()
        .unwrap_or(0);
    let guard = 5 * config.base.capacity;

    // rerun the two cheapest cells with their recorded seeds
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by_key(|&k| cells[k].outcome.events);
    let reproducible = order.iter().take(2).all(|&k| {
        let c = &cells[k];
        let model = ModelSpec::density_drive(c.s, c.r);
        let again = run_stochastic(&StochasticConfig {
            model,
            seed: c.seed,
            ..config.base.clone()
        });
        again.as_ref() == Ok(&c.outcome)
    });
    let fraction = agree as f64 / cells.len() as f64;
    ensure(
        fraction >= 0.8 && reproducible && max_pop < guard,
        format!("{agree}/{} cells agree ({:.0}%), reproducible={reproducible}, max deme population {max_pop}", cells.len(), 100.0 * fraction),
    )
}

fn solver_properties() -> Check {
    let solver = SolverSettings::<f64>::default();
    let model = ModelSpec::density_drive(0.5, 10.0 / 9.0);
    let config = solver.config_for(model).map_err(|e| e.to_string())?;
    let grid = config.grid;

    // pure diffusion
    let mut integrator = Integrator::new(model, grid, config.dt).without_reaction();
    let mut state = config.initial.build(&grid, 2);
    let mut worst_mass: f64 = 0.0;
    for _ in 0..500 {
        let before = [
            total_mass(&state.u1, grid.dx()),
            total_mass(state.u2.as_ref().unwrap(), grid.dx()),
        ];
        integrator.step(&mut state).map_err(|e| e.to_string())?;
        let after = [
            total_mass(&state.u1, grid.dx()),
            total_mass(state.u2.as_ref().unwrap(), grid.dx()),
        ];
        worst_mass = worst_mass
            .max((after[0] - before[0]).abs())
            .max((after[1] - before[1]).abs());
    }

    // uniform equilibria
    let demo = DemographySpec::logistic(10.0 / 9.0);
    let drive_only = carrying_capacity(&demo, 0.5);
    let frequency = ModelSpec::FrequencyDrive {
        demography: demo,
        selection: Selection::Survival,
        s: 0.5,
    };
    let equilibria = [
        (model, [0.0, 1.0]),
        (model, [0.0, 0.0]),
        (model, [drive_only, 0.0]),
        (frequency, [0.0, 1.0]),
        (frequency, [1.0, drive_only]),
        (
            ModelSpec::ScalarCubic { s: 0.75 },
            [bistability_threshold(0.75).unwrap_or(0.0), 0.0],
        ),
        (ModelSpec::ScalarTsn { s: 0.7 }, [1.0, 0.0]),
    ];
    let mut worst_eq: f64 = 0.0;
    for (m, values) in equilibria {
        let mut integrator = Integrator::new(m, grid, config.dt);
        let init = InitialCondition {
            interface_x: 0.0,
            left: values,
            right: values,
        };
        let mut state: FieldState<f64> = init.build(&grid, m.field_count());
        let before = state.clone();
        integrator.step(&mut state).map_err(|e| e.to_string())?;
        let diff = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        worst_eq = worst_eq.max(diff(&state.u1, &before.u1));
        if let (Some(a), Some(b)) = (&state.u2, &before.u2) {
            worst_eq = worst_eq.max(diff(a, b));
        }
    }

    // refinement
    let (coarse, clip) = report(model, &solver)?;
    let fine_solver = SolverSettings {
        dx: solver.dx / 2.0,
        dt: solver.dt / 2.0,
        ..solver
    };
    let (fine, _) = report(model, &fine_solver)?;
    let refinement = ((fine.speed - coarse.speed) / coarse.speed).abs();

    // determinism
    let a = simulate(&config).map_err(|e| e.to_string())?;
    let b = simulate(&config).map_err(|e| e.to_string())?;
    let deterministic = a.snapshots == b.snapshots;

    // worker-count invariance
    let small = SolverSettings {
        x_max: 100.0,
        dx: 0.5,
        t_final: 10.0,
        ..solver
    };
    let sweep = |workers| {
        let cells = run_sweep(&SweepConfig {
            axis1: AxisSpec::new(AxisParam::S, 0.3, 0.8, 4),
            axis2: AxisSpec::new(AxisParam::R, 0.5, 6.0, 3),
            solver: small,
            workers,
            ..SweepConfig::drive_default()
        })
        .map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        io::write_sweep(&mut buf, &cells).map_err(|e| e.to_string())?;
        Ok::<_, String>(buf)
    };
    let invariant = sweep(1)? == sweep(4)?;

    ensure(
        worst_mass < 1e-8 && worst_eq < 1e-12 && refinement < 0.02 && deterministic && invariant && clip < 1e-6,
        format!(
            "mass drift {worst_mass:.2e}/step, equilibrium drift {worst_eq:.2e}/step, refinement change {:.3}%, max clip {clip:.1e}, deterministic={deterministic}, worker-invariant={invariant}",
            100.0 * refinement
        ),
    )
}

fn main() {
    let mut failures = 0;
    let mut record = |name: &str, started: Instant, result: Check| {
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} ({secs:.1} s)"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail} ({secs:.1} s)");
            }
        }
    };

    let t = Instant::now();
    record("scalar cubic speed", t, scalar_cubic());
    let t = Instant::now();
    record("tsn zero level", t, tsn_zero_level());
    let t = Instant::now();
    record("reference front s=0.5 r=10/9", t, reference_front());
    let t = Instant::now();
    record("trivial regime s=0.7 r=0.5", t, trivial_regime());

    let t = Instant::now();
    let config = SweepConfig {
        workers: workers(),
        ..SweepConfig::drive_default()
    };
    let count2 = config.axis2.count;
    match run_sweep(&config) {
        Ok(cells) => {
            let failed = cells.iter().filter(|c| c.error.is_some()).count();
            println!(
                "      25x25 sweep finished in {:.1} s, {failed} failed cells",
                t.elapsed().as_secs_f64()
            );
            let t = Instant::now();
            record("analytic sign agreement", t, sign_agreement(&cells));
            record("zero-level confinement", t, zero_level(&cells, count2));
            record("monotone profiles", t, monotone(&cells));
            record("integral sign consistency", t, integral_signs(&cells));
            record(
                "trivial-region speed depends on r only",
                t,
                kpp_spread(&cells),
            );
            record(
                "same-class speed continuity",
                t,
                speed_continuity(&cells, count2),
            );
        }
        Err(e) => record("25x25 sweep", t, Err(e.to_string())),
    }

    let t = Instant::now();
    record("alternative demographies", t, alternative_demographies());
    let t = Instant::now();
    record("wolbachia", t, wolbachia());
    let t = Instant::now();
    record("stochastic concordance", t, stochastic_concordance());
    let t = Instant::now();
    record("solver properties", t, solver_properties());

    if failures > 0 {
        println!("acceptance: {failures} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
