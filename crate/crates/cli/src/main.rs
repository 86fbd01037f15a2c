//! `drivewave` command-line frontend.

mod commands;
mod config;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Arg, ArgMatches, Command};

use config::{parse_grid, Settings, KEYS};

const SUBCOMMANDS: [(&str, &str); 4] = [
    ("simulate", "Run one simulation and classify its front"),
    ("sweep", "Simulate a two-parameter grid"),
    ("classify", "Evaluate the analytic speed-sign predictions"),
    ("stochastic", "Run the stochastic deme model"),
];

/// Shorthand flags and the keys they set.
const ALIASES: [(&str, &str); 6] = [
    ("s", "model.s"),
    ("r", "model.r"),
    ("model", "model.system"),
    ("t-final", "solver.t_final"),
    ("seed", "stochastic.seed"),
    ("workers", "run.workers"),
];

fn run_args() -> Vec<Arg> {
    let mut args = vec![
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("TOML config file or manifest"),
        Arg::new("out")
            .long("out")
            .value_name("DIR")
            .help("Output directory (run.out)"),
        Arg::new("grid")
            .long("grid")
            .value_name("NxM")
            .help("Grid point counts"),
    ];
    for (flag, key) in ALIASES {
        args.push(
            Arg::new(flag)
                .long(flag)
                .value_name("VALUE")
                .help(format!("Alias of --{key}")),
        );
    }
    for spec in KEYS {
        args.push(
            Arg::new(spec.key)
                .long(spec.key)
                .value_name("VALUE")
                .help(spec.help),
        );
    }
    args
}

fn cli() -> Command {
    let mut cmd = Command::new("drivewave")
        .about("Traveling-wave laboratory for gene-drive and Wolbachia invasions")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about) in SUBCOMMANDS {
        cmd = cmd.subcommand(Command::new(name).about(about).args(run_args()));
    }
    cmd.subcommand(Command::new("version").about("Print the version"))
}

/// Defaults, then the config file, then key flags, then aliases.
fn resolve(sub: &str, m: &ArgMatches) -> Result<Settings> {
    let mut settings = Settings::default();
    if let Some(path) = m.get_one::<String>("config") {
        settings.merge_file(&PathBuf::from(path))?;
    }
    for spec in KEYS {
        if let Some(v) = m.get_one::<String>(spec.key) {
            settings.set_str(spec.key, v)?;
        }
    }
    for (flag, key) in ALIASES {
        if let Some(v) = m.get_one::<String>(flag) {
            settings.set_str(key, v)?;
        }
    }
    if let Some(v) = m.get_one::<String>("out") {
        settings.set_str("run.out", v)?;
    }
    if let Some(v) = m.get_one::<String>("grid") {
        let (a, b) = parse_grid(v)?;
        let keys = if sub == "stochastic" {
            ["stochastic.s_count", "stochastic.r_count"]
        } else {
            ["sweep.axis1.count", "sweep.axis2.count"]
        };
        settings.set_str(keys[0], &a.to_string())?;
        settings.set_str(keys[1], &b.to_string())?;
    }
    Ok(settings)
}

fn main() -> Result<()> {
    let matches = cli().get_matches();
    let (sub, m) = matches.subcommand().expect("subcommand required");
    if sub == "version" {
        println!("drivewave {}", env!("CARGO_PKG_VERSION"));
        return Ok(());
    }
    let settings = resolve(sub, m)?;
    commands::run(sub, &settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_is_well_formed() {
        cli().debug_assert();
    }

    #[test]
    fn flags_and_aliases_resolve() {
        let m = cli().get_matches_from([
            "drivewave",
            "stochastic",
            "--s",
            "0.3",
            "--model.r",
            "5",
            "--grid",
            "2x3",
            "--seed",
            "9",
        ]);
        let (sub, m) = m.subcommand().unwrap();
        let s = resolve(sub, m).unwrap();
        assert_eq!(s.float("model.s"), 0.3);
        assert_eq!(s.float("model.r"), 5.0);
        assert_eq!(
            (s.int("stochastic.s_count"), s.int("stochastic.r_count")),
            (2, 3)
        );
        assert_eq!(s.int("stochastic.seed"), 9);
    }
}
