//! Thin command-line front end over the library commands.

use std::process::ExitCode;

use randeuler::commands;
use randeuler::config::{Command, ExperimentConfig};
use randeuler::error::{Error, Result};

const USAGE: &str = "\
randeuler: randomized Euler schemes under inexact information

USAGE:
    randeuler <command> [--config <file>] [--seed <u64>] [--threads <k>]
                        [--out <dir>] [--force] [--plane {lambda,h2lambda}]
                        [--<key> <value> ...]

COMMANDS:
    convergence       error estimates over an n-sweep plus the order fit
    noise-sweep       error floor against the precision parameter delta
    stability         stability-region raster and summary
    validate          a-priori bound suite (exit 4 on any violation)
    demo-lower-bound  the adversarial information pair against (b-a) delta
    plot              gnuplot script referencing the CSV outputs

Any config key of the command's section can be overridden with --key value;
run with --print-config to see the resolved section without computing.

EXIT CODES:
    0 success, 2 configuration error, 3 numerical precondition violation,
    4 theorem-bound violation.
";

fn parse_and_run(args: &[String]) -> Result<bool> {
    if args.is_empty() {
        return Err(Error::Config("missing command".into()));
    }
    if args[0] == "--help" || args[0] == "-h" || args[0] == "help" {
        print!("{USAGE}");
        return Ok(false);
    }
    let command = Command::from_name(&args[0])?;

    let mut config_file: Option<String> = None;
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut print_config = false;
    let mut iter = args[1..].iter().peekable();
    while let Some(arg) = iter.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(Error::Config(format!("unexpected argument `{arg}`")));
        };
        if flag == "force" {
            overrides.push(("force".into(), "true".into()));
            continue;
        }
        if flag == "print-config" {
            print_config = true;
            continue;
        }
        let value = iter
            .next()
            .ok_or_else(|| Error::Config(format!("flag --{flag} needs a value")))?
            .clone();
        match flag {
            "config" => config_file = Some(value),
            "seed" => overrides.push(("seed".into(), value)),
            "threads" => overrides.push(("threads".into(), value)),
            "out" => overrides.push(("out_dir".into(), value)),
            "plane" => overrides.push(("plane".into(), value)),
            other => overrides.push((other.replace('-', "_"), value)),
        }
    }

    let mut cfg = match config_file {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("cannot read config `{path}`: {e}")))?;
            ExperimentConfig::parse(&text, command)?
        }
        None => ExperimentConfig::defaults(command),
    };
    for (k, v) in overrides {
        cfg.set(&k, &v)?;
    }
    cfg.validate()?;

    if print_config {
        print!("{}", cfg.serialize());
        return Ok(false);
    }

    let files = commands::run(&cfg)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match parse_and_run(&args) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(_)) {
                eprintln!();
                eprint!("{USAGE}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
