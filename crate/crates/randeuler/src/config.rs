//! Experiment configuration: line-oriented `key = value` files with one
//! section per command, strict key schemas, and canonical serialization.
//!
//! A config file can hold sections for several commands; running a command
//! reads its own section. Unknown keys inside that section are rejected and
//! every numeric range is validated before any computation starts. Every
//! key can also be overridden on the command line with `--key value`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::problem::SchemeTag;
use crate::stability::StabilityMode;

/// The experiment commands the harness exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Convergence,
    NoiseSweep,
    Stability,
    Validate,
    DemoLowerBound,
    Plot,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Convergence => "convergence",
            Command::NoiseSweep => "noise-sweep",
            Command::Stability => "stability",
            Command::Validate => "validate",
            Command::DemoLowerBound => "demo-lower-bound",
            Command::Plot => "plot",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "convergence" => Ok(Command::Convergence),
            "noise-sweep" => Ok(Command::NoiseSweep),
            "stability" => Ok(Command::Stability),
            "validate" => Ok(Command::Validate),
            "demo-lower-bound" => Ok(Command::DemoLowerBound),
            "plot" => Ok(Command::Plot),
            other => Err(Error::Config(format!("unknown command `{other}`"))),
        }
    }

    pub fn all() -> [Command; 6] {
        [
            Command::Convergence,
            Command::NoiseSweep,
            Command::Stability,
            Command::Validate,
            Command::DemoLowerBound,
            Command::Plot,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    F64,
    U64,
    Usize,
    Bool,
    Str,
    F64List,
    UsizeList,
    StrList,
}

struct KeySpec {
    name: &'static str,
    kind: Kind,
    default: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: &'static str) -> KeySpec {
    KeySpec {
        name,
        kind,
        default,
    }
}

fn schema(command: Command) -> &'static [KeySpec] {
    match command {
        Command::Convergence => CONVERGENCE_KEYS,
        Command::NoiseSweep => NOISE_SWEEP_KEYS,
        Command::Stability => STABILITY_KEYS,
        Command::Validate => VALIDATE_KEYS,
        Command::DemoLowerBound => DEMO_KEYS,
        Command::Plot => PLOT_KEYS,
    }
}

const CONVERGENCE_KEYS: &[KeySpec] = &[
    key("fixture", Kind::Str, "holder(0.25)"),
    key("scheme", Kind::Str, "explicit"),
    key("noise", Kind::Str, "zero"),
    key("delta", Kind::F64, "0"),
    key("a", Kind::F64, "0"),
    key("b", Kind::F64, "1"),
    key(
        "n_list",
        Kind::UsizeList,
        "64,128,256,512,1024,2048,4096,8192",
    ),
    key("paths", Kind::Usize, "200"),
    key("p", Kind::F64, "2"),
    key("seed", Kind::U64, "42"),
    key("sup_refinement", Kind::Usize, "8"),
    key("fp_tolerance", Kind::F64, "1e-12"),
    key("threads", Kind::Usize, "0"),
    key("out_dir", Kind::Str, "out"),
    key("force", Kind::Bool, "false"),
];

const NOISE_SWEEP_KEYS: &[KeySpec] = &[
    key("fixture", Kind::Str, "adversarial(0.1)"),
    key("scheme", Kind::Str, "explicit"),
    key("noise", Kind::Str, "constant-direction"),
    key("deltas", Kind::F64List, "0.01,0.02,0.05,0.1"),
    key("a", Kind::F64, "0"),
    key("b", Kind::F64, "1"),
    key("n", Kind::Usize, "8192"),
    key("paths", Kind::Usize, "100"),
    key("p", Kind::F64, "2"),
    key("seed", Kind::U64, "42"),
    key("sup_refinement", Kind::Usize, "8"),
    key("fp_tolerance", Kind::F64, "1e-12"),
    key("threads", Kind::Usize, "0"),
    key("out_dir", Kind::Str, "out"),
    key("force", Kind::Bool, "false"),
];

const STABILITY_KEYS: &[KeySpec] = &[
    key("mode", Kind::Str, "explicit"),
    key("re_min", Kind::F64, "-4"),
    key("re_max", Kind::F64, "1"),
    key("im_min", Kind::F64, "-2"),
    key("im_max", Kind::F64, "2"),
    key("nx", Kind::Usize, "50"),
    key("ny", Kind::Usize, "50"),
    key("h", Kind::F64, "0.1"),
    key("horizon", Kind::Usize, "2000"),
    key("paths", Kind::Usize, "100"),
    key("blowup", Kind::F64, "1e6"),
    key("decay", Kind::F64, "1e-6"),
    key("plane", Kind::Str, "lambda"),
    key("seed", Kind::U64, "42"),
    key("threads", Kind::Usize, "0"),
    key("out_dir", Kind::Str, "out"),
];

const VALIDATE_KEYS: &[KeySpec] = &[
    key(
        "fixtures",
        Kind::StrList,
        "linear,holder(0.25),holder(1.0),state(2),adversarial(0.1),stability(-1,0.5)",
    ),
    key("schemes", Kind::StrList, "explicit,implicit"),
    key(
        "noises",
        Kind::StrList,
        "constant-direction,linear-in-state,state-scaled-sine,adversarial-sign",
    ),
    key("deltas", Kind::F64List, "0,0.01,0.1"),
    key("a", Kind::F64, "0"),
    key("b", Kind::F64, "1"),
    key("n", Kind::Usize, "64"),
    key("paths", Kind::Usize, "100"),
    key("eta_shift", Kind::Bool, "true"),
    key("seed", Kind::U64, "42"),
    key("fp_tolerance", Kind::F64, "1e-12"),
    key("threads", Kind::Usize, "0"),
    key("out_dir", Kind::Str, "out"),
    key("force", Kind::Bool, "false"),
];

const DEMO_KEYS: &[KeySpec] = &[
    key("deltas", Kind::F64List, "0.01,0.05,0.1"),
    key("a", Kind::F64, "0"),
    key("b", Kind::F64, "1"),
    key("n", Kind::Usize, "64"),
    key("sup_refinement", Kind::Usize, "8"),
    key("seed", Kind::U64, "42"),
    key("fp_tolerance", Kind::F64, "1e-12"),
    key("threads", Kind::Usize, "0"),
    key("out_dir", Kind::Str, "out"),
];

const PLOT_KEYS: &[KeySpec] = &[
    key("out_dir", Kind::Str, "out"),
    key("plane", Kind::Str, "lambda"),
];

fn spec_for(command: Command, name: &str) -> Result<&'static KeySpec> {
    schema(command)
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown key `{name}` in section [{}]",
                command.name()
            ))
        })
}

fn check_value(kind: Kind, name: &str, value: &str) -> Result<()> {
    let bad = |what: &str| Error::Config(format!("key `{name}`: `{value}` is not {what}"));
    match kind {
        Kind::F64 => value
            .parse::<f64>()
            .map(|_| ())
            .map_err(|_| bad("a real number")),
        Kind::U64 => value
            .parse::<u64>()
            .map(|_| ())
            .map_err(|_| bad("an unsigned integer")),
        Kind::Usize => value
            .parse::<usize>()
            .map(|_| ())
            .map_err(|_| bad("a nonnegative integer")),
        Kind::Bool => match value {
            "true" | "false" => Ok(()),
            _ => Err(bad("true or false")),
        },
        Kind::Str => Ok(()),
        Kind::F64List => split_top_level(value).iter().try_for_each(|v| {
            v.parse::<f64>()
                .map(|_| ())
                .map_err(|_| bad("a list of reals"))
        }),
        Kind::UsizeList => split_top_level(value).iter().try_for_each(|v| {
            v.parse::<usize>()
                .map(|_| ())
                .map_err(|_| bad("a list of integers"))
        }),
        Kind::StrList => Ok(()),
    }
}

/// Split a comma-separated list, ignoring commas nested in parentheses
/// (fixture names like `stability(-1,0.5)` carry them).
pub fn split_top_level(s: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in s.chars() {
        match c {
            '(' => {
                depth += 1;
                current.push(c);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(c);
            }
            ',' if depth == 0 => {
                parts.push(current.trim().to_string());
                current.clear();
            }
            _ => current.push(c),
        }
    }
    if !current.trim().is_empty() {
        parts.push(current.trim().to_string());
    }
    parts
}

/// A validated command section: every key present, every value well typed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// The built-in defaults of a command.
    pub fn defaults(command: Command) -> Self {
        let values = schema(command)
            .iter()
            .map(|s| (s.name.to_string(), s.default.to_string()))
            .collect();
        Self { command, values }
    }

    /// Parse the command's section out of a config file. A file may carry
    /// sections for other commands; they are left untouched. A missing
    /// section means defaults.
    pub fn parse(text: &str, command: Command) -> Result<Self> {
        let mut config = Self::defaults(command);
        let mut in_section = false;
        let mut seen: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(section) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let section = section.trim();
                // Foreign sections must at least name a real command.
                Command::from_name(section)?;
                in_section = section == command.name();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            if !in_section {
                continue;
            }
            let (k, v) = (k.trim(), v.trim());
            if seen.iter().any(|s| s == k) {
                return Err(Error::Config(format!(
                    "duplicate key `{k}` in section [{}]",
                    command.name()
                )));
            }
            seen.push(k.to_string());
            config.set(k, v)?;
        }
        Ok(config)
    }

    /// Set one key, validating name and type.
    pub fn set(&mut self, name: &str, value: &str) -> Result<()> {
        let spec = spec_for(self.command, name)?;
        check_value(spec.kind, name, value)?;
        self.values.insert(name.to_string(), value.to_string());
        Ok(())
    }

    /// Canonical text form: the command's section with keys in schema order.
    pub fn serialize(&self) -> String {
        self.serialize_filtered(&[])
    }

    /// Serialization that omits execution-environment keys; used for the
    /// provenance block embedded in JSON summaries, which must not differ
    /// between runs that only change thread count or output directory.
    pub fn serialize_filtered(&self, omit: &[&str]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[{}]", self.command.name());
        for spec in schema(self.command) {
            if omit.contains(&spec.name) {
                continue;
            }
            let _ = writeln!(out, "{} = {}", spec.name, self.values[spec.name]);
        }
        out
    }

    pub fn get_str(&self, name: &str) -> Result<&str> {
        spec_for(self.command, name)?;
        Ok(self.values[name].as_str())
    }

    pub fn get_f64(&self, name: &str) -> Result<f64> {
        Ok(self.get_str(name)?.parse().expect("validated on set"))
    }

    pub fn get_u64(&self, name: &str) -> Result<u64> {
        Ok(self.get_str(name)?.parse().expect("validated on set"))
    }

    pub fn get_usize(&self, name: &str) -> Result<usize> {
        Ok(self.get_str(name)?.parse().expect("validated on set"))
    }

    pub fn get_bool(&self, name: &str) -> Result<bool> {
        Ok(self.get_str(name)? == "true")
    }

    pub fn get_f64_list(&self, name: &str) -> Result<Vec<f64>> {
        Ok(split_top_level(self.get_str(name)?)
            .iter()
            .map(|v| v.parse().expect("validated on set"))
            .collect())
    }

    pub fn get_usize_list(&self, name: &str) -> Result<Vec<usize>> {
        Ok(split_top_level(self.get_str(name)?)
            .iter()
            .map(|v| v.parse().expect("validated on set"))
            .collect())
    }

    pub fn get_str_list(&self, name: &str) -> Result<Vec<String>> {
        Ok(split_top_level(self.get_str(name)?))
    }

    pub fn scheme_tag(&self, name: &str) -> Result<SchemeTag> {
        match self.get_str(name)? {
            "explicit" => Ok(SchemeTag::ExplicitRandEuler),
            "implicit" => Ok(SchemeTag::ImplicitRandEuler),
            "explicit-det" => Ok(SchemeTag::ExplicitDetEuler),
            "implicit-det" => Ok(SchemeTag::ImplicitDetEuler),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }

    pub fn stability_mode(&self, name: &str) -> Result<StabilityMode> {
        match self.get_str(name)? {
            "explicit" => Ok(StabilityMode::Explicit),
            "implicit" => Ok(StabilityMode::Implicit),
            "explicit-det" => Ok(StabilityMode::ExplicitDet),
            "implicit-det" => Ok(StabilityMode::ImplicitDet),
            other => Err(Error::Config(format!("unknown stability mode `{other}`"))),
        }
    }

    /// Range checks shared by every command; runs before any computation.
    pub fn validate(&self) -> Result<()> {
        let has = |name: &str| schema(self.command).iter().any(|s| s.name == name);
        if has("a") && has("b") && !(self.get_f64("a")? < self.get_f64("b")?) {
            return Err(Error::Config("need a < b".into()));
        }
        if has("paths") && self.get_usize("paths")? < 2 {
            return Err(Error::Config("paths must be >= 2".into()));
        }
        if has("p") && !(self.get_f64("p")? >= 2.0) {
            return Err(Error::Config("p exponent must be >= 2".into()));
        }
        if has("delta") {
            let d = self.get_f64("delta")?;
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::Config(format!("delta must be in [0,1], got {d}")));
            }
        }
        if has("deltas") {
            for d in self.get_f64_list("deltas")? {
                if !(0.0..=1.0).contains(&d) {
                    return Err(Error::Config(format!("delta must be in [0,1], got {d}")));
                }
            }
        }
        if has("n") && self.get_usize("n")? == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if has("n_list") {
            let ns = self.get_usize_list("n_list")?;
            if ns.len() < 3 {
                return Err(Error::Config(
                    "n_list needs at least 3 entries for an order fit".into(),
                ));
            }
            if ns.contains(&0) {
                return Err(Error::Config("n_list entries must be >= 1".into()));
            }
        }
        if has("sup_refinement") && self.get_usize("sup_refinement")? == 0 {
            return Err(Error::Config("sup_refinement must be >= 1".into()));
        }
        if has("fp_tolerance") && !(self.get_f64("fp_tolerance")? > 0.0) {
            return Err(Error::Config("fp_tolerance must be positive".into()));
        }
        if has("scheme") {
            self.scheme_tag("scheme")?;
        }
        if has("mode") {
            self.stability_mode("mode")?;
        }
        if has("plane") {
            let p = self.get_str("plane")?;
            if p != "lambda" && p != "h2lambda" {
                return Err(Error::Config(format!(
                    "plane must be lambda or h2lambda, got `{p}`"
                )));
            }
        }
        if has("nx") && (self.get_usize("nx")? < 2 || self.get_usize("ny")? < 2) {
            return Err(Error::Config(
                "raster resolution must be at least 2 x 2".into(),
            ));
        }
        if has("blowup") {
            let (blowup, decay) = (self.get_f64("blowup")?, self.get_f64("decay")?);
            if !(blowup > 1.0 && decay < 1.0 && decay > 0.0) {
                return Err(Error::Config(
                    "thresholds need blowup > 1 > decay > 0".into(),
                ));
            }
        }
        if has("horizon") && self.get_usize("horizon")? == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if has("h") && !(self.get_f64("h")? > 0.0) {
            return Err(Error::Config("h must be positive".into()));
        }
        Ok(())
    }
}
