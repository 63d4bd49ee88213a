//! Run configuration: a flat map of dotted keys, layered as
//! command defaults < preset < config file < command-line flags.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgMatches};
use serde_json::{Map, Number, Value};

use crate::grammar;
use crate::{keyed, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Exit,
    Flow,
    Stationary,
    CriticalCurrent,
    Radial,
    Equilibrium,
    Diagnose,
}

use Command::*;

impl Command {
    pub const ALL: [Command; 7] = [
        Exit,
        Flow,
        Stationary,
        CriticalCurrent,
        Radial,
        Equilibrium,
        Diagnose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Exit => "exit",
            Flow => "flow",
            Stationary => "stationary",
            CriticalCurrent => "critical-current",
            Radial => "radial",
            Equilibrium => "equilibrium",
            Diagnose => "diagnose",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    fn about(self) -> &'static str {
        match self {
            Exit => "Evacuation of a corridor through its exits",
            Flow => "Corridor fed by a prescribed current",
            Stationary => "Stationary flow profiles for every (epsilon, j) pair",
            CriticalCurrent => "Largest current with a stationary profile below one",
            Radial => "Radial characteristics and the first shock",
            Equilibrium => "Time-dependent run compared with its stationary state",
            Diagnose => "Density bounds, Lyapunov integrals and gradient norms of a run",
        }
    }

    /// Commands that run a time-dependent scenario.
    pub fn simulates(self) -> bool {
        matches!(self, Exit | Flow | Equilibrium | Diagnose)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    Text,
    FloatList,
}

pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub commands: &'static [Command],
    pub help: &'static str,
}

const ALL: &[Command] = &Command::ALL;
const SIM: &[Command] = &[Exit, Flow, Equilibrium, Diagnose];
const GRID: &[Command] = &[Exit, Flow, Equilibrium, Diagnose, Stationary];
const TIMED: &[Command] = &[Exit, Flow, Equilibrium, Diagnose, Radial];
const VISCOUS: &[Command] = &[
    Exit,
    Flow,
    Equilibrium,
    Diagnose,
    Stationary,
    CriticalCurrent,
];

#[rustfmt::skip]
pub const KEYS: &[Key] = &[
    Key { name: "preset", kind: Kind::Text, commands: ALL, help: "Named scenario applied before the config file" },
    Key { name: "out", kind: Kind::Text, commands: ALL, help: "Output directory" },
    Key { name: "formats", kind: Kind::Text, commands: ALL, help: "Detail outputs: csv, json or csv,json" },
    Key { name: "grid.n", kind: Kind::Int, commands: GRID, help: "Number of grid nodes on [0, 1]" },
    Key { name: "epsilon", kind: Kind::FloatList, commands: VISCOUS, help: "Viscosity (a list for sweeps)" },
    Key { name: "t_end", kind: Kind::Float, commands: TIMED, help: "Final time" },
    Key { name: "dt", kind: Kind::Float, commands: TIMED, help: "Time step (default h/2 for corridor runs)" },
    Key { name: "record_every", kind: Kind::Int, commands: TIMED, help: "Steps between stored snapshots" },
    Key { name: "initial", kind: Kind::Text, commands: SIM, help: "Initial density: zero, const:C, sin2:A:K, quartic:A, bump:LO:PEAK:HI:MAX" },
    Key { name: "bc.left.rho", kind: Kind::Text, commands: SIM, help: "Density at x=0: dirichlet:V, ramp:A:RATE, noflux, influx:J" },
    Key { name: "bc.right.rho", kind: Kind::Text, commands: SIM, help: "Density at x=1: dirichlet:V, ramp:A:RATE, noflux, influx:J" },
    Key { name: "bc.left.u", kind: Kind::Text, commands: SIM, help: "Exit time at x=0: exit, exit:V, reflecting" },
    Key { name: "bc.right.u", kind: Kind::Text, commands: SIM, help: "Exit time at x=1: exit, exit:V, reflecting" },
    Key { name: "breakdown_tol", kind: Kind::Float, commands: SIM, help: "Halt once max rho exceeds 1 + this" },
    Key { name: "eikonal.tolerance", kind: Kind::Float, commands: SIM, help: "Scaled eikonal residual tolerance" },
    Key { name: "eikonal.rho_cap", kind: Kind::Float, commands: SIM, help: "Density cap inside the slowness" },
    Key { name: "eikonal.max_iterations", kind: Kind::Int, commands: SIM, help: "Sweep limit of the eikonal solver" },
    Key { name: "alpha", kind: Kind::Float, commands: &[Diagnose], help: "Lyapunov exponent parameter, < -1" },
    Key { name: "p", kind: Kind::FloatList, commands: &[Diagnose], help: "Exponents p > 1 for the gradient norms" },
    Key { name: "j", kind: Kind::FloatList, commands: &[Stationary], help: "Currents" },
    Key { name: "tol", kind: Kind::Float, commands: &[CriticalCurrent], help: "Bracket width of the critical current" },
    Key { name: "radial.profile", kind: Kind::Text, commands: &[Radial], help: "case:N or an initial-density profile in r" },
    Key { name: "radial.d", kind: Kind::Int, commands: &[Radial], help: "Space dimension, 2 or 3" },
    Key { name: "radial.samples", kind: Kind::Int, commands: &[Radial], help: "Launch radii on [0.001, 1.2]" },
];

pub fn key(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}

fn defaults(cmd: Command) -> Vec<(&'static str, &'static str)> {
    let mut d = vec![("formats", "csv,json")];
    if cmd.simulates() {
        d.extend([
            ("grid.n", "201"),
            ("epsilon", "0.05"),
            ("t_end", "1"),
            ("record_every", "10"),
            ("initial", "zero"),
            ("bc.left.rho", "dirichlet:0"),
            ("bc.right.rho", "dirichlet:0"),
            ("bc.left.u", "exit"),
            ("bc.right.u", "exit"),
            ("breakdown_tol", "1e-3"),
            ("eikonal.tolerance", "1e-10"),
            ("eikonal.rho_cap", "0.999999"),
            ("eikonal.max_iterations", "10000"),
        ]);
    }
    match cmd {
        Flow => d.extend([("bc.left.rho", "influx:0.2"), ("bc.left.u", "reflecting")]),
        Equilibrium => d.extend([("bc.left.rho", "ramp:-0.2:10"), ("bc.left.u", "reflecting")]),
        Diagnose => d.extend([("alpha", "-2"), ("p", "2,4")]),
        Stationary => d.extend([("grid.n", "201"), ("epsilon", "1"), ("j", "0.1,0.5,1")]),
        CriticalCurrent => d.extend([("epsilon", "1"), ("tol", "1e-4")]),
        Radial => d.extend([
            ("radial.profile", "case:2"),
            ("radial.d", "3"),
            ("radial.samples", "401"),
            ("t_end", "3"),
            ("dt", "0.005"),
            ("record_every", "10"),
        ]),
        _ => {}
    }
    d
}

pub struct Preset {
    pub name: &'static str,
    pub commands: &'static [Command],
    pub values: &'static [(&'static str, &'static str)],
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "example1",
        commands: &[Exit, Diagnose],
        values: &[
            ("epsilon", "0.01"),
            ("initial", "sin2:0.9:3"),
            ("bc.left.rho", "dirichlet:0"),
            ("bc.right.rho", "dirichlet:0"),
            ("bc.left.u", "exit"),
            ("bc.right.u", "exit"),
            ("t_end", "2"),
        ],
    },
    Preset {
        name: "example2",
        commands: &[Flow, Diagnose],
        values: &[
            ("epsilon", "0.1"),
            ("initial", "zero"),
            ("bc.left.rho", "influx:1"),
            ("bc.left.u", "reflecting"),
            ("bc.right.rho", "dirichlet:0"),
            ("bc.right.u", "exit"),
            ("t_end", "2"),
        ],
    },
    Preset {
        name: "trend",
        commands: &[Equilibrium, Diagnose],
        values: &[
            ("epsilon", "0.05"),
            ("initial", "quartic:1"),
            ("bc.left.rho", "ramp:-0.2:10"),
            ("bc.left.u", "reflecting"),
            ("bc.right.rho", "dirichlet:0"),
            ("bc.right.u", "exit"),
            ("t_end", "4"),
            ("record_every", "20"),
        ],
    },
    Preset {
        name: "radial-case1",
        commands: &[Radial],
        values: &[("radial.profile", "case:1")],
    },
    Preset {
        name: "radial-case2",
        commands: &[Radial],
        values: &[("radial.profile", "case:2")],
    },
    Preset {
        name: "radial-case3",
        commands: &[Radial],
        values: &[("radial.profile", "case:3")],
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// A fully resolved configuration. Values are normalised per [`Kind`], so two
/// configs are equal iff they describe the same run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub values: BTreeMap<String, Value>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn float_value(v: f64) -> Value {
    Value::Number(Number::from_f64(v).expect("finite"))
}

/// Parses the textual form of `key`'s value.
fn normalise_text(key: &Key, text: &str) -> Result<Value, CliError> {
    let bad = |why: String| usage(format!("--{}: {why}", key.name));
    Ok(match key.kind {
        Kind::Int => Value::from(
            text.trim()
                .parse::<u64>()
                .map_err(|_| bad(format!("`{text}` is not a non-negative integer")))?,
        ),
        Kind::Float => {
            let v = text
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("`{text}` is not a finite number")))?;
            float_value(v)
        }
        Kind::Text => Value::String(text.to_string()),
        Kind::FloatList => Value::Array(
            grammar::float_list(text)
                .map_err(bad)?
                .into_iter()
                .map(float_value)
                .collect(),
        ),
    })
}

/// Accepts the JSON form of `key`'s value; strings go through the flag parser.
fn normalise_json(key: &Key, v: &Value) -> Result<Value, CliError> {
    let bad = || {
        usage(format!(
            "config key `{}` has a value of the wrong type",
            key.name
        ))
    };
    match (key.kind, v) {
        (_, Value::String(s)) => normalise_text(key, s),
        (Kind::Int, Value::Number(n)) => n.as_u64().map(Value::from).ok_or_else(bad),
        (Kind::Float | Kind::FloatList, Value::Number(n)) => {
            let x = n.as_f64().filter(|x| x.is_finite()).ok_or_else(bad)?;
            Ok(if key.kind == Kind::Float {
                float_value(x)
            } else {
                Value::Array(vec![float_value(x)])
            })
        }
        (Kind::FloatList, Value::Array(items)) if !items.is_empty() => items
            .iter()
            .map(|i| {
                i.as_f64()
                    .filter(|x| x.is_finite())
                    .map(float_value)
                    .ok_or_else(bad)
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Value::Array),
        _ => Err(bad()),
    }
}

fn applicable(cmd: Command, name: &str) -> Result<&'static Key, CliError> {
    let k = key(name).ok_or_else(|| usage(format!("unknown config key `{name}`")))?;
    if !k.commands.contains(&cmd) {
        return Err(usage(format!(
            "key `{name}` does not apply to `{}`",
            cmd.name()
        )));
    }
    Ok(k)
}

pub fn read_config_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(usage(format!(
            "{} must hold a flat JSON object",
            path.display()
        ))),
        Err(e) => Err(usage(format!("{}: {e}", path.display()))),
    }
}

impl RunConfig {
    /// Resolves the layers; `file` and `flags` may each name a preset, flags winning.
    pub fn resolve(
        command: Command,
        file: &Map<String, Value>,
        flags: &[(String, String)],
    ) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (name, text) in defaults(command) {
            values.insert(
                name.to_string(),
                normalise_text(applicable(command, name)?, text)?,
            );
        }

        let mut file_values = Vec::new();
        for (name, v) in file {
            if name == "command" {
                if v.as_str() != Some(command.name()) {
                    return Err(usage(format!(
                        "config file is for `{v}`, not `{}`",
                        command.name()
                    )));
                }
                continue;
            }
            let k = applicable(command, name)?;
            file_values.push((name.clone(), normalise_json(k, v)?));
        }
        let mut flag_values = Vec::new();
        for (name, text) in flags {
            flag_values.push((
                name.clone(),
                normalise_text(applicable(command, name)?, text)?,
            ));
        }

        let preset_name = flag_values
            .iter()
            .chain(&file_values)
            .find(|(n, _)| n == "preset")
            .and_then(|(_, v)| v.as_str().map(str::to_string));
        if let Some(name) = preset_name {
            let p = preset(&name).ok_or_else(|| usage(format!("unknown preset `{name}`")))?;
            if !p.commands.contains(&command) {
                return Err(usage(format!(
                    "preset `{name}` does not apply to `{}`",
                    command.name()
                )));
            }
            for (k, text) in p.values {
                values.insert(
                    k.to_string(),
                    normalise_text(applicable(command, k)?, text)?,
                );
            }
        }
        values.extend(file_values);
        values.extend(flag_values);

        let mut cfg = Self { command, values };
        cfg.fill_dependent_defaults()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Re-parses the configuration echoed in a manifest.
    pub fn from_echo(echo: &Value) -> Result<Self, CliError> {
        let map = echo
            .as_object()
            .ok_or_else(|| usage("echoed config must be a JSON object"))?;
        let command = map
            .get("command")
            .and_then(Value::as_str)
            .and_then(Command::from_name)
            .ok_or_else(|| usage("echoed config lacks a valid `command`"))?;
        Self::resolve(command, map, &[])
    }

    fn fill_dependent_defaults(&mut self) -> Result<(), CliError> {
        if self.command.simulates() && !self.values.contains_key("dt") {
            let n = self.usize("grid.n")?;
            if n < 2 {
                return Err(usage("--grid.n must be at least 2"));
            }
            self.values
                .insert("dt".into(), float_value(0.5 / (n - 1) as f64));
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        if !self.values.contains_key("out") {
            return Err(usage("missing --out DIR"));
        }
        let formats = self.text("formats")?;
        if formats
            .split(',')
            .any(|f| !matches!(f.trim(), "csv" | "json"))
        {
            return Err(usage(format!("--formats: unknown format in `{formats}`")));
        }
        if self.command.simulates() {
            self.scalar_epsilon()?;
            for k in ["bc.left.rho", "bc.right.rho"] {
                grammar::density_bc(self.text(k)?).map_err(keyed(k))?;
            }
            let lu = grammar::value_bc(self.text("bc.left.u")?).map_err(keyed("bc.left.u"))?;
            let ru = grammar::value_bc(self.text("bc.right.u")?).map_err(keyed("bc.right.u"))?;
            grammar::Profile::parse(self.text("initial")?).map_err(keyed("initial"))?;
            if !lu.is_exit() && !ru.is_exit() {
                return Err(usage(
                    "bc.left.u / bc.right.u: at least one end must be an exit",
                ));
            }
        }
        if self.command == Diagnose {
            let alpha = self.float("alpha")?;
            if !(alpha < -1.0) {
                return Err(usage(format!("--alpha: must be < -1, got {alpha}")));
            }
            if let Some(p) = self.list("p")?.into_iter().find(|&p| !(p > 1.0)) {
                return Err(usage(format!("--p: every p must be > 1, got {p}")));
            }
        }
        Ok(())
    }

    pub fn text(&self, name: &str) -> Result<&str, CliError> {
        self.values
            .get(name)
            .and_then(Value::as_str)
            .ok_or_else(|| usage(format!("missing --{name}")))
    }

    pub fn float(&self, name: &str) -> Result<f64, CliError> {
        self.values
            .get(name)
            .and_then(Value::as_f64)
            .ok_or_else(|| usage(format!("missing --{name}")))
    }

    pub fn usize(&self, name: &str) -> Result<usize, CliError> {
        self.values
            .get(name)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| usage(format!("missing --{name}")))
    }

    pub fn list(&self, name: &str) -> Result<Vec<f64>, CliError> {
        self.values
            .get(name)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_f64).collect())
            .ok_or_else(|| usage(format!("missing --{name}")))
    }

    /// Simulation commands take a single viscosity.
    pub fn scalar_epsilon(&self) -> Result<f64, CliError> {
        match self.list("epsilon")?.as_slice() {
            [e] => Ok(*e),
            _ => Err(usage(format!(
                "--epsilon: `{}` takes one value",
                self.command.name()
            ))),
        }
    }

    pub fn out_dir(&self) -> Result<PathBuf, CliError> {
        self.text("out").map(PathBuf::from)
    }

    pub fn wants(&self, format: &str) -> bool {
        self.text("formats")
            .map(|f| f.split(',').any(|x| x.trim() == format))
            .unwrap_or(false)
    }

    /// Flat JSON echo, with the command, that [`RunConfig::from_echo`] reverses.
    pub fn echo(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::String(self.command.name().into()));
        for (k, v) in &self.values {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }
}

pub fn cli() -> clap::Command {
    let mut app = clap::Command::new("crowdsim")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Hughes crowd model: corridor runs, stationary flows and radial characteristics")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for cmd in Command::ALL {
        let mut sub = clap::Command::new(cmd.name()).about(cmd.about()).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("Flat JSON object of config keys"),
        );
        for k in KEYS.iter().filter(|k| k.commands.contains(&cmd)) {
            sub = sub.arg(
                Arg::new(k.name)
                    .long(k.name)
                    .value_name("VALUE")
                    .allow_hyphen_values(true)
                    .help(k.help),
            );
        }
        app = app.subcommand(sub);
    }
    app
}

fn flags_of(cmd: Command, m: &ArgMatches) -> Vec<(String, String)> {
    KEYS.iter()
        .filter(|k| k.commands.contains(&cmd))
        .filter_map(|k| {
            m.get_one::<String>(k.name)
                .map(|v| (k.name.to_string(), v.clone()))
        })
        .collect()
}

/// Parses `argv` (including the program name) into a resolved configuration.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = cli().try_get_matches_from(args)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let command = Command::from_name(name).expect("subcommands mirror Command::ALL");
    let file = match sub.get_one::<PathBuf>("config") {
        Some(p) => read_config_file(p)?,
        None => Map::new(),
    };
    RunConfig::resolve(command, &file, &flags_of(command, sub))
}
