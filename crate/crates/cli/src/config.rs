//! Command-line configuration: subcommands, the state-source mini-grammar
//! `name:n[:key=val,...]` (or `file:path`), and grid specifications like
//! `t=0:1:0.01`.

use crate::emit::OutputFormat;
use clap::{Args, Parser, Subcommand};
use entanglemeter::detection::{family_param_names, GridAxis};
use entanglemeter::qstate::{state_from_json, State, StateFamily};
use entanglemeter::{state_factory, Error, Result};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "entanglemeter",
    about = "Multipartite entanglement measures, certified bounds, and separability detection",
    version
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: RunCommand,
}

#[derive(Debug, Subcommand)]
pub enum RunCommand {
    /// Evaluate an entanglement measure on a state (exact for pure states,
    /// convex-roof upper estimate for mixed ones)
    Compute(ComputeArgs),
    /// Evaluate certified lower bounds and report an entanglement verdict
    Bounds(BoundsArgs),
    /// Run the separability criteria and degrees at one k
    Detect(DetectArgs),
    /// Sweep the separability criteria over a parameter grid
    Scan(ScanArgs),
    /// Tabulate the comparison measures over a theta grid
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for all randomized procedures
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    /// State source: `file:path.json` or `name:n[:key=val,...]`
    #[arg(long)]
    pub state: String,
    /// Measure name: q-k-me | alpha-k-me | q-gme | alpha-gme
    #[arg(long)]
    pub measure: String,
    /// Parameter q of the q family (q >= 2)
    #[arg(long)]
    pub q: Option<f64>,
    /// Parameter alpha of the alpha family (0 <= alpha <= 1/2)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of blocks k of the partition scan
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// State source: `file:path.json` or `name:n[:key=val,...]`
    #[arg(long)]
    pub state: String,
    /// Bound names: negativity | q-bipartite | wei-bipartite | qn-qubit |
    /// qn-qudit | qn-improved | alpha-n | pi-roof (defaults to every bound
    /// applicable to the given parameters)
    #[arg(long)]
    pub bound: Vec<String>,
    /// Parameter q of the q family
    #[arg(long)]
    pub q: Option<f64>,
    /// Parameter alpha of the alpha family
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of blocks k (used by pi-roof)
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// State source: `file:path.json` or `name:n[:key=val,...]`
    #[arg(long)]
    pub state: String,
    /// Separability level to test
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Family spec without the swept parameters, e.g. `ghz-noise:4`
    #[arg(long)]
    pub state: String,
    /// Separability level to test
    #[arg(long)]
    pub k: usize,
    /// Grid per swept parameter, e.g. `t=0:1:0.01` (repeatable)
    #[arg(long)]
    pub grid: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Theta grid, e.g. `theta=0:3.141593:0.01`
    #[arg(long)]
    pub grid: String,
    /// Parameter q of the compared q family
    #[arg(long, default_value_t = 3.0)]
    pub q: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A parsed state source.
pub enum StateSource {
    File(PathBuf),
    Factory {
        tag: String,
        n: usize,
        params: BTreeMap<String, f64>,
    },
}

impl StateSource {
    /// Parse `file:path` or `name:n[:key=val,...]`.
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(path) = spec.strip_prefix("file:") {
            return Ok(StateSource::File(PathBuf::from(path)));
        }
        let mut parts = spec.split(':');
        let tag = parts
            .next()
            .filter(|t| !t.is_empty())
            .ok_or_else(|| Error::UnknownFamily(spec.to_string()))?
            .to_string();
        let n: usize = parts
            .next()
            .ok_or_else(|| {
                Error::ParamOutOfRange(format!("state spec '{spec}' is missing the site count"))
            })?
            .parse()
            .map_err(|_| {
                Error::ParamOutOfRange(format!("bad site count in state spec '{spec}'"))
            })?;
        let mut params = BTreeMap::new();
        for kv_group in parts {
            for kv in kv_group.split(',') {
                if kv.is_empty() {
                    continue;
                }
                let (key, value) = kv.split_once('=').ok_or_else(|| {
                    Error::ParamOutOfRange(format!("expected key=value, got '{kv}'"))
                })?;
                let value: f64 = value.parse().map_err(|_| {
                    Error::ParamOutOfRange(format!("bad numeric value in '{kv}'"))
                })?;
                params.insert(key.to_string(), value);
            }
        }
        Ok(StateSource::Factory { tag, n, params })
    }

    /// Materialize the state: read the file, or build the family with every
    /// parameter present.
    pub fn load(&self) -> Result<State> {
        match self {
            StateSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::StateParse(format!("{}: {e}", path.display()))
                })?;
                state_from_json(&text)
            }
            StateSource::Factory { tag, n, params } => {
                let names = family_param_names(tag)?;
                let mut positional = Vec::with_capacity(names.len());
                for &name in names {
                    let v = params.get(name).ok_or_else(|| {
                        Error::ParamOutOfRange(format!(
                            "family '{tag}' needs parameter '{name}'"
                        ))
                    })?;
                    positional.push(*v);
                }
                for key in params.keys() {
                    if !names.contains(&key.as_str()) {
                        return Err(Error::ParamOutOfRange(format!(
                            "family '{tag}' has no parameter '{key}'"
                        )));
                    }
                }
                let family = StateFamily::parse(tag, &positional)?;
                Ok(State::Mixed(state_factory(&family, *n)?))
            }
        }
    }

    /// Human-readable identifier for reports.
    pub fn describe(&self) -> String {
        match self {
            StateSource::File(path) => format!("file:{}", path.display()),
            StateSource::Factory { tag, n, params } => {
                if params.is_empty() {
                    format!("{tag}:{n}")
                } else {
                    let kv: Vec<String> =
                        params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    format!("{tag}:{n}:{}", kv.join(","))
                }
            }
        }
    }
}

/// Parse `name=start:stop:step` (or `name=value` for a single point).
pub fn parse_grid(spec: &str) -> Result<GridAxis> {
    let (name, range) = spec.split_once('=').ok_or_else(|| {
        Error::ParamOutOfRange(format!("grid '{spec}' must look like name=start:stop:step"))
    })?;
    let nums: Vec<&str> = range.split(':').collect();
    let parse = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::ParamOutOfRange(format!("bad number '{s}' in grid '{spec}'")))
    };
    match nums.as_slice() {
        [v] => {
            let v = parse(v)?;
            GridAxis::new(name, v, v, 0.0)
        }
        [start, stop, step] => GridAxis::new(name, parse(start)?, parse(stop)?, parse(step)?),
        _ => Err(Error::ParamOutOfRange(format!(
            "grid '{spec}' must look like name=start:stop:step"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_factory_specs() {
        let src = StateSource::parse("ghz-w-noise:4:a=0.3,b=0.2").unwrap();
        match &src {
            StateSource::Factory { tag, n, params } => {
                assert_eq!(tag, "ghz-w-noise");
                assert_eq!(*n, 4);
                assert_eq!(params["a"], 0.3);
                assert_eq!(params["b"], 0.2);
            }
            _ => panic!("expected factory"),
        }
        assert!(src.load().is_ok());
        assert_eq!(src.describe(), "ghz-w-noise:4:a=0.3,b=0.2");
    }

    #[test]
    fn parses_file_specs() {
        match StateSource::parse("file:states/x.json").unwrap() {
            StateSource::File(p) => assert_eq!(p.to_str().unwrap(), "states/x.json"),
            _ => panic!("expected file"),
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(StateSource::parse("ghz").is_err());
        assert!(StateSource::parse("ghz:x").is_err());
        assert!(StateSource::parse("ghz-noise:3:t").is_err());
        assert!(StateSource::parse("ghz-noise:3:t=a").is_err());
        // missing and unknown parameters surface at load time
        assert!(StateSource::parse("ghz-noise:3").unwrap().load().is_err());
        assert!(StateSource::parse("ghz:3:t=0.5").unwrap().load().is_err());
    }

    #[test]
    fn parses_grids() {
        let axis = parse_grid("t=0:1:0.25").unwrap();
        assert_eq!(axis.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let single = parse_grid("t=0.5").unwrap();
        assert_eq!(single.values(), vec![0.5]);
        assert!(parse_grid("t").is_err());
        assert!(parse_grid("t=0:1").is_err());
    }
}
