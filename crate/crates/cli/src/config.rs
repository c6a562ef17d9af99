//! Experiment configuration from flags and `key=value` files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gossip_core::engine::{Engine, DEFAULT_MAX_ITERS};
use gossip_core::{GraphSpec, SamplerSpec};

use crate::CliError;

/// How the private node values `c` are initialized.
#[derive(Debug, Clone, PartialEq)]
pub enum CInit {
    /// `c_i = i`
    Indices,
    Constant(f64),
    /// Whitespace-separated reals, `#` comments allowed.
    File(PathBuf),
}

impl CInit {
    pub fn values(&self, n: usize) -> Result<Vec<f64>, CliError> {
        match self {
            CInit::Indices => Ok((0..n).map(|i| i as f64).collect()),
            CInit::Constant(v) => Ok(vec![*v; n]),
            CInit::File(path) => {
                let text = std::fs::read_to_string(path)?;
                let mut out = Vec::new();
                for (idx, line) in text.lines().enumerate() {
                    let line = line.split('#').next().unwrap_or("");
                    for tok in line.split_whitespace() {
                        let v: f64 = tok.parse().map_err(|_| {
                            CliError::usage("c-init", format!("{}:{}: `{tok}` is not a number", path.display(), idx + 1))
                        })?;
                        out.push(v);
                    }
                }
                if out.len() != n {
                    return Err(CliError::usage(
                        "c-init",
                        format!("{} holds {} values but the graph has {n} nodes", path.display(), out.len()),
                    ));
                }
                Ok(out)
            }
        }
    }
}

impl FromStr for CInit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "indices" {
            return Ok(CInit::Indices);
        }
        if let Some(v) = s.strip_prefix("constant:") {
            return v
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(CInit::Constant)
                .ok_or_else(|| format!("`{v}` is not a finite number"));
        }
        if let Some(p) = s.strip_prefix("file:").filter(|p| !p.is_empty()) {
            return Ok(CInit::File(PathBuf::from(p)));
        }
        Err(format!("`{s}` (expected indices, constant:V or file:PATH)"))
    }
}

impl fmt::Display for CInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CInit::Indices => f.write_str("indices"),
            CInit::Constant(v) => write!(f, "constant:{v}"),
            CInit::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Unvalidated settings. Every field is optional so that a config file and
/// command-line flags can be layered.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub graph: Option<String>,
    pub sampler: Option<String>,
    pub engine: Option<String>,
    pub c_init: Option<String>,
    pub eps: Option<String>,
    pub trials: Option<String>,
    pub seed: Option<String>,
    pub taus: Option<String>,
    pub out: Option<String>,
    pub max_iters: Option<String>,
}

impl RawConfig {
    /// Parses `key=value` lines. Keys use the flag names without dashes.
    pub fn parse_file_contents(text: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage("config", format!("line {}: expected key=value", idx + 1))
            })?;
            let value = Some(value.trim().to_string());
            match key.trim() {
                "graph" => raw.graph = value,
                "sampler" => raw.sampler = value,
                "engine" => raw.engine = value,
                "c-init" | "c_init" => raw.c_init = value,
                "eps" => raw.eps = value,
                "trials" => raw.trials = value,
                "seed" => raw.seed = value,
                "taus" => raw.taus = value,
                "out" => raw.out = value,
                other => {
                    return Err(CliError::usage(
                        "config",
                        format!("line {}: unknown key `{other}`", idx + 1),
                    ))
                }
            }
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        Self::parse_file_contents(&std::fs::read_to_string(path)?)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(self, over: RawConfig) -> RawConfig {
        RawConfig {
            graph: over.graph.or(self.graph),
            sampler: over.sampler.or(self.sampler),
            engine: over.engine.or(self.engine),
            c_init: over.c_init.or(self.c_init),
            eps: over.eps.or(self.eps),
            trials: over.trials.or(self.trials),
            seed: over.seed.or(self.seed),
            taus: over.taus.or(self.taus),
            out: over.out.or(self.out),
            max_iters: over.max_iters.or(self.max_iters),
        }
    }

    pub fn validate(&self) -> Result<ExperimentConfig, CliError> {
        fn field<T: FromStr>(name: &'static str, v: &Option<String>, default: T) -> Result<T, CliError>
        where
            T::Err: fmt::Display,
        {
            match v {
                None => Ok(default),
                Some(s) => s.trim().parse().map_err(|e| CliError::usage(name, format!("`{s}`: {e}"))),
            }
        }

        let graph = self
            .graph
            .as_deref()
            .ok_or_else(|| CliError::usage("graph", "missing (e.g. --graph ring:30)"))?
            .parse::<GraphSpec>()
            .map_err(|e| CliError::usage("graph", e.to_string()))?;
        let sampler = self
            .sampler
            .as_deref()
            .unwrap_or("pairwise")
            .parse::<SamplerSpec>()
            .map_err(|e| CliError::usage("sampler", e.to_string()))?;
        let engine = self
            .engine
            .as_deref()
            .unwrap_or("primal")
            .parse::<Engine>()
            .map_err(|e| CliError::usage("engine", e.to_string()))?;
        let c_init = self
            .c_init
            .as_deref()
            .unwrap_or("indices")
            .parse::<CInit>()
            .map_err(|e| CliError::usage("c-init", e))?;
        let eps: f64 = field("eps", &self.eps, 0.01)?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CliError::usage("eps", format!("{eps} is outside (0, 1)")));
        }
        let trials: usize = field("trials", &self.trials, 20)?;
        if trials == 0 {
            return Err(CliError::usage("trials", "must be at least 1"));
        }
        let seed: u64 = field("seed", &self.seed, 0)?;
        let max_iters: u64 = field("GOSSIP_MAX_ITERS", &self.max_iters, DEFAULT_MAX_ITERS)?;
        let taus = match &self.taus {
            None => None,
            Some(list) => Some(
                list.split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::usage("taus", format!("`{list}`: {e}")))?,
            ),
        };
        Ok(ExperimentConfig {
            graph,
            sampler,
            engine,
            c_init,
            eps,
            trials,
            seed,
            taus,
            out: self.out.as_ref().map(PathBuf::from),
            max_iters,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub sampler: SamplerSpec,
    pub engine: Engine,
    pub c_init: CInit,
    pub eps: f64,
    pub trials: usize,
    pub seed: u64,
    /// Block sizes for speedup mode; the doubling ladder when absent.
    pub taus: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub max_iters: u64,
}

impl ExperimentConfig {
    /// Defaults for everything except the graph.
    pub fn new(graph: GraphSpec) -> Self {
        ExperimentConfig {
            graph,
            sampler: SamplerSpec::SingleEdge,
            engine: Engine::Primal,
            c_init: CInit::Indices,
            eps: 0.01,
            trials: 20,
            seed: 0,
            taus: None,
            out: None,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}
