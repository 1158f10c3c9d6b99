//! Run specifications and the flat `key = value` settings they are built from.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use brp_core::crep::REQUIRED_DELTA;
use brp_core::greedy::DEFAULT_LAMBDA;
use brp_core::Params;

use crate::CliError;

/// Every key a config file or flag may set.
pub const KEYS: &[&str] = &[
    "alg", "source", "n", "k", "l", "alpha", "delta", "lambda", "seed", "steps", "oracle", "trace",
    "out", "phases", "pages", "p_in", "p_out",
];

/// Keys that take comma-separated lists in `sweep` and `compare`.
pub const GRID_KEYS: &[&str] = &["alg", "source", "k", "l", "alpha", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AlgSpec {
    Crep,
    Greedy { lambda: u64 },
    /// The naive swap baseline; `lambda` doubles as its threshold.
    Threshold { tau: u64 },
    Null,
}

impl AlgSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Crep => "crep",
            Self::Greedy { .. } => "greedy",
            Self::Threshold { .. } => "threshold",
            Self::Null => "null",
        }
    }
}

#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub enum SourceSpec {
    RandomPairs,
    Planted { p_in: f64, p_out: f64 },
    K2Phase { phases: usize },
    Theorem2,
    Ring,
    Paging { pages: usize },
    Trace { path: PathBuf },
}

impl SourceSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RandomPairs => "random_pairs",
            Self::Planted { .. } => "planted_partition",
            Self::K2Phase { .. } => "k2_phase",
            Self::Theorem2 => "theorem2",
            Self::Ring => "ring",
            Self::Paging { .. } => "paging",
            Self::Trace { .. } => "trace",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    Dp,
    Static,
    None,
}

impl Oracle {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dp => "dp",
            Self::Static => "static",
            Self::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub alg: AlgSpec,
    pub source: SourceSpec,
    /// Online geometry; `delta` is the augmentation the online side gets.
    pub params: Params,
    pub seed: u64,
    pub steps: u64,
    pub oracle: Oracle,
    pub out: Option<PathBuf>,
}

impl RunSpec {
    /// The geometry the offline oracle runs on.
    pub fn offline_params(&self) -> Params {
        Params { delta: 1, ..self.params }
    }

    /// Sort key for deterministic report assembly.
    pub fn key(&self) -> (String, String, usize, usize, usize, u64, u64) {
        let p = &self.params;
        (self.alg.name().into(), self.source.name().into(), p.n, p.k, p.l, p.alpha, self.seed)
    }

    fn validate(&self) -> Result<(), CliError> {
        let p = &self.params;
        let bad = |msg: String| Err(CliError::Spec(msg));
        match self.alg {
            AlgSpec::Crep if p.delta < REQUIRED_DELTA => {
                return bad(format!("crep needs delta >= {REQUIRED_DELTA}, got {}", p.delta))
            }
            AlgSpec::Greedy { .. } if p.k != 2 => {
                return bad(format!("greedy needs k = 2, got k = {}", p.k))
            }
            AlgSpec::Greedy { lambda: 0 } | AlgSpec::Threshold { tau: 0 } => {
                return bad("lambda must be positive".into())
            }
            AlgSpec::Greedy { .. } | AlgSpec::Threshold { .. } | AlgSpec::Null if p.delta != 1 => {
                return bad(format!("only crep runs augmented, got delta = {}", p.delta))
            }
            AlgSpec::Threshold { .. } if p.k < 2 => {
                return bad("threshold swapping needs k >= 2".into())
            }
            _ => {}
        }
        match &self.source {
            SourceSpec::Theorem2 | SourceSpec::Paging { .. } if p.l != 2 => {
                bad(format!("{} needs l = 2, got l = {}", self.source.name(), p.l))
            }
            SourceSpec::K2Phase { .. } if p.k != 2 => {
                bad(format!("k2_phase needs k = 2, got k = {}", p.k))
            }
            SourceSpec::Paging { .. } if p.k < 2 => bad("paging needs k >= 2".into()),
            SourceSpec::Ring | SourceSpec::RandomPairs | SourceSpec::Planted { .. } if p.n < 3 => {
                bad(format!("{} needs n >= 3", self.source.name()))
            }
            _ => Ok(()),
        }
    }
}

/// Raw settings: defaults, then a config file, then flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse_config(text: &str) -> Result<Self, CliError> {
        let mut settings = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config { line: i + 1, message: format!("expected key = value, got `{line}`") });
            };
            settings
                .set(key.trim(), value.trim())
                .map_err(|e| CliError::Config { line: i + 1, message: e.to_string() })?;
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse_config(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Spec(format!("unknown setting `{key}`")));
        }
        self.values.insert(key, value.to_string());
        Ok(())
    }

    /// Values in `other` win.
    pub fn overlay(&mut self, other: &Settings) {
        self.values.extend(other.values.clone());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn list(&self, key: &str, default: &str) -> Vec<String> {
        self.get(key)
            .unwrap_or(default)
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect()
    }

    fn scalar<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => parse_value(key, raw),
        }
    }

    /// The single spec these settings describe; lists are rejected.
    pub fn spec(&self) -> Result<RunSpec, CliError> {
        let mut specs = self.expand()?;
        if specs.len() != 1 {
            return Err(CliError::Spec(format!(
                "settings describe {} runs; use sweep or compare for grids",
                specs.len()
            )));
        }
        Ok(specs.remove(0))
    }

    /// One spec per cell of the grid spanned by the list-valued keys.
    pub fn expand(&self) -> Result<Vec<RunSpec>, CliError> {
        for key in KEYS.iter().filter(|k| !GRID_KEYS.contains(k)) {
            if self.get(key).is_some_and(|v| v.contains(',')) {
                return Err(CliError::Spec(format!("`{key}` takes a single value")));
            }
        }
        let algs = self.list("alg", "crep");
        let sources = self.list("source", "random_pairs");
        let ks: Vec<usize> = parse_list("k", &self.list("k", "2"))?;
        let ls: Vec<usize> = parse_list("l", &self.list("l", "2"))?;
        let alphas: Vec<u64> = parse_list("alpha", &self.list("alpha", "1"))?;
        let seeds: Vec<u64> = parse_list("seed", &self.list("seed", "0"))?;

        let mut specs = Vec::new();
        for alg in &algs {
            for source in &sources {
                for &k in &ks {
                    for &l in &ls {
                        for &alpha in &alphas {
                            for &seed in &seeds {
                                specs.push(self.cell(alg, source, k, l, alpha, seed)?);
                            }
                        }
                    }
                }
            }
        }
        if specs.is_empty() {
            return Err(CliError::Spec("empty grid".into()));
        }
        Ok(specs)
    }

    fn cell(&self, alg: &str, source: &str, k: usize, l: usize, alpha: u64, seed: u64) -> Result<RunSpec, CliError> {
        let lambda = self.scalar("lambda", DEFAULT_LAMBDA)?;
        let alg = match alg {
            "crep" => AlgSpec::Crep,
            "greedy" => AlgSpec::Greedy { lambda },
            "threshold" => AlgSpec::Threshold { tau: lambda },
            "null" => AlgSpec::Null,
            other => return Err(CliError::Spec(format!("unknown algorithm `{other}`"))),
        };
        let source = match source {
            "random_pairs" => SourceSpec::RandomPairs,
            "planted_partition" => SourceSpec::Planted {
                p_in: self.scalar("p_in", 0.9)?,
                p_out: self.scalar("p_out", 0.1)?,
            },
            "k2_phase" => SourceSpec::K2Phase { phases: self.scalar("phases", 10)? },
            "theorem2" => SourceSpec::Theorem2,
            "ring" => SourceSpec::Ring,
            "paging" => SourceSpec::Paging { pages: self.scalar("pages", 16)? },
            "trace" => SourceSpec::Trace {
                path: self
                    .get("trace")
                    .map(PathBuf::from)
                    .ok_or_else(|| CliError::Spec("source trace needs --trace".into()))?,
            },
            other => return Err(CliError::Spec(format!("unknown source `{other}`"))),
        };
        let default_delta = if alg == AlgSpec::Crep { REQUIRED_DELTA } else { 1 };
        let delta = self.scalar("delta", default_delta)?;
        let n = self.scalar("n", k * l)?;
        if n != k * l {
            return Err(CliError::Spec(format!("n = {n} but k * l = {}", k * l)));
        }
        let params = Params::new(n, k, l, alpha, delta)?;
        let oracle = match self.get("oracle").unwrap_or("dp") {
            "dp" => Oracle::Dp,
            "static" => Oracle::Static,
            "none" => Oracle::None,
            other => return Err(CliError::Spec(format!("unknown oracle `{other}`"))),
        };
        let spec = RunSpec {
            alg,
            source,
            params,
            seed,
            steps: self.scalar("steps", 1000)?,
            oracle,
            out: self.get("out").map(PathBuf::from),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    raw.parse()
        .map_err(|e| CliError::Spec(format!("bad value `{raw}` for {key}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, raw: &[String]) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    raw.iter().map(|v| parse_value(key, v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(pairs: &[(&str, &str)]) -> Settings {
        let mut s = Settings::default();
        for (k, v) in pairs {
            s.set(k, v).unwrap();
        }
        s
    }

    #[test]
    fn defaults_describe_a_crep_run() {
        let spec = Settings::default().spec().unwrap();
        assert_eq!(spec.alg, AlgSpec::Crep);
        assert_eq!(spec.params.delta, REQUIRED_DELTA);
        assert_eq!(spec.offline_params().delta, 1);
        assert_eq!((spec.params.n, spec.params.k, spec.params.l), (4, 2, 2));
    }

    #[test]
    fn config_file_parses_and_flags_override() {
        let mut base = Settings::parse_config("# a run\nalg = greedy\nalpha=2 # cost\n\nsteps = 50\n").unwrap();
        base.overlay(&settings(&[("alpha", "3")]));
        let spec = base.spec().unwrap();
        assert_eq!(spec.alg, AlgSpec::Greedy { lambda: 3 });
        assert_eq!(spec.params.alpha, 3);
        assert_eq!(spec.steps, 50);
    }

    #[test]
    fn config_errors_carry_the_line() {
        let err = Settings::parse_config("alg = crep\nnonsense\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 2, .. }));
        let err = Settings::parse_config("colour = red\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 1, .. }));
    }

    #[test]
    fn geometry_guards() {
        assert!(settings(&[("alg", "greedy"), ("k", "3")]).spec().is_err());
        assert!(settings(&[("delta", "2")]).spec().is_err());
        assert!(settings(&[("source", "theorem2"), ("k", "3"), ("l", "3")]).spec().is_err());
        assert!(settings(&[("n", "5")]).spec().is_err());
        assert!(settings(&[("alg", "null"), ("delta", "4")]).spec().is_err());
    }

    #[test]
    fn grids_expand_in_order() {
        let s = settings(&[("alpha", "1,2,3"), ("k", "2,3,4")]);
        let specs = s.expand().unwrap();
        assert_eq!(specs.len(), 9);
        assert!(s.spec().is_err());
        assert!(settings(&[("steps", "1,2")]).expand().is_err());
    }
}
