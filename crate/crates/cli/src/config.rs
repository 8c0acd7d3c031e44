//! Run configuration: command-specific defaults, a flat `key = value` file,
//! and command-line overrides, applied in that order.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use tensor_denoise_core::{admissible_dims, AlsOptions, FormatKind, SweepSolver};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SweepDim,
    SweepRank,
    VerifyTheory,
    Steering,
    CalibrateMu,
    Fit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SweepDim => "sweep-dim",
            Command::SweepRank => "sweep-rank",
            Command::VerifyTheory => "verify-theory",
            Command::Steering => "steering",
            Command::CalibrateMu => "calibrate-mu",
            Command::Fit => "fit",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const KEYS: &[&str] = &[
    "m_exponent",
    "dims",
    "ratios",
    "seeds",
    "seed",
    "format",
    "shape",
    "ranks",
    "solver",
    "knorm_restarts",
    "max_sweeps",
    "rel_tol",
    "restarts",
    "out",
    "plots",
    "points",
    "records",
    "trials",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// Element count is `2^m_exponent`.
    pub m_exponent: u32,
    pub dims: Vec<usize>,
    pub ratios: Vec<f64>,
    pub seeds: usize,
    pub seed: u64,
    pub format: FormatKind,
    pub shape: Vec<usize>,
    pub ranks: Vec<usize>,
    pub solver: SweepSolver,
    pub knorm_restarts: Option<usize>,
    pub max_sweeps: usize,
    pub rel_tol: f64,
    pub restarts: usize,
    pub out: PathBuf,
    pub plots: bool,
    pub points: Vec<(f64, f64)>,
    pub records: Option<PathBuf>,
    pub trials: usize,
}

fn rank_sweep_shape(format: FormatKind) -> Vec<usize> {
    match format {
        FormatKind::Canonical => vec![16; 3],
        FormatKind::TensorTrain => vec![4; 6],
        FormatKind::Tucker => vec![8; 4],
    }
}

fn rank_sweep_ranks(format: FormatKind) -> Vec<usize> {
    match format {
        FormatKind::Tucker => (1..=4).collect(),
        _ => (1..=8).collect(),
    }
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let als = AlsOptions::default();
        let mut cfg = RunConfig {
            command,
            m_exponent: 12,
            dims: admissible_dims(12),
            ratios: vec![0.1, 10.0],
            seeds: 10,
            seed: 0,
            format: FormatKind::Canonical,
            shape: Vec::new(),
            ranks: Vec::new(),
            solver: SweepSolver::default(),
            knorm_restarts: None,
            max_sweeps: als.max_sweeps,
            rel_tol: als.rel_tol,
            restarts: als.restarts,
            out: PathBuf::from("out"),
            plots: false,
            points: Vec::new(),
            records: None,
            trials: 1000,
        };
        match command {
            Command::SweepRank => {
                cfg.ratios = vec![0.1];
                cfg.seeds = 20;
                cfg.restarts = 3;
                cfg.max_sweeps = 500;
            }
            Command::Steering => {
                cfg.ratios = vec![0.1];
                cfg.shape = vec![4; 4];
                cfg.trials = 20;
            }
            Command::CalibrateMu => {
                cfg.ratios = vec![1.0];
                cfg.knorm_restarts = Some(2);
            }
            _ => {}
        }
        cfg
    }

    /// Applies `pairs` in order; later pairs win.
    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<()> {
        let mut dims_set = false;
        let mut shape_set = false;
        let mut ranks_set = false;
        for (key, value) in pairs {
            let v = value.as_str();
            match key.as_str() {
                "m_exponent" => self.m_exponent = parse(key, v)?,
                "dims" => {
                    self.dims = parse_list(key, v)?;
                    dims_set = true;
                }
                "ratios" => self.ratios = parse_list(key, v)?,
                "seeds" => self.seeds = parse(key, v)?,
                "seed" => self.seed = parse(key, v)?,
                "format" => self.format = parse(key, v)?,
                "shape" => {
                    self.shape = parse_list(key, v)?;
                    shape_set = true;
                }
                "ranks" => {
                    self.ranks = parse_ranks(key, v)?;
                    ranks_set = true;
                }
                "solver" => self.solver = parse(key, v)?,
                "knorm_restarts" => {
                    self.knorm_restarts = match v {
                        "none" | "0" => None,
                        _ => Some(parse(key, v)?),
                    }
                }
                "max_sweeps" => self.max_sweeps = parse(key, v)?,
                "rel_tol" => self.rel_tol = parse(key, v)?,
                "restarts" => self.restarts = parse(key, v)?,
                "out" => self.out = PathBuf::from(v),
                "plots" => self.plots = parse(key, v)?,
                "points" => self.points = parse_points(v)?,
                "records" => self.records = Some(PathBuf::from(v)),
                "trials" => self.trials = parse(key, v)?,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown key {other:?} (known: {})",
                        KEYS.join(", ")
                    )))
                }
            }
        }
        if !dims_set && self.command != Command::Steering {
            self.dims = admissible_dims(self.m_exponent);
        }
        if self.command == Command::SweepRank {
            if !shape_set {
                self.shape = rank_sweep_shape(self.format);
            }
            if !ranks_set {
                self.ranks = rank_sweep_ranks(self.format);
            }
        }
        Ok(())
    }

    pub fn als(&self) -> AlsOptions {
        AlsOptions {
            max_sweeps: self.max_sweeps,
            rel_tol: self.rel_tol,
            restarts: self.restarts,
            seed: self.seed,
            ..AlsOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.seeds == 0 {
            return bad("seeds must be >= 1".into());
        }
        self.als().validate()?;
        if self.ratios.is_empty() || self.ratios.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return bad(format!(
                "ratios {:?} must be non-empty and >= 0",
                self.ratios
            ));
        }
        match self.command {
            Command::SweepDim | Command::CalibrateMu => {
                if self.m_exponent == 0 || self.m_exponent > 40 {
                    return bad(format!(
                        "m_exponent {} out of range 1..=40",
                        self.m_exponent
                    ));
                }
                if self.dims.is_empty() {
                    return bad(format!("no dimension d >= 2 divides {}", self.m_exponent));
                }
                if let Some(d) = self
                    .dims
                    .iter()
                    .find(|&&d| d < 2 || self.m_exponent as usize % d != 0)
                {
                    return bad(format!(
                        "d = {d} does not give an integer side for M = 2^{}",
                        self.m_exponent
                    ));
                }
            }
            Command::SweepRank => {
                if self.shape.is_empty() || self.shape.contains(&0) {
                    return bad(format!("shape {:?}", self.shape));
                }
                if self.ranks.len() < 3 {
                    return bad("a rank sweep needs at least 3 ranks".into());
                }
            }
            Command::Steering => {
                if self.shape.is_empty() || self.shape.contains(&0) {
                    return bad(format!("shape {:?}", self.shape));
                }
                if self.trials == 0 {
                    return bad("trials must be >= 1".into());
                }
            }
            Command::VerifyTheory => {
                if self.trials == 0 {
                    return bad("trials must be >= 1".into());
                }
            }
            Command::Fit => {
                if self.points.is_empty() && self.records.is_none() {
                    return bad("fit needs points=r:eps,... or records=FILE".into());
                }
            }
        }
        Ok(())
    }

    /// The effective settings as `key = value` lines, parseable by
    /// [`parse_config_text`].
    pub fn echo(&self) -> Vec<(String, String)> {
        let join = |v: Vec<String>| v.join(",");
        let mut out = vec![
            ("m_exponent".into(), self.m_exponent.to_string()),
            (
                "dims".into(),
                join(self.dims.iter().map(|x| x.to_string()).collect()),
            ),
            (
                "ratios".into(),
                join(self.ratios.iter().map(|x| x.to_string()).collect()),
            ),
            ("seeds".into(), self.seeds.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("format".into(), self.format.short_name().to_string()),
            (
                "shape".into(),
                join(self.shape.iter().map(|x| x.to_string()).collect()),
            ),
            (
                "ranks".into(),
                join(self.ranks.iter().map(|x| x.to_string()).collect()),
            ),
            ("solver".into(), solver_name(self.solver).to_string()),
            (
                "knorm_restarts".into(),
                self.knorm_restarts.map_or("none".into(), |k| k.to_string()),
            ),
            ("max_sweeps".into(), self.max_sweeps.to_string()),
            ("rel_tol".into(), self.rel_tol.to_string()),
            ("restarts".into(), self.restarts.to_string()),
            ("plots".into(), self.plots.to_string()),
            ("trials".into(), self.trials.to_string()),
        ];
        if !self.points.is_empty() {
            out.push((
                "points".into(),
                join(
                    self.points
                        .iter()
                        .map(|(r, e)| format!("{r}:{e}"))
                        .collect(),
                ),
            ));
        }
        out.retain(|(_, v)| !v.is_empty());
        out
    }
}

pub fn solver_name(s: SweepSolver) -> &'static str {
    match s {
        SweepSolver::Als => "als",
        SweepSolver::Multigrid => "multigrid",
        SweepSolver::Fallback => "fallback",
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e| CliError::Config(format!("{key} = {v:?}: {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// `1,2,4` or an inclusive range `1..8`.
fn parse_ranks(key: &str, v: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = v.split_once("..") {
        let lo: usize = parse(key, a)?;
        let hi: usize = parse(key, b.trim_start_matches('='))?;
        return Ok((lo..=hi).collect());
    }
    parse_list(key, v)
}

/// `r:eps` pairs separated by commas.
fn parse_points(v: &str) -> Result<Vec<(f64, f64)>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| {
            let (r, e) = p
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("point {p:?} is not r:eps")))?;
            Ok((parse("points", r)?, parse("points", e)?))
        })
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_text(&text)
}

pub fn parse_override(arg: &str) -> Result<(String, String)> {
    arg.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| CliError::Config(format!("override {arg:?} is not key=value")))
}

/// Defaults, then the file, then command-line pairs.
pub fn resolve(
    command: Command,
    file: Option<&Path>,
    cli: &[(String, String)],
) -> Result<RunConfig> {
    let mut pairs = match file {
        Some(p) => read_config_file(p)?,
        None => Vec::new(),
    };
    pairs.extend(cli.iter().cloned());
    let mut cfg = RunConfig::defaults(command);
    cfg.apply(&pairs)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(k: &str, v: &str) -> (String, String) {
        (k.into(), v.into())
    }

    #[test]
    fn cli_beats_file_beats_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# sweep\nseeds = 4\nratios = 0.5\nseed=9\n").unwrap();
        let cfg = resolve(Command::SweepDim, Some(&path), &[kv("seeds", "7")]).unwrap();
        assert_eq!(cfg.seeds, 7);
        assert_eq!(cfg.ratios, vec![0.5]);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.max_sweeps, AlsOptions::default().max_sweeps);
        assert_eq!(cfg.dims, vec![2, 3, 4, 6, 12]);
    }

    #[test]
    fn rank_sweep_defaults_follow_format() {
        let cfg = resolve(Command::SweepRank, None, &[kv("format", "tucker")]).unwrap();
        assert_eq!(cfg.shape, vec![8; 4]);
        assert_eq!(cfg.ranks, vec![1, 2, 3, 4]);
        let cfg = resolve(
            Command::SweepRank,
            None,
            &[kv("format", "tt"), kv("ranks", "2..5")],
        )
        .unwrap();
        assert_eq!(cfg.shape, vec![4; 6]);
        assert_eq!(cfg.ranks, vec![2, 3, 4, 5]);
    }

    #[test]
    fn inconsistent_configs_rejected() {
        for pairs in [
            vec![kv("dims", "5")],
            vec![kv("seeds", "0")],
            vec![kv("ratios", "-1")],
            vec![kv("color", "red")],
            vec![kv("seeds", "many")],
            vec![kv("max_sweeps", "0")],
        ] {
            let err = resolve(Command::SweepDim, None, &pairs).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{pairs:?}");
        }
        assert!(resolve(Command::Fit, None, &[]).is_err());
        assert!(resolve(Command::SweepRank, None, &[kv("ranks", "1,2")]).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = resolve(
            Command::SweepDim,
            None,
            &[
                kv("ratios", "0.1,10"),
                kv("knorm_restarts", "3"),
                kv("solver", "multigrid"),
            ],
        )
        .unwrap();
        let text: String = cfg
            .echo()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        let again = resolve(Command::SweepDim, None, &parse_config_text(&text).unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn points_and_malformed_lines() {
        assert_eq!(
            parse_points("1:2, 4:4").unwrap(),
            vec![(1.0, 2.0), (4.0, 4.0)]
        );
        assert!(parse_points("1-2").is_err());
        assert!(parse_config_text("seeds 4").is_err());
        assert!(parse_override("seeds").is_err());
    }
}
