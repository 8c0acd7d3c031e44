//! Command execution. Trials run on the current rayon pool; every file is
//! written after the results are collected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tensor_denoise_core::sweep::mean_epsilon_by_rank;
use tensor_denoise_core::theory::{
    border_rank_example, capped_kron_fit, theorem2_decay, unbounded_example, verify_lemmas,
};
use tensor_denoise_core::{
    calibrate_mu, dimension_sweep, empirical_rank1_bound, fit_power_law, random_phases, rank_bound,
    rank_sweep, scaled_theorem1_bound, steering_trial, DimensionSweep, ExperimentRecord,
    PowerLawFit, RankSweep, SteeringTrial,
};

use crate::config::{Command, RunConfig};
use crate::error::{CliError, Result};
use crate::plot::{dimension_plot, rank_plot, DimensionPoint};
use crate::records::{content_hash, Header, RecordFile};

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// Human-readable report printed on stdout.
    pub report: String,
    pub summary: serde_json::Value,
    pub files: Vec<PathBuf>,
    /// Hash of the record file, when one was written.
    pub records_hash: Option<String>,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.command {
        Command::SweepDim => sweep_dim(cfg),
        Command::SweepRank => sweep_rank(cfg),
        Command::VerifyTheory => verify_theory(cfg),
        Command::Steering => steering(cfg),
        Command::CalibrateMu => calibrate(cfg),
        Command::Fit => fit(cfg),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| CliError::Numerical(format!("serialization: {e}")))
}

struct Writer<'a> {
    cfg: &'a RunConfig,
    files: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self> {
        ensure_dir(&cfg.out)?;
        Ok(Writer {
            cfg,
            files: Vec::new(),
        })
    }

    fn records<T: Serialize + serde::de::DeserializeOwned>(
        &mut self,
        rows: Vec<T>,
    ) -> Result<String> {
        let file = RecordFile::new(Header::new(self.cfg.command.name(), self.cfg.echo()), rows);
        let text = file.to_text()?;
        let path = self
            .cfg
            .out
            .join(format!("{}.jsonl", self.cfg.command.name()));
        write_text(&path, &text)?;
        self.files.push(path);
        Ok(content_hash(&text))
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.cfg.out.join(name);
        write_text(&path, text)?;
        self.files.push(path);
        Ok(())
    }

    fn summary(&mut self, summary: &serde_json::Value) -> Result<()> {
        let text = serde_json::to_string_pretty(summary)
            .map_err(|e| CliError::Numerical(format!("serialization: {e}")))?;
        self.text("summary.json", &(text + "\n"))
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn rate(xs: impl Iterator<Item = bool>) -> f64 {
    mean(xs.map(|b| if b { 1.0 } else { 0.0 }))
}

fn ratio_key(r: f64) -> String {
    format!("{r}")
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionRow {
    pub ratio: f64,
    pub d: usize,
    pub m: usize,
    pub trials: usize,
    pub mean_epsilon: f64,
    pub mean_residual: f64,
    pub mean_noise_norm: f64,
    pub empirical_bound: f64,
    pub scaled_theorem1_bound: f64,
    pub epsilon_over_bound: f64,
    pub hypothesis_rate: f64,
    pub guarantee_rate: f64,
    pub mean_knorm: Option<f64>,
}

/// Per `(ratio, d)` means of a dimension sweep, in sweep order.
pub fn dimension_table(records: &[ExperimentRecord]) -> Result<Vec<DimensionRow>> {
    let mut groups: BTreeMap<(String, usize), Vec<&ExperimentRecord>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in records {
        let key = (ratio_key(r.noise_ratio), r.dims());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let first = g[0];
            let elements = first.elements() as u64;
            let d = first.dims();
            let noise = mean(g.iter().map(|r| r.noise_norm));
            let eps = mean(g.iter().map(|r| r.epsilon));
            let bound = empirical_rank1_bound(d, elements, noise)?;
            let knorms: Vec<f64> = g.iter().filter_map(|r| r.knorm).collect();
            Ok(DimensionRow {
                ratio: first.noise_ratio,
                d,
                m: first.shape[0],
                trials: g.len(),
                mean_epsilon: eps,
                mean_residual: mean(g.iter().map(|r| r.residual)),
                mean_noise_norm: noise,
                empirical_bound: bound,
                scaled_theorem1_bound: scaled_theorem1_bound(d, elements, noise)?,
                epsilon_over_bound: eps / bound,
                hypothesis_rate: rate(g.iter().map(|r| r.hypothesis_holds)),
                guarantee_rate: rate(g.iter().map(|r| r.guarantee_holds)),
                mean_knorm: (!knorms.is_empty()).then(|| mean(knorms.into_iter())),
            })
        })
        .collect()
}

fn dimension_sweep_config(cfg: &RunConfig) -> DimensionSweep {
    DimensionSweep {
        m_exponent: cfg.m_exponent,
        dims: cfg.dims.clone(),
        ratios: cfg.ratios.clone(),
        seeds: cfg.seeds,
        master_seed: cfg.seed,
        als: cfg.als(),
        solver: cfg.solver,
        knorm_restarts: cfg.knorm_restarts,
    }
}

fn sweep_dim(cfg: &RunConfig) -> Result<Outcome> {
    let records = dimension_sweep(&dimension_sweep_config(cfg))?;
    let table = dimension_table(&records)?;
    let mut w = Writer::new(cfg)?;
    let hash = w.records(records)?;
    let elements = 1usize << cfg.m_exponent;
    if cfg.plots {
        for &ratio in &cfg.ratios {
            let pts: Vec<DimensionPoint> = table
                .iter()
                .filter(|r| r.ratio == ratio)
                .map(|r| DimensionPoint {
                    d: r.d,
                    epsilon: r.mean_epsilon,
                    residual: r.mean_residual,
                    noise_norm: r.mean_noise_norm,
                    empirical_bound: r.empirical_bound,
                })
                .collect();
            let svg = dimension_plot(&pts, ratio, elements)?;
            w.text(&format!("sweep-dim_ratio_{}.svg", ratio_key(ratio)), &svg)?;
        }
    }
    let mut report = format!(
        "{:>8} {:>3} {:>6} {:>12} {:>12} {:>12} {:>8} {:>6}\n",
        "ratio", "d", "m", "mean eps", "noise norm", "emp. bound", "eps/bnd", "hyp"
    );
    for r in &table {
        report += &format!(
            "{:>8} {:>3} {:>6} {:>12.4e} {:>12.4e} {:>12.4e} {:>8.3} {:>6.2}\n",
            r.ratio,
            r.d,
            r.m,
            r.mean_epsilon,
            r.mean_noise_norm,
            r.empirical_bound,
            r.epsilon_over_bound,
            r.hypothesis_rate
        );
    }
    let summary = serde_json::json!({
        "command": cfg.command.name(),
        "elements": elements,
        "records_sha256": hash,
        "by_dimension": to_json(&table)?,
    });
    w.summary(&summary)?;
    Ok(Outcome {
        report,
        summary,
        files: w.files,
        records_hash: Some(hash),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RankRow {
    pub rank: usize,
    pub mean_epsilon: f64,
    pub mean_noise_norm: f64,
    pub bound: f64,
    pub bound_saturated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankSummary {
    pub ratio: f64,
    pub fit: PowerLawFit,
    pub by_rank: Vec<RankRow>,
    pub hypothesis_rate: f64,
}

fn sweep_rank(cfg: &RunConfig) -> Result<Outcome> {
    let mut all = Vec::new();
    let mut summaries = Vec::new();
    let elements: usize = cfg.shape.iter().product();
    let d = cfg.shape.len();
    for &ratio in &cfg.ratios {
        let sweep = RankSweep {
            master_seed: cfg.seed,
            als: cfg.als(),
            ..RankSweep::new(
                cfg.format,
                cfg.shape.clone(),
                cfg.ranks.clone(),
                ratio,
                cfg.seeds,
            )
        };
        let (mut records, fit) = rank_sweep(&sweep)?;
        let offset = all.len() as u64;
        records.iter_mut().for_each(|r| r.trial += offset);
        let by_rank = mean_epsilon_by_rank(&records)
            .into_iter()
            .map(|(rank, eps)| {
                let noise = mean(
                    records
                        .iter()
                        .filter(|r| r.rank == rank)
                        .map(|r| r.noise_norm),
                );
                let b = rank_bound(cfg.format, d.max(2), elements as u64, rank, noise)?;
                Ok(RankRow {
                    rank,
                    mean_epsilon: eps,
                    mean_noise_norm: noise,
                    bound: b.value,
                    bound_saturated: b.saturated,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        summaries.push(RankSummary {
            ratio,
            fit,
            by_rank,
            hypothesis_rate: rate(records.iter().map(|r| r.hypothesis_holds)),
        });
        all.extend(records);
    }
    let mut w = Writer::new(cfg)?;
    if cfg.plots {
        for s in &summaries {
            let recs: Vec<ExperimentRecord> = all
                .iter()
                .filter(|r| r.noise_ratio == s.ratio)
                .cloned()
                .collect();
            let title = format!(
                "{} rank sweep, shape {:?}, noise ratio {}",
                cfg.format.short_name(),
                cfg.shape,
                s.ratio
            );
            let svg = rank_plot(&recs, Some(&s.fit), &title)?;
            w.text(
                &format!(
                    "sweep-rank_{}_ratio_{}.svg",
                    cfg.format.short_name(),
                    ratio_key(s.ratio)
                ),
                &svg,
            )?;
        }
    }
    let hash = w.records(all)?;
    let mut report = String::new();
    for s in &summaries {
        report += &format!(
            "{} ratio {}: alpha = {:.6}, C = {:.6e}, r^2 = {:.4}\n",
            cfg.format.short_name(),
            s.ratio,
            s.fit.alpha,
            s.fit.c,
            s.fit.r_squared
        );
    }
    let summary = serde_json::json!({
        "command": cfg.command.name(),
        "format": cfg.format.short_name(),
        "shape": cfg.shape,
        "records_sha256": hash,
        "sweeps": to_json(&summaries)?,
    });
    w.summary(&summary)?;
    Ok(Outcome {
        report,
        summary,
        files: w.files,
        records_hash: Some(hash),
    })
}

pub const DECAY_OMEGAS: [f64; 4] = [4.0, 16.0, 64.0, 256.0];
pub const BORDER_OMEGAS: [f64; 4] = [2.0, 8.0, 32.0, 128.0];

fn verify_theory(cfg: &RunConfig) -> Result<Outcome> {
    let lemmas = verify_lemmas(cfg.trials, cfg.seed)?;
    let decay = theorem2_decay(5, &DECAY_OMEGAS, 3, 4, cfg.seed)?;
    let border = capped_kron_fit(&border_rank_example(), &BORDER_OMEGAS, 20, cfg.seed)?;
    let literal = capped_kron_fit(&unbounded_example(), &BORDER_OMEGAS, 20, cfg.seed)?;
    let violations = lemmas.cosine_violations
        + lemmas.condition_violations
        + lemmas.tail_violations
        + usize::from(lemmas.svd_max_error > 1e-10)
        + usize::from(lemmas.condition_max_disagreement > 1e-10)
        + usize::from(!decay.monotone());
    let summary = serde_json::json!({
        "command": cfg.command.name(),
        "lemmas": to_json(&lemmas)?,
        "decay": to_json(&decay)?,
        "border_rank_fit": to_json(&border)?,
        "literal_example_fit": to_json(&literal)?,
        "violations": violations,
    });
    let mut w = Writer::new(cfg)?;
    w.summary(&summary)?;
    let mut report = format!(
        "lemma trials {}: cosine {} / condition {} / tail {} violations; svd error {:.2e}; cond disagreement {:.2e}\n",
        lemmas.trials,
        lemmas.cosine_violations,
        lemmas.condition_violations,
        lemmas.tail_violations,
        lemmas.svd_max_error,
        lemmas.condition_max_disagreement
    );
    report += &format!(
        "conditioned distance slope {:.3}, monotone {}\n",
        decay.slope,
        decay.monotone()
    );
    for f in &border {
        report += &format!(
            "border-rank fit: Omega {:>6} residual {:.3e} cond {:.1}\n",
            f.omega, f.residual, f.cond
        );
    }
    if violations > 0 {
        return Err(CliError::Numerical(format!(
            "{violations} theory checks failed; see {}",
            cfg.out.join("summary.json").display()
        )));
    }
    Ok(Outcome {
        report,
        summary,
        files: w.files,
        records_hash: None,
    })
}

fn steering(cfg: &RunConfig) -> Result<Outcome> {
    use rayon::prelude::*;
    let phases = random_phases(cfg.trials, cfg.seed);
    let jobs: Vec<(f64, usize, f64)> = cfg
        .ratios
        .iter()
        .flat_map(|&ratio| {
            phases
                .iter()
                .enumerate()
                .map(move |(k, &phi)| (ratio, k, phi))
        })
        .collect();
    let opts = cfg.als();
    let rows: Vec<SteeringTrial> = jobs
        .par_iter()
        .map(|&(ratio, k, phi)| {
            let seed = tensor_denoise_core::rng::trial_seed(cfg.seed, k as u64);
            steering_trial(phi, &cfg.shape, ratio, seed, &opts.clone().with_seed(seed))
        })
        .collect::<tensor_denoise_core::Result<_>>()?;
    let max_defect = rows.iter().map(|r| r.rank_defect).fold(0.0, f64::max);
    let below = rate(rows.iter().map(|r| r.epsilon < r.noise_norm));
    let mut w = Writer::new(cfg)?;
    let hash = w.records(rows.clone())?;
    let summary = serde_json::json!({
        "command": cfg.command.name(),
        "shape": cfg.shape,
        "trials": rows.len(),
        "max_rank_defect": max_defect,
        "fraction_epsilon_below_noise": below,
        "mean_epsilon": mean(rows.iter().map(|r| r.epsilon)),
        "mean_noise_norm": mean(rows.iter().map(|r| r.noise_norm)),
        "records_sha256": hash,
    });
    w.summary(&summary)?;
    let report = format!(
        "{} trials: max second singular value {:.2e}, eps < ||N|| in {:.1}%\n",
        rows.len(),
        max_defect,
        100.0 * below
    );
    Ok(Outcome {
        report,
        summary,
        files: w.files,
        records_hash: Some(hash),
    })
}

fn calibrate(cfg: &RunConfig) -> Result<Outcome> {
    let mut w = Writer::new(cfg)?;
    let (records, hash) = match &cfg.records {
        Some(path) => {
            let file = RecordFile::<ExperimentRecord>::read(path)?;
            (file.rows, None)
        }
        None => {
            let records = dimension_sweep(&dimension_sweep_config(cfg))?;
            let hash = w.records(records.clone())?;
            (records, Some(hash))
        }
    };
    let cal = calibrate_mu(&records)?;
    let summary = serde_json::json!({
        "command": cfg.command.name(),
        "calibration": to_json(&cal)?,
        "records_sha256": hash,
    });
    w.summary(&summary)?;
    let report = format!(
        "mu = {:.6} from {} records over d = {:?} (lower estimate)\n",
        cal.mu, cal.records_used, cal.dims
    );
    Ok(Outcome {
        report,
        summary,
        files: w.files,
        records_hash: hash,
    })
}

fn fit(cfg: &RunConfig) -> Result<Outcome> {
    let points: Vec<(f64, f64)> = match &cfg.records {
        Some(path) => {
            let file = RecordFile::<ExperimentRecord>::read(path)?;
            mean_epsilon_by_rank(&file.rows)
                .into_iter()
                .map(|(r, e)| (r as f64, e))
                .collect()
        }
        None => cfg.points.clone(),
    };
    let f = fit_power_law(&points)?;
    let report = format!(
        "alpha = {:.6}\nC = {:.6}\nr_squared = {:.6}\n",
        f.alpha, f.c, f.r_squared
    );
    Ok(Outcome {
        report,
        summary: to_json(&f)?,
        files: Vec::new(),
        records_hash: None,
    })
}
