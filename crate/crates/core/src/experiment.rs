//! Trial harness: generate instances, solve them, compare against the
//! exhaustive reference, and aggregate ratios over many seeds.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brute::{brute_force_ccf, brute_force_flmo, brute_force_msc};
use crate::ccf::{solve_ccf, FullCoverOracle, GenericOracle, ThresholdOracle};
use crate::error::CoreError;
use crate::flmo::{build_flmo, solve_flmo};
use crate::gen::{generate, GeneratedInstance, GeneratorSpec};
use crate::io::{build_ccf, build_msc, to_canonical_json};
use crate::msc::{solve_msc_multi, GuessConfig};
use crate::report::{
    envelope_ccf, envelope_flmo, envelope_msc, instance_digest, SolveReport, StageCost,
    SCHEMA_VERSION,
};
use crate::rng::RngStream;

fn default_trials() -> usize {
    1
}
fn default_eps() -> f64 {
    0.25
}
fn default_alpha() -> usize {
    1
}
fn default_oracle() -> String {
    "threshold".to_string()
}

/// One batch: `trials` independent instances from `generator`, each solved
/// with its own derived seed stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub generator: GeneratorSpec,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_alpha")]
    pub alpha: usize,
    /// Rounding oracle for set-system instances: "threshold" or "generic".
    #[serde(default = "default_oracle")]
    pub oracle: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub instance_seed: u64,
    pub solver_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<SolveReport>,
    /// Exhaustive optimum when the instance is small enough to enumerate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opt_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub spec: ExperimentSpec,
    pub trials: usize,
    pub failures: usize,
    /// Mean of cost/OPT over trials where the optimum is known.
    pub mean_ratio: Option<f64>,
    /// Per-stage costs averaged over successful trials, sorted by stage name.
    pub stage_cost_means: Vec<StageCost>,
    pub records: Vec<TrialRecord>,
}

fn pick_oracle(name: &str) -> Result<Box<dyn FullCoverOracle>, CoreError> {
    match name {
        "threshold" => Ok(Box::new(ThresholdOracle { k: 2 })),
        "generic" => Ok(Box::new(GenericOracle::default())),
        other => Err(CoreError::Domain(format!(
            "unknown oracle {:?}; expected \"threshold\" or \"generic\"",
            other
        ))),
    }
}

fn solve_one(spec: &ExperimentSpec, trial: usize) -> TrialRecord {
    let base = RngStream::new(spec.seed);
    let instance_seed = base.split(2 * trial as u64).seed();
    let solver_seed = base.split(2 * trial as u64 + 1).seed();
    let mut record = TrialRecord {
        trial,
        instance_seed,
        solver_seed,
        error: None,
        report: None,
        opt_cost: None,
        ratio: None,
    };

    let mut gen_spec = spec.generator.clone();
    gen_spec.seed = instance_seed;
    let cfg = GuessConfig::default();
    let mut rng = RngStream::new(solver_seed);

    let outcome: Result<(SolveReport, Option<f64>), CoreError> = (|| {
        let generated = generate(&gen_spec)?;
        match &generated {
            GeneratedInstance::Msc(file) => {
                let inst = build_msc(file)?;
                let digest = instance_digest(&to_canonical_json(file));
                let rep = solve_msc_multi(&inst, spec.alpha, spec.eps, &cfg, &mut rng)?;
                let opt = match brute_force_msc(&inst) {
                    Ok(best) => best.map(|b| b.cost as f64),
                    Err(CoreError::Capacity(_)) => None,
                    Err(e) => return Err(e),
                };
                Ok((envelope_msc(&digest, &rep)?, opt))
            }
            GeneratedInstance::Ccf(file) => {
                let inst = build_ccf(file)?;
                let digest = instance_digest(&to_canonical_json(file));
                let oracle = pick_oracle(&spec.oracle)?;
                let rep = solve_ccf(&inst, spec.eps, &cfg, oracle.as_ref(), &mut rng)?;
                let opt = match brute_force_ccf(&inst) {
                    Ok(best) => best.map(|b| b.cost as f64),
                    Err(CoreError::Capacity(_)) => None,
                    Err(e) => return Err(e),
                };
                Ok((envelope_ccf(&digest, &rep)?, opt))
            }
            GeneratedInstance::Flmo(file) => {
                let inst = build_flmo(file)?;
                let digest = instance_digest(&to_canonical_json(file));
                let rep = solve_flmo(&inst, spec.eps, &cfg, &mut rng)?;
                let opt = match brute_force_flmo(&inst) {
                    Ok(best) => best.map(|b| b.cost),
                    Err(CoreError::Capacity(_)) => None,
                    Err(e) => return Err(e),
                };
                Ok((envelope_flmo(&digest, &rep)?, opt))
            }
        }
    })();

    match outcome {
        Ok((report, opt)) => {
            record.ratio = match opt {
                Some(o) if o > 0.0 => Some(report.total_cost / o),
                Some(_) if report.total_cost == 0.0 => Some(1.0),
                _ => None,
            };
            record.opt_cost = opt;
            record.report = Some(report);
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Runs every trial (in parallel, with per-trial derived seeds), recording
/// solver errors per trial instead of aborting the batch.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, CoreError> {
    if spec.trials == 0 {
        return Err(CoreError::Domain("trials must be >= 1".to_string()));
    }
    let records: Vec<TrialRecord> = (0..spec.trials)
        .into_par_iter()
        .map(|t| solve_one(spec, t))
        .collect();

    let failures = records.iter().filter(|r| r.error.is_some()).count();
    let ratios: Vec<f64> = records.iter().filter_map(|r| r.ratio).collect();
    let mean_ratio = if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
    };

    let mut stage_sums: BTreeMap<String, f64> = BTreeMap::new();
    let successes = records.iter().filter(|r| r.report.is_some()).count();
    for rec in &records {
        if let Some(rep) = &rec.report {
            for sc in &rep.stage_costs {
                *stage_sums.entry(sc.stage.clone()).or_insert(0.0) += sc.cost;
            }
        }
    }
    let stage_cost_means = stage_sums
        .into_iter()
        .map(|(stage, sum)| StageCost { stage, cost: sum / successes.max(1) as f64 })
        .collect();

    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        trials: spec.trials,
        failures,
        mean_ratio,
        stage_cost_means,
        records,
    })
}

/// Plain-text summary table, one row per trial.
pub fn text_table(report: &ExperimentReport) -> String {
    let mut rows: Vec<[String; 5]> = vec![[
        "trial".to_string(),
        "cost".to_string(),
        "opt".to_string(),
        "ratio".to_string(),
        "status".to_string(),
    ]];
    for rec in &report.records {
        let (cost, status) = match (&rec.report, &rec.error) {
            (Some(rep), _) => (
                format!("{:.4}", rep.total_cost),
                if rep.feasible { "ok".to_string() } else { "infeasible".to_string() },
            ),
            (None, Some(e)) => ("-".to_string(), format!("error: {}", e)),
            (None, None) => ("-".to_string(), "-".to_string()),
        };
        rows.push([
            rec.trial.to_string(),
            cost,
            rec.opt_cost.map_or("-".to_string(), |o| format!("{:.4}", o)),
            rec.ratio.map_or("-".to_string(), |r| format!("{:.4}", r)),
            status,
        ]);
    }
    let mut widths = [0usize; 5];
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(widths.iter())
            .map(|(cell, w)| format!("{:<width$}", cell, width = w))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out.push_str(&format!(
        "trials={} failures={} mean_ratio={}\n",
        report.trials,
        report.failures,
        report.mean_ratio.map_or("-".to_string(), |r| format!("{:.4}", r)),
    ));
    out
}
