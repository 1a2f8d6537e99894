//! Shared report envelope. Every solver report is wrapped with a schema
//! version, an instance digest, the guarantee parameters and the labels of
//! the deterministic checks that held, so downstream tooling can consume
//! one shape. JSON is the contract; reports never carry wall-clock time so
//! identical (inputs, seed) pairs serialize byte-identically.

use serde::{Deserialize, Serialize};

use crate::ccf::CcfSolveReport;
use crate::error::CoreError;
use crate::flmo::{FlmoSolveReport, BETA_FL};
use crate::msc::MscSolveReport;

pub const SCHEMA_VERSION: u32 = 1;

/// FNV-1a, 64-bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Digest of an instance's canonical JSON bytes.
pub fn instance_digest(canonical_json: &str) -> String {
    format!("fnv1a64:{:016x}", fnv1a64(canonical_json.as_bytes()))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCost {
    pub stage: String,
    pub cost: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub problem: String,
    pub instance_digest: String,
    pub seed: u64,
    pub params: GuaranteeParams,
    pub stage_costs: Vec<StageCost>,
    pub total_cost: f64,
    pub feasible: bool,
    /// Deterministic checks that held during this solve, each labeled
    /// "hard". Probabilistic claims live in experiment aggregates where a
    /// trial count can be attached.
    pub hard_checks: Vec<String>,
    /// The full solver-specific report.
    pub detail: serde_json::Value,
}

fn stage(name: &str, cost: f64) -> StageCost {
    StageCost { stage: name.into(), cost }
}

pub fn envelope_msc(digest: &str, rep: &MscSolveReport) -> Result<SolveReport, CoreError> {
    let mut hard_checks = Vec::new();
    if rep.hard_coverage_ok {
        hard_checks.push(format!(
            "hard: every f_i(S) >= {:.6} * b_i, re-verified by exact evaluation",
            rep.guarantee_factor
        ));
    }
    Ok(SolveReport {
        schema_version: SCHEMA_VERSION,
        problem: "msc".into(),
        instance_digest: digest.into(),
        seed: rep.seed,
        params: GuaranteeParams {
            eps: Some(rep.eps),
            alpha: Some(rep.alpha as f64),
            beta: None,
        },
        stage_costs: vec![
            stage("guess", rep.rounds.iter().map(|r| r.cost_pre).sum::<u64>() as f64),
            stage("rounding", rep.rounds.iter().map(|r| r.cost_rounded).sum::<u64>() as f64),
            stage("fix", rep.rounds.iter().map(|r| r.cost_fixes).sum::<u64>() as f64),
        ],
        total_cost: rep.total_cost as f64,
        feasible: rep.hard_coverage_ok,
        hard_checks,
        detail: serde_json::to_value(rep)?,
    })
}

pub fn envelope_ccf(digest: &str, rep: &CcfSolveReport) -> Result<SolveReport, CoreError> {
    let mut hard_checks = Vec::new();
    if rep.feasible {
        hard_checks.push("hard: A z >= b verified exactly on the returned collection".into());
    }
    Ok(SolveReport {
        schema_version: SCHEMA_VERSION,
        problem: "ccf".into(),
        instance_digest: digest.into(),
        seed: rep.seed,
        params: GuaranteeParams {
            eps: Some(rep.eps_star),
            alpha: None,
            beta: Some(rep.beta),
        },
        stage_costs: vec![
            stage("guess", rep.cost_pre as f64),
            stage("heavy", rep.cost_heavy as f64),
            stage("rounding", rep.cost_rounded as f64),
            stage("fix", rep.cost_fix as f64),
        ],
        total_cost: rep.total_cost as f64,
        feasible: rep.feasible,
        hard_checks,
        detail: serde_json::to_value(rep)?,
    })
}

pub fn envelope_flmo(digest: &str, rep: &FlmoSolveReport) -> Result<SolveReport, CoreError> {
    let mut hard_checks = Vec::new();
    if rep.feasible {
        hard_checks.push("hard: every color class meets its demand exactly as counted".into());
    }
    Ok(SolveReport {
        schema_version: SCHEMA_VERSION,
        problem: "flmo".into(),
        instance_digest: digest.into(),
        seed: rep.seed,
        params: GuaranteeParams {
            eps: Some(rep.eps),
            alpha: None,
            beta: Some(BETA_FL),
        },
        stage_costs: vec![
            stage("guess", rep.cost_guess),
            stage("heavy", rep.cost_heavy),
            stage("rounding", rep.cost_round),
            stage("fix", rep.cost_fix),
        ],
        total_cost: rep.total_cost,
        feasible: rep.feasible,
        hard_checks,
        detail: serde_json::to_value(rep)?,
    })
}
