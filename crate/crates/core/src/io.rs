//! Instance file formats. JSON is the contract: documents parse into raw
//! serializable structs (kept for lossless round-trips) and build validated
//! in-memory instances with load-time cost rescaling.

use crate::error::CoreError;
use crate::ground::{CostFunction, GroundSet};
use crate::instance::{CcfInstance, MscInstance};
use crate::sets::BitSet;
use crate::submodular::Oracle;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A planted solution carried alongside a generated instance, for exact
/// ratio reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Planted {
    pub indices: Vec<usize>,
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSpec {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    #[serde(rename = "type")]
    pub ctype: String,
    pub points: usize,
    pub weights: Vec<f64>,
    /// One point list per ground element.
    pub covers: Vec<Vec<usize>>,
    pub requirement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MscFile {
    pub kind: String,
    pub ground: GroundSpec,
    pub costs: Vec<u64>,
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<Planted>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcfSetSpec {
    pub cost: u64,
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcfFile {
    pub kind: String,
    pub universe_size: usize,
    pub sets: Vec<CcfSetSpec>,
    pub matrix_rows: Vec<Vec<f64>>,
    pub requirements: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<Planted>,
}

#[derive(Debug, Clone)]
pub struct MscDoc {
    pub raw: MscFile,
    pub inst: MscInstance,
}

#[derive(Debug, Clone)]
pub struct CcfDoc {
    pub raw: CcfFile,
    pub inst: CcfInstance,
}

fn cost_bound(n: usize) -> u64 {
    (n.max(1) as u64).pow(3)
}

/// Build the validated instance from a raw document: checks shapes and
/// value ranges, rescales costs into [0, n³], truncates each constraint
/// function at its requirement.
pub fn build_msc(raw: &MscFile) -> Result<MscInstance, CoreError> {
    if raw.kind != "msc" {
        return Err(CoreError::Parse(format!("expected kind \"msc\", found {:?}", raw.kind)));
    }
    let n = raw.ground.n;
    if raw.costs.len() != n {
        return Err(CoreError::Parse(format!("{} costs for {} elements", raw.costs.len(), n)));
    }
    if let Some(labels) = &raw.ground.labels {
        if labels.len() != n {
            return Err(CoreError::Parse("label count mismatch".into()));
        }
    }
    let mut fns = Vec::with_capacity(raw.constraints.len());
    let mut b = Vec::with_capacity(raw.constraints.len());
    for (i, c) in raw.constraints.iter().enumerate() {
        if c.ctype != "weighted_coverage" {
            return Err(CoreError::Parse(format!("constraint {}: unknown type {:?}", i, c.ctype)));
        }
        if c.covers.len() != n {
            return Err(CoreError::Parse(format!("constraint {}: need one cover list per element", i)));
        }
        if !c.requirement.is_finite() || c.requirement < 0.0 {
            return Err(CoreError::Parse(format!("constraint {}: requirement {}", i, c.requirement)));
        }
        let f = Oracle::coverage(c.points, c.covers.clone(), c.weights.clone())
            .map_err(|e| CoreError::Parse(format!("constraint {}: {}", i, e)))?;
        if c.points != c.weights.len() {
            return Err(CoreError::Parse(format!("constraint {}: points field disagrees with weights", i)));
        }
        fns.push(f);
        b.push(c.requirement);
    }
    let (costs, scale) = CostFunction::rescaled(&raw.costs, cost_bound(n))?;
    let mut inst = MscInstance::new_normalized(GroundSet::new(n), costs, fns, b)?;
    inst.cost_scale = scale;
    if let Some(labels) = &raw.ground.labels {
        inst.ground = GroundSet::with_labels(labels.clone());
    }
    Ok(inst)
}

pub fn build_ccf(raw: &CcfFile) -> Result<CcfInstance, CoreError> {
    if raw.kind != "ccf" {
        return Err(CoreError::Parse(format!("expected kind \"ccf\", found {:?}", raw.kind)));
    }
    let universe = raw.universe_size;
    let mut sets = Vec::with_capacity(raw.sets.len());
    let mut costs = Vec::with_capacity(raw.sets.len());
    for (i, s) in raw.sets.iter().enumerate() {
        for &p in &s.points {
            if p >= universe {
                return Err(CoreError::Parse(format!("set {}: point {} outside universe", i, p)));
            }
        }
        sets.push(BitSet::from_indices(universe, &s.points));
        costs.push(s.cost);
    }
    let (costs, scale) = CostFunction::rescaled(&costs, cost_bound(raw.sets.len()))?;
    for (k, row) in raw.matrix_rows.iter().enumerate() {
        for &v in row {
            if !v.is_finite() || v < 0.0 {
                return Err(CoreError::Parse(format!("matrix row {}: invalid entry {}", k, v)));
            }
        }
    }
    let mut inst = CcfInstance::new(universe, sets, costs, raw.matrix_rows.clone(), raw.requirements.clone())?;
    inst.cost_scale = scale;
    Ok(inst)
}

pub fn parse_msc(json: &str) -> Result<MscDoc, CoreError> {
    let raw: MscFile = serde_json::from_str(json)?;
    let inst = build_msc(&raw)?;
    Ok(MscDoc { raw, inst })
}

pub fn parse_ccf(json: &str) -> Result<CcfDoc, CoreError> {
    let raw: CcfFile = serde_json::from_str(json)?;
    let inst = build_ccf(&raw)?;
    Ok(CcfDoc { raw, inst })
}

pub fn load_msc(path: &Path) -> Result<MscDoc, CoreError> {
    parse_msc(&std::fs::read_to_string(path)?)
}

pub fn load_ccf(path: &Path) -> Result<CcfDoc, CoreError> {
    parse_ccf(&std::fs::read_to_string(path)?)
}

/// Canonical serialized form used for files and digests.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CoreError> {
    std::fs::write(path, to_canonical_json(value))?;
    Ok(())
}
