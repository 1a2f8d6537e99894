//! Exhaustive reference solvers. Small instances only; every approximation
//! guarantee in the test suite is measured against these.

use crate::error::CoreError;
use crate::flmo::FlmoInstance;
use crate::instance::{CcfInstance, MscInstance};
use crate::sets::BitSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteResult {
    pub cost: u64,
    /// Lexicographically smallest optimal index set.
    pub set: Vec<usize>,
}

const SUBSET_CAP: usize = 22;

/// Exhaustive MSC optimum; `Ok(None)` when no subset is feasible.
pub fn brute_force_msc(inst: &MscInstance) -> Result<Option<BruteResult>, CoreError> {
    let n = inst.n();
    if n > SUBSET_CAP {
        return Err(CoreError::Capacity(format!("brute force capped at {} elements, got {}", SUBSET_CAP, n)));
    }
    let mut best: Option<BruteResult> = None;
    for code in 0u64..(1u64 << n) {
        let s = BitSet::from_code(n, code);
        let cost = inst.costs.cost_of(&s);
        if let Some(b) = &best {
            if cost > b.cost {
                continue;
            }
        }
        if !inst.is_feasible(&s) {
            continue;
        }
        let indices = s.to_indices();
        let better = match &best {
            None => true,
            Some(b) => cost < b.cost || (cost == b.cost && indices < b.set),
        };
        if better {
            best = Some(BruteResult { cost, set: indices });
        }
    }
    Ok(best)
}

/// Exhaustive CCF optimum over set collections.
pub fn brute_force_ccf(inst: &CcfInstance) -> Result<Option<BruteResult>, CoreError> {
    let m = inst.m();
    if m > SUBSET_CAP {
        return Err(CoreError::Capacity(format!("brute force capped at {} sets, got {}", SUBSET_CAP, m)));
    }
    let mut best: Option<BruteResult> = None;
    for code in 0u64..(1u64 << m) {
        let picked = BitSet::from_code(m, code).to_indices();
        let cost = inst.costs.cost_of_indices(&picked);
        if let Some(b) = &best {
            if cost > b.cost {
                continue;
            }
        }
        if !inst.is_feasible(&picked) {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => cost < b.cost || (cost == b.cost && picked < b.set),
        };
        if better {
            best = Some(BruteResult { cost, set: picked });
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlmoBrute {
    pub cost: f64,
    pub facilities: Vec<usize>,
    /// (client, assigned facility) for every served client.
    pub assignment: Vec<(usize, usize)>,
}

/// Exhaustive facility-location optimum: every facility subset crossed with
/// every served-client subset meeting the color demands; served clients
/// connect to their nearest open facility.
pub fn brute_force_flmo(inst: &FlmoInstance) -> Result<Option<FlmoBrute>, CoreError> {
    if inst.nf > 6 || inst.nc > 12 {
        return Err(CoreError::Capacity(format!(
            "brute force capped at 6 facilities / 12 clients, got {}/{}",
            inst.nf, inst.nc
        )));
    }
    let mut best: Option<FlmoBrute> = None;
    for fcode in 0u64..(1u64 << inst.nf) {
        let open = BitSet::from_code(inst.nf, fcode);
        let open_idx = open.to_indices();
        let open_cost: f64 = open_idx.iter().map(|&i| inst.open_costs[i]).sum();
        if open_idx.is_empty() && inst.b.iter().any(|&bk| bk > 0) {
            continue;
        }
        // Nearest open facility per client.
        let nearest: Vec<Option<(usize, f64)>> = (0..inst.nc)
            .map(|j| {
                open_idx
                    .iter()
                    .map(|&i| (i, inst.d_fc(i, j)))
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            })
            .collect();
        for ccode in 0u64..(1u64 << inst.nc) {
            let served = BitSet::from_code(inst.nc, ccode);
            let ok = inst
                .colors
                .iter()
                .zip(&inst.b)
                .all(|(ck, &bk)| served.intersection_count(ck) >= bk);
            if !ok {
                continue;
            }
            let mut cost = open_cost;
            let mut assignment = Vec::new();
            let mut valid = true;
            for j in served.iter_ones() {
                match nearest[j] {
                    Some((i, d)) => {
                        cost += d;
                        assignment.push((j, i));
                    }
                    None => {
                        valid = false;
                        break;
                    }
                }
            }
            if !valid {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => {
                    cost < b.cost - 1e-12
                        || ((cost - b.cost).abs() <= 1e-12
                            && (open_idx.clone(), assignment.clone()) < (b.facilities.clone(), b.assignment.clone()))
                }
            };
            if better {
                best = Some(FlmoBrute { cost, facilities: open_idx.clone(), assignment });
            }
        }
    }
    Ok(best)
}
