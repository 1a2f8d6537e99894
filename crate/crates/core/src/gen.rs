//! Seeded instance generators. Every family emits the raw file struct so a
//! generated instance and its on-disk form are the same object; validation
//! happens in the loaders.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::flmo::FlmoFile;
use crate::io::{CcfFile, CcfSetSpec, ConstraintSpec, GroundSpec, MscFile, Planted};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// MSC with weighted-coverage constraints and demands set to a fraction
    /// of what the full ground set reaches (always feasible).
    RandomCoverage,
    /// CCF where every point lies in at most two sets, the regime of the
    /// threshold full-cover oracle.
    VertexCoverLike,
    /// MSC with demands set to exactly what a planted subset covers; the
    /// planted set and its cost ride along for exact ratio reporting.
    PlantedOptimum,
    /// Facility location on random planar points with Euclidean distances.
    RandomMetricFlmo,
}

/// Size and cost knobs shared by all families. `n` counts ground elements /
/// sets / facilities, `m` counts points / clients, `r` counts constraints /
/// colors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub seed: u64,
    /// Upper end of the cost range (lower end is 1).
    pub cost_max: u64,
}

#[derive(Debug, Clone)]
pub enum GeneratedInstance {
    Msc(MscFile),
    Ccf(CcfFile),
    Flmo(FlmoFile),
}

impl GeneratedInstance {
    pub fn kind(&self) -> &'static str {
        match self {
            GeneratedInstance::Msc(_) => "msc",
            GeneratedInstance::Ccf(_) => "ccf",
            GeneratedInstance::Flmo(_) => "flmo",
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            GeneratedInstance::Msc(f) => crate::io::to_canonical_json(f),
            GeneratedInstance::Ccf(f) => crate::io::to_canonical_json(f),
            GeneratedInstance::Flmo(f) => crate::io::to_canonical_json(f),
        }
    }
}

fn check(spec: &GeneratorSpec) -> Result<(), CoreError> {
    if spec.n == 0 || spec.m == 0 || spec.r == 0 {
        return Err(CoreError::Domain(format!(
            "generator sizes must be positive, got n={} m={} r={}",
            spec.n, spec.m, spec.r
        )));
    }
    if spec.cost_max == 0 {
        return Err(CoreError::Domain("cost_max must be positive".into()));
    }
    Ok(())
}

fn random_costs(n: usize, cost_max: u64, rng: &mut RngStream) -> Vec<u64> {
    (0..n).map(|_| 1 + rng.next_below(cost_max)).collect()
}

/// Random cover lists: each element covers each point with probability 0.4,
/// and every point is patched into some element so demands stay reachable.
fn random_covers(n: usize, points: usize, rng: &mut RngStream) -> Vec<Vec<usize>> {
    let mut covers: Vec<Vec<usize>> = (0..n)
        .map(|_| (0..points).filter(|_| rng.next_bool(0.4)).collect())
        .collect();
    for p in 0..points {
        if !covers.iter().any(|c| c.contains(&p)) {
            let e = rng.next_below(n as u64) as usize;
            covers[e].push(p);
            covers[e].sort_unstable();
        }
    }
    covers
}

fn gen_random_coverage(spec: &GeneratorSpec, rng: &mut RngStream) -> MscFile {
    let costs = random_costs(spec.n, spec.cost_max, rng);
    let mut constraints = Vec::with_capacity(spec.r);
    for _ in 0..spec.r {
        let covers = random_covers(spec.n, spec.m, rng);
        let weights: Vec<f64> = (0..spec.m).map(|_| rng.next_range_f64(0.5, 2.0)).collect();
        let reachable: f64 = weights.iter().sum();
        let requirement = reachable * rng.next_range_f64(0.5, 0.85);
        constraints.push(ConstraintSpec {
            ctype: "weighted_coverage".into(),
            points: spec.m,
            weights,
            covers,
            requirement,
        });
    }
    MscFile {
        kind: "msc".into(),
        ground: GroundSpec { n: spec.n, labels: None },
        costs,
        constraints,
        planted: None,
    }
}

fn gen_planted_optimum(spec: &GeneratorSpec, rng: &mut RngStream) -> MscFile {
    let mut file = gen_random_coverage(spec, rng);
    // Plant a nonempty subset and lower every demand to exactly what it
    // covers, making the planted set feasible by construction.
    let size = 1 + rng.next_below(spec.n.div_ceil(2) as u64) as usize;
    let mut planted: Vec<usize> = Vec::new();
    while planted.len() < size {
        let e = rng.next_below(spec.n as u64) as usize;
        if !planted.contains(&e) {
            planted.push(e);
        }
    }
    planted.sort_unstable();
    for c in file.constraints.iter_mut() {
        let mut covered = vec![false; c.points];
        for &e in &planted {
            for &p in &c.covers[e] {
                covered[p] = true;
            }
        }
        c.requirement = covered
            .iter()
            .zip(&c.weights)
            .filter_map(|(&hit, &w)| hit.then_some(w))
            .sum();
    }
    let cost = planted.iter().map(|&e| file.costs[e]).sum();
    file.planted = Some(Planted { indices: planted, cost });
    file
}

fn gen_vertex_cover_like(spec: &GeneratorSpec, rng: &mut RngStream) -> CcfFile {
    let costs = random_costs(spec.n, spec.cost_max, rng);
    // Each point lands in one or two sets, like edges of a graph with
    // vertices as sets.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); spec.n];
    for p in 0..spec.m {
        let a = rng.next_below(spec.n as u64) as usize;
        members[a].push(p);
        if spec.n > 1 && rng.next_bool(0.8) {
            let mut b = rng.next_below(spec.n as u64) as usize;
            if b == a {
                b = (b + 1) % spec.n;
            }
            members[b].push(p);
        }
    }
    // One color per point, demands at roughly 60% of each color's weight.
    let mut matrix_rows = vec![vec![0.0; spec.m]; spec.r];
    for p in 0..spec.m {
        let k = rng.next_below(spec.r as u64) as usize;
        matrix_rows[k][p] = 1.0 + rng.next_below(3) as f64;
    }
    let requirements: Vec<f64> = matrix_rows
        .iter()
        .map(|row| row.iter().sum::<f64>() * rng.next_range_f64(0.4, 0.75))
        .collect();
    CcfFile {
        kind: "ccf".into(),
        universe_size: spec.m,
        sets: costs
            .into_iter()
            .zip(members)
            .map(|(cost, points)| CcfSetSpec { cost, points })
            .collect(),
        matrix_rows,
        requirements,
        planted: None,
    }
}

fn gen_random_metric_flmo(spec: &GeneratorSpec, rng: &mut RngStream) -> Result<FlmoFile, CoreError> {
    if spec.m < spec.r {
        return Err(CoreError::Domain(format!(
            "need at least one client per color: m={} < r={}",
            spec.m, spec.r
        )));
    }
    let total = spec.n + spec.m;
    let coordinates: Vec<[f64; 2]> = (0..total)
        .map(|_| [rng.next_range_f64(0.0, 10.0), rng.next_range_f64(0.0, 10.0)])
        .collect();
    let open_costs: Vec<f64> = (0..spec.n)
        .map(|_| if spec.cost_max > 1 { rng.next_range_f64(1.0, spec.cost_max as f64) } else { 1.0 })
        .collect();
    // First r clients seed the classes so none is empty; the rest scatter.
    let mut colors: Vec<Vec<usize>> = (0..spec.r).map(|k| vec![k]).collect();
    for j in spec.r..spec.m {
        colors[rng.next_below(spec.r as u64) as usize].push(j);
    }
    let requirements: Vec<usize> =
        colors.iter().map(|c| 1 + rng.next_below(c.len() as u64) as usize).collect();
    Ok(FlmoFile {
        kind: "flmo".into(),
        open_costs,
        n_clients: spec.m,
        colors,
        requirements,
        coordinates: Some(coordinates),
        matrix: None,
    })
}

/// Generate one instance; identical specs produce identical files.
pub fn generate(spec: &GeneratorSpec) -> Result<GeneratedInstance, CoreError> {
    check(spec)?;
    let mut rng = RngStream::new(spec.seed);
    Ok(match spec.family {
        Family::RandomCoverage => GeneratedInstance::Msc(gen_random_coverage(spec, &mut rng)),
        Family::PlantedOptimum => GeneratedInstance::Msc(gen_planted_optimum(spec, &mut rng)),
        Family::VertexCoverLike => GeneratedInstance::Ccf(gen_vertex_cover_like(spec, &mut rng)),
        Family::RandomMetricFlmo => GeneratedInstance::Flmo(gen_random_metric_flmo(spec, &mut rng)?),
    })
}
