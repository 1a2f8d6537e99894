//! Facility location with color demands: open facilities and serve enough
//! clients of every color class, leaving the rest as outliers. The solver
//! guesses the expensive stars of an optimal solution, prices the remaining
//! stars into a covering LP by column generation, serves heavily-covered
//! clients through a classical facility-location rounding and the shallow
//! ones through dependent rounding plus a greedy repair pass.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::brute::{brute_force_flmo, FlmoBrute};
use crate::ccf::ccf_guess_count;
use crate::error::CoreError;
use crate::extension::FractionalPoint;
use crate::ground::{CostFunction, GroundSet};
use crate::instance::MscInstance;
use crate::lp::{solve_lp, Cmp, LpModel, LpStatus};
use crate::msc::{GuessConfig, GuessMode};
use crate::rng::RngStream;
use crate::rounding::{round_fractional, PreconditionCheck};
use crate::sets::BitSet;
use crate::submodular::Oracle;

/// Metric facility-location instance with color-class demands. Facilities
/// occupy global indices `0..nf`, clients `nf..nf+nc`; the metric is stored
/// as a full symmetric matrix over all points.
#[derive(Debug, Clone)]
pub struct FlmoInstance {
    pub nf: usize,
    pub nc: usize,
    pub open_costs: Vec<f64>,
    /// Color classes as client masks. Classes may overlap.
    pub colors: Vec<BitSet>,
    /// Demand per color class: at least `b[k]` clients of class k served.
    pub b: Vec<usize>,
    dist: Vec<Vec<f64>>,
}

impl FlmoInstance {
    pub fn new(
        open_costs: Vec<f64>,
        nc: usize,
        colors: Vec<BitSet>,
        b: Vec<usize>,
        dist: Vec<Vec<f64>>,
    ) -> Result<Self, CoreError> {
        let nf = open_costs.len();
        let n = nf + nc;
        if nf == 0 {
            return Err(CoreError::Domain("need at least one facility".into()));
        }
        if colors.is_empty() {
            return Err(CoreError::Domain("need at least one color class".into()));
        }
        if colors.len() != b.len() {
            return Err(CoreError::Domain(format!(
                "{} color classes vs {} demands",
                colors.len(),
                b.len()
            )));
        }
        for c in &open_costs {
            if !c.is_finite() || *c < 0.0 {
                return Err(CoreError::Domain(format!("opening cost {} out of range", c)));
            }
        }
        for (k, ck) in colors.iter().enumerate() {
            if ck.len() != nc {
                return Err(CoreError::Domain(format!("color {} mask sized {} for {} clients", k, ck.len(), nc)));
            }
            if b[k] > ck.count() {
                return Err(CoreError::Domain(format!(
                    "demand {} exceeds class size {} for color {}",
                    b[k],
                    ck.count(),
                    k
                )));
            }
        }
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(CoreError::Domain(format!("distance matrix must be {}x{}", n, n)));
        }
        for (u, row) in dist.iter().enumerate() {
            for (v, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(CoreError::Domain(format!("distance ({},{}) = {} out of range", u, v, d)));
                }
                if u == v && d > 1e-12 {
                    return Err(CoreError::Domain(format!("nonzero diagonal at {}", u)));
                }
                if (d - dist[v][u]).abs() > 1e-9 {
                    return Err(CoreError::Domain(format!("asymmetric distances at ({},{})", u, v)));
                }
            }
        }
        for a in 0..n {
            for bb in 0..n {
                for c in 0..n {
                    if dist[a][c] > dist[a][bb] + dist[bb][c] + 1e-9 {
                        return Err(CoreError::Domain(format!(
                            "triangle inequality fails on ({},{},{})",
                            a, bb, c
                        )));
                    }
                }
            }
        }
        Ok(FlmoInstance { nf, nc, open_costs, colors, b, dist })
    }

    /// Convenience constructor for tests: colors as index lists and the
    /// metric as a closure over global point indices. The diagonal is
    /// forced to zero so constant closures stay legal.
    pub fn for_tests(
        open_costs: Vec<f64>,
        nc: usize,
        colors: Vec<Vec<usize>>,
        b: Vec<usize>,
        dist: impl Fn(usize, usize) -> f64,
    ) -> Self {
        let nf = open_costs.len();
        let n = nf + nc;
        let matrix: Vec<Vec<f64>> = (0..n)
            .map(|u| (0..n).map(|v| if u == v { 0.0 } else { dist(u, v) }).collect())
            .collect();
        let masks = colors.iter().map(|c| BitSet::from_indices(nc, c)).collect();
        FlmoInstance::new(open_costs, nc, masks, b, matrix).expect("test instance must validate")
    }

    pub fn r(&self) -> usize {
        self.colors.len()
    }

    /// Facility-to-client distance.
    pub fn d_fc(&self, i: usize, j: usize) -> f64 {
        self.dist[i][self.nf + j]
    }

    /// Count of served clients per color class.
    pub fn color_counts(&self, served: &BitSet) -> Vec<usize> {
        self.colors.iter().map(|ck| served.intersection_count(ck)).collect()
    }
}

// ---------------------------------------------------------------------------
// File format

/// On-disk form: either planar coordinates (facilities first, then clients,
/// Euclidean metric) or an explicit distance matrix — exactly one of the two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlmoFile {
    pub kind: String,
    pub open_costs: Vec<f64>,
    pub n_clients: usize,
    pub colors: Vec<Vec<usize>>,
    pub requirements: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct FlmoDoc {
    pub raw: FlmoFile,
    pub inst: FlmoInstance,
}

pub fn build_flmo(raw: &FlmoFile) -> Result<FlmoInstance, CoreError> {
    if raw.kind != "flmo" {
        return Err(CoreError::Parse(format!("expected kind \"flmo\", found {:?}", raw.kind)));
    }
    let nf = raw.open_costs.len();
    let nc = raw.n_clients;
    let n = nf + nc;
    let dist = match (&raw.coordinates, &raw.matrix) {
        (Some(coords), None) => {
            if coords.len() != n {
                return Err(CoreError::Parse(format!("{} coordinates for {} points", coords.len(), n)));
            }
            (0..n)
                .map(|u| {
                    (0..n)
                        .map(|v| {
                            let dx = coords[u][0] - coords[v][0];
                            let dy = coords[u][1] - coords[v][1];
                            (dx * dx + dy * dy).sqrt()
                        })
                        .collect()
                })
                .collect()
        }
        (None, Some(matrix)) => matrix.clone(),
        _ => {
            return Err(CoreError::Parse("exactly one of coordinates/matrix required".into()));
        }
    };
    let mut masks = Vec::with_capacity(raw.colors.len());
    for (k, list) in raw.colors.iter().enumerate() {
        for &j in list {
            if j >= nc {
                return Err(CoreError::Parse(format!("color {} lists client {} of {}", k, j, nc)));
            }
        }
        masks.push(BitSet::from_indices(nc, list));
    }
    for (k, &bk) in raw.requirements.iter().enumerate() {
        if bk == 0 {
            return Err(CoreError::Parse(format!("requirement for color {} must be positive", k)));
        }
    }
    FlmoInstance::new(raw.open_costs.clone(), nc, masks, raw.requirements.clone(), dist)
}

pub fn parse_flmo(json: &str) -> Result<FlmoDoc, CoreError> {
    let raw: FlmoFile = serde_json::from_str(json)?;
    let inst = build_flmo(&raw)?;
    Ok(FlmoDoc { raw, inst })
}

pub fn load_flmo(path: &Path) -> Result<FlmoDoc, CoreError> {
    parse_flmo(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Scaling

/// Instance rescaled against a guess of the optimal cost: values above the
/// guess are pruned outright, the rest map to integers in [0, B] with
/// anything at or below guess/B flushed to zero.
#[derive(Debug, Clone)]
pub struct ScaledInstance {
    pub big_b: u64,
    pub opt_guess: f64,
    /// Per facility; `None` when the opening cost alone exceeds the guess.
    pub f_bar: Vec<Option<u64>>,
    /// Per (facility, client); `None` when the pair is pruned.
    pub d_bar: Vec<Vec<Option<u64>>>,
}

impl ScaledInstance {
    /// Cost cap that no single star can reach: stands in for "no budget"
    /// when nothing was guessed.
    pub fn open_cap(&self) -> u64 {
        self.big_b * (self.d_bar.first().map_or(1, |row| row.len() as u64) + 1)
    }

    /// Scaled cost of a star, `None` if any ingredient was pruned. Guessed
    /// facilities contribute connection costs only (their opening cost is
    /// already accounted for by the guess).
    pub fn star_cost(&self, facility: usize, clients: &BitSet, guessed: bool) -> Option<u64> {
        let mut total = if guessed { 0 } else { self.f_bar[facility]? };
        for j in clients.iter_ones() {
            total += self.d_bar[facility][j]?;
        }
        Some(total)
    }
}

fn scale_value(v: f64, opt: f64, big_b: u64) -> u64 {
    if v <= opt / big_b as f64 {
        return 0;
    }
    let t = big_b as f64 * v / opt;
    let r = t.round();
    if (t - r).abs() <= 1e-9 * t.max(1.0) {
        r as u64
    } else {
        t.ceil() as u64
    }
}

/// Scale costs and distances against `opt_guess` with B = (nf+nc)³.
pub fn scale_and_prune(inst: &FlmoInstance, opt_guess: f64) -> Result<ScaledInstance, CoreError> {
    if !opt_guess.is_finite() || opt_guess <= 0.0 {
        return Err(CoreError::Domain(format!("optimal-cost guess {} must be positive", opt_guess)));
    }
    let big_b = ((inst.nf + inst.nc) as u64).pow(3);
    let keep = |v: f64| v <= opt_guess * (1.0 + 1e-12);
    let f_bar: Vec<Option<u64>> = inst
        .open_costs
        .iter()
        .map(|&f| if keep(f) { Some(scale_value(f, opt_guess, big_b)) } else { None })
        .collect();
    let d_bar: Vec<Vec<Option<u64>>> = (0..inst.nf)
        .map(|i| {
            (0..inst.nc)
                .map(|j| {
                    let d = inst.d_fc(i, j);
                    if f_bar[i].is_some() && keep(d) {
                        Some(scale_value(d, opt_guess, big_b))
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    Ok(ScaledInstance { big_b, opt_guess, f_bar, d_bar })
}

// ---------------------------------------------------------------------------
// Stars and guesses

/// A facility together with a client set, priced in scaled units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Star {
    pub facility: usize,
    pub clients: BitSet,
    pub cost: u64,
}

/// One guessed fragment of the optimum: facility `facility` serves the
/// guessed clients `s_h`, and its full star costs `g_h` in scaled units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessTuple {
    pub facility: usize,
    pub s_h: Vec<usize>,
    pub g_h: u64,
}

/// Shared context for one guess attempt: the guessed facilities and clients,
/// the per-facility distance limit on residual singletons, and the cost cap
/// on non-guessed stars.
struct GuessContext {
    f_pre: BTreeSet<usize>,
    c_pre: BitSet,
    /// Allowed singleton radius per guessed facility (min scaled distance
    /// over its guessed clients; unbounded when none were guessed).
    singleton_limit: BTreeMap<usize, u64>,
    g_cap: u64,
}

fn guess_context(inst: &FlmoInstance, scaled: &ScaledInstance, tuples: &[GuessTuple]) -> GuessContext {
    let mut f_pre = BTreeSet::new();
    let mut c_pre = BitSet::new(inst.nc);
    let mut singleton_limit = BTreeMap::new();
    let mut g_cap = scaled.open_cap();
    for t in tuples {
        f_pre.insert(t.facility);
        let mut limit = u64::MAX;
        for &j in &t.s_h {
            c_pre.insert(j);
            if let Some(d) = scaled.d_bar[t.facility][j] {
                limit = limit.min(d);
            }
        }
        let slot = singleton_limit.entry(t.facility).or_insert(u64::MAX);
        *slot = (*slot).min(limit);
        g_cap = g_cap.min(t.g_h);
    }
    GuessContext { f_pre, c_pre, singleton_limit, g_cap }
}

// ---------------------------------------------------------------------------
// Pricing

/// Separation oracle for the covering LP duals. For a guessed facility only
/// residual singletons within its distance limit are admissible and a star
/// is violated when the client dual beats the connection cost. For anything
/// else the most profitable client set under the budget `g_cap` comes from
/// a knapsack over scaled distances; a star is violated when that profit
/// reaches the scaled opening cost.
pub fn price_star(
    scaled: &ScaledInstance,
    facility: usize,
    alpha: &[f64],
    allowed: &BitSet,
    singleton_limit: Option<u64>,
    g_cap: u64,
    tol: f64,
) -> Option<Star> {
    if let Some(limit) = singleton_limit {
        let mut best: Option<(f64, usize, u64)> = None;
        for j in allowed.iter_ones() {
            let Some(d) = scaled.d_bar[facility][j] else { continue };
            if d > limit {
                continue;
            }
            let margin = alpha[j] - d as f64;
            if margin <= 0.0 {
                continue;
            }
            if best.map_or(true, |(m, _, _)| margin > m + 1e-15) {
                best = Some((margin, j, d));
            }
        }
        let (margin, j, d) = best?;
        if margin >= tol {
            let mut clients = BitSet::new(scaled.d_bar[facility].len());
            clients.insert(j);
            return Some(Star { facility, clients, cost: d });
        }
        return None;
    }

    let f_open = scaled.f_bar[facility]?;
    if f_open > g_cap {
        return None;
    }
    let mut items: Vec<(usize, u64, f64)> = Vec::new();
    let mut weight_sum = 0u64;
    for j in allowed.iter_ones() {
        if let Some(d) = scaled.d_bar[facility][j] {
            let profit = alpha[j] - d as f64;
            if d <= g_cap - f_open && profit > 0.0 {
                items.push((j, d, profit));
                weight_sum += d;
            }
        }
    }
    if items.is_empty() {
        return None;
    }
    let cap = (g_cap - f_open).min(weight_sum) as usize;
    // 0/1 knapsack over scaled distances; choices packed as bit rows so the
    // table stays small even when the budget is large.
    let words = cap / 64 + 1;
    let mut dp = vec![0.0f64; cap + 1];
    let mut take = vec![vec![0u64; words]; items.len()];
    for (idx, &(_, w, p)) in items.iter().enumerate() {
        let w = w as usize;
        for cur in (w..=cap).rev() {
            if dp[cur - w] + p > dp[cur] + 1e-15 {
                dp[cur] = dp[cur - w] + p;
                take[idx][cur / 64] |= 1 << (cur % 64);
            }
        }
    }
    let best = dp[cap];
    if !(best >= f_open as f64 + tol && best > 0.0) {
        return None;
    }
    let mut clients = BitSet::new(scaled.d_bar[facility].len());
    let mut cost = f_open;
    let mut cur = cap;
    for (idx, &(j, w, _)) in items.iter().enumerate().rev() {
        if take[idx][cur / 64] >> (cur % 64) & 1 == 1 {
            clients.insert(j);
            cost += w;
            cur -= w as usize;
        }
    }
    Some(Star { facility, clients, cost })
}

// ---------------------------------------------------------------------------
// Covering LP by column generation

#[derive(Debug, Clone)]
pub struct RestrictedLp {
    /// Every column generated, in creation order.
    pub stars: Vec<Star>,
    pub x: Vec<f64>,
    /// Client coverage values, indexed over all clients (zero outside the
    /// residual set).
    pub z: Vec<f64>,
    pub objective: f64,
    pub rounds: usize,
}

const PRICING_TOL: f64 = 1e-9;
const CG_ROUND_CAP: usize = 300;

fn admissible_singletons(
    inst: &FlmoInstance,
    scaled: &ScaledInstance,
    ctx: &GuessContext,
    allowed: &BitSet,
) -> Vec<Star> {
    let mut stars = Vec::new();
    for i in 0..inst.nf {
        let guessed = ctx.f_pre.contains(&i);
        if !guessed && scaled.f_bar[i].is_none() {
            continue;
        }
        let limit = ctx.singleton_limit.get(&i).copied();
        for j in allowed.iter_ones() {
            let Some(d) = scaled.d_bar[i][j] else { continue };
            if let Some(lim) = limit {
                if d <= lim {
                    let mut clients = BitSet::new(inst.nc);
                    clients.insert(j);
                    stars.push(Star { facility: i, clients, cost: d });
                }
            } else {
                let cost = scaled.f_bar[i].unwrap() + d;
                if cost <= ctx.g_cap {
                    let mut clients = BitSet::new(inst.nc);
                    clients.insert(j);
                    stars.push(Star { facility: i, clients, cost });
                }
            }
        }
    }
    stars
}

fn solve_star_lp(
    inst: &FlmoInstance,
    stars: &[Star],
    res_clients: &[usize],
    b_resid: &[usize],
) -> Result<(Vec<f64>, Vec<f64>, f64), CoreError> {
    let nz = res_clients.len();
    let mut model = LpModel::new(stars.len() + nz);
    for (si, s) in stars.iter().enumerate() {
        model.objective[si] = s.cost as f64;
        model.set_upper(si, 1.0);
    }
    for zi in 0..nz {
        model.set_upper(stars.len() + zi, 1.0);
    }
    for (zi, &j) in res_clients.iter().enumerate() {
        let mut coeffs: Vec<(usize, f64)> = stars
            .iter()
            .enumerate()
            .filter(|(_, s)| s.clients.contains(j))
            .map(|(si, _)| (si, 1.0))
            .collect();
        coeffs.push((stars.len() + zi, -1.0));
        model.add_row(coeffs, Cmp::Ge, 0.0);
    }
    for (k, ck) in inst.colors.iter().enumerate() {
        let coeffs: Vec<(usize, f64)> = res_clients
            .iter()
            .enumerate()
            .filter(|(_, &j)| ck.contains(j))
            .map(|(zi, _)| (stars.len() + zi, 1.0))
            .collect();
        model.add_row(coeffs, Cmp::Ge, b_resid[k] as f64);
    }
    let sol = solve_lp(&model)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(CoreError::Infeasible("covering LP infeasible under this guess".into()));
        }
        s => {
            return Err(CoreError::SolverFailure(format!(
                "covering LP ended {:?}: {}",
                s,
                sol.message.unwrap_or_default()
            )));
        }
    }
    let alpha: Vec<f64> = sol.duals.iter().take(nz).map(|&d| d.max(0.0)).collect();
    Ok((sol.x, alpha, sol.objective))
}

/// Solve the star-covering LP for the residual instance by column
/// generation, starting from all admissible singleton stars. On success the
/// duals certify optimality over the full (exponential) star family.
pub fn solve_restricted_lp(
    inst: &FlmoInstance,
    scaled: &ScaledInstance,
    tuples: &[GuessTuple],
    b_resid: &[usize],
) -> Result<RestrictedLp, CoreError> {
    let ctx = guess_context(inst, scaled, tuples);
    let mut allowed = BitSet::full(inst.nc);
    allowed.subtract(&ctx.c_pre);
    let res_clients = allowed.to_indices();
    if res_clients.is_empty() {
        if b_resid.iter().any(|&bk| bk > 0) {
            return Err(CoreError::Infeasible("no residual clients left for open demands".into()));
        }
        return Ok(RestrictedLp {
            stars: Vec::new(),
            x: Vec::new(),
            z: vec![0.0; inst.nc],
            objective: 0.0,
            rounds: 0,
        });
    }

    let mut stars = admissible_singletons(inst, scaled, &ctx, &allowed);
    let mut seen: BTreeSet<(usize, Vec<usize>)> =
        stars.iter().map(|s| (s.facility, s.clients.to_indices())).collect();
    let mut rounds = 0;
    loop {
        rounds += 1;
        if rounds > CG_ROUND_CAP {
            return Err(CoreError::SolverFailure(format!(
                "column generation still active after {} rounds",
                CG_ROUND_CAP
            )));
        }
        let (x, alpha_res, objective) = solve_star_lp(inst, &stars, &res_clients, b_resid)?;
        let mut alpha = vec![0.0; inst.nc];
        for (zi, &j) in res_clients.iter().enumerate() {
            alpha[j] = alpha_res[zi];
        }
        let mut fresh = Vec::new();
        for i in 0..inst.nf {
            let limit = ctx.singleton_limit.get(&i).copied();
            if limit.is_none() && scaled.f_bar[i].is_none() {
                continue;
            }
            if let Some(star) = price_star(scaled, i, &alpha, &allowed, limit, ctx.g_cap, PRICING_TOL) {
                let key = (star.facility, star.clients.to_indices());
                if seen.insert(key) {
                    fresh.push(star);
                }
            }
        }
        if fresh.is_empty() {
            let mut z = vec![0.0; inst.nc];
            for (zi, &j) in res_clients.iter().enumerate() {
                z[j] = x[stars.len() + zi].clamp(0.0, 1.0);
            }
            let x: Vec<f64> = x.iter().take(stars.len()).map(|&v| v.clamp(0.0, 1.0)).collect();
            return Ok(RestrictedLp { stars, x, z, objective, rounds });
        }
        stars.extend(fresh);
    }
}

/// Reference LP with every admissible star materialized; small residual
/// client counts only. Used to certify that column generation terminates at
/// the true optimum.
pub fn full_star_lp_objective(
    inst: &FlmoInstance,
    scaled: &ScaledInstance,
    tuples: &[GuessTuple],
    b_resid: &[usize],
) -> Result<f64, CoreError> {
    let ctx = guess_context(inst, scaled, tuples);
    let mut allowed = BitSet::full(inst.nc);
    allowed.subtract(&ctx.c_pre);
    let res_clients = allowed.to_indices();
    if res_clients.len() > 12 {
        return Err(CoreError::Capacity(format!(
            "full star family capped at 12 residual clients, got {}",
            res_clients.len()
        )));
    }
    if res_clients.is_empty() {
        if b_resid.iter().any(|&bk| bk > 0) {
            return Err(CoreError::Infeasible("no residual clients left for open demands".into()));
        }
        return Ok(0.0);
    }
    let mut stars = Vec::new();
    for i in 0..inst.nf {
        if let Some(&limit) = ctx.singleton_limit.get(&i) {
            for &j in &res_clients {
                if let Some(d) = scaled.d_bar[i][j] {
                    if d <= limit {
                        let mut clients = BitSet::new(inst.nc);
                        clients.insert(j);
                        stars.push(Star { facility: i, clients, cost: d });
                    }
                }
            }
            continue;
        }
        if scaled.f_bar[i].is_none() {
            continue;
        }
        for code in 1u64..(1u64 << res_clients.len()) {
            let mut clients = BitSet::new(inst.nc);
            for (pos, &j) in res_clients.iter().enumerate() {
                if code >> pos & 1 == 1 {
                    clients.insert(j);
                }
            }
            if let Some(cost) = scaled.star_cost(i, &clients, false) {
                if cost <= ctx.g_cap {
                    stars.push(Star { facility: i, clients, cost });
                }
            }
        }
    }
    let (_, _, objective) = solve_star_lp(inst, &stars, &res_clients, b_resid)?;
    Ok(objective)
}

// ---------------------------------------------------------------------------
// Serving heavy clients

/// Opened facilities and client assignment produced by the filtering
/// rounding, plus the fractional cost it was measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcflCover {
    pub opened: Vec<usize>,
    pub assignment: Vec<(usize, usize)>,
    pub fractional_cost: f64,
    pub cost: f64,
}

/// Approximation factor of `cover_heavy_ucfl` relative to the fractional
/// point it is handed.
pub const BETA_FL: f64 = 4.0;
const FILTER_RHO: f64 = 0.25;

/// Convert a fractional star solution into facility-location variables:
/// per-pair assignment mass and per-facility opening mass, both clipped
/// at one.
pub fn ucfl_point_from_stars(nf: usize, nc: usize, stars: &[Star], x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut xm = vec![vec![0.0; nc]; nf];
    let mut y = vec![0.0; nf];
    for (s, &v) in stars.iter().zip(x) {
        y[s.facility] += v;
        for j in s.clients.iter_ones() {
            xm[s.facility][j] += v;
        }
    }
    for yi in y.iter_mut() {
        *yi = yi.min(1.0);
    }
    for row in xm.iter_mut() {
        for v in row.iter_mut() {
            *v = v.min(1.0);
        }
    }
    (xm, y)
}

/// Serve every heavy client by deterministic filtering: cluster clients by
/// ascending connection radius, open the cheapest facility in each cluster
/// ball and route intersecting clients there. Distances and opening costs
/// are the original (unscaled) ones; the rounded cost is certified against
/// `BETA_FL` times the fractional cost of the point handed in.
pub fn cover_heavy_ucfl(
    inst: &FlmoInstance,
    heavy: &BitSet,
    x: &[Vec<f64>],
    y: &[f64],
) -> Result<UcflCover, CoreError> {
    let hv = heavy.to_indices();
    if hv.is_empty() {
        return Ok(UcflCover { opened: Vec::new(), assignment: Vec::new(), fractional_cost: 0.0, cost: 0.0 });
    }
    // Normalized assignment distribution and fractional connection cost per
    // heavy client.
    let mut xhat: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut conn = BTreeMap::new();
    for &j in &hv {
        let mass: f64 = (0..inst.nf).map(|i| x[i][j]).sum();
        if mass < 1.0 - 1e-7 {
            return Err(CoreError::SolverFailure(format!(
                "heavy client {} carries fractional mass {} < 1",
                j, mass
            )));
        }
        let dist: Vec<f64> = (0..inst.nf).map(|i| x[i][j] / mass).collect();
        let c: f64 = dist.iter().enumerate().map(|(i, &p)| p * inst.d_fc(i, j)).sum();
        xhat.insert(j, dist);
        conn.insert(j, c);
    }
    let mut order = hv.clone();
    order.sort_by(|&a, &b| {
        let ra = conn[&a] / (1.0 - FILTER_RHO);
        let rb = conn[&b] / (1.0 - FILTER_RHO);
        ra.partial_cmp(&rb).unwrap().then(a.cmp(&b))
    });

    let mut opened = BTreeSet::new();
    let mut assignment = BTreeMap::new();
    let in_ball = |i: usize, j: usize| -> bool {
        let radius = conn[&j] / (1.0 - FILTER_RHO);
        xhat[&j][i] > 1e-15 && inst.d_fc(i, j) <= radius + 1e-12
    };
    for (pos, &j) in order.iter().enumerate() {
        if assignment.contains_key(&j) {
            continue;
        }
        let ball: Vec<usize> = (0..inst.nf).filter(|&i| in_ball(i, j)).collect();
        let mass: f64 = ball.iter().map(|&i| xhat[&j][i]).sum();
        if ball.is_empty() || mass < FILTER_RHO - 1e-7 {
            return Err(CoreError::SolverFailure(format!(
                "filter ball of client {} holds mass {} < {}",
                j, mass, FILTER_RHO
            )));
        }
        let pick = *ball
            .iter()
            .min_by(|&&a, &&b| inst.open_costs[a].partial_cmp(&inst.open_costs[b]).unwrap().then(a.cmp(&b)))
            .unwrap();
        opened.insert(pick);
        assignment.insert(j, pick);
        for &k in order.iter().skip(pos + 1) {
            if assignment.contains_key(&k) {
                continue;
            }
            let meets = (0..inst.nf).any(|i| in_ball(i, k) && in_ball(i, j));
            if meets {
                assignment.insert(k, pick);
            }
        }
    }

    let fractional_cost: f64 = (0..inst.nf).map(|i| inst.open_costs[i] * y[i]).sum::<f64>()
        + hv.iter().map(|j| conn[j]).sum::<f64>();
    let cost: f64 = opened.iter().map(|&i| inst.open_costs[i]).sum::<f64>()
        + assignment.iter().map(|(&j, &i)| inst.d_fc(i, j)).sum::<f64>();
    if cost > BETA_FL * fractional_cost + 1e-6 {
        return Err(CoreError::SolverFailure(format!(
            "filtering cost {} exceeds {} x fractional cost {}",
            cost, BETA_FL, fractional_cost
        )));
    }
    Ok(UcflCover {
        opened: opened.into_iter().collect(),
        assignment: assignment.into_iter().collect(),
        fractional_cost,
        cost,
    })
}

// ---------------------------------------------------------------------------
// Solver

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TupleSummary {
    pub facility: usize,
    pub clients: Vec<usize>,
    pub g: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlmoSolveReport {
    pub eps: f64,
    pub seed: u64,
    pub guess_mode: GuessMode,
    pub opt_guess: f64,
    pub big_b: u64,
    /// Clients guessed per star (the L farthest).
    pub l_farthest: usize,
    /// Number of tuples the guess aims for.
    pub t_tuples: usize,
    pub tuples: Vec<TupleSummary>,
    /// Objective of the covering LP, in scaled units.
    pub lp_objective: f64,
    pub lp_rounds: usize,
    pub support_stars: usize,
    pub heavy_clients: Vec<usize>,
    pub opened: Vec<usize>,
    pub served: Vec<usize>,
    /// Served client → nearest opened facility.
    pub assignment: Vec<(usize, usize)>,
    pub total_cost: f64,
    pub cost_guess: f64,
    pub cost_heavy: f64,
    pub cost_round: f64,
    pub cost_fix: f64,
    pub color_counts: Vec<usize>,
    pub requirements: Vec<usize>,
    pub feasible: bool,
    pub opt_known: Option<f64>,
}

struct StageResult {
    tuples: Vec<GuessTuple>,
    lp_objective: f64,
    lp_rounds: usize,
    support_stars: usize,
    heavy: Vec<usize>,
    opened: Vec<usize>,
    served: BitSet,
    assignment: Vec<(usize, usize)>,
    total_cost: f64,
    cost_guess: f64,
    cost_heavy: f64,
    cost_round: f64,
    cost_fix: f64,
}

fn true_star_cost(inst: &FlmoInstance, facility: usize, clients: &BitSet) -> f64 {
    inst.open_costs[facility] + clients.iter_ones().map(|j| inst.d_fc(facility, j)).sum::<f64>()
}

/// Greedy repair for one color class over the LP support, mirroring the
/// budgeted-cover greedy: repeatedly add the star with the best
/// newly-served-per-cost ratio until the demand holds, aborting once the
/// spend passes `budget` plus one star.
fn fix_color_with_stars(
    stars: &[Star],
    support: &[usize],
    color: &BitSet,
    need: usize,
    served: &mut BitSet,
    chosen: &mut BTreeSet<usize>,
    budget: u64,
) -> Result<Vec<usize>, CoreError> {
    let c_max = support.iter().map(|&si| stars[si].cost).max().unwrap_or(0);
    let mut added = Vec::new();
    let mut spent = 0u64;
    while served.intersection_count(color) < need {
        let mut best: Option<(f64, usize, usize)> = None;
        for &si in support {
            if chosen.contains(&si) {
                continue;
            }
            let gain = stars[si]
                .clients
                .iter_ones()
                .filter(|&j| color.contains(j) && !served.contains(j))
                .count();
            if gain == 0 {
                continue;
            }
            let ratio = if stars[si].cost == 0 { f64::INFINITY } else { gain as f64 / stars[si].cost as f64 };
            if best.map_or(true, |(r, _, _)| ratio > r + 1e-15) {
                best = Some((ratio, gain, si));
            }
        }
        let Some((_, _, si)) = best else {
            return Err(CoreError::Infeasible("support exhausted before the color demand held".into()));
        };
        spent += stars[si].cost;
        if spent > budget + c_max {
            return Err(CoreError::Infeasible(format!(
                "repair spend {} passed budget {} + {}",
                spent, budget, c_max
            )));
        }
        chosen.insert(si);
        added.push(si);
        served.union_with(&stars[si].clients);
    }
    Ok(added)
}

fn run_stages(
    inst: &FlmoInstance,
    scaled: &ScaledInstance,
    tuples: Vec<GuessTuple>,
    eps: f64,
    rng: &RngStream,
) -> Result<StageResult, CoreError> {
    let ctx = guess_context(inst, scaled, &tuples);
    let b_resid: Vec<usize> = inst
        .colors
        .iter()
        .zip(&inst.b)
        .map(|(ck, &bk)| bk.saturating_sub(ck.intersection_count(&ctx.c_pre)))
        .collect();

    let lp = solve_restricted_lp(inst, scaled, &tuples, &b_resid)?;

    let tau = crate::ccf::heavy_threshold(eps);
    let mut heavy = crate::ccf::heavy_shallow_split(&lp.z, eps);
    heavy.subtract(&ctx.c_pre);
    let x_scaled: Vec<f64> = lp.x.iter().map(|&v| (v / tau).min(1.0)).collect();

    let (xm, ym) = ucfl_point_from_stars(inst.nf, inst.nc, &lp.stars, &x_scaled);
    let ucfl = cover_heavy_ucfl(inst, &heavy, &xm, &ym)?;

    // Shallow side: stars keep their price but only count shallow clients,
    // demands drop by what the heavy clients already deliver, and the scaled
    // point is rounded against demands inflated by 1/(1−ε).
    let support: Vec<usize> =
        (0..lp.stars.len()).filter(|&si| x_scaled[si] > 1e-12).collect();
    let b_shallow: Vec<usize> = inst
        .colors
        .iter()
        .zip(&b_resid)
        .map(|(ck, &bk)| bk.saturating_sub(ck.intersection_count(&heavy)))
        .collect();
    let mut served = ctx.c_pre.clone();
    served.union_with(&heavy);
    let mut chosen: BTreeSet<usize> = BTreeSet::new();
    let mut cost_round = 0.0;
    if !support.is_empty() {
        let shallow_of = |si: usize| {
            let mut cl = lp.stars[si].clients.clone();
            cl.subtract(&heavy);
            cl
        };
        let mut fns = Vec::with_capacity(inst.r());
        let mut targets = Vec::with_capacity(inst.r());
        for (k, ck) in inst.colors.iter().enumerate() {
            let points: Vec<usize> = (0..inst.nc)
                .filter(|&j| ck.contains(j) && !ctx.c_pre.contains(j) && !heavy.contains(j))
                .collect();
            let index_of: BTreeMap<usize, usize> =
                points.iter().enumerate().map(|(p, &j)| (j, p)).collect();
            let covers: Vec<Vec<usize>> = support
                .iter()
                .map(|&si| {
                    shallow_of(si).iter_ones().filter_map(|j| index_of.get(&j).copied()).collect()
                })
                .collect();
            fns.push(Oracle::coverage(points.len(), covers, vec![1.0; points.len()])?);
            targets.push(b_shallow[k] as f64 / (1.0 - eps));
        }
        let view = MscInstance::new_raw(
            GroundSet::new(support.len()),
            CostFunction::new(support.iter().map(|&si| lp.stars[si].cost).collect()),
            fns,
            targets,
        );
        let point = FractionalPoint::new(support.iter().map(|&si| x_scaled[si]).collect())?;
        let outcome = round_fractional(&view, &point, eps, &mut rng.split(2))?;
        if outcome.preconditions.iter().any(|p| matches!(p, PreconditionCheck::Violated { .. })) {
            return Err(CoreError::Infeasible(
                "scaled point misses the rounding precondition; guess rejected".into(),
            ));
        }
        for vi in outcome.final_set.iter_ones() {
            let si = support[vi];
            chosen.insert(si);
            served.union_with(&lp.stars[si].clients);
            cost_round += true_star_cost(inst, lp.stars[si].facility, &shallow_of(si));
        }
    } else if b_shallow.iter().any(|&bk| bk > 0) {
        return Err(CoreError::Infeasible("empty LP support with open shallow demands".into()));
    }

    // Repair pass: per color, greedily add support stars until the full
    // demand holds, within the budgeted-cover allowance.
    let fix_budget = (lp.objective / tau).ceil().max(0.0) as u64;
    let mut cost_fix = 0.0;
    for (k, ck) in inst.colors.iter().enumerate() {
        if served.intersection_count(ck) >= inst.b[k] {
            continue;
        }
        let added =
            fix_color_with_stars(&lp.stars, &support, ck, inst.b[k], &mut served, &mut chosen, fix_budget)?;
        for si in added {
            let mut cl = lp.stars[si].clients.clone();
            cl.subtract(&heavy);
            cost_fix += true_star_cost(inst, lp.stars[si].facility, &cl);
        }
    }

    let mut opened: BTreeSet<usize> = ctx.f_pre.clone();
    opened.extend(ucfl.opened.iter().copied());
    opened.extend(chosen.iter().map(|&si| lp.stars[si].facility));

    let counts = inst.color_counts(&served);
    if counts.iter().zip(&inst.b).any(|(&have, &want)| have < want) {
        return Err(CoreError::SolverFailure(format!(
            "color demands unmet after repair: have {:?}, want {:?}",
            counts, inst.b
        )));
    }

    let opened: Vec<usize> = opened.into_iter().collect();
    let mut assignment = Vec::new();
    let mut total_cost: f64 = opened.iter().map(|&i| inst.open_costs[i]).sum();
    for j in served.iter_ones() {
        let (i, d) = opened
            .iter()
            .map(|&i| (i, inst.d_fc(i, j)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .ok_or_else(|| CoreError::SolverFailure("served client with nothing opened".into()))?;
        assignment.push((j, i));
        total_cost += d;
    }

    let cost_guess: f64 = ctx.f_pre.iter().map(|&i| inst.open_costs[i]).sum::<f64>()
        + tuples
            .iter()
            .map(|t| t.s_h.iter().map(|&j| inst.d_fc(t.facility, j)).sum::<f64>())
            .sum::<f64>();

    Ok(StageResult {
        lp_objective: lp.objective,
        lp_rounds: lp.rounds,
        support_stars: support.len(),
        heavy: heavy.to_indices(),
        opened,
        served,
        assignment,
        total_cost,
        cost_guess,
        cost_heavy: ucfl.cost,
        cost_round,
        cost_fix,
        tuples,
    })
}

/// Build guess tuples from a reference optimum: sort its stars by
/// descending scaled cost, keep the first `t`, and per star record the `l`
/// farthest clients plus the full scaled star cost.
fn tuples_from_optimum(
    inst: &FlmoInstance,
    scaled: &ScaledInstance,
    opt: &FlmoBrute,
    t: usize,
    l: usize,
) -> Result<Vec<GuessTuple>, CoreError> {
    let mut clients_of: BTreeMap<usize, Vec<usize>> = opt.facilities.iter().map(|&i| (i, Vec::new())).collect();
    for &(j, i) in &opt.assignment {
        clients_of.get_mut(&i).expect("assignment uses opened facilities").push(j);
    }
    let mut stars: Vec<(u64, usize, Vec<usize>)> = Vec::new();
    for (&i, clients) in &clients_of {
        let mask = BitSet::from_indices(inst.nc, clients);
        let cost = scaled.star_cost(i, &mask, false).ok_or_else(|| {
            CoreError::SolverFailure("reference optimum clipped by its own cost guess".into())
        })?;
        stars.push((cost, i, clients.clone()));
    }
    stars.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut tuples = Vec::new();
    for (cost, i, clients) in stars.into_iter().take(t) {
        let mut by_dist: Vec<usize> = clients;
        by_dist.sort_by(|&a, &b| {
            let da = scaled.d_bar[i][a].expect("optimum pair survives scaling");
            let db = scaled.d_bar[i][b].expect("optimum pair survives scaling");
            db.cmp(&da).then(a.cmp(&b))
        });
        by_dist.truncate(l);
        by_dist.sort_unstable();
        tuples.push(GuessTuple { facility: i, s_h: by_dist, g_h: cost });
    }
    Ok(tuples)
}

fn empty_report(
    inst: &FlmoInstance,
    eps: f64,
    seed: u64,
    mode: GuessMode,
    l: usize,
    t: usize,
    opt_known: Option<f64>,
) -> FlmoSolveReport {
    FlmoSolveReport {
        eps,
        seed,
        guess_mode: mode,
        opt_guess: 0.0,
        big_b: ((inst.nf + inst.nc) as u64).pow(3),
        l_farthest: l,
        t_tuples: t,
        tuples: Vec::new(),
        lp_objective: 0.0,
        lp_rounds: 0,
        support_stars: 0,
        heavy_clients: Vec::new(),
        opened: Vec::new(),
        served: Vec::new(),
        assignment: Vec::new(),
        total_cost: 0.0,
        cost_guess: 0.0,
        cost_heavy: 0.0,
        cost_round: 0.0,
        cost_fix: 0.0,
        color_counts: vec![0; inst.r()],
        requirements: inst.b.clone(),
        feasible: true,
        opt_known,
    }
}

fn assemble_report(
    inst: &FlmoInstance,
    eps: f64,
    seed: u64,
    mode: GuessMode,
    opt_guess: f64,
    scaled: &ScaledInstance,
    l: usize,
    t: usize,
    stage: StageResult,
    opt_known: Option<f64>,
) -> FlmoSolveReport {
    let counts = inst.color_counts(&stage.served);
    let feasible = counts.iter().zip(&inst.b).all(|(&have, &want)| have >= want);
    FlmoSolveReport {
        eps,
        seed,
        guess_mode: mode,
        opt_guess,
        big_b: scaled.big_b,
        l_farthest: l,
        t_tuples: t,
        tuples: stage
            .tuples
            .iter()
            .map(|tp| TupleSummary { facility: tp.facility, clients: tp.s_h.clone(), g: tp.g_h })
            .collect(),
        lp_objective: stage.lp_objective,
        lp_rounds: stage.lp_rounds,
        support_stars: stage.support_stars,
        heavy_clients: stage.heavy,
        opened: stage.opened,
        served: stage.served.to_indices(),
        assignment: stage.assignment,
        total_cost: stage.total_cost,
        cost_guess: stage.cost_guess,
        cost_heavy: stage.cost_heavy,
        cost_round: stage.cost_round,
        cost_fix: stage.cost_fix,
        color_counts: counts,
        requirements: inst.b.clone(),
        feasible,
        opt_known,
    }
}

/// Positive-cost grid for the optimal-cost guess when no reference optimum
/// is available: geometric steps of (1+ε) from the smallest relevant cost
/// to a trivial upper bound.
fn guess_grid(inst: &FlmoInstance, eps: f64) -> Vec<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = 1.0;
    for i in 0..inst.nf {
        if inst.open_costs[i] > 0.0 {
            lo = lo.min(inst.open_costs[i]);
        }
        hi += inst.open_costs[i];
    }
    for j in 0..inst.nc {
        let mut dmax: f64 = 0.0;
        for i in 0..inst.nf {
            let d = inst.d_fc(i, j);
            if d > 0.0 {
                lo = lo.min(d);
            }
            dmax = dmax.max(d);
        }
        hi += dmax;
    }
    if !lo.is_finite() {
        lo = 1.0;
    }
    let mut grid = Vec::new();
    let mut g = lo;
    while g <= hi * (1.0 + eps) {
        grid.push(g);
        g *= 1.0 + eps;
    }
    grid
}

/// Full solver. Oracle-assisted mode scales against the exact optimum and
/// guesses its most expensive stars; the other modes sweep a geometric grid
/// of cost guesses with facility-set guesses standing in for full tuples.
/// `cfg.l_override` overrides the tuple count T (the guessed-client count L
/// per tuple stays at its formula value).
pub fn solve_flmo(
    inst: &FlmoInstance,
    eps: f64,
    cfg: &GuessConfig,
    rng: &mut RngStream,
) -> Result<FlmoSolveReport, CoreError> {
    if !eps.is_finite() || eps <= 0.0 || eps >= 1.0 {
        return Err(CoreError::Domain(format!("eps = {} outside (0,1)", eps)));
    }
    let l = ccf_guess_count(inst.r(), eps)?;
    let t = cfg.l_override.unwrap_or(((l as f64) / eps).ceil() as usize);
    let seed = rng.seed();

    if inst.b.iter().all(|&bk| bk == 0) {
        return Ok(empty_report(inst, eps, seed, cfg.mode, l, t, Some(0.0)));
    }

    match cfg.mode {
        GuessMode::OracleAssisted => {
            let opt = brute_force_flmo(inst)?
                .ok_or_else(|| CoreError::Infeasible("no selection meets the color demands".into()))?;
            let opt_guess = opt.cost.max(1e-12);
            let scaled = scale_and_prune(inst, opt_guess)?;
            let tuples = tuples_from_optimum(inst, &scaled, &opt, t, l)?;
            let stage = run_stages(inst, &scaled, tuples, eps, &rng.split(0xF1A0))?;
            Ok(assemble_report(inst, eps, seed, cfg.mode, opt_guess, &scaled, l, t, stage, Some(opt.cost)))
        }
        GuessMode::HeuristicTopcost => {
            let mut last = CoreError::GuessesExhausted("empty guess grid".into());
            for (ai, &guess) in guess_grid(inst, eps).iter().enumerate() {
                let scaled = scale_and_prune(inst, guess)?;
                let mut kept: Vec<(u64, usize)> = (0..inst.nf)
                    .filter_map(|i| scaled.f_bar[i].map(|f| (f, i)))
                    .collect();
                kept.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                let cap = scaled.open_cap();
                let tuples: Vec<GuessTuple> = kept
                    .into_iter()
                    .take(t)
                    .map(|(_, i)| GuessTuple { facility: i, s_h: Vec::new(), g_h: cap })
                    .collect();
                match run_stages(inst, &scaled, tuples, eps, &rng.split(0xF1A0 + ai as u64)) {
                    Ok(stage) => {
                        return Ok(assemble_report(
                            inst, eps, seed, cfg.mode, guess, &scaled, l, t, stage, None,
                        ));
                    }
                    Err(e @ (CoreError::Infeasible(_) | CoreError::SolverFailure(_))) => last = e,
                    Err(e) => return Err(e),
                }
            }
            Err(CoreError::GuessesExhausted(last.to_string()))
        }
        GuessMode::ExactEnumeration => {
            if inst.nf > 22 {
                return Err(CoreError::Capacity(format!(
                    "facility-set enumeration capped at 22 facilities, got {}",
                    inst.nf
                )));
            }
            let subsets = 1u64 << inst.nf;
            if subsets > cfg.max_enumeration {
                return Err(CoreError::Capacity(format!(
                    "{} facility subsets exceed the {} enumeration allowance",
                    subsets, cfg.max_enumeration
                )));
            }
            let mut last = CoreError::GuessesExhausted("empty guess grid".into());
            for (ai, &guess) in guess_grid(inst, eps).iter().enumerate() {
                let scaled = scale_and_prune(inst, guess)?;
                let cap = scaled.open_cap();
                let mut best: Option<(FlmoSolveReport, f64)> = None;
                for code in 0..subsets {
                    let set = BitSet::from_code(inst.nf, code);
                    if set.count() > t || set.iter_ones().any(|i| scaled.f_bar[i].is_none()) {
                        continue;
                    }
                    let tuples: Vec<GuessTuple> = set
                        .iter_ones()
                        .map(|i| GuessTuple { facility: i, s_h: Vec::new(), g_h: cap })
                        .collect();
                    let sub = rng.split(0xF1A0 ^ ((ai as u64) << 24) ^ code);
                    match run_stages(inst, &scaled, tuples, eps, &sub) {
                        Ok(stage) => {
                            let report = assemble_report(
                                inst, eps, seed, cfg.mode, guess, &scaled, l, t, stage, None,
                            );
                            if best.as_ref().map_or(true, |(_, c)| report.total_cost < c - 1e-12) {
                                let c = report.total_cost;
                                best = Some((report, c));
                            }
                        }
                        Err(e @ (CoreError::Infeasible(_) | CoreError::SolverFailure(_))) => last = e,
                        Err(e) => return Err(e),
                    }
                }
                if let Some((report, _)) = best {
                    return Ok(report);
                }
            }
            Err(CoreError::GuessesExhausted(last.to_string()))
        }
    }
}
