//! `manycover`: generate, solve, and benchmark covering instances from the
//! command line. JSON in, JSON out; the exit status reflects the hard
//! feasibility checks (0 only when every one passed).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use manycover::acceptance::run_all;
use manycover::brute::{brute_force_ccf, brute_force_flmo, brute_force_msc};
use manycover::ccf::{solve_ccf, FullCoverOracle, GenericOracle, ThresholdOracle};
use manycover::experiment::{run_experiment, text_table, ExperimentSpec};
use manycover::flmo::{load_flmo, solve_flmo};
use manycover::gen::{generate, Family, GeneratorSpec};
use manycover::io::{load_ccf, load_msc, save_json, to_canonical_json};
use manycover::msc::{solve_msc_multi, solve_msc_single, GuessConfig, GuessMode};
use manycover::report::{envelope_ccf, envelope_flmo, envelope_msc, instance_digest, SolveReport};
use manycover::RngStream;

#[derive(Parser)]
#[command(name = "manycover", version, about = "Covering-problem solver suite")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random instance file.
    GenInstance(GenArgs),
    /// Solve a multi-constraint submodular covering instance.
    SolveMsc(MscArgs),
    /// Solve a covering instance over a set system with linear constraints.
    SolveCcf(CcfArgs),
    /// Solve a facility-location instance with color demands.
    SolveFlmo(FlmoArgs),
    /// Exhaustive reference solve (small instances only).
    BruteForce {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Run a trial batch, or the acceptance suite with --suite acceptance.
    Bench(BenchArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum FamilyArg {
    RandomCoverage,
    VertexCoverLike,
    PlantedOptimum,
    RandomMetricFlmo,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::RandomCoverage => Family::RandomCoverage,
            FamilyArg::VertexCoverLike => Family::VertexCoverLike,
            FamilyArg::PlantedOptimum => Family::PlantedOptimum,
            FamilyArg::RandomMetricFlmo => Family::RandomMetricFlmo,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum GuessModeArg {
    OracleAssisted,
    ExactEnumeration,
    HeuristicTopcost,
}

impl From<GuessModeArg> for GuessMode {
    fn from(m: GuessModeArg) -> GuessMode {
        match m {
            GuessModeArg::OracleAssisted => GuessMode::OracleAssisted,
            GuessModeArg::ExactEnumeration => GuessMode::ExactEnumeration,
            GuessModeArg::HeuristicTopcost => GuessMode::HeuristicTopcost,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum OracleArg {
    Threshold,
    Generic,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Ground elements / sets / facilities.
    #[arg(long)]
    n: usize,
    /// Points / clients.
    #[arg(long)]
    m: usize,
    /// Constraints / colors.
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    cost_max: u64,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveCommon {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = GuessModeArg::OracleAssisted)]
    guess_mode: GuessModeArg,
    /// Override the theoretical guess size.
    #[arg(long = "L-override", alias = "l-override")]
    l_override: Option<usize>,
    #[arg(long, default_value_t = 200_000)]
    max_enumeration: u64,
    /// Also write the report JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl SolveCommon {
    fn cfg(&self) -> GuessConfig {
        GuessConfig {
            mode: self.guess_mode.into(),
            l_override: self.l_override,
            max_enumeration: self.max_enumeration,
        }
    }
}

#[derive(Args)]
struct MscArgs {
    #[command(flatten)]
    common: SolveCommon,
    /// Coverage-boosting rounds: guarantee factor 1 − e^{−α} − ε.
    #[arg(long, default_value_t = 1)]
    alpha: usize,
}

#[derive(Args)]
struct CcfArgs {
    #[command(flatten)]
    common: SolveCommon,
    #[arg(long, value_enum, default_value_t = OracleArg::Threshold)]
    oracle: OracleArg,
}

#[derive(Args)]
struct FlmoArgs {
    #[command(flatten)]
    common: SolveCommon,
}

#[derive(Args)]
struct BenchArgs {
    /// Named suite to run ("acceptance").
    #[arg(long)]
    suite: Option<String>,
    #[arg(long, value_enum, required_unless_present = "suite")]
    family: Option<FamilyArg>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 6)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long, default_value_t = 50)]
    cost_max: u64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    alpha: usize,
    #[arg(long, value_enum, default_value_t = OracleArg::Threshold)]
    oracle: OracleArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Stdout wrapper: the report itself stays deterministic, timing rides
/// alongside.
#[derive(Serialize)]
struct Timed {
    report: SolveReport,
    wall_time_ms: f64,
}

fn emit(report: SolveReport, started: Instant, out: &Option<PathBuf>) -> Result<bool> {
    let passed = report.feasible;
    if let Some(path) = out {
        save_json(path, &report).with_context(|| format!("writing {}", path.display()))?;
    }
    let timed = Timed { report, wall_time_ms: started.elapsed().as_secs_f64() * 1e3 };
    println!("{}", serde_json::to_string_pretty(&timed)?);
    Ok(passed)
}

fn run_msc(args: &MscArgs) -> Result<bool> {
    let started = Instant::now();
    let doc = load_msc(&args.common.instance)
        .with_context(|| format!("loading {}", args.common.instance.display()))?;
    let digest = instance_digest(&to_canonical_json(&doc.raw));
    let cfg = args.common.cfg();
    let mut rng = RngStream::new(args.common.seed);
    let rep = if args.alpha == 1 {
        solve_msc_single(&doc.inst, args.common.eps, &cfg, &mut rng)?
    } else {
        solve_msc_multi(&doc.inst, args.alpha, args.common.eps, &cfg, &mut rng)?
    };
    emit(envelope_msc(&digest, &rep)?, started, &args.common.report)
}

fn run_ccf(args: &CcfArgs) -> Result<bool> {
    let started = Instant::now();
    let doc = load_ccf(&args.common.instance)
        .with_context(|| format!("loading {}", args.common.instance.display()))?;
    let digest = instance_digest(&to_canonical_json(&doc.raw));
    let cfg = args.common.cfg();
    let oracle: Box<dyn FullCoverOracle> = match args.oracle {
        OracleArg::Threshold => Box::new(ThresholdOracle { k: 2 }),
        OracleArg::Generic => Box::new(GenericOracle::default()),
    };
    let mut rng = RngStream::new(args.common.seed);
    let rep = solve_ccf(&doc.inst, args.common.eps, &cfg, oracle.as_ref(), &mut rng)?;
    emit(envelope_ccf(&digest, &rep)?, started, &args.common.report)
}

fn run_flmo(args: &FlmoArgs) -> Result<bool> {
    let started = Instant::now();
    let doc = load_flmo(&args.common.instance)
        .with_context(|| format!("loading {}", args.common.instance.display()))?;
    let digest = instance_digest(&to_canonical_json(&doc.raw));
    let cfg = args.common.cfg();
    let mut rng = RngStream::new(args.common.seed);
    let rep = solve_flmo(&doc.inst, args.common.eps, &cfg, &mut rng)?;
    emit(envelope_flmo(&digest, &rep)?, started, &args.common.report)
}

fn run_gen(args: &GenArgs) -> Result<bool> {
    let spec = GeneratorSpec {
        family: args.family.into(),
        n: args.n,
        m: args.m,
        r: args.r,
        seed: args.seed,
        cost_max: args.cost_max,
    };
    let inst = generate(&spec)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, inst.to_json())
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => println!("{}", inst.to_json()),
    }
    Ok(true)
}

fn run_brute(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("loading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .context("instance file has no \"kind\" field")?;
    let out = match kind {
        "msc" => {
            let doc = load_msc(path)?;
            match brute_force_msc(&doc.inst)? {
                Some(best) => serde_json::json!({
                    "problem": "msc", "feasible": true, "cost": best.cost, "set": best.set,
                }),
                None => serde_json::json!({ "problem": "msc", "feasible": false }),
            }
        }
        "ccf" => {
            let doc = load_ccf(path)?;
            match brute_force_ccf(&doc.inst)? {
                Some(best) => serde_json::json!({
                    "problem": "ccf", "feasible": true, "cost": best.cost, "sets": best.set,
                }),
                None => serde_json::json!({ "problem": "ccf", "feasible": false }),
            }
        }
        "flmo" => {
            let doc = load_flmo(path)?;
            match brute_force_flmo(&doc.inst)? {
                Some(best) => serde_json::json!({
                    "problem": "flmo", "feasible": true, "cost": best.cost,
                    "facilities": best.facilities, "assignment": best.assignment,
                }),
                None => serde_json::json!({ "problem": "flmo", "feasible": false }),
            }
        }
        other => bail!("unknown instance kind {:?}", other),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(true)
}

fn run_bench(args: &BenchArgs) -> Result<bool> {
    if let Some(suite) = &args.suite {
        if suite != "acceptance" {
            bail!("unknown suite {:?} (only \"acceptance\" exists)", suite);
        }
        let results = run_all();
        let mut all_passed = true;
        for r in &results {
            let tag = if r.passed { "PASS" } else { "FAIL" };
            println!("[{}] {} — {}", tag, r.name, r.details);
            all_passed &= r.passed;
        }
        println!("{}/{} criteria passed", results.iter().filter(|r| r.passed).count(), results.len());
        return Ok(all_passed);
    }

    let spec = ExperimentSpec {
        generator: GeneratorSpec {
            family: Family::from(args.family.expect("clap enforces family without --suite")),
            n: args.n,
            m: args.m,
            r: args.r,
            seed: 0,
            cost_max: args.cost_max,
        },
        trials: args.trials,
        eps: args.eps,
        alpha: args.alpha,
        oracle: match args.oracle {
            OracleArg::Threshold => "threshold".to_string(),
            OracleArg::Generic => "generic".to_string(),
        },
        seed: args.seed,
    };
    let report = run_experiment(&spec)?;
    if let Some(path) = &args.report {
        save_json(path, &report).with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{}", text_table(&report));
    let all_ok = report.failures == 0
        && report.records.iter().all(|r| r.report.as_ref().is_some_and(|rep| rep.feasible));
    Ok(all_ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::GenInstance(args) => run_gen(args),
        Cmd::SolveMsc(args) => run_msc(args),
        Cmd::SolveCcf(args) => run_ccf(args),
        Cmd::SolveFlmo(args) => run_flmo(args),
        Cmd::BruteForce { instance } => run_brute(instance),
        Cmd::Bench(args) => run_bench(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}
