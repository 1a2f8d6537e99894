//! File-format coverage: save/load round trips for every family, digest
//! stability, and loader rejection of mismatched kinds.

use manycover::flmo::{load_flmo, parse_flmo, solve_flmo};
use manycover::gen::{generate, Family, GeneratorSpec};
use manycover::io::{load_ccf, load_msc, parse_ccf, parse_msc, save_json, to_canonical_json};
use manycover::msc::{solve_msc_single, GuessConfig};
use manycover::report::instance_digest;
use manycover::ccf::{solve_ccf, ThresholdOracle};
use manycover::RngStream;

fn spec(family: Family, seed: u64) -> GeneratorSpec {
    GeneratorSpec { family, n: 5, m: 6, r: 2, seed, cost_max: 25 }
}

#[test]
fn msc_files_survive_save_and_load() {
    let inst = generate(&spec(Family::RandomCoverage, 11)).unwrap();
    let json = inst.to_json();
    let doc = parse_msc(&json).unwrap();
    assert_eq!(to_canonical_json(&doc.raw), json);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.json");
    save_json(&path, &doc.raw).unwrap();
    let loaded = load_msc(&path).unwrap();
    assert_eq!(loaded.raw, doc.raw);
    assert_eq!(
        instance_digest(&to_canonical_json(&loaded.raw)),
        instance_digest(&json),
    );

    let rep = solve_msc_single(&loaded.inst, 0.25, &GuessConfig::default(), &mut RngStream::new(3))
        .unwrap();
    assert!(rep.hard_coverage_ok);
}

#[test]
fn planted_optimum_rides_along() {
    let inst = generate(&spec(Family::PlantedOptimum, 4)).unwrap();
    let doc = parse_msc(&inst.to_json()).unwrap();
    let planted = doc.raw.planted.expect("planted family records its subset");
    let cost: u64 = planted.indices.iter().map(|&i| doc.raw.costs[i]).sum();
    assert_eq!(cost, planted.cost);
}

#[test]
fn ccf_files_survive_save_and_load() {
    let inst = generate(&spec(Family::VertexCoverLike, 12)).unwrap();
    let json = inst.to_json();
    let doc = parse_ccf(&json).unwrap();
    assert_eq!(to_canonical_json(&doc.raw), json);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    save_json(&path, &doc.raw).unwrap();
    let loaded = load_ccf(&path).unwrap();
    assert_eq!(loaded.raw, doc.raw);

    let rep = solve_ccf(
        &loaded.inst,
        0.25,
        &GuessConfig::default(),
        &ThresholdOracle { k: 2 },
        &mut RngStream::new(4),
    )
    .unwrap();
    assert!(rep.feasible);
}

#[test]
fn flmo_files_survive_save_and_load() {
    let inst = generate(&spec(Family::RandomMetricFlmo, 13)).unwrap();
    let json = inst.to_json();
    let doc = parse_flmo(&json).unwrap();
    assert_eq!(to_canonical_json(&doc.raw), json);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    save_json(&path, &doc.raw).unwrap();
    let loaded = load_flmo(&path).unwrap();
    assert_eq!(to_canonical_json(&loaded.raw), json);

    let rep = solve_flmo(&loaded.inst, 0.25, &GuessConfig::default(), &mut RngStream::new(5))
        .unwrap();
    assert!(rep.feasible);
}

#[test]
fn digests_distinguish_different_instances() {
    let a = generate(&spec(Family::RandomCoverage, 1)).unwrap().to_json();
    let b = generate(&spec(Family::RandomCoverage, 2)).unwrap().to_json();
    assert_ne!(a, b);
    assert_ne!(instance_digest(&a), instance_digest(&b));
    assert_eq!(
        instance_digest(&generate(&spec(Family::RandomCoverage, 1)).unwrap().to_json()),
        instance_digest(&a),
    );
}

#[test]
fn loaders_reject_wrong_kind() {
    let msc = generate(&spec(Family::RandomCoverage, 7)).unwrap().to_json();
    let ccf = generate(&spec(Family::VertexCoverLike, 7)).unwrap().to_json();
    let flmo = generate(&spec(Family::RandomMetricFlmo, 7)).unwrap().to_json();

    assert!(parse_msc(&ccf).is_err());
    assert!(parse_msc(&flmo).is_err());
    assert!(parse_ccf(&msc).is_err());
    assert!(parse_ccf(&flmo).is_err());
    assert!(parse_flmo(&msc).is_err());
    assert!(parse_flmo(&ccf).is_err());
    assert!(parse_msc("not json").is_err());
    assert!(parse_msc("{\"kind\":\"msc\"}").is_err());
}
