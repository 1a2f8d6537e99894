//! Instance builders shared by the criterion benches.

use manycover::flmo::{build_flmo, FlmoInstance};
use manycover::gen::{generate, Family, GeneratedInstance, GeneratorSpec};
use manycover::io::{build_ccf, build_msc};
use manycover::instance::{CcfInstance, MscInstance};

fn spec(family: Family, n: usize, m: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec { family, n, m, r: 2, seed, cost_max: 40 }
}

pub fn msc_instance(n: usize, m: usize, seed: u64) -> MscInstance {
    match generate(&spec(Family::RandomCoverage, n, m, seed)).expect("generate") {
        GeneratedInstance::Msc(file) => build_msc(&file).expect("build"),
        _ => unreachable!(),
    }
}

pub fn ccf_instance(n: usize, m: usize, seed: u64) -> CcfInstance {
    match generate(&spec(Family::VertexCoverLike, n, m, seed)).expect("generate") {
        GeneratedInstance::Ccf(file) => build_ccf(&file).expect("build"),
        _ => unreachable!(),
    }
}

pub fn flmo_instance(nf: usize, nc: usize, seed: u64) -> FlmoInstance {
    match generate(&spec(Family::RandomMetricFlmo, nf, nc, seed)).expect("generate") {
        GeneratedInstance::Flmo(file) => build_flmo(&file).expect("build"),
        _ => unreachable!(),
    }
}
