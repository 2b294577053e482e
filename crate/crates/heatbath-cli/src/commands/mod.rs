//! The eight experiment runners. Each takes a resolved config plus output
//! directory, writes its CSV artifacts, and returns the checks that decide
//! the exit code. All randomness flows through per-stream seeded RNGs, so a
//! given (config, seed) pair produces byte-identical artifacts regardless
//! of thread count.

use std::path::Path;

use crate::config::ExperimentConfig;
use crate::manifest::Check;
use crate::CliError;

pub mod clock;
pub mod collide;
pub mod conserve;
pub mod converge;
pub mod minkowski;
pub mod packet;
pub mod radiate;
pub mod scatter;

pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub seed: u64,
    pub out_dir: &'a Path,
}

pub struct Report {
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
}

pub fn run(name: &str, ctx: &Ctx) -> Result<Report, CliError> {
    match name {
        "collide" => collide::run(ctx),
        "converge" => converge::run(ctx),
        "conserve" => conserve::run(ctx),
        "clock" => clock::run(ctx),
        "radiate" => radiate::run(ctx),
        "packet" => packet::run(ctx),
        "minkowski" => minkowski::run(ctx),
        "scatter" => scatter::run(ctx),
        other => Err(CliError::Config(format!("experiment: unknown experiment '{other}'"))),
    }
}
