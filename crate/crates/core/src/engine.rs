//! One entry point over every enumerator, used by the CLI, the benchmark
//! harness and `verify`.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algorithms::{all_closures, close_by_one_with_depth};
use crate::context::{ConceptList, FormalContext};
use crate::error::{Error, Result};
use crate::fixtures::random_context;
use crate::mr::{self, MrOptions};
use crate::oracle::brute_force_concepts;
use crate::partition::{split, PartitionSet, SplitStrategy};
use crate::runtime::{JobKind, Mode, TransferStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    NextClosure,
    Cbo,
    MrGanter,
    MrGanterPlus,
    MrCbo,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Oracle,
        Algorithm::NextClosure,
        Algorithm::Cbo,
        Algorithm::MrGanter,
        Algorithm::MrGanterPlus,
        Algorithm::MrCbo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::NextClosure => "nextclosure",
            Algorithm::Cbo => "cbo",
            Algorithm::MrGanter => "mrganter",
            Algorithm::MrGanterPlus => "mrganter+",
            Algorithm::MrCbo => "mrcbo",
            Algorithm::Oracle => "oracle",
        }
    }

    pub fn job(self) -> Option<JobKind> {
        match self {
            Algorithm::MrGanter => Some(JobKind::MrGanter),
            Algorithm::MrGanterPlus => Some(JobKind::MrGanterPlus),
            Algorithm::MrCbo => Some(JobKind::MrCbo),
            _ => None,
        }
    }

    pub fn is_distributed(self) -> bool {
        self.job().is_some()
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm {s:?}")))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    pub partitions: usize,
    pub strategy: SplitStrategy,
    /// Defaults to one worker per partition.
    pub workers: Option<usize>,
    pub mode: Mode,
    pub mr: MrOptions,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            partitions: 1,
            strategy: SplitStrategy::Contiguous,
            workers: None,
            mode: Mode::InProcess,
            mr: MrOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub algorithm: Algorithm,
    pub concepts: ConceptList,
    /// MR rounds as reported, CbO tree depth, NextClosure successor steps;
    /// absent for the oracle.
    pub iterations: Option<usize>,
    pub rounds: Option<usize>,
    pub batch_sizes: Vec<usize>,
    pub transfer: Option<TransferStats>,
    pub elapsed: Duration,
}

/// Runs `algo` on `ctx`, splitting it per `cfg` for the distributed ones.
pub fn enumerate(ctx: &FormalContext, algo: Algorithm, cfg: &EngineConfig) -> Result<Outcome> {
    if algo.is_distributed() {
        let start = Instant::now();
        let parts = split(ctx, cfg.partitions, cfg.strategy)?;
        let mut out = enumerate_partitioned(&parts, algo, cfg)?;
        out.elapsed = start.elapsed();
        return Ok(out);
    }
    let start = Instant::now();
    let (concepts, iterations) = match algo {
        Algorithm::NextClosure => {
            let list = all_closures(ctx);
            let steps = list.len().saturating_sub(1);
            (list, Some(steps))
        }
        Algorithm::Cbo => {
            let (list, depth) = close_by_one_with_depth(ctx);
            (list, Some(depth))
        }
        Algorithm::Oracle => (brute_force_concepts(ctx)?, None),
        _ => unreachable!("distributed algorithms handled above"),
    };
    Ok(Outcome {
        algorithm: algo,
        concepts,
        iterations,
        rounds: None,
        batch_sizes: Vec::new(),
        transfer: None,
        elapsed: start.elapsed(),
    })
}

/// Distributed enumeration over an existing partitioning.
pub fn enumerate_partitioned(parts: &PartitionSet, algo: Algorithm, cfg: &EngineConfig) -> Result<Outcome> {
    let job = algo
        .job()
        .ok_or_else(|| Error::InvalidArgument(format!("{algo} does not run on partitions")))?;
    let workers = cfg.workers.unwrap_or(parts.len());
    let start = Instant::now();
    let run = mr::run(job, parts, workers, cfg.mode.clone(), &cfg.mr)?;
    let concepts = run.concepts(parts)?;
    Ok(Outcome {
        algorithm: algo,
        concepts,
        iterations: Some(run.iterations),
        rounds: Some(run.rounds),
        batch_sizes: run.batch_sizes,
        transfer: Some(run.transfer),
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    pub max_objects: usize,
    pub max_attributes: usize,
    /// Inject the MRGanter lectic-test fault.
    pub mutant: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            max_objects: 12,
            max_attributes: 14,
            mutant: false,
        }
    }
}

/// A verification trial: a context and the partitioning applied to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trial {
    pub index: usize,
    pub ctx: FormalContext,
    pub partitions: usize,
    pub strategy: SplitStrategy,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    pub algorithm: String,
    pub partitions: usize,
    pub strategy: String,
    pub detail: String,
    /// The context in CXT form.
    pub context: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub trials: usize,
    pub checks: usize,
    pub failure: Option<Counterexample>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Deterministic trial set for `opts.seed`. When `fixed` is given every
/// trial uses it with a fresh random partitioning.
pub fn trials(opts: &VerifyOptions, fixed: Option<&FormalContext>) -> Vec<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.trials)
        .map(|index| {
            let ctx = match fixed {
                Some(ctx) => ctx.clone(),
                None => {
                    let n = rng.gen_range(1..=opts.max_objects.max(1));
                    let m = rng.gen_range(1..=opts.max_attributes.max(1));
                    let density = rng.gen_range(0.1..0.9);
                    random_context(&mut rng, n, m, density)
                }
            };
            let objects = ctx.object_count().max(1);
            let partitions = rng.gen_range(1..=objects.min(4));
            let strategy = if rng.gen_bool(0.5) {
                SplitStrategy::Contiguous
            } else {
                SplitStrategy::RoundRobin
            };
            let workers = rng.gen_range(1..=partitions);
            Trial {
                index,
                ctx,
                partitions,
                strategy,
                workers,
            }
        })
        .collect()
}

/// Checks every enumerator against the oracle on each trial; stops at the
/// first disagreement.
pub fn verify(opts: &VerifyOptions, fixed: Option<&FormalContext>) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    for trial in trials(opts, fixed) {
        report.trials += 1;
        let want = brute_force_concepts(&trial.ctx)?;
        let m = trial.ctx.attribute_count();
        let cfg = EngineConfig {
            partitions: trial.partitions,
            strategy: trial.strategy,
            workers: Some(trial.workers),
            mode: Mode::InProcess,
            mr: MrOptions {
                // a correct run needs at most one round per concept
                max_iterations: (1usize << m) + 1,
                skip_lectic_test: opts.mutant,
                ..MrOptions::default()
            },
        };
        for algo in Algorithm::ALL.into_iter().filter(|&a| a != Algorithm::Oracle) {
            report.checks += 1;
            let detail = match enumerate(&trial.ctx, algo, &cfg) {
                Ok(out) if out.concepts.clone().sorted_lectic() == want => continue,
                Ok(out) => format!("{} concepts, oracle has {}", out.concepts.len(), want.len()),
                Err(e) => format!("error: {e}"),
            };
            let mut cxt = Vec::new();
            crate::io::write_cxt(&trial.ctx, &mut cxt)?;
            report.failure = Some(Counterexample {
                trial: trial.index,
                algorithm: algo.name().to_string(),
                partitions: trial.partitions,
                strategy: trial.strategy.to_string(),
                detail,
                context: String::from_utf8_lossy(&cxt).into_owned(),
            });
            return Ok(report);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy_context;

    #[test]
    fn every_algorithm_on_the_toy() {
        let ctx = toy_context();
        let want = brute_force_concepts(&ctx).unwrap();
        for algo in Algorithm::ALL {
            let cfg = EngineConfig { partitions: 2, ..EngineConfig::default() };
            let out = enumerate(&ctx, algo, &cfg).unwrap();
            assert_eq!(out.concepts.sorted_lectic(), want, "{algo}");
        }
    }

    #[test]
    fn names_round_trip() {
        for algo in Algorithm::ALL {
            assert_eq!(algo.name().parse::<Algorithm>().unwrap(), algo);
        }
        assert!("apriori".parse::<Algorithm>().is_err());
    }

    #[test]
    fn verify_is_reproducible_and_catches_the_mutant() {
        let opts = VerifyOptions { trials: 20, seed: 3, max_attributes: 8, ..VerifyOptions::default() };
        assert_eq!(trials(&opts, None), trials(&opts, None));
        assert!(verify(&opts, None).unwrap().passed());
        let bad = verify(&VerifyOptions { mutant: true, ..opts }, None).unwrap();
        assert_eq!(bad.failure.unwrap().algorithm, "mrganter");
        let none = verify(&VerifyOptions { trials: 0, ..opts }, None).unwrap();
        assert!(none.passed());
        assert_eq!(none.checks, 0);
    }
}
