//! Paired-seed experiment plans and parallel fan-out of runs.
//!
//! Stream seeds are derived with SplitMix64:
//!
//! ```text
//! stream(base, run, tag) = mix(mix(mix(base) ^ run) ^ tag)
//! ```
//!
//! with fixed tags for the mobility and fading streams and one tag per
//! scheme for the scheme stream. Mobility and fading seeds therefore depend
//! only on `(base, run)`: every scheme sees the same vehicles at a given run
//! index.

use rayon::prelude::*;

use crate::domain::{Scheme, SimConfig, ValidConfig};
use crate::engine::{self, Trace};
use crate::error::{ConfigError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeeds {
    pub mobility: u64,
    pub fading: u64,
    pub scheme: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedRun {
    pub scheme: Scheme,
    pub run: usize,
    pub streams: StreamSeeds,
}

const MOBILITY_TAG: u64 = 0x6d6f_6269_6c69_7479;
const FADING_TAG: u64 = 0x6661_6469_6e67_0000;
const SCHEME_TAG: u64 = 0x7363_6865_6d65_0000;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_seed(base: u64, run: usize, tag: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ run as u64) ^ tag)
}

fn scheme_tag(s: Scheme) -> u64 {
    SCHEME_TAG
        | match s {
            Scheme::Proposed => 1,
            Scheme::Random => 2,
            Scheme::Vmasc => 3,
        }
}

pub fn streams_for(base: u64, run: usize, scheme: Scheme) -> StreamSeeds {
    StreamSeeds {
        mobility: stream_seed(base, run, MOBILITY_TAG),
        fading: stream_seed(base, run, FADING_TAG),
        scheme: stream_seed(base, run, scheme_tag(scheme)),
    }
}

/// One planned run per (scheme, run index), grouped by scheme in the given order.
pub fn seed_plan(base: u64, runs: usize, schemes: &[Scheme]) -> Vec<PlannedRun> {
    schemes
        .iter()
        .flat_map(|&scheme| (0..runs).map(move |run| PlannedRun { scheme, run, streams: streams_for(base, run, scheme) }))
        .collect()
}

/// Executes a plan on `workers` threads. Output is sorted by (scheme, run)
/// and does not depend on the worker count.
pub fn run_batch<F: Scalar>(cfg: &ValidConfig<F>, plan: &[PlannedRun], workers: usize) -> Vec<Trace<F>> {
    let job = |p: &PlannedRun| {
        let mut c = cfg.clone();
        c.set_scheme(p.scheme);
        engine::run(&c, p.scheme, p.run, p.streams)
    };
    let mut traces: Vec<Trace<F>> = match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(|| plan.par_iter().map(job).collect()),
        Err(_) => plan.iter().map(job).collect(),
    };
    traces.sort_by_key(|t| (t.scheme, t.run));
    traces
}

/// Config key swept by an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    None,
    Vehicles,
    Duration,
}

impl SweepVar {
    pub fn key(self) -> Option<&'static str> {
        match self {
            SweepVar::None => None,
            SweepVar::Vehicles => Some("num_vehicles"),
            SweepVar::Duration => Some("duration"),
        }
    }
}

impl std::str::FromStr for SweepVar {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(SweepVar::None),
            "vehicles" => Ok(SweepVar::Vehicles),
            "duration" => Ok(SweepVar::Duration),
            other => Err(format!("unknown sweep variable `{other}` (expected none | vehicles | duration)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec<F> {
    pub base: SimConfig<F>,
    pub schemes: Vec<Scheme>,
    pub sweep: SweepVar,
    /// Sweep values in the config-file syntax of the swept key.
    pub values: Vec<String>,
    pub runs: usize,
    pub seed_base: u64,
    pub workers: usize,
}

/// Traces of one sweep point (the whole experiment when not sweeping).
#[derive(Debug, Clone)]
pub struct SweepPoint<F> {
    pub value: Option<String>,
    pub config: ValidConfig<F>,
    pub traces: Vec<Trace<F>>,
}

impl<F: Scalar> ExperimentSpec<F> {
    pub fn check(&self) -> std::result::Result<(), ConfigError> {
        if self.runs == 0 {
            return Err(ConfigError::Invalid { field: "runs", reason: "must be at least 1".into() });
        }
        if self.schemes.is_empty() {
            return Err(ConfigError::Invalid { field: "scheme", reason: "no scheme selected".into() });
        }
        if self.sweep != SweepVar::None {
            let nums: Vec<f64> = self
                .values
                .iter()
                .map(|v| v.trim().parse::<f64>().map_err(|_| ConfigError::BadValue { field: "values", value: v.clone() }))
                .collect::<std::result::Result<_, _>>()?;
            if nums.is_empty() || nums.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ConfigError::Invalid { field: "values", reason: "must be non-empty and strictly increasing".into() });
            }
        }
        Ok(())
    }

    /// Runs every sweep point with paired seeds across schemes.
    pub fn execute(&self) -> Result<Vec<SweepPoint<F>>> {
        self.check()?;
        let plan = seed_plan(self.seed_base, self.runs, &self.schemes);
        let points: Vec<Option<String>> = match self.sweep.key() {
            None => vec![None],
            Some(_) => self.values.iter().cloned().map(Some).collect(),
        };
        points
            .into_iter()
            .map(|value| {
                let mut cfg = self.base.clone();
                cfg.seed = self.seed_base;
                if let (Some(key), Some(v)) = (self.sweep.key(), &value) {
                    cfg.set(key, v)?;
                }
                let config = cfg.validate()?;
                let traces = run_batch(&config, &plan, self.workers);
                Ok(SweepPoint { value, config, traces })
            })
            .collect()
    }
}

impl<F: Scalar> ValidConfig<F> {
    fn set_scheme(&mut self, scheme: Scheme) {
        self.config_mut().scheme = scheme;
    }
}
