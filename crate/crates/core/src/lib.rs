//! Simulation of UAV-assisted clustering on a straight two-lane road.
//!
//! Vehicles are associated with the UAV offering the highest air-to-ground
//! SNR; each UAV's cluster elects a cluster head from speed similarity,
//! residual path and neighbourhood size, keeps a ranked backup list, and
//! replaces a departing head from that list. Event traces from many seeded
//! runs are aggregated into re-selection counts, SNR and a robustness
//! likelihood.
//!
//! The library is generic over the floating-point type ([`Scalar`], implemented
//! for `f32` and `f64`); the unsuffixed aliases below fix it to `f64`.

// `!(x > 0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod backup;
pub mod channel;
pub mod chselect;
pub mod domain;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod mobility;
mod scalar;

pub use domain::{
    BackupScoring, ClusterId, Direction, PathOrientation, ResidualPathMode, Scheme, SnrMode, UavId, UavPolicy,
    VehicleId,
};
pub use engine::{DepartureReason, EventKind};
pub use error::{ConfigError, DomainError, Error, Result, TraceParseError};
pub use experiment::{seed_plan, stream_seed, streams_for, PlannedRun, StreamSeeds, SweepVar};
pub use scalar::Scalar;

pub type SimConfig = domain::SimConfig<f64>;
pub type ValidConfig = domain::ValidConfig<f64>;
pub type Vehicle = domain::Vehicle<f64>;
pub type Cam = domain::Cam<f64>;
pub type Cluster = domain::Cluster<f64>;
pub type Engine = engine::Engine<f64>;
pub type Trace = engine::Trace<f64>;
pub type SimEvent = engine::SimEvent<f64>;
pub type ExperimentSpec = experiment::ExperimentSpec<f64>;
pub type RunMetrics = metrics::RunMetrics<f64>;
pub type ExperimentAggregate = metrics::ExperimentAggregate<f64>;

pub type SimConfig32 = domain::SimConfig<f32>;
pub type ValidConfig32 = domain::ValidConfig<f32>;
pub type Engine32 = engine::Engine<f32>;
pub type Trace32 = engine::Trace<f32>;
