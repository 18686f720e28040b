//! Vehicle kinematics on a straight two-lane, two-way road.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;

use crate::domain::{Direction, RoadPoint, ValidConfig, Vehicle, VehicleId};
use crate::error::DomainError;
use crate::scalar::Scalar;

/// What happens to a vehicle that drives past the end of the road.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RespawnPolicy {
    /// Re-enter at the start of the same lane with a fresh speed and empty history.
    EntryEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadModel<F> {
    pub length: F,
    /// Forward lane first, backward lane second.
    pub lane_offsets: [F; 2],
    pub respawn: RespawnPolicy,
    /// Uniform speed range for respawned vehicles, m/s.
    pub speed_range: (F, F),
    pub speed_window: usize,
}

impl<F: Scalar> RoadModel<F> {
    pub fn from_config(cfg: &ValidConfig<F>) -> Self {
        Self {
            length: cfg.road_length,
            lane_offsets: cfg.lane_offsets,
            respawn: RespawnPolicy::EntryEnd,
            speed_range: (cfg.v_min, cfg.v_max),
            speed_window: cfg.speed_window,
        }
    }

    pub fn lane_y(&self, dir: Direction) -> F {
        match dir {
            Direction::Forward => self.lane_offsets[0],
            Direction::Backward => self.lane_offsets[1],
        }
    }

    fn entry_x(&self, dir: Direction) -> F {
        match dir {
            Direction::Forward => F::zero(),
            Direction::Backward => self.length,
        }
    }

    pub fn sample_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> F {
        let (lo, hi) = (self.speed_range.0.as_f64(), self.speed_range.1.as_f64());
        if hi > lo {
            F::lit(rng.random_range(lo..=hi))
        } else {
            self.speed_range.0
        }
    }

    /// Places `count` vehicles uniformly along the road with random direction and speed.
    pub fn spawn<R: Rng + ?Sized>(&self, count: usize, tx_power: F, rng: &mut R) -> Vec<Vehicle<F>> {
        (0..count)
            .map(|i| {
                let dir = if rng.random_bool(0.5) { Direction::Forward } else { Direction::Backward };
                let x = F::lit(rng.random_range(0.0..=self.length.as_f64()));
                let speed = self.sample_speed(rng);
                Vehicle::new(VehicleId(i as u32), RoadPoint::new(x, self.lane_y(dir)), dir, speed, tx_power)
            })
            .collect()
    }
}

fn push_sample<F>(history: &mut VecDeque<F>, sample: F, window: usize) {
    history.push_back(sample);
    while history.len() > window {
        history.pop_front();
    }
}

/// Advances every vehicle by `dt` seconds. Returns the ids of vehicles that left
/// the road and were respawned at the entry end, in id order.
pub fn step<F: Scalar, R: Rng + ?Sized>(
    vehicles: &mut [Vehicle<F>],
    road: &RoadModel<F>,
    dt: F,
    rng: &mut R,
) -> Vec<VehicleId> {
    let mut respawned = Vec::new();
    for v in vehicles.iter_mut() {
        let x = v.pos.x + v.dir.sign::<F>() * v.speed * dt;
        if x < F::zero() || x > road.length {
            match road.respawn {
                RespawnPolicy::EntryEnd => {
                    v.pos = RoadPoint::new(road.entry_x(v.dir), road.lane_y(v.dir));
                    v.speed = road.sample_speed(rng);
                    v.speed_history.clear();
                    v.epoch += 1;
                    respawned.push(v.id);
                }
            }
        } else {
            v.pos.x = x;
        }
        push_sample(&mut v.speed_history, v.speed, road.speed_window.max(1));
    }
    respawned
}

/// Mean of the newest `min(len, t_w)` samples of a speed history.
pub fn avg_speed<F: Scalar>(history: &VecDeque<F>, t_w: usize) -> Result<F, DomainError> {
    let n = history.len().min(t_w);
    if n == 0 {
        return Err(DomainError::EmptyHistory);
    }
    let sum: F = history.iter().rev().take(n).copied().sum();
    Ok(sum / F::from_usize(n).ok_or(DomainError::EmptyHistory)?)
}

/// Residual path `2 r_U - v_avg * horizon`; negative values mean the vehicle is
/// expected to leave the coverage within the horizon.
pub fn residual_path<F: Scalar>(r_u: F, v_avg: F, horizon: F) -> F {
    F::lit(2.0) * r_u - v_avg * horizon
}

/// Distance a vehicle can still travel before it leaves the coverage disc
/// centred at `center` or reaches the end of the road, whichever is first.
/// Negative when the vehicle is already past the disc boundary.
pub fn geometric_residual_path<F: Scalar>(
    center: &RoadPoint<F>,
    r_u: F,
    pos: &RoadPoint<F>,
    dir: Direction,
    road_length: F,
) -> F {
    let sign = dir.sign::<F>();
    let to_road_end = match dir {
        Direction::Forward => road_length - pos.x,
        Direction::Backward => pos.x,
    };
    let dy = pos.y - center.y;
    if dy.abs() > r_u {
        return -(dy.abs() - r_u);
    }
    let half_chord = (r_u * r_u - dy * dy).sqrt();
    let to_exit = half_chord + sign * (center.x - pos.x);
    if to_exit < F::zero() {
        to_exit
    } else {
        to_exit.min(to_road_end)
    }
}

/// Ids of all other vehicles within `range` (planar distance) of `vehicle`.
pub fn neighbors_of<F: Scalar>(vehicle: &Vehicle<F>, all: &[Vehicle<F>], range: F) -> BTreeSet<VehicleId> {
    all.iter()
        .filter(|o| o.id != vehicle.id && vehicle.pos.planar_distance(&o.pos) <= range)
        .map(|o| o.id)
        .collect()
}
