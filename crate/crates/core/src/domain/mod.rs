//! Value types shared across the simulator: identities, positions, vehicles,
//! UAVs, cooperative awareness messages and clusters.

mod config;

pub use config::{
    BackupScoring, ConfigError, PathOrientation, ResidualPathMode, Scheme, SimConfig, SnrMode, Speed,
    Power, UavPolicy, ValidConfig, CONFIG_KEYS,
};

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::backup::BackupList;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VehicleId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UavId(pub u32);

/// A cluster is owned by exactly one UAV and shares its index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClusterId(pub u32);

impl From<UavId> for ClusterId {
    fn from(u: UavId) -> Self {
        ClusterId(u.0)
    }
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for UavId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Ground position: `x` along the road, `y` the lateral lane offset.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoadPoint<F> {
    pub x: F,
    pub y: F,
}

impl<F: Scalar> RoadPoint<F> {
    pub fn new(x: F, y: F) -> Self {
        Self { x, y }
    }

    pub fn planar_distance(&self, other: &RoadPoint<F>) -> F {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// UAV position; `h` is the common hover altitude.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AirPoint<F> {
    pub x: F,
    pub y: F,
    pub h: F,
}

impl<F: Scalar> AirPoint<F> {
    pub fn new(x: F, y: F, h: F) -> Self {
        Self { x, y, h }
    }

    /// Horizontal projection onto the road plane.
    pub fn ground(&self) -> RoadPoint<F> {
        RoadPoint { x: self.x, y: self.y }
    }
}

/// Travel direction along the road axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign<F: Scalar>(self) -> F {
        match self {
            Direction::Forward => F::one(),
            Direction::Backward => -F::one(),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "+",
            Direction::Backward => "-",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle<F> {
    pub id: VehicleId,
    pub pos: RoadPoint<F>,
    pub dir: Direction,
    /// Current speed in m/s.
    pub speed: F,
    /// Most recent speed samples, oldest first, at most `T_w` long.
    pub speed_history: VecDeque<F>,
    pub tx_power: F,
    /// Bumped every time the vehicle leaves the road and re-enters at the far end.
    pub epoch: u32,
}

impl<F: Scalar> Vehicle<F> {
    pub fn new(id: VehicleId, pos: RoadPoint<F>, dir: Direction, speed: F, tx_power: F) -> Self {
        let mut speed_history = VecDeque::new();
        speed_history.push_back(speed);
        Self { id, pos, dir, speed, speed_history, tx_power, epoch: 0 }
    }

    /// Signed velocity along the road axis.
    pub fn velocity(&self) -> F {
        self.dir.sign::<F>() * self.speed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UavNode<F> {
    pub id: UavId,
    pub pos: AirPoint<F>,
    /// Coverage radius in the road plane, meters.
    pub r_u: F,
    /// Transmit power, watts.
    pub tx_power: F,
    pub v_max: F,
}

impl<F: Scalar> UavNode<F> {
    /// Whether a ground point lies inside this UAV's coverage disc.
    pub fn covers(&self, p: &RoadPoint<F>) -> bool {
        self.pos.ground().planar_distance(p) <= self.r_u
    }
}

/// Cooperative awareness message, as collected by a UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct Cam<F> {
    pub vehicle_id: VehicleId,
    pub cluster_id: Option<ClusterId>,
    pub is_ch: bool,
    pub pos: RoadPoint<F>,
    pub dir: Direction,
    pub speed: F,
    pub avg_speed: F,
    /// Vehicles within neighbor range of the sender, sender excluded.
    pub neighbors: BTreeSet<VehicleId>,
}

impl<F: Scalar> Cam<F> {
    pub fn neighbor_count(&self) -> usize {
        self.neighbors.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<F> {
    pub uav: UavId,
    pub members: BTreeSet<VehicleId>,
    pub ch: Option<VehicleId>,
    pub backup: BackupList<F>,
    /// Mean of the members' average speeds, m/s.
    pub avg_speed: F,
}

impl<F: Scalar> Cluster<F> {
    pub fn new(uav: UavId) -> Self {
        Self { uav, members: BTreeSet::new(), ch: None, backup: BackupList::default(), avg_speed: F::zero() }
    }

    pub fn id(&self) -> ClusterId {
        self.uav.into()
    }

    /// Checks the CH-membership and backup-list invariants.
    pub fn is_consistent(&self) -> bool {
        if let Some(ch) = self.ch {
            if !self.members.contains(&ch) {
                return false;
            }
        }
        let mut seen = BTreeSet::new();
        self.backup.entries().iter().all(|e| {
            Some(e.vehicle) != self.ch && self.members.contains(&e.vehicle) && seen.insert(e.vehicle)
        })
    }
}
