//! Time-stepped orchestration of one simulation run.
//!
//! Per slot, in order: vehicles move (respawns are logged), UAVs reposition
//! if a follow policy is active, then whichever schedules fire:
//!
//! * clustering round (every `cluster_interval`, before `duration`):
//!   association, CAM collection, CH selection, backup lists;
//! * otherwise CAM batch (every `cam_interval`): UAVs collect CAMs from
//!   members inside their coverage, refresh `v_cl` and backup lists;
//! * otherwise beacon check (every `beacon_interval`): a CH out of coverage
//!   or respawned is departed and replaced;
//! * SNR sample between each seated CH and its co-members on every CAM batch.

pub mod trace;

pub use trace::{DepartureReason, EventKind, Payload, SimEvent, Trace};

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assignment::{assign, Assignment};
use crate::backup::{build_backup_list, pop_replacement, BackupWeights};
use crate::channel::{v2v_link, V2vParams};
use crate::chselect::{
    cluster_avg_speed, criteria, select_ch, select_ch_random, select_ch_vmasc, ResidualModel, Thresholds,
};
use crate::domain::{
    AirPoint, Cam, Cluster, ClusterId, ResidualPathMode, Scheme, SnrMode, UavId, UavNode, UavPolicy, ValidConfig,
    Vehicle, VehicleId,
};
use crate::experiment::StreamSeeds;
use crate::mobility::{self, avg_speed, neighbors_of, RoadModel};
use crate::scalar::{mean, Scalar};

/// Complete mutable state of a run.
#[derive(Debug, Clone)]
pub struct SimState<F> {
    pub slot: usize,
    pub vehicles: Vec<Vehicle<F>>,
    pub uavs: Vec<UavNode<F>>,
    pub clusters: Vec<Cluster<F>>,
    pub assignment: Option<Assignment<F>>,
    /// Latest CAMs each UAV received from its members.
    pub received: Vec<BTreeMap<VehicleId, Cam<F>>>,
    /// CHs that departed since the last clustering round.
    pub departed: BTreeSet<VehicleId>,
    seated_epoch: Vec<Option<u32>>,
    mobility_rng: ChaCha8Rng,
    fading_rng: ChaCha8Rng,
    scheme_rng: ChaCha8Rng,
}

impl<F: Scalar> SimState<F> {
    fn vehicle(&self, id: VehicleId) -> &Vehicle<F> {
        self.vehicles.iter().find(|v| v.id == id).expect("vehicle ids are stable")
    }

    /// Clusters are disjoint, match the association, and together with the
    /// departed CHs cover every assigned vehicle.
    pub fn check_invariants(&self) -> Result<(), String> {
        let Some(assignment) = &self.assignment else {
            return Ok(());
        };
        let mut seen = BTreeSet::new();
        for c in &self.clusters {
            if !c.is_consistent() {
                return Err(format!("cluster {} violates CH/backup membership", c.id()));
            }
            for m in &c.members {
                if !seen.insert(*m) {
                    return Err(format!("vehicle {m} is in two clusters"));
                }
                if assignment.uav_of(*m) != Some(c.uav) {
                    return Err(format!("vehicle {m} sits in cluster {} but is assigned elsewhere", c.id()));
                }
            }
        }
        for d in &self.departed {
            if !seen.insert(*d) {
                return Err(format!("departed vehicle {d} is still a member"));
            }
        }
        if seen.len() != assignment.total() {
            return Err(format!("{} vehicles accounted for, {} assigned", seen.len(), assignment.total()));
        }
        Ok(())
    }
}

/// Hover points equally spaced along the road centreline.
pub fn place_uavs<F: Scalar>(cfg: &ValidConfig<F>) -> Vec<UavNode<F>> {
    let j = F::from_usize(cfg.num_uavs).unwrap_or_else(F::one);
    (0..cfg.num_uavs)
        .map(|i| {
            let x = (F::from_usize(i).unwrap_or_else(F::zero) + F::lit(0.5)) * cfg.road_length / j;
            UavNode {
                id: UavId(i as u32),
                pos: AirPoint::new(x, F::zero(), cfg.uav_altitude),
                r_u: cfg.coverage_radius,
                tx_power: cfg.uav_tx,
                v_max: cfg.uav_v_max,
            }
        })
        .collect()
}

/// Returns the CH and the reason if its beacon cannot reach the UAV: it is
/// outside the coverage radius, or it left the road since it was seated.
pub fn detect_departure<F: Scalar>(
    cluster: &Cluster<F>,
    uav: &UavNode<F>,
    vehicles: &[Vehicle<F>],
    seated_epoch: Option<u32>,
) -> Option<(VehicleId, DepartureReason)> {
    let ch = cluster.ch?;
    let v = vehicles.iter().find(|v| v.id == ch)?;
    if seated_epoch.is_some_and(|e| e != v.epoch) {
        Some((ch, DepartureReason::Respawn))
    } else if !uav.covers(&v.pos) {
        Some((ch, DepartureReason::Coverage))
    } else {
        None
    }
}

/// Result of replacing a departed CH.
#[derive(Debug, Clone, PartialEq)]
pub struct DepartureOutcome {
    /// `None` when no connected member is left.
    pub kind: Option<EventKind>,
    pub new_ch: Option<VehicleId>,
    pub degraded: bool,
    pub skipped: usize,
    /// Connected members the replacement was chosen from.
    pub remaining: usize,
}

/// Selection rules a cluster runs under.
#[derive(Debug, Clone, Copy)]
pub struct SelectionRules<F> {
    pub scheme: Scheme,
    pub use_backup: bool,
    pub residual: ResidualModel<F>,
    pub thresholds: Thresholds<F>,
}

/// Chooses a CH among `pool` with the scheme's own selector.
fn full_selection<F: Scalar>(
    pool: &[Cam<F>],
    rules: &SelectionRules<F>,
    rng: &mut ChaCha8Rng,
) -> Option<(VehicleId, bool)> {
    if pool.is_empty() {
        return None;
    }
    match rules.scheme {
        Scheme::Proposed => {
            let v_cl = cluster_avg_speed(pool.iter().map(|c| c.avg_speed)).ok()?;
            let d = select_ch(pool, v_cl, &rules.residual, &rules.thresholds);
            d.chosen.map(|c| (c, d.degraded))
        }
        Scheme::Random => {
            let ids: Vec<VehicleId> = pool.iter().map(|c| c.vehicle_id).collect();
            select_ch_random(&ids, rng).ok().map(|c| (c, false))
        }
        Scheme::Vmasc => select_ch_vmasc(pool).ok().map(|c| (c, false)),
    }
}

/// Removes the departed CH from the cluster and seats a replacement chosen
/// from the members whose CAMs the UAV still receives.
pub fn handle_departure<F: Scalar>(
    cluster: &mut Cluster<F>,
    departed: VehicleId,
    received: &BTreeMap<VehicleId, Cam<F>>,
    rules: &SelectionRules<F>,
    rng: &mut ChaCha8Rng,
) -> DepartureOutcome {
    cluster.members.remove(&departed);
    cluster.ch = None;
    let pool: Vec<Cam<F>> =
        received.values().filter(|c| c.vehicle_id != departed && cluster.members.contains(&c.vehicle_id)).cloned().collect();
    let remaining = pool.len();
    let mut outcome = DepartureOutcome { kind: None, new_ch: None, degraded: false, skipped: 0, remaining };
    if pool.is_empty() {
        cluster.backup = Default::default();
        return outcome;
    }
    if rules.use_backup {
        let present: BTreeSet<VehicleId> = pool.iter().map(|c| c.vehicle_id).collect();
        let before = cluster.backup.len();
        let (top, rest) = pop_replacement(&cluster.backup, &present);
        if let Some(ch) = top {
            outcome.skipped = before - rest.len() - 1;
            outcome.kind = Some(EventKind::ChReplacedFromBackup);
            outcome.new_ch = Some(ch);
            cluster.backup = rest;
        }
    }
    if outcome.new_ch.is_none() {
        if let Some((ch, degraded)) = full_selection(&pool, rules, rng) {
            outcome.kind = Some(EventKind::ChReselectedFull);
            outcome.new_ch = Some(ch);
            outcome.degraded = degraded;
        }
    }
    cluster.ch = outcome.new_ch;
    let members = &cluster.members;
    let ch = cluster.ch;
    cluster.backup.retain(|v| Some(v) != ch && members.contains(&v));
    outcome
}

/// One simulation run.
pub struct Engine<F: Scalar> {
    cfg: ValidConfig<F>,
    road: RoadModel<F>,
    scheme: Scheme,
    run: usize,
    streams: StreamSeeds,
    state: SimState<F>,
    events: Vec<SimEvent<F>>,
}

impl<F: Scalar> Engine<F> {
    /// Fresh run with vehicles spawned from the mobility stream.
    pub fn new(cfg: ValidConfig<F>, scheme: Scheme, run: usize, streams: StreamSeeds) -> Self {
        let road = RoadModel::from_config(&cfg);
        let mut mobility_rng = ChaCha8Rng::seed_from_u64(streams.mobility);
        let vehicles = road.spawn(cfg.num_vehicles, cfg.vehicle_tx, &mut mobility_rng);
        Self::build(cfg, road, scheme, run, streams, vehicles, mobility_rng)
    }

    /// Run over a hand-placed vehicle population. Ids must be unique.
    pub fn with_vehicles(cfg: ValidConfig<F>, scheme: Scheme, streams: StreamSeeds, vehicles: Vec<Vehicle<F>>) -> Self {
        let road = RoadModel::from_config(&cfg);
        let mobility_rng = ChaCha8Rng::seed_from_u64(streams.mobility);
        Self::build(cfg, road, scheme, 0, streams, vehicles, mobility_rng)
    }

    fn build(
        cfg: ValidConfig<F>,
        road: RoadModel<F>,
        scheme: Scheme,
        run: usize,
        streams: StreamSeeds,
        vehicles: Vec<Vehicle<F>>,
        mobility_rng: ChaCha8Rng,
    ) -> Self {
        let uavs = place_uavs(&cfg);
        let clusters = uavs.iter().map(|u| Cluster::new(u.id)).collect();
        let state = SimState {
            slot: 0,
            vehicles,
            uavs,
            clusters,
            assignment: None,
            received: vec![BTreeMap::new(); cfg.num_uavs],
            departed: BTreeSet::new(),
            seated_epoch: vec![None; cfg.num_uavs],
            mobility_rng,
            fading_rng: ChaCha8Rng::seed_from_u64(streams.fading),
            scheme_rng: ChaCha8Rng::seed_from_u64(streams.scheme),
        };
        let mut engine = Self { cfg, road, scheme, run, streams, state, events: Vec::new() };
        engine.clustering_round(F::zero());
        engine.sample_snr(F::zero());
        engine
    }

    pub fn state(&self) -> &SimState<F> {
        &self.state
    }

    pub fn events(&self) -> &[SimEvent<F>] {
        &self.events
    }

    pub fn is_finished(&self) -> bool {
        self.state.slot >= self.cfg.n_slots
    }

    fn rules(&self, cluster: usize) -> SelectionRules<F> {
        let residual = match self.cfg.residual_path {
            ResidualPathMode::Printed => {
                ResidualModel::Printed { r_u: self.cfg.coverage_radius, horizon: self.cfg.residual_horizon }
            }
            ResidualPathMode::Geometric => ResidualModel::Geometric {
                center: self.state.uavs[cluster].pos.ground(),
                r_u: self.state.uavs[cluster].r_u,
                road_length: self.cfg.road_length,
            },
        };
        SelectionRules {
            scheme: self.scheme,
            use_backup: self.scheme == Scheme::Proposed || self.cfg.benchmark_backup,
            residual,
            thresholds: Thresholds { eps_d: self.cfg.eps_d, eps_n: self.cfg.eps_n },
        }
    }

    fn weights(&self) -> BackupWeights<F> {
        BackupWeights { speed: self.cfg.w_s, neighbors: self.cfg.w_n, path: self.cfg.w_p }
    }

    fn time_of(&self, slot: usize) -> F {
        self.cfg.slot * F::from_usize(slot).unwrap_or_else(F::zero)
    }

    /// Advances one slot and processes every schedule that fires at its end.
    pub fn advance(&mut self) {
        if self.is_finished() {
            return;
        }
        self.state.slot += 1;
        let k = self.state.slot;
        let t = self.time_of(k);

        let respawned = mobility::step(&mut self.state.vehicles, &self.road, self.cfg.slot, &mut self.state.mobility_rng);
        for id in respawned {
            let speed = self.state.vehicle(id).speed;
            self.events.push(SimEvent::new(t, EventKind::VehicleRespawn).vehicle(id).payload(Payload::Respawn { speed }));
        }
        if self.cfg.uav_policy == UavPolicy::FollowCentroid {
            self.move_uavs();
        }

        let cam = k.is_multiple_of(self.cfg.cam_every);
        if k.is_multiple_of(self.cfg.cluster_every) && k < self.cfg.n_slots {
            self.clustering_round(t);
            self.sample_snr(t);
            return;
        }
        if cam {
            self.collect_cams();
            self.refresh_clusters();
        }
        if k.is_multiple_of(self.cfg.beacon_every) {
            self.beacon_check(t);
        }
        if cam {
            self.sample_snr(t);
        }
    }

    pub fn run_to_end(mut self) -> Trace<F> {
        while !self.is_finished() {
            self.advance();
        }
        self.into_trace()
    }

    pub fn into_trace(self) -> Trace<F> {
        Trace {
            scheme: self.scheme,
            run: self.run,
            seed: self.cfg.seed,
            streams: self.streams,
            digest: self.cfg.family_digest(),
            clusters: self.cfg.num_uavs,
            duration: self.cfg.duration,
            sample_interval: self.cfg.cam_interval,
            events: self.events,
        }
    }

    fn move_uavs(&mut self) {
        let step = self.cfg.uav_v_max * self.cfg.slot;
        let sep = self.cfg.uav_min_separation;
        let n = self.state.uavs.len();
        for j in 0..n {
            let xs: Vec<F> = self.state.clusters[j].members.iter().map(|m| self.state.vehicle(*m).pos.x).collect();
            let Some(target) = mean(xs) else { continue };
            let x = self.state.uavs[j].pos.x;
            let mut nx = x + (target - x).max(-step).min(step);
            if j > 0 {
                nx = nx.max(self.state.uavs[j - 1].pos.x + sep);
            }
            if j + 1 < n {
                nx = nx.min(self.state.uavs[j + 1].pos.x - sep);
            }
            self.state.uavs[j].pos.x = nx.max(F::zero()).min(self.cfg.road_length);
        }
    }

    /// Every vehicle emits a CAM; each UAV keeps those of its members it can hear.
    fn collect_cams(&mut self) {
        let st = &mut self.state;
        let cams: Vec<Cam<F>> = st
            .vehicles
            .iter()
            .map(|v| {
                let cluster_id = st.assignment.as_ref().and_then(|a| a.uav_of(v.id)).map(ClusterId::from);
                let is_ch = cluster_id.is_some_and(|c| st.clusters[c.0 as usize].ch == Some(v.id));
                Cam {
                    vehicle_id: v.id,
                    cluster_id,
                    is_ch,
                    pos: v.pos,
                    dir: v.dir,
                    speed: v.speed,
                    avg_speed: avg_speed(&v.speed_history, self.cfg.speed_window).unwrap_or(v.speed),
                    neighbors: neighbors_of(v, &st.vehicles, self.cfg.neighbor_range),
                }
            })
            .collect();
        for (j, cluster) in st.clusters.iter().enumerate() {
            let uav = &st.uavs[j];
            st.received[j] = cams
                .iter()
                .filter(|c| cluster.members.contains(&c.vehicle_id) && uav.covers(&c.pos))
                .map(|c| (c.vehicle_id, c.clone()))
                .collect();
        }
    }

    /// Recomputes `v_cl` and, where used, the backup list from the latest CAMs.
    fn refresh_clusters(&mut self) {
        let weights = self.weights();
        for j in 0..self.state.clusters.len() {
            let rules = self.rules(j);
            let cams: Vec<Cam<F>> = self.state.received[j].values().cloned().collect();
            let Ok(v_cl) = cluster_avg_speed(cams.iter().map(|c| c.avg_speed)) else {
                self.state.clusters[j].backup = Default::default();
                continue;
            };
            let cluster = &mut self.state.clusters[j];
            cluster.avg_speed = v_cl;
            if rules.use_backup {
                let ch = cluster.ch;
                let rest: Vec<Cam<F>> = cams.into_iter().filter(|c| Some(c.vehicle_id) != ch).collect();
                let cand = criteria(&rest, v_cl, &rules.residual);
                cluster.backup =
                    build_backup_list(&cand, &weights, self.cfg.backup_scoring, self.cfg.path_orientation);
            }
        }
    }

    fn clustering_round(&mut self, t: F) {
        let assignment = assign(&self.state.vehicles, &self.state.uavs, self.cfg.ref_gain, self.cfg.noise)
            .expect("validated configs have at least one UAV");
        for c in &mut self.state.clusters {
            c.members = assignment.members_of(c.uav).collect();
            c.ch = None;
            c.backup = Default::default();
        }
        let sizes = self.state.clusters.iter().map(|c| c.members.len()).collect();
        self.state.assignment = Some(assignment);
        self.state.departed.clear();
        self.state.seated_epoch.iter_mut().for_each(|e| *e = None);
        self.events.push(SimEvent::new(t, EventKind::ClusteringRound).payload(Payload::Round { sizes }));

        self.collect_cams();
        for j in 0..self.state.clusters.len() {
            let rules = self.rules(j);
            let pool: Vec<Cam<F>> = self.state.received[j].values().cloned().collect();
            let Some((ch, degraded)) = full_selection(&pool, &rules, &mut self.state.scheme_rng) else {
                continue;
            };
            self.state.seated_epoch[j] = Some(self.state.vehicle(ch).epoch);
            let cluster = &mut self.state.clusters[j];
            cluster.ch = Some(ch);
            let cid = cluster.id();
            self.events.push(
                SimEvent::new(t, EventKind::ChSelected).cluster(cid).vehicle(ch).payload(Payload::Selection { degraded }),
            );
        }
        self.refresh_clusters();
    }

    fn beacon_check(&mut self, t: F) {
        for j in 0..self.state.clusters.len() {
            let Some(ch) = self.state.clusters[j].ch else { continue };
            let cid = self.state.clusters[j].id();
            let found = detect_departure(
                &self.state.clusters[j],
                &self.state.uavs[j],
                &self.state.vehicles,
                self.state.seated_epoch[j],
            );
            let Some((departed, reason)) = found else {
                self.events.push(SimEvent::new(t, EventKind::BeaconOk).cluster(cid).vehicle(ch));
                continue;
            };
            self.events.push(SimEvent::new(t, EventKind::BeaconMissed).cluster(cid).vehicle(departed));
            let rules = self.rules(j);
            let st = &mut self.state;
            let outcome = handle_departure(&mut st.clusters[j], departed, &st.received[j], &rules, &mut st.scheme_rng);
            st.received[j].remove(&departed);
            st.departed.insert(departed);
            self.events.push(
                SimEvent::new(t, EventKind::ChDeparted)
                    .cluster(cid)
                    .vehicle(departed)
                    .payload(Payload::Departure { reason, remaining: outcome.remaining }),
            );
            match (outcome.kind, outcome.new_ch) {
                (Some(kind), Some(new_ch)) => {
                    st.seated_epoch[j] = Some(st.vehicle(new_ch).epoch);
                    let payload = match kind {
                        EventKind::ChReplacedFromBackup => Payload::Replacement { skipped: outcome.skipped },
                        _ => Payload::Selection { degraded: outcome.degraded },
                    };
                    self.events.push(SimEvent::new(t, kind).cluster(cid).vehicle(new_ch).payload(payload));
                }
                _ => st.seated_epoch[j] = None,
            }
        }
    }

    fn sample_snr(&mut self, t: F) {
        let params = V2vParams {
            tx_power: self.cfg.vehicle_tx,
            noise: self.cfg.noise,
            path_loss: self.cfg.v2v_path_loss,
            exponent: self.cfg.path_loss_exponent,
            shadowing_db: self.cfg.shadowing_db,
            faded: self.cfg.snr_mode == SnrMode::Instantaneous,
        };
        let SimState { clusters, vehicles, received, fading_rng, .. } = &mut self.state;
        let position = |id: VehicleId| vehicles.iter().find(|v| v.id == id).map(|v| v.pos).expect("known vehicle");
        for (cluster, heard) in clusters.iter().zip(received.iter()) {
            let snr = cluster.ch.and_then(|ch| {
                let head = position(ch);
                let samples: Vec<F> = cluster
                    .members
                    .iter()
                    .filter(|m| **m != ch)
                    .map(|m| v2v_link(&head, &position(*m), &params, fading_rng).snr)
                    .collect();
                mean(samples)
            });
            let mut ev = SimEvent::new(t, EventKind::CamBatch)
                .cluster(cluster.id())
                .payload(Payload::Cams { received: heard.len(), snr });
            if let Some(ch) = cluster.ch {
                ev = ev.vehicle(ch);
            }
            self.events.push(ev);
        }
    }
}

/// Runs one configuration to completion.
pub fn run<F: Scalar>(cfg: &ValidConfig<F>, scheme: Scheme, run: usize, streams: StreamSeeds) -> Trace<F> {
    Engine::new(cfg.clone(), scheme, run, streams).run_to_end()
}
