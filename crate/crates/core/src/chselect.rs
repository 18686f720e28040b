//! Cluster-head selection: the mobility-aware proposed scheme and the two
//! benchmark selectors (uniform random, lowest mean relative speed).

use std::cmp::Ordering;

use rand::Rng;

use crate::domain::{Cam, RoadPoint, VehicleId};
use crate::error::DomainError;
use crate::mobility::{geometric_residual_path, residual_path};
use crate::scalar::{mean, Scalar};

/// Mean of the members' average speeds, `v_cl`.
pub fn cluster_avg_speed<F: Scalar>(avg_speeds: impl IntoIterator<Item = F>) -> Result<F, DomainError> {
    mean(avg_speeds).ok_or(DomainError::EmptyCluster)
}

/// How a candidate's residual path ξ is estimated from its CAM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualModel<F> {
    /// `2 r_U - v_avg * horizon`.
    Printed { r_u: F, horizon: F },
    /// Distance left to the coverage boundary (or road end) along the heading.
    Geometric { center: RoadPoint<F>, r_u: F, road_length: F },
}

impl<F: Scalar> ResidualModel<F> {
    pub fn residual(&self, cam: &Cam<F>) -> F {
        match *self {
            ResidualModel::Printed { r_u, horizon } => residual_path(r_u, cam.avg_speed, horizon),
            ResidualModel::Geometric { center, r_u, road_length } => {
                geometric_residual_path(&center, r_u, &cam.pos, cam.dir, road_length)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds<F> {
    /// Minimum residual path ε_d, meters.
    pub eps_d: F,
    /// Minimum neighbor count ε_n.
    pub eps_n: usize,
}

/// Per-candidate selection criteria.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criteria<F> {
    pub vehicle: VehicleId,
    /// `|v_avg - v_cl|`.
    pub v_d: F,
    pub residual: F,
    pub neighbors: usize,
}

impl<F: Scalar> Criteria<F> {
    pub fn passes(&self, t: &Thresholds<F>) -> bool {
        self.residual >= t.eps_d && self.neighbors >= t.eps_n
    }
}

fn by_speed_gap<F: Scalar>(a: &Criteria<F>, b: &Criteria<F>) -> Ordering {
    a.v_d.partial_cmp(&b.v_d).unwrap_or(Ordering::Equal).then(a.vehicle.cmp(&b.vehicle))
}

/// Evaluates every CAM against `v_cl`, ordered by increasing speed gap then id.
pub fn criteria<F: Scalar>(cams: &[Cam<F>], v_cl: F, residual: &ResidualModel<F>) -> Vec<Criteria<F>> {
    let mut out: Vec<Criteria<F>> = cams
        .iter()
        .map(|c| Criteria {
            vehicle: c.vehicle_id,
            v_d: (c.avg_speed - v_cl).abs(),
            residual: residual.residual(c),
            neighbors: c.neighbor_count(),
        })
        .collect();
    out.sort_by(by_speed_gap);
    out
}

/// Outcome of a proposed-scheme CH selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ChDecision<F> {
    pub chosen: Option<VehicleId>,
    /// Candidates in the order they were examined, up to and including the chosen one.
    pub examined: Vec<Criteria<F>>,
    /// No candidate met both thresholds; the smallest speed gap was taken instead.
    pub degraded: bool,
}

/// Walks candidates by increasing speed gap and picks the first one whose
/// residual path and neighbor count both clear their thresholds. If none
/// qualifies, falls back to the smallest speed gap and flags the decision as
/// degraded.
pub fn select_ch<F: Scalar>(
    cams: &[Cam<F>],
    v_cl: F,
    residual: &ResidualModel<F>,
    thresholds: &Thresholds<F>,
) -> ChDecision<F> {
    let ordered = criteria(cams, v_cl, residual);
    let mut examined = Vec::with_capacity(ordered.len());
    for c in &ordered {
        examined.push(*c);
        if c.passes(thresholds) {
            return ChDecision { chosen: Some(c.vehicle), examined, degraded: false };
        }
    }
    ChDecision { chosen: ordered.first().map(|c| c.vehicle), examined, degraded: !ordered.is_empty() }
}

/// Uniformly random member. `members` is expected in a deterministic order.
pub fn select_ch_random<R: Rng + ?Sized>(members: &[VehicleId], rng: &mut R) -> Result<VehicleId, DomainError> {
    if members.is_empty() {
        return Err(DomainError::EmptyCluster);
    }
    Ok(members[rng.random_range(0..members.len())])
}

/// Member with the lowest mean relative speed to its co-members; ties go to
/// the lowest id. Relative speed compares signed average velocities, so
/// oncoming vehicles close at the sum of their speeds.
pub fn select_ch_vmasc<F: Scalar>(cams: &[Cam<F>]) -> Result<VehicleId, DomainError> {
    let velocity = |c: &Cam<F>| c.dir.sign::<F>() * c.avg_speed;
    let mut best: Option<(F, VehicleId)> = None;
    for c in cams {
        let others = cams.iter().filter(|o| o.vehicle_id != c.vehicle_id);
        let score = mean(others.map(|o| (velocity(c) - velocity(o)).abs())).unwrap_or_else(F::zero);
        best = match best {
            Some((s, id)) if s < score || (s == score && id < c.vehicle_id) => Some((s, id)),
            _ => Some((score, c.vehicle_id)),
        };
    }
    best.map(|(_, id)| id).ok_or(DomainError::EmptyCluster)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Direction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    pub(crate) fn cam(id: u32, avg: f64, nbrs: usize) -> Cam<f64> {
        Cam {
            vehicle_id: VehicleId(id),
            cluster_id: None,
            is_ch: false,
            pos: RoadPoint::new(0.0, -2.0),
            dir: Direction::Forward,
            speed: avg,
            avg_speed: avg,
            neighbors: (100..100 + nbrs as u32).map(VehicleId).collect::<BTreeSet<_>>(),
        }
    }

    const PRINTED: ResidualModel<f64> = ResidualModel::Printed { r_u: 500.0, horizon: 70.0 };
    const LOOSE: Thresholds<f64> = Thresholds { eps_d: -1e9, eps_n: 0 };

    #[test]
    fn cluster_average_examples() {
        assert_eq!(cluster_avg_speed([10.0, 12.0, 14.0]).unwrap(), 12.0);
        assert_eq!(cluster_avg_speed([7.5]).unwrap(), 7.5);
        assert_eq!(cluster_avg_speed(Vec::<f64>::new()), Err(DomainError::EmptyCluster));
    }

    #[test]
    fn picks_smallest_speed_gap_when_all_pass() {
        let cams = [cam(0, 12.0, 2), cam(1, 13.0, 2), cam(2, 20.0, 2)];
        let d = select_ch(&cams, 15.0, &PRINTED, &LOOSE);
        assert_eq!(d.chosen, Some(VehicleId(1)));
        assert!(!d.degraded);
        assert_eq!(d.examined.len(), 1);
    }

    #[test]
    fn skips_candidate_failing_residual_threshold() {
        // ξ(13) = 1000 - 910 = 90; ξ(12) = 160. With ε_d = 100 only the second qualifies.
        let cams = [cam(0, 12.0, 2), cam(1, 13.0, 2), cam(2, 20.0, 2)];
        let t = Thresholds { eps_d: 100.0, eps_n: 1 };
        let d = select_ch(&cams, 15.0, &PRINTED, &t);
        assert_eq!(d.chosen, Some(VehicleId(0)));
        assert_eq!(d.examined.iter().map(|c| c.vehicle.0).collect::<Vec<_>>(), vec![1, 0]);
    }

    #[test]
    fn lonely_singleton_is_degraded() {
        let d = select_ch(&[cam(4, 5.0, 0)], 5.0, &PRINTED, &Thresholds { eps_d: 100.0, eps_n: 1 });
        assert_eq!(d.chosen, Some(VehicleId(4)));
        assert!(d.degraded);
        let d = select_ch::<f64>(&[], 5.0, &PRINTED, &LOOSE);
        assert_eq!(d.chosen, None);
        assert!(!d.degraded);
    }

    #[test]
    fn speed_gap_ties_break_by_id() {
        let cams = [cam(9, 14.0, 1), cam(3, 16.0, 1)];
        assert_eq!(select_ch(&cams, 15.0, &PRINTED, &LOOSE).chosen, Some(VehicleId(3)));
    }

    #[test]
    fn random_selection_is_reproducible() {
        let m = [VehicleId(2), VehicleId(5), VehicleId(7)];
        let a = select_ch_random(&m, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = select_ch_random(&m, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(select_ch_random(&m[..1], &mut ChaCha8Rng::seed_from_u64(0)).unwrap(), VehicleId(2));
        assert!(select_ch_random(&[], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn vmasc_examples() {
        let cams = [cam(0, 10.0, 0), cam(1, 11.0, 0), cam(2, 20.0, 0)];
        assert_eq!(select_ch_vmasc(&cams).unwrap(), VehicleId(1));
        let same = [cam(5, 12.0, 0), cam(2, 12.0, 0), cam(8, 12.0, 0)];
        assert_eq!(select_ch_vmasc(&same).unwrap(), VehicleId(2));
        assert_eq!(select_ch_vmasc(&[cam(6, 1.0, 0)]).unwrap(), VehicleId(6));
        assert!(select_ch_vmasc::<f64>(&[]).is_err());
    }

    #[test]
    fn vmasc_counts_oncoming_traffic_as_fast() {
        let mut cams = vec![cam(0, 12.0, 0), cam(1, 12.0, 0), cam(2, 12.0, 0)];
        cams[0].dir = Direction::Backward;
        assert_eq!(select_ch_vmasc(&cams).unwrap(), VehicleId(1));
    }
}
