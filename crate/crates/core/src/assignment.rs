//! UAV-vehicle association: each vehicle joins the UAV with the strongest
//! air-to-ground SNR.

use std::collections::BTreeMap;

use crate::channel::{a2g_distance, a2g_gain, a2g_snr};
use crate::domain::{UavId, UavNode, Vehicle, VehicleId};
use crate::error::DomainError;
use crate::scalar::Scalar;

/// Result of one association round: vehicle → (UAV, SNR) plus per-UAV counts `N_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<F> {
    links: BTreeMap<VehicleId, (UavId, F)>,
    counts: BTreeMap<UavId, usize>,
}

impl<F: Scalar> Assignment<F> {
    pub fn uav_of(&self, v: VehicleId) -> Option<UavId> {
        self.links.get(&v).map(|(u, _)| *u)
    }

    pub fn snr_of(&self, v: VehicleId) -> Option<F> {
        self.links.get(&v).map(|(_, s)| *s)
    }

    /// `N_j`; zero for UAVs that received nobody.
    pub fn count(&self, u: UavId) -> usize {
        self.counts.get(&u).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn links(&self) -> impl Iterator<Item = (VehicleId, UavId, F)> + '_ {
        self.links.iter().map(|(v, (u, s))| (*v, *u, *s))
    }

    pub fn members_of(&self, u: UavId) -> impl Iterator<Item = VehicleId> + '_ {
        self.links.iter().filter(move |(_, (uu, _))| *uu == u).map(|(v, _)| *v)
    }
}

/// Column of the row maximum; ties go to the smallest UAV id.
pub fn argmax_uav<F: Scalar>(row: &[(UavId, F)]) -> Option<(UavId, F)> {
    row.iter().copied().fold(None, |best, (u, s)| match best {
        None => Some((u, s)),
        Some((bu, bs)) => {
            if s > bs || (s == bs && u < bu) {
                Some((u, s))
            } else {
                Some((bu, bs))
            }
        }
    })
}

/// Assigns every vehicle from a precomputed SNR matrix (`rows[i]` holds
/// vehicle `ids[i]`'s SNR toward each UAV).
pub fn assign_from_matrix<F: Scalar>(
    ids: &[VehicleId],
    uavs: &[UavId],
    rows: &[Vec<F>],
) -> Result<Assignment<F>, DomainError> {
    if uavs.is_empty() {
        return Err(DomainError::NoUavs);
    }
    let mut links = BTreeMap::new();
    let mut counts: BTreeMap<UavId, usize> = uavs.iter().map(|u| (*u, 0)).collect();
    for (id, row) in ids.iter().zip(rows) {
        let pairs: Vec<(UavId, F)> = uavs.iter().copied().zip(row.iter().copied()).collect();
        let (u, s) = argmax_uav(&pairs).ok_or(DomainError::NoUavs)?;
        links.insert(*id, (u, s));
        *counts.entry(u).or_default() += 1;
    }
    Ok(Assignment { links, counts })
}

/// Associates every vehicle with the UAV of maximum A2G SNR. Coverage is not
/// consulted: a vehicle outside every disc still joins its best UAV.
pub fn assign<F: Scalar>(
    vehicles: &[Vehicle<F>],
    uavs: &[UavNode<F>],
    g0: F,
    noise: F,
) -> Result<Assignment<F>, DomainError> {
    if uavs.is_empty() {
        return Err(DomainError::NoUavs);
    }
    let ids: Vec<VehicleId> = vehicles.iter().map(|v| v.id).collect();
    let uav_ids: Vec<UavId> = uavs.iter().map(|u| u.id).collect();
    let rows = vehicles
        .iter()
        .map(|v| {
            uavs.iter()
                .map(|u| {
                    let gain = a2g_gain(a2g_distance(&u.pos, &v.pos), g0)?;
                    a2g_snr(true, u.tx_power, gain, noise)
                })
                .collect::<Result<Vec<F>, DomainError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    assign_from_matrix(&ids, &uav_ids, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AirPoint, Direction, RoadPoint};

    fn uav(id: u32, x: f64) -> UavNode<f64> {
        UavNode { id: UavId(id), pos: AirPoint::new(x, 0.0, 100.0), r_u: 500.0, tx_power: 1.0, v_max: 20.0 }
    }

    fn car(id: u32, x: f64) -> Vehicle<f64> {
        Vehicle::new(VehicleId(id), RoadPoint::new(x, -2.0), Direction::Forward, 12.0, 1e-10)
    }

    #[test]
    fn matrix_example_with_tie() {
        let ids = [VehicleId(1), VehicleId(2), VehicleId(3)];
        let uavs = [UavId(1), UavId(2)];
        let rows = vec![vec![5.0, 1.0], vec![2.0, 3.0], vec![4.0, 4.0]];
        let a = assign_from_matrix(&ids, &uavs, &rows).unwrap();
        assert_eq!(a.uav_of(VehicleId(1)), Some(UavId(1)));
        assert_eq!(a.uav_of(VehicleId(2)), Some(UavId(2)));
        assert_eq!(a.uav_of(VehicleId(3)), Some(UavId(1)));
        assert_eq!(a.count(UavId(1)), 2);
        assert_eq!(a.total(), 3);
    }

    #[test]
    fn single_uav_takes_everyone() {
        let vs: Vec<_> = (0..5).map(|i| car(i, 200.0 * i as f64)).collect();
        let a = assign(&vs, &[uav(0, 500.0)], 1e-5, 3.98e-15).unwrap();
        assert_eq!(a.count(UavId(0)), 5);
    }

    #[test]
    fn nearest_uav_dominates_even_out_of_coverage() {
        let vs = vec![car(0, 10.0), car(1, 990.0), car(2, 5000.0)];
        let a = assign(&vs, &[uav(0, 0.0), uav(1, 1000.0)], 1e-5, 3.98e-15).unwrap();
        assert_eq!(a.uav_of(VehicleId(0)), Some(UavId(0)));
        assert_eq!(a.uav_of(VehicleId(1)), Some(UavId(1)));
        assert_eq!(a.uav_of(VehicleId(2)), Some(UavId(1)));
    }

    #[test]
    fn empty_uav_set_is_an_error() {
        assert_eq!(assign(&[car(0, 0.0)], &[], 1e-5, 1e-15).unwrap_err(), DomainError::NoUavs);
    }
}
