//! Ranked backup list of replacement cluster heads.
//!
//! Each remaining member is ranked on three criteria (speed gap to the
//! cluster, neighbor count, residual path). Ranks map linearly onto `[0, 1]`
//! (best 1, worst 0, ties share their mean rank) and are combined with the
//! AHP weights. The list is ordered by score, highest first.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::chselect::Criteria;
use crate::domain::{BackupScoring, PathOrientation, VehicleId};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackupWeights<F> {
    pub speed: F,
    pub neighbors: F,
    pub path: F,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackupEntry<F> {
    pub vehicle: VehicleId,
    pub score: F,
    pub speed_score: F,
    pub neighbor_score: F,
    pub path_score: F,
}

/// Backup entries ordered by (score desc, id asc).
#[derive(Debug, Clone, PartialEq)]
pub struct BackupList<F>(Vec<BackupEntry<F>>);

impl<F> Default for BackupList<F> {
    fn default() -> Self {
        BackupList(Vec::new())
    }
}

impl<F: Scalar> BackupList<F> {
    pub fn entries(&self) -> &[BackupEntry<F>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vehicles(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.0.iter().map(|e| e.vehicle)
    }

    pub fn top(&self) -> Option<VehicleId> {
        self.0.first().map(|e| e.vehicle)
    }

    /// Drops entries whose vehicle fails `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(VehicleId) -> bool) {
        self.0.retain(|e| keep(e.vehicle));
    }
}

fn rank_order<F: Scalar>(a: &BackupEntry<F>, b: &BackupEntry<F>) -> Ordering {
    b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal).then(a.vehicle.cmp(&b.vehicle))
}

/// Linear rank scores: `1 - rank / (n - 1)` where rank 0 is the best value.
/// Equal values receive the mean of the ranks they span.
pub fn rank_scores<F: Scalar>(values: &[F], larger_is_better: bool) -> Vec<F> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![F::one()];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let o = values[i].partial_cmp(&values[j]).unwrap_or(Ordering::Equal);
        if larger_is_better { o.reverse() } else { o }
    });
    let denom = F::from_usize(n - 1).unwrap_or_else(F::one);
    let mut scores = vec![F::zero(); n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // mean of ranks start..end-1
        let mean_rank = F::from_usize(start + end - 1).unwrap_or_else(F::zero) / F::lit(2.0);
        for &i in &order[start..end] {
            scores[i] = F::one() - mean_rank / denom;
        }
        start = end;
    }
    scores
}

/// Builds the backup list from the non-CH members' criteria.
pub fn build_backup_list<F: Scalar>(
    candidates: &[Criteria<F>],
    weights: &BackupWeights<F>,
    scoring: BackupScoring,
    orientation: PathOrientation,
) -> BackupList<F> {
    let mut entries: Vec<BackupEntry<F>> = match scoring {
        BackupScoring::Rank => {
            let gaps: Vec<F> = candidates.iter().map(|c| c.v_d).collect();
            let nbrs: Vec<F> = candidates.iter().map(|c| F::from_usize(c.neighbors).unwrap_or_else(F::zero)).collect();
            let paths: Vec<F> = candidates.iter().map(|c| c.residual).collect();
            let s = rank_scores(&gaps, false);
            let n = rank_scores(&nbrs, true);
            let p = rank_scores(&paths, orientation == PathOrientation::LargerIsBetter);
            candidates
                .iter()
                .enumerate()
                .map(|(i, c)| BackupEntry {
                    vehicle: c.vehicle,
                    score: weights.speed * s[i] + weights.neighbors * n[i] + weights.path * p[i],
                    speed_score: s[i],
                    neighbor_score: n[i],
                    path_score: p[i],
                })
                .collect()
        }
        BackupScoring::Raw => candidates
            .iter()
            .map(|c| {
                let nb = F::from_usize(c.neighbors).unwrap_or_else(F::zero);
                BackupEntry {
                    vehicle: c.vehicle,
                    score: weights.speed * c.v_d + weights.neighbors * nb + weights.path * c.residual,
                    speed_score: c.v_d,
                    neighbor_score: nb,
                    path_score: c.residual,
                }
            })
            .collect(),
    };
    entries.sort_by(rank_order);
    entries.dedup_by_key(|e| e.vehicle);
    BackupList(entries)
}

/// Takes the best entry whose vehicle is still in `present`. Stale entries
/// above it are discarded with it.
pub fn pop_replacement<F: Scalar>(
    list: &BackupList<F>,
    present: &BTreeSet<VehicleId>,
) -> (Option<VehicleId>, BackupList<F>) {
    match list.0.iter().position(|e| present.contains(&e.vehicle)) {
        Some(i) => (Some(list.0[i].vehicle), BackupList(list.0[i + 1..].to_vec())),
        None => (None, BackupList::default()),
    }
}
