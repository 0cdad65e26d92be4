//! Two-stage mother/daughter assignment between consecutive frames.
//!
//! Stage 1 walks the mothers from least to most active and links each to its
//! best remaining candidate, provided the candidate has not shrunk. The
//! mothers left over (mostly dividing cells) are matched to the leftover
//! daughters by a linear assignment on a cost matrix whose rows are stacked
//! twice, so each mother can take up to two daughters.

mod lap;

use std::cmp::Ordering;

use ndarray::{concatenate, Array2, Axis};

pub use lap::{brute_force_lap, lap_solve, CostMatrix, BRUTE_FORCE_LIMIT};

use crate::error::Result;
use crate::linking::{candidates_for, gaussian_value, sigma_of, LinkConfig};
use crate::model::CellInstance;
use crate::scalar::Real;

/// A mother with the one or two daughters it was matched to in stage 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisionLink {
    pub mother: u32,
    /// Ascending; length 1 or 2.
    pub daughters: Vec<u32>,
}

/// Links found between frame `t` (mothers) and `t + 1` (daughters).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FramePairAssignment {
    /// `(mother, daughter)`, ascending by mother.
    pub growth_links: Vec<(u32, u32)>,
    /// Ascending by mother.
    pub division_links: Vec<DivisionLink>,
    pub appeared: Vec<u32>,
    pub disappeared: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1<T> {
    pub growth_links: Vec<(u32, u32)>,
    /// Unlinked mothers, ascending by label.
    pub remaining_mothers: Vec<CellInstance<T>>,
    /// Unlinked daughters, ascending by label.
    pub remaining_daughters: Vec<CellInstance<T>>,
}

/// Activity-prioritized greedy linking of non-shrinking cells.
pub fn stage1_greedy<T: Real>(
    mothers: &[CellInstance<T>],
    daughters: &[CellInstance<T>],
    config: &LinkConfig<T>,
) -> Stage1<T> {
    let mut order: Vec<&CellInstance<T>> = mothers.iter().collect();
    order.sort_by(|a, b| {
        a.activity
            .partial_cmp(&b.activity)
            .unwrap_or(Ordering::Equal)
            .then(a.label.cmp(&b.label))
    });

    let mut pool: Vec<CellInstance<T>> = daughters.to_vec();
    pool.sort_by_key(|d| d.label);
    let mut growth_links = Vec::new();
    let mut remaining_mothers = Vec::new();

    for mother in order {
        let best = candidates_for(mother, &pool, config).into_iter().next();
        let committed = best.and_then(|cand| {
            let idx = pool.iter().position(|d| d.label == cand.daughter_label)?;
            (pool[idx].area >= mother.area).then_some(idx)
        });
        match committed {
            Some(idx) => {
                let d = pool.remove(idx);
                growth_links.push((mother.label, d.label));
            }
            None => remaining_mothers.push(*mother),
        }
    }

    growth_links.sort_unstable();
    remaining_mothers.sort_by_key(|m| m.label);
    Stage1 {
        growth_links,
        remaining_mothers,
        remaining_daughters: pool,
    }
}

/// Linking-loss matrix of the leftovers, stacked on itself (`2m x d`).
pub fn build_cost_matrix<T: Real>(
    mothers: &[CellInstance<T>],
    daughters: &[CellInstance<T>],
    config: &LinkConfig<T>,
) -> CostMatrix<T> {
    let (m, d) = (mothers.len(), daughters.len());
    let mut block = Array2::<T>::zeros((m, d));
    let mut forbidden = Array2::from_elem((m, d), false);
    for (i, mother) in mothers.iter().enumerate() {
        let sigma = sigma_of(mother.activity, config);
        for (j, daughter) in daughters.iter().enumerate() {
            let g = gaussian_value(mother.centroid, sigma, daughter.centroid);
            block[[i, j]] = -g;
            forbidden[[i, j]] = !config.admits(g);
        }
    }
    let entries = concatenate(Axis(0), &[block.view(), block.view()]).expect("equal widths");
    let forbidden = concatenate(Axis(0), &[forbidden.view(), forbidden.view()]).expect("equal widths");
    CostMatrix::with_forbidden(entries, forbidden)
}

/// Full two-stage assignment for one frame pair.
pub fn assign_frame_pair<T: Real>(
    mothers: &[CellInstance<T>],
    daughters: &[CellInstance<T>],
    config: &LinkConfig<T>,
) -> Result<FramePairAssignment> {
    let stage1 = stage1_greedy(mothers, daughters, config);
    let left_m = &stage1.remaining_mothers;
    let left_d = &stage1.remaining_daughters;
    let m = left_m.len();

    let matrix = build_cost_matrix(left_m, left_d, config);
    let pairs = lap_solve(&matrix)?;

    let mut per_mother: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut taken = vec![false; left_d.len()];
    for (row, col) in pairs {
        per_mother[row % m].push(left_d[col].label);
        taken[col] = true;
    }

    let mut out = FramePairAssignment {
        growth_links: stage1.growth_links,
        ..Default::default()
    };
    for (mother, mut kids) in left_m.iter().zip(per_mother) {
        if kids.is_empty() {
            out.disappeared.push(mother.label);
        } else {
            kids.sort_unstable();
            out.division_links.push(DivisionLink {
                mother: mother.label,
                daughters: kids,
            });
        }
    }
    out.appeared = left_d
        .iter()
        .zip(taken)
        .filter(|(_, t)| !t)
        .map(|(d, _)| d.label)
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Point;

    fn cell(label: u32, x: f64, y: f64, area: usize, activity: f64) -> CellInstance<f64> {
        CellInstance {
            frame: 1,
            label,
            centroid: Point::new(x, y),
            area,
            activity,
        }
    }

    #[test]
    fn static_cell_links_to_itself() {
        let cfg = LinkConfig::default();
        let m = [cell(1, 10.0, 10.0, 50, 0.0)];
        let d = [cell(1, 10.0, 10.0, 50, 0.0)];
        let s = stage1_greedy(&m, &d, &cfg);
        assert_eq!(s.growth_links, vec![(1, 1)]);
        assert!(s.remaining_mothers.is_empty() && s.remaining_daughters.is_empty());
    }

    #[test]
    fn shrinking_candidate_is_not_committed() {
        let cfg = LinkConfig::default();
        let m = [cell(1, 10.0, 10.0, 100, 10.0)];
        let d = [cell(4, 12.0, 10.0, 60, 0.0), cell(5, 8.0, 10.0, 40, 0.0)];
        let s = stage1_greedy(&m, &d, &cfg);
        assert!(s.growth_links.is_empty());
        assert_eq!(s.remaining_mothers.len(), 1);
        assert_eq!(s.remaining_daughters.len(), 2);
    }

    #[test]
    fn lower_activity_mother_goes_first() {
        let cfg = LinkConfig::default();
        // Both mothers want daughter 7; the calmer one gets it.
        let m = [cell(1, 0.0, 0.0, 10, 20.0), cell(2, 2.0, 0.0, 10, 5.0)];
        let d = [cell(7, 1.5, 0.0, 12, 0.0), cell(8, -3.0, 0.0, 12, 0.0)];
        let s = stage1_greedy(&m, &d, &cfg);
        assert_eq!(s.growth_links, vec![(1, 8), (2, 7)]);
    }

    #[test]
    fn cost_matrix_is_stacked() {
        let cfg = LinkConfig::default();
        let m = [cell(1, 0.0, 0.0, 10, 5.0)];
        let d = [cell(2, 1.0, 0.0, 5, 0.0), cell(3, 0.0, 30.0, 5, 0.0)];
        let c = build_cost_matrix(&m, &d, &cfg);
        assert_eq!(c.entries.dim(), (2, 2));
        assert_eq!(c.entries.row(0), c.entries.row(1));
        assert_eq!(c.entries[[0, 0]], -(-1.0f64 / 8.0).exp());
        assert!(!c.forbidden[[0, 0]] && c.forbidden[[0, 1]]);
        assert!(build_cost_matrix(&[], &d, &cfg).is_empty());
        assert!(build_cost_matrix(&m, &[], &cfg).is_empty());
    }

    #[test]
    fn division_takes_two_daughters() {
        let cfg = LinkConfig::default();
        let m = [cell(1, 10.0, 10.0, 100, 10.0)];
        let d = [cell(3, 14.0, 10.0, 50, 0.0), cell(2, 6.0, 10.0, 50, 0.0)];
        let a = assign_frame_pair(&m, &d, &cfg).unwrap();
        assert_eq!(
            a.division_links,
            vec![DivisionLink {
                mother: 1,
                daughters: vec![2, 3]
            }]
        );
        assert!(a.appeared.is_empty() && a.disappeared.is_empty() && a.growth_links.is_empty());
    }

    #[test]
    fn surplus_daughter_appears() {
        let cfg = LinkConfig::default();
        let m = [cell(1, 10.0, 10.0, 100, 10.0)];
        let d = [
            cell(2, 6.0, 10.0, 50, 0.0),
            cell(3, 14.0, 10.0, 50, 0.0),
            cell(4, 10.0, 15.0, 40, 0.0),
        ];
        let a = assign_frame_pair(&m, &d, &cfg).unwrap();
        assert_eq!(a.division_links.len(), 1);
        assert_eq!(a.division_links[0].daughters, vec![2, 3]);
        assert_eq!(a.appeared, vec![4]);
    }

    #[test]
    fn out_of_range_mother_disappears() {
        let cfg = LinkConfig::default();
        let m = [cell(1, 0.0, 0.0, 100, 0.0)];
        let d = [cell(2, 50.0, 50.0, 120, 0.0)];
        let a = assign_frame_pair(&m, &d, &cfg).unwrap();
        assert_eq!(a.disappeared, vec![1]);
        assert_eq!(a.appeared, vec![2]);
    }

    #[test]
    fn single_daughter_deficit() {
        let cfg = LinkConfig::default();
        let m = [cell(1, 10.0, 10.0, 100, 10.0)];
        let d = [cell(2, 6.0, 10.0, 50, 0.0)];
        let a = assign_frame_pair(&m, &d, &cfg).unwrap();
        assert_eq!(a.division_links[0].daughters, vec![2]);
    }
}
