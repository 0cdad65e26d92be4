//! Lineage graphs built from per-frame-pair assignments.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::assignment::FramePairAssignment;
use crate::error::{Error, Result};
use crate::model::{CellInstance, LabelMaskStack};

/// One track: a cell from its birth (appearance or division) to its end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackRecord {
    pub id: u32,
    /// First frame, 1-based, inclusive.
    pub begin: usize,
    /// Last frame, inclusive.
    pub end: usize,
    /// Parent track id, 0 if none.
    pub parent: u32,
    /// `(frame, label)` of each member instance, one per frame.
    pub members: Vec<(usize, u32)>,
}

impl TrackRecord {
    /// Track whose member in every frame carries the track id as its label.
    pub fn contiguous(id: u32, begin: usize, end: usize, parent: u32) -> Self {
        Self {
            id,
            begin,
            end,
            parent,
            members: (begin..=end).map(|f| (f, id)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LineageGraph {
    pub tracks: Vec<TrackRecord>,
    pub frame_count: usize,
}

impl LineageGraph {
    pub fn track(&self, id: u32) -> Option<&TrackRecord> {
        self.tracks.iter().find(|t| t.id == id)
    }

    pub fn children(&self, id: u32) -> impl Iterator<Item = &TrackRecord> + '_ {
        self.tracks.iter().filter(move |t| t.parent == id && id != 0)
    }

    /// Same graph with every member relabeled to its track id, as it reads
    /// back after [`relabel_masks`].
    pub fn relabeled(&self) -> Self {
        Self {
            tracks: self
                .tracks
                .iter()
                .map(|t| TrackRecord {
                    members: t.members.iter().map(|&(f, _)| (f, t.id)).collect(),
                    ..t.clone()
                })
                .collect(),
            frame_count: self.frame_count,
        }
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let by_id: HashMap<u32, &TrackRecord> = self.tracks.iter().map(|t| (t.id, t)).collect();
        if by_id.len() != self.tracks.len() {
            return Err("duplicate track id".into());
        }
        let mut seen = BTreeSet::new();
        for t in &self.tracks {
            if t.id == 0 {
                return Err("track id 0".into());
            }
            if t.begin == 0 || t.begin > t.end || t.end > self.frame_count {
                return Err(format!("track {} spans {}..{}", t.id, t.begin, t.end));
            }
            let frames: Vec<usize> = t.members.iter().map(|m| m.0).collect();
            if frames != (t.begin..=t.end).collect::<Vec<_>>() {
                return Err(format!("track {} members do not cover its frames", t.id));
            }
            for m in &t.members {
                if !seen.insert(*m) {
                    return Err(format!("instance {m:?} in two tracks"));
                }
            }
            if t.parent != 0 {
                let p = by_id
                    .get(&t.parent)
                    .ok_or_else(|| format!("track {} has unknown parent {}", t.id, t.parent))?;
                if t.parent == t.id || p.end + 1 != t.begin {
                    return Err(format!("track {} does not start after parent {}", t.id, t.parent));
                }
            }
        }
        // parents end before children begin, so parent chains are acyclic
        Ok(())
    }
}

/// Chains frame-pair assignments into tracks.
///
/// `instances[t - 1]` lists the cells of frame `t`; `assignments[t - 1]`
/// links frame `t` to `t + 1`. Track ids follow first appearance (frame,
/// then label).
pub fn accumulate<T>(assignments: &[FramePairAssignment], instances: &[Vec<CellInstance<T>>]) -> Result<LineageGraph> {
    let n = instances.len();
    if assignments.len() + 1 != n.max(1) {
        return Err(Error::AssignmentCount {
            expected: n.saturating_sub(1),
            found: assignments.len(),
        });
    }
    let mut tracks: Vec<TrackRecord> = Vec::new();
    let open_track = |tracks: &mut Vec<TrackRecord>, frame: usize, label: u32, parent: u32| {
        let id = tracks.len() as u32 + 1;
        tracks.push(TrackRecord {
            id,
            begin: frame,
            end: frame,
            parent,
            members: vec![(frame, label)],
        });
        id
    };

    // label -> track index, for the current frame
    let mut alive: HashMap<u32, usize> = HashMap::new();
    if let Some(first) = instances.first() {
        let labels: BTreeSet<u32> = first.iter().map(|c| c.label).collect();
        for label in labels {
            open_track(&mut tracks, 1, label, 0);
            alive.insert(label, tracks.len() - 1);
        }
    }

    for (i, a) in assignments.iter().enumerate() {
        let t = i + 1;
        let next_labels: BTreeSet<u32> = instances[t].iter().map(|c| c.label).collect();

        let mut mothers_seen = BTreeSet::new();
        let mut claim_mother = |label: u32| -> Result<usize> {
            if !mothers_seen.insert(label) {
                return Err(Error::DuplicateMother { frame: t, label });
            }
            alive
                .get(&label)
                .copied()
                .ok_or(Error::UnknownLabel { frame: t, label })
        };

        // daughter -> (parent track index or None, continues mother track?)
        let mut placed: BTreeMap<u32, (Option<usize>, bool)> = BTreeMap::new();
        let mut place = |label: u32, parent: Option<usize>, continues: bool| -> Result<()> {
            if !next_labels.contains(&label) {
                return Err(Error::UnknownLabel { frame: t + 1, label });
            }
            if placed.insert(label, (parent, continues)).is_some() {
                return Err(Error::DuplicateDaughter { frame: t + 1, label });
            }
            Ok(())
        };

        for &(m, d) in &a.growth_links {
            let idx = claim_mother(m)?;
            place(d, Some(idx), true)?;
        }
        for link in &a.division_links {
            let idx = claim_mother(link.mother)?;
            for &d in &link.daughters {
                place(d, Some(idx), false)?;
            }
        }
        for &d in &a.appeared {
            place(d, None, false)?;
        }
        for &m in &a.disappeared {
            claim_mother(m)?;
        }

        let mut next_alive = HashMap::new();
        for label in &next_labels {
            let &(parent, continues) = placed.get(label).ok_or(Error::UncoveredInstance {
                frame: t + 1,
                label: *label,
            })?;
            let idx = match (parent, continues) {
                (Some(idx), true) => {
                    let tr = &mut tracks[idx];
                    tr.end = t + 1;
                    tr.members.push((t + 1, *label));
                    idx
                }
                (Some(idx), false) => {
                    let pid = tracks[idx].id;
                    open_track(&mut tracks, t + 1, *label, pid);
                    tracks.len() - 1
                }
                (None, _) => {
                    open_track(&mut tracks, t + 1, *label, 0);
                    tracks.len() - 1
                }
            };
            next_alive.insert(*label, idx);
        }
        alive = next_alive;
    }

    Ok(LineageGraph { tracks, frame_count: n })
}

/// Rewrites every member cell's pixels to its track id.
pub fn relabel_masks(graph: &LineageGraph, masks: &LabelMaskStack) -> Result<LabelMaskStack> {
    let mut lookup: HashMap<(usize, u32), u32> = HashMap::new();
    for t in &graph.tracks {
        for &m in &t.members {
            lookup.insert(m, t.id);
        }
    }
    let mut out = Vec::with_capacity(masks.len());
    for (i, mask) in masks.masks().iter().enumerate() {
        let frame = i + 1;
        let mut relabeled = mask.clone();
        for v in relabeled.iter_mut() {
            if *v != 0 {
                *v = *lookup
                    .get(&(frame, *v))
                    .ok_or(Error::UncoveredInstance { frame, label: *v })?;
            }
        }
        out.push(relabeled);
    }
    LabelMaskStack::new(out)
}
