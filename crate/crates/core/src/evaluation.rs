//! Tracking accuracy (TRA) from the acyclic oriented graph matching cost.
//!
//! A tracking result and its reference are both graphs whose vertices are
//! the labeled instances of each frame and whose edges are either
//! track-internal (same track in consecutive frames) or parent links (from
//! the last instance of a track to the first instance of each child).
//! Vertices are matched by mask overlap; the AOGM cost is a weighted count of
//! the vertex and edge edits that turn the result into the reference.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::lineage::LineageGraph;
use crate::model::LabelMaskStack;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWeights {
    /// NS: splitting a merged result vertex.
    pub split_vertex: f64,
    /// FN: adding a missed reference vertex.
    pub false_negative_vertex: f64,
    /// FP: deleting a spurious result vertex.
    pub false_positive_vertex: f64,
    /// ED: deleting a redundant result edge.
    pub redundant_edge: f64,
    /// EA: adding a missing reference edge.
    pub missing_edge: f64,
    /// EC: fixing the kind of an edge.
    pub wrong_semantics_edge: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self {
            split_vertex: 5.0,
            false_negative_vertex: 10.0,
            false_positive_vertex: 1.0,
            redundant_edge: 1.0,
            missing_edge: 1.5,
            wrong_semantics_edge: 1.0,
        }
    }
}

impl PenaltyWeights {
    /// Order: NS, FN, FP, ED, EA, EC.
    pub fn from_slice(w: &[f64]) -> Result<Self> {
        if w.len() != 6 {
            return Err(Error::InvalidParameter(format!("expected 6 weights, got {}", w.len())));
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            split_vertex: w[0],
            false_negative_vertex: w[1],
            false_positive_vertex: w[2],
            redundant_edge: w[3],
            missing_edge: w[4],
            wrong_semantics_edge: w[5],
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            split_vertex: self.split_vertex * factor,
            false_negative_vertex: self.false_negative_vertex * factor,
            false_positive_vertex: self.false_positive_vertex * factor,
            redundant_edge: self.redundant_edge * factor,
            missing_edge: self.missing_edge * factor,
            wrong_semantics_edge: self.wrong_semantics_edge * factor,
        }
    }
}

/// Vertex matching of one frame.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameMatch {
    pub gt_labels: BTreeSet<u32>,
    pub res_labels: BTreeSet<u32>,
    /// Reference label -> result label covering more than half of it.
    pub gt_to_res: BTreeMap<u32, u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Correspondence {
    pub frames: Vec<FrameMatch>,
}

impl Correspondence {
    pub fn false_negatives(&self) -> usize {
        self.frames.iter().map(|f| f.gt_labels.len() - f.gt_to_res.len()).sum()
    }

    pub fn false_positives(&self) -> usize {
        self.frames
            .iter()
            .map(|f| {
                let hit: BTreeSet<u32> = f.gt_to_res.values().copied().collect();
                f.res_labels.len() - hit.len()
            })
            .sum()
    }

    /// One per reference vertex beyond the first absorbed by a result vertex.
    pub fn splits(&self) -> usize {
        self.frames
            .iter()
            .map(|f| {
                let mut per_res: HashMap<u32, usize> = HashMap::new();
                for r in f.gt_to_res.values() {
                    *per_res.entry(*r).or_default() += 1;
                }
                per_res.values().map(|&n| n - 1).sum::<usize>()
            })
            .sum()
    }
}

/// Matches reference instance `g` to result instance `r` when `r` covers
/// strictly more than half of `g`'s pixels.
pub fn match_vertices(gt: &LabelMaskStack, res: &LabelMaskStack) -> Result<Correspondence> {
    if gt.len() != res.len() {
        return Err(Error::CountMismatch {
            images: gt.len(),
            masks: res.len(),
        });
    }
    let mut frames = Vec::with_capacity(gt.len());
    for (i, (g, r)) in gt.masks().iter().zip(res.masks()).enumerate() {
        if g.dim() != r.dim() {
            return Err(Error::ShapeMismatch {
                index: i + 1,
                expected: g.dim(),
                found: r.dim(),
            });
        }
        let mut area: HashMap<u32, usize> = HashMap::new();
        let mut overlap: HashMap<(u32, u32), usize> = HashMap::new();
        let mut fm = FrameMatch::default();
        for (&gl, &rl) in g.iter().zip(r.iter()) {
            if gl != 0 {
                *area.entry(gl).or_default() += 1;
                fm.gt_labels.insert(gl);
                if rl != 0 {
                    *overlap.entry((gl, rl)).or_default() += 1;
                }
            }
            if rl != 0 {
                fm.res_labels.insert(rl);
            }
        }
        for (&(gl, rl), &n) in &overlap {
            if 2 * n > area[&gl] {
                fm.gt_to_res.insert(gl, rl);
            }
        }
        frames.push(fm);
    }
    Ok(Correspondence { frames })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKind {
    Internal,
    Parent,
}

type Vertex = (usize, u32);

/// Edges of `graph` whose endpoints are both present in the masks.
fn edges(graph: &LineageGraph, present: &dyn Fn(Vertex) -> bool) -> HashMap<(Vertex, Vertex), EdgeKind> {
    let mut out = HashMap::new();
    let by_id: HashMap<u32, _> = graph.tracks.iter().map(|t| (t.id, t)).collect();
    for t in &graph.tracks {
        for w in t.members.windows(2) {
            if w[1].0 == w[0].0 + 1 && present(w[0]) && present(w[1]) {
                out.insert((w[0], w[1]), EdgeKind::Internal);
            }
        }
        if t.parent != 0 {
            let (Some(p), Some(&first)) = (by_id.get(&t.parent), t.members.first()) else {
                continue;
            };
            if let Some(&last) = p.members.last() {
                if present(last) && present(first) {
                    out.insert((last, first), EdgeKind::Parent);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GraphDiff {
    pub ns: usize,
    pub fn_: usize,
    pub fp: usize,
    pub ed: usize,
    pub ea: usize,
    pub ec: usize,
    pub aogm: f64,
    /// Cost of building the reference from an empty result.
    pub aogm_empty: f64,
    pub gt_vertices: usize,
    pub gt_edges: usize,
}

impl GraphDiff {
    /// `1 - min(aogm, aogm_empty) / aogm_empty`; an empty reference scores 1
    /// only against an empty result.
    pub fn tra(&self, res_is_empty: bool) -> f64 {
        if self.aogm_empty == 0.0 {
            return if res_is_empty { 1.0 } else { 0.0 };
        }
        1.0 - self.aogm.min(self.aogm_empty) / self.aogm_empty
    }
}

pub fn aogm_score(
    gt: &LineageGraph,
    res: &LineageGraph,
    correspondence: &Correspondence,
    weights: &PenaltyWeights,
) -> GraphDiff {
    let frames = &correspondence.frames;
    let in_gt = |(f, l): Vertex| f >= 1 && f <= frames.len() && frames[f - 1].gt_labels.contains(&l);
    let in_res = |(f, l): Vertex| f >= 1 && f <= frames.len() && frames[f - 1].res_labels.contains(&l);
    let gt_edges = edges(gt, &in_gt);
    let res_edges = edges(res, &in_res);

    let to_res = |(f, l): Vertex| -> Option<Vertex> { frames[f - 1].gt_to_res.get(&l).map(|&r| (f, r)) };
    let mut from_res: HashMap<Vertex, Vec<Vertex>> = HashMap::new();
    for (i, fm) in frames.iter().enumerate() {
        for (&g, &r) in &fm.gt_to_res {
            from_res.entry((i + 1, r)).or_default().push((i + 1, g));
        }
    }

    let mut diff = GraphDiff {
        ns: correspondence.splits(),
        fn_: correspondence.false_negatives(),
        fp: correspondence.false_positives(),
        gt_vertices: frames.iter().map(|f| f.gt_labels.len()).sum(),
        gt_edges: gt_edges.len(),
        ..Default::default()
    };

    for (&(a, b), &kind) in &gt_edges {
        match (to_res(a), to_res(b)) {
            (Some(ra), Some(rb)) => match res_edges.get(&(ra, rb)) {
                Some(&k) if k == kind => {}
                Some(_) => diff.ec += 1,
                None => diff.ea += 1,
            },
            _ => diff.ea += 1,
        }
    }

    let gt_pairs: HashSet<(Vertex, Vertex)> = gt_edges.keys().copied().collect();
    for &(x, y) in res_edges.keys() {
        // edges touching unmatched result vertices leave with those vertices
        let (Some(gx), Some(gy)) = (from_res.get(&x), from_res.get(&y)) else {
            continue;
        };
        let has_counterpart = gx.iter().any(|&a| gy.iter().any(|&b| gt_pairs.contains(&(a, b))));
        if !has_counterpart {
            diff.ed += 1;
        }
    }

    diff.aogm = weights.split_vertex * diff.ns as f64
        + weights.false_negative_vertex * diff.fn_ as f64
        + weights.false_positive_vertex * diff.fp as f64
        + weights.redundant_edge * diff.ed as f64
        + weights.missing_edge * diff.ea as f64
        + weights.wrong_semantics_edge * diff.ec as f64;
    diff.aogm_empty =
        weights.false_negative_vertex * diff.gt_vertices as f64 + weights.missing_edge * diff.gt_edges as f64;
    diff
}

/// Matches vertices, scores the graphs, and returns `(TRA, diff)`.
pub fn tra(
    gt: &LineageGraph,
    gt_masks: &LabelMaskStack,
    res: &LineageGraph,
    res_masks: &LabelMaskStack,
    weights: &PenaltyWeights,
) -> Result<(f64, GraphDiff)> {
    let corr = match_vertices(gt_masks, res_masks)?;
    let diff = aogm_score(gt, res, &corr, weights);
    let res_empty = corr.frames.iter().all(|f| f.res_labels.is_empty());
    Ok((diff.tra(res_empty), diff))
}
