//! End-to-end tracking of a dataset: activities, frame-pair assignment,
//! lineage, and relabeled masks.

use ndarray::Array2;

use crate::activity::{
    assign_activities, moving_std, normalize_stack, render_activity_map, Normalization, TRACKING_WINDOW,
};
use crate::assignment::{assign_frame_pair, FramePairAssignment};
use crate::error::Result;
use crate::lineage::{accumulate, relabel_masks, LineageGraph};
use crate::linking::LinkConfig;
use crate::model::{extract_instances, filter_min_area, retain_labels, CellInstance, ImageStack, LabelMaskStack};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOptions<T> {
    pub link: LinkConfig<T>,
    /// Instances smaller than this many pixels are dropped before linking.
    pub min_area: usize,
}

impl<T: Real> Default for TrackOptions<T> {
    fn default() -> Self {
        Self {
            link: LinkConfig::default(),
            min_area: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrameActivities<T> {
    /// Per frame, the retained instances with activities set.
    pub instances: Vec<Vec<CellInstance<T>>>,
    /// Masks with dropped instances cleared to background.
    pub masks: LabelMaskStack,
    pub normalization: Normalization,
}

/// Normalizes the stack, extracts and filters instances, and sets each
/// instance's activity from the `(0, 1)` window.
pub fn compute_activities<T: Real>(
    images: &ImageStack<T>,
    masks: &LabelMaskStack,
    min_area: usize,
) -> Result<FrameActivities<T>> {
    masks.check_paired(images)?;
    let (normalized, normalization) = normalize_stack(images);
    let mut instances = Vec::with_capacity(images.len());
    let mut kept_masks = Vec::with_capacity(images.len());
    for t in 1..=images.len() {
        let mask = masks.mask(t)?;
        let mut cells = filter_min_area(extract_instances(mask.view(), t), min_area);
        let field = moving_std(&normalized, t, TRACKING_WINDOW.0, TRACKING_WINDOW.1)?;
        assign_activities(&field, mask.view(), &mut cells);
        kept_masks.push(retain_labels(mask, &cells));
        instances.push(cells);
    }
    Ok(FrameActivities {
        instances,
        masks: LabelMaskStack::new(kept_masks)?,
        normalization,
    })
}

/// Activity maps, one per frame.
pub fn activity_maps<T: Real>(activities: &FrameActivities<T>) -> Vec<Array2<T>> {
    activities
        .instances
        .iter()
        .zip(activities.masks.masks())
        .map(|(cells, mask)| render_activity_map(cells, mask.view()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrackingResult<T> {
    pub activities: FrameActivities<T>,
    pub assignments: Vec<FramePairAssignment>,
    pub graph: LineageGraph,
    /// Masks with every instance relabeled to its track id.
    pub masks: LabelMaskStack,
}

pub fn track<T: Real>(
    images: &ImageStack<T>,
    masks: &LabelMaskStack,
    options: &TrackOptions<T>,
) -> Result<TrackingResult<T>> {
    options.link.validate()?;
    let activities = compute_activities(images, masks, options.min_area)?;
    let assignments = activities
        .instances
        .windows(2)
        .map(|pair| assign_frame_pair(&pair[0], &pair[1], &options.link))
        .collect::<Result<Vec<_>>>()?;
    let graph = accumulate(&assignments, &activities.instances)?;
    let relabeled = relabel_masks(&graph, &activities.masks)?;
    Ok(TrackingResult {
        activities,
        assignments,
        graph,
        masks: relabeled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn min_area_drops_small_instances() {
        let images = ImageStack::new(vec![array![[0.0, 1.0, 2.0]], array![[0.0, 1.0, 2.0]]]).unwrap();
        let masks = LabelMaskStack::new(vec![array![[1u32, 1, 2]], array![[1u32, 1, 2]]]).unwrap();
        let r = track(
            &images,
            &masks,
            &TrackOptions {
                min_area: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.graph.tracks.len(), 1);
        assert_eq!(r.masks.masks()[1], array![[1u32, 1, 0]]);
    }
}
