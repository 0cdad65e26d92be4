//! Shared domain types and per-frame instance extraction.
//!
//! Frames are indexed from 1 throughout the library. Pixel coordinates use
//! `(x, y) = (column, row)`; a 2-D field is stored as `Array2` with shape
//! `(height, width)`.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Instance-label image: 0 is background, every positive value one cell.
pub type LabelImage = Array2<u32>;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance_squared(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Ordered sequence of equally sized intensity frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack<T> {
    frames: Vec<Array2<T>>,
    /// Minutes between frames; carried as metadata only.
    pub frame_interval: Option<f64>,
}

impl<T: Real> ImageStack<T> {
    pub fn new(frames: Vec<Array2<T>>) -> Result<Self> {
        check_shapes(frames.iter().map(|f| f.dim()))?;
        Ok(Self {
            frames,
            frame_interval: None,
        })
    }

    pub fn with_frame_interval(mut self, minutes: Option<f64>) -> Self {
        self.frame_interval = minutes;
        self
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(height, width)` shared by every frame.
    pub fn dim(&self) -> (usize, usize) {
        self.frames[0].dim()
    }

    /// Frame `t`, 1-based.
    pub fn frame(&self, t: usize) -> Result<&Array2<T>> {
        check_frame_index(t, self.len())?;
        Ok(&self.frames[t - 1])
    }

    pub fn frames(&self) -> &[Array2<T>] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Array2<T>> {
        self.frames
    }
}

/// Per-frame instance-label images paired with an [`ImageStack`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMaskStack {
    masks: Vec<LabelImage>,
}

impl LabelMaskStack {
    pub fn new(masks: Vec<LabelImage>) -> Result<Self> {
        check_shapes(masks.iter().map(|m| m.dim()))?;
        Ok(Self { masks })
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.masks[0].dim()
    }

    /// Mask of frame `t`, 1-based.
    pub fn mask(&self, t: usize) -> Result<&LabelImage> {
        check_frame_index(t, self.len())?;
        Ok(&self.masks[t - 1])
    }

    pub fn masks(&self) -> &[LabelImage] {
        &self.masks
    }

    pub fn into_masks(self) -> Vec<LabelImage> {
        self.masks
    }

    /// Fails unless `images` has the same frame count and frame shape.
    pub fn check_paired<T: Real>(&self, images: &ImageStack<T>) -> Result<()> {
        if self.len() != images.len() {
            return Err(Error::CountMismatch {
                images: images.len(),
                masks: self.len(),
            });
        }
        if self.dim() != images.dim() {
            return Err(Error::ShapeMismatch {
                index: 1,
                expected: images.dim(),
                found: self.dim(),
            });
        }
        Ok(())
    }
}

fn check_shapes(mut dims: impl Iterator<Item = (usize, usize)>) -> Result<()> {
    let expected = dims.next().ok_or(Error::EmptyStack)?;
    for (i, found) in dims.enumerate() {
        if found != expected {
            return Err(Error::ShapeMismatch {
                index: i + 2,
                expected,
                found,
            });
        }
    }
    Ok(())
}

pub(crate) fn check_frame_index(t: usize, n: usize) -> Result<()> {
    if t == 0 || t > n {
        return Err(Error::FrameOutOfRange { t, n });
    }
    Ok(())
}

/// One segmented cell in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellInstance<T> {
    pub frame: usize,
    pub label: u32,
    pub centroid: Point<T>,
    pub area: usize,
    /// Zero until [`crate::activity`] fills it in.
    pub activity: T,
}

/// One instance per distinct nonzero label, sorted by label.
///
/// Centroids are the unweighted mean of member pixel coordinates.
pub fn extract_instances<T: Real>(mask: ArrayView2<'_, u32>, frame: usize) -> Vec<CellInstance<T>> {
    // label -> (sum x, sum y, count)
    let mut acc: BTreeMap<u32, (u64, u64, usize)> = BTreeMap::new();
    for ((row, col), &label) in mask.indexed_iter() {
        if label == 0 {
            continue;
        }
        let e = acc.entry(label).or_insert((0, 0, 0));
        e.0 += col as u64;
        e.1 += row as u64;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(label, (sx, sy, area))| {
            let n = T::from_usize_lossy(area);
            CellInstance {
                frame,
                label,
                centroid: Point::new(T::from_f64_lossy(sx as f64) / n, T::from_f64_lossy(sy as f64) / n),
                area,
                activity: T::zero(),
            }
        })
        .collect()
}

pub fn filter_min_area<T: Real>(instances: Vec<CellInstance<T>>, min_area: usize) -> Vec<CellInstance<T>> {
    instances.into_iter().filter(|c| c.area >= min_area).collect()
}

/// Copy of `mask` with every label not listed in `keep` set to background.
pub fn retain_labels<T>(mask: &LabelImage, keep: &[CellInstance<T>]) -> LabelImage {
    let kept: std::collections::BTreeSet<u32> = keep.iter().map(|c| c.label).collect();
    mask.mapv(|l| if l != 0 && kept.contains(&l) { l } else { 0 })
}
