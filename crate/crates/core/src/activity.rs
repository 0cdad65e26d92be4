//! Moving pixel-wise standard deviation and per-cell activity.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::model::{check_frame_index, extract_instances, CellInstance, ImageStack, LabelMaskStack};
use crate::scalar::Real;

/// Temporal window used when linking frame `t` to `t + 1`.
pub const TRACKING_WINDOW: (usize, usize) = (0, 1);

/// Upper end of the intensity range frames are rescaled to.
pub const NORMALIZED_MAX: f64 = 255.0;

/// Per-pixel temporal standard deviation around frame `frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct StdField<T> {
    pub frame: usize,
    pub values: Array2<T>,
    /// `(n_minus, n_plus)` as requested, before border clamping.
    pub window: (usize, usize),
}

/// Min/max of the raw intensities a stack was rescaled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub min: f64,
    pub max: f64,
}

/// Rescales the whole stack linearly so its intensities span `[0, 255]`.
///
/// A constant stack maps to all zeros.
pub fn normalize_stack<T: Real>(stack: &ImageStack<T>) -> (ImageStack<T>, Normalization) {
    let (lo, hi) = stack
        .frames()
        .iter()
        .flat_map(|f| f.iter())
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    let scale = if span > T::zero() {
        T::from_f64_lossy(NORMALIZED_MAX) / span
    } else {
        T::zero()
    };
    let frames = stack.frames().iter().map(|f| f.mapv(|v| (v - lo) * scale)).collect();
    let out = ImageStack::new(frames)
        .expect("rescaling preserves shapes")
        .with_frame_interval(stack.frame_interval);
    (
        out,
        Normalization {
            min: lo.to_f64_lossy(),
            max: hi.to_f64_lossy(),
        },
    )
}

/// Population standard deviation over frames
/// `max(t - n_minus, 1)..=min(t + n_plus, N)` at every pixel.
pub fn moving_std<T: Real>(stack: &ImageStack<T>, t: usize, n_minus: usize, n_plus: usize) -> Result<StdField<T>> {
    check_frame_index(t, stack.len())?;
    let first = t.saturating_sub(n_minus).max(1);
    let last = (t + n_plus).min(stack.len());
    let window = &stack.frames()[first - 1..last];
    let count = T::from_usize_lossy(window.len());

    let mut mean = Array2::<T>::zeros(stack.dim());
    for f in window {
        mean += f;
    }
    mean.mapv_inplace(|s| s / count);

    let mut var = Array2::<T>::zeros(stack.dim());
    for f in window {
        Zip::from(&mut var).and(f).and(&mean).for_each(|v, &x, &m| {
            let d = x - m;
            *v += d * d;
        });
    }
    var.mapv_inplace(|s| (s / count).sqrt());

    Ok(StdField {
        frame: t,
        values: var,
        window: (n_minus, n_plus),
    })
}

/// Mean of the std field over the pixels carrying `label`.
pub fn cell_activity<T: Real>(field: &StdField<T>, mask: ArrayView2<'_, u32>, label: u32) -> Result<T> {
    let mut sum = T::zero();
    let mut area = 0usize;
    Zip::from(&field.values).and(mask).for_each(|&s, &l| {
        if l == label {
            sum += s;
            area += 1;
        }
    });
    if area == 0 || label == 0 {
        return Err(Error::LabelAbsent { label });
    }
    Ok(sum / T::from_usize_lossy(area))
}

/// Writes the mean of `field` over each cell into `cells[..].activity`.
///
/// Cells whose label does not occur in `mask` keep activity 0.
pub fn assign_activities<T: Real>(field: &StdField<T>, mask: ArrayView2<'_, u32>, cells: &mut [CellInstance<T>]) {
    let mut sums: HashMap<u32, (T, usize)> = HashMap::new();
    Zip::from(&field.values).and(mask).for_each(|&s, &l| {
        if l != 0 {
            let e = sums.entry(l).or_insert((T::zero(), 0));
            e.0 += s;
            e.1 += 1;
        }
    });
    for cell in cells.iter_mut() {
        cell.activity = match sums.get(&cell.label) {
            Some(&(s, n)) => s / T::from_usize_lossy(n),
            None => T::zero(),
        };
    }
}

/// Instances of frame `t` with activities from the `(0, 1)` window.
///
/// At `t = N` the window holds one frame, so every activity is 0.
pub fn activity_frame<T: Real>(
    stack: &ImageStack<T>,
    masks: &LabelMaskStack,
    t: usize,
) -> Result<Vec<CellInstance<T>>> {
    masks.check_paired(stack)?;
    let field = moving_std(stack, t, TRACKING_WINDOW.0, TRACKING_WINDOW.1)?;
    let mask = masks.mask(t)?;
    let mut cells = extract_instances(mask.view(), t);
    assign_activities(&field, mask.view(), &mut cells);
    Ok(cells)
}

/// Paints every cell's pixels with its activity; background stays 0.
pub fn render_activity_map<T: Real>(cells: &[CellInstance<T>], mask: ArrayView2<'_, u32>) -> Array2<T> {
    let lookup: HashMap<u32, T> = cells.iter().map(|c| (c.label, c.activity)).collect();
    mask.mapv(|l| lookup.get(&l).copied().unwrap_or_else(T::zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stack(frames: Vec<Array2<f64>>) -> ImageStack<f64> {
        ImageStack::new(frames).unwrap()
    }

    #[test]
    fn identical_frames_have_zero_std() {
        let f = array![[3.0, 4.0], [5.0, 6.0]];
        let s = stack(vec![f.clone(), f.clone(), f]);
        for t in 1..=3 {
            let field = moving_std(&s, t, 1, 1).unwrap();
            assert!(field.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn two_point_population_std() {
        let s = stack(vec![array![[0.0]], array![[2.0]]]);
        let field = moving_std(&s, 1, 0, 1).unwrap();
        assert_eq!(field.values[[0, 0]], 1.0);
    }

    #[test]
    fn rejects_out_of_range_frame() {
        let s = stack(vec![array![[0.0]]]);
        assert!(matches!(moving_std(&s, 0, 0, 1), Err(Error::FrameOutOfRange { .. })));
        assert!(matches!(moving_std(&s, 2, 0, 1), Err(Error::FrameOutOfRange { .. })));
    }

    #[test]
    fn symmetric_window_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let frames: Vec<_> = (0..3)
            .map(|_| Array2::from_shape_fn((4, 5), |_| rng.random_range(0.0..255.0)))
            .collect();
        let s = stack(frames.clone());
        let field = moving_std(&s, 2, 1, 1).unwrap();
        for ((r, c), &got) in field.values.indexed_iter() {
            let xs: Vec<f64> = frames.iter().map(|f| f[[r, c]]).collect();
            let m = xs.iter().sum::<f64>() / 3.0;
            let want = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 3.0).sqrt();
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn border_window_clamps() {
        let s = stack(vec![array![[1.0]], array![[3.0]], array![[9.0]]]);
        // t=1 with (2,0) sees only frame 1
        assert_eq!(moving_std(&s, 1, 2, 0).unwrap().values[[0, 0]], 0.0);
        // t=3 with (0,5) sees only frame 3
        assert_eq!(moving_std(&s, 3, 0, 5).unwrap().values[[0, 0]], 0.0);
        // t=1 with (0,1) sees frames 1..2
        assert_eq!(moving_std(&s, 1, 0, 1).unwrap().values[[0, 0]], 1.0);
    }

    #[test]
    fn activity_of_constant_field_is_constant() {
        let field = StdField {
            frame: 1,
            values: Array2::from_elem((3, 3), 0.25),
            window: (0, 1),
        };
        let mask = array![[1u32, 1, 0], [0, 2, 0], [0, 0, 0]];
        assert_eq!(cell_activity(&field, mask.view(), 1).unwrap(), 0.25);
        assert_eq!(cell_activity(&field, mask.view(), 2).unwrap(), 0.25);
        assert!(matches!(
            cell_activity(&field, mask.view(), 9),
            Err(Error::LabelAbsent { label: 9 })
        ));
    }

    #[test]
    fn activity_matches_pixel_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let values = Array2::from_shape_fn((8, 8), |_| rng.random_range(0.0..10.0));
        let mask = Array2::from_shape_fn((8, 8), |_| rng.random_range(0u32..4));
        let field = StdField {
            frame: 1,
            values: values.clone(),
            window: (0, 1),
        };
        for label in 1..4 {
            let mut sum = 0.0;
            let mut n = 0.0;
            for r in 0..8 {
                for c in 0..8 {
                    if mask[[r, c]] == label {
                        sum += values[[r, c]];
                        n += 1.0;
                    }
                }
            }
            assert_relative_eq!(
                cell_activity(&field, mask.view(), label).unwrap(),
                sum / n,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn last_frame_activity_is_zero() {
        let s = stack(vec![array![[0.0, 9.0]], array![[5.0, 1.0]]]);
        let masks = LabelMaskStack::new(vec![array![[1u32, 2]], array![[1u32, 2]]]).unwrap();
        let last = activity_frame(&s, &masks, 2).unwrap();
        assert!(last.iter().all(|c| c.activity == 0.0));
        let first = activity_frame(&s, &masks, 1).unwrap();
        assert_eq!(first[0].activity, 2.5);
        assert_eq!(first[1].activity, 4.0);
    }

    #[test]
    fn render_fills_plateaus() {
        let mask = array![[1u32, 0], [2, 2]];
        let mut cells = extract_instances::<f64>(mask.view(), 1);
        cells[0].activity = 0.7;
        cells[1].activity = 0.2;
        assert_eq!(render_activity_map(&cells, mask.view()), array![[0.7, 0.0], [0.2, 0.2]]);
        assert_eq!(render_activity_map::<f64>(&[], mask.view()), Array2::zeros((2, 2)));
    }

    #[test]
    fn normalization_spans_full_range() {
        let s = stack(vec![array![[10.0, 20.0]], array![[30.0, 10.0]]]);
        let (n, info) = normalize_stack(&s);
        assert_eq!(info, Normalization { min: 10.0, max: 30.0 });
        assert_eq!(n.frames()[0], array![[0.0, 127.5]]);
        assert_eq!(n.frames()[1], array![[255.0, 0.0]]);
    }
}
