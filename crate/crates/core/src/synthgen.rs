//! Synthetic rod-shaped colony generator with exact ground truth.
//!
//! Cells are capsules (a segment of a given length dilated by a fixed
//! radius). Each step they elongate along their axis, divide once they
//! reach the division length, and are pushed apart where they touch.
//! Frames are rendered dark-on-bright with additive Gaussian noise. Every
//! label in the emitted masks is the ground-truth track id.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::lineage::{LineageGraph, TrackRecord};
use crate::model::{ImageStack, LabelImage, LabelMaskStack};

const MAX_SEPARATION_ROUNDS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivisionMode {
    /// Two equal daughters on the mother's axis.
    Symmetric,
    /// Unequal daughters, hinged at the septum and tilted by `snap_degrees`
    /// in total (a "V").
    AsymmetricSnap {
        snap_degrees: f64,
        /// Length share of the smaller daughter, in `(0, 0.5]`.
        smaller_fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub seed: u64,
    pub frame_count: usize,
    /// `(width, height)` in pixels.
    pub image_size: (usize, usize),
    pub initial_cells: usize,
    /// Tip-to-tip length gained per frame, pixels.
    pub elongation_rate: f64,
    /// Tip-to-tip length at which a cell divides.
    pub division_length: f64,
    pub division_mode: DivisionMode,
    /// Per-frame positional jitter (std, pixels) on each axis.
    pub drift_noise: f64,
    /// Capsule radius in pixels.
    pub cell_radius: f64,
    /// Range initial tip-to-tip lengths are drawn from.
    pub initial_length: (f64, f64),
    /// Background gap left at the septum between fresh daughters.
    pub septum_gap: f64,
    /// Minimum free space kept between neighboring capsules.
    pub contact_gap: f64,
    pub background: f64,
    pub foreground: f64,
    pub intensity_noise: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            seed: 0,
            frame_count: 12,
            image_size: (96, 96),
            initial_cells: 4,
            elongation_rate: 1.5,
            division_length: 24.0,
            division_mode: DivisionMode::Symmetric,
            drift_noise: 0.0,
            cell_radius: 3.0,
            initial_length: (12.0, 20.0),
            septum_gap: 2.0,
            contact_gap: 2.0,
            background: 200.0,
            foreground: 80.0,
            intensity_noise: 2.0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        let (w, h) = self.image_size;
        if w == 0 || h == 0 || self.frame_count == 0 {
            return bad("image size and frame count must be positive");
        }
        if !(self.cell_radius >= 0.5) {
            return bad("cell radius below 0.5 px renders zero-area cells");
        }
        let (lo, hi) = self.initial_length;
        if !(lo >= 2.0 * self.cell_radius && hi >= lo) {
            return bad("initial length range must start at or above the cell diameter");
        }
        if !(self.division_length > 0.0 && self.elongation_rate >= 0.0 && self.drift_noise >= 0.0) {
            return bad("division length must be positive; rates and noise non-negative");
        }
        if !(self.intensity_noise >= 0.0 && self.septum_gap >= 0.0 && self.contact_gap >= 0.0) {
            return bad("noise and gaps must be non-negative");
        }
        if let DivisionMode::AsymmetricSnap { smaller_fraction, .. } = self.division_mode {
            if !(smaller_fraction > 0.0 && smaller_fraction <= 0.5) {
                return bad("smaller_fraction must lie in (0, 0.5]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Rod {
    x: f64,
    y: f64,
    angle: f64,
    length: f64,
    track: u32,
}

impl Rod {
    fn axis(&self) -> (f64, f64) {
        (self.angle.cos(), self.angle.sin())
    }

    fn half_segment(&self, radius: f64) -> f64 {
        ((self.length - 2.0 * radius) / 2.0).max(0.0)
    }

    fn endpoints(&self, radius: f64) -> ((f64, f64), (f64, f64)) {
        let (ux, uy) = self.axis();
        let h = self.half_segment(radius);
        ((self.x - ux * h, self.y - uy * h), (self.x + ux * h, self.y + uy * h))
    }
}

/// Output of [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub images: ImageStack<f64>,
    pub masks: LabelMaskStack,
    pub ground_truth: LineageGraph,
}

struct Colony<'a> {
    params: &'a SimParams,
    rods: Vec<Rod>,
    tracks: Vec<TrackRecord>,
}

impl Colony<'_> {
    fn new_track(&mut self, parent: u32, begin: usize) -> u32 {
        let id = self.tracks.len() as u32 + 1;
        self.tracks.push(TrackRecord {
            id,
            begin,
            end: begin,
            parent,
            members: Vec::new(),
        });
        id
    }

    fn clamp(&self, rod: &mut Rod) {
        let (w, h) = self.params.image_size;
        let r = self.params.cell_radius;
        let (ux, uy) = rod.axis();
        let hs = rod.half_segment(r);
        let ex = (ux * hs).abs() + r;
        let ey = (uy * hs).abs() + r;
        let clamp_axis = |v: f64, extent: f64, size: usize| {
            let lo = extent;
            let hi = size as f64 - 1.0 - extent;
            if lo > hi {
                (size as f64 - 1.0) / 2.0
            } else {
                v.clamp(lo, hi)
            }
        };
        rod.x = clamp_axis(rod.x, ex, w);
        rod.y = clamp_axis(rod.y, ey, h);
    }

    /// Pushes touching rods apart along their line of centers.
    fn separate(&mut self) {
        let r = self.params.cell_radius;
        let min_sep = 2.0 * r + self.params.contact_gap;
        for _ in 0..MAX_SEPARATION_ROUNDS {
            let mut moved = false;
            for i in 0..self.rods.len() {
                for j in i + 1..self.rods.len() {
                    let (a0, a1) = self.rods[i].endpoints(r);
                    let (b0, b1) = self.rods[j].endpoints(r);
                    let d = segment_distance(a0, a1, b0, b1);
                    if d >= min_sep {
                        continue;
                    }
                    let (mut nx, mut ny) = (self.rods[j].x - self.rods[i].x, self.rods[j].y - self.rods[i].y);
                    let norm = (nx * nx + ny * ny).sqrt();
                    if norm < 1e-9 {
                        let (ux, uy) = self.rods[i].axis();
                        (nx, ny) = (-uy, ux);
                    } else {
                        nx /= norm;
                        ny /= norm;
                    }
                    let push = (min_sep - d) / 2.0 + 1e-3;
                    let mut a = self.rods[i];
                    let mut b = self.rods[j];
                    a.x -= nx * push;
                    a.y -= ny * push;
                    b.x += nx * push;
                    b.y += ny * push;
                    self.clamp(&mut a);
                    self.clamp(&mut b);
                    self.rods[i] = a;
                    self.rods[j] = b;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }

    fn render(&mut self, frame: usize, rng: &mut ChaCha8Rng) -> Result<(Array2<f64>, LabelImage)> {
        let p = self.params;
        let (w, h) = p.image_size;
        let r = p.cell_radius;
        let mut mask = LabelImage::zeros((h, w));
        for rod in &self.rods {
            let (a, b) = rod.endpoints(r);
            let x0 = (a.0.min(b.0) - r).floor().max(0.0) as usize;
            let x1 = ((a.0.max(b.0) + r).ceil() as usize).min(w - 1);
            let y0 = (a.1.min(b.1) - r).floor().max(0.0) as usize;
            let y1 = ((a.1.max(b.1) + r).ceil() as usize).min(h - 1);
            let mut area = 0usize;
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if mask[[y, x]] == 0 && point_segment_distance((x as f64, y as f64), a, b) <= r {
                        mask[[y, x]] = rod.track;
                        area += 1;
                    }
                }
            }
            if area == 0 {
                return Err(Error::InvalidParameter(format!(
                    "cell {} renders to zero pixels in frame {frame}",
                    rod.track
                )));
            }
            let t = &mut self.tracks[rod.track as usize - 1];
            t.members.push((frame, rod.track));
            t.end = frame;
        }

        let noise = (p.intensity_noise > 0.0).then(|| Normal::new(0.0, p.intensity_noise).expect("valid std"));
        let image = mask.mapv(|l| {
            let base = if l == 0 { p.background } else { p.foreground };
            match &noise {
                Some(n) => base + n.sample(rng),
                None => base,
            }
        });
        Ok((image, mask))
    }

    fn step(&mut self, frame: usize, rng: &mut ChaCha8Rng) {
        let p = self.params;
        let drift = (p.drift_noise > 0.0).then(|| Normal::new(0.0, p.drift_noise).expect("valid std"));
        let mut next = Vec::with_capacity(self.rods.len() * 2);
        let rods = std::mem::take(&mut self.rods);
        for rod in rods {
            if rod.length >= p.division_length {
                for mut d in self.divide(&rod, frame + 1, rng) {
                    self.clamp(&mut d);
                    next.push(d);
                }
                continue;
            }
            let mut g = rod;
            g.length += p.elongation_rate;
            if let Some(n) = &drift {
                g.x += n.sample(rng);
                g.y += n.sample(rng);
            }
            self.clamp(&mut g);
            next.push(g);
        }
        self.rods = next;
        self.separate();
    }

    fn divide(&mut self, mother: &Rod, begin: usize, rng: &mut ChaCha8Rng) -> [Rod; 2] {
        let p = self.params;
        let usable = (mother.length - p.septum_gap).max(4.0 * p.cell_radius);
        let (frac, snap) = match p.division_mode {
            DivisionMode::Symmetric => (0.5, 0.0),
            DivisionMode::AsymmetricSnap {
                snap_degrees,
                smaller_fraction,
            } => {
                let frac = if rng.random_bool(0.5) {
                    smaller_fraction
                } else {
                    1.0 - smaller_fraction
                };
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (frac, sign * snap_degrees.to_radians() / 2.0)
            }
        };
        let min_len = 2.0 * p.cell_radius;
        let l1 = (usable * frac).max(min_len);
        let l2 = (usable * (1.0 - frac)).max(min_len);
        let (ux, uy) = mother.axis();
        let half = mother.length / 2.0;
        // septum position along the axis, measured from the mother's center
        let s = -half + l1 + p.septum_gap / 2.0;
        let (sx, sy) = (mother.x + ux * s, mother.y + uy * s);

        let place = |offset: f64, length: f64, tilt: f64, track: u32| {
            // daughter center sits `offset` along the axis from the septum,
            // rotated about the septum by `tilt`
            let (c, sn) = (tilt.cos(), tilt.sin());
            let (ox, oy) = (ux * offset, uy * offset);
            Rod {
                x: sx + ox * c - oy * sn,
                y: sy + ox * sn + oy * c,
                angle: mother.angle + tilt,
                length,
                track,
            }
        };
        let t1 = self.new_track(mother.track, begin);
        let t2 = self.new_track(mother.track, begin);
        [
            place(-(p.septum_gap / 2.0 + l1 / 2.0), l1, snap, t1),
            place(p.septum_gap / 2.0 + l2 / 2.0, l2, -snap, t2),
        ]
    }
}

/// Runs the colony for `params.frame_count` frames.
///
/// The same parameters (including the seed) always give identical output.
pub fn simulate(params: &SimParams) -> Result<SimOutput> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut colony = Colony {
        params,
        rods: Vec::new(),
        tracks: Vec::new(),
    };
    let (w, h) = params.image_size;
    for _ in 0..params.initial_cells {
        let track = colony.new_track(0, 1);
        let (lo, hi) = params.initial_length;
        let length = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let mut rod = Rod {
            x: rng.random_range(0.0..w as f64),
            y: rng.random_range(0.0..h as f64),
            angle: rng.random_range(0.0..std::f64::consts::PI),
            length,
            track,
        };
        colony.clamp(&mut rod);
        colony.rods.push(rod);
    }
    colony.separate();

    let mut images = Vec::with_capacity(params.frame_count);
    let mut masks = Vec::with_capacity(params.frame_count);
    for frame in 1..=params.frame_count {
        let (img, mask) = colony.render(frame, &mut rng)?;
        images.push(img);
        masks.push(mask);
        if frame < params.frame_count {
            colony.step(frame, &mut rng);
        }
    }

    Ok(SimOutput {
        images: ImageStack::new(images)?,
        masks: LabelMaskStack::new(masks)?,
        ground_truth: LineageGraph {
            tracks: colony.tracks,
            frame_count: params.frame_count,
        },
    })
}

/// Keeps frames `1, 1 + factor, 1 + 2 factor, ...` and contracts the ground
/// truth to them.
///
/// Tracks with no kept frame are dropped; their children reattach to the
/// nearest surviving ancestor. Track ids are preserved.
pub fn downsample(
    images: &ImageStack<f64>,
    masks: &LabelMaskStack,
    gt: &LineageGraph,
    factor: usize,
) -> Result<(ImageStack<f64>, LabelMaskStack, LineageGraph)> {
    if factor < 1 {
        return Err(Error::InvalidParameter(format!(
            "down-sampling factor must be >= 1, got {factor}"
        )));
    }
    let keep: Vec<usize> = (1..=images.len()).step_by(factor).collect();
    let new_images = ImageStack::new(keep.iter().map(|&t| images.frames()[t - 1].clone()).collect())?
        .with_frame_interval(images.frame_interval.map(|m| m * factor as f64));
    let new_masks = LabelMaskStack::new(keep.iter().map(|&t| masks.masks()[t - 1].clone()).collect())?;
    Ok((new_images, new_masks, contract_graph(gt, factor)))
}

/// Frame-level contraction of a lineage graph; see [`downsample`].
pub fn contract_graph(gt: &LineageGraph, factor: usize) -> LineageGraph {
    let kept = |f: usize| (f - 1).is_multiple_of(factor);
    let remap = |f: usize| (f - 1) / factor + 1;
    let by_id: std::collections::HashMap<u32, &TrackRecord> = gt.tracks.iter().map(|t| (t.id, t)).collect();
    let survives = |t: &TrackRecord| t.members.iter().any(|m| kept(m.0));

    let mut tracks = Vec::new();
    for t in &gt.tracks {
        let members: Vec<(usize, u32)> = t
            .members
            .iter()
            .filter(|m| kept(m.0))
            .map(|&(f, l)| (remap(f), l))
            .collect();
        let (Some(first), Some(last)) = (members.first(), members.last()) else {
            continue;
        };
        let mut parent = t.parent;
        while parent != 0 {
            match by_id.get(&parent) {
                Some(p) if survives(p) => break,
                Some(p) => parent = p.parent,
                None => parent = 0,
            }
        }
        tracks.push(TrackRecord {
            id: t.id,
            begin: first.0,
            end: last.0,
            parent,
            members,
        });
    }
    LineageGraph {
        tracks,
        frame_count: if gt.frame_count == 0 { 0 } else { remap(gt.frame_count) },
    }
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

fn segment_distance(a0: (f64, f64), a1: (f64, f64), b0: (f64, f64), b1: (f64, f64)) -> f64 {
    let cross = |o: (f64, f64), p: (f64, f64), q: (f64, f64)| (p.0 - o.0) * (q.1 - o.1) - (p.1 - o.1) * (q.0 - o.0);
    let d1 = cross(b0, b1, a0);
    let d2 = cross(b0, b1, a1);
    let d3 = cross(a0, a1, b0);
    let d4 = cross(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return 0.0;
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}
