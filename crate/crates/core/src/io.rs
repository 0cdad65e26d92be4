//! Datasets on disk, in the Cell Tracking Challenge layout.
//!
//! * intensity frames `t000.tif`, `t001.tif`, ... (8- or 16-bit grayscale)
//! * label masks `mask000.tif` or `man_track000.tif`, ... (16-bit)
//! * a track file with one `L B E P` line per track
//!
//! Frames are 1-based in memory and 0-based in every file name and in track
//! files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use tiff::decoder::{Decoder, DecodingResult};
use tiff::encoder::{colortype, TiffEncoder};

use crate::error::{Error, Result};
use crate::lineage::{LineageGraph, TrackRecord};
use crate::model::{CellInstance, ImageStack, LabelImage, LabelMaskStack};
use crate::scalar::Real;

pub const IMAGE_PREFIX: &str = "t";
pub const MASK_PREFIXES: [&str; 2] = ["mask", "man_track"];
pub const RESULT_TRACK_FILE: &str = "res_track.txt";
pub const GT_TRACK_FILE: &str = "man_track.txt";
pub const ACTIVITY_PREFIX: &str = "activity";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetLayout {
    pub images_dir: PathBuf,
    pub masks_dir: PathBuf,
    pub track_file: Option<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn tiff_err(path: &Path) -> impl FnOnce(tiff::TiffError) -> Error + '_ {
    move |source| Error::Tiff {
        path: path.to_path_buf(),
        source,
    }
}

/// `prefix` + digits + `.tif`/`.tiff` files in `dir`, keyed by index.
fn indexed_files(dir: &Path, prefix: &str) -> Result<(BTreeMap<usize, PathBuf>, usize)> {
    let mut out = BTreeMap::new();
    let mut width = 3;
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_suffix(".tif").or_else(|| name.strip_suffix(".tiff")) else {
            continue;
        };
        let Some(digits) = stem.strip_prefix(prefix) else {
            continue;
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            continue;
        }
        let index: usize = digits.parse().map_err(|_| Error::Format {
            path: path.clone(),
            message: "frame index out of range".into(),
        })?;
        width = digits.len();
        out.insert(index, path);
    }
    Ok((out, width))
}

fn contiguous_files(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let (files, width) = indexed_files(dir, prefix)?;
    if files.is_empty() {
        return Err(Error::NoFrames(dir.to_path_buf()));
    }
    let mut out = Vec::with_capacity(files.len());
    for (expected, (index, path)) in files.into_iter().enumerate() {
        if index != expected {
            return Err(Error::MissingFrame {
                dir: dir.to_path_buf(),
                index: format!("{prefix}{expected:0width$}"),
            });
        }
        out.push(path);
    }
    Ok(out)
}

fn decode(path: &Path) -> Result<(usize, usize, DecodingResult)> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut dec = Decoder::new(std::io::BufReader::new(file)).map_err(tiff_err(path))?;
    let (w, h) = dec.dimensions().map_err(tiff_err(path))?;
    let data = dec.read_image().map_err(tiff_err(path))?;
    Ok((h as usize, w as usize, data))
}

fn to_array<T: Copy, U>(path: &Path, h: usize, w: usize, data: Vec<T>, f: impl Fn(T) -> U) -> Result<Array2<U>> {
    if data.len() != h * w {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("expected {} single-channel samples, found {}", h * w, data.len()),
        });
    }
    Ok(Array2::from_shape_vec((h, w), data.into_iter().map(f).collect()).expect("length checked"))
}

pub fn read_image<T: Real>(path: &Path) -> Result<Array2<T>> {
    let (h, w, data) = decode(path)?;
    let conv = |v: f64| T::from_f64_lossy(v);
    match data {
        DecodingResult::U8(d) => to_array(path, h, w, d, |v| conv(v as f64)),
        DecodingResult::U16(d) => to_array(path, h, w, d, |v| conv(v as f64)),
        DecodingResult::U32(d) => to_array(path, h, w, d, |v| conv(v as f64)),
        DecodingResult::F32(d) => to_array(path, h, w, d, |v| conv(v as f64)),
        DecodingResult::F64(d) => to_array(path, h, w, d, conv),
        _ => Err(Error::Format {
            path: path.to_path_buf(),
            message: "unsupported sample format".into(),
        }),
    }
}

pub fn read_mask(path: &Path) -> Result<LabelImage> {
    let (h, w, data) = decode(path)?;
    match data {
        DecodingResult::U8(d) => to_array(path, h, w, d, u32::from),
        DecodingResult::U16(d) => to_array(path, h, w, d, u32::from),
        DecodingResult::U32(d) => to_array(path, h, w, d, |v| v),
        _ => Err(Error::Format {
            path: path.to_path_buf(),
            message: "label images must be unsigned integer".into(),
        }),
    }
}

fn check_same_shape(paths: &[PathBuf], shapes: impl Iterator<Item = (usize, usize)>) -> Result<()> {
    let mut first: Option<(usize, usize)> = None;
    for (path, dim) in paths.iter().zip(shapes) {
        match first {
            None => first = Some(dim),
            Some(expected) if expected != dim => {
                return Err(Error::Format {
                    path: path.clone(),
                    message: format!("shape {dim:?} differs from {expected:?} of {}", paths[0].display()),
                })
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn read_images<T: Real>(dir: &Path) -> Result<ImageStack<T>> {
    let paths = contiguous_files(dir, IMAGE_PREFIX)?;
    let frames = paths.iter().map(|p| read_image(p)).collect::<Result<Vec<_>>>()?;
    check_same_shape(&paths, frames.iter().map(|f| f.dim()))?;
    ImageStack::new(frames)
}

/// Reads `mask*.tif`, falling back to `man_track*.tif`.
pub fn read_masks(dir: &Path) -> Result<LabelMaskStack> {
    let mut last_err = None;
    for prefix in MASK_PREFIXES {
        match contiguous_files(dir, prefix) {
            Ok(paths) => {
                let masks = paths.iter().map(|p| read_mask(p)).collect::<Result<Vec<_>>>()?;
                check_same_shape(&paths, masks.iter().map(|m| m.dim()))?;
                return LabelMaskStack::new(masks);
            }
            Err(e @ Error::NoFrames(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::NoFrames(dir.to_path_buf())))
}

pub fn read_dataset<T: Real>(layout: &DatasetLayout) -> Result<(ImageStack<T>, LabelMaskStack)> {
    let images = read_images(&layout.images_dir)?;
    let masks = read_masks(&layout.masks_dir)?;
    if images.len() != masks.len() {
        return Err(Error::CountMismatch {
            images: images.len(),
            masks: masks.len(),
        });
    }
    if images.dim() != masks.dim() {
        return Err(Error::Format {
            path: layout.masks_dir.clone(),
            message: format!(
                "mask shape {:?} differs from image shape {:?}",
                masks.dim(),
                images.dim()
            ),
        });
    }
    Ok((images, masks))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn frame_path(dir: &Path, prefix: &str, index0: usize) -> PathBuf {
    dir.join(format!("{prefix}{index0:03}.tif"))
}

fn write_tiff<C: colortype::ColorType>(path: &Path, w: usize, h: usize, data: &[C::Inner]) -> Result<()>
where
    [C::Inner]: tiff::encoder::TiffValue,
{
    let file = File::create(path).map_err(io_err(path))?;
    let mut enc = TiffEncoder::new(BufWriter::new(file)).map_err(tiff_err(path))?;
    enc.write_image::<C>(w as u32, h as u32, data).map_err(tiff_err(path))?;
    Ok(())
}

/// Writes frames rounded and clamped to the chosen integer depth.
pub fn write_images<T: Real>(dir: &Path, images: &ImageStack<T>, depth: BitDepth) -> Result<()> {
    create_dir(dir)?;
    for (i, frame) in images.frames().iter().enumerate() {
        let path = frame_path(dir, IMAGE_PREFIX, i);
        let (h, w) = frame.dim();
        let vals = frame.iter().map(|v| v.to_f64_lossy().round());
        match depth {
            BitDepth::Eight => {
                let data: Vec<u8> = vals.map(|v| v.clamp(0.0, 255.0) as u8).collect();
                write_tiff::<colortype::Gray8>(&path, w, h, &data)?;
            }
            BitDepth::Sixteen => {
                let data: Vec<u16> = vals.map(|v| v.clamp(0.0, 65535.0) as u16).collect();
                write_tiff::<colortype::Gray16>(&path, w, h, &data)?;
            }
        }
    }
    Ok(())
}

/// Writes 16-bit label images named `{prefix}NNN.tif`.
pub fn write_masks(dir: &Path, masks: &LabelMaskStack, prefix: &str) -> Result<()> {
    create_dir(dir)?;
    for (i, mask) in masks.masks().iter().enumerate() {
        let path = frame_path(dir, prefix, i);
        let (h, w) = mask.dim();
        let data = mask
            .iter()
            .map(|&l| {
                u16::try_from(l).map_err(|_| Error::Format {
                    path: path.clone(),
                    message: format!("label {l} does not fit in 16 bits"),
                })
            })
            .collect::<Result<Vec<u16>>>()?;
        write_tiff::<colortype::Gray16>(&path, w, h, &data)?;
    }
    Ok(())
}

/// Writes 32-bit float single-channel images named `{prefix}NNN.tif`.
pub fn write_float_maps<T: Real>(dir: &Path, maps: &[Array2<T>], prefix: &str) -> Result<()> {
    create_dir(dir)?;
    for (i, map) in maps.iter().enumerate() {
        let path = frame_path(dir, prefix, i);
        let (h, w) = map.dim();
        let data: Vec<f32> = map.iter().map(|v| v.to_f64_lossy() as f32).collect();
        write_tiff::<colortype::Gray32Float>(&path, w, h, &data)?;
    }
    Ok(())
}

/// `L B E P` lines, ascending by `L`, 0-based frames.
pub fn format_track_file(graph: &LineageGraph) -> String {
    let mut tracks: Vec<&TrackRecord> = graph.tracks.iter().collect();
    tracks.sort_by_key(|t| t.id);
    let mut out = String::new();
    for t in tracks {
        writeln!(out, "{} {} {} {}", t.id, t.begin - 1, t.end - 1, t.parent).expect("string write");
    }
    out
}

pub fn write_track_file(graph: &LineageGraph, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, format_track_file(graph)).map_err(io_err(path))
}

/// Parses a track file. Members are filled in with the track id as the label
/// in every frame, which is how relabeled masks store them.
///
/// `frame_count` defaults to the last frame any track reaches.
pub fn parse_track_file(text: &str, path: &Path, frame_count: Option<usize>) -> Result<LineageGraph> {
    let fmt_err = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut tracks = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<u64> = line
            .split_whitespace()
            .map(|f| f.parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| fmt_err(n + 1, e.to_string()))?;
        let [id, begin, end, parent] = fields[..] else {
            return Err(fmt_err(n + 1, format!("expected 4 fields, found {}", fields.len())));
        };
        if begin > end || id == 0 || id > u32::MAX as u64 || parent > u32::MAX as u64 {
            return Err(fmt_err(n + 1, format!("invalid track `{line}`")));
        }
        tracks.push(TrackRecord::contiguous(
            id as u32,
            begin as usize + 1,
            end as usize + 1,
            parent as u32,
        ));
    }
    tracks.sort_by_key(|t| t.id);
    let frame_count = frame_count.unwrap_or_else(|| tracks.iter().map(|t| t.end).max().unwrap_or(0));
    Ok(LineageGraph { tracks, frame_count })
}

pub fn read_track_file(path: &Path, frame_count: Option<usize>) -> Result<LineageGraph> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_track_file(&text, path, frame_count)
}

/// Track file inside a dataset directory: `res_track.txt` or `man_track.txt`.
pub fn find_track_file(dir: &Path) -> Result<PathBuf> {
    for name in [RESULT_TRACK_FILE, GT_TRACK_FILE] {
        let p = dir.join(name);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(Error::Format {
        path: dir.to_path_buf(),
        message: format!("no {RESULT_TRACK_FILE} or {GT_TRACK_FILE} found"),
    })
}

/// `frame,label,activity` rows, 0-based frames, 6 decimals.
pub fn format_activity_csv<T: Real>(instances: &[Vec<CellInstance<T>>]) -> String {
    let mut out = String::from("frame,label,activity\n");
    for cells in instances {
        for c in cells {
            writeln!(out, "{},{},{:.6}", c.frame - 1, c.label, c.activity.to_f64_lossy()).expect("string write");
        }
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}
