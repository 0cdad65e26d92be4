use std::path::{Path, PathBuf};
use std::process::ExitCode;

use actrack::evaluation::{tra, PenaltyWeights};
use actrack::io::{self, BitDepth, DatasetLayout};
use actrack::linking::{LinkConfig, DEFAULT_G_CUTOFF, DEFAULT_K, DEFAULT_SIGMA_FLOOR};
use actrack::pipeline::{activity_maps, compute_activities, track, TrackOptions};
use actrack::synthgen::{downsample, simulate, DivisionMode, SimParams};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "actrack",
    version,
    about = "Activity-prioritized cell tracking for time-lapse microscopy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-cell activities: float activity maps and a CSV.
    Activity(ActivityArgs),
    /// Link cells across frames; writes relabeled masks and a track file.
    Track(TrackArgs),
    /// Score a result against a reference with TRA.
    Eval(EvalArgs),
    /// Generate a synthetic colony with ground truth.
    Simulate(SimulateArgs),
    /// Keep every n-th frame of a dataset and contract its ground truth.
    Downsample(DownsampleArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Directory with t000.tif, t001.tif, ...
    #[arg(long)]
    images: PathBuf,
    /// Directory with mask000.tif (or man_track000.tif), ...
    #[arg(long)]
    masks: PathBuf,
    /// Drop instances with fewer pixels than this.
    #[arg(long, default_value_t = 0)]
    min_area: usize,
    /// Minutes between frames (recorded as metadata).
    #[arg(long)]
    frame_interval: Option<f64>,
}

#[derive(Args)]
struct ActivityArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
    /// Activity-to-sigma divisor.
    #[arg(long, default_value_t = DEFAULT_K)]
    k: f64,
    /// Gaussian values below this are not links.
    #[arg(long, default_value_t = DEFAULT_G_CUTOFF)]
    g_cutoff: f64,
    /// Smallest sigma in pixels.
    #[arg(long, default_value_t = DEFAULT_SIGMA_FLOOR)]
    sigma_floor: f64,
}

#[derive(Args)]
struct EvalArgs {
    /// Reference: man_track*.tif (or mask*.tif) plus man_track.txt.
    #[arg(long)]
    gt: PathBuf,
    /// Result: mask*.tif plus res_track.txt.
    #[arg(long)]
    res: PathBuf,
    /// NS,FN,FP,ED,EA,EC penalties.
    #[arg(long, value_delimiter = ',', num_args = 6, default_values_t = [5.0, 10.0, 1.0, 1.0, 1.5, 1.0])]
    weights: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Symmetric,
    Snap,
}

#[derive(Clone, Copy, ValueEnum)]
enum Depth {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

#[derive(Args)]
struct SimulateArgs {
    /// Output directory; receives images/ and gt/.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 12)]
    frames: usize,
    #[arg(long, default_value_t = 96)]
    width: usize,
    #[arg(long, default_value_t = 96)]
    height: usize,
    #[arg(long, default_value_t = 4)]
    cells: usize,
    /// Length gained per frame, pixels.
    #[arg(long, default_value_t = 1.5)]
    elongation: f64,
    #[arg(long, default_value_t = 24.0)]
    division_length: f64,
    #[arg(long, value_enum, default_value_t = Mode::Symmetric)]
    mode: Mode,
    #[arg(long, default_value_t = 30.0)]
    snap_degrees: f64,
    #[arg(long, default_value_t = 0.4)]
    smaller_fraction: f64,
    /// Positional jitter per frame (std, pixels).
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
    /// Intensity noise (std).
    #[arg(long, default_value_t = 2.0)]
    noise: f64,
    #[arg(long, value_enum, default_value_t = Depth::Eight)]
    bit_depth: Depth,
}

#[derive(Args)]
struct DownsampleArgs {
    #[arg(long)]
    images: PathBuf,
    /// Reference directory with man_track*.tif and man_track.txt.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    factor: usize,
    /// Output directory; receives images/ and gt/.
    #[arg(long)]
    out: PathBuf,
}

fn read_input(input: &InputArgs) -> Result<(actrack::ImageStack64, actrack::model::LabelMaskStack)> {
    let layout = DatasetLayout {
        images_dir: input.images.clone(),
        masks_dir: input.masks.clone(),
        track_file: None,
    };
    let (images, masks) = io::read_dataset::<f64>(&layout)?;
    Ok((images.with_frame_interval(input.frame_interval), masks))
}

fn run_activity(args: &ActivityArgs) -> Result<()> {
    let (images, masks) = read_input(&args.input)?;
    let acts = compute_activities(&images, &masks, args.input.min_area)?;
    info!(
        "{} frames, intensities rescaled from [{}, {}]",
        images.len(),
        acts.normalization.min,
        acts.normalization.max
    );
    io::write_float_maps(&args.out, &activity_maps(&acts), io::ACTIVITY_PREFIX)?;
    io::write_text(
        &args.out.join("activities.csv"),
        &io::format_activity_csv(&acts.instances),
    )?;
    Ok(())
}

fn run_track(args: &TrackArgs) -> Result<()> {
    let link =
        LinkConfig::new(args.k, args.g_cutoff, args.sigma_floor).context("invalid --k, --g-cutoff or --sigma-floor")?;
    info!(
        "k={} cutoff={} sigma_floor={} min_area={}",
        link.k, link.g_cutoff, link.sigma_floor, args.input.min_area
    );
    let (images, masks) = read_input(&args.input)?;
    let options = TrackOptions {
        link,
        min_area: args.input.min_area,
    };
    let result = track(&images, &masks, &options)?;
    let norm = result.activities.normalization;
    info!(
        "{} frames, {} tracks, intensities rescaled from [{}, {}]",
        images.len(),
        result.graph.tracks.len(),
        norm.min,
        norm.max
    );
    io::write_masks(&args.out, &result.masks, "mask")?;
    io::write_track_file(&result.graph, &args.out.join(io::RESULT_TRACK_FILE))?;
    let meta = json!({
        "k": link.k,
        "g_cutoff": link.g_cutoff,
        "sigma_floor": link.sigma_floor,
        "min_area": args.input.min_area,
        "frame_interval": images.frame_interval,
        "normalization": { "min": norm.min, "max": norm.max, "target_max": actrack::activity::NORMALIZED_MAX },
    });
    io::write_text(
        &args.out.join("run.json"),
        &format!("{}\n", serde_json::to_string_pretty(&meta)?),
    )?;
    Ok(())
}

fn read_tracked(dir: &Path) -> Result<(actrack::lineage::LineageGraph, actrack::model::LabelMaskStack)> {
    let masks = io::read_masks(dir)?;
    let track_file = io::find_track_file(dir)?;
    let graph = io::read_track_file(&track_file, Some(masks.len()))?;
    Ok((graph, masks))
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let weights = PenaltyWeights::from_slice(&args.weights).context("invalid --weights")?;
    let (gt, gt_masks) = read_tracked(&args.gt)?;
    let (res, res_masks) = read_tracked(&args.res)?;
    let (score, d) = tra(&gt, &gt_masks, &res, &res_masks, &weights)?;
    println!("NS: {}", d.ns);
    println!("FN: {}", d.fn_);
    println!("FP: {}", d.fp);
    println!("ED: {}", d.ed);
    println!("EA: {}", d.ea);
    println!("EC: {}", d.ec);
    println!("AOGM: {:.6}", d.aogm);
    println!("AOGM_EMPTY: {:.6}", d.aogm_empty);
    println!("TRA: {score:.6}");
    Ok(())
}

fn write_dataset(
    out: &Path,
    images: &actrack::ImageStack64,
    masks: &actrack::model::LabelMaskStack,
    gt: &actrack::lineage::LineageGraph,
    depth: BitDepth,
) -> Result<()> {
    io::write_images(&out.join("images"), images, depth)?;
    let gt_dir = out.join("gt");
    io::write_masks(&gt_dir, masks, "man_track")?;
    io::write_track_file(gt, &gt_dir.join(io::GT_TRACK_FILE))?;
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let params = SimParams {
        seed: args.seed,
        frame_count: args.frames,
        image_size: (args.width, args.height),
        initial_cells: args.cells,
        elongation_rate: args.elongation,
        division_length: args.division_length,
        division_mode: match args.mode {
            Mode::Symmetric => DivisionMode::Symmetric,
            Mode::Snap => DivisionMode::AsymmetricSnap {
                snap_degrees: args.snap_degrees,
                smaller_fraction: args.smaller_fraction,
            },
        },
        drift_noise: args.drift,
        intensity_noise: args.noise,
        ..Default::default()
    };
    let sim = simulate(&params)?;
    let depth = match args.bit_depth {
        Depth::Eight => BitDepth::Eight,
        Depth::Sixteen => BitDepth::Sixteen,
    };
    let images = if depth == BitDepth::Sixteen {
        let frames = sim.images.frames().iter().map(|f| f.mapv(|v| v * 257.0)).collect();
        actrack::ImageStack64::new(frames)?
    } else {
        sim.images.clone()
    };
    info!(
        "{} frames, {} ground-truth tracks",
        params.frame_count,
        sim.ground_truth.tracks.len()
    );
    write_dataset(&args.out, &images, &sim.masks, &sim.ground_truth, depth)
}

fn run_downsample(args: &DownsampleArgs) -> Result<()> {
    if args.factor < 1 {
        bail!("--factor must be at least 1");
    }
    let images = io::read_images::<f64>(&args.images)?;
    let (gt, masks) = read_tracked(&args.gt)?;
    if images.len() != masks.len() {
        bail!(
            "{} holds {} frames but {} holds {}",
            args.images.display(),
            images.len(),
            args.gt.display(),
            masks.len()
        );
    }
    let max = images
        .frames()
        .iter()
        .flat_map(|f| f.iter())
        .fold(0.0f64, |a, &b| a.max(b));
    let depth = if max > 255.0 {
        BitDepth::Sixteen
    } else {
        BitDepth::Eight
    };
    let (images, masks, gt) = downsample(&images, &masks, &gt, args.factor)?;
    write_dataset(&args.out, &images, &masks, &gt, depth)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Activity(a) => run_activity(a),
        Command::Track(a) => run_track(a),
        Command::Eval(a) => run_eval(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Downsample(a) => run_downsample(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
