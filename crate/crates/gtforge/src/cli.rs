//! Command-line front end. [`run`] returns the process exit status:
//! 0 success, 1 usage error, 2 I/O or format error, 3 validation error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gtforge_core::autolabel::RefineParams;
use gtforge_core::eval_det::EvalConfig;
use gtforge_core::eval_occ::MiouMode;
use gtforge_core::registration::IcpParams;
use gtforge_core::voxel::OccConfig;
use gtforge_core::PointKind;

use crate::commands::{self, AutolabelOptions, OccGenOptions};
use crate::error::Result;
use crate::io::write_atomic;
use crate::report::{to_json, IcpReport};

#[derive(Debug, Parser)]
#[command(name = "gtforge", version, about = "Occupancy ground truth, semi-automatic annotation and benchmark scoring")]
pub struct Cli {
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, env = "GTFORGE_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Voxel edge length, m.
    #[arg(long)]
    pub voxel_size: Option<f64>,
    /// Grid extent in ego coordinates: X0,X1,Y0,Y1,Z0,Z1.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub range: Option<[f64; 6]>,
}

impl GridArgs {
    fn apply(&self, mut c: OccConfig) -> OccConfig {
        if let Some(v) = self.voxel_size {
            c.voxel_size = v;
        }
        if let Some(r) = self.range {
            c.range = r;
        }
        c
    }
}

fn parse_range(s: &str) -> std::result::Result<[f64; 6], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 6 comma-separated numbers, got {}", v.len()))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CloudKind {
    Lidar,
    Radar,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build dense semantic occupancy grids for every keyframe of a clip.
    OccGen {
        #[arg(long)]
        clip: PathBuf,
        /// Directory of full-frame `<timestamp>.label` files.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        filter_radius: Option<f64>,
        #[arg(long)]
        min_neighbors: Option<usize>,
        /// Aggregate object points from keyframes only.
        #[arg(long)]
        no_nonkey: bool,
    },
    /// Score detections against ground-truth boxes.
    EvalDet {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Report path; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predicted occupancy grids against ground-truth grids.
    EvalOcc {
        #[arg(long)]
        gt_dir: PathBuf,
        #[arg(long)]
        pred_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Average over all classes instead of those present in the ground truth.
        #[arg(long)]
        strict_miou: bool,
    },
    /// Propagate keyframe boxes to every frame.
    Autolabel {
        #[arg(long)]
        clip: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        theta_conf: Option<f64>,
        #[arg(long)]
        a_thresh: Option<f64>,
        #[arg(long)]
        w_thresh: Option<f64>,
        /// Also label the static scene of each keyframe into this directory.
        #[arg(long)]
        labels_out: Option<PathBuf>,
    },
    /// Render a synthetic scenario into a clip directory.
    Synth {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Geometry of the reference grids.
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Align two point clouds.
    Icp {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        dst: PathBuf,
        #[arg(long, value_enum, default_value = "lidar")]
        kind: CloudKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut o = std::io::stdout().lock();
            o.write_all(bytes).and_then(|_| o.flush()).map_err(|e| crate::Error::io("<stdout>", e))
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::OccGen { clip, labels, out, grid, filter_radius, min_neighbors, no_nonkey } => {
            let mut config = grid.apply(OccConfig::default());
            if let Some(r) = filter_radius {
                config.filter_radius = *r;
            }
            if let Some(n) = min_neighbors {
                config.filter_min_neighbors = *n;
            }
            config.use_non_keyframes = !no_nonkey;
            let opts = OccGenOptions { clip: clip.clone(), labels: labels.clone(), out: out.clone(), config, threads: cli.threads };
            let written = commands::occ_gen(&opts)?;
            eprintln!("wrote {} grids to {}", written.len(), out.display());
        }
        Command::EvalDet { gt, pred, out } => {
            let s = commands::eval_det(gt, pred, &EvalConfig::default())?;
            emit(out.as_ref(), &to_json(&s))?;
            eprintln!("mAP {:.4}  ODS {:.4}", s.map, s.ods);
        }
        Command::EvalOcc { gt_dir, pred_dir, out, strict_miou } => {
            let mode = if *strict_miou { MiouMode::Strict } else { MiouMode::Exclude };
            let r = commands::eval_occ(gt_dir, pred_dir, mode)?;
            write_atomic(out, &to_json(&r))?;
            let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.2}", 100.0 * v));
            eprintln!("mIoU {}  SC IoU {}  over {} frames", pct(r.total.miou), pct(r.total.sc_iou), r.frame_count);
        }
        Command::Autolabel { clip, out, theta_conf, a_thresh, w_thresh, labels_out } => {
            let mut params = RefineParams { seed: cli.seed, ..RefineParams::default() };
            if let Some(v) = theta_conf {
                params.conf_threshold = *v;
            }
            if let Some(v) = a_thresh {
                params.a_thresh = *v;
            }
            if let Some(v) = w_thresh {
                params.w_thresh = *v;
            }
            let opts = AutolabelOptions {
                clip: clip.clone(),
                out: out.clone(),
                params,
                labels_out: labels_out.clone(),
                threads: cli.threads,
            };
            let r = commands::autolabel(&opts)?;
            eprintln!(
                "{} frames: {} keyframe, {} accepted, {} best-effort boxes",
                r.frames, r.keyframe_boxes, r.accepted_boxes, r.best_effort_boxes
            );
        }
        Command::Synth { scenario, out, grid } => {
            let m = commands::synth(scenario, out, &grid.apply(OccConfig::default()), cli.threads)?;
            eprintln!("wrote {} frames ({} keyframes) to {}", m.frames.len(), m.keyframe_count(), out.display());
        }
        Command::Icp { src, dst, kind, out } => {
            let kind = match kind {
                CloudKind::Lidar => PointKind::Lidar,
                CloudKind::Radar => PointKind::Radar,
            };
            let r = commands::icp(src, dst, kind, &IcpParams::default())?;
            emit(out.as_ref(), &to_json(&IcpReport::from(&r)))?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let _ = env_logger::Builder::new().filter_level(cli.log_level).try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
