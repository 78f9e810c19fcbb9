//! The batch workflows behind each subcommand. Each one reads its inputs,
//! computes everything in memory and only then writes, so a failure leaves
//! no partial outputs.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use gtforge_core::autolabel::{
    annotate_static_scene, refine_boxes, BoxOrigin, ClusterParams, ClusterRules, IcpRefiner, RefineParams,
};
use gtforge_core::eval_det::{evaluate_detections, DetectionSummary, EvalConfig};
use gtforge_core::eval_occ::{confusion, occ_metrics, ConfusionCounts, MiouMode};
use gtforge_core::occgen::OccPipeline;
use gtforge_core::registration::{icp_align, IcpParams, IcpResult};
use gtforge_core::synth::{analytic_occupancy, generate_frame, SynthClip, SynthFrame};
use gtforge_core::voxel::OccConfig;
use gtforge_core::{FrameSource, PointKind, Pose, SemanticClass, VoxelGrid};
use log::info;
use rayon::prelude::*;

use crate::clip::FileClip;
use crate::error::{Error, Result, ResultExt};
use crate::io::annotations::{encode_annotations, encode_frame_annotation, read_annotations};
use crate::io::grid::{encode_grid, read_grid};
use crate::io::manifest::{encode_manifest, ClipManifest, FrameEntry, PoseRecord};
use crate::io::pointcloud::{encode_point_cloud, read_point_cloud};
use crate::io::scenario::read_scenario;
use crate::io::write_atomic;
use crate::report::{AutolabelReport, FrameOccScores, OccReport, OccScores};

/// Worker pool of `threads` workers; 0 lets rayon pick.
pub fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))
}

fn write_all(files: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    files.iter().try_for_each(|(p, b)| write_atomic(p, b))
}

pub fn grid_file_name(timestamp_us: i64) -> String {
    format!("{timestamp_us}.occ")
}

#[derive(Clone, Debug)]
pub struct OccGenOptions {
    pub clip: PathBuf,
    pub labels: PathBuf,
    pub out: PathBuf,
    pub config: OccConfig,
    pub threads: usize,
}

/// Writes `<out>/<timestamp>.occ` for every keyframe and returns the paths.
pub fn occ_gen(opts: &OccGenOptions) -> Result<Vec<PathBuf>> {
    let clip = FileClip::open(&opts.clip)?;
    let annotations = clip.keyframe_annotations()?;
    let labels = clip.keyframe_labels(&opts.labels)?;
    let pipeline = OccPipeline::prepare(&clip, &annotations, &labels, &opts.config, &IcpParams::default())?;
    info!(
        "{} tracks aggregated, static scene of {} points",
        pipeline.aggregates.len(),
        pipeline.static_scene.len()
    );
    let keyframes = pipeline.keyframes();
    let grids: Vec<Result<(i64, VoxelGrid)>> = pool(opts.threads)?.install(|| {
        keyframes
            .par_iter()
            .map(|&f| Ok((clip.timestamp_us(f), pipeline.grid(&clip, f)?)))
            .collect()
    });
    let files = grids
        .into_iter()
        .map(|g| g.map(|(t, grid)| (opts.out.join(grid_file_name(t)), encode_grid(&grid))))
        .collect::<Result<Vec<_>>>()?;
    write_all(&files)?;
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

#[derive(Clone, Debug)]
pub struct AutolabelOptions {
    pub clip: PathBuf,
    pub out: PathBuf,
    pub params: RefineParams,
    /// Where to write full-frame `<timestamp>.label` files of the keyframes.
    pub labels_out: Option<PathBuf>,
    pub threads: usize,
}

/// Propagates the keyframe boxes to every frame and writes them as one
/// annotation array. Optionally labels the static scene of each keyframe.
pub fn autolabel(opts: &AutolabelOptions) -> Result<AutolabelReport> {
    let clip = FileClip::open(&opts.clip)?;
    let annotations = clip.keyframe_annotations()?;
    let refiner = IcpRefiner { params: opts.params.icp };
    let out = refine_boxes(&clip, &annotations, &opts.params, &refiner)?;
    let mut report = AutolabelReport { frames: out.frames.len(), ..Default::default() };
    for r in &out.records {
        match r.origin {
            BoxOrigin::Keyframe => report.keyframe_boxes += 1,
            BoxOrigin::Accepted => report.accepted_boxes += 1,
            BoxOrigin::BestEffort => report.best_effort_boxes += 1,
        }
    }
    let mut files = vec![(opts.out.clone(), encode_annotations(&out.frames))];
    if let Some(dir) = &opts.labels_out {
        let keyframes = clip.keyframes();
        let seed = opts.params.seed;
        let labelled: Vec<Result<(PathBuf, Vec<u8>)>> = pool(opts.threads)?.install(|| {
            keyframes
                .par_iter()
                .zip(annotations.par_iter())
                .map(|(&f, (t, boxes))| {
                    let cloud = clip.load_cloud(f)?;
                    let ann =
                        annotate_static_scene(&cloud, boxes, &ClusterParams::default(), &ClusterRules::default(), seed)?;
                    Ok((dir.join(format!("{t}.label")), ann.frame_labels))
                })
                .collect()
        });
        for l in labelled {
            files.push(l?);
        }
        report.label_files = files.len() - 1;
    }
    write_all(&files)?;
    Ok(report)
}

/// Renders a scenario as a clip directory: `manifest.json`,
/// `lidar/<t>.bin` for every frame, and for keyframes
/// `annotations/<t>.json`, `labels/<t>.label` (one code per point) and the
/// analytic reference grid `reference/<t>.occ`. `gt_annotations.json`
/// holds the exact boxes of every frame.
pub fn synth(scenario: &Path, out: &Path, config: &OccConfig, threads: usize) -> Result<ClipManifest> {
    let spec = read_scenario(scenario)?;
    let clip = SynthClip::new(spec.clone())?;
    let n = spec.frame_count();
    let keyframes = clip.keyframes();
    let (frames, references) = pool(threads)?.install(|| {
        let frames: Vec<gtforge_core::Result<SynthFrame>> = (0..n).into_par_iter().map(|f| generate_frame(&spec, f)).collect();
        let refs: Vec<gtforge_core::Result<VoxelGrid>> =
            (0..keyframes.len()).into_par_iter().map(|k| analytic_occupancy(&spec, k, config)).collect();
        (frames, refs)
    });

    let mut files = Vec::new();
    let mut entries = Vec::with_capacity(n);
    let mut present = BTreeSet::new();
    for frame in frames {
        let frame = frame?;
        let t = frame.timestamp_us;
        let lidar = PathBuf::from(format!("lidar/{t}.bin"));
        files.push((out.join(&lidar), encode_point_cloud(&frame.cloud)?));
        let mut entry = FrameEntry {
            timestamp_us: t,
            lidar_path: lidar,
            radar_paths: Vec::new(),
            pose: PoseRecord::from(&frame.pose),
            keyframe: frame.keyframe,
            annotation_path: None,
            static_label_path: None,
        };
        if frame.keyframe {
            let ann = PathBuf::from(format!("annotations/{t}.json"));
            let labels = PathBuf::from(format!("labels/{t}.label"));
            files.push((out.join(&ann), encode_frame_annotation(t, &frame.boxes)));
            present.extend(frame.labels.iter().filter_map(|&c| SemanticClass::from_code(c)));
            files.push((out.join(&labels), frame.labels.clone()));
            entry.annotation_path = Some(ann);
            entry.static_label_path = Some(labels);
        }
        entries.push(entry);
    }
    for (k, grid) in references.into_iter().enumerate() {
        let t = spec.timestamp_us(keyframes[k]);
        files.push((out.join("reference").join(grid_file_name(t)), encode_grid(&grid?)));
    }
    let manifest = ClipManifest {
        clip_id: if spec.name.is_empty() { "synthetic".into() } else { spec.name.clone() },
        classes: present.into_iter().map(|c| c.name().to_string()).collect(),
        frames: entries,
    };
    manifest.validate()?;
    files.push((out.join("gt_annotations.json"), encode_annotations(&clip.annotations())));
    files.push((out.join("manifest.json"), encode_manifest(&manifest)));
    write_all(&files)?;
    Ok(manifest)
}

pub fn eval_det(gt: &Path, pred: &Path, config: &EvalConfig) -> Result<DetectionSummary> {
    let g = read_annotations(gt)?;
    let p = read_annotations(pred)?;
    Ok(evaluate_detections(&g, &p, config)?)
}

/// `.occ` files of a directory keyed by the timestamp in their name.
fn grid_files(dir: &Path) -> Result<Vec<(i64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_none_or(|e| e != "occ") {
            continue;
        }
        let t = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<i64>().ok())
            .ok_or_else(|| Error::Invalid(format!("{}: name is not <timestamp>.occ", path.display())))?;
        out.push((t, path));
    }
    out.sort();
    Ok(out)
}

/// Scores every prediction grid against the ground-truth grid with the
/// same timestamp. Both directories must hold the same timestamps.
pub fn eval_occ(gt_dir: &Path, pred_dir: &Path, mode: MiouMode) -> Result<OccReport> {
    let gt = grid_files(gt_dir)?;
    let pred = grid_files(pred_dir)?;
    let gt_ts: Vec<i64> = gt.iter().map(|g| g.0).collect();
    let pred_ts: Vec<i64> = pred.iter().map(|p| p.0).collect();
    if gt_ts != pred_ts {
        return Err(Error::Invalid(format!(
            "timestamps differ: ground truth {gt_ts:?}, predictions {pred_ts:?}"
        )));
    }
    if gt.is_empty() {
        return Err(Error::Invalid(format!("{} holds no .occ files", gt_dir.display())));
    }
    let mut total = ConfusionCounts::default();
    let mut frames = Vec::with_capacity(gt.len());
    for ((t, g), (_, p)) in gt.iter().zip(&pred) {
        let c = confusion(&read_grid(p)?, &read_grid(g)?).in_file(p)?;
        total += c;
        frames.push(FrameOccScores { timestamp_us: *t, scores: OccScores::new(&c, &occ_metrics(&c, mode)) });
    }
    Ok(OccReport {
        miou_mode: mode,
        frame_count: frames.len(),
        total: OccScores::new(&total, &occ_metrics(&total, mode)),
        frames,
    })
}

pub fn icp(src: &Path, dst: &Path, kind: PointKind, params: &IcpParams) -> Result<IcpResult> {
    let s = read_point_cloud(src, kind)?;
    let d = read_point_cloud(dst, kind)?;
    Ok(icp_align(&s, &d, params, &Pose::IDENTITY)?)
}
