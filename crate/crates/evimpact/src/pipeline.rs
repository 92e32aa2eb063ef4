//! Pipeline stages. Each stage reads its inputs from a clip directory and
//! writes its outputs next to them, so any stage can be rerun on its own.

use std::fs;
use std::path::{Path, PathBuf};

use evimpact_core::degrade::{degrade_coarse, DegradeConfig, Direction, COARSE_BALL, COARSE_BAT};
use evimpact_core::eval::ClipEval;
use evimpact_core::events::{accumulate, EventStream, FrameStack};
use evimpact_core::impact::{ImpactResult, MASS_MIN};
use evimpact_core::refine::{fuse_bidirectional, FrameRefinement, RefineInput, RefineJob, RefineOutput};
use evimpact_core::scene::{random_swing, simulate_clip, SceneConfig};
use evimpact_core::{ChannelStack, LabelStack, ProbStack};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{io_err, Result};
use crate::formats::{read_events_csv, read_evf, read_json, read_prm, write_events_csv, write_evf, write_json, write_prm};

pub const EVENTS_CSV: &str = "events.csv";
pub const CLIP_JSON: &str = "clip.json";
pub const GT_MASKS: &str = "gt_masks.prm1";
pub const COARSE_FWD: &str = "coarse_fwd.prm1";
pub const COARSE_BWD: &str = "coarse_bwd.prm1";
pub const FRAMES_EVF: &str = "frames.evf";
pub const REFINED_PRM: &str = "refined.prm1";
pub const REFINED_JSON: &str = "refined.json";
pub const IMPACT_JSON: &str = "impact.json";
pub const EVALS_JSON: &str = "evals.json";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";

/// Sidecar describing a simulated clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub clip_id: String,
    pub scenario_id: String,
    pub gt_impact_us: Option<f64>,
    pub duration_us: u64,
    pub noise_events: usize,
    pub config: SceneConfig,
    /// `None` when the coarse masks are the clean ground truth.
    pub degrade: Option<DegradeConfig>,
}

impl ClipMeta {
    pub fn width(&self) -> u32 {
        self.config.width
    }

    pub fn height(&self) -> u32 {
        self.config.height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineSidecar {
    /// 1-based frames where both coarse directions lost an object.
    pub invalid_frames: Vec<usize>,
    pub final_energies: Vec<Option<f64>>,
}

/// Which probability stack the estimator reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MaskSource {
    /// Output of the refiner.
    Refined,
    /// Bidirectional fusion of the coarse masks, no refinement.
    Fused,
    /// Ground-truth masks.
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameJson {
    pub k: usize,
    pub valid: bool,
    pub d_px: Option<f64>,
    pub ball: Option<[f64; 2]>,
    pub bat: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactJson {
    pub clip_id: String,
    pub source: MaskSource,
    pub t_impact_ms: f64,
    pub frame_index: usize,
    pub per_frame: Vec<FrameJson>,
}

impl ImpactJson {
    pub fn new(clip_id: &str, source: MaskSource, r: &ImpactResult) -> Self {
        ImpactJson {
            clip_id: clip_id.into(),
            source,
            t_impact_ms: r.t_impact_ms(),
            frame_index: r.frame_index,
            per_frame: r
                .per_frame
                .iter()
                .map(|m| FrameJson {
                    k: m.k,
                    valid: m.valid(),
                    d_px: m.d,
                    ball: m.ball.map(|(x, y)| [x, y]),
                    bat: m.bat.map(|(x, y)| [x, y]),
                })
                .collect(),
        }
    }
}

pub fn clip_dir(out: &Path, i: usize) -> PathBuf {
    out.join(format!("clip_{i:03}"))
}

/// Clip directories under `out`, sorted by name.
pub fn list_clips(out: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(out).map_err(io_err(out))? {
        let path = entry.map_err(io_err(out))?.path();
        if path.is_dir() && path.join(CLIP_JSON).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Runs `f` over `items` on a pool of `parallelism` threads, keeping order.
pub fn run_parallel<T: Sync, R: Send>(
    parallelism: usize,
    items: &[T],
    f: impl Fn(&T) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Scene configuration of clip `i`.
pub fn clip_scene(cfg: &RunConfig, i: usize) -> Result<SceneConfig> {
    let seed = cfg.clip_seed(i);
    Ok(if cfg.vary_swing {
        random_swing(&cfg.scene, seed)?
    } else {
        SceneConfig {
            seed,
            ..cfg.scene.clone()
        }
    })
}

fn coarse_from_gt(gt: &LabelStack) -> ChannelStack {
    let mut out = ChannelStack::zeros(gt.frames(), 2, gt.height(), gt.width());
    for k in 0..gt.frames() {
        for (channel, label) in [(COARSE_BALL, 2u8), (COARSE_BAT, 1u8)] {
            let plane = out.plane_mut(k, channel);
            for (v, &l) in plane.iter_mut().zip(gt.frame(k)) {
                *v = if l == label { 1.0 } else { 0.0 };
            }
        }
    }
    out
}

/// Simulates clip `i` into `dir`: events, ground truth, coarse masks, sidecar.
pub fn simulate(cfg: &RunConfig, i: usize, dir: &Path) -> Result<ClipMeta> {
    let scene = clip_scene(cfg, i)?;
    let clip = simulate_clip(&scene)?;
    let (fwd, bwd, degrade) = if cfg.clean_masks {
        let c = coarse_from_gt(&clip.gt_masks);
        (c.clone(), c, None)
    } else {
        let d = DegradeConfig {
            seed: cfg.clip_seed(i),
            ..cfg.degrade.clone()
        };
        let f = degrade_coarse(&clip.gt_masks, &d, Direction::Fwd, clip.impact_frame())?;
        let b = degrade_coarse(&clip.gt_masks, &d, Direction::Bwd, clip.impact_frame())?;
        (f, b, Some(d))
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_events_csv(&clip.stream, dir.join(EVENTS_CSV))?;
    write_prm(&clip.gt_masks.to_one_hot(), dir.join(GT_MASKS))?;
    write_prm(&fwd, dir.join(COARSE_FWD))?;
    write_prm(&bwd, dir.join(COARSE_BWD))?;
    let meta = ClipMeta {
        clip_id: format!("clip_{i:03}"),
        scenario_id: cfg.scenario.clone(),
        gt_impact_us: clip.gt_impact_us,
        duration_us: clip.stream.duration_us(),
        noise_events: clip.noise_events,
        config: scene,
        degrade,
    };
    write_json(&meta, dir.join(CLIP_JSON))?;
    Ok(meta)
}

pub fn load_meta(dir: &Path) -> Result<ClipMeta> {
    read_json(dir.join(CLIP_JSON))
}

/// Reads the event CSV with the sensor size and declared duration from the sidecar.
pub fn load_stream(dir: &Path, meta: &ClipMeta) -> Result<EventStream> {
    let s = read_events_csv(dir.join(EVENTS_CSV), meta.width(), meta.height())?;
    Ok(EventStream::new(s.width(), s.height(), s.into_events(), Some(meta.duration_us))?)
}

pub fn accumulate_stage(cfg: &RunConfig, dir: &Path) -> Result<FrameStack> {
    let meta = load_meta(dir)?;
    let frames = accumulate(&load_stream(dir, &meta)?, &cfg.accum)?;
    write_evf(&frames, dir.join(FRAMES_EVF))?;
    Ok(frames)
}

/// Refines every frame of a clip. Frames run on the current rayon pool;
/// the result does not depend on scheduling.
pub fn refine_frames(job: &RefineJob<'_>) -> Vec<FrameRefinement> {
    (0..job.frames()).into_par_iter().map(|k| job.frame(k)).collect()
}

pub fn refine_stage(cfg: &RunConfig, dir: &Path) -> Result<RefineOutput> {
    let frames = read_evf(dir.join(FRAMES_EVF))?;
    let fwd = read_prm(dir.join(COARSE_FWD))?;
    let bwd = read_prm(dir.join(COARSE_BWD))?;
    let input = RefineInput::new(&frames, &fwd, &bwd)?;
    let job = RefineJob::new(input, &cfg.refiner, &cfg.loss)?;
    let out = job.assemble(refine_frames(&job))?;
    write_prm(out.probs.as_channels(), dir.join(REFINED_PRM))?;
    let sidecar = RefineSidecar {
        invalid_frames: out.invalid_frames.clone(),
        final_energies: out.final_energies.clone(),
    };
    write_json(&sidecar, dir.join(REFINED_JSON))?;
    Ok(out)
}

/// Probability stack and excluded frames for `source`. The fused stack is
/// recomputed from the coarse masks, so it needs no earlier stage.
pub fn load_probs(cfg: &RunConfig, dir: &Path, source: MaskSource) -> Result<(ProbStack, Vec<usize>)> {
    Ok(match source {
        MaskSource::Refined => {
            let side: RefineSidecar = read_json(dir.join(REFINED_JSON))?;
            (ProbStack::new(read_prm(dir.join(REFINED_PRM))?)?, side.invalid_frames)
        }
        MaskSource::Fused => {
            let fwd = read_prm(dir.join(COARSE_FWD))?;
            let bwd = read_prm(dir.join(COARSE_BWD))?;
            let fused = fuse_bidirectional(&fwd, &bwd, cfg.refiner.mass_tau)?;
            let invalid = fused.invalid_frames();
            (fused.targets, invalid)
        }
        MaskSource::Gt => (ProbStack::new(read_prm(dir.join(GT_MASKS))?)?, Vec::new()),
    })
}

pub fn estimate_stage(cfg: &RunConfig, dir: &Path, source: MaskSource) -> Result<ImpactJson> {
    let meta = load_meta(dir)?;
    let (probs, invalid) = load_probs(cfg, dir, source)?;
    let result = ImpactResult::from_stack(&probs, cfg.accum.dt_us as f64, MASS_MIN, &invalid)?;
    let json = ImpactJson::new(&meta.clip_id, source, &result);
    write_json(&json, dir.join(IMPACT_JSON))?;
    Ok(json)
}

/// Pairs an impact estimate with the sidecar ground truth; `None` when the
/// clip has no contact.
pub fn clip_eval(dir: &Path) -> Result<Option<ClipEval>> {
    let meta = load_meta(dir)?;
    let impact: ImpactJson = read_json(dir.join(IMPACT_JSON))?;
    Ok(meta
        .gt_impact_us
        .map(|gt| ClipEval::new(meta.clip_id.clone(), meta.scenario_id.clone(), impact.t_impact_ms, gt / 1000.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_dirs_are_zero_padded() {
        assert_eq!(clip_dir(Path::new("o"), 7), PathBuf::from("o/clip_007"));
    }

    #[test]
    fn coarse_from_gt_splits_labels() {
        let gt = LabelStack::new(1, 1, 3, vec![0, 1, 2]).unwrap();
        let c = coarse_from_gt(&gt);
        assert_eq!(c.plane(0, COARSE_BALL), &[0.0, 0.0, 1.0]);
        assert_eq!(c.plane(0, COARSE_BAT), &[0.0, 1.0, 0.0]);
    }
}
