//! Turns ground-truth masks into noisy "coarse" masks.
//!
//! Models the failure modes of a frame-wise foundation segmenter: per-frame
//! translation jitter, whole-object dropouts, random dilation or erosion,
//! masks bleeding into each other around contact, and soft edges. Forward
//! and backward passes draw from independent RNG streams.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::grid::{ChannelStack, LabelStack};
use crate::math::round;
use crate::{Error, Result};

/// Channel order of a coarse-mask stack.
pub const COARSE_BALL: usize = 0;
pub const COARSE_BAT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Fwd,
    Bwd,
}

impl Direction {
    fn stream_id(self) -> u64 {
        match self {
            Direction::Fwd => 1,
            Direction::Bwd => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradeConfig {
    /// Standard deviation of the per-frame translation, px.
    pub jitter_sigma: f64,
    pub dropout_prob: f64,
    /// Candidate morphology radii; negative erodes, positive dilates.
    pub morph_range: Vec<i32>,
    pub blur_radius: u32,
    /// Frames on each side of the impact frame where both masks are dilated.
    pub merge_window: u32,
    pub merge_dilate: u32,
    pub seed: u64,
}

impl Default for DegradeConfig {
    fn default() -> Self {
        DegradeConfig {
            jitter_sigma: 2.0,
            dropout_prob: 0.1,
            morph_range: vec![-1, 0, 1, 2],
            blur_radius: 1,
            merge_window: 5,
            merge_dilate: 2,
            seed: 0,
        }
    }
}

impl DegradeConfig {
    /// Configuration that reproduces the ground truth exactly.
    pub fn identity() -> Self {
        DegradeConfig {
            jitter_sigma: 0.0,
            dropout_prob: 0.0,
            morph_range: vec![0],
            blur_radius: 0,
            merge_window: 0,
            merge_dilate: 0,
            seed: 0,
        }
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        let limit = (width.min(height) / 4) as f64;
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma <= limit) {
            return Err(Error::config("jitter_sigma", format!("must be in [0, {limit}]")));
        }
        if !(0.0..=1.0).contains(&self.dropout_prob) {
            return Err(Error::config("dropout_prob", "must be in [0, 1]"));
        }
        if self.morph_range.is_empty() {
            return Err(Error::config("morph_range", "must not be empty"));
        }
        let radii = self
            .morph_range
            .iter()
            .map(|r| r.unsigned_abs())
            .chain([self.blur_radius, self.merge_dilate]);
        for r in radii {
            if r as f64 > limit {
                return Err(Error::config("radius", format!("{r} exceeds {limit}")));
            }
        }
        Ok(())
    }
}

/// Degrades every frame of `gt` into soft (ball, bat) channels.
///
/// `impact_frame` is the 1-based frame of contact; frames within
/// `merge_window` of it get the extra merge dilation.
pub fn degrade_coarse(
    gt: &LabelStack,
    dcfg: &DegradeConfig,
    direction: Direction,
    impact_frame: Option<usize>,
) -> Result<ChannelStack> {
    let (w, h) = (gt.width(), gt.height());
    dcfg.validate(w, h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(dcfg.seed);
    rng.set_stream(direction.stream_id());
    let jitter = Normal::new(0.0, dcfg.jitter_sigma)
        .map_err(|e| Error::config("jitter_sigma", format!("{e}")))?;

    let mut out = ChannelStack::zeros(gt.frames(), 2, h, w);
    let mut mask = vec![false; w * h];
    let mut scratch = vec![false; w * h];
    for k in 0..gt.frames() {
        let labels = gt.frame(k);
        let merging = impact_frame
            .is_some_and(|f| (k + 1).abs_diff(f) <= dcfg.merge_window as usize);
        for (channel, label) in [(COARSE_BALL, 2u8), (COARSE_BAT, 1u8)] {
            // fixed draw order per object keeps streams aligned across configs
            let dx = round(jitter.sample(&mut rng)) as i64;
            let dy = round(jitter.sample(&mut rng)) as i64;
            let drop = rng.random::<f64>() < dcfg.dropout_prob;
            let morph = dcfg.morph_range[rng.random_range(0..dcfg.morph_range.len())];

            for (m, &l) in mask.iter_mut().zip(labels) {
                *m = l == label;
            }
            translate(&mask, &mut scratch, w, h, dx, dy);
            core::mem::swap(&mut mask, &mut scratch);
            if drop {
                mask.fill(false);
            }
            if morph != 0 {
                morph_disk(&mask, &mut scratch, w, h, morph);
                core::mem::swap(&mut mask, &mut scratch);
            }
            if merging && dcfg.merge_dilate > 0 {
                morph_disk(&mask, &mut scratch, w, h, dcfg.merge_dilate as i32);
                core::mem::swap(&mut mask, &mut scratch);
            }
            box_blur(&mask, out.plane_mut(k, channel), w, h, dcfg.blur_radius as usize);
        }
    }
    Ok(out)
}

fn translate(src: &[bool], dst: &mut [bool], w: usize, h: usize, dx: i64, dy: i64) {
    dst.fill(false);
    for y in 0..h {
        let ty = y as i64 + dy;
        if ty < 0 || ty >= h as i64 {
            continue;
        }
        for x in 0..w {
            let tx = x as i64 + dx;
            if tx < 0 || tx >= w as i64 {
                continue;
            }
            if src[y * w + x] {
                dst[ty as usize * w + tx as usize] = true;
            }
        }
    }
}

fn disk_offsets(r: i32) -> Vec<(i64, i64)> {
    let r = r as i64;
    let mut v = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                v.push((dx, dy));
            }
        }
    }
    v
}

/// Dilation (`radius > 0`) or erosion (`radius < 0`) with a Euclidean disk.
/// Pixels outside the canvas count as unset.
fn morph_disk(src: &[bool], dst: &mut [bool], w: usize, h: usize, radius: i32) {
    let offsets = disk_offsets(radius.abs());
    let dilate = radius > 0;
    let at = |x: i64, y: i64| x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && src[y as usize * w + x as usize];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let v = if dilate {
                offsets.iter().any(|&(dx, dy)| at(x + dx, y + dy))
            } else {
                offsets.iter().all(|&(dx, dy)| at(x + dx, y + dy))
            };
            dst[y as usize * w + x as usize] = v;
        }
    }
}

/// Mean over a `(2r+1)^2` window, zero outside the canvas.
fn box_blur(src: &[bool], dst: &mut [f32], w: usize, h: usize, r: usize) {
    if r == 0 {
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = if s { 1.0 } else { 0.0 };
        }
        return;
    }
    let norm = ((2 * r + 1) * (2 * r + 1)) as f32;
    // horizontal running sums, then vertical
    let mut rows = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            rows[y * w + x] = (lo..=hi).filter(|&i| src[y * w + i]).count() as u32;
        }
    }
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for x in 0..w {
            let s: u32 = (lo..=hi).map(|j| rows[j * w + x]).sum();
            dst[y * w + x] = s as f32 / norm;
        }
    }
}
