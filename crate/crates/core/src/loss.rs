//! Segmentation loss terms and their gradients.
//!
//! All terms are normalized by the pixel count `N = H * W`. Finite
//! differences are forward differences over the interior only; there is no
//! padding and no wraparound.

use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::grid::{Class, Grid, ProbMap};
use crate::math::{abs, ln, sign, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub lambda_ce: f64,
    pub lambda_dice: f64,
    pub lambda_smooth: f64,
    pub lambda_circ: f64,
    /// Cross-entropy class weights in channel order (background, bat, ball).
    pub class_weights: [f64; 3],
    pub eps_circ: f64,
    pub eps_log: f64,
    pub dice_smooth: f64,
    pub eps_grad: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_ce: 0.5,
            lambda_dice: 1.0,
            lambda_smooth: 0.1,
            lambda_circ: 0.05,
            class_weights: [0.5, 1.0, 13.0],
            eps_circ: 1e-6,
            eps_log: 1e-7,
            dice_smooth: 1.0,
            eps_grad: 1e-8,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let lambdas = [
            ("lambda_ce", self.lambda_ce),
            ("lambda_dice", self.lambda_dice),
            ("lambda_smooth", self.lambda_smooth),
            ("lambda_circ", self.lambda_circ),
        ];
        for (field, v) in lambdas {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be finite and >= 0"));
            }
        }
        if self.class_weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::config("class_weights", "must be > 0"));
        }
        let eps = [
            ("eps_circ", self.eps_circ),
            ("eps_log", self.eps_log),
            ("dice_smooth", self.dice_smooth),
            ("eps_grad", self.eps_grad),
        ];
        for (field, v) in eps {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be > 0"));
            }
        }
        Ok(())
    }
}

fn check_labels(p: &ProbMap, labels: &[u8]) -> Result<()> {
    if labels.len() != p.width() * p.height() {
        return Err(Error::dims(p.width() * p.height(), labels.len()));
    }
    if let Some(&l) = labels.iter().find(|&&l| l > 2) {
        return Err(Error::config("label", alloc::format!("{l} is not a class")));
    }
    Ok(())
}

/// Class-weighted cross-entropy against a label map.
pub fn ce_weighted(p: &ProbMap, labels: &[u8], class_weights: &[f64; 3], eps_log: f64) -> Result<f64> {
    check_labels(p, labels)?;
    let n = labels.len() as f64;
    let mut total = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        let c = l as usize;
        let prob = p.channels()[c].as_slice()[i];
        total += class_weights[c] * ln(prob.max(eps_log));
    }
    Ok(-total / n)
}

/// Soft Dice loss averaged over the three classes.
pub fn dice(p: &ProbMap, labels: &[u8], smooth: f64) -> Result<f64> {
    check_labels(p, labels)?;
    let mut loss = 0.0;
    for class in Class::ALL {
        let ch = p.channel(class).as_slice();
        let c = class as u8;
        let (mut inter, mut p_sum, mut g_sum) = (0.0, 0.0, 0.0);
        for (&v, &l) in ch.iter().zip(labels) {
            p_sum += v;
            if l == c {
                inter += v;
                g_sum += 1.0;
            }
        }
        loss += 1.0 - (2.0 * inter + smooth) / (p_sum + g_sum + smooth);
    }
    Ok(loss / 3.0)
}

/// Anisotropic total variation of one channel, divided by the pixel count.
pub fn smooth_channel(ch: &Grid) -> f64 {
    let (w, h) = (ch.width(), ch.height());
    let d = ch.as_slice();
    let mut total = 0.0;
    for y in 0..h {
        let row = &d[y * w..(y + 1) * w];
        for x in 0..w {
            let v = row[x];
            if x + 1 < w {
                total += abs(row[x + 1] - v);
            }
            if y + 1 < h {
                total += abs(d[(y + 1) * w + x] - v);
            }
        }
    }
    total / ch.len() as f64
}

/// Subgradient of [`smooth_channel`], with `sign(0) = 0`.
pub fn smooth_channel_grad(ch: &Grid) -> Grid {
    let mut g = Grid::zeros(ch.width(), ch.height());
    add_smooth_grad(ch, 1.0, g.as_mut_slice());
    g
}

pub(crate) fn add_smooth_grad(ch: &Grid, scale: f64, out: &mut [f64]) {
    let (w, h) = (ch.width(), ch.height());
    let d = ch.as_slice();
    let s = scale / ch.len() as f64;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                let g = s * sign(d[i + 1] - d[i]);
                out[i + 1] += g;
                out[i] -= g;
            }
            if y + 1 < h {
                let g = s * sign(d[i + w] - d[i]);
                out[i + w] += g;
                out[i] -= g;
            }
        }
    }
}

/// Smoothness of a probability map: channel mean of [`smooth_channel`].
pub fn smooth(p: &ProbMap) -> f64 {
    p.channels().iter().map(smooth_channel).sum::<f64>() / 3.0
}

/// Gradient of [`smooth`] with respect to every channel.
pub fn smooth_grad(p: &ProbMap) -> [Grid; 3] {
    p.channels().clone().map(|ch| {
        let mut g = Grid::zeros(ch.width(), ch.height());
        add_smooth_grad(&ch, 1.0 / 3.0, g.as_mut_slice());
        g
    })
}

/// Perimeter `C = sum sqrt(dx^2 + dy^2 + eps_grad)` and area `A = sum P`.
pub fn perimeter_area(ch: &Grid, eps_grad: f64) -> (f64, f64) {
    let (w, h) = (ch.width(), ch.height());
    let d = ch.as_slice();
    let mut perimeter = 0.0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let dx = if x + 1 < w { d[i + 1] - d[i] } else { 0.0 };
            let dy = if y + 1 < h { d[i + w] - d[i] } else { 0.0 };
            perimeter += sqrt(dx * dx + dy * dy + eps_grad);
        }
    }
    (perimeter, ch.sum())
}

/// Isoperimetric circularity `C^2 / (4 pi A + eps_circ) / N` of the ball channel.
pub fn circ(ch: &Grid, eps_grad: f64, eps_circ: f64) -> f64 {
    let (c, a) = perimeter_area(ch, eps_grad);
    c * c / (4.0 * PI * a + eps_circ) / ch.len() as f64
}

/// Analytic gradient of [`circ`].
pub fn circ_grad(ch: &Grid, eps_grad: f64, eps_circ: f64) -> Grid {
    let mut g = Grid::zeros(ch.width(), ch.height());
    add_circ_grad(ch, eps_grad, eps_circ, 1.0, g.as_mut_slice());
    g
}

pub(crate) fn add_circ_grad(ch: &Grid, eps_grad: f64, eps_circ: f64, scale: f64, out: &mut [f64]) {
    let (w, h) = (ch.width(), ch.height());
    let n = ch.len() as f64;
    let d = ch.as_slice();
    let (c, a) = perimeter_area(ch, eps_grad);
    let denom = 4.0 * PI * a + eps_circ;
    // dL/dP = (2C/D * dC/dP - 4 pi C^2 / D^2) / N
    let k_perim = scale * 2.0 * c / denom / n;
    let k_area = scale * 4.0 * PI * c * c / (denom * denom) / n;
    for v in out.iter_mut() {
        *v -= k_area;
    }
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let has_x = x + 1 < w;
            let has_y = y + 1 < h;
            let dx = if has_x { d[i + 1] - d[i] } else { 0.0 };
            let dy = if has_y { d[i + w] - d[i] } else { 0.0 };
            let inv = k_perim / sqrt(dx * dx + dy * dy + eps_grad);
            if has_x {
                out[i + 1] += dx * inv;
                out[i] -= dx * inv;
            }
            if has_y {
                out[i + w] += dy * inv;
                out[i] -= dy * inv;
            }
        }
    }
}

/// The four loss terms evaluated separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub ce: f64,
    pub dice: f64,
    pub smooth: f64,
    pub circ: f64,
}

impl LossTerms {
    pub fn evaluate(p: &ProbMap, labels: &[u8], w: &LossWeights) -> Result<Self> {
        Ok(LossTerms {
            ce: ce_weighted(p, labels, &w.class_weights, w.eps_log)?,
            dice: dice(p, labels, w.dice_smooth)?,
            smooth: smooth(p),
            circ: circ(p.channel(Class::Ball), w.eps_grad, w.eps_circ),
        })
    }

    pub fn weighted_sum(&self, w: &LossWeights) -> f64 {
        w.lambda_ce * self.ce
            + w.lambda_dice * self.dice
            + w.lambda_smooth * self.smooth
            + w.lambda_circ * self.circ
    }
}

/// Composite loss `l_ce*CE + l_dice*Dice + l_smooth*Smooth + l_circ*Circ(ball)`.
pub fn composite(p: &ProbMap, labels: &[u8], w: &LossWeights) -> Result<f64> {
    Ok(LossTerms::evaluate(p, labels, w)?.weighted_sum(w))
}
