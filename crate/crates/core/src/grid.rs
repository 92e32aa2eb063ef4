//! Dense raster containers shared by every stage.
//!
//! Pixel `(x, y)` lives at flat index `y * width + x`; `x` is the column and
//! `y` the row. Multi-frame stacks are frame-major, then channel-major, then
//! row-major, which is also their on-disk order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Segmentation classes in channel order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Class {
    Background = 0,
    Bat = 1,
    Ball = 2,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::Background, Class::Bat, Class::Ball];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            0 => Some(Class::Background),
            1 => Some(Class::Bat),
            2 => Some(Class::Ball),
            _ => None,
        }
    }
}

/// A single `width x height` plane of `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Grid {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dims(
                format!("{} values ({}x{})", width * height, width, height),
                data.len(),
            ));
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Grid {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pixels.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, other: &Grid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::dims(
                format!("{}x{}", self.width, self.height),
                format!("{}x{}", other.width, other.height),
            ))
        }
    }
}

/// Per-pixel class probabilities for one frame: background, bat, ball.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    channels: [Grid; 3],
}

impl ProbMap {
    pub fn new(background: Grid, bat: Grid, ball: Grid) -> Result<Self> {
        background.check_shape(&bat)?;
        background.check_shape(&ball)?;
        Ok(ProbMap {
            channels: [background, bat, ball],
        })
    }

    /// Uniform `1/3` map.
    pub fn uniform(width: usize, height: usize) -> Self {
        let g = Grid::filled(width, height, 1.0 / 3.0);
        ProbMap {
            channels: [g.clone(), g.clone(), g],
        }
    }

    /// One-hot map from a label plane (values 0, 1, 2).
    pub fn one_hot(width: usize, height: usize, labels: &[u8]) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::dims(width * height, labels.len()));
        }
        let mut channels = [
            Grid::zeros(width, height),
            Grid::zeros(width, height),
            Grid::zeros(width, height),
        ];
        for (i, &l) in labels.iter().enumerate() {
            let c = Class::from_label(l).ok_or_else(|| Error::config("label", format!("{l} at pixel {i}")))?;
            channels[c.index()].as_mut_slice()[i] = 1.0;
        }
        Ok(ProbMap { channels })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    #[inline]
    pub fn channel(&self, class: Class) -> &Grid {
        &self.channels[class.index()]
    }

    #[inline]
    pub fn channel_mut(&mut self, class: Class) -> &mut Grid {
        &mut self.channels[class.index()]
    }

    pub fn channels(&self) -> &[Grid; 3] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [Grid; 3] {
        &mut self.channels
    }

    /// Largest deviation of a per-pixel class sum from 1.
    pub fn simplex_error(&self) -> f64 {
        let [a, b, c] = &self.channels;
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .zip(c.as_slice())
            .map(|((a, b), c)| crate::math::abs(a + b + c - 1.0))
            .fold(0.0, f64::max)
    }

    /// Per-pixel argmax labels; ties resolve to the lower class index.
    pub fn argmax_labels(&self) -> Vec<u8> {
        let [a, b, c] = &self.channels;
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .zip(c.as_slice())
            .map(|((&a, &b), &c)| {
                let mut best = 0u8;
                let mut v = a;
                if b > v {
                    best = 1;
                    v = b;
                }
                if c > v {
                    best = 2;
                }
                best
            })
            .collect()
    }
}

/// `frames x channels x height x width` stack of `f32` values.
///
/// This is the in-memory form of a PRM1 file. Probability stacks, one-hot
/// ground truth and coarse mask pairs all use it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStack {
    frames: usize,
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl ChannelStack {
    pub fn zeros(frames: usize, channels: usize, height: usize, width: usize) -> Self {
        ChannelStack {
            frames,
            channels,
            height,
            width,
            values: vec![0.0; frames * channels * height * width],
        }
    }

    pub fn from_vec(
        frames: usize,
        channels: usize,
        height: usize,
        width: usize,
        values: Vec<f32>,
    ) -> Result<Self> {
        let expected = frames * channels * height * width;
        if values.len() != expected {
            return Err(Error::dims(
                format!("{expected} values ({frames}x{channels}x{height}x{width})"),
                values.len(),
            ));
        }
        if let Some((index, &v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::ValueRange {
                index,
                value: v as f64,
            });
        }
        Ok(ChannelStack {
            frames,
            channels,
            height,
            width,
            values,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    /// Raw plane for frame `k` (0-based) and channel `c`.
    pub fn plane(&self, k: usize, c: usize) -> &[f32] {
        let n = self.plane_len();
        let start = (k * self.channels + c) * n;
        &self.values[start..start + n]
    }

    pub fn plane_mut(&mut self, k: usize, c: usize) -> &mut [f32] {
        let n = self.plane_len();
        let start = (k * self.channels + c) * n;
        &mut self.values[start..start + n]
    }

    pub fn grid(&self, k: usize, c: usize) -> Grid {
        let data = self.plane(k, c).iter().map(|&v| v as f64).collect();
        Grid {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Writes a grid into a plane, clamping into `[0, 1]`.
    pub fn set_grid(&mut self, k: usize, c: usize, grid: &Grid) {
        for (dst, &v) in self.plane_mut(k, c).iter_mut().zip(grid.as_slice()) {
            *dst = v.clamp(0.0, 1.0) as f32;
        }
    }

    pub fn same_geometry(&self, other: &ChannelStack) -> bool {
        self.frames == other.frames
            && self.channels == other.channels
            && self.height == other.height
            && self.width == other.width
    }

    pub(crate) fn shape_string(&self) -> alloc::string::String {
        format!(
            "{}x{}x{}x{}",
            self.frames, self.channels, self.height, self.width
        )
    }
}

/// Validated three-class probability stack (background, bat, ball).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbStack(ChannelStack);

impl ProbStack {
    pub const SIMPLEX_TOL: f64 = 1e-5;

    pub fn new(stack: ChannelStack) -> Result<Self> {
        if stack.channels != 3 {
            return Err(Error::dims("3 channels", stack.channels));
        }
        let n = stack.plane_len();
        for k in 0..stack.frames {
            let (a, b, c) = (stack.plane(k, 0), stack.plane(k, 1), stack.plane(k, 2));
            for i in 0..n {
                let sum = a[i] as f64 + b[i] as f64 + c[i] as f64;
                if crate::math::abs(sum - 1.0) > Self::SIMPLEX_TOL {
                    return Err(Error::Simplex {
                        frame: k,
                        pixel: i,
                        sum,
                    });
                }
            }
        }
        Ok(ProbStack(stack))
    }

    /// Builds a stack from per-frame maps.
    pub fn from_maps(maps: &[ProbMap]) -> Result<Self> {
        let first = maps.first().ok_or(Error::Empty("probability maps"))?;
        let (w, h) = (first.width(), first.height());
        let mut stack = ChannelStack::zeros(maps.len(), 3, h, w);
        for (k, m) in maps.iter().enumerate() {
            if m.width() != w || m.height() != h {
                return Err(Error::dims(
                    format!("{w}x{h}"),
                    format!("{}x{}", m.width(), m.height()),
                ));
            }
            for c in Class::ALL {
                stack.set_grid(k, c.index(), m.channel(c));
            }
        }
        ProbStack::new(stack)
    }

    pub fn frames(&self) -> usize {
        self.0.frames
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn map(&self, k: usize) -> ProbMap {
        ProbMap {
            channels: [self.0.grid(k, 0), self.0.grid(k, 1), self.0.grid(k, 2)],
        }
    }

    pub fn as_channels(&self) -> &ChannelStack {
        &self.0
    }

    pub fn into_channels(self) -> ChannelStack {
        self.0
    }
}

/// Per-frame label maps (0 = background, 1 = bat, 2 = ball).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelStack {
    frames: usize,
    height: usize,
    width: usize,
    labels: Vec<u8>,
}

impl LabelStack {
    pub fn new(frames: usize, height: usize, width: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != frames * height * width {
            return Err(Error::dims(frames * height * width, labels.len()));
        }
        if let Some((index, &l)) = labels.iter().enumerate().find(|(_, &l)| l > 2) {
            return Err(Error::config("label", format!("{l} at flat index {index}")));
        }
        Ok(LabelStack {
            frames,
            height,
            width,
            labels,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Label plane for frame `k` (0-based).
    pub fn frame(&self, k: usize) -> &[u8] {
        let n = self.height * self.width;
        &self.labels[k * n..(k + 1) * n]
    }

    /// One-hot three-channel stack.
    pub fn to_one_hot(&self) -> ChannelStack {
        let n = self.height * self.width;
        let mut stack = ChannelStack::zeros(self.frames, 3, self.height, self.width);
        for k in 0..self.frames {
            let labels = self.frame(k);
            for c in 0..3u8 {
                let plane = stack.plane_mut(k, c as usize);
                for i in 0..n {
                    plane[i] = if labels[i] == c { 1.0 } else { 0.0 };
                }
            }
        }
        stack
    }

    /// Inverse of [`LabelStack::to_one_hot`]: argmax per pixel.
    pub fn from_one_hot(stack: &ChannelStack) -> Result<Self> {
        if stack.channels() != 3 {
            return Err(Error::dims("3 channels", stack.channels()));
        }
        let n = stack.plane_len();
        let mut labels = Vec::with_capacity(stack.frames() * n);
        for k in 0..stack.frames() {
            let (a, b, c) = (stack.plane(k, 0), stack.plane(k, 1), stack.plane(k, 2));
            for i in 0..n {
                let l = if c[i] > a[i] && c[i] >= b[i] {
                    2
                } else if b[i] > a[i] {
                    1
                } else {
                    0
                };
                labels.push(l);
            }
        }
        LabelStack::new(stack.frames(), stack.height(), stack.width(), labels)
    }
}
