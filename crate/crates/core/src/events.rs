//! Event streams and dense event-frame synthesis.
//!
//! Frame `k` (1-based, `k = 1..=K`) has nominal time `t_k = k * dt` and counts
//! the positive-polarity events with `t` in `[t_k - window_frames * dt, t_k)`.
//! Negative events are dropped; they only produce trailing streaks behind
//! moving edges.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Negative => -1,
            Polarity::Positive => 1,
        }
    }

    /// On-disk encoding: 0 is negative, 1 is positive.
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Polarity::Negative),
            1 => Some(Polarity::Positive),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Polarity::Negative => 0,
            Polarity::Positive => 1,
        }
    }
}

/// One brightness-change sample. `t` is in microseconds since clip start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub t: u64,
    pub x: u32,
    pub y: u32,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u32, y: u32, p: Polarity) -> Self {
        Event { t, x, y, p }
    }
}

/// Events sorted by timestamp for a `width x height` sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    width: u32,
    height: u32,
    events: Vec<Event>,
    duration_us: u64,
}

impl EventStream {
    /// Validates geometry and stable-sorts by timestamp. Without a declared
    /// duration the stream lasts until its latest event.
    pub fn new(
        width: u32,
        height: u32,
        mut events: Vec<Event>,
        duration_us: Option<u64>,
    ) -> Result<Self> {
        if let Some((index, e)) = events
            .iter()
            .enumerate()
            .find(|(_, e)| e.x >= width || e.y >= height)
        {
            return Err(Error::OutOfBounds {
                index,
                x: e.x,
                y: e.y,
                width,
                height,
            });
        }
        events.sort_by_key(|e| e.t);
        let max_t = events.last().map_or(0, |e| e.t);
        Ok(EventStream {
            width,
            height,
            events,
            duration_us: duration_us.unwrap_or(max_t),
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn duration_us(&self) -> u64 {
        self.duration_us
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AccumConfig {
    /// Frame interval in microseconds.
    pub dt_us: u32,
    /// Window length in units of `dt_us`.
    pub window_frames: u32,
    /// Count at which a pixel saturates to 1.0.
    pub saturation: u32,
}

impl Default for AccumConfig {
    fn default() -> Self {
        AccumConfig {
            dt_us: 100,
            window_frames: 10,
            saturation: 3,
        }
    }
}

impl AccumConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dt_us < 1 {
            return Err(Error::config("dt_us", "must be >= 1"));
        }
        if self.window_frames < 1 {
            return Err(Error::config("window_frames", "must be >= 1"));
        }
        if self.saturation < 1 {
            return Err(Error::config("saturation", "must be >= 1"));
        }
        Ok(())
    }

    /// Number of whole frames in a clip of the given duration.
    pub fn frame_count(&self, duration_us: u64) -> usize {
        (duration_us / self.dt_us as u64) as usize
    }

    #[inline]
    pub fn normalize(&self, count: u32) -> f32 {
        count.min(self.saturation) as f32 / self.saturation as f32
    }
}

/// Raw positive-event counts per frame, before normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountStack {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub counts: Vec<u32>,
}

impl CountStack {
    pub fn frame(&self, k: usize) -> &[u32] {
        let n = self.height * self.width;
        &self.counts[k * n..(k + 1) * n]
    }
}

/// `K` dense event frames with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    frames: usize,
    height: usize,
    width: usize,
    dt_us: u32,
    values: Vec<f32>,
}

impl FrameStack {
    pub fn new(
        frames: usize,
        height: usize,
        width: usize,
        dt_us: u32,
        values: Vec<f32>,
    ) -> Result<Self> {
        if values.len() != frames * height * width {
            return Err(Error::dims(frames * height * width, values.len()));
        }
        if dt_us < 1 {
            return Err(Error::config("dt_us", "must be >= 1"));
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
        Ok(FrameStack {
            frames,
            height,
            width,
            dt_us,
            values,
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

    pub fn dt_us(&self) -> u32 {
        self.dt_us
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Frame at 0-based index `k` (nominal time `(k + 1) * dt`).
    pub fn frame(&self, k: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.values[k * n..(k + 1) * n]
    }

    pub fn grid(&self, k: usize) -> crate::Grid {
        let data = self.frame(k).iter().map(|&v| v as f64).collect();
        crate::Grid::from_vec(self.width, self.height, data).expect("frame geometry")
    }
}

/// Sliding-window positive-event counts.
pub fn accumulate_counts(stream: &EventStream, cfg: &AccumConfig) -> Result<CountStack> {
    cfg.validate()?;
    let dt = cfg.dt_us as u64;
    if stream.duration_us() < dt {
        return Err(Error::ClipTooShort {
            duration_us: stream.duration_us(),
            dt_us: cfg.dt_us,
        });
    }
    let frames = cfg.frame_count(stream.duration_us());
    let (w, h) = (stream.width() as usize, stream.height() as usize);
    let n = w * h;
    let end = frames as u64 * dt;

    // Bin b holds events with t in [b*dt, (b+1)*dt). Frame k sums bins k-W..k-1.
    let events = stream.events();
    let mut bin_start = Vec::with_capacity(frames + 1);
    for b in 0..=frames as u64 {
        let t0 = (b * dt).min(end);
        bin_start.push(events.partition_point(|e| e.t < t0));
    }

    let add = |running: &mut [u32], bin: usize, delta: i32| {
        for e in &events[bin_start[bin]..bin_start[bin + 1]] {
            if e.p == Polarity::Positive {
                let idx = e.y as usize * w + e.x as usize;
                running[idx] = running[idx].wrapping_add_signed(delta);
            }
        }
    };

    let window = cfg.window_frames as usize;
    let mut running = vec![0u32; n];
    let mut counts = vec![0u32; frames * n];
    for k in 1..=frames {
        add(&mut running, k - 1, 1);
        if k > window {
            add(&mut running, k - 1 - window, -1);
        }
        counts[(k - 1) * n..k * n].copy_from_slice(&running);
    }
    Ok(CountStack {
        frames,
        height: h,
        width: w,
        counts,
    })
}

/// Dense event frames: clipped counts scaled by `1 / saturation`.
pub fn accumulate(stream: &EventStream, cfg: &AccumConfig) -> Result<FrameStack> {
    let counts = accumulate_counts(stream, cfg)?;
    let values = counts.counts.iter().map(|&c| cfg.normalize(c)).collect();
    FrameStack::new(
        counts.frames,
        counts.height,
        counts.width,
        cfg.dt_us,
        values,
    )
}
