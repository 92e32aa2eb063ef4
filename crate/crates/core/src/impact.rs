//! Centroid tracking, distance-minimum impact timing, and the IMU baseline.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::grid::{Class, Grid, ProbStack};
use crate::math::sqrt;
use crate::{Error, Result};

/// Minimum probability mass for a centroid to count as measured.
pub const MASS_MIN: f64 = 1.0;

/// Probability-weighted centroid in pixel-center coordinates, `None` when
/// the channel holds less than `mass_min`.
pub fn weighted_centroid(ch: &Grid, mass_min: f64) -> Option<(f64, f64)> {
    let (mut m, mut sx, mut sy) = (0.0, 0.0, 0.0);
    let w = ch.width();
    for (i, &p) in ch.as_slice().iter().enumerate() {
        if p != 0.0 {
            m += p;
            sx += (i % w) as f64 * p;
            sy += (i / w) as f64 * p;
        }
    }
    (m >= mass_min && m > 0.0).then(|| (sx / m, sy / m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMeasure {
    /// 1-based frame index.
    pub k: usize,
    pub ball: Option<(f64, f64)>,
    pub bat: Option<(f64, f64)>,
    pub d: Option<f64>,
}

impl FrameMeasure {
    pub fn new(k: usize, ball: Option<(f64, f64)>, bat: Option<(f64, f64)>) -> Self {
        let d = match (ball, bat) {
            (Some(a), Some(b)) => Some(sqrt((a.0 - b.0) * (a.0 - b.0) + (a.1 - b.1) * (a.1 - b.1))),
            _ => None,
        };
        FrameMeasure { k, ball, bat, d }
    }

    pub fn valid(&self) -> bool {
        self.d.is_some()
    }

    fn invalidate(&mut self) {
        self.ball = None;
        self.bat = None;
        self.d = None;
    }
}

/// Centroids and ball-bat distance for every frame of `stack`.
///
/// `excluded` lists 1-based frames to treat as unmeasurable regardless of
/// content (frames the refiner flagged).
pub fn distance_series(stack: &ProbStack, mass_min: f64, excluded: &[usize]) -> Result<Vec<FrameMeasure>> {
    let series: Vec<FrameMeasure> = (0..stack.frames())
        .map(|k| {
            let map = stack.map(k);
            let mut m = FrameMeasure::new(
                k + 1,
                weighted_centroid(map.channel(Class::Ball), mass_min),
                weighted_centroid(map.channel(Class::Bat), mass_min),
            );
            if excluded.contains(&(k + 1)) {
                m.invalidate();
            }
            m
        })
        .collect();
    if !series.iter().any(FrameMeasure::valid) {
        return Err(Error::NoMeasurableFrames);
    }
    Ok(series)
}

/// Frame of minimal distance (earliest on ties) and its time `k * dt`.
pub fn estimate_impact(series: &[FrameMeasure], dt_us: f64) -> Result<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for m in series {
        if let Some(d) = m.d {
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, m.k));
            }
        }
    }
    let (_, k) = best.ok_or(Error::NoMeasurableFrames)?;
    Ok((k as f64 * dt_us, k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactResult {
    pub per_frame: Vec<FrameMeasure>,
    pub t_impact_us: f64,
    pub frame_index: usize,
}

impl ImpactResult {
    pub fn from_stack(stack: &ProbStack, dt_us: f64, mass_min: f64, excluded: &[usize]) -> Result<Self> {
        let per_frame = distance_series(stack, mass_min, excluded)?;
        let (t_impact_us, frame_index) = estimate_impact(&per_frame, dt_us)?;
        Ok(ImpactResult {
            per_frame,
            t_impact_us,
            frame_index,
        })
    }

    pub fn t_impact_ms(&self) -> f64 {
        self.t_impact_us / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImuTrace {
    pub rate_hz: f64,
    pub samples: Vec<[f64; 3]>,
}

impl ImuTrace {
    pub fn new(rate_hz: f64, samples: Vec<[f64; 3]>) -> Result<Self> {
        if !(rate_hz > 0.0 && rate_hz.is_finite()) {
            return Err(Error::config("rate_hz", "must be > 0"));
        }
        Ok(ImuTrace { rate_hz, samples })
    }

    pub fn squared_norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|a| a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
    }

    /// Time of sample `i` in milliseconds.
    pub fn time_ms(&self, i: usize) -> f64 {
        i as f64 * 1000.0 / self.rate_hz
    }
}

/// First sample whose squared norm exceeds twice that of its predecessor.
pub fn imu_detect(trace: &ImuTrace) -> Result<usize> {
    if trace.samples.len() < 2 {
        return Err(Error::Empty("IMU trace needs at least 2 samples"));
    }
    let norms: Vec<f64> = trace.squared_norms().collect();
    norms
        .windows(2)
        .position(|w| w[1] > 2.0 * w[0])
        .map(|i| i + 1)
        .ok_or(Error::NoImpactDetected)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

pub fn latency_stats(lags_ms: &[f64]) -> Result<LatencyStats> {
    if lags_ms.is_empty() {
        return Err(Error::Empty("latency list"));
    }
    let n = lags_ms.len() as f64;
    let mean = lags_ms.iter().sum::<f64>() / n;
    let var = lags_ms.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
    Ok(LatencyStats {
        mean,
        std: sqrt(var),
        min: lags_ms.iter().copied().fold(f64::INFINITY, f64::min),
        max: lags_ms.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        n: lags_ms.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ProbMap;
    use alloc::vec;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn single_pixel_centroid() {
        let mut g = Grid::zeros(10, 10);
        g.set(3, 7, 0.5);
        assert_eq!(weighted_centroid(&g, 0.5), Some((3.0, 7.0)));
        assert_eq!(weighted_centroid(&g, MASS_MIN), None);
    }

    #[test]
    fn symmetric_masses() {
        let mut g = Grid::zeros(11, 1);
        g.set(0, 0, 1.0);
        g.set(10, 0, 1.0);
        assert_eq!(weighted_centroid(&g, MASS_MIN), Some((5.0, 0.0)));
    }

    fn one_frame(ball: &[(usize, usize)], bat: &[(usize, usize)]) -> ProbStack {
        let (w, h) = (8, 8);
        let mut labels = vec![0u8; w * h];
        for &(x, y) in ball {
            labels[y * w + x] = 2;
        }
        for &(x, y) in bat {
            labels[y * w + x] = 1;
        }
        ProbStack::from_maps(&[ProbMap::one_hot(w, h, &labels).unwrap()]).unwrap()
    }

    #[test]
    fn three_four_five() {
        let s = one_frame(&[(0, 0)], &[(3, 4)]);
        let series = distance_series(&s, MASS_MIN, &[]).unwrap();
        assert!(approx(series[0].d.unwrap(), 5.0));
    }

    #[test]
    fn empty_ball_is_unmeasurable() {
        let s = one_frame(&[], &[(3, 4)]);
        assert!(matches!(distance_series(&s, MASS_MIN, &[]), Err(Error::NoMeasurableFrames)));
    }

    #[test]
    fn excluded_frames_are_invalid() {
        let s = one_frame(&[(0, 0)], &[(3, 4)]);
        assert!(distance_series(&s, MASS_MIN, &[1]).is_err());
    }

    fn series(ds: &[f64]) -> Vec<FrameMeasure> {
        ds.iter()
            .enumerate()
            .map(|(i, &d)| FrameMeasure {
                k: i + 1,
                ball: Some((0.0, 0.0)),
                bat: Some((d, 0.0)),
                d: Some(d),
            })
            .collect()
    }

    #[test]
    fn argmin_examples() {
        assert_eq!(estimate_impact(&series(&[3.0, 2.0, 1.0, 2.0, 3.0]), 100.0).unwrap(), (300.0, 3));
        assert_eq!(estimate_impact(&series(&[1.0, 0.5, 0.5, 1.0]), 100.0).unwrap().1, 2);
        assert!(estimate_impact(&[], 100.0).is_err());
    }

    fn trace(norms: &[f64]) -> ImuTrace {
        ImuTrace::new(1000.0, norms.iter().map(|n| [n.sqrt(), 0.0, 0.0]).collect()).unwrap()
    }

    #[test]
    fn imu_examples() {
        assert_eq!(imu_detect(&trace(&[1.0, 1.0, 2.1, 5.0])).unwrap(), 2);
        assert!(matches!(imu_detect(&trace(&[1.0, 1.5, 2.5])), Err(Error::NoImpactDetected)));
        assert!(imu_detect(&trace(&[1.0])).is_err());
    }

    #[test]
    fn latency_examples() {
        let s = latency_stats(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.std, s.min, s.max), (2.0, 0.0, 2.0, 2.0));
        let s = latency_stats(&[0.40, 7.07]).unwrap();
        assert!(approx(s.mean, 3.735));
        assert_eq!((s.min, s.max), (0.40, 7.07));
        assert!(latency_stats(&[]).is_err());
    }
}
