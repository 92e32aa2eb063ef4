//! Synthetic bat/ball clips.
//!
//! The ball is a disk moving in a straight line until it touches the bat,
//! after which it bounces off the bat surface with the configured
//! restitution. The bat is a capsule (segment plus radius) rotating about its
//! knob with `theta(t) = theta0 + omega t + alpha t^2 / 2`. Speeds are in
//! pixels per millisecond, angles in radians, times in microseconds unless a
//! name says otherwise.
//!
//! Events are transition triggered: at every micro step the union of both
//! objects is rasterized, and each pixel that becomes covered emits a
//! positive event while each pixel that becomes uncovered emits a negative
//! one. Pixel `(x, y)` is covered by a shape when its center `(x, y)` lies
//! inside the shape.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::events::{Event, EventStream, Polarity};
use crate::grid::LabelStack;
use crate::math::{cos, floor, sin, sqrt};
use crate::{Error, Result};

/// Surface clearance at or below which the objects count as touching.
pub const CONTACT_CLEARANCE_PX: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub width: u32,
    pub height: u32,
    pub ball_radius: f64,
    /// Ball speed before contact, px/ms.
    pub ball_speed: f64,
    /// Ball center at t = 0.
    pub ball_start: [f64; 2],
    /// Direction of travel before contact (normalized internally).
    pub ball_direction: [f64; 2],
    /// Rotation center of the bat (the knob end).
    pub bat_pivot: [f64; 2],
    pub bat_length: f64,
    pub bat_half_width: f64,
    pub bat_angle0: f64,
    /// rad/ms
    pub bat_omega: f64,
    /// rad/ms^2
    pub bat_alpha: f64,
    /// Outgoing / incoming normal relative speed at contact, in (0, 1].
    pub restitution: f64,
    /// Background events per pixel per second.
    pub noise_rate: f64,
    pub micro_step_us: u32,
    /// Frame interval of the ground-truth mask grid.
    pub frame_dt_us: u32,
    pub clip_duration_us: u64,
    pub seed: u64,
}

/// Geometry of a designed contact, used to aim a scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwingSpec {
    /// Time of first touch, ms.
    pub contact_ms: f64,
    /// Bat direction at contact.
    pub contact_angle: f64,
    /// Contact point along the bat, as a fraction of its length from the knob.
    pub contact_fraction: f64,
    /// Deviation of the ball path from the bat normal, rad.
    pub incidence: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let base = SceneConfig {
            width: 346,
            height: 260,
            ball_radius: 4.0,
            ball_speed: 2.5,
            ball_start: [0.0, 0.0],
            ball_direction: [-1.0, 0.0],
            bat_pivot: [150.0, 60.0],
            bat_length: 100.0,
            bat_half_width: 3.0,
            bat_angle0: 0.0,
            bat_omega: -0.04,
            bat_alpha: 0.0,
            restitution: 0.5,
            noise_rate: 0.1,
            micro_step_us: 10,
            frame_dt_us: 100,
            clip_duration_us: 20_000,
            seed: 0,
        };
        base.aimed(&SwingSpec {
            contact_ms: 10.0,
            contact_angle: core::f64::consts::FRAC_PI_2,
            contact_fraction: 0.6,
            incidence: 0.0,
        })
    }
}

impl SceneConfig {
    /// Compact 128x128 variant used for quick experiments.
    pub fn compact() -> Self {
        let base = SceneConfig {
            width: 128,
            height: 128,
            bat_pivot: [50.0, 20.0],
            bat_length: 70.0,
            bat_omega: -0.06,
            clip_duration_us: 10_000,
            ..SceneConfig::default()
        };
        base.aimed(&SwingSpec {
            contact_ms: 5.0,
            contact_angle: core::f64::consts::FRAC_PI_2,
            contact_fraction: 0.6,
            incidence: 0.0,
        })
    }

    /// Solves the initial bat angle and ball start so that, in free flight,
    /// the ball touches the bat side at `swing.contact_ms`.
    pub fn aimed(&self, swing: &SwingSpec) -> SceneConfig {
        let tc = swing.contact_ms;
        let theta_c = swing.contact_angle;
        let u = [cos(theta_c), sin(theta_c)];
        let u_perp = [-u[1], u[0]];
        // side of the bat that is moving forward
        let side = if self.bat_omega + self.bat_alpha * tc >= 0.0 {
            1.0
        } else {
            -1.0
        };
        let n = [side * u_perp[0], side * u_perp[1]];
        let s = swing.contact_fraction * self.bat_length;
        let offset = self.ball_radius + self.bat_half_width;
        let contact_center = [
            self.bat_pivot[0] + s * u[0] + offset * n[0],
            self.bat_pivot[1] + s * u[1] + offset * n[1],
        ];
        let (si, ci) = (sin(swing.incidence), cos(swing.incidence));
        let dir = [-(n[0] * ci - n[1] * si), -(n[0] * si + n[1] * ci)];
        let travel = self.ball_speed * tc;
        SceneConfig {
            ball_start: [
                contact_center[0] - travel * dir[0],
                contact_center[1] - travel * dir[1],
            ],
            ball_direction: dir,
            bat_angle0: theta_c - self.bat_omega * tc - 0.5 * self.bat_alpha * tc * tc,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::config("width/height", "must be > 0"));
        }
        if !(self.ball_radius >= 1.0) {
            return Err(Error::config("ball_radius", "must be >= 1"));
        }
        if !(self.ball_speed >= 0.0 && self.ball_speed.is_finite()) {
            return Err(Error::config("ball_speed", "must be finite and >= 0"));
        }
        if self.ball_speed > 0.0 && norm(self.ball_direction) == 0.0 {
            return Err(Error::config("ball_direction", "must be non-zero"));
        }
        if !(self.bat_length >= 0.0) || !(self.bat_half_width > 0.0) {
            return Err(Error::config("bat_length/bat_half_width", "must be positive"));
        }
        if !(self.restitution > 0.0 && self.restitution <= 1.0) {
            return Err(Error::config("restitution", "must be in (0, 1]"));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(Error::config("noise_rate", "must be finite and >= 0"));
        }
        if self.micro_step_us < 1 {
            return Err(Error::config("micro_step_us", "must be >= 1"));
        }
        if self.frame_dt_us < 1 {
            return Err(Error::config("frame_dt_us", "must be >= 1"));
        }
        if self.clip_duration_us < self.frame_dt_us as u64 {
            return Err(Error::ClipTooShort {
                duration_us: self.clip_duration_us,
                dt_us: self.frame_dt_us,
            });
        }
        let inside = |p: [f64; 2]| {
            p[0] >= 0.0
                && p[1] >= 0.0
                && p[0] <= (self.width - 1) as f64
                && p[1] <= (self.height - 1) as f64
        };
        let tip = [
            self.bat_pivot[0] + self.bat_length * cos(self.bat_angle0),
            self.bat_pivot[1] + self.bat_length * sin(self.bat_angle0),
        ];
        if !inside(self.ball_start) {
            return Err(Error::DegenerateScene(format!(
                "ball starts outside the canvas at {:?}",
                self.ball_start
            )));
        }
        if !inside(self.bat_pivot) || !inside(tip) {
            return Err(Error::DegenerateScene(
                "bat starts outside the canvas".into(),
            ));
        }
        Ok(())
    }

    /// Number of ground-truth frames.
    pub fn frame_count(&self) -> usize {
        (self.clip_duration_us / self.frame_dt_us as u64) as usize
    }

    /// Clearance sampling step, us.
    pub fn fine_step_us(&self) -> f64 {
        self.micro_step_us as f64 / 10.0
    }
}

#[inline]
fn norm(v: [f64; 2]) -> f64 {
    sqrt(v[0] * v[0] + v[1] * v[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Bounce {
    t_us: f64,
    position: [f64; 2],
    velocity: [f64; 2],
}

/// Kinematic model of one configured scene.
#[derive(Debug, Clone)]
pub struct Scene {
    cfg: SceneConfig,
    velocity: [f64; 2],
    bounce: Option<Bounce>,
}

impl Scene {
    pub fn new(cfg: &SceneConfig) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.ball_direction;
        let len = norm(d);
        let velocity = if len > 0.0 {
            [cfg.ball_speed * d[0] / len, cfg.ball_speed * d[1] / len]
        } else {
            [0.0, 0.0]
        };
        let mut scene = Scene {
            cfg: cfg.clone(),
            velocity,
            bounce: None,
        };
        scene.bounce = scene.find_bounce();
        Ok(scene)
    }

    pub fn config(&self) -> &SceneConfig {
        &self.cfg
    }

    fn free_ball(&self, t_us: f64) -> [f64; 2] {
        let t = t_us / 1000.0;
        [
            self.cfg.ball_start[0] + self.velocity[0] * t,
            self.cfg.ball_start[1] + self.velocity[1] * t,
        ]
    }

    /// Ball center at time `t_us`.
    pub fn ball_center(&self, t_us: f64) -> [f64; 2] {
        match self.bounce {
            Some(b) if t_us > b.t_us => {
                let dt = (t_us - b.t_us) / 1000.0;
                [
                    b.position[0] + b.velocity[0] * dt,
                    b.position[1] + b.velocity[1] * dt,
                ]
            }
            _ => self.free_ball(t_us),
        }
    }

    pub fn bat_angle(&self, t_us: f64) -> f64 {
        let t = t_us / 1000.0;
        self.cfg.bat_angle0 + self.cfg.bat_omega * t + 0.5 * self.cfg.bat_alpha * t * t
    }

    /// Bat axis endpoints (knob, tip).
    pub fn bat_segment(&self, t_us: f64) -> ([f64; 2], [f64; 2]) {
        let th = self.bat_angle(t_us);
        let p = self.cfg.bat_pivot;
        let l = self.cfg.bat_length;
        (p, [p[0] + l * cos(th), p[1] + l * sin(th)])
    }

    /// Center of mass of the bat capsule.
    pub fn bat_center(&self, t_us: f64) -> [f64; 2] {
        let (a, b) = self.bat_segment(t_us);
        [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
    }

    fn clearance_with(&self, ball: [f64; 2], t_us: f64) -> f64 {
        let (a, b) = self.bat_segment(t_us);
        let (_, dist) = closest_on_segment(ball, a, b);
        dist - self.cfg.ball_radius - self.cfg.bat_half_width
    }

    /// Signed surface-to-surface distance between ball and bat.
    pub fn clearance(&self, t_us: f64) -> f64 {
        self.clearance_with(self.ball_center(t_us), t_us)
    }

    fn fine_samples(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.cfg.fine_step_us();
        let n = floor(self.cfg.clip_duration_us as f64 / h) as u64;
        (0..=n).map(move |j| j as f64 * h)
    }

    fn find_bounce(&self) -> Option<Bounce> {
        let t_c = self
            .fine_samples()
            .find(|&t| self.clearance_with(self.free_ball(t), t) <= 0.0)?;
        let c = self.free_ball(t_c);
        let (a, b) = self.bat_segment(t_c);
        let (s, dist) = closest_on_segment(c, a, b);
        if dist == 0.0 {
            return None;
        }
        let q = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        let n = [(c[0] - q[0]) / dist, (c[1] - q[1]) / dist];
        // velocity of the contact point on the rotating bat
        let t = t_c / 1000.0;
        let omega = self.cfg.bat_omega + self.cfg.bat_alpha * t;
        let r = [q[0] - a[0], q[1] - a[1]];
        let v_bat = [-omega * r[1], omega * r[0]];
        let rel = [self.velocity[0] - v_bat[0], self.velocity[1] - v_bat[1]];
        let vn = rel[0] * n[0] + rel[1] * n[1];
        if vn >= 0.0 {
            return None;
        }
        let k = (1.0 + self.cfg.restitution) * vn;
        Some(Bounce {
            t_us: t_c,
            position: c,
            velocity: [v_bat[0] + rel[0] - k * n[0], v_bat[1] + rel[1] - k * n[1]],
        })
    }

    /// Time of the first touch in free flight, if the ball bounces.
    pub fn bounce_time_us(&self) -> Option<f64> {
        self.bounce.map(|b| b.t_us)
    }

    /// Minimum-clearance time on the fine grid; earliest sample on ties.
    pub fn closest_approach(&self) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        for t in self.fine_samples() {
            let c = self.clearance(t);
            if c < best.1 {
                best = (t, c);
            }
        }
        best
    }

    fn ball_covers(&self, center: [f64; 2], x: usize, y: usize) -> bool {
        let dx = x as f64 - center[0];
        let dy = y as f64 - center[1];
        dx * dx + dy * dy <= self.cfg.ball_radius * self.cfg.ball_radius
    }

    fn bat_covers(&self, seg: ([f64; 2], [f64; 2]), x: usize, y: usize) -> bool {
        let (_, d) = closest_on_segment([x as f64, y as f64], seg.0, seg.1);
        d <= self.cfg.bat_half_width
    }

    fn ball_box(&self, center: [f64; 2]) -> PixelBox {
        let r = self.cfg.ball_radius;
        PixelBox::from_extent(
            center[0] - r,
            center[1] - r,
            center[0] + r,
            center[1] + r,
            &self.cfg,
        )
    }

    fn bat_box(&self, seg: ([f64; 2], [f64; 2])) -> PixelBox {
        let hw = self.cfg.bat_half_width;
        let (a, b) = seg;
        PixelBox::from_extent(
            a[0].min(b[0]) - hw,
            a[1].min(b[1]) - hw,
            a[0].max(b[0]) + hw,
            a[1].max(b[1]) + hw,
            &self.cfg,
        )
    }

    /// Label map at `t_us`: 0 background, 1 bat, 2 ball (ball wins overlaps).
    pub fn rasterize_labels(&self, t_us: f64, out: &mut [u8]) {
        let w = self.cfg.width as usize;
        out.fill(0);
        let seg = self.bat_segment(t_us);
        for (x, y) in self.bat_box(seg).pixels() {
            if self.bat_covers(seg, x, y) {
                out[y * w + x] = 1;
            }
        }
        let c = self.ball_center(t_us);
        for (x, y) in self.ball_box(c).pixels() {
            if self.ball_covers(c, x, y) {
                out[y * w + x] = 2;
            }
        }
    }

    /// Union occupancy of ball and bat at `t_us` over the whole canvas.
    pub fn occupancy(&self, t_us: f64) -> Vec<bool> {
        let mut labels = vec![0u8; (self.cfg.width * self.cfg.height) as usize];
        self.rasterize_labels(t_us, &mut labels);
        labels.into_iter().map(|l| l != 0).collect()
    }
}

/// Parameter along `a -> b` of the closest point to `p`, and the distance.
fn closest_on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, f64) {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let s = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [ap[0] - s * ab[0], ap[1] - s * ab[1]];
    (s, norm(d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PixelBox {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl PixelBox {
    const EMPTY: PixelBox = PixelBox {
        x0: 1,
        y0: 1,
        x1: 0,
        y1: 0,
    };

    fn from_extent(xmin: f64, ymin: f64, xmax: f64, ymax: f64, cfg: &SceneConfig) -> Self {
        let wmax = (cfg.width - 1) as f64;
        let hmax = (cfg.height - 1) as f64;
        let x0 = libm::ceil(xmin).max(0.0);
        let y0 = libm::ceil(ymin).max(0.0);
        let x1 = floor(xmax).min(wmax);
        let y1 = floor(ymax).min(hmax);
        if x0 > x1 || y0 > y1 {
            return PixelBox::EMPTY;
        }
        PixelBox {
            x0: x0 as usize,
            y0: y0 as usize,
            x1: x1 as usize,
            y1: y1 as usize,
        }
    }

    fn is_empty(&self) -> bool {
        self.x0 > self.x1 || self.y0 > self.y1
    }

    fn union(self, other: PixelBox) -> PixelBox {
        if self.is_empty() {
            return other;
        }
        if other.is_empty() {
            return self;
        }
        PixelBox {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }

    fn pixels(self) -> impl Iterator<Item = (usize, usize)> {
        let xs = if self.is_empty() { 1..0 } else { self.x0..self.x1 + 1 };
        let ys = if self.is_empty() { 1..0 } else { self.y0..self.y1 + 1 };
        ys.flat_map(move |y| xs.clone().map(move |x| (x, y)))
    }
}

/// A simulated clip with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipBundle {
    pub stream: EventStream,
    /// Labels at `t_k = k * frame_dt_us`, `k = 1..=K`.
    pub gt_masks: LabelStack,
    pub gt_impact_us: Option<f64>,
    /// Number of noise events included in `stream`.
    pub noise_events: usize,
    pub config: SceneConfig,
}

impl ClipBundle {
    /// 1-based frame index closest to the ground-truth impact.
    pub fn impact_frame(&self) -> Option<usize> {
        self.gt_impact_us
            .map(|t| crate::math::round(t / self.config.frame_dt_us as f64) as usize)
    }
}

/// Ground-truth contact time: argmin of the surface clearance sampled every
/// `micro_step / 10` us, reported only when the minimum is within
/// [`CONTACT_CLEARANCE_PX`].
pub fn compute_gt_impact(cfg: &SceneConfig) -> Result<Option<f64>> {
    let scene = Scene::new(cfg)?;
    let (t, c) = scene.closest_approach();
    Ok((c <= CONTACT_CLEARANCE_PX).then_some(t))
}

pub fn simulate_clip(cfg: &SceneConfig) -> Result<ClipBundle> {
    let scene = Scene::new(cfg)?;
    let (w, h) = (cfg.width as usize, cfg.height as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut occupied = scene.occupancy(0.0);
    let mut events = Vec::new();
    let step = cfg.micro_step_us as u64;
    let steps = cfg.clip_duration_us / step;
    let mut prev_box = PixelBox::EMPTY;
    {
        let c = scene.ball_center(0.0);
        let seg = scene.bat_segment(0.0);
        prev_box = prev_box.union(scene.ball_box(c)).union(scene.bat_box(seg));
    }
    for j in 1..=steps {
        let t = (j * step) as f64;
        let t_prev = (j - 1) * step;
        let c = scene.ball_center(t);
        let seg = scene.bat_segment(t);
        let cur_box = scene.ball_box(c).union(scene.bat_box(seg));
        for (x, y) in prev_box.union(cur_box).pixels() {
            let now = scene.ball_covers(c, x, y) || scene.bat_covers(seg, x, y);
            let i = y * w + x;
            if now != occupied[i] {
                occupied[i] = now;
                let p = if now {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                };
                let ts = t_prev + rng.random_range(0..step);
                events.push(Event::new(ts, x as u32, y as u32, p));
            }
        }
        prev_box = cur_box;
    }

    let rate = cfg.noise_rate * (w * h) as f64 * cfg.clip_duration_us as f64 * 1e-6;
    let mut noise_events = 0;
    if rate > 0.0 && cfg.clip_duration_us > 0 {
        let poisson = Poisson::new(rate).map_err(|e| Error::config("noise_rate", format!("{e}")))?;
        noise_events = poisson.sample(&mut rng) as usize;
        for _ in 0..noise_events {
            let t = rng.random_range(0..cfg.clip_duration_us);
            let x = rng.random_range(0..cfg.width);
            let y = rng.random_range(0..cfg.height);
            let p = if rng.random_bool(0.5) {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            events.push(Event::new(t, x, y, p));
        }
    }
    let stream = EventStream::new(cfg.width, cfg.height, events, Some(cfg.clip_duration_us))?;

    let frames = cfg.frame_count();
    let n = w * h;
    let mut labels = vec![0u8; frames * n];
    for k in 1..=frames {
        let t = (k as u64 * cfg.frame_dt_us as u64) as f64;
        scene.rasterize_labels(t, &mut labels[(k - 1) * n..k * n]);
    }
    let gt_masks = LabelStack::new(frames, h, w, labels)?;
    let (t_min, c_min) = scene.closest_approach();

    Ok(ClipBundle {
        stream,
        gt_masks,
        gt_impact_us: (c_min <= CONTACT_CLEARANCE_PX).then_some(t_min),
        noise_events,
        config: cfg.clone(),
    })
}

/// Draws a varied swing around `base`, keeping both objects on the canvas
/// at the start and at contact. The result carries `seed`.
pub fn random_swing(base: &SceneConfig, seed: u64) -> Result<SceneConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x5eed);
    let duration_ms = base.clip_duration_us as f64 / 1000.0;
    let (bx, by) = (base.bat_pivot[0], base.bat_pivot[1]);
    for _ in 0..256 {
        let mut cfg = SceneConfig {
            ball_speed: base.ball_speed * rng.random_range(0.8..1.25),
            bat_omega: base.bat_omega * rng.random_range(0.8..1.25),
            bat_pivot: [bx + rng.random_range(-5.0..5.0), by + rng.random_range(-3.0..3.0)],
            seed,
            ..base.clone()
        };
        let swing = SwingSpec {
            contact_ms: duration_ms * rng.random_range(0.4..0.6),
            contact_angle: core::f64::consts::FRAC_PI_2 + rng.random_range(-0.25..0.25),
            contact_fraction: rng.random_range(0.45..0.7),
            incidence: rng.random_range(-0.15..0.15),
        };
        cfg = cfg.aimed(&swing);
        if cfg.validate().is_err() {
            continue;
        }
        let scene = Scene::new(&cfg)?;
        let t_c = swing.contact_ms * 1000.0;
        let r = cfg.ball_radius + 1.0;
        let fits = |p: [f64; 2]| {
            p[0] >= r && p[1] >= r && p[0] <= cfg.width as f64 - 1.0 - r && p[1] <= cfg.height as f64 - 1.0 - r
        };
        let (_, tip) = scene.bat_segment(t_c);
        if fits(scene.ball_center(0.0)) && fits(scene.ball_center(t_c)) && fits(tip) {
            return Ok(cfg);
        }
    }
    Err(Error::DegenerateScene(format!(
        "no swing fits the {}x{} canvas",
        base.width, base.height
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn static_scene() -> SceneConfig {
        SceneConfig {
            width: 64,
            height: 48,
            ball_speed: 0.0,
            ball_start: [40.0, 20.0],
            bat_pivot: [10.0, 10.0],
            bat_length: 20.0,
            bat_angle0: 0.3,
            bat_omega: 0.0,
            bat_alpha: 0.0,
            noise_rate: 0.0,
            clip_duration_us: 2_000,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn static_scene_emits_nothing() {
        let clip = simulate_clip(&static_scene()).unwrap();
        assert!(clip.stream.is_empty());
        assert_eq!(clip.gt_masks.frames(), 20);
    }

    #[test]
    fn far_pass_has_no_impact() {
        let cfg = SceneConfig {
            ball_start: [40.0, 40.0],
            ball_direction: [1.0, 0.0],
            ball_speed: 1.0,
            ..static_scene()
        };
        let scene = Scene::new(&cfg).unwrap();
        assert!(scene.closest_approach().1 >= 10.0);
        assert_eq!(compute_gt_impact(&cfg).unwrap(), None);
    }

    #[test]
    fn touching_at_rest_reports_time_zero() {
        // bat along y = 10 from x = 10..30, ball resting on its top surface
        let cfg = SceneConfig {
            ball_start: [20.0, 10.0 - 3.0 - 4.0 + 0.2],
            bat_angle0: 0.0,
            ..static_scene()
        };
        assert_eq!(compute_gt_impact(&cfg).unwrap(), Some(0.0));
    }

    #[test]
    fn ball_off_canvas_is_degenerate() {
        let cfg = SceneConfig {
            ball_start: [-30.0, 5.0],
            ..static_scene()
        };
        assert!(matches!(Scene::new(&cfg), Err(Error::DegenerateScene(_))));
    }

    #[test]
    fn default_scene_bounces_near_design_time() {
        let scene = Scene::new(&SceneConfig::default()).unwrap();
        let t = scene.bounce_time_us().unwrap();
        assert!((t - 10_000.0).abs() < 200.0, "bounce at {t}");
        let (ta, c) = scene.closest_approach();
        assert!(c <= 0.0);
        assert!((ta - t).abs() <= 1.0);
        // separating afterwards
        assert!(scene.clearance(t + 2000.0) > 2.0);
    }

    #[test]
    fn random_swings_are_valid() {
        for seed in 0..10 {
            let cfg = random_swing(&SceneConfig::compact(), seed).unwrap();
            assert!(compute_gt_impact(&cfg).unwrap().is_some(), "seed {seed}");
        }
    }
}
