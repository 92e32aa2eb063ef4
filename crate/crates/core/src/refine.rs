//! Bidirectional coarse-mask fusion and per-frame mask refinement.
//!
//! Each frame is refined independently by gradient descent on per-pixel
//! logits `theta` (three channels, softmax to probabilities `P`), minimizing
//!
//! ```text
//! E(P) = l_fid * CE_soft(P, Q) + l_smooth * Smooth(P) + l_circ * Circ(P_ball)
//! ```
//!
//! where `Q` are the fused coarse targets. The step multiplies the
//! gradient of `N * E` (`N` = pixel count). A step that raises the energy is
//! halved, up to ten times; if none of them helps the descent stops.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::degrade::{COARSE_BALL, COARSE_BAT};
use crate::events::FrameStack;
use crate::grid::{ChannelStack, Class, Grid, ProbMap, ProbStack};
use crate::loss::{self, LossWeights};
use crate::math::{abs, exp, ln};
use crate::{Error, Result};

const MAX_HALVINGS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefinerConfig {
    pub lambda_fid: f64,
    pub lambda_smooth: f64,
    pub lambda_circ: f64,
    pub step: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// A direction counts as dropped when its mask mass falls below this
    /// fraction of the clip median.
    pub mass_tau: f64,
}

impl Default for RefinerConfig {
    fn default() -> Self {
        let w = LossWeights::default();
        RefinerConfig {
            lambda_fid: 1.0,
            lambda_smooth: w.lambda_smooth,
            lambda_circ: w.lambda_circ,
            step: 0.5,
            max_iters: 200,
            rel_tol: 1e-6,
            mass_tau: 0.2,
        }
    }
}

impl RefinerConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("lambda_fid", self.lambda_fid),
            ("lambda_smooth", self.lambda_smooth),
            ("lambda_circ", self.lambda_circ),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be finite and >= 0"));
            }
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config("step", "must be > 0"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::config("rel_tol", "must be > 0"));
        }
        if !(self.mass_tau > 0.0 && self.mass_tau < 1.0) {
            return Err(Error::config("mass_tau", "must be in (0, 1)"));
        }
        Ok(())
    }
}

/// Where a fused object channel comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Average,
    Fwd,
    Bwd,
    Dropped,
}

/// Per-frame fusion decisions for the (ball, bat) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionPlan {
    sources: Vec<[Source; 2]>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn check_pair(fwd: &ChannelStack, bwd: &ChannelStack) -> Result<()> {
    if fwd.channels() != 2 {
        return Err(Error::dims("2 channels (ball, bat)", fwd.channels()));
    }
    if !fwd.same_geometry(bwd) {
        return Err(Error::dims(fwd.shape_string(), bwd.shape_string()));
    }
    Ok(())
}

impl FusionPlan {
    pub fn new(fwd: &ChannelStack, bwd: &ChannelStack, mass_tau: f64) -> Result<Self> {
        check_pair(fwd, bwd)?;
        let frames = fwd.frames();
        let mass = |s: &ChannelStack, k: usize, c: usize| -> f64 {
            s.plane(k, c).iter().map(|&v| v as f64).sum()
        };
        let mut sources = vec![[Source::Average; 2]; frames];
        for (slot, c) in [COARSE_BALL, COARSE_BAT].into_iter().enumerate() {
            let mf: Vec<f64> = (0..frames).map(|k| mass(fwd, k, c)).collect();
            let mb: Vec<f64> = (0..frames).map(|k| mass(bwd, k, c)).collect();
            let tf = mass_tau * median(mf.clone());
            let tb = mass_tau * median(mb.clone());
            for k in 0..frames {
                let (ok_f, ok_b) = (mf[k] >= tf, mb[k] >= tb);
                sources[k][slot] = match (ok_f, ok_b) {
                    (true, true) => Source::Average,
                    (true, false) => Source::Fwd,
                    (false, true) => Source::Bwd,
                    (false, false) => Source::Dropped,
                };
            }
        }
        Ok(FusionPlan { sources })
    }

    pub fn frames(&self) -> usize {
        self.sources.len()
    }

    /// Sources for (ball, bat) at 0-based frame `k`.
    pub fn sources(&self, k: usize) -> [Source; 2] {
        self.sources[k]
    }

    /// A frame is flagged when either object is missing in both directions.
    pub fn flagged(&self, k: usize) -> bool {
        self.sources[k].contains(&Source::Dropped)
    }

    /// Fused targets `Q` for frame `k`. The background is the clamped
    /// complement, then each pixel is renormalized to sum to one.
    pub fn targets(&self, fwd: &ChannelStack, bwd: &ChannelStack, k: usize) -> ProbMap {
        let (w, h) = (fwd.width(), fwd.height());
        let n = w * h;
        let pick = |slot: usize, c: usize| -> Vec<f64> {
            let (f, b) = (fwd.plane(k, c), bwd.plane(k, c));
            match self.sources[k][slot] {
                Source::Average => (0..n).map(|i| (f[i] as f64 + b[i] as f64) / 2.0).collect(),
                Source::Fwd => f.iter().map(|&v| v as f64).collect(),
                Source::Bwd => b.iter().map(|&v| v as f64).collect(),
                Source::Dropped => vec![0.0; n],
            }
        };
        let mut ball = pick(0, COARSE_BALL);
        let mut bat = pick(1, COARSE_BAT);
        let mut bg = vec![0.0; n];
        for i in 0..n {
            let b = (1.0 - ball[i] - bat[i]).clamp(0.0, 1.0);
            let s = b + ball[i] + bat[i];
            bg[i] = b / s;
            ball[i] /= s;
            bat[i] /= s;
        }
        let g = |d: Vec<f64>| Grid::from_vec(w, h, d).expect("plane geometry");
        ProbMap::new(g(bg), g(bat), g(ball)).expect("shared geometry")
    }
}

/// Fused targets for a whole clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Fused {
    pub targets: ProbStack,
    pub flagged: Vec<bool>,
}

impl Fused {
    /// 1-based indices of flagged frames.
    pub fn invalid_frames(&self) -> Vec<usize> {
        flagged_indices(&self.flagged)
    }
}

fn flagged_indices(flags: &[bool]) -> Vec<usize> {
    flags
        .iter()
        .enumerate()
        .filter_map(|(k, &f)| f.then_some(k + 1))
        .collect()
}

/// Fuses forward and backward coarse (ball, bat) stacks.
pub fn fuse_bidirectional(fwd: &ChannelStack, bwd: &ChannelStack, mass_tau: f64) -> Result<Fused> {
    let plan = FusionPlan::new(fwd, bwd, mass_tau)?;
    let maps: Vec<ProbMap> = (0..plan.frames()).map(|k| plan.targets(fwd, bwd, k)).collect();
    Ok(Fused {
        targets: ProbStack::from_maps(&maps)?,
        flagged: (0..plan.frames()).map(|k| plan.flagged(k)).collect(),
    })
}

/// Event frames plus forward/backward coarse masks for a clip.
#[derive(Debug, Clone, Copy)]
pub struct RefineInput<'a> {
    pub events: &'a FrameStack,
    pub fwd: &'a ChannelStack,
    pub bwd: &'a ChannelStack,
}

impl<'a> RefineInput<'a> {
    pub fn new(events: &'a FrameStack, fwd: &'a ChannelStack, bwd: &'a ChannelStack) -> Result<Self> {
        check_pair(fwd, bwd)?;
        if events.frames() != fwd.frames()
            || events.height() != fwd.height()
            || events.width() != fwd.width()
        {
            return Err(Error::dims(
                alloc::format!("{}x{}x{}", events.frames(), events.height(), events.width()),
                alloc::format!("{}x{}x{}", fwd.frames(), fwd.height(), fwd.width()),
            ));
        }
        Ok(RefineInput { events, fwd, bwd })
    }

    pub fn frames(&self) -> usize {
        self.fwd.frames()
    }

    /// The five input channels of frame `k`: event frame, forward ball,
    /// forward bat, backward ball, backward bat.
    pub fn stacked(&self, k: usize) -> [Grid; 5] {
        [
            self.events.grid(k),
            self.fwd.grid(k, COARSE_BALL),
            self.fwd.grid(k, COARSE_BAT),
            self.bwd.grid(k, COARSE_BALL),
            self.bwd.grid(k, COARSE_BAT),
        ]
    }
}

/// Result of refining one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRefinement {
    pub probs: ProbMap,
    /// Energy after initialization and after every accepted step.
    pub energies: Vec<f64>,
    pub flagged: bool,
}

impl FrameRefinement {
    pub fn final_energy(&self) -> Option<f64> {
        self.energies.last().copied()
    }
}

struct Problem<'a> {
    q: &'a ProbMap,
    cfg: &'a RefinerConfig,
    w: &'a LossWeights,
    n: f64,
}

impl Problem<'_> {
    fn softmax(theta: &[Vec<f64>; 3], p: &mut ProbMap) {
        let [a, b, c] = theta;
        let [pa, pb, pc] = p.channels_mut();
        let (pa, pb, pc) = (pa.as_mut_slice(), pb.as_mut_slice(), pc.as_mut_slice());
        for i in 0..a.len() {
            let m = a[i].max(b[i]).max(c[i]);
            let (ea, eb, ec) = (exp(a[i] - m), exp(b[i] - m), exp(c[i] - m));
            let s = ea + eb + ec;
            pa[i] = ea / s;
            pb[i] = eb / s;
            pc[i] = ec / s;
        }
    }

    fn fidelity(&self, p: &ProbMap) -> f64 {
        let eps = self.w.eps_log;
        let mut total = 0.0;
        for c in Class::ALL {
            let (pc, qc) = (p.channel(c).as_slice(), self.q.channel(c).as_slice());
            for i in 0..pc.len() {
                if qc[i] != 0.0 {
                    total += qc[i] * ln(pc[i].max(eps));
                }
            }
        }
        -total / self.n
    }

    fn energy(&self, p: &ProbMap) -> f64 {
        let mut e = self.cfg.lambda_fid * self.fidelity(p);
        if self.cfg.lambda_smooth != 0.0 {
            e += self.cfg.lambda_smooth * loss::smooth(p);
        }
        if self.cfg.lambda_circ != 0.0 {
            e += self.cfg.lambda_circ * loss::circ(p.channel(Class::Ball), self.w.eps_grad, self.w.eps_circ);
        }
        e
    }

    /// Gradient of `N * E` with respect to the logits.
    fn logit_grad(&self, p: &ProbMap, gp: &mut [Vec<f64>; 3], out: &mut [Vec<f64>; 3]) {
        let eps = self.w.eps_log;
        let n = self.n;
        for c in Class::ALL {
            let g = &mut gp[c.index()];
            g.fill(0.0);
            let (pc, qc) = (p.channel(c).as_slice(), self.q.channel(c).as_slice());
            for i in 0..g.len() {
                if pc[i] > eps {
                    g[i] = -self.cfg.lambda_fid * qc[i] / pc[i];
                }
            }
            if self.cfg.lambda_smooth != 0.0 {
                loss::add_smooth_grad(p.channel(c), n * self.cfg.lambda_smooth / 3.0, g);
            }
        }
        if self.cfg.lambda_circ != 0.0 {
            loss::add_circ_grad(
                p.channel(Class::Ball),
                self.w.eps_grad,
                self.w.eps_circ,
                n * self.cfg.lambda_circ,
                &mut gp[Class::Ball.index()],
            );
        }
        let [pa, pb, pc] = p.channels();
        let (pa, pb, pc) = (pa.as_slice(), pb.as_slice(), pc.as_slice());
        for i in 0..pa.len() {
            let mean = pa[i] * gp[0][i] + pb[i] * gp[1][i] + pc[i] * gp[2][i];
            out[0][i] = pa[i] * (gp[0][i] - mean);
            out[1][i] = pb[i] * (gp[1][i] - mean);
            out[2][i] = pc[i] * (gp[2][i] - mean);
        }
    }
}

/// Refines one frame from its fused targets.
pub fn refine_frame(q: &ProbMap, cfg: &RefinerConfig, w: &LossWeights) -> FrameRefinement {
    let problem = Problem {
        q,
        cfg,
        w,
        n: (q.width() * q.height()) as f64,
    };
    let mut theta: [Vec<f64>; 3] = q
        .channels()
        .clone()
        .map(|g| g.into_vec().into_iter().map(|v| ln(v + w.eps_log)).collect());
    let mut p = q.clone();
    Problem::softmax(&theta, &mut p);
    let mut energy = problem.energy(&p);
    let mut energies = vec![energy];

    let len = theta[0].len();
    let mut grad = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    let mut gp = grad.clone();
    let mut trial = theta.clone();
    let mut p_trial = p.clone();
    for _ in 0..cfg.max_iters {
        problem.logit_grad(&p, &mut gp, &mut grad);
        let mut step = cfg.step;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            for c in 0..3 {
                for i in 0..len {
                    trial[c][i] = theta[c][i] - step * grad[c][i];
                }
            }
            Problem::softmax(&trial, &mut p_trial);
            let e = problem.energy(&p_trial);
            if e <= energy {
                accepted = Some(e);
                break;
            }
            step *= 0.5;
        }
        let Some(e) = accepted else { break };
        let decrease = (energy - e) / abs(energy).max(f64::MIN_POSITIVE);
        core::mem::swap(&mut theta, &mut trial);
        core::mem::swap(&mut p, &mut p_trial);
        energy = e;
        energies.push(e);
        if decrease < cfg.rel_tol {
            break;
        }
    }
    FrameRefinement {
        probs: p,
        energies,
        flagged: false,
    }
}

/// Refined probabilities for a whole clip.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutput {
    pub probs: ProbStack,
    /// 1-based indices of frames where both directions lost an object.
    pub invalid_frames: Vec<usize>,
    /// Final energy per frame; `None` for invalid frames.
    pub final_energies: Vec<Option<f64>>,
}

/// Fusion plus per-frame refinement, split so frames can be scheduled freely.
pub struct RefineJob<'a> {
    input: RefineInput<'a>,
    plan: FusionPlan,
    cfg: RefinerConfig,
    weights: LossWeights,
}

impl<'a> RefineJob<'a> {
    pub fn new(input: RefineInput<'a>, cfg: &RefinerConfig, weights: &LossWeights) -> Result<Self> {
        cfg.validate()?;
        weights.validate()?;
        let plan = FusionPlan::new(input.fwd, input.bwd, cfg.mass_tau)?;
        Ok(RefineJob {
            input,
            plan,
            cfg: *cfg,
            weights: *weights,
        })
    }

    pub fn frames(&self) -> usize {
        self.plan.frames()
    }

    pub fn plan(&self) -> &FusionPlan {
        &self.plan
    }

    pub fn targets(&self, k: usize) -> ProbMap {
        self.plan.targets(self.input.fwd, self.input.bwd, k)
    }

    /// Refines 0-based frame `k`. Flagged frames come back uniform.
    pub fn frame(&self, k: usize) -> FrameRefinement {
        if self.plan.flagged(k) {
            return FrameRefinement {
                probs: ProbMap::uniform(self.input.fwd.width(), self.input.fwd.height()),
                energies: Vec::new(),
                flagged: true,
            };
        }
        refine_frame(&self.targets(k), &self.cfg, &self.weights)
    }

    pub fn assemble(&self, frames: Vec<FrameRefinement>) -> Result<RefineOutput> {
        if frames.len() != self.frames() {
            return Err(Error::dims(self.frames(), frames.len()));
        }
        let flags: Vec<bool> = frames.iter().map(|f| f.flagged).collect();
        let final_energies = frames.iter().map(|f| f.final_energy()).collect();
        let maps: Vec<ProbMap> = frames.into_iter().map(|f| f.probs).collect();
        Ok(RefineOutput {
            probs: ProbStack::from_maps(&maps)?,
            invalid_frames: flagged_indices(&flags),
            final_energies,
        })
    }
}

/// Sequential refinement of every frame.
pub fn refine_clip(input: RefineInput<'_>, cfg: &RefinerConfig, w: &LossWeights) -> Result<RefineOutput> {
    let job = RefineJob::new(input, cfg, w)?;
    let frames = (0..job.frames()).map(|k| job.frame(k)).collect();
    job.assemble(frames)
}
