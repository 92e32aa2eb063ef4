//! Core algorithms for event-based bat/ball impact timing.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, CSV parsing and
//! the command line front end live in the `evimpact` companion crate.
//!
//! Pipeline stages:
//!
//! 1. **Events** – event streams and sliding-window accumulation into dense frames.
//! 2. **Scene** – synthetic bat/ball clips with exact contact times, and
//!    degradation of ground-truth masks into noisy coarse masks.
//! 3. **Loss** – weighted cross-entropy, Dice, anisotropic TV smoothness and the
//!    isoperimetric circularity term, with analytic gradients.
//! 4. **Refine** – bidirectional coarse-mask fusion and per-frame energy minimization.
//! 5. **Impact** – weighted centroids, distance series and argmin timing, plus the
//!    IMU doubling detector.
//! 6. **Eval** – MAE / success-rate metrics and per-scenario reports.
#![no_std]

extern crate alloc;

mod error;
mod math;

pub mod degrade;
pub mod eval;
pub mod events;
pub mod grid;
pub mod impact;
pub mod loss;
pub mod refine;
pub mod scene;

pub use error::{Error, Result};
pub use grid::{ChannelStack, Class, Grid, LabelStack, ProbMap, ProbStack};
