use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use evimpact::formats::{read_imu_csv, read_json, write_json};
use evimpact::pipeline::{self, MaskSource, EVALS_JSON, REPORT_CSV, REPORT_JSON};
use evimpact::RunConfig;
use evimpact_core::eval::{report, ClipEval};
use evimpact_core::impact::{imu_detect, latency_stats};

#[derive(Parser)]
#[command(name = "evimpact", version, about = "Event-camera bat-ball impact timing")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration JSON; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output (and stage input) directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    clips: Option<usize>,
    /// Maximum clips processed concurrently.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    #[arg(long, global = true)]
    window_frames: Option<u32>,
    #[arg(long, global = true)]
    lambda_ce: Option<f64>,
    #[arg(long, global = true)]
    lambda_dice: Option<f64>,
    #[arg(long, global = true)]
    lambda_smooth: Option<f64>,
    #[arg(long, global = true)]
    lambda_circ: Option<f64>,
    /// Background, bat and ball weights.
    #[arg(long, global = true, value_delimiter = ',', num_args = 3)]
    class_weights: Option<Vec<f64>>,
    #[arg(long, global = true)]
    sigma_ms: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate clips with ground truth and coarse masks.
    Simulate {
        /// Write the ground truth as coarse masks instead of degrading it.
        #[arg(long)]
        clean: bool,
    },
    /// Accumulate each clip's events into EVF1 frames.
    Accumulate,
    /// Fuse and refine each clip's coarse masks.
    Refine,
    /// Estimate each clip's impact time.
    Estimate {
        #[arg(long, value_enum, default_value = "refined")]
        source: MaskSource,
    },
    /// Score impact estimates against ground truth and write the report.
    Evaluate {
        /// Score a ClipEval JSON list instead of clip directories.
        #[arg(long)]
        evals: Option<PathBuf>,
    },
    /// Detect impacts in IMU traces and summarize their lag behind ground truth.
    ImuCompare {
        /// IMU trace CSV; repeat for a batch.
        #[arg(long, required = true)]
        imu: Vec<PathBuf>,
        /// Ground-truth impact time per trace, ms.
        #[arg(long, required = true)]
        gt_ms: Vec<f64>,
        #[arg(long, default_value_t = 1000.0)]
        rate_hz: f64,
    },
    /// Rebuild the report from an evals JSON file.
    Report {
        #[arg(long)]
        evals: Option<PathBuf>,
    },
}

fn run_config(c: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &c.out {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.clips {
        cfg.clips = v;
    }
    if let Some(v) = c.parallelism {
        cfg.parallelism = v;
    }
    if let Some(v) = c.window_frames {
        cfg.accum.window_frames = v;
    }
    if let Some(v) = c.lambda_ce {
        cfg.loss.lambda_ce = v;
    }
    if let Some(v) = c.lambda_dice {
        cfg.loss.lambda_dice = v;
    }
    if let Some(v) = c.lambda_smooth {
        cfg.loss.lambda_smooth = v;
        cfg.refiner.lambda_smooth = v;
    }
    if let Some(v) = c.lambda_circ {
        cfg.loss.lambda_circ = v;
        cfg.refiner.lambda_circ = v;
    }
    if let Some(v) = &c.class_weights {
        cfg.loss.class_weights = [v[0], v[1], v[2]];
    }
    if let Some(v) = c.sigma_ms {
        cfg.thresholds.sigma_ms = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn clip_dirs(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let dirs = pipeline::list_clips(&cfg.out_dir)?;
    if dirs.is_empty() {
        bail!("no clip directories under {}", cfg.out_dir.display());
    }
    Ok(dirs)
}

fn write_report(cfg: &RunConfig, evals: &[ClipEval]) -> anyhow::Result<()> {
    let r = report(evals, &cfg.thresholds)?;
    let csv = r.to_csv();
    std::fs::create_dir_all(&cfg.out_dir).with_context(|| cfg.out_dir.display().to_string())?;
    let path = cfg.out_dir.join(REPORT_CSV);
    std::fs::write(&path, &csv).with_context(|| path.display().to_string())?;
    write_json(&r, cfg.out_dir.join(REPORT_JSON))?;
    print!("{csv}");
    Ok(())
}

fn evals_path(cfg: &RunConfig, given: &Option<PathBuf>) -> PathBuf {
    given.clone().unwrap_or_else(|| cfg.out_dir.join(EVALS_JSON))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = run_config(&cli.common)?;
    match cli.command {
        Command::Simulate { clean } => {
            let cfg = RunConfig {
                clean_masks: cfg.clean_masks || clean,
                ..cfg
            };
            let ids: Vec<usize> = (0..cfg.clips).collect();
            let metas = pipeline::run_parallel(cfg.parallelism, &ids, |&i| {
                pipeline::simulate(&cfg, i, &pipeline::clip_dir(&cfg.out_dir, i))
            })?;
            let contact = metas.iter().filter(|m| m.gt_impact_us.is_some()).count();
            println!("simulated {} clips ({contact} with contact) in {}", metas.len(), cfg.out_dir.display());
        }
        Command::Accumulate => {
            let dirs = clip_dirs(&cfg)?;
            pipeline::run_parallel(cfg.parallelism, &dirs, |d| pipeline::accumulate_stage(&cfg, d))?;
            println!("accumulated {} clips", dirs.len());
        }
        Command::Refine => {
            let dirs = clip_dirs(&cfg)?;
            let outs = pipeline::run_parallel(cfg.parallelism, &dirs, |d| pipeline::refine_stage(&cfg, d))?;
            let invalid: usize = outs.iter().map(|o| o.invalid_frames.len()).sum();
            println!("refined {} clips ({invalid} invalid frames)", dirs.len());
        }
        Command::Estimate { source } => {
            let dirs = clip_dirs(&cfg)?;
            let res = pipeline::run_parallel(cfg.parallelism, &dirs, |d| pipeline::estimate_stage(&cfg, d, source))?;
            for r in &res {
                println!("{} t_impact_ms={} frame={}", r.clip_id, r.t_impact_ms, r.frame_index);
            }
        }
        Command::Evaluate { evals } => {
            let evals: Vec<ClipEval> = match evals {
                Some(p) => read_json(p)?,
                None => {
                    let dirs = clip_dirs(&cfg)?;
                    let all = pipeline::run_parallel(cfg.parallelism, &dirs, |d| pipeline::clip_eval(d))?;
                    let skipped = all.iter().filter(|e| e.is_none()).count();
                    if skipped > 0 {
                        eprintln!("skipped {skipped} clips without contact");
                    }
                    let evals: Vec<ClipEval> = all.into_iter().flatten().collect();
                    write_json(&evals, cfg.out_dir.join(EVALS_JSON))?;
                    evals
                }
            };
            write_report(&cfg, &evals)?;
        }
        Command::Report { evals } => {
            let evals: Vec<ClipEval> = read_json(evals_path(&cfg, &evals))?;
            write_report(&cfg, &evals)?;
        }
        Command::ImuCompare { imu, gt_ms, rate_hz } => {
            if imu.len() != gt_ms.len() {
                bail!("{} IMU traces but {} ground-truth times", imu.len(), gt_ms.len());
            }
            let mut lags = Vec::with_capacity(imu.len());
            for (path, gt) in imu.iter().zip(&gt_ms) {
                let trace = read_imu_csv(path, rate_hz)?;
                let i = imu_detect(&trace).with_context(|| path.display().to_string())?;
                let lag = trace.time_ms(i) - gt;
                println!("{} sample={i} lag_ms={lag}", display(path));
                lags.push(lag);
            }
            let s = latency_stats(&lags)?;
            println!(
                "latency_ms mean={} std={} min={} max={} n={}",
                s.mean, s.std, s.min, s.max, s.n
            );
        }
    }
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
