use std::collections::BTreeMap;

use evimpact_core::degrade::{degrade_coarse, DegradeConfig, Direction, COARSE_BALL};
use evimpact_core::events::Polarity;
use evimpact_core::scene::{compute_gt_impact, random_swing, simulate_clip, Scene, SceneConfig};

fn quiet(cfg: SceneConfig) -> SceneConfig {
    SceneConfig { noise_rate: 0.0, ..cfg }
}

#[test]
fn same_seed_same_clip() {
    let cfg = random_swing(&SceneConfig::compact(), 9).unwrap();
    assert_eq!(simulate_clip(&cfg).unwrap(), simulate_clip(&cfg).unwrap());
    let other = SceneConfig { seed: 10, ..cfg.clone() };
    assert_ne!(simulate_clip(&cfg).unwrap().stream, simulate_clip(&other).unwrap().stream);
}

/// Replays occupancy at every micro step: each transition must appear as
/// exactly one event of matching polarity inside that step.
#[test]
fn events_are_occupancy_transitions() {
    for seed in 0..3 {
        let cfg = quiet(random_swing(&SceneConfig::compact(), seed).unwrap());
        let clip = simulate_clip(&cfg).unwrap();
        let scene = Scene::new(&cfg).unwrap();
        let step = cfg.micro_step_us as u64;
        let w = cfg.width as usize;

        let mut expected: BTreeMap<(u64, u32, u32), Polarity> = BTreeMap::new();
        let mut prev = scene.occupancy(0.0);
        for j in 1..=cfg.clip_duration_us / step {
            let cur = scene.occupancy((j * step) as f64);
            for (i, (&a, &b)) in prev.iter().zip(&cur).enumerate() {
                if a != b {
                    let p = if b { Polarity::Positive } else { Polarity::Negative };
                    expected.insert((j, (i % w) as u32, (i / w) as u32), p);
                }
            }
            prev = cur;
        }
        let mut found = BTreeMap::new();
        for e in clip.stream.events() {
            let j = e.t / step + 1;
            assert!(found.insert((j, e.x, e.y), e.p).is_none(), "duplicate event {e:?}");
        }
        assert_eq!(found, expected, "seed {seed}");
        assert_eq!(clip.noise_events, 0);
    }
}

#[test]
fn polarity_balance_on_default_clip() {
    let cfg = SceneConfig {
        clip_duration_us: 40_000,
        ..SceneConfig::default()
    };
    let clip = simulate_clip(&cfg).unwrap();
    let scene = Scene::new(&cfg).unwrap();
    let covered = |t: f64| scene.occupancy(t).iter().filter(|&&c| c).count() as i64;
    let (start, end) = (covered(0.0), covered(cfg.clip_duration_us as f64));

    let pos = clip.stream.events().iter().filter(|e| e.p == Polarity::Positive).count() as i64;
    let neg = clip.stream.len() as i64 - pos;
    assert!((pos - neg).abs() <= end + clip.noise_events as i64);

    // Exact form without noise: net polarity equals net change in coverage.
    let clean = simulate_clip(&quiet(cfg)).unwrap();
    let pos = clean.stream.events().iter().filter(|e| e.p == Polarity::Positive).count() as i64;
    let neg = clean.stream.len() as i64 - pos;
    assert_eq!(pos - neg, end - start);
}

#[test]
fn gt_ball_centroid_tracks_analytic_center() {
    for seed in 0..3 {
        let cfg = random_swing(&SceneConfig::compact(), seed).unwrap();
        let clip = simulate_clip(&cfg).unwrap();
        let scene = Scene::new(&cfg).unwrap();
        let (w, h) = (cfg.width as f64, cfg.height as f64);
        let r = cfg.ball_radius;
        for k in 1..=clip.gt_masks.frames() {
            let t = (k as u64 * cfg.frame_dt_us as u64) as f64;
            let c = scene.ball_center(t);
            if c[0] < r || c[1] < r || c[0] > w - 1.0 - r || c[1] > h - 1.0 - r {
                continue;
            }
            let (mut n, mut sx, mut sy) = (0.0, 0.0, 0.0);
            for (i, &l) in clip.gt_masks.frame(k - 1).iter().enumerate() {
                if l == 2 {
                    n += 1.0;
                    sx += (i % cfg.width as usize) as f64;
                    sy += (i / cfg.width as usize) as f64;
                }
            }
            let d = ((sx / n - c[0]).powi(2) + (sy / n - c[1]).powi(2)).sqrt();
            assert!(d <= 1.0, "seed {seed} frame {k}: {d}");
        }
    }
}

/// Stationary vertical bat; the ball runs horizontally just past its tip,
/// closest at 20 ms with clearance 0.3 px, so it never bounces.
#[test]
fn symmetric_graze_at_twenty_ms() {
    let (r, hw) = (4.0, 3.0);
    let tip_y = 90.0;
    let cfg = SceneConfig {
        width: 200,
        height: 140,
        ball_radius: r,
        ball_speed: 2.0,
        ball_start: [60.0, tip_y + r + hw + 0.3],
        ball_direction: [1.0, 0.0],
        bat_pivot: [100.0, 50.0],
        bat_length: tip_y - 50.0,
        bat_half_width: hw,
        bat_angle0: std::f64::consts::FRAC_PI_2,
        bat_omega: 0.0,
        bat_alpha: 0.0,
        clip_duration_us: 40_000,
        ..SceneConfig::default()
    };
    // closest approach where the ball's x reaches the bat axis
    let t_closed_form = (100.0 - 60.0) / 2.0 * 1000.0;
    let t = compute_gt_impact(&cfg).unwrap().expect("contact");
    assert!((t - t_closed_form).abs() <= cfg.micro_step_us as f64 / 10.0, "{t}");
    assert_eq!(Scene::new(&cfg).unwrap().bounce_time_us(), None);
}

#[test]
fn resting_contact_reports_time_zero() {
    let cfg = SceneConfig {
        width: 64,
        height: 48,
        ball_speed: 0.0,
        ball_start: [20.0, 30.0 + 4.0 + 3.0],
        bat_pivot: [10.0, 30.0],
        bat_length: 20.0,
        bat_angle0: 0.0,
        bat_omega: 0.0,
        bat_alpha: 0.0,
        clip_duration_us: 2_000,
        ..SceneConfig::default()
    };
    assert_eq!(compute_gt_impact(&cfg).unwrap(), Some(0.0));
}

#[test]
fn gt_impact_lies_inside_clip() {
    for seed in 0..20 {
        let cfg = random_swing(&SceneConfig::compact(), seed).unwrap();
        let t = compute_gt_impact(&cfg).unwrap().expect("swing reaches the ball");
        assert!((0.0..=cfg.clip_duration_us as f64).contains(&t));
    }
}

#[test]
fn dropout_rate_is_plausible() {
    let cfg = SceneConfig {
        clip_duration_us: 10_000,
        ..SceneConfig::compact()
    };
    let clip = simulate_clip(&cfg).unwrap();
    assert_eq!(clip.gt_masks.frames(), 100);
    let d = DegradeConfig {
        seed: 4,
        ..DegradeConfig::default()
    };
    let coarse = degrade_coarse(&clip.gt_masks, &d, Direction::Fwd, clip.impact_frame()).unwrap();
    let zeroed = (0..100)
        .filter(|&k| coarse.plane(k, COARSE_BALL).iter().all(|&v| v == 0.0))
        .count();
    // P(X < 2) + P(X > 25) for X ~ Bin(100, 0.1) is about 3.3e-4
    assert!((2..=25).contains(&zeroed), "{zeroed}");
}
