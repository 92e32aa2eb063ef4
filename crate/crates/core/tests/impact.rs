use evimpact_core::degrade::{degrade_coarse, DegradeConfig, Direction};
use evimpact_core::impact::{
    distance_series, estimate_impact, imu_detect, latency_stats, weighted_centroid, FrameMeasure, ImpactResult,
    ImuTrace, MASS_MIN,
};
use evimpact_core::refine::fuse_bidirectional;
use evimpact_core::scene::{random_swing, simulate_clip, Scene, SceneConfig};
use evimpact_core::{Error, Grid, ProbMap, ProbStack};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gaussian_blob_centroid() {
    let (cx, cy, s) = (100.25, 50.75, 3.0);
    let g = Grid::from_fn(200, 100, |x, y| {
        let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        (-d2 / (2.0 * s * s)).exp()
    });
    let (mut m, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for y in 0..100 {
        for x in 0..200 {
            let v = g.get(x, y);
            m += v;
            sx += x as f64 * v;
            sy += y as f64 * v;
        }
    }
    let (x, y) = weighted_centroid(&g, MASS_MIN).unwrap();
    assert!((x - sx / m).abs() < 1e-9 && (y - sy / m).abs() < 1e-9);
    assert!((x - cx).abs() < 1e-2 && (y - cy).abs() < 1e-2);
}

fn blob(rng: &mut ChaCha8Rng, w: usize, h: usize, ox: usize, oy: usize) -> Grid {
    let patch: Vec<f64> = (0..25).map(|_| rng.random::<f64>()).collect();
    Grid::from_fn(w, h, |x, y| {
        if (ox..ox + 5).contains(&x) && (oy..oy + 5).contains(&y) {
            patch[(y - oy) * 5 + x - ox]
        } else {
            0.0
        }
    })
}

proptest! {
    #[test]
    fn centroid_translates_exactly(seed in any::<u64>(), dx in 0usize..10, dy in 0usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = blob(&mut rng, 24, 24, 3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = blob(&mut rng, 24, 24, 3 + dx, 4 + dy);
        let (ca, cb) = (weighted_centroid(&a, 0.0), weighted_centroid(&b, 0.0));
        prop_assume!(ca.is_some());
        let (ca, cb) = (ca.unwrap(), cb.unwrap());
        prop_assert!((cb.0 - ca.0 - dx as f64).abs() < 1e-9);
        prop_assert!((cb.1 - ca.1 - dy as f64).abs() < 1e-9);
    }

    #[test]
    fn centroid_ignores_scale(seed in any::<u64>(), s in 0.1f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = blob(&mut rng, 16, 16, 5, 5);
        let scaled = Grid::from_vec(16, 16, a.as_slice().iter().map(|v| v * s).collect()).unwrap();
        prop_assume!(scaled.sum() >= MASS_MIN);
        let (ca, cs) = (weighted_centroid(&a, MASS_MIN).unwrap(), weighted_centroid(&scaled, MASS_MIN).unwrap());
        prop_assert!((ca.0 - cs.0).abs() < 1e-9 && (ca.1 - cs.1).abs() < 1e-9);
    }

    #[test]
    fn argmin_survives_monotone_maps(ds in prop::collection::vec(0.0f64..50.0, 1..40), a in 0.1f64..5.0, b in -3.0f64..3.0) {
        let series = |f: &dyn Fn(f64) -> f64| -> Vec<FrameMeasure> {
            ds.iter().enumerate().map(|(i, &d)| FrameMeasure { k: i + 1, ball: None, bat: None, d: Some(f(d)) }).collect()
        };
        let base = estimate_impact(&series(&|d| d), 100.0).unwrap();
        prop_assert_eq!(base, estimate_impact(&series(&|d| a * d + b), 100.0).unwrap());
        prop_assert_eq!(base, estimate_impact(&series(&|d| (a * d).exp()), 100.0).unwrap());
        prop_assert_eq!(base, estimate_impact(&series(&|d| d.powi(3)), 100.0).unwrap());
    }

    #[test]
    fn imu_detection_is_scale_free(seed in any::<u64>(), s in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<[f64; 3]> = (0..50).map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()]).collect();
        let base = imu_detect(&ImuTrace::new(1000.0, samples.clone()).unwrap()).ok();
        let scaled = samples.iter().map(|a| a.map(|v| v * s)).collect();
        prop_assert_eq!(base, imu_detect(&ImuTrace::new(1000.0, scaled).unwrap()).ok());
    }
}

#[test]
fn step_trace_detected_at_step() {
    let g = 9.81f64;
    let samples: Vec<[f64; 3]> = (0..100)
        .map(|i| {
            let a = if i >= 37 { g * 10f64.sqrt() } else { g };
            [0.0, 0.0, a]
        })
        .collect();
    let trace = ImuTrace::new(1000.0, samples).unwrap();
    assert_eq!(imu_detect(&trace).unwrap(), 37);
    assert_eq!(trace.time_ms(37), 37.0);
}

#[test]
fn flat_trace_raises_no_impact() {
    let trace = ImuTrace::new(1000.0, vec![[0.0, 0.0, 9.81]; 20]).unwrap();
    assert!(matches!(imu_detect(&trace), Err(Error::NoImpactDetected)));
}

#[test]
fn latency_matches_two_pass_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    let lags: Vec<f64> = (0..28).map(|_| rng.random_range(0.4..7.07)).collect();
    let n = lags.len() as f64;
    let mean = lags.iter().sum::<f64>() / n;
    let var = lags.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    let s = latency_stats(&lags).unwrap();
    assert!((s.mean - mean).abs() < 1e-12);
    assert!((s.std - var.sqrt()).abs() < 1e-12);
    assert_eq!(s.min, lags.iter().cloned().fold(f64::INFINITY, f64::min));
    assert_eq!(s.max, lags.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
}

fn gt_stack(labels: &evimpact_core::LabelStack) -> ProbStack {
    ProbStack::new(labels.to_one_hot()).unwrap()
}

#[test]
fn clean_clip_distances_follow_geometry() {
    for seed in 0..3 {
        let cfg = random_swing(&SceneConfig::compact(), seed).unwrap();
        let clip = simulate_clip(&cfg).unwrap();
        let scene = Scene::new(&cfg).unwrap();
        let series = distance_series(&gt_stack(&clip.gt_masks), MASS_MIN, &[]).unwrap();
        let (w, h) = (cfg.width as f64, cfg.height as f64);
        let margin = cfg.ball_radius + cfg.bat_half_width;
        let inside = |p: [f64; 2]| p[0] >= margin && p[1] >= margin && p[0] <= w - 1.0 - margin && p[1] <= h - 1.0 - margin;
        let mut checked = 0;
        for m in &series {
            let t = (m.k as u64 * cfg.frame_dt_us as u64) as f64;
            let (a, b) = scene.bat_segment(t);
            let ball = scene.ball_center(t);
            // skip frames where the ball hides part of the bat or anything leaves the canvas
            if !(inside(a) && inside(b) && inside(ball)) || scene.clearance(t) < 1.0 {
                continue;
            }
            let c = scene.bat_center(t);
            let d = ((ball[0] - c[0]).powi(2) + (ball[1] - c[1]).powi(2)).sqrt();
            assert!((m.d.unwrap() - d).abs() <= 1.0, "seed {seed} frame {}", m.k);
            checked += 1;
        }
        assert!(checked > 10);
    }
}

#[test]
fn clean_masks_time_the_impact_within_two_frames() {
    for seed in 0..3 {
        let cfg = random_swing(&SceneConfig::compact(), seed).unwrap();
        let clip = simulate_clip(&cfg).unwrap();
        let r = ImpactResult::from_stack(&gt_stack(&clip.gt_masks), 100.0, MASS_MIN, &[]).unwrap();
        assert!((r.t_impact_us - clip.gt_impact_us.unwrap()).abs() <= 200.0, "seed {seed}");
        assert_eq!(r.t_impact_us, r.frame_index as f64 * 100.0);
    }
}

#[test]
fn default_clip_with_identity_degradation() {
    let clip = simulate_clip(&SceneConfig::default()).unwrap();
    let id = DegradeConfig::identity();
    let f = degrade_coarse(&clip.gt_masks, &id, Direction::Fwd, clip.impact_frame()).unwrap();
    let b = degrade_coarse(&clip.gt_masks, &id, Direction::Bwd, clip.impact_frame()).unwrap();
    let fused = fuse_bidirectional(&f, &b, 0.2).unwrap();
    let r = ImpactResult::from_stack(&fused.targets, 100.0, MASS_MIN, &fused.invalid_frames()).unwrap();
    assert!((r.t_impact_us - clip.gt_impact_us.unwrap()).abs() <= 200.0);
}

#[test]
fn measures_are_valid_exactly_when_both_centroids_exist() {
    let (w, h) = (10, 10);
    let mut maps = Vec::new();
    for k in 0..4 {
        let mut labels = vec![0u8; w * h];
        if k != 1 {
            labels[22] = 2;
            labels[23] = 2;
        }
        if k != 2 {
            labels[77] = 1;
        }
        maps.push(ProbMap::one_hot(w, h, &labels).unwrap());
    }
    let s = ProbStack::from_maps(&maps).unwrap();
    for m in distance_series(&s, MASS_MIN, &[4]).unwrap() {
        assert_eq!(m.valid(), m.ball.is_some() && m.bat.is_some(), "{m:?}");
        assert_eq!(m.valid(), m.k == 1);
    }
}
