use evimpact_core::events::{accumulate, accumulate_counts, AccumConfig, Event, EventStream, Polarity};
use evimpact_core::Error;
use proptest::prelude::*;

/// Frame-by-frame filter and count straight from the window definition.
fn brute_force(stream: &EventStream, cfg: &AccumConfig) -> Vec<u32> {
    let dt = cfg.dt_us as u64;
    let k_max = stream.duration_us() / dt;
    let (w, h) = (stream.width() as usize, stream.height() as usize);
    let mut out = vec![0u32; k_max as usize * w * h];
    for k in 1..=k_max {
        let t_k = k * dt;
        let lo = t_k as i64 - (cfg.window_frames as u64 * dt) as i64;
        for e in stream.events() {
            if e.p == Polarity::Positive && (e.t as i64) >= lo && e.t < t_k {
                out[(k as usize - 1) * w * h + e.y as usize * w + e.x as usize] += 1;
            }
        }
    }
    out
}

fn stream_strategy() -> impl Strategy<Value = EventStream> {
    (1u32..6, 1u32..5, 50u64..3000).prop_flat_map(|(w, h, dur)| {
        prop::collection::vec((0..=dur, 0..w, 0..h, any::<bool>()), 0..200).prop_map(move |raw| {
            let events = raw
                .into_iter()
                .map(|(t, x, y, p)| Event::new(t, x, y, if p { Polarity::Positive } else { Polarity::Negative }))
                .collect();
            EventStream::new(w, h, events, Some(dur)).unwrap()
        })
    })
}

fn cfg_strategy() -> impl Strategy<Value = AccumConfig> {
    (1u32..120, 1u32..25, 1u32..5).prop_map(|(dt_us, window_frames, saturation)| AccumConfig {
        dt_us,
        window_frames,
        saturation,
    })
}

proptest! {
    #[test]
    fn counts_match_brute_force(stream in stream_strategy(), cfg in cfg_strategy()) {
        prop_assume!(stream.duration_us() >= cfg.dt_us as u64);
        let counts = accumulate_counts(&stream, &cfg).unwrap();
        prop_assert_eq!(counts.counts, brute_force(&stream, &cfg));
    }

    #[test]
    fn unit_window_telescopes(stream in stream_strategy(), dt in 1u32..120) {
        let cfg = AccumConfig { dt_us: dt, window_frames: 1, saturation: 1 };
        prop_assume!(stream.duration_us() >= dt as u64);
        let c = accumulate_counts(&stream, &cfg).unwrap();
        let end = c.frames as u64 * dt as u64;
        let n = c.width * c.height;
        let mut expected = vec![0u32; n];
        for e in stream.events() {
            if e.p == Polarity::Positive && e.t < end {
                expected[e.y as usize * c.width + e.x as usize] += 1;
            }
        }
        let mut summed = vec![0u32; n];
        for k in 0..c.frames {
            for (s, v) in summed.iter_mut().zip(c.frame(k)) {
                *s += v;
            }
        }
        prop_assert_eq!(summed, expected);
    }

    #[test]
    fn longer_windows_never_decrease(stream in stream_strategy(), cfg in cfg_strategy(), extra in 1u32..10) {
        prop_assume!(stream.duration_us() >= cfg.dt_us as u64);
        let a = accumulate_counts(&stream, &cfg).unwrap();
        let b = accumulate_counts(&stream, &AccumConfig { window_frames: cfg.window_frames + extra, ..cfg }).unwrap();
        prop_assert!(a.counts.iter().zip(&b.counts).all(|(x, y)| x <= y));
    }

    #[test]
    fn time_shift_shifts_frames(stream in stream_strategy(), cfg in cfg_strategy(), m in 1u64..4) {
        prop_assume!(stream.duration_us() >= cfg.dt_us as u64);
        let shift = m * cfg.dt_us as u64;
        let shifted: Vec<Event> = stream.events().iter().map(|e| Event { t: e.t + shift, ..*e }).collect();
        let s2 = EventStream::new(stream.width(), stream.height(), shifted, Some(stream.duration_us() + shift)).unwrap();
        let a = accumulate_counts(&stream, &cfg).unwrap();
        let b = accumulate_counts(&s2, &cfg).unwrap();
        prop_assert_eq!(b.frames, a.frames + m as usize);
        for k in 0..a.frames {
            prop_assert_eq!(a.frame(k), b.frame(k + m as usize));
        }
    }

    #[test]
    fn values_stay_in_unit_interval(stream in stream_strategy(), cfg in cfg_strategy()) {
        prop_assume!(stream.duration_us() >= cfg.dt_us as u64);
        let f = accumulate(&stream, &cfg).unwrap();
        prop_assert!(f.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn single_event_lights_ten_frames() {
    let s = EventStream::new(16, 8, vec![Event::new(50, 7, 3, Polarity::Positive)], Some(2000)).unwrap();
    let cfg = AccumConfig {
        dt_us: 100,
        window_frames: 10,
        saturation: 1,
    };
    let f = accumulate(&s, &cfg).unwrap();
    assert_eq!(f.frames(), 20);
    for k in 1..=20usize {
        let v = f.frame(k - 1)[3 * 16 + 7];
        assert_eq!(v, if k <= 10 { 1.0 } else { 0.0 }, "frame {k}");
        assert_eq!(f.frame(k - 1).iter().filter(|&&v| v != 0.0).count(), (k <= 10) as usize);
    }
}

#[test]
fn saturation_clips() {
    let events = (0..5).map(|i| Event::new(10 + i, 2, 2, Polarity::Positive)).collect();
    let s = EventStream::new(4, 4, events, Some(1000)).unwrap();
    let f = accumulate(&s, &AccumConfig::default()).unwrap();
    assert_eq!(f.frame(0)[2 * 4 + 2], 1.0);
}

#[test]
fn too_short_clip_is_rejected() {
    let s = EventStream::new(4, 4, vec![], Some(99)).unwrap();
    assert!(matches!(accumulate(&s, &AccumConfig::default()), Err(Error::ClipTooShort { .. })));
}
