use std::f64::consts::PI;

use nalgebra::Vector3;
use proptest::prelude::*;

use distraxion::distraction::{
    sample_colors, step_background, step_colors, BackgroundSchedule, CameraProcess, OriginPose, PoseBounds,
};
use distraxion::frame::{random_crop_offset, Frame};
use distraxion::geometry::{look_at_with_roll, project, DEFAULT_FOV};
use distraxion::protocol::codec::{encode_message, read_message};
use distraxion::protocol::{MakeRequest, Request};
use distraxion::qtopt::cem_maximize;
use distraxion::qtopt::drq::target_from_values;
use distraxion::rng::rng_from_seed;
use distraxion::qtopt::CemConfig;
use distraxion::{Preset, TaskName};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn camera_walk_stays_in_bounds(beta in 0.0..=1.0f64, theta0 in 0.2..(PI - 0.2), phi0 in -PI..PI, seed in any::<u64>()) {
        let origin = OriginPose { phi: phi0, theta: theta0 };
        let process = CameraProcess::new(beta, origin, true).unwrap();
        let bounds = PoseBounds::new(&process.range, origin);
        let mut rng = rng_from_seed(seed);
        let mut s = process.reset(&mut rng);
        for _ in 0..300 {
            prop_assert!(bounds.contains(&s), "{:?} outside {:?}", s, bounds);
            prop_assert!(s.velocity.norm() <= process.speed.v_max + 1e-12);
            s = process.step(&s, &mut rng);
        }
    }

    #[test]
    fn static_camera_never_moves(beta in 0.0..=1.0f64, seed in any::<u64>()) {
        let origin = OriginPose { phi: -PI / 2.0, theta: 1.0 };
        let process = CameraProcess::new(beta, origin, false).unwrap();
        let mut rng = rng_from_seed(seed);
        let s = process.reset(&mut rng);
        prop_assert_eq!(s.velocity, Vector3::zeros());
        prop_assert_eq!(process.step(&s, &mut rng), s);
    }

    #[test]
    fn color_walk_stays_in_band(orig in prop::array::uniform3(0.0..=1.0f64), beta in 0.0..=1.0f64, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let mut c = sample_colors(&[orig], beta, &mut rng);
        for _ in 0..300 {
            let cur = c.current(0);
            for ch in 0..3 {
                prop_assert!(cur[ch] >= (orig[ch] - beta).max(0.0) - 1e-12);
                prop_assert!(cur[ch] <= (orig[ch] + beta).min(1.0) + 1e-12);
            }
            c = step_colors(&c, beta, &mut rng);
        }
    }

    #[test]
    fn zero_beta_colors_are_original(orig in prop::array::uniform3(0.0..=1.0f64), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let c = sample_colors(&[orig], 0.0, &mut rng);
        prop_assert_eq!(c.current(0), orig);
        prop_assert_eq!(step_colors(&c, 0.0, &mut rng).current(0), orig);
    }

    #[test]
    fn ping_pong_moves_one_frame(length in 1usize..40, start in 0usize..40, forward in any::<bool>()) {
        let frame = start % length;
        let mut s = BackgroundSchedule { video_index: 0, frame_index: frame, direction: if forward { 1 } else { -1 } };
        for _ in 0..100 {
            let next = step_background(&s, length);
            prop_assert!(next.frame_index < length);
            if length > 1 {
                prop_assert_eq!(next.frame_index.abs_diff(s.frame_index), 1);
            }
            s = next;
        }
    }

    #[test]
    fn look_at_is_proper_rotation(
        px in -5.0..5.0f64, py in -5.0..5.0f64, pz in 0.1..5.0f64, roll in -PI..PI,
    ) {
        let pos = Vector3::new(px, py, pz);
        prop_assume!(pos.norm() > 0.1);
        let ext = look_at_with_roll(pos, Vector3::zeros(), roll, DEFAULT_FOV).unwrap();
        let r = ext.rotation;
        prop_assert!((r * r.transpose() - nalgebra::Matrix3::identity()).norm() < 1e-9);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-9);
        prop_assert!((ext.forward() + pos.normalize()).norm() < 1e-9);
        let c = project(&ext, &Vector3::zeros(), (64, 48)).unwrap();
        prop_assert!((c.x - 32.0).abs() < 1e-6 && (c.y - 24.0).abs() < 1e-6);
    }

    #[test]
    fn crops_stay_inside(w in 1usize..50, h in 1usize..50, cw in 1usize..50, ch in 1usize..50, seed in any::<u64>()) {
        prop_assume!(cw <= w && ch <= h);
        let mut rng = rng_from_seed(seed);
        let frame = Frame::new(w, h);
        for _ in 0..20 {
            let o = random_crop_offset((w, h), (cw, ch), &mut rng);
            prop_assert!(o.x + cw <= w && o.y + ch <= h);
            prop_assert!(distraxion::frame::crop(&frame, o, (cw, ch)).is_ok());
        }
    }

    #[test]
    fn cem_best_is_monotone(center in prop::collection::vec(-1.0..1.0f64, 1..4), seed in any::<u64>()) {
        let cfg = CemConfig { iterations: 5, ..Default::default() };
        let r = cem_maximize(
            |a| -a.iter().zip(&center).map(|(x, c)| (x - c).powi(2)).sum::<f64>(),
            center.len(),
            &cfg,
            &mut rng_from_seed(seed),
        ).unwrap();
        prop_assert_eq!(r.best_per_iteration.len(), 5);
        prop_assert!(r.best_per_iteration.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(r.action.iter().all(|a| a.abs() <= 1.0));
    }

    #[test]
    fn target_average_decomposes(r in -5.0..5.0f64, d in 0.0..=1.0f64, v1 in -50.0..50.0f64, v2 in -50.0..50.0f64, gamma in 0.0..1.0f64) {
        let y1 = target_from_values(&[r], &[d], gamma, &[vec![v1]]).unwrap()[0];
        let y2 = target_from_values(&[r], &[d], gamma, &[vec![v2]]).unwrap()[0];
        let y12 = target_from_values(&[r], &[d], gamma, &[vec![v1], vec![v2]]).unwrap()[0];
        prop_assert!((y12 - (y1 + y2) / 2.0).abs() < 1e-12 * (1.0 + y12.abs()));
    }

    #[test]
    fn protocol_round_trip(
        seed in any::<u64>(), dynamic in any::<bool>(), action in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..4),
        payload in prop::collection::vec(any::<u8>(), 0..64), which in 0usize..5,
    ) {
        let request = match which {
            0 => Request::Hello { version: seed as u32 },
            1 => Request::Make(MakeRequest::preset(TaskName::ALL[(seed % 3) as usize], Preset::ALL[(seed % 4) as usize], dynamic, seed)),
            2 => Request::Reset {},
            3 => Request::Step { action },
            _ => Request::Close {},
        };
        let bytes = encode_message(&request, &payload).unwrap();
        let msg = read_message::<_, Request>(&mut &bytes[..]).unwrap().unwrap();
        prop_assert_eq!(&msg.header, &request);
        prop_assert_eq!(&msg.payload, &payload);
        prop_assert_eq!(encode_message(&msg.header, &msg.payload).unwrap(), bytes);
    }
}
