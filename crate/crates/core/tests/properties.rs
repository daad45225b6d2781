//! Property tests over randomly generated inputs.

use std::f64::consts::PI;

use proptest::prelude::*;
use risim_core::channel::{effective_channel, ChannelRealization, LosIndicators};
use risim_core::geometry::{local_angles, recommend_positions, Environment, Point3, WallPlacement};
use risim_core::propagation::{ci_path_loss, element_pattern_gain, los_probability, PathLossModel};
use risim_core::ris_control::{optimal_phases, RisPhaseProfile};
use risim_core::Complex64;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn realization(max_n: usize) -> impl Strategy<Value = ChannelRealization> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(complex(), n),
            prop::collection::vec(complex(), n),
            complex(),
        )
            .prop_map(|(h, g, h_siso)| ChannelRealization {
                h,
                g,
                h_siso,
                seed: 0,
                index: 0,
                los: LosIndicators::default(),
            })
    })
}

fn env() -> impl Strategy<Value = Environment> {
    prop_oneof![Just(Environment::InH), Just(Environment::UMi)]
}

fn wall() -> impl Strategy<Value = WallPlacement> {
    prop_oneof![Just(WallPlacement::SideWall), Just(WallPlacement::OppositeWall)]
}

proptest! {
    #[test]
    fn optimal_profile_reaches_coherent_sum(r in realization(32)) {
        let e = effective_channel(&r, &optimal_phases(&r)).unwrap();
        let coherent = r.h_siso.norm() + r.g.iter().zip(&r.h).map(|(g, h)| (g * h).norm()).sum::<f64>();
        prop_assert!((e.norm() - coherent).abs() <= 1e-12 * coherent.max(1.0));
    }

    #[test]
    fn optimal_profile_beats_any_other(r in realization(16), phases in prop::collection::vec(0.0..2.0 * PI, 16)) {
        let other = RisPhaseProfile::from_phases(phases[..r.h.len()].to_vec());
        let best = effective_channel(&r, &optimal_phases(&r)).unwrap().norm();
        let alt = effective_channel(&r, &other).unwrap().norm();
        prop_assert!(alt <= best * (1.0 + 1e-12));
    }

    #[test]
    fn quantization_error_within_half_step(phases in prop::collection::vec(-10.0..10.0f64, 1..40), bits in 1u32..12) {
        let p = RisPhaseProfile::from_phases(phases.clone());
        let q = p.quantize(bits).unwrap();
        let half = PI / (1u64 << bits) as f64;
        for (a, b) in phases.iter().zip(q.phases()) {
            let d = (a - b).rem_euclid(2.0 * PI);
            prop_assert!(d.min(2.0 * PI - d) <= half + 1e-12);
            prop_assert!((0.0..2.0 * PI).contains(b));
        }
    }

    #[test]
    fn local_angles_stay_in_range(e in env(), w in wall(), x in 1.0..60.0f64, y in 1.0..60.0f64, z in 0.5..20.0f64) {
        let scn = recommend_positions(e, w);
        if let Ok(a) = local_angles(scn.ris, w, Point3::new(x, y, z)) {
            prop_assert!(a.azimuth.abs() <= PI);
            prop_assert!(a.elevation.abs() <= PI / 2.0);
            let g = element_pattern_gain(a.elevation);
            prop_assert!((0.0..=element_pattern_gain(0.0)).contains(&g));
        }
    }

    #[test]
    fn path_loss_decreases_with_distance(e in env(), d in 1.0..500.0f64, extra in 0.01..100.0f64, los: bool) {
        let m = PathLossModel::default_for(e, risim_core::geometry::Band::Ghz28);
        let near = ci_path_loss(&m, d, los, 0.0).unwrap();
        let far = ci_path_loss(&m, d + extra, los, 0.0).unwrap();
        prop_assert!(far < near);
        prop_assert!(near <= 1.0);
    }

    #[test]
    fn los_probability_is_a_probability(e in env(), d in 0.0..2000.0f64, h in prop::option::of(0.0..30.0f64)) {
        let p = los_probability(e, d, h);
        prop_assert!((0.0..=1.0).contains(&p));
    }
}
