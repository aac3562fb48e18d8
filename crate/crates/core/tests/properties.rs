use std::f64::consts::{FRAC_PI_2, PI};

use hydrolink_core::env::{reset, reward, step, ActionVec, EnvConfig};
use hydrolink_core::optics::{fresnel_transmittance, refract, ChannelScenario, Refraction};
use hydrolink_core::spectrum::{Jonswap, SpectrumParams};
use hydrolink_core::surface::{synthesize, SurfaceModel, SynthesisGrid, WaveComponent};
use hydrolink_core::tracer::{solve_link_path, to_absolute};
use hydrolink_core::{EulerZxz, Vec3};
use proptest::prelude::*;

fn sea_state() -> impl Strategy<Value = SpectrumParams> {
    (6.0..16.0f64, 5e3..5e4f64, 1.0..5.0f64).prop_map(|(u, xf, gamma)| SpectrumParams {
        wind_speed_u10: u,
        fetch_xf: xf,
        gamma,
        ..Default::default()
    })
}

fn small_sea() -> impl Strategy<Value = SurfaceModel> {
    (sea_state(), any::<u64>(), -PI..PI).prop_map(|(p, seed, bearing)| {
        let grid = SynthesisGrid { wind_bearing: bearing, ..SynthesisGrid::for_spectrum(&p, 12, 8).unwrap() };
        synthesize(&p, &grid, seed).unwrap()
    })
}

fn unit_vector() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, 0.0..2.0 * PI).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        Vec3::new(r * phi.cos(), r * phi.sin(), z)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn spreading_is_even_and_nonnegative(p in sea_state(), r in 0.3..10.0f64, theta in -PI..PI) {
        let s = Jonswap::new(p).unwrap();
        let omega = r * s.peak_frequency();
        let g = s.spreading(omega, theta).unwrap();
        prop_assert!(g >= 0.0);
        prop_assert_eq!(g, s.spreading(omega, -theta).unwrap());
    }

    #[test]
    fn gradient_matches_central_differences(sea in small_sea(), x in -50.0..50.0f64, y in -50.0..50.0f64, t in 0.0..100.0f64) {
        let h = 1e-4;
        let (gx, gy) = sea.gradient(x, y, t);
        let fx = (sea.height(x + h, y, t) - sea.height(x - h, y, t)) / (2.0 * h);
        let fy = (sea.height(x, y + h, t) - sea.height(x, y - h, t)) / (2.0 * h);
        prop_assert!((gx - fx).abs() < 1e-6, "{} vs {}", gx, fx);
        prop_assert!((gy - fy).abs() < 1e-6, "{} vs {}", gy, fy);
    }

    #[test]
    fn normal_is_unit_and_upward(sea in small_sea(), x in -50.0..50.0f64, y in -50.0..50.0f64, t in 0.0..100.0f64) {
        let n = sea.normal(x, y, t);
        prop_assert!((n.dot(n) - 1.0).abs() < 1e-12);
        prop_assert!(n.z > 0.0);
    }

    #[test]
    fn to_absolute_preserves_length(v in (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64), a in (-PI..PI, 0.0..PI, -PI..PI)) {
        let v = Vec3::new(v.0, v.1, v.2);
        let w = to_absolute(v, &EulerZxz::new(a.0, a.1, a.2));
        prop_assert!((w.norm() - v.norm()).abs() <= 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn snell_round_trip(d in unit_vector(), n in unit_vector()) {
        let (n1, n2) = (1.33, 1.0);
        // Orient the normal along the propagation so the ray crosses the interface.
        let n = if d.dot(n) < 0.0 { -n } else { n };
        prop_assume!(d.dot(n) > 1e-3);
        if let Refraction::Transmitted(out) = refract(d, n, n1, n2).unwrap() {
            let back = refract(out, n, n2, n1).unwrap().direction().unwrap();
            prop_assert!((back - d).norm() < 1e-9, "{:?} vs {:?}", back, d);
        }
    }
}

#[test]
fn height_is_periodic_for_one_component() {
    let mut runner = proptest::test_runner::TestRunner::default();
    runner
        .run(&(0.05..1.0f64, 0.3..5.0f64, -PI..PI, 0.0..2.0 * PI, -20.0..20.0f64, 0.0..50.0f64), |(a, w, th, ph, x, t)| {
            let sea = SurfaceModel::from_components(vec![WaveComponent::new(a, w, th, ph, 9.81)], 9.81, 0);
            let period = 2.0 * PI / w;
            prop_assert!((sea.height(x, 0.5 * x, t) - sea.height(x, 0.5 * x, t + period)).abs() < 1e-9);
            Ok(())
        })
        .unwrap();
}

#[test]
fn synthesis_is_deterministic() {
    let p = SpectrumParams::default();
    let grid = SynthesisGrid::for_spectrum(&p, 32, 18).unwrap();
    let a = synthesize(&p, &grid, 77).unwrap();
    let b = synthesize(&p, &grid, 77).unwrap();
    let c = synthesize(&p, &grid, 78).unwrap();
    for &(x, y, t) in &[(0.0, 0.0, 0.0), (3.7, -1.2, 12.5), (-40.0, 9.0, 99.9)] {
        assert_eq!(a.height(x, y, t).to_bits(), b.height(x, y, t).to_bits());
    }
    assert_ne!(a.height(3.7, -1.2, 12.5), c.height(3.7, -1.2, 12.5));
}

#[test]
fn fresnel_is_bounded_and_nonincreasing_below_critical() {
    let sc = ChannelScenario::default();
    let crit = sc.critical_angle();
    let mut prev = f64::INFINITY;
    let mut theta = 0.0;
    while theta <= crit {
        let t = fresnel_transmittance(theta, sc.n_water, sc.n_air);
        assert!((0.0..=1.0).contains(&t));
        assert!(t <= prev + 1e-15, "increase at {theta}");
        prev = t;
        theta += 1e-3;
    }
    assert_eq!(fresnel_transmittance(FRAC_PI_2.min(crit + 1e-6), sc.n_water, sc.n_air), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn link_path_obeys_snell(sea in small_sea(), offset in 0.0..0.3f64, t in 0.0..30.0f64) {
        let mut sc = ChannelScenario::default();
        sc.rx_pos.x = offset * 20.0;
        // Very steep short-fetch seas can still defeat every start; Snell must hold whenever a path is returned.
        if let Ok(path) = solve_link_path(&sea, &sc, t, None) {
            let lhs = sc.n_water * path.theta_1.sin();
            let rhs = sc.n_air * path.theta_2.sin();
            prop_assert!((lhs - rhs).abs() < 1e-6);
            prop_assert!(path.miss < 1e-8);
        }
    }
}

#[test]
fn link_path_always_found_in_the_reference_sea() {
    let p = SpectrumParams::default();
    let grid = SynthesisGrid::for_spectrum(&p, 32, 18).unwrap();
    for seed in 0..10 {
        let sea = synthesize(&p, &grid, seed).unwrap();
        for k in 0..10 {
            for off in [0.0, 0.1, 0.3, 0.5] {
                let mut sc = ChannelScenario::default();
                sc.rx_pos.x = off * 20.0;
                let t = 0.7 * k as f64;
                assert!(solve_link_path(&sea, &sc, t, None).is_ok(), "seed {seed} t {t} offset {off}");
            }
        }
    }
}

fn env_config() -> EnvConfig {
    let mut c = EnvConfig::default();
    c.grid = SynthesisGrid::for_spectrum(&c.spectrum, 16, 9).unwrap();
    c.max_steps = 12;
    c
}

fn actions(n: usize) -> impl Strategy<Value = Vec<[f64; 4]>> {
    prop::collection::vec(prop::array::uniform4(-1.5..1.5f64), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rollouts_keep_observation_invariants(seed in any::<u64>(), acts in actions(12)) {
        let config = env_config();
        let (obs, mut state) = reset(&config, seed).unwrap();
        prop_assert!(obs.intensity >= 0.0);
        for (k, a) in acts.iter().enumerate() {
            let raw = ActionVec { tx_ctrl: [a[0], a[1]], rx_ctrl: [a[2], a[3]] };
            let out = step(&state, &raw, &config).unwrap();
            let again = step(&state, &raw, &config).unwrap();
            prop_assert_eq!(&out, &again);
            let clamped = step(&state, &ActionVec::from_array(a), &config).unwrap();
            prop_assert_eq!(&out, &clamped);

            let o = out.observation;
            prop_assert!(o.tx_dir.is_unit(1e-12) && o.rx_dir.is_unit(1e-12));
            prop_assert!(o.tx_dir.z > 0.0 && o.rx_dir.z < 0.0);
            prop_assert!(o.intensity >= 0.0 && o.intensity.is_finite());
            prop_assert!((o.rel_time - (k + 1) as f64 * config.sample_time).abs() < 1e-9);
            prop_assert_eq!(out.reward.to_bits(), reward(o.intensity, &config.reward).to_bits());
            prop_assert_eq!(out.is_done, k + 1 == config.max_steps);
            state = out.next_state;
        }
        prop_assert!(step(&state, &ActionVec::new([0.0; 2], [0.0; 2]), &config).is_err());
    }
}
