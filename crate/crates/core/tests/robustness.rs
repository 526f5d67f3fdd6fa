use chancompat::linalg::{ComplexMatrix, C64};
use chancompat::qchannel::{depolarizing_choi, Channel, DynamicalMap, Povm};
use chancompat::random::{random_channel, random_density, random_projective};
use chancompat::robustness::{
    dynamical_map_robustness, feasibility_q, measurement_robustness, robustness, robustness_both,
    sweep, time_grid, NoiseClass, NoiseSelection, Scan, SearchOptions, SweepOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn hadamard() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]]).unwrap()
}

#[test]
fn identity_self_robustness() {
    let id = Channel::identity(2);
    let (g, cd) = robustness_both(&id, &id, &SearchOptions::default()).unwrap();
    assert!((cd.r_star - 0.5).abs() < 1e-12, "cd {}", cd.r_star);
    // 1/3 rounded up to the 0.005 grid
    assert!((g.r_star - 0.335).abs() < 1e-12, "generic {}", g.r_star);
    assert!(!g.indeterminate && !cd.indeterminate);
}

#[test]
fn refined_identity_generic_robustness_is_one_third() {
    let id = Channel::identity(2);
    let opts = SearchOptions {
        refine: true,
        ..SearchOptions::default()
    };
    let g = robustness(&id, &id, NoiseClass::Generic, &opts).unwrap();
    assert!((g.r_star - 1.0 / 3.0).abs() < 1e-4, "{}", g.r_star);
}

#[test]
fn linear_and_bisection_scans_agree() {
    let id = Channel::identity(2);
    let dep = depolarizing_choi(0.8).unwrap();
    for noise in [NoiseClass::Generic, NoiseClass::CompletelyDepolarizing] {
        let bis = robustness(&id, &dep, noise, &SearchOptions::default()).unwrap();
        let lin = robustness(
            &id,
            &dep,
            noise,
            &SearchOptions {
                scan: Scan::Linear,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        assert_eq!(bis.r_star, lin.r_star, "{noise}");
    }
}

#[test]
fn early_decision_matches_full_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let full = SearchOptions {
        decide_early: false,
        ..SearchOptions::default()
    };
    for _ in 0..3 {
        let a = random_channel(&mut rng, 2, 2);
        let b = random_channel(&mut rng, 2, 2);
        let fast = robustness(&a, &b, NoiseClass::Generic, &SearchOptions::default()).unwrap();
        let slow = robustness(&a, &b, NoiseClass::Generic, &full).unwrap();
        assert_eq!(fast.r_star, slow.r_star);
    }
}

#[test]
fn heavily_depolarized_pair_is_compatible() {
    // Below w = 2/3 a depolarizing channel is already jointly realizable with itself.
    let dep = depolarizing_choi(0.5).unwrap();
    for noise in [NoiseClass::Generic, NoiseClass::CompletelyDepolarizing] {
        let res = robustness(&dep, &dep, noise, &SearchOptions::default()).unwrap();
        assert_eq!(res.r_star, 0.0, "{noise}");
    }
}

#[test]
fn completely_depolarizing_channel_is_compatible_with_anything() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let eta = random_density(&mut rng, 2);
    let cd = Channel::completely_depolarizing(2, &eta).unwrap();
    let other = random_channel(&mut rng, 2, 2);
    let (g, c) = robustness_both(&cd, &other, &SearchOptions::default()).unwrap();
    assert_eq!(g.r_star, 0.0);
    assert_eq!(c.r_star, 0.0);
}

#[test]
fn feasibility_signs_at_extremes() {
    let id = Channel::identity(2);
    assert!(feasibility_q(&id, &id, 0.0, NoiseClass::Generic).unwrap() < -1e-3);
    for noise in [NoiseClass::Generic, NoiseClass::CompletelyDepolarizing] {
        assert!(feasibility_q(&id, &id, 1.0, noise).unwrap() >= 0.0, "{noise}");
    }
}

#[test]
fn robustness_is_symmetric_in_the_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let opts = SearchOptions {
        refine: true,
        ..SearchOptions::default()
    };
    for _ in 0..2 {
        let a = random_channel(&mut rng, 2, 2);
        let b = random_channel(&mut rng, 2, 2);
        let ab = robustness(&a, &b, NoiseClass::Generic, &opts).unwrap();
        let ba = robustness(&b, &a, NoiseClass::Generic, &opts).unwrap();
        assert!((ab.r_star - ba.r_star).abs() < 1e-4, "{} vs {}", ab.r_star, ba.r_star);
    }
}

#[test]
fn generic_noise_never_needs_more_than_cd_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..3 {
        let a = random_channel(&mut rng, 2, 2);
        let b = random_channel(&mut rng, 2, 2);
        let (g, c) = robustness_both(&a, &b, &SearchOptions::default()).unwrap();
        assert!(g.r_star <= c.r_star + 1e-9, "{} > {}", g.r_star, c.r_star);
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let a = Channel::identity(2);
    let b = Channel::identity(3);
    assert!(robustness(&a, &b, NoiseClass::Generic, &SearchOptions::default()).is_err());
}

#[test]
fn unbiased_qubit_measurements() {
    let z = Povm::projective(&ComplexMatrix::identity(2)).unwrap();
    let x = Povm::projective(&hadamard()).unwrap();
    let opts = SearchOptions {
        refine: true,
        ..SearchOptions::default()
    };
    let res = measurement_robustness(&z, &x, &opts).unwrap();
    let expected = 3.0 - 2.0 * 2f64.sqrt();
    assert!((res.r_star - expected).abs() < 1e-4, "{}", res.r_star);
}

#[test]
fn trivially_compatible_measurements() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = random_projective(&mut rng, 2);
    let opts = SearchOptions::default();
    assert_eq!(measurement_robustness(&m, &m, &opts).unwrap().r_star, 0.0);
    let trivial = Povm::trivial(2);
    assert_eq!(measurement_robustness(&m, &trivial, &opts).unwrap().r_star, 0.0);
}

#[test]
fn noisier_measurements_need_less_noise() {
    let z = Povm::projective(&ComplexMatrix::identity(2)).unwrap();
    let x = Povm::projective(&hadamard()).unwrap();
    let half = ComplexMatrix::identity(2).scale(0.5);
    let blur = |m: &Povm, p: f64| {
        Povm::new(
            m.effects()
                .iter()
                .map(|e| &e.scale(p) + &half.scale(1.0 - p))
                .collect(),
        )
        .unwrap()
    };
    let opts = SearchOptions::default();
    let sharp = measurement_robustness(&z, &x, &opts).unwrap().r_star;
    let blurred = measurement_robustness(&blur(&z, 0.9), &blur(&x, 0.9), &opts)
        .unwrap()
        .r_star;
    assert!(blurred < sharp, "{blurred} !< {sharp}");
    // Unsharpness 1/√2 makes the pair jointly measurable.
    let jm = measurement_robustness(&blur(&z, 0.7), &blur(&x, 0.7), &opts).unwrap();
    assert_eq!(jm.r_star, 0.0);
}

#[test]
fn time_grid_row_counts() {
    assert_eq!(time_grid(0.0, 0.3, 0.1).unwrap().len(), 4);
    assert_eq!(time_grid(0.0, 1.0, 0.01).unwrap().len(), 101);
    assert_eq!(time_grid(0.5, 0.5, 0.1).unwrap(), vec![0.5]);
    assert!(time_grid(0.0, 1.0, 0.0).is_err());
    assert!(time_grid(0.5, 0.1, 0.1).is_err());
    assert!(time_grid(-0.1, 0.1, 0.1).is_err());
}

#[test]
fn sweep_order_does_not_depend_on_workers() {
    let d2 = DynamicalMap::DepolarizingOscillating {
        lambda: 0.5,
        omega: 5.0 * std::f64::consts::PI,
    };
    let grid = time_grid(0.0, 0.35, 0.05).unwrap();
    let serial = sweep(&DynamicalMap::Identity, &d2, &grid, &SweepOptions::default()).unwrap();
    let parallel = sweep(
        &DynamicalMap::Identity,
        &d2,
        &grid,
        &SweepOptions {
            workers: 4,
            ..SweepOptions::default()
        },
    )
    .unwrap();
    assert_eq!(serial, parallel);
    let ts: Vec<f64> = serial.iter().map(|r| r.t).collect();
    assert_eq!(ts, grid);
}

#[test]
fn sweep_noise_selection_fills_only_requested_columns() {
    let grid = [0.0, 0.1];
    let d1 = DynamicalMap::Depolarizing { lambda: 0.5 };
    let opts = SweepOptions {
        noise: NoiseSelection::Cd,
        ..SweepOptions::default()
    };
    let rows = sweep(&d1, &d1, &grid, &opts).unwrap();
    assert!(rows.iter().all(|r| r.r_generic.is_none() && r.r_cd.is_some()));
    assert_eq!(rows[0].r_cd, Some(0.5));
    // Λ_0 is the identity, so |0⟩ and |1⟩ stay orthogonal.
    assert!((rows[0].trace_distance - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_rejects_bad_grids() {
    let d1 = DynamicalMap::Depolarizing { lambda: 0.5 };
    let opts = SweepOptions::default();
    assert!(sweep(&d1, &d1, &[], &opts).is_err());
    assert!(sweep(&d1, &d1, &[0.2, 0.1], &opts).is_err());
}

#[test]
fn dynamical_map_robustness_is_the_sweep_maximum() {
    let d1 = DynamicalMap::Depolarizing { lambda: 0.5 };
    let grid = [0.0, 0.4, 0.9];
    let opts = SweepOptions::default();
    let r = dynamical_map_robustness(&d1, &d1, &grid, NoiseClass::CompletelyDepolarizing, &opts).unwrap();
    assert!((r - 0.5).abs() < 1e-12, "{r}");
    let late = dynamical_map_robustness(&d1, &d1, &[2.0, 3.0], NoiseClass::Generic, &opts).unwrap();
    assert_eq!(late, 0.0);
}

#[test]
fn channel_probe_q_is_monotone_in_r() {
    let id = Channel::identity(2);
    let dep = depolarizing_choi(0.9).unwrap();
    let qs: Vec<f64> = [0.0, 0.1, 0.2, 0.4]
        .iter()
        .map(|&r| feasibility_q(&id, &dep, r, NoiseClass::Generic).unwrap())
        .collect();
    assert!(qs.windows(2).all(|w| w[1] >= w[0] - 1e-7), "{qs:?}");
}

#[test]
fn unitary_self_robustness_matches_identity() {
    let mut u = ComplexMatrix::identity(2);
    u[(1, 1)] = C64::new(0.0, 1.0);
    let rotated = Channel::from_kraus(&[u]).unwrap();
    let opts = SearchOptions::default();
    let cd = robustness(&rotated, &rotated, NoiseClass::CompletelyDepolarizing, &opts).unwrap();
    assert!((cd.r_star - 0.5).abs() < 1e-12, "{}", cd.r_star);
}
