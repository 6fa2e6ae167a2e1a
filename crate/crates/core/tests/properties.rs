use levyx_core::harness::{binned_ensemble, verify_hydro, HydroOptions};
use levyx_core::rng::{replica_seed, replica_seeds};
use levyx_core::sim::{simulate_with, SimOptions, SnapshotData};
use levyx_core::{build_kernel, sample_initial, stats, InitialProfile, ModelParams};
use proptest::prelude::*;

fn small_params() -> ModelParams {
    ModelParams::new(1.5, 0.3, 0.6, 1.0, 0.0, 64).unwrap()
}

#[test]
fn reports_rerun_from_their_record_bit_identically() {
    let g = InitialProfile::Linear {
        left: 0.3,
        right: 0.6,
    };
    let opts = HydroOptions::default();
    let a = verify_hydro(&small_params(), &g, &[0.01, 0.02], 4, 0.125, 99, &opts).unwrap();

    let p = &a.parameters;
    let params: ModelParams = serde_json::from_value(p["params"].clone()).unwrap();
    let initial: InitialProfile = serde_json::from_value(p["initial"].clone()).unwrap();
    let checkpoints: Vec<f64> = serde_json::from_value(p["checkpoints"].clone()).unwrap();
    let options: HydroOptions = serde_json::from_value(p["options"].clone()).unwrap();
    let b = verify_hydro(
        &params,
        &initial,
        &checkpoints,
        p["replicas"].as_u64().unwrap() as usize,
        p["bin_width"].as_f64().unwrap(),
        a.master_seed.unwrap(),
        &options,
    )
    .unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert_eq!(a.seeds, replica_seeds(99, 4));
}

#[test]
fn error_bars_shrink_like_inverse_square_root_of_replicas() {
    let g = InitialProfile::Constant { value: 0.5 };
    let mean_se = |replicas: usize| {
        let e = binned_ensemble(&small_params(), &g, &[0.02], replicas, 8, 5).unwrap();
        stats::mean(&e.se[0])
    };
    let ratio = mean_se(400) / mean_se(200);
    assert!((ratio - 0.5f64.sqrt()).abs() < 0.1, "SE ratio {ratio}");
}

#[test]
fn single_replica_reproduces_in_isolation() {
    let params = small_params();
    let g = InitialProfile::Sine {
        mean: 0.5,
        amplitude: 0.3,
        modes: 1.0,
    };
    let master = 1234;
    let ens = binned_ensemble(&params, &g, &[0.02], 3, 8, master).unwrap();
    let k = 2;
    assert_eq!(ens.seeds[k], replica_seed(master, k as u64));

    let alone = binned_ensemble(&params, &g, &[0.02], 1, 8, 0).unwrap();
    let kernel = build_kernel(params.gamma, params.n).unwrap();
    let s = replica_seeds(0, 1)[0];
    let init = sample_initial(&|u| g.eval(u), params.n, replica_seed(s, 0)).unwrap();
    let r = simulate_with(
        &params,
        &kernel,
        &init,
        0.02,
        &[0.02],
        s,
        SimOptions::default(),
    )
    .unwrap();
    let binned = match &r.snapshots[0].data {
        SnapshotData::Full(c) => c.binned(8),
        SnapshotData::Binned(b) => b.clone(),
    };
    assert_eq!(alone.mean[0], binned);
}

#[test]
fn equal_reservoirs_and_flat_start_stay_flat_within_noise() {
    let params = ModelParams::new(1.5, 0.5, 0.5, 1.0, 0.0, 64).unwrap();
    let r = verify_hydro(
        &params,
        &InitialProfile::Constant { value: 0.5 },
        &[0.01, 0.05],
        40,
        0.125,
        3,
        &HydroOptions::default(),
    )
    .unwrap();
    for t in [0.01, 0.05] {
        let d = r.value(&format!("sup_distance@t={t}")).unwrap();
        let se = r.value(&format!("max_se@t={t}")).unwrap();
        assert!(d <= 4.0 * se, "t={t}: {d} vs se {se}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulation_is_deterministic_and_exclusive(
        gamma in 1.1f64..1.9,
        n in 8usize..80,
        seed in any::<u64>(),
        rho in 0.0f64..1.0,
    ) {
        let params = ModelParams::new(gamma, 0.25, 0.75, 2.0, 0.0, n).unwrap();
        let kernel = build_kernel(gamma, n).unwrap();
        let init = sample_initial(&|_| rho, n, seed ^ 7).unwrap();
        let opts = SimOptions { record_events: true, ..Default::default() };
        let a = simulate_with(&params, &kernel, &init, 0.01, &[0.005, 0.01], seed, opts.clone()).unwrap();
        let b = simulate_with(&params, &kernel, &init, 0.01, &[0.005, 0.01], seed, opts).unwrap();
        prop_assert_eq!(&a, &b);
        for s in &a.snapshots {
            if let SnapshotData::Full(c) = &s.data {
                let counted = (1..n).filter(|x| c.get(*x)).count();
                prop_assert_eq!(counted, c.particle_count());
            }
        }
    }

    #[test]
    fn closed_system_conserves_particles(
        n in 8usize..80,
        seed in any::<u64>(),
        rho in 0.0f64..1.0,
    ) {
        let params = ModelParams::new(1.5, 0.25, 0.75, 1.0, 0.0, n).unwrap();
        let kernel = build_kernel(1.5, n).unwrap();
        let init = sample_initial(&|_| rho, n, seed).unwrap();
        let opts = SimOptions { reservoirs: false, ..Default::default() };
        let r = simulate_with(&params, &kernel, &init, 0.02, &[0.01, 0.02], seed, opts).unwrap();
        for s in &r.snapshots {
            if let SnapshotData::Full(c) = &s.data {
                prop_assert_eq!(c.particle_count(), init.particle_count());
            }
        }
        prop_assert_eq!(r.stats.flips, 0);
    }
}
