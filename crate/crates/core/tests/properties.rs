//! Randomized invariants over seeded instances.

use proptest::prelude::*;

use gms_core::tightness::{membership, Membership, PinMode};
use gms_core::{
    bnb_solve, brute_force_solve, build, generate, lp_solve, residuals, sample_vertex, verify_lemma1, verify_lemma2,
    Error, FormulationId, GenerationProfile, Instance, LpStatus, MipStatus, VarKind,
};

fn instance(seed: u64, horizon: usize, tasks: usize, coupled: bool) -> Instance {
    let profile = if coupled {
        GenerationProfile::coupled()
    } else {
        GenerationProfile::default()
    };
    generate(seed, horizon, tasks, &profile).unwrap()
}

fn bound(id: FormulationId, inst: &Instance) -> f64 {
    let sol = lp_solve(&build(id, inst).unwrap());
    match sol.status {
        LpStatus::Optimal => sol.objective,
        LpStatus::Infeasible => f64::INFINITY,
        s => panic!("{id}: LP ended with {s:?}"),
    }
}

fn at_least(a: f64, b: f64) -> bool {
    a == b || a >= b - 1e-6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn instance_json_round_trip_is_byte_identical(seed in any::<u64>(), horizon in 2usize..30, tasks in 1usize..6, coupled in any::<bool>()) {
        let inst = instance(seed, horizon, tasks, coupled);
        let text = inst.to_json_string();
        let back = Instance::from_json_str(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.to_json_string(), text);
        prop_assert!(gms_core::validate(&inst).is_empty());
    }

    #[test]
    fn lp_points_satisfy_their_model(seed in any::<u64>(), horizon in 2usize..16, tasks in 1usize..4, coupled in any::<bool>(), k in 0usize..7) {
        let inst = instance(seed, horizon, tasks, coupled);
        let id = FormulationId::ALL[k];
        let model = build(id, &inst).unwrap();
        let sol = lp_solve(&model);
        prop_assert!(matches!(sol.status, LpStatus::Optimal | LpStatus::Infeasible), "{:?}", sol.status);
        if sol.status == LpStatus::Optimal {
            prop_assert!(residuals(&model, &sol.values).max_violation() <= 1e-6);
            let v = sample_vertex(&model, seed);
            prop_assert_eq!(v.status, LpStatus::Optimal);
            prop_assert!(residuals(&model, &v.values).max_violation() <= 1e-6);
        }
    }

    #[test]
    fn bound_ordering_holds_with_and_without_coupling(seed in any::<u64>(), horizon in 3usize..20, tasks in 1usize..5) {
        for coupled in [false, true] {
            let inst = instance(seed, horizon, tasks, coupled);
            let z: Vec<f64> = FormulationId::ALL.iter().map(|&id| bound(id, &inst)).collect();
            let (f4, f6, f7) = (z[3], z[5], z[6]);
            prop_assert!(at_least(f6, f7) && at_least(f7, f6), "{z:?}");
            prop_assert!(at_least(f4, f7) && at_least(f7, f4), "{z:?}");
            for k in [0, 1, 2, 4] {
                prop_assert!(at_least(f7, z[k]), "{z:?}");
            }
            prop_assert!(at_least(z[1], z[2]), "{z:?}");
        }
        let loose = instance(seed, horizon, tasks, false);
        let tight = instance(seed, horizon, tasks, true);
        for id in FormulationId::ALL {
            prop_assert!(at_least(bound(id, &tight), bound(id, &loose)), "{id}");
        }
    }

    #[test]
    fn f7_vertices_satisfy_the_weaker_formulations(seed in any::<u64>(), horizon in 3usize..16, tasks in 1usize..4, coupled in any::<bool>()) {
        let inst = instance(seed, horizon, tasks, coupled);
        let f7 = build(FormulationId::F7, &inst).unwrap();
        let v = sample_vertex(&f7, seed ^ 0x55);
        prop_assume!(v.status == LpStatus::Optimal);
        for id in [FormulationId::F1, FormulationId::F2, FormulationId::F3, FormulationId::F4, FormulationId::F5] {
            let model = build(id, &inst).unwrap();
            let point = if id.has_s() { v.values.clone() } else { v.values.only(VarKind::X) };
            let worst = residuals(&model, &point).max_violation();
            prop_assert!(worst <= 1e-6, "{} residual {}", id, worst);
        }
    }

    #[test]
    fn f4_and_f7_projections_coincide(seed in any::<u64>(), horizon in 3usize..14, tasks in 1usize..4, coupled in any::<bool>()) {
        use FormulationId::{F4, F7};
        let inst = instance(seed, horizon, tasks, coupled);
        let m4 = build(F4, &inst).unwrap();
        let m7 = build(F7, &inst).unwrap();
        for (src, dst, dst_id) in [(&m4, &m7, F7), (&m7, &m4, F4)] {
            let v = sample_vertex(src, seed);
            if v.status != LpStatus::Optimal {
                continue;
            }
            let got = membership(dst_id, dst, &inst, &v.values, PinMode::Projection).unwrap();
            prop_assert_eq!(got, Membership::Member);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn branch_and_bound_matches_brute_force(seed in any::<u64>(), horizon in 2usize..9, tasks in 1usize..3, coupled in any::<bool>()) {
        let inst = instance(seed, horizon, tasks, coupled);
        let oracle = brute_force_solve(&inst);
        for id in FormulationId::ALL {
            let sol = bnb_solve(&build(id, &inst).unwrap(), 10_000);
            match &oracle {
                Ok((cost, _)) => {
                    prop_assert_eq!(sol.status, MipStatus::Optimal, "{}", id);
                    prop_assert!((sol.objective - cost).abs() <= 1e-6, "{} {} vs {}", id, sol.objective, cost);
                    prop_assert!(sol.root_bound <= sol.objective + 1e-6);
                }
                Err(Error::Infeasible) => prop_assert_eq!(sol.status, MipStatus::Infeasible, "{}", id),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn lemmas_hold_on_random_instances(seed in any::<u64>(), horizon in 2usize..20, tasks in 1usize..5, coupled in any::<bool>()) {
        let inst = instance(seed, horizon, tasks, coupled);
        let l1 = verify_lemma1(&inst, 20, seed).unwrap();
        let l2 = verify_lemma2(&inst, 20, seed).unwrap();
        prop_assert!(l1.pass, "{:?}", l1);
        prop_assert!(l2.pass, "{:?}", l2);
    }
}
