use corrgen_core::classical::{
    build_classical_hardness_instance, build_quantum_hardness_instance, classical_feasible_search,
    decide_diagonal_to_half_identity, schmidt_basis_protocol, subset_sum_oracle, ClassicalSearchSettings,
    SubsetSumInstance,
};
use corrgen_core::factorize::verify;

#[test]
fn heuristic_search_fails_on_unsatisfiable_instances() {
    let settings = ClassicalSearchSettings {
        restarts: 50,
        ..Default::default()
    };
    for items in [vec![1, 3], vec![2, 3], vec![1, 1, 4], vec![3, 5, 9, 3]] {
        let inst = SubsetSumInstance::new(items.clone()).unwrap();
        assert!(!subset_sum_oracle(&inst).unwrap().satisfiable);
        let c = build_classical_hardness_instance(&inst).unwrap();
        let out = classical_feasible_search(&c.seed, &c.target, &settings).unwrap();
        assert!(out.residual > 1e-6, "{items:?}: {}", out.residual);
    }
}

#[test]
fn satisfiable_instances_have_both_witnesses() {
    for items in [vec![1, 1], vec![1, 2, 3], vec![4, 1, 2, 1], vec![7, 3, 2, 2, 5, 1]] {
        let inst = SubsetSumInstance::new(items.clone()).unwrap();
        let ans = subset_sum_oracle(&inst).unwrap();
        assert!(ans.satisfiable, "{items:?}");

        let q = build_quantum_hardness_instance(&inst).unwrap();
        let f = schmidt_basis_protocol(&q.spectrum, &q.positions_of(&ans.witness)).unwrap();
        assert!(verify(&q.target, &f, 1e-12).unwrap().ok);

        let c = build_classical_hardness_instance(&inst).unwrap();
        let exact = decide_diagonal_to_half_identity(&inst).unwrap();
        let pair = exact.pair.expect("feasible");
        let out = pair.apply(&c.seed).unwrap();
        assert!((out - c.target.entries()).abs().max() < 1e-12);

        let search = classical_feasible_search(&c.seed, &c.target, &ClassicalSearchSettings::default()).unwrap();
        assert!(search.converged, "{items:?}: {}", search.residual);
    }
}
