mod common;

use std::collections::BTreeSet;

use irsp_core::graph::{
    bipartiteness, build_graph, communication_classes, hierarchy_decomposition, validate_matrix,
};
use irsp_core::spectral::{drift_system, is_numerically_singular, Attitude};
use proptest::prelude::*;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bipartite_iff_even_period_iff_singular(seed in any::<u64>(), n in 2usize..=8) {
        let rows = random_irreducible_class(&mut rng(seed), n);
        let a = validate_matrix(&rows).unwrap();
        let classes = communication_classes(&build_graph(&a));
        prop_assert_eq!(classes.len(), 1);
        let report = bipartiteness(&classes[0]);
        let period = period_by_walks(&support(&rows));
        prop_assert_eq!(report.period, period);
        prop_assert_eq!(report.is_bipartite, period % 2 == 0);
        let drift = drift_system(a.weights(), a.row_sums(), Attitude::Competitive);
        prop_assert_eq!(is_numerically_singular(&drift.k), report.is_bipartite);
        // Independent determinant: zero up to rounding exactly when bipartite.
        let k: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| drift.k[(i, j)]).collect()).collect();
        prop_assert_eq!(det(&k).abs() < 1e-9, report.is_bipartite);
        if let Some((i_side, j_side)) = &report.partition {
            prop_assert!(i_side.contains(&0));
            for &i in i_side {
                for &j in i_side {
                    prop_assert!(rows[i][j] == 0.0 || i == j);
                }
            }
            for &i in j_side {
                for &j in j_side {
                    prop_assert!(rows[i][j] == 0.0 || i == j);
                }
            }
        }
    }

    #[test]
    fn classes_are_the_mutual_reachability_partition(seed in any::<u64>(), n in 1usize..=9) {
        let rows = random_matrix(&mut rng(seed), n);
        let a = validate_matrix(&rows).unwrap();
        let classes = communication_classes(&build_graph(&a));
        let reach = transitive_closure(&support(&rows));
        let mut seen = BTreeSet::new();
        for c in &classes {
            for &i in &c.members {
                prop_assert!(seen.insert(i));
                for &j in &c.members {
                    prop_assert!(reach[i][j] && reach[j][i]);
                }
            }
        }
        prop_assert_eq!(seen.len(), n);
        for (x, c) in classes.iter().enumerate() {
            for d in &classes[x + 1..] {
                let (i, j) = (c.members[0], d.members[0]);
                prop_assert!(!(reach[i][j] && reach[j][i]));
            }
        }
    }

    #[test]
    fn hierarchy_invariants(seed in any::<u64>(), n in 1usize..=9) {
        let rows = random_matrix(&mut rng(seed), n);
        let a = validate_matrix(&rows).unwrap();
        let d = hierarchy_decomposition(&a);
        let adj = support(&rows);
        prop_assert!(!d.closed_classes().is_empty());
        let mut order = d.agent_order.clone();
        order.sort_unstable();
        prop_assert_eq!(order, (0..n).collect::<Vec<_>>());
        for c in &d.classes {
            // Every edge leaving the class lands in a declared dependency.
            let mut targets = BTreeSet::new();
            for &i in c.members() {
                for j in 0..n {
                    if adj[i][j] && d.class_of(j) != c.id {
                        targets.insert(d.class_of(j));
                    }
                }
            }
            prop_assert_eq!(targets.iter().copied().collect::<Vec<_>>(), c.dependencies.clone());
            if c.dependencies.is_empty() {
                prop_assert_eq!(c.level, 0);
            } else {
                let top = c.dependencies.iter().map(|&s| d.classes[s].level).max().unwrap();
                prop_assert_eq!(c.level, top + 1);
            }
        }
        // Block lower triangular after the permutation.
        let p = d.permute(&a);
        for (r, &i) in d.agent_order.iter().enumerate() {
            for (s, &j) in d.agent_order.iter().enumerate() {
                if d.class_of(j) > d.class_of(i) {
                    prop_assert_eq!(p[(r, s)], 0.0);
                }
                prop_assert_eq!(p[(r, s)], rows[i][j]);
            }
        }
        let back = d.unpermute(&p);
        prop_assert_eq!(&back, a.weights());
    }

    #[test]
    fn relabelling_agents_relabels_the_structure(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let rows = random_matrix(&mut r, n);
        let mut perm: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut r);
        let d1 = hierarchy_decomposition(&validate_matrix(&rows).unwrap());
        let d2 = hierarchy_decomposition(&validate_matrix(&permute_matrix(&rows, &perm)).unwrap());
        let as_sets = |d: &irsp_core::graph::HierarchyDecomposition, map: &dyn Fn(usize) -> usize| {
            d.classes
                .iter()
                .map(|c| (c.level, c.members().iter().map(|&i| map(i)).collect::<BTreeSet<_>>()))
                .collect::<BTreeSet<_>>()
        };
        prop_assert_eq!(as_sets(&d1, &|i| perm[i]), as_sets(&d2, &|i| i));
    }
}

#[test]
fn two_class_example_structure() {
    let a = validate_matrix(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.25, 0.25, 0.5]]).unwrap();
    let d = hierarchy_decomposition(&a);
    assert_eq!(d.n_levels(), 2);
    assert_eq!(d.classes[0].members(), &[0, 1]);
    assert_eq!(d.classes[1].members(), &[2]);
    assert_eq!(d.classes[1].dependencies, vec![0]);
    let b = bipartiteness(&d.classes[0].class);
    assert!(b.is_bipartite);
    assert_eq!(b.partition, Some((vec![0], vec![1])));
}
