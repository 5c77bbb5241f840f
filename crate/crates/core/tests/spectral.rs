mod common;

use irsp_core::analysis::analyze;
use irsp_core::dynamics::{bernoulli_probabilities, Forcing, InteractionSystem};
use irsp_core::graph::{hierarchy_decomposition, validate_matrix, RowKind};
use irsp_core::spectral::{drift_system, forced_limit, gershgorin_report, Attitude};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use common::*;

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[test]
fn eigenvalue_oracle_on_three_cycle() {
    let a = validate_matrix(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
    let k = drift_system(a.weights(), a.row_sums(), Attitude::Competitive).k;
    let mut ev = eigenvalues(&to_rows(&k));
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let h = 3f64.sqrt() / 2.0;
    let expected = [(-2.0, 0.0), (-0.5, -h), (-0.5, h)];
    for (e, (re, im)) in ev.iter().zip(expected) {
        assert!((e.re - re).abs() < 1e-12 && (e.im - im).abs() < 1e-12, "{e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    /// `p(z) - z = K z + c` for closed competitive and cooperative classes.
    #[test]
    fn drift_identity(seed in any::<u64>(), n in 2usize..=8) {
        let mut r = rng(seed);
        let rows = random_irreducible_class(&mut r, n);
        let a = validate_matrix(&rows).unwrap();
        for attitude in [Attitude::Competitive, Attitude::Cooperative] {
            let sys = InteractionSystem::uniform(a.clone(), attitude).unwrap();
            let d = drift_system(a.weights(), a.row_sums(), attitude);
            for _ in 0..5 {
                let z: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
                let p = bernoulli_probabilities(&sys, &z, 0).unwrap();
                let drift = d.drift(&DVector::from_vec(z.clone()));
                for i in 0..n {
                    prop_assert!((p[i] - z[i] - drift[i]).abs() < 1e-12);
                }
            }
            if attitude == Attitude::Competitive {
                let half = d.drift(&DVector::from_element(n, 0.5));
                prop_assert!(half.amax() < 1e-12);
            }
        }
    }

    /// Geršgorin discs contain every eigenvalue, and the certificate that
    /// real parts are nonpositive matches the eigenvalues.
    #[test]
    fn gershgorin_against_eigenvalues(seed in any::<u64>(), n in 2usize..=5, mass in 0.5f64..=1.0) {
        let mut r = rng(seed);
        let mut rows = random_irreducible_class(&mut r, n);
        if mass < 1.0 {
            let i = r.random_range(0..n);
            rows[i].iter_mut().for_each(|x| *x *= mass);
        }
        let a = validate_matrix(&rows).unwrap();
        let k = drift_system(a.weights(), a.row_sums(), Attitude::Competitive).k;
        let g = gershgorin_report(&k).unwrap();
        prop_assert!(g.diagonally_dominant && g.irreducible);
        let ev = eigenvalues(&to_rows(&k));
        for e in &ev {
            let in_disc = (0..n).any(|i| {
                let radius: f64 = (0..n).filter(|&j| j != i).map(|j| k[(i, j)].abs()).sum();
                (e - nalgebra::Complex::new(k[(i, i)], 0.0)).norm() <= radius + 1e-10
            });
            prop_assert!(in_disc, "{} outside every disc", e);
            if g.negative_real_part_certificate {
                prop_assert!(e.re <= 1e-10);
                if e.re > -1e-10 {
                    prop_assert!(e.norm() < 1e-10);
                }
            }
        }
        let min_modulus = ev.iter().map(|e| e.norm()).fold(f64::INFINITY, f64::min);
        if g.invertibility_certificate {
            prop_assert!(min_modulus > 1e-10);
        }
        if mass == 1.0 {
            let bip = period_by_walks(&support(&rows)) % 2 == 0;
            prop_assert_eq!(min_modulus < 1e-10, bip);
        }
    }

    /// The forced limit solves `K x + c = 0` and is a fixed point of the
    /// Bernoulli probabilities.
    #[test]
    fn forced_limit_is_a_fixed_point(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let mut rows = if n == 1 { vec![vec![r.random_range(0.0..0.9)]] } else { random_irreducible_class(&mut r, n) };
        let mut forced = Vec::new();
        for (i, row) in rows.iter_mut().enumerate() {
            if n == 1 || r.random_bool(0.5) {
                let mass = r.random_range(0.2..0.9);
                row.iter_mut().for_each(|x| *x *= mass);
                forced.push(i);
            }
        }
        if forced.is_empty() {
            rows[0].iter_mut().for_each(|x| *x *= 0.5);
            forced.push(0);
        }
        let attitude = if r.random_bool(0.5) { Attitude::Competitive } else { Attitude::Cooperative };
        let a = validate_matrix(&rows).unwrap();
        let mut b = InteractionSystem::builder(a.clone()).global_attitude(attitude);
        let mut q = vec![0.0; n];
        for &i in &forced {
            q[i] = r.random::<f64>();
            b = b.forcing(i, Forcing::Constant(q[i]));
        }
        let sys = b.build().unwrap();
        let d = drift_system(a.weights(), a.row_sums(), attitude);
        let x = forced_limit(&d.k, &d.offset(&q)).unwrap();
        prop_assert!(x.in_unit_box);
        prop_assert!((&d.k * &x.values + d.offset(&q)).amax() < 1e-9);
        let xs: Vec<f64> = x.values.iter().copied().collect();
        let p = bernoulli_probabilities(&sys, &xs, 0).unwrap();
        for i in 0..n {
            prop_assert!((p[i] - xs[i]).abs() < 1e-9);
        }
    }

    /// Feeding any level-0 values through the recursion yields a state whose
    /// upper-level agents are fixed points of the Bernoulli probabilities.
    #[test]
    fn hierarchical_limit_is_a_fixed_point(seed in any::<u64>(), n in 2usize..=9) {
        let mut r = rng(seed);
        let rows = random_matrix(&mut r, n);
        let a = validate_matrix(&rows).unwrap();
        let d = hierarchy_decomposition(&a);
        let class_att: Vec<Attitude> = d
            .classes
            .iter()
            .map(|_| if r.random_bool(0.5) { Attitude::Competitive } else { Attitude::Cooperative })
            .collect();
        let attitudes = (0..n).map(|i| Some(class_att[d.class_of(i)])).collect();
        let mut b = InteractionSystem::builder(a.clone()).attitudes(attitudes);
        for i in 0..n {
            if a.row_kind(i) == RowKind::Substochastic && r.random_bool(0.7) {
                b = b.forcing(i, Forcing::Constant(r.random::<f64>()));
            }
        }
        let sys = b.build().unwrap();
        let an = analyze(&sys).unwrap();
        let mut state: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let limits = an.limits_given_level0(&sys, &state).unwrap();
        for c in &an.classes {
            for (k, &i) in c.members.iter().enumerate() {
                if c.level > 0 {
                    state[i] = limits[c.id][k];
                } else {
                    prop_assert_eq!(state[i], limits[c.id][k]);
                }
            }
        }
        let p = bernoulli_probabilities(&sys, &state, u64::MAX).unwrap();
        for c in an.classes.iter().filter(|c| c.level > 0) {
            for &i in &c.members {
                prop_assert!((p[i] - state[i]).abs() < 1e-9, "agent {} p {} z {}", i, p[i], state[i]);
            }
        }
    }
}
