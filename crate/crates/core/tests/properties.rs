use givens_sweep::linalg::{qr_factorize, qr_factorize_ordered, FactorMethod};
use givens_sweep::schedule::{family_count, greedy_swaps, mask_of, verify_coverage};
use givens_sweep::{sweep, Dataset, FamilyKey, SweepOptions};
use proptest::prelude::*;

fn frob(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grc_keeps_the_gram_matrix(seed in any::<u64>(), swaps in prop::collection::vec(1usize..8, 500)) {
        let data = Dataset::synthetic(100, 8, seed).unwrap();
        let gram = data.gram();
        let mut factor = qr_factorize(&data, FactorMethod::Householder).unwrap().factor;
        for &i in &swaps {
            factor.grc(i).unwrap();
        }
        prop_assert!(factor.gram_residual(&gram) <= 1e-8 * frob(&gram));
    }

    #[test]
    fn grc_is_local_and_triangular(seed in any::<u64>(), i in 1usize..6) {
        let m = 6;
        let data = Dataset::synthetic(30, m, seed).unwrap();
        let mut factor = qr_factorize(&data, FactorMethod::Householder).unwrap().factor;
        let before = factor.clone();
        let rot = factor.grc(i).unwrap();
        prop_assert!((rot.c * rot.c + rot.s * rot.s - 1.0).abs() <= 1e-12);

        let (p, q) = (i - 1, i);
        for row in 0..m {
            for col in 0..m {
                let v = factor.get(row, col);
                if row > col {
                    prop_assert_eq!(v, 0.0);
                } else if row == col {
                    prop_assert!(v > 0.0);
                }
                let touched_row = row == p || row == q;
                let touched_col = col == p || col == q;
                if !touched_row && !touched_col {
                    prop_assert_eq!(v.to_bits(), before.get(row, col).to_bits());
                }
                if row < p && touched_col {
                    let other = if col == p { q } else { p };
                    prop_assert_eq!(v.to_bits(), before.get(row, other).to_bits());
                }
            }
        }
    }

    #[test]
    fn grc_twice_is_the_identity(seed in any::<u64>(), i in 1usize..7) {
        let data = Dataset::synthetic(40, 7, seed).unwrap();
        let mut factor = qr_factorize(&data, FactorMethod::Householder).unwrap().factor;
        let before = factor.clone();
        factor.grc(i).unwrap();
        factor.grc(i).unwrap();
        prop_assert_eq!(factor.order(), before.order());
        let scale = frob(before.r());
        for (a, b) in factor.r().iter().zip(before.r()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn more_parents_never_raise_rss(seed in any::<u64>()) {
        let data = Dataset::synthetic(40, 6, seed).unwrap();
        let table = sweep(&data, &SweepOptions::default()).unwrap().table;
        for (key, result) in table.iter() {
            for extra in 0..6 {
                let bit = 1u64 << extra;
                if extra == key.response || key.parents & bit != 0 {
                    continue;
                }
                let bigger = table.get(FamilyKey::new(key.response, key.parents | bit).unwrap()).unwrap();
                prop_assert!(bigger.rss <= result.rss * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn column_order_does_not_matter(seed in any::<u64>(), order in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let data = Dataset::synthetic(30, 5, seed).unwrap();
        let permuted = data.select_columns(&order).unwrap();
        let a = sweep(&data, &SweepOptions::default()).unwrap().table;
        let b = sweep(&permuted, &SweepOptions::default()).unwrap().table;
        for (key, got) in b.iter() {
            let parents: Vec<usize> = key.parent_ids().map(|p| order[p]).collect();
            let want = a.get(FamilyKey::new(order[key.response], mask_of(&parents)).unwrap()).unwrap();
            prop_assert!((got.rss - want.rss).abs() <= 1e-10 * want.rss);
        }
    }

    #[test]
    fn seed_order_does_not_change_results(seed in any::<u64>(), order in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let data = Dataset::synthetic(30, 5, seed).unwrap();
        let a = qr_factorize(&data, FactorMethod::Householder).unwrap().factor;
        let b = qr_factorize_ordered(&data, &order, FactorMethod::Householder).unwrap().factor;
        let g = data.gram();
        prop_assert!(a.gram_residual(&g) <= 1e-10 * frob(&g));
        prop_assert!(b.gram_residual(&g) <= 1e-10 * frob(&g));
    }
}

#[test]
fn every_family_is_solved_exactly_once() {
    for m in 2..=12 {
        let schedule = greedy_swaps(m).unwrap();
        let cov = verify_coverage(m, &schedule);
        assert_eq!(cov.covered, family_count(m), "m={m}");
        assert!(cov.complete);
    }
    for m in 2..=9 {
        let data = Dataset::synthetic(m + 20, m, m as u64).unwrap();
        let out = sweep(
            &data,
            &SweepOptions {
                include_empty: false,
                ..SweepOptions::default()
            },
        )
        .unwrap();
        assert_eq!(out.table.len() as u64, family_count(m), "m={m}");
    }
}

#[test]
fn cholesky_and_householder_agree() {
    let data = Dataset::synthetic(60, 6, 11).unwrap();
    let qr = sweep(&data, &SweepOptions::default()).unwrap().table;
    let ch = sweep(
        &data,
        &SweepOptions {
            method: FactorMethod::Cholesky,
            ..SweepOptions::default()
        },
    )
    .unwrap()
    .table;
    for ((ka, a), (kb, b)) in qr.iter().zip(ch.iter()) {
        assert_eq!(ka, kb);
        assert!((a.rss - b.rss).abs() <= 1e-8 * a.rss);
    }
}
