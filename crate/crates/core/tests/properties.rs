mod common;

use std::collections::BTreeMap;

use common::*;
use mtbp_core::classify::{classify, ClassifyThresholds};
use mtbp_core::genfun::{compose_pgf, extinction_curve};
use mtbp_core::linalg::{l1, mat_vec, Matrix};
use mtbp_core::model::{skip_generations, Atom, OffspringLaw, SkipOptions};
use mtbp_core::spectral::{eigen_sequence, hilbert_distance, projective_diameter};
use mtbp_core::{BranchingModel, Exec};
use proptest::prelude::*;

/// Random law on `{0..=3}^d` with every atom weight at least 0.01.
fn law_strategy(d: usize) -> impl Strategy<Value = OffspringLaw> {
    let atom = prop::collection::vec(0u32..=3, d);
    prop::collection::vec((atom, 0.01f64..1.0), 2..6).prop_map(move |raw| {
        let total: f64 = raw.iter().map(|r| r.1).sum();
        let mut merged = BTreeMap::new();
        for (offspring, w) in raw {
            *merged.entry(offspring).or_insert(0.0) += w / total;
        }
        let atoms = merged.into_iter().map(|(offspring, p)| Atom { offspring, p }).collect();
        OffspringLaw::new(d, atoms, "random").unwrap()
    })
}

/// Random laws in which every type has positive mass on two or more children of every type.
fn rich_law_strategy(d: usize) -> impl Strategy<Value = OffspringLaw> {
    (law_strategy(d), 0.05f64..0.3).prop_map(move |(base, w)| {
        let mut merged: BTreeMap<Vec<u32>, f64> =
            base.atoms().iter().map(|a| (a.offspring.clone(), a.p * (1.0 - w))).collect();
        *merged.entry(vec![2; d]).or_insert(0.0) += w / 2.0;
        *merged.entry(vec![0; d]).or_insert(0.0) += w / 2.0;
        let atoms = merged.into_iter().map(|(offspring, p)| Atom { offspring, p }).collect();
        OffspringLaw::new(d, atoms, "rich").unwrap()
    })
}

fn model_strategy(d: usize, steps: usize) -> impl Strategy<Value = BranchingModel> {
    prop::collection::vec(prop::collection::vec(rich_law_strategy(d), d), steps)
        .prop_map(|s| BranchingModel::periodic(s).unwrap())
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..0.95, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_finite_differences(law in law_strategy(2), s in point(2)) {
        let h = 1e-6;
        let g = law.gradient(&s).unwrap();
        for i in 0..2 {
            let (mut up, mut down) = (s.clone(), s.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (law.pgf(&up).unwrap() - law.pgf(&down).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-4, "i={i} fd={fd} g={}", g[i]);
        }
    }

    #[test]
    fn hessian_matches_finite_differences(law in law_strategy(2), s in point(2)) {
        let h = 1e-5;
        let hess = law.hessian(&s).unwrap();
        for j in 0..2 {
            let (mut up, mut down) = (s.clone(), s.clone());
            up[j] += h;
            down[j] -= h;
            let (gu, gd) = (law.gradient(&up).unwrap(), law.gradient(&down).unwrap());
            for i in 0..2 {
                let fd = (gu[i] - gd[i]) / (2.0 * h);
                prop_assert!((fd - hess[(i, j)]).abs() <= 1e-4);
            }
        }
        prop_assert!((hess[(0, 1)] - hess[(1, 0)]).abs() <= 1e-12);
    }

    #[test]
    fn pgf_is_normalized_and_bounded(law in law_strategy(3), s in point(3)) {
        prop_assert!((law.pgf(&[1.0; 3]).unwrap() - 1.0).abs() <= 1e-12);
        let v = law.pgf(&s).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!((law.pgf(&[0.0; 3]).unwrap() - law.prob_zero()).abs() <= 1e-15);
    }

    #[test]
    fn composition_splits_at_any_midpoint(model in model_strategy(2, 3), s in point(2), k in 0usize..6, extra in 0usize..6) {
        let n = k + extra;
        let whole = compose_pgf(&model, 0, n, &s).unwrap();
        let inner = compose_pgf(&model, k, n, &s).unwrap();
        let split = compose_pgf(&model, 0, k, &inner).unwrap();
        for (a, b) in whole.iter().zip(&split) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn extinction_is_monotone(model in model_strategy(2, 2)) {
        let curve = extinction_curve(&model, 40, Exec::default()).unwrap();
        for n in 1..=40 {
            for j in 0..2 {
                prop_assert!(curve.extinction(n, j) + 1e-15 >= curve.extinction(n - 1, j));
                prop_assert!((0.0..=1.0).contains(&curve.survival[n][j]));
            }
        }
    }

    #[test]
    fn skip_lengths_compose(model in model_strategy(1, 2), l in 1usize..4, m in 1usize..3) {
        let opts = SkipOptions::default();
        let (once, _) = skip_generations(&model, l * m, opts).unwrap();
        let (first, _) = skip_generations(&model, l, opts).unwrap();
        let (twice, _) = skip_generations(&first, m, opts).unwrap();
        for n in 0..3 {
            for s in [0.0, 0.3, 0.7] {
                let a = once.pgf(n, &[s]).unwrap()[0];
                let b = twice.pgf(n, &[s]).unwrap()[0];
                prop_assert!((a - b).abs() <= 2.0 * opts.mass_tol, "n={n} s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn birkhoff_contraction(
        entries in prop::collection::vec(0.01f64..10.0, 9),
        u in prop::collection::vec(0.01f64..10.0, 3),
        v in prop::collection::vec(0.01f64..10.0, 3),
    ) {
        let a = Matrix::from_row_slice(3, 3, &entries);
        let before = hilbert_distance(&u, &v).unwrap();
        let after = hilbert_distance(&mat_vec(&a, &u), &mat_vec(&a, &v)).unwrap();
        let coef = (projective_diameter(&a) / 4.0).tanh();
        prop_assert!(after <= coef * before * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn hilbert_bounds_the_l1_distance(
        u in prop::collection::vec(0.01f64..10.0, 4),
        v in prop::collection::vec(0.01f64..10.0, 4),
        scale in 0.1f64..10.0,
    ) {
        let dist = hilbert_distance(&u, &v).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
        prop_assert!((hilbert_distance(&u, &scaled).unwrap() - dist).abs() <= 1e-12);
        let (su, sv) = (l1(&u), l1(&v));
        let gap: f64 = u.iter().zip(&v).map(|(a, b)| (a / su - b / sv).abs()).sum();
        prop_assert!(gap <= dist.exp_m1() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn duality_is_constant(model in model_strategy(2, 2)) {
        let eigs = eigen_sequence(&model, 60, None, 1e-12).unwrap();
        let c0 = eigs.duality(0);
        for n in 0..=60 {
            prop_assert!((eigs.duality(n) / c0 - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn verdict_ignores_type_labels(model in model_strategy(2, 2)) {
        let th = ClassifyThresholds::default();
        let a = classify(&model, 256, th, Exec::default()).unwrap();
        let b = classify(&model.permuted(&[1, 0]).unwrap(), 256, th, Exec::default()).unwrap();
        prop_assert_eq!(a.exact_verdict, b.exact_verdict);
        prop_assert!((a.log_rho - b.log_rho).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn verdict_survives_skipping(model in model_strategy(1, 2), l in 2usize..=4) {
        let th = ClassifyThresholds::default();
        let (skipped, _) = skip_generations(&model, l, SkipOptions::default()).unwrap();
        let a = classify(&model, 512, th, Exec::default()).unwrap();
        let b = classify(&skipped, 512, th, Exec::default()).unwrap();
        let blocks = (l * b.period) as f64 / a.period as f64;
        prop_assert!((b.log_rho - a.log_rho * blocks).abs() <= 1e-9 * (1.0 + a.log_rho.abs() * blocks));
        if a.log_rho.abs() > 1e-6 {
            prop_assert_eq!(a.exact_verdict, b.exact_verdict);
        }
    }
}

#[test]
fn verdict_survives_skipping_on_the_examples() {
    let th = ClassifyThresholds::default();
    for model in [critical(), supercritical(), subcritical(), periodic_two_type(), critical_two_type()] {
        let base = classify(&model, 1024, th, Exec::default()).unwrap().verdict;
        for l in 1..=4 {
            let (skipped, _) = skip_generations(&model, l, SkipOptions::default()).unwrap();
            assert_eq!(classify(&skipped, 1024, th, Exec::default()).unwrap().verdict, base, "l={l}");
        }
    }
}
