//! Properties of the atomic decompositions, weighted stopping times and the Davis split.

mod common;

use proptest::prelude::*;

use mohardy::atoms::{
    davis_decompose, davis_report, maximal_atomic_decompose, pq_atomic_decompose,
    s_atomic_decompose, validate_atom, AtomKind, DavisKind, PqKind,
};
use mohardy::grid::{martingale_of, SampledFunction, TAU_INFINITY};
use mohardy::operators::{variation, VariationKind};
use mohardy::{builtin, luxemburg_norm};

const SPECS: [&str; 4] = ["power:p=1", "power:p=2", "loggrow:alpha=1.5", "power:p=0.6"];

fn centered(v: &[f64]) -> mohardy::grid::DyadicMartingale {
    martingale_of(&SampledFunction::from_values(v.to_vec()).unwrap(), true)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_construction_reconstructs_with_valid_atoms(
        v in common::samples(6, 10.0),
        spec in prop::sample::select(SPECS.to_vec()),
        which in 0usize..5,
    ) {
        let m = centered(&v);
        let phi = builtin(spec).unwrap();
        let dec = match which {
            0 => s_atomic_decompose(&m, &phi),
            1 => pq_atomic_decompose(&m, &phi, PqKind::P),
            2 => pq_atomic_decompose(&m, &phi, PqKind::Q),
            3 => maximal_atomic_decompose(&m, &phi, AtomKind::Maximal, 1.0),
            _ => maximal_atomic_decompose(&m, &phi, AtomKind::Square, 1.0),
        }
        .unwrap();
        let levels = common::martingale(&v, true);
        let mut sum = vec![vec![0.0; v.len()]; levels.len()];
        for t in &dec.triples {
            prop_assert!(validate_atom(&t.atom, &t.nu, &phi, dec.kind).unwrap().pass);
            for (n, l) in t.atom.levels().iter().enumerate() {
                for (acc, a) in sum[n].iter_mut().zip(l.values()) {
                    *acc += t.mu * a;
                }
            }
        }
        let scale = common::sup(&v).max(1.0);
        for (n, l) in levels.iter().enumerate() {
            prop_assert!(common::max_diff(&sum[n], l) <= 1e-9 * scale);
        }
        let ks: Vec<i32> = dec.triples.iter().map(|t| t.k).collect();
        prop_assert!(ks.windows(2).all(|w| w[0] < w[1]));
        for w in dec.triples.windows(2) {
            for i in 0..v.len() {
                prop_assert!(w[0].nu.at(i) <= w[1].nu.at(i));
            }
        }
    }

    #[test]
    fn conditional_stopping_sets_are_level_sets(v in common::samples(7, 10.0)) {
        let m = centered(&v);
        let phi = builtin("power:p=1").unwrap();
        let dec = s_atomic_decompose(&m, &phi).unwrap();
        let s = variation(&m, VariationKind::Conditional, None).unwrap();
        for t in &dec.triples {
            let level = 2f64.powi(t.k);
            for i in 0..v.len() {
                prop_assert_eq!(t.nu.at(i) != TAU_INFINITY, s.values()[i] > level);
            }
        }
    }

    #[test]
    fn conditional_atomic_norm_is_equivalent(v in common::samples(7, 10.0), r in 0.3f64..=1.0) {
        let m = centered(&v);
        let phi = builtin("power:p=1.5").unwrap();
        let dec = s_atomic_decompose(&m, &phi).unwrap().with_r(r).unwrap();
        let s = luxemburg_norm(&phi, &variation(&m, VariationKind::Conditional, None).unwrap()).unwrap();
        let an = dec.atomic_norm().unwrap();
        let upper = 2.0 * (2f64.powf(r) / (2f64.powf(r) - 1.0)).powf(r.recip()) * s;
        prop_assert!(an <= upper * (1.0 + 1e-9));
    }

    #[test]
    fn davis_split_and_bounds(v in common::samples(9, 10.0), kind in prop::sample::select(vec![DavisKind::S, DavisKind::M])) {
        let m = centered(&v);
        let pair = davis_decompose(&m, kind).unwrap();
        let rep = davis_report(&m, &pair);
        let scale = common::sup(&v).max(1.0);
        prop_assert!(rep.split_error <= 1e-12 * scale);
        prop_assert!(rep.jump_slack >= -1e-12 * scale);
        prop_assert!(rep.remainder_slack >= 0.0);
    }
}
