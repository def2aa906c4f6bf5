//! Properties of the Walsh system, kernels and summation operators.

mod common;

use proptest::prelude::*;

use mohardy::grid::{cond_expect, DyadicGrid, SampledFunction};
use mohardy::walsh::{
    analyze, dirichlet_kernel, fejer_bound, fejer_kernel, fejer_mean, maximal_fejer,
    maximal_fejer_dyadic, partial_sum, walsh,
};
use mohardy::{builtin, luxemburg_norm};

fn sampled(v: &[f64]) -> SampledFunction {
    SampledFunction::from_values(v.to_vec()).unwrap()
}

proptest! {
    #[test]
    fn walsh_functions_match_digit_products(bits in 1u32..9, n in any::<usize>()) {
        let grid = DyadicGrid::new(bits).unwrap();
        let n = n % grid.len();
        let w = walsh(n, grid).unwrap();
        for i in 0..grid.len() {
            prop_assert_eq!(w.values()[i], common::walsh(n, i, bits));
        }
    }

    #[test]
    fn walsh_functions_multiply_by_xor(bits in 1u32..9, a in any::<usize>(), b in any::<usize>()) {
        let grid = DyadicGrid::new(bits).unwrap();
        let (a, b) = (a % grid.len(), b % grid.len());
        let (wa, wb, wab) = (walsh(a, grid).unwrap(), walsh(b, grid).unwrap(), walsh(a ^ b, grid).unwrap());
        let product = wa.zip_with(&wb, |x, y| x * y).unwrap();
        prop_assert_eq!(product.values(), wab.values());
    }

    #[test]
    fn parseval(v in common::samples(10, 10.0)) {
        let spec = analyze(&sampled(&v));
        let l2 = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        prop_assert!((spec.energy() - l2).abs() <= 1e-10 * l2.max(1e-300));
    }

    #[test]
    fn fejer_kernel_is_below_its_majorant(bits in 1u32..9, n in any::<usize>()) {
        let grid = DyadicGrid::new(bits).unwrap();
        let n = 1 + n % grid.len();
        let k = fejer_kernel(n, grid).unwrap();
        let bound = fejer_bound(n, grid).unwrap();
        for (a, b) in k.values.values().iter().zip(bound.values()) {
            prop_assert!(a.abs() <= b + 1e-9 * b.abs().max(1.0), "|K_{}| = {} > {}", n, a.abs(), b);
        }
    }

    #[test]
    fn fejer_mean_averages_partial_sums(v in common::samples(6, 10.0), n in 1usize..65) {
        let f = sampled(&v);
        let n = n.min(v.len());
        let mut avg = vec![0.0; v.len()];
        for k in 1..=n {
            for (a, s) in avg.iter_mut().zip(partial_sum(&f, k).values()) {
                *a += s / n as f64;
            }
        }
        let got = fejer_mean(&f, n).unwrap();
        prop_assert!(common::max_diff(got.values(), &avg) <= 1e-12 * common::sup(&v).max(1.0));
    }

    #[test]
    fn dirichlet_kernel_is_sum_of_walsh(bits in 1u32..8, n in any::<usize>()) {
        let grid = DyadicGrid::new(bits).unwrap();
        let n = 1 + n % grid.len();
        let d = dirichlet_kernel(n, grid).unwrap();
        for i in 0..grid.len() {
            let oracle: f64 = (0..n).map(|j| common::walsh(j, i, bits)).sum();
            prop_assert_eq!(d.values.values()[i], oracle);
        }
    }

    #[test]
    fn maximal_fejer_dominates(v in common::samples(7, 10.0)) {
        let f = sampled(&v);
        let full = maximal_fejer(&f);
        let dyadic = maximal_fejer_dyadic(&f);
        for i in 0..v.len() {
            prop_assert!(full.values()[i] >= v[i].abs());
            prop_assert!(full.values()[i] >= dyadic.values()[i] - 1e-12 * common::sup(&v).max(1.0));
        }
    }

    #[test]
    fn dyadic_partial_sums_in_l2_are_nonincreasing(v in common::samples(8, 10.0)) {
        let phi = builtin("power:p=2").unwrap();
        let f = sampled(&v);
        let bits = f.grid().resolution();
        let errors: Vec<f64> = (0..=bits)
            .map(|n| luxemburg_norm(&phi, &f.zip_with(&cond_expect(&f, n).unwrap(), |a, b| a - b).unwrap()).unwrap())
            .collect();
        for w in errors.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-10));
        }
        prop_assert!(errors[bits as usize] == 0.0);
    }
}

#[test]
fn dyadic_partial_sum_and_fejer_errors_can_grow_in_l1() {
    let phi = builtin("power:p=1").unwrap();
    let f = sampled(&[0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 1.0, 1.0]);
    let err =
        |g: SampledFunction| luxemburg_norm(&phi, &f.zip_with(&g, |a, b| a - b).unwrap()).unwrap();
    let (e0, e1) = (err(partial_sum(&f, 1)), err(partial_sum(&f, 2)));
    assert!(
        (e0 - 0.9375).abs() < 1e-9 && (e1 - 1.0).abs() < 1e-9,
        "{e0} {e1}"
    );
    let (s1, s2) = (
        err(fejer_mean(&f, 1).unwrap()),
        err(fejer_mean(&f, 2).unwrap()),
    );
    assert!(
        (s1 - 0.9375).abs() < 1e-9 && (s2 - 0.96875).abs() < 1e-9,
        "{s1} {s2}"
    );
}
