//! Properties of the Luxemburg norm, the rescaling, the complementary function and A_q constants.

mod common;

use proptest::prelude::*;

use mohardy::grid::{DyadicGrid, SampledFunction};
use mohardy::musielak::{check_aq, complementary, power_rescale, MusielakFunction, TGrid, Weight};
use mohardy::{builtin, luxemburg_norm, modular};

const SPECS: [&str; 9] = [
    "power:p=0.5",
    "power:p=1",
    "power:p=2.5",
    "orlicz-exp",
    "loglow:alpha=1.5",
    "loggrow:alpha=1.5",
    "logdamp:alpha=2",
    "double-phase:p=2,q=4,w=one",
    "xlog:alpha=2,beta=1,gamma=1",
];

fn sampled(v: &[f64]) -> SampledFunction {
    SampledFunction::from_values(v.to_vec()).unwrap()
}

proptest! {
    #[test]
    fn norm_is_homogeneous(v in common::samples(6, 3.0), c in -5.0f64..5.0, spec in prop::sample::select(SPECS.to_vec())) {
        let phi = builtin(spec).unwrap();
        let f = sampled(&v);
        let n = luxemburg_norm(&phi, &f).unwrap();
        let nc = luxemburg_norm(&phi, &f.scale(c)).unwrap();
        prop_assert!((nc - c.abs() * n).abs() <= 1e-8 * c.abs() * n + 1e-300);
    }

    #[test]
    fn norm_is_monotone(
        v in common::samples(6, 1.0),
        shrink in prop::collection::vec(0.0f64..=1.0, 64),
        spec in prop::sample::select(SPECS.to_vec()),
    ) {
        let phi = builtin(spec).unwrap();
        let g = sampled(&v);
        let f = sampled(&v.iter().zip(&shrink).map(|(a, s)| a * s).collect::<Vec<_>>());
        prop_assert!(luxemburg_norm(&phi, &f).unwrap() <= luxemburg_norm(&phi, &g).unwrap() + 1e-10);
    }

    #[test]
    fn modular_at_norm_is_one(v in common::samples(6, 3.0), spec in prop::sample::select(SPECS.to_vec())) {
        let phi = builtin(spec).unwrap();
        let f = sampled(&v);
        let n = luxemburg_norm(&phi, &f).unwrap();
        prop_assume!(n > 0.0);
        let rho = modular(&phi, &f.scale(n.recip())).unwrap();
        prop_assert!((rho - 1.0).abs() <= 1e-6, "modular {}", rho);
    }

    #[test]
    fn rescaling_identity(v in common::samples(6, 3.0), r in 0.2f64..=1.0, spec in prop::sample::select(SPECS.to_vec())) {
        let phi = builtin(spec).unwrap();
        let f = sampled(&v);
        let rescaled = power_rescale(&phi, r).unwrap();
        let lhs = luxemburg_norm(&phi, &f.map(|x| x.abs().powf(r))).unwrap();
        let rhs = luxemburg_norm(&rescaled, &f).unwrap().powf(r);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.max(1e-300));
    }

    #[test]
    fn power_biconjugate_is_identity(p in 1.1f64..6.0, t in 1e-3f64..1e3) {
        let phi = MusielakFunction::power(p).unwrap();
        let grid = DyadicGrid::new(2).unwrap();
        let tg = TGrid::default();
        let star = complementary(&phi, &tg, grid).unwrap();
        let back = complementary(&star, &tg, grid).unwrap();
        let (a, b) = (phi.eval(0.3, t), back.eval(0.3, t));
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn numeric_complementary_is_convex_nondecreasing(q in 2.5f64..5.0) {
        let phi = builtin(&format!("double-phase:p=2,q={q},w=one")).unwrap();
        let grid = DyadicGrid::new(2).unwrap();
        let tg = TGrid::new(1e-3, 1e3, 64).unwrap();
        let star = complementary(&phi, &tg, grid).unwrap();
        let t = tg.points();
        let v: Vec<f64> = t.iter().map(|&t| star.eval(0.5, t)).collect();
        for k in 1..t.len() {
            prop_assert!(v[k] >= v[k - 1]);
        }
        for k in 1..t.len() - 1 {
            let chord = v[k - 1] + (v[k + 1] - v[k - 1]) * (t[k] - t[k - 1]) / (t[k + 1] - t[k - 1]);
            prop_assert!(v[k] <= chord * (1.0 + 1e-9) + 1e-12, "not convex at t = {}", t[k]);
        }
    }

    #[test]
    fn aq_constant_nonincreasing_in_q(bits in 2u32..7, seed in any::<u64>(), q in 1.0f64..8.0, dq in 0.0f64..8.0) {
        let grid = DyadicGrid::new(bits).unwrap();
        let mut rng = common::rng(seed);
        let w: Vec<f64> = common::uniform(&mut rng, grid.len(), 2.0).into_iter().map(f64::exp2).collect();
        let phi = MusielakFunction::double_phase(1.5, 3.0, Weight::Sampled(SampledFunction::new(grid, w).unwrap())).unwrap();
        let tg = TGrid::new(1e-3, 1e3, 64).unwrap();
        let k1 = check_aq(&phi, q, &tg, grid).unwrap().k;
        let k2 = check_aq(&phi, q + dq, &tg, grid).unwrap().k;
        prop_assert!(k2 <= k1 * (1.0 + 1e-12), "K({}) = {} < K({}) = {}", q, k1, q + dq, k2);
    }
}

#[test]
fn power_norm_matches_closed_form() {
    let f = sampled(&[2.0, 2.0, 0.0, 0.0]);
    for p in [0.5, 1.0, 2.0, 4.0] {
        let phi = MusielakFunction::power(p).unwrap();
        let exact = common::lp(f.values(), p);
        let got = luxemburg_norm(&phi, &f).unwrap();
        assert!(
            (got - exact).abs() <= 1e-9 * exact,
            "p = {p}: {got} vs {exact}"
        );
    }
}
