use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cccd::compositions::{count_unrestricted, CompositionIterator};
use cccd::density::{DensityModel, Family};
use cccd::digraph::CccdInstance;
use cccd::exact::{self, QuadratureConfig};
use cccd::multi::{self, AnchorConditional, CellMode};

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::Uniform),
        (0.0..0.45f64).prop_map(|delta| Family::ShrunkUniform { delta }),
        (0.0..0.45f64).prop_map(|delta| Family::GapUniform { delta }),
        (-1.0..1.0f64).prop_map(|delta| Family::TwoStep { delta }),
        (-1.0..1.0f64).prop_map(|delta| Family::ThreeStep { delta }),
        (-2.0..2.0f64).prop_map(|a| Family::Linear { a }),
        (0.2..0.8f64, 0.05..0.5f64).prop_map(|(mu, sigma)| Family::TruncatedNormal { mu, sigma }),
        (0.0..3.0f64).prop_map(|q| Family::QPower { q }),
        (0.0..1.0f64).prop_map(|delta| Family::PieceQuadratic { delta }),
        Just(Family::ArcSine),
        Just(Family::AbsSine),
        (1.0..5.0f64, 1.0..5.0f64).prop_map(|(nu1, nu2)| Family::Beta { nu1, nu2 }),
        Just(Family::SquareCdf),
    ]
}

fn points(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..2.0f64, 1..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fast_domination_is_minimum(xs in points(12), ys in points(4)) {
        let Ok(inst) = CccdInstance::new(xs, ys) else { return Ok(()) };
        let r = inst.domination_number_fast();
        prop_assert_eq!(r.total, inst.domination_number_oracle().unwrap());
        prop_assert!(inst.dominates(&r.dominating_set));
        prop_assert_eq!(r.dominating_set.len(), r.total);
    }

    #[test]
    fn domination_bounds(xs in points(40), ys in points(8)) {
        let Ok(inst) = CccdInstance::new(xs, ys) else { return Ok(()) };
        let g = inst.domination_number_fast().total;
        let occupied = inst.counts().iter().filter(|&&c| c > 0).count();
        let (k1, k2) = inst.upper_bound_terms();
        prop_assert!(g <= inst.n().min(2 * inst.m()));
        prop_assert!(g >= occupied);
        prop_assert!(g <= 2 * k1 + k2);
    }

    #[test]
    fn text_round_trip(xs in points(10), ys in points(4)) {
        let Ok(inst) = CccdInstance::new(xs, ys) else { return Ok(()) };
        prop_assert_eq!(CccdInstance::from_text(&inst.to_text()).unwrap(), inst.clone());
        prop_assert_eq!(CccdInstance::from_json(&inst.to_json()).unwrap(), inst);
    }

    #[test]
    fn cdf_is_monotone_and_quantile_inverts(f in family(), u in 0.001..0.999f64, v in 0.001..0.999f64) {
        let m = DensityModel::new(f).unwrap();
        let (a, b) = (u.min(v), u.max(v));
        let (xa, xb) = (m.quantile(a).unwrap(), m.quantile(b).unwrap());
        prop_assert!(xa <= xb);
        prop_assert!((m.cdf(xa) - a).abs() < 1e-7, "{:?}: F(Q({})) = {}", f, a, m.cdf(xa));
        prop_assert!(m.pdf(xa) >= 0.0);
    }

    #[test]
    fn samples_are_sorted_inside_support(f in family(), seed in any::<u64>(), n in 1usize..50) {
        let m = DensityModel::new(f).unwrap();
        let xs = m.sample(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let s = m.support();
        prop_assert_eq!(xs.len(), n);
        prop_assert!(xs.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(xs.iter().all(|&x| x >= s.lo && x <= s.hi));
    }

    #[test]
    fn spec_round_trip(f in family()) {
        let m = DensityModel::new(f).unwrap();
        let text = serde_json::to_string(&m.to_spec()).unwrap();
        prop_assert_eq!(DensityModel::from_json(&text).unwrap(), m);
    }

    #[test]
    fn composition_count(total in 0usize..9, parts in 1usize..5) {
        let n = CompositionIterator::unrestricted(total, parts).count();
        prop_assert_eq!(num_bigint::BigUint::from(n), count_unrestricted(total, parts));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_forms_match_quadrature(
        which in 0usize..4,
        delta in 0.0..0.3f64,
        n in 2usize..30,
    ) {
        let f = match which {
            0 => Family::ShrunkUniform { delta },
            1 => Family::GapUniform { delta },
            2 => Family::TwoStep { delta: 3.0 * delta - 0.45 },
            _ => Family::Uniform,
        };
        let m = DensityModel::new(f).unwrap();
        let c = exact::p_closed_form(&m, n).unwrap().value;
        let q = exact::p_quadrature(&m, n, &QuadratureConfig::default()).unwrap().value;
        prop_assert!((c - q).abs() < 1e-7, "{:?} n={}: {} vs {}", f, n, c, q);
    }

    #[test]
    fn probability_in_unit_interval(f in family(), n in 1usize..60) {
        let m = DensityModel::new(f).unwrap();
        let p = exact::p_deterministic(&m, n, &QuadratureConfig::default()).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn conditional_pmf_is_a_law(
        f in family(),
        raw in prop::collection::vec(0.02..0.98f64, 1..4),
        n in 1usize..8,
        hu in any::<bool>(),
    ) {
        let mut ys = raw;
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        let fx = DensityModel::new(f).unwrap();
        let mode = if hu { CellMode::Hu } else { CellMode::Restricted };
        let cond = AnchorConditional::new(&fx, &ys, mode, n, &QuadratureConfig::default()).unwrap();
        let a = multi::pmf_conditional(&cond, n).unwrap();
        let b = multi::pmf_conditional_dp(&cond, n).unwrap();
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(a.iter().all(|&p| p >= -1e-15));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
