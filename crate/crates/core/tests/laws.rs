//! Exact laws against independent oracles.

use cccd::asymptotics;
use cccd::density::{DensityModel, Family};
use cccd::exact::{self, QuadratureConfig};
use cccd::montecarlo::{self, Anchors, CellSampling, SimulationPlan};
use cccd::multi::{self, CellMode, RandomAnchorOptions};

fn model(f: Family) -> DensityModel {
    DensityModel::new(f).unwrap()
}

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

#[test]
fn gap_uniform_law_matches_simulation() {
    // The printed formula gives 0.5208 here.
    for (delta, n) in [(0.1, 2usize), (0.1, 4), (0.25, 3)] {
        let m = model(Family::GapUniform { delta });
        let p = exact::p_closed_form(&m, n).unwrap().value;
        let plan = SimulationPlan::new(m, Anchors::Fixed(vec![0.0, 1.0]), n, 400_000, 31);
        let e = montecarlo::run(&plan).unwrap();
        let se = (p * (1.0 - p) / e.reps as f64).sqrt();
        assert!((e.fraction(2) - p).abs() < 4.0 * se, "delta={delta} n={n}: {} vs {p}", e.fraction(2));
    }
}

#[test]
fn arcsine_tail_is_pi_over_n() {
    // A point lands in the Gamma-1 region with probability about n f(1/2) E[width],
    // and E[width] ~ 2 (pi/2)^2 / n^2, so 1 - p_n ~ pi / n.
    for n in [200usize, 1000] {
        let p = exact::p_quadrature(&model(Family::ArcSine), n, &cfg()).unwrap().value;
        let scaled = n as f64 * (1.0 - p);
        assert!((scaled - std::f64::consts::PI).abs() < 25.0 / n as f64, "n={n}: {scaled}");
    }
}

#[test]
fn beta_mirror_symmetry() {
    for (a, b) in [(4.0, 1.0), (2.0, 3.5), (1.5, 2.0)] {
        for n in [3usize, 20, 100] {
            let p = exact::p_quadrature(&model(Family::Beta { nu1: a, nu2: b }), n, &cfg()).unwrap().value;
            let q = exact::p_quadrature(&model(Family::Beta { nu1: b, nu2: a }), n, &cfg()).unwrap().value;
            assert!((p - q).abs() < 1e-9, "({a},{b}) n={n}: {p} vs {q}");
        }
    }
}

#[test]
fn square_cdf_series_matches_quadrature() {
    let m = model(Family::SquareCdf);
    for n in [2usize, 7, 30, 60] {
        let a = exact::p_multinomial_squarecdf(n).unwrap().value;
        let q = exact::p_quadrature(&m, n, &cfg()).unwrap().value;
        assert!((a - q).abs() < 1e-8, "n={n}: {a} vs {q}");
    }
}

#[test]
fn large_n_approaches_limit() {
    for f in [Family::Linear { a: 1.0 }, Family::AbsSine, Family::ThreeStep { delta: 0.3 }, Family::QPower { q: 2.0 }] {
        let m = model(f);
        let lim = asymptotics::p_limit(&m).unwrap().p_limit;
        let d200 = (exact::p_quadrature(&m, 200, &cfg()).unwrap().value - lim).abs();
        let d800 = (exact::p_quadrature(&m, 800, &cfg()).unwrap().value - lim).abs();
        assert!(d800 <= d200 + 1e-12 && d800 < 0.01, "{f:?}: {d200} then {d800}");
    }
}

#[test]
fn log_domain_agrees_with_direct_powers() {
    let lin = QuadratureConfig { log_domain: false, ..cfg() };
    for f in [Family::Uniform, Family::Linear { a: 1.0 }, Family::Beta { nu1: 2.0, nu2: 3.0 }, Family::AbsSine] {
        let a = exact::p_quadrature(&model(f), 10, &cfg()).unwrap().value;
        let b = exact::p_quadrature(&model(f), 10, &lin).unwrap().value;
        assert!((a - b).abs() < 1e-9, "{f:?}");
    }
}

#[test]
fn random_anchor_law_matches_simulation() {
    let u = model(Family::Uniform);
    let opts = RandomAnchorOptions { mode: CellMode::Hu, monte_carlo: None };
    let exact = multi::pmf_random_anchors(&u, &u, 5, 3, &opts, &cfg()).unwrap();
    let mut plan = SimulationPlan::new(u, Anchors::Random { fy: u, m: 3 }, 5, 200_000, 12);
    plan.sampling = CellSampling::Rescaled;
    let mc = montecarlo::run(&plan).unwrap().pmf();
    for (k, (p, q)) in exact.iter().zip(&mc).enumerate() {
        let se = (p * (1.0 - p) / 200_000.0).sqrt().max(1e-5);
        assert!((p - q).abs() < 4.0 * se, "k={k}: {p} vs {q}");
    }
}

#[test]
fn limit_law_with_fixed_anchors() {
    let law = multi::asymptotic_law_fixed_m(&[4.0 / 9.0], 3).unwrap();
    let p = 4.0 / 9.0;
    assert_eq!(law.len(), 7);
    assert!((law[4] - (1.0 - p) * (1.0 - p)).abs() < 1e-15);
    assert!((law[5] - 2.0 * p * (1.0 - p)).abs() < 1e-15);
    assert!((law[6] - p * p).abs() < 1e-15);
}
