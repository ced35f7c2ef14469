//! A fast subset of the invariant suites, runnable from the binary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::density::{DensityModel, Family};
use crate::digraph::CccdInstance;
use crate::error::Result;
use crate::exact::{self, QuadratureConfig};
use crate::multi::{self, AnchorConditional, CellMode};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl SelftestCheck {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        SelftestCheck {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

const ORACLE_INSTANCES: usize = 1000;
/// Added to every closed-form value under `mutate`.
const MUTATION: f64 = 1e-3;

fn families() -> Vec<Family> {
    vec![
        Family::Uniform,
        Family::Linear { a: 1.5 },
        Family::Beta { nu1: 2.0, nu2: 5.0 },
        Family::ArcSine,
        Family::TwoStep { delta: 0.5 },
        Family::GapUniform { delta: 0.1 },
    ]
}

/// Runs every check. `mutate` corrupts the closed forms so the method
/// agreement check must fail.
pub fn selftest(seed: u64, mutate: bool, cfg: &QuadratureConfig) -> Result<Vec<SelftestCheck>> {
    let mut out = vec![oracle_check(seed)?];

    let bump = if mutate { MUTATION } else { 0.0 };
    let closed = [
        Family::Uniform,
        Family::ShrunkUniform { delta: 0.1 },
        Family::GapUniform { delta: 0.1 },
        Family::TwoStep { delta: 0.5 },
    ];
    let mut worst = 0.0f64;
    for f in closed {
        let m = DensityModel::new(f)?;
        for n in [2usize, 5, 10] {
            let c = exact::p_closed_form(&m, n)?.value + bump;
            let q = exact::p_quadrature(&m, n, cfg)?.value;
            worst = worst.max((c - q).abs());
        }
    }
    out.push(SelftestCheck::new(
        "closed-form vs quadrature",
        worst <= 1e-6,
        format!("max |diff| = {worst:.3e}"),
    ));

    let sq = DensityModel::new(Family::SquareCdf)?;
    let mut worst = 0.0f64;
    for n in [2usize, 5, 10] {
        let a = exact::p_multinomial_squarecdf(n)?.value;
        let q = exact::p_quadrature(&sq, n, cfg)?.value;
        worst = worst.max((a - q).abs());
    }
    out.push(SelftestCheck::new(
        "multinomial vs quadrature",
        worst <= 1e-6,
        format!("max |diff| = {worst:.3e}"),
    ));

    let u = DensityModel::new(Family::Uniform)?;
    let lin = DensityModel::new(Family::Linear { a: 1.0 })?;
    let mut worst = 0.0f64;
    for (fx, mode) in [(&u, CellMode::Hu), (&lin, CellMode::Restricted)] {
        for m in 1..=4usize {
            let ys: Vec<f64> = (1..=m).map(|i| i as f64 / (m + 1) as f64).collect();
            let cond = AnchorConditional::new(fx, &ys, mode, 12 - m, cfg)?;
            for n in 1..=12 - m {
                let s: f64 = multi::pmf_conditional(&cond, n)?.iter().sum();
                worst = worst.max((s - 1.0).abs());
            }
        }
    }
    out.push(SelftestCheck::new(
        "conditional pmf normalisation",
        worst <= 1e-9,
        format!("max |sum - 1| = {worst:.3e}"),
    ));
    Ok(out)
}

fn oracle_check(seed: u64) -> Result<SelftestCheck> {
    let fams: Vec<DensityModel> = families().into_iter().map(DensityModel::new).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mismatches, mut bound_violations, mut done) = (0usize, 0usize, 0usize);
    while done < ORACLE_INSTANCES {
        let n = rng.random_range(1..=12usize);
        let m = rng.random_range(1..=4usize);
        let f = &fams[rng.random_range(0..fams.len())];
        let xs = f.sample(n, &mut rng);
        let ys: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let Ok(inst) = CccdInstance::new(xs, ys) else { continue };
        done += 1;
        let fast = inst.domination_number_fast().total;
        if fast != inst.domination_number_oracle()? {
            mismatches += 1;
        }
        let occupied = inst.counts().iter().filter(|&&c| c > 0).count();
        let (k1, k2) = inst.upper_bound_terms();
        if fast > n.min(2 * m) || fast < occupied || fast > 2 * k1 + k2 {
            bound_violations += 1;
        }
    }
    Ok(SelftestCheck::new(
        "fast vs exhaustive domination",
        mismatches == 0 && bound_violations == 0,
        format!("{done} instances, {mismatches} mismatches, {bound_violations} bound violations"),
    ))
}
