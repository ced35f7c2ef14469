//! `p_n(F) = P(gamma = 2)` for a middle cell holding `n` points drawn from `F`.
//!
//! Four routes are offered: closed forms for the uniform and piecewise-constant
//! families, an exact rational series for `F(x) = x^2`, adaptive 2-D quadrature
//! for any density, and Monte Carlo.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::compositions::CompositionIterator;
use crate::density::{DensityModel, Family, UnivariateDensity};
use crate::error::{CccdError, Result};
use crate::montecarlo::{self, Anchors, SimulationPlan};
use crate::quadrature::{integrate_2d, Affine, Region};

pub use crate::quadrature::QuadratureConfig;

/// How a probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Multinomial,
    Quadrature,
    MonteCarlo,
    Asymptotic,
}

/// A probability with its provenance and uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityReport {
    pub value: f64,
    pub n: usize,
    pub method: Method,
    #[serde(rename = "error_bound")]
    pub abs_error_bound: f64,
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl ProbabilityReport {
    fn new(value: f64, n: usize, method: Method, abs_error_bound: f64) -> Self {
        ProbabilityReport {
            value,
            n,
            method,
            abs_error_bound,
            meta: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, v: impl Into<serde_json::Value>) -> Self {
        self.meta.insert(key.to_string(), v.into());
        self
    }
}

fn need_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(CccdError::range("n", 0, "n >= 1"));
    }
    Ok(())
}

/// `4/9 - (16/9) 4^-n`.
pub fn p_uniform(n: usize) -> Result<ProbabilityReport> {
    need_n(n)?;
    Ok(ProbabilityReport::new(uniform_value(n), n, Method::ClosedForm, 0.0).with("family", "uniform"))
}

fn uniform_value(n: usize) -> f64 {
    4.0 / 9.0 - 16.0 / 9.0 * 0.25f64.powi(n as i32)
}

/// Closed forms for the uniform, shrunk-uniform, gap-uniform and two-step families.
pub fn p_closed_form(model: &DensityModel, n: usize) -> Result<ProbabilityReport> {
    need_n(n)?;
    let ni = n as i32;
    let v = match model.family() {
        Family::Uniform => uniform_value(n),
        Family::ShrunkUniform { delta } => {
            if delta >= 1.0 / 3.0 {
                0.0
            } else {
                uniform_value(n) * ((1.0 - 3.0 * delta) / (1.0 - 2.0 * delta)).powi(ni)
            }
        }
        Family::GapUniform { delta } => gap_uniform(delta, n),
        Family::TwoStep { delta } => {
            let d2 = 1.0 - delta * delta;
            let tail = (1.0 + delta).powi(ni - 1) / (3.0 - delta) + (1.0 - delta).powi(ni - 1) / (3.0 + delta);
            4.0 * d2 / (9.0 - delta * delta) - 8.0 * 0.25f64.powi(ni) * d2 / 3.0 * tail
        }
        f => {
            return Err(CccdError::NoClosedForm {
                family: f.name().to_string(),
            })
        }
    };
    Ok(ProbabilityReport::new(v.clamp(0.0, 1.0), n, Method::ClosedForm, 0.0).with("family", model.name()))
}

/// Gap-uniform law. For `delta <= 1/6` the Gamma-1 image straddles the gap in
/// four ways; beyond `1/6` it always falls inside the gap and `gamma = 2` iff
/// both halves are occupied.
fn gap_uniform(delta: f64, n: usize) -> f64 {
    let ni = n as i32;
    if delta > 1.0 / 6.0 {
        return 1.0 - 0.5f64.powi(ni - 1);
    }
    let c = 1.0 - 2.0 * delta;
    let r6 = (1.0 - 6.0 * delta) / c;
    let r4 = (1.0 - 4.0 * delta) / c;
    let q = (1.0 + 2.0 * delta) / c;
    1.0 + r6.powi(ni) / 9.0 - 2.0 / 3.0 * r4.powi(ni) - 4.0 / 9.0 * (r6 / 4.0).powi(ni) - 4.0 / 3.0 * (q / 4.0).powi(ni)
}

/// A density viewed on (0, 1); `s = 1 - t` is passed alongside `t`.
trait UnitView: Sync {
    fn pdf(&self, t: f64, s: f64) -> f64;
    fn cdf(&self, t: f64, s: f64) -> f64;
    fn knots(&self) -> Vec<f64>;
    fn unbounded(&self) -> bool;
}

struct ModelView<'a>(&'a DensityModel);

impl UnitView for ModelView<'_> {
    fn pdf(&self, t: f64, s: f64) -> f64 {
        self.0.unit_pdf(t, s)
    }
    fn cdf(&self, t: f64, s: f64) -> f64 {
        self.0.unit_cdf(t, s)
    }
    fn knots(&self) -> Vec<f64> {
        self.0.unit_knots()
    }
    fn unbounded(&self) -> bool {
        self.0.is_unbounded()
    }
}

struct Rescaled<'a, D: ?Sized> {
    d: &'a D,
    lo: f64,
    w: f64,
}

impl<D: UnivariateDensity + ?Sized> UnitView for Rescaled<'_, D> {
    fn pdf(&self, t: f64, _s: f64) -> f64 {
        self.w * self.d.pdf(self.lo + self.w * t)
    }
    fn cdf(&self, t: f64, _s: f64) -> f64 {
        self.d.cdf(self.lo + self.w * t)
    }
    fn knots(&self) -> Vec<f64> {
        self.d.knots().into_iter().map(|x| (x - self.lo) / self.w).collect()
    }
    fn unbounded(&self) -> bool {
        self.d.unbounded()
    }
}

fn push_in(v: &mut Vec<f64>, x: f64, lo: f64, hi: f64) {
    if x > lo && x < hi && x.is_finite() {
        v.push(x);
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);
}

/// Integration regions for the `gamma = 2` event, split at every line where
/// the integrand is not smooth and graded toward the corner `(0, 1)`.
fn regions(knots: &[f64], n: usize, unbounded: bool) -> Vec<Region> {
    let levels = ((n.max(2) as f64).log(4.0).ceil() as usize + 3).clamp(3, 14);
    let mut ybreaks = Vec::new();
    let mut xbreaks = Vec::new();
    for &c in knots {
        push_in(&mut ybreaks, c, 0.0, 1.0);
        push_in(&mut ybreaks, 2.0 * c, 0.0, 1.0);
        push_in(&mut xbreaks, c, 0.0, 0.5);
        push_in(&mut xbreaks, 2.0 * c - 1.0, 0.0, 0.5);
    }
    for j in 1..=levels {
        let g = 0.25f64.powi(j as i32);
        xbreaks.push(g / 3.0);
        ybreaks.push(1.0 - 0.5 * g);
    }
    sort_dedup(&mut ybreaks);

    let pieces = [
        (0.0, 1.0 / 3.0, Affine { c0: 0.5, c1: 0.5 }),
        (1.0 / 3.0, 0.5, Affine { c0: 0.0, c1: 2.0 }),
    ];
    let mut out = Vec::new();
    for (a, b, low) in pieces {
        let mut xs = vec![a, b];
        for &x in &xbreaks {
            push_in(&mut xs, x, a, b);
        }
        for &y in &ybreaks {
            if let Some(x) = low.inverse(y) {
                push_in(&mut xs, x, a, b);
            }
        }
        sort_dedup(&mut xs);
        for w in xs.windows(2) {
            let (xa, xb) = (w[0], w[1]);
            // No break lies strictly between the ends of the sloped edge, so
            // anything above its lower end starts a new band.
            let bottom = low.at(xa).min(low.at(xb));
            let above: Vec<f64> = ybreaks.iter().copied().filter(|&y| y > bottom + 1e-13 && y < 1.0).collect();
            let mut uppers = above.clone();
            uppers.push(1.0);
            let mut bounds = vec![low];
            bounds.extend(above.iter().map(|&y| Affine::constant(y)));
            for (lower, &up) in bounds.into_iter().zip(&uppers) {
                let mut r = Region::new(xa, xb, lower, Affine::constant(up));
                if unbounded {
                    r.x_sqrt = xa == 0.0;
                    r.y_sqrt = up == 1.0;
                }
                out.push(r);
            }
        }
    }
    out
}

fn quadrature_unit<U: UnitView>(view: &U, n: usize, cfg: &QuadratureConfig) -> Result<(f64, f64, usize)> {
    cfg.validate()?;
    if n < 2 {
        return Ok((0.0, 0.0, 0));
    }
    let nf = n as f64;
    let ln_nn = (nf * (nf - 1.0)).ln();
    let pow = (n - 2) as i32;
    let log_domain = cfg.log_domain;
    let integrand = |x1: f64, xn: f64| -> f64 {
        let f1 = view.pdf(x1, 1.0 - x1);
        let fnn = view.pdf(xn, 1.0 - xn);
        if !(f1 > 0.0 && fnn > 0.0) {
            return 0.0;
        }
        if pow == 0 {
            return nf * (nf - 1.0) * f1 * fnn;
        }
        let h1 = 0.5 * (1.0 + x1);
        let g = view.cdf(xn, 1.0 - xn) + view.cdf(0.5 * xn, 1.0 - 0.5 * xn) - view.cdf(h1, 1.0 - h1) - view.cdf(x1, 1.0 - x1);
        let g = g.clamp(0.0, 1.0);
        if g <= 0.0 {
            return 0.0;
        }
        if log_domain {
            (ln_nn + f1.ln() + fnn.ln() + pow as f64 * g.ln()).exp()
        } else {
            nf * (nf - 1.0) * f1 * fnn * g.powi(pow)
        }
    };
    let regs = regions(&view.knots(), n, view.unbounded());
    let est = integrate_2d(integrand, &regs, cfg)?;
    Ok((est.value, est.error, est.panels))
}

/// `p_n(F)` by adaptive quadrature over the `gamma = 2` region.
pub fn p_quadrature(model: &DensityModel, n: usize, cfg: &QuadratureConfig) -> Result<ProbabilityReport> {
    need_n(n)?;
    let (v, e, panels) = quadrature_unit(&ModelView(model), n, cfg)?;
    Ok(ProbabilityReport::new(v.clamp(0.0, 1.0), n, Method::Quadrature, e)
        .with("family", model.name())
        .with("panels", panels))
}

/// [`p_quadrature`] for any density, after rescaling its support to (0, 1).
pub fn p_quadrature_density<D: UnivariateDensity + ?Sized>(d: &D, n: usize, cfg: &QuadratureConfig) -> Result<ProbabilityReport> {
    need_n(n)?;
    let s = d.support();
    let view = Rescaled { d, lo: s.lo, w: s.width() };
    let (v, e, panels) = quadrature_unit(&view, n, cfg)?;
    Ok(ProbabilityReport::new(v.clamp(0.0, 1.0), n, Method::Quadrature, e).with("panels", panels))
}

/// Largest `n` accepted by [`p_multinomial_squarecdf`].
pub const MULTINOMIAL_MAX_N: usize = 60;

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Coefficients of `(c0 + c1 x + c2 x^2)^k`, expanded over compositions of `k` into three parts.
fn trinomial_power(c: [&BigRational; 3], k: usize) -> Vec<BigRational> {
    let mut fact = vec![BigInt::one()];
    for i in 1..=k {
        let next = &fact[i - 1] * BigInt::from(i);
        fact.push(next);
    }
    let mut out = vec![BigRational::zero(); 2 * k + 1];
    for q in CompositionIterator::unrestricted(k, 3) {
        let coef = BigRational::from_integer(fact[k].clone() / (&fact[q[0]] * &fact[q[1]] * &fact[q[2]]));
        let term = coef * num_traits::pow(c[0].clone(), q[0]) * num_traits::pow(c[1].clone(), q[1]) * num_traits::pow(c[2].clone(), q[2]);
        out[q[1] + 2 * q[2]] += term;
    }
    out
}

/// `integral_a^b x * sum_k p_k x^k dx`.
fn integrate_x_times(poly: &[BigRational], a: &BigRational, b: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for (k, c) in poly.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let e = k + 2;
        let d = num_traits::pow(b.clone(), e) - num_traits::pow(a.clone(), e);
        acc += c * d / BigRational::from_integer(BigInt::from(e));
    }
    acc
}

/// Exact `p_n` for `F(x) = x^2` as a rational number.
///
/// With `f = 2x` the `gamma = 2` integral reduces to one dimension:
/// `p_n = (8n/5) [ int_0^1/2 x P^(n-1) - int_0^1/3 x L1^(n-1) - int_1/3^1/2 x L2^(n-1) ]`
/// where `P = 1 - x/2 - 5x^2/4`, `L1 = 1/16 + x/8 - 15x^2/16`, `L2 = 15x^2/4 - x/2 - 1/4`.
pub fn p_multinomial_exact(n: usize) -> Result<BigRational> {
    if !(1..=MULTINOMIAL_MAX_N).contains(&n) {
        return Err(CccdError::range("n", n, format!("1..={MULTINOMIAL_MAX_N}")));
    }
    if n == 1 {
        return Ok(BigRational::zero());
    }
    let k = n - 1;
    let p = [rat(1, 1), rat(-1, 2), rat(-5, 4)];
    let l1 = [rat(1, 16), rat(1, 8), rat(-15, 16)];
    let l2 = [rat(-1, 4), rat(-1, 2), rat(15, 4)];
    let zero = BigRational::zero();
    let third = rat(1, 3);
    let half = rat(1, 2);
    let t0 = integrate_x_times(&trinomial_power([&p[0], &p[1], &p[2]], k), &zero, &half);
    let t1 = integrate_x_times(&trinomial_power([&l1[0], &l1[1], &l1[2]], k), &zero, &third);
    let t2 = integrate_x_times(&trinomial_power([&l2[0], &l2[1], &l2[2]], k), &third, &half);
    Ok(rat(8 * n as i64, 5) * (t0 - t1 - t2))
}

/// [`p_multinomial_exact`] as a report, for `2 <= n <= 60` (and `n = 1`).
pub fn p_multinomial_squarecdf(n: usize) -> Result<ProbabilityReport> {
    let r = p_multinomial_exact(n)?;
    let v = r.to_f64().unwrap_or(f64::NAN);
    Ok(ProbabilityReport::new(v, n, Method::Multinomial, 0.0)
        .with("family", "square-cdf")
        .with("exact", r.to_string()))
}

/// Fraction of `reps` simulated cells with `gamma = 2`, anchors at the support ends.
/// The error bound is the half-width of the 95% Wilson score interval.
pub fn p_monte_carlo(model: &DensityModel, n: usize, reps: u64, seed: u64) -> Result<ProbabilityReport> {
    need_n(n)?;
    if reps == 0 {
        return Err(CccdError::range("reps", 0, "reps >= 1"));
    }
    let s = model.support();
    let plan = SimulationPlan::new(*model, Anchors::Fixed(vec![s.lo, s.hi]), n, reps, seed);
    let emp = montecarlo::run(&plan)?;
    let twos = emp.counts.get(2).copied().unwrap_or(0);
    let (_, half) = montecarlo::wilson(twos, reps, 1.959_963_984_540_054);
    Ok(ProbabilityReport::new(twos as f64 / reps as f64, n, Method::MonteCarlo, half)
        .with("family", model.name())
        .with("reps", reps)
        .with("seed", seed))
}

/// Outcome of comparing `gamma_n(F)` with the uniform benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StochasticOrder {
    BelowUniform,
    AboveUniform,
    Equal,
    Inconclusive,
}

/// Best deterministic `p_n`: closed form, exact series, then quadrature.
pub fn p_deterministic(model: &DensityModel, n: usize, cfg: &QuadratureConfig) -> Result<ProbabilityReport> {
    match p_closed_form(model, n) {
        Ok(r) => return Ok(r),
        Err(CccdError::NoClosedForm { .. }) => {}
        Err(e) => return Err(e),
    }
    if model.family() == Family::SquareCdf && n <= MULTINOMIAL_MAX_N {
        return p_multinomial_squarecdf(n);
    }
    p_quadrature(model, n, cfg)
}

/// Compares `p_n(F)` with `p_n(uniform)`; bounds that overlap give `Inconclusive`.
pub fn check_stochastic_order(model: &DensityModel, n: usize, cfg: &QuadratureConfig) -> Result<StochasticOrder> {
    let r = p_deterministic(model, n, cfg)?;
    let u = uniform_value(n);
    let diff = r.value - u;
    let slack = 1e-12;
    Ok(if diff.abs() <= slack && r.abs_error_bound <= slack {
        StochasticOrder::Equal
    } else if diff.abs() <= r.abs_error_bound + slack {
        if diff.abs() <= slack {
            StochasticOrder::Equal
        } else {
            StochasticOrder::Inconclusive
        }
    } else if diff < 0.0 {
        StochasticOrder::BelowUniform
    } else {
        StochasticOrder::AboveUniform
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(f: Family) -> DensityModel {
        DensityModel::new(f).unwrap()
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(p_uniform(1).unwrap().value, 0.0);
        assert!((p_uniform(2).unwrap().value - 1.0 / 3.0).abs() < 1e-15);
        assert!((p_uniform(200).unwrap().value - 4.0 / 9.0).abs() < 1e-15);
        assert!(p_uniform(0).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let s0 = model(Family::ShrunkUniform { delta: 0.0 });
        assert!((p_closed_form(&s0, 5).unwrap().value - 0.442_708_333_333_333_3).abs() < 1e-15);
        let s3 = model(Family::ShrunkUniform { delta: 1.0 / 3.0 });
        assert_eq!(p_closed_form(&s3, 7).unwrap().value, 0.0);
        let t0 = model(Family::TwoStep { delta: 0.0 });
        assert!((p_closed_form(&t0, 3).unwrap().value - 5.0 / 12.0).abs() < 1e-15);
        assert!(matches!(p_closed_form(&model(Family::ArcSine), 3), Err(CccdError::NoClosedForm { .. })));
    }

    #[test]
    fn closed_forms_vanish_at_n_one() {
        for f in [
            Family::ShrunkUniform { delta: 0.2 },
            Family::GapUniform { delta: 0.1 },
            Family::GapUniform { delta: 0.4 },
            Family::TwoStep { delta: 0.7 },
        ] {
            assert!(p_closed_form(&model(f), 1).unwrap().value.abs() < 1e-15, "{f:?}");
        }
    }

    #[test]
    fn gap_uniform_branches_meet() {
        let d = 1.0 / 6.0;
        for n in 1..20 {
            let left = gap_uniform(d, n);
            let right = 1.0 - 0.5f64.powi(n as i32 - 1);
            assert!((left - right).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn closed_form_against_quadrature() {
        let cfg = QuadratureConfig::default();
        for f in [
            Family::ShrunkUniform { delta: 0.1 },
            Family::GapUniform { delta: 0.1 },
            Family::GapUniform { delta: 0.25 },
            Family::TwoStep { delta: 0.5 },
            Family::TwoStep { delta: -0.3 },
        ] {
            let m = model(f);
            for n in [2, 5, 10] {
                let c = p_closed_form(&m, n).unwrap().value;
                let q = p_quadrature(&m, n, &cfg).map_err(|e| format!("{f:?} n={n}: {e:?}")).unwrap().value;
                assert!((c - q).abs() < 1e-8, "{f:?} n={n}: {c} vs {q}");
            }
        }
    }

    #[test]
    fn multinomial_matches_quadrature() {
        let cfg = QuadratureConfig::default();
        let m = model(Family::SquareCdf);
        assert_eq!(p_multinomial_exact(2).unwrap(), rat(35, 162));
        assert_eq!(p_multinomial_squarecdf(1).unwrap().value, 0.0);
        for n in [2, 3, 7, 15, 40] {
            let a = p_multinomial_squarecdf(n).unwrap().value;
            let b = p_quadrature(&m, n, &cfg).unwrap().value;
            assert!((a - b).abs() < 1e-9, "n={n}: {a} vs {b}");
        }
        assert!(p_multinomial_squarecdf(61).is_err());
    }

    #[test]
    fn log_domain_agrees_with_direct_powers() {
        let on = QuadratureConfig::default();
        let off = QuadratureConfig { log_domain: false, ..on };
        for f in [Family::Linear { a: 1.0 }, Family::AbsSine, Family::Beta { nu1: 2.0, nu2: 3.0 }] {
            let m = model(f);
            let a = p_quadrature(&m, 10, &on).unwrap().value;
            let b = p_quadrature(&m, 10, &off).unwrap().value;
            assert!((a - b).abs() < 1e-9, "{f:?}");
        }
    }

    #[test]
    fn support_independence() {
        use crate::density::SupportInterval;
        let cfg = QuadratureConfig::default();
        let s = SupportInterval::new(-2.0, 1.0).unwrap();
        let g = DensityModel::on_support(Family::GeneralLinear { a: 1.0 / 9.0 }, s).unwrap();
        let l = model(Family::Linear { a: 1.0 });
        for n in [3, 20] {
            let a = p_quadrature(&g, n, &cfg).unwrap().value;
            let b = p_quadrature(&l, n, &cfg).unwrap().value;
            let c = p_quadrature_density(&g, n, &cfg).unwrap().value;
            assert!((a - b).abs() < 1e-8 && (c - b).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn stochastic_order_examples() {
        let cfg = QuadratureConfig::default();
        let o = |f| check_stochastic_order(&model(f), 10, &cfg).unwrap();
        assert_eq!(o(Family::ShrunkUniform { delta: 0.1 }), StochasticOrder::BelowUniform);
        assert_eq!(o(Family::Uniform), StochasticOrder::Equal);
        assert_eq!(o(Family::GapUniform { delta: 0.1 }), StochasticOrder::AboveUniform);
    }

    #[test]
    fn monotone_closed_forms() {
        let s = model(Family::ShrunkUniform { delta: 0.1 });
        let g = model(Family::GapUniform { delta: 0.1 });
        let mut ps = 1.0;
        let mut pg = 0.0;
        // pwc1 peaks at small n before decaying; monotone from n = 3 on.
        for n in 3..=50 {
            let a = p_closed_form(&s, n).unwrap().value;
            assert!(a < ps, "shrunk n={n}");
            ps = a;
        }
        for n in 2..=50 {
            let b = p_closed_form(&g, n).unwrap().value;
            assert!(b > pg, "gap n={n}");
            pg = b;
        }
    }
}
