//! Domination number with `m` anchors: conditional law given the anchors,
//! the law averaged over random anchors, expectations and large-`n` laws.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::compositions::CompositionIterator;
use crate::density::{DensityModel, Family, SupportInterval, UnivariateDensity};
use crate::error::{CccdError, Result};
use crate::exact::{p_deterministic, p_quadrature_density, p_uniform, QuadratureConfig};
use crate::montecarlo::{self, Anchors, CellSampling, SimulationPlan};
use crate::parallel;
use crate::quadrature::gauss_legendre;

/// Largest `n + m` for the composition sum.
pub const COMPOSITION_MAX: usize = 24;

/// Largest `m` integrated deterministically over random anchors.
pub const QUADRATURE_MAX_M: usize = 3;

/// How points are distributed inside a cell once the anchors are known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellMode {
    /// Cell masses proportional to cell length inside the support; each cell
    /// carries `F_X` rescaled onto it, so every middle cell shares `p_k(F_X)`.
    Hu,
    /// Cell masses from `F_X`; each cell carries `F_X` restricted to it.
    Restricted,
}

/// `F_X` restricted to `(a, b)` and renormalised.
#[derive(Debug, Clone, Copy)]
pub struct CellDensity {
    model: DensityModel,
    a: f64,
    b: f64,
    fa: f64,
    mass: f64,
}

impl CellDensity {
    pub fn new(model: DensityModel, a: f64, b: f64) -> Result<Self> {
        let s = model.support();
        let (a, b) = (a.max(s.lo), b.min(s.hi));
        let fa = model.cdf(a);
        let mass = model.cdf(b) - fa;
        if !(b > a && mass > 0.0) {
            return Err(CccdError::Unsupported(format!("cell ({a}, {b}) carries no mass")));
        }
        Ok(CellDensity { model, a, b, fa, mass })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

impl UnivariateDensity for CellDensity {
    fn support(&self) -> SupportInterval {
        SupportInterval { lo: self.a, hi: self.b }
    }
    fn pdf(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            return 0.0;
        }
        self.model.pdf(x) / self.mass
    }
    fn cdf(&self, x: f64) -> f64 {
        ((self.model.cdf(x) - self.fa) / self.mass).clamp(0.0, 1.0)
    }
    fn knots(&self) -> Vec<f64> {
        let s = self.model.support();
        self.model
            .unit_knots()
            .into_iter()
            .map(|k| s.lo + s.width() * k)
            .filter(|&k| k > self.a && k < self.b)
            .collect()
    }
    fn unbounded(&self) -> bool {
        let s = self.model.support();
        self.model.is_unbounded() && (self.a <= s.lo || self.b >= s.hi)
    }
}

/// `p_k(F)` for `k = 0..=n_max`, best deterministic method per `k`.
pub fn p_table(model: &DensityModel, n_max: usize, cfg: &QuadratureConfig) -> Result<Vec<f64>> {
    let ks: Vec<usize> = (2..=n_max).collect();
    let vals = parallel::map(ks, |k| p_deterministic(model, k, cfg).map(|r| r.value));
    let mut out = vec![0.0; 2.min(n_max + 1)];
    for v in vals {
        out.push(v?);
    }
    Ok(out)
}

fn cell_table<D: UnivariateDensity + ?Sized>(d: &D, n_max: usize, cfg: &QuadratureConfig) -> Result<Vec<f64>> {
    let mut out = vec![0.0; 2.min(n_max + 1)];
    for k in 2..=n_max {
        out.push(p_quadrature_density(d, k, cfg)?.value);
    }
    Ok(out)
}

/// The law of the cells once the anchors are fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorConditional {
    pub anchors: Vec<f64>,
    pub mode: CellMode,
    /// Mass of each of the `m + 1` cells, end cells included.
    pub cell_probs: Vec<f64>,
    /// `p_cells[j][k] = p_k(F_{j+1})` for the middle cells.
    pub p_cells: Vec<Vec<f64>>,
}

fn check_anchors(anchors: &[f64]) -> Result<()> {
    if anchors.is_empty() {
        return Err(CccdError::NoAnchors);
    }
    if let Some(&y) = anchors.iter().find(|y| !y.is_finite()) {
        return Err(CccdError::NonFinite(y));
    }
    if let Some(w) = anchors.windows(2).find(|w| w[0] >= w[1]) {
        if w[0] == w[1] {
            return Err(CccdError::Tie { a: w[0], b: w[1] });
        }
        return Err(CccdError::param("anchors", "must be sorted ascending"));
    }
    Ok(())
}

fn hu_masses(s: SupportInterval, anchors: &[f64]) -> Result<Vec<f64>> {
    if anchors.iter().any(|&y| y <= s.lo || y >= s.hi) {
        return Err(CccdError::param("anchors", "the rescaled-cell mode needs anchors inside the support"));
    }
    let mut e = vec![s.lo];
    e.extend_from_slice(anchors);
    e.push(s.hi);
    Ok(e.windows(2).map(|w| (w[1] - w[0]) / s.width()).collect())
}

impl AnchorConditional {
    /// Builds cell masses and per-cell `p_k` tables up to `n_max` points.
    pub fn new(fx: &DensityModel, anchors: &[f64], mode: CellMode, n_max: usize, cfg: &QuadratureConfig) -> Result<Self> {
        check_anchors(anchors)?;
        let m = anchors.len();
        let (cell_probs, p_cells) = match mode {
            CellMode::Hu => {
                let probs = hu_masses(fx.support(), anchors)?;
                let t = p_table(fx, n_max, cfg)?;
                (probs, vec![t; m - 1])
            }
            CellMode::Restricted => {
                let mut f: Vec<f64> = vec![0.0];
                f.extend(anchors.iter().map(|&y| fx.cdf(y)));
                f.push(1.0);
                let probs: Vec<f64> = f.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
                let mut tables = Vec::with_capacity(m.saturating_sub(1));
                for w in anchors.windows(2) {
                    let t = if fx.family() == Family::Uniform {
                        uniform_table(n_max)
                    } else {
                        match CellDensity::new(*fx, w[0], w[1]) {
                            Ok(c) => cell_table(&c, n_max, cfg)?,
                            Err(_) => vec![0.0; n_max + 1],
                        }
                    };
                    tables.push(t);
                }
                (probs, tables)
            }
        };
        Ok(AnchorConditional {
            anchors: anchors.to_vec(),
            mode,
            cell_probs,
            p_cells,
        })
    }

    /// From known cell masses and per-cell tables.
    pub fn from_parts(cell_probs: Vec<f64>, p_cells: Vec<Vec<f64>>, mode: CellMode) -> Result<Self> {
        if cell_probs.len() < 2 || p_cells.len() + 2 != cell_probs.len() {
            return Err(CccdError::param("cell_probs", "need m + 1 masses and m - 1 tables"));
        }
        let total: f64 = cell_probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 || cell_probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(CccdError::param("cell_probs", format!("masses must lie in [0, 1] and sum to 1, got {total}")));
        }
        Ok(AnchorConditional {
            anchors: Vec::new(),
            mode,
            cell_probs,
            p_cells,
        })
    }

    pub fn m(&self) -> usize {
        self.cell_probs.len() - 1
    }

    fn n_max(&self) -> usize {
        self.p_cells.iter().map(|t| t.len().saturating_sub(1)).min().unwrap_or(usize::MAX)
    }

    fn need(&self, n: usize) -> Result<()> {
        if n > self.n_max() {
            return Err(CccdError::range("n", n, format!("n <= {} (tables were built for that)", self.n_max())));
        }
        Ok(())
    }
}

fn uniform_table(n_max: usize) -> Vec<f64> {
    (0..=n_max)
        .map(|k| if k < 2 { 0.0 } else { p_uniform(k).map(|r| r.value).unwrap_or(0.0) })
        .collect()
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    for i in 1..=n {
        v[i] = v[i - 1] + (i as f64).ln();
    }
    v
}

/// `log` of `n! prod p_j^{n_j} / n_j!`, or `None` when the composition is impossible.
fn ln_multinomial(counts: &[usize], probs: &[f64], lf: &[f64]) -> Option<f64> {
    let n: usize = counts.iter().sum();
    let mut s = lf[n];
    for (&c, &p) in counts.iter().zip(probs) {
        if c > 0 {
            if p <= 0.0 {
                return None;
            }
            s += c as f64 * p.ln() - lf[c];
        }
    }
    Some(s)
}

/// `P(gamma = k)` for `k = 0..=2m`, summed over every way of placing `n`
/// points in the `m + 1` cells. Occupied middle cells add `1 + Bernoulli(p)`,
/// folded in by a Poisson-binomial recursion.
pub fn pmf_conditional(cond: &AnchorConditional, n: usize) -> Result<Vec<f64>> {
    let m = cond.m();
    if n + m > COMPOSITION_MAX {
        return Err(CccdError::Unsupported(format!(
            "n + m = {} exceeds {COMPOSITION_MAX} for exact enumeration; use Monte Carlo",
            n + m
        )));
    }
    cond.need(n)?;
    let lf = ln_factorials(n);
    let firsts: Vec<usize> = (0..=n).collect();
    let parts = parallel::map(firsts, |n1| {
        let mut acc = vec![0.0; 2 * m + 1];
        let mut counts = vec![0; m + 1];
        counts[0] = n1;
        for rest in CompositionIterator::unrestricted(n - n1, m) {
            counts[1..].copy_from_slice(&rest);
            let Some(lw) = ln_multinomial(&counts, &cond.cell_probs, &lf) else { continue };
            let w = lw.exp();
            let base = usize::from(counts[0] > 0) + usize::from(counts[m] > 0);
            let mut dist = vec![1.0];
            for (j, &c) in counts[1..m].iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let p = cond.p_cells[j][c];
                let mut next = vec![0.0; dist.len() + 2];
                for (g, &v) in dist.iter().enumerate() {
                    next[g + 1] += v * (1.0 - p);
                    next[g + 2] += v * p;
                }
                dist = next;
            }
            for (g, &v) in dist.iter().enumerate() {
                acc[base + g] += w * v;
            }
        }
        acc
    });
    let mut out = vec![0.0; 2 * m + 1];
    for a in parts {
        for (o, v) in out.iter_mut().zip(a) {
            *o += v;
        }
    }
    Ok(out)
}

/// [`pmf_conditional`] as a cell-by-cell recursion over points used, with no
/// enumeration and no size cap.
pub fn pmf_conditional_dp(cond: &AnchorConditional, n: usize) -> Result<Vec<f64>> {
    let m = cond.m();
    cond.need(n)?;
    let lf = ln_factorials(n);
    // state[used][g]: sum over partial placements of prod p_j^{n_j}/n_j! times P(gamma so far = g)
    let mut state = vec![vec![0.0; 2 * m + 1]; n + 1];
    state[0][0] = 1.0;
    for j in 0..=m {
        let p = cond.cell_probs[j];
        let lp = p.ln();
        let end = j == 0 || j == m;
        let mut next = vec![vec![0.0; 2 * m + 1]; n + 1];
        for used in 0..=n {
            if state[used].iter().all(|&v| v == 0.0) {
                continue;
            }
            for c in 0..=(n - used) {
                let w = if c == 0 {
                    1.0
                } else if p <= 0.0 {
                    break;
                } else {
                    (c as f64 * lp - lf[c]).exp()
                };
                let (p1, p2) = if c == 0 {
                    (0.0, 0.0)
                } else if end {
                    (1.0, 0.0)
                } else {
                    let q = cond.p_cells[j - 1][c];
                    (1.0 - q, q)
                };
                for g in 0..=2 * m {
                    let v = state[used][g] * w;
                    if v == 0.0 {
                        continue;
                    }
                    if c == 0 {
                        next[used][g] += v;
                    } else {
                        if p1 > 0.0 {
                            next[used + c][g + 1] += v * p1;
                        }
                        if p2 > 0.0 {
                            next[used + c][g + 2] += v * p2;
                        }
                    }
                }
            }
        }
        state = next;
    }
    let nf = lf[n].exp();
    Ok(state[n].iter().map(|v| v * nf).collect())
}

/// End-cell factor: `1` if the cell is empty with `k = 0` or occupied with `k = 1`.
fn zeta(k: usize, n: usize) -> f64 {
    f64::from(u8::from((n == 0 && k == 0) || (n >= 1 && k == 1)))
}

/// Middle-cell factor: `p^{I(k=2)} (1-p)^{I(k=1)}` when occupied.
fn eta(k: usize, n: usize, p: f64) -> f64 {
    match (n, k) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        (_, 1) => 1.0 - p,
        (_, 2) => p,
        _ => 0.0,
    }
}

/// `P(gamma = k)` by the double sum over point compositions and per-cell
/// `gamma` compositions. Exponential in `m`; a test oracle.
pub fn pmf_conditional_literal(cond: &AnchorConditional, n: usize, k: usize) -> Result<f64> {
    let m = cond.m();
    if n + m > COMPOSITION_MAX {
        return Err(CccdError::Unsupported("composition space too large".into()));
    }
    cond.need(n)?;
    let lf = ln_factorials(n);
    let mut total = 0.0;
    for counts in CompositionIterator::unrestricted(n, m + 1) {
        let Some(lw) = ln_multinomial(&counts, &cond.cell_probs, &lf) else { continue };
        let w = lw.exp();
        for ks in CompositionIterator::new(k, m + 1, 3) {
            let mut t = zeta(ks[0], counts[0]) * zeta(ks[m], counts[m]);
            for j in 1..m {
                t *= eta(ks[j], counts[j], cond.p_cells[j - 1][counts[j]]);
            }
            total += w * t;
        }
    }
    Ok(total)
}

/// `m! * integral over 0 < u_1 < ... < u_m < 1` of `f(Q_Y(u))`, by nested
/// Gauss-Legendre with `q` nodes per level.
pub(crate) fn integrate_anchor_simplex<F>(fy: &DensityModel, m: usize, q: usize, f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let rule = gauss_legendre(q);
    let mfact: f64 = (1..=m).map(|i| i as f64).product();
    let mut pts: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for _ in 0..m {
        let mut next = Vec::with_capacity(pts.len() * q);
        for (u, w) in &pts {
            let lo = u.last().copied().unwrap_or(0.0);
            let h = 0.5 * (1.0 - lo);
            for &(x, wx) in &rule {
                let mut v = u.clone();
                v.push(lo + h * (1.0 + x));
                next.push((v, w * wx * h));
            }
        }
        pts = next;
    }
    let vals = parallel::map(pts, |(u, w)| {
        let ys: Vec<f64> = u.iter().map(|&t| fy.quantile_unchecked(t)).collect();
        w * f(&ys)
    });
    mfact * vals.iter().sum::<f64>()
}

fn nodes_for(n: usize) -> usize {
    (n + 8).clamp(12, 48)
}

/// Conditional tables for the random-anchor integral: shared across anchor
/// positions when every cell has the same `p_k`.
fn shared_table(fx: &DensityModel, fy: &DensityModel, mode: CellMode, n: usize, cfg: &QuadratureConfig) -> Result<Vec<f64>> {
    match mode {
        CellMode::Hu => {
            if fy.support() != fx.support() {
                return Err(CccdError::param("fy", "the rescaled-cell mode needs anchors on the support of fx"));
            }
            p_table(fx, n, cfg)
        }
        CellMode::Restricted if fx.family() == Family::Uniform => Ok(uniform_table(n)),
        CellMode::Restricted => Err(CccdError::Unsupported(
            "restricted cells of a non-uniform fx need Monte Carlo over the anchors".into(),
        )),
    }
}

fn masses(fx: &DensityModel, mode: CellMode, ys: &[f64]) -> Vec<f64> {
    let s = fx.support();
    let mut e = vec![0.0];
    match mode {
        CellMode::Hu => e.extend(ys.iter().map(|&y| ((y - s.lo) / s.width()).clamp(0.0, 1.0))),
        CellMode::Restricted => e.extend(ys.iter().map(|&y| fx.cdf(y))),
    }
    e.push(1.0);
    e.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
}

/// Options for laws averaged over random anchors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomAnchorOptions {
    pub mode: CellMode,
    /// Monte Carlo `(reps, seed)` used when `m` exceeds [`QUADRATURE_MAX_M`]
    /// or the cell tables vary with the anchors.
    pub monte_carlo: Option<(u64, u64)>,
}

impl Default for RandomAnchorOptions {
    fn default() -> Self {
        RandomAnchorOptions {
            mode: CellMode::Hu,
            monte_carlo: None,
        }
    }
}

fn simulate(fx: &DensityModel, fy: &DensityModel, n: usize, m: usize, opts: &RandomAnchorOptions) -> Result<Option<montecarlo::EmpiricalDistribution>> {
    let Some((reps, seed)) = opts.monte_carlo else { return Ok(None) };
    let mut plan = SimulationPlan::new(*fx, Anchors::Random { fy: *fy, m }, n, reps, seed);
    plan.sampling = match opts.mode {
        CellMode::Hu => CellSampling::Rescaled,
        CellMode::Restricted => CellSampling::Independent,
    };
    montecarlo::run(&plan).map(Some)
}

fn deterministic_ok(fx: &DensityModel, fy: &DensityModel, m: usize, n: usize, opts: &RandomAnchorOptions, cfg: &QuadratureConfig) -> Result<Option<Vec<f64>>> {
    if m > QUADRATURE_MAX_M {
        return Ok(None);
    }
    match shared_table(fx, fy, opts.mode, n, cfg) {
        Ok(t) => Ok(Some(t)),
        Err(CccdError::Unsupported(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn no_route(m: usize) -> CccdError {
    CccdError::Unsupported(format!(
        "m = {m} with these densities has no deterministic route; pass Monte Carlo settings"
    ))
}

/// `P(gamma = k)` for `k = 0..=2m` with `m` iid anchors from `fy`.
pub fn pmf_random_anchors(fx: &DensityModel, fy: &DensityModel, n: usize, m: usize, opts: &RandomAnchorOptions, cfg: &QuadratureConfig) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(CccdError::NoAnchors);
    }
    if let Some(table) = deterministic_ok(fx, fy, m, n, opts, cfg)? {
        let p_cells = vec![table; m - 1];
        let mut out = vec![0.0; 2 * m + 1];
        for k in 0..=2 * m {
            out[k] = integrate_anchor_simplex(fy, m, nodes_for(n), |ys| {
                let cond = AnchorConditional {
                    anchors: Vec::new(),
                    mode: opts.mode,
                    cell_probs: masses(fx, opts.mode, ys),
                    p_cells: p_cells.clone(),
                };
                pmf_conditional_dp(&cond, n).map(|v| v[k]).unwrap_or(f64::NAN)
            });
        }
        if out.iter().any(|v| v.is_nan()) {
            return Err(CccdError::NonFinite(f64::NAN));
        }
        return Ok(out);
    }
    let emp = simulate(fx, fy, n, m, opts)?.ok_or_else(|| no_route(m))?;
    let mut pmf = emp.pmf();
    pmf.resize(2 * m + 1, 0.0);
    Ok(pmf)
}

/// `E[gamma]` with `m` random anchors: occupation of the end cells plus
/// `sum_k P(N_j = k)(1 + p_k)` over the middle cells.
pub fn expected_gamma(fx: &DensityModel, fy: &DensityModel, n: usize, m: usize, opts: &RandomAnchorOptions, cfg: &QuadratureConfig) -> Result<f64> {
    if m == 0 {
        return Err(CccdError::NoAnchors);
    }
    if n == 0 {
        return Ok(0.0);
    }
    if let Some(table) = deterministic_ok(fx, fy, m, n, opts, cfg)? {
        let lf = ln_factorials(n);
        let e = integrate_anchor_simplex(fy, m, nodes_for(n), |ys| {
            let q = masses(fx, opts.mode, ys);
            let occ = |p: f64| 1.0 - (1.0 - p).powi(n as i32);
            let mut e = occ(q[0]) + occ(q[m]);
            for &p in &q[1..m] {
                if p <= 0.0 {
                    continue;
                }
                for (k, &pk) in table.iter().enumerate().skip(1) {
                    let c = (lf[n] - lf[k] - lf[n - k]).exp();
                    e += c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32) * (1.0 + pk);
                }
            }
            e
        });
        return Ok(e);
    }
    let emp = simulate(fx, fy, n, m, opts)?.ok_or_else(|| no_route(m))?;
    Ok(emp.mean())
}

fn factorial_big(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, i| a * BigInt::from(i))
}

/// `2n/(n+m) + n! m (m-1) / (n+m)! * sum_i (n+m-i-1)!/(n-i)! (1 + p_i)`,
/// exactly. `p_table[i - 1] = p_i`.
pub fn expected_gamma_hu(n: usize, m: usize, p_table: &[BigRational]) -> Result<BigRational> {
    if n == 0 || m == 0 {
        return Err(CccdError::range("n, m", format!("({n}, {m})"), "n >= 1 and m >= 1"));
    }
    if p_table.len() < n {
        return Err(CccdError::param("p_table", format!("need p_1..p_{n}, got {}", p_table.len())));
    }
    let big = |v: usize| BigInt::from(v);
    let first = BigRational::new(big(2 * n), big(n + m));
    let lead = BigRational::new(factorial_big(n) * big(m) * big(m - 1), factorial_big(n + m));
    let mut sum = BigRational::zero();
    for i in 1..=n {
        let c = BigRational::new(factorial_big(n + m - i - 1), factorial_big(n - i));
        sum += c * (BigRational::one() + &p_table[i - 1]);
    }
    Ok(first + lead * sum)
}

/// [`expected_gamma_hu`] in floating point with log-gamma factorials.
pub fn expected_gamma_hu_f64(n: usize, m: usize, p_table: &[f64]) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(CccdError::range("n, m", format!("({n}, {m})"), "n >= 1 and m >= 1"));
    }
    if p_table.len() < n {
        return Err(CccdError::param("p_table", format!("need p_1..p_{n}, got {}", p_table.len())));
    }
    let lg = |v: usize| ln_gamma(v as f64 + 1.0);
    let first = 2.0 * n as f64 / (n + m) as f64;
    if m == 1 {
        return Ok(first);
    }
    let lead = lg(n) + ((m * (m - 1)) as f64).ln() - lg(n + m);
    let sum: f64 = (1..=n)
        .map(|i| (lead + lg(n + m - i - 1) - lg(n - i)).exp() * (1.0 + p_table[i - 1]))
        .sum();
    Ok(first + sum)
}

/// Exact uniform `p_i = 4/9 - (16/9) 4^-i` as rationals, `i = 1..=n`.
pub fn uniform_p_rational(n: usize) -> Vec<BigRational> {
    (1..=n)
        .map(|i| {
            let four = BigInt::from(4).pow(i as u32);
            BigRational::new(BigInt::from(4), BigInt::from(9)) - BigRational::new(BigInt::from(16), BigInt::from(9) * four)
        })
        .collect()
}

/// Large-`n` law with fixed `m`: both end cells add 1 and each of the `m - 1`
/// middle cells adds `1 + Bernoulli(p_j)`. A single `p` is shared by all
/// middle cells. Indexed by `gamma`.
pub fn asymptotic_law_fixed_m(p_cell_limits: &[f64], m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(CccdError::NoAnchors);
    }
    let mid = m - 1;
    let ps: Vec<f64> = match p_cell_limits.len() {
        _ if mid == 0 => Vec::new(),
        1 => vec![p_cell_limits[0]; mid],
        l if l == mid => p_cell_limits.to_vec(),
        l => return Err(CccdError::param("p_cell_limits", format!("need 1 or {mid} values, got {l}"))),
    };
    if let Some(&p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(CccdError::range("p", p, "[0, 1]"));
    }
    let mut dist = vec![1.0];
    for p in ps {
        let mut next = vec![0.0; dist.len() + 1];
        for (i, &v) in dist.iter().enumerate() {
            next[i] += v * (1.0 - p);
            next[i + 1] += v * p;
        }
        dist = next;
    }
    let mut out = vec![0.0; m + 1];
    out.extend(dist);
    Ok(out)
}

/// Simulated `E[gamma(D_{n,n})]` for uniform points and anchors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub ns: Vec<usize>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub strictly_increasing: bool,
    /// `E[gamma] / n` at the largest grid point.
    pub last_ratio: f64,
    pub passed: bool,
}

pub fn gamma_growth_check(n_grid: &[usize], reps: u64, seed: u64) -> Result<GrowthReport> {
    if n_grid.is_empty() {
        return Err(CccdError::param("n_grid", "empty"));
    }
    let u = DensityModel::new(Family::Uniform)?;
    let mut means = Vec::new();
    let mut ses = Vec::new();
    for &n in n_grid {
        let plan = SimulationPlan::new(u, Anchors::Random { fy: u, m: n }, n, reps, seed);
        let e = montecarlo::run(&plan)?;
        means.push(e.mean());
        ses.push(e.std_error());
    }
    let inc = means.windows(2).all(|w| w[1] > w[0]);
    let last = *n_grid.last().expect("non-empty");
    let ratio = means.last().copied().unwrap_or(0.0) / last as f64;
    Ok(GrowthReport {
        ns: n_grid.to_vec(),
        means,
        std_errors: ses,
        strictly_increasing: inc,
        last_ratio: ratio,
        passed: inc && ratio >= 0.5,
    })
}

/// Exact rational `E[gamma]` rows for small `(n, m)` under uniform cells.
pub fn expected_gamma_hu_uniform(n: usize, m: usize) -> Result<BigRational> {
    expected_gamma_hu(n, m, &uniform_p_rational(n))
}

/// Probability of each composition of `n` into `m + 1` cells with uniform
/// anchors and uniform points, keyed by the composition.
pub fn composition_probabilities_uniform(n: usize, m: usize) -> Result<BTreeMap<Vec<usize>, f64>> {
    if m == 0 || m > QUADRATURE_MAX_M {
        return Err(CccdError::range("m", m, format!("1..={QUADRATURE_MAX_M}")));
    }
    let u = DensityModel::new(Family::Uniform)?;
    let lf = ln_factorials(n);
    let mut out = BTreeMap::new();
    for c in CompositionIterator::unrestricted(n, m + 1) {
        let v = integrate_anchor_simplex(&u, m, nodes_for(n), |ys| {
            let q = masses(&u, CellMode::Hu, ys);
            ln_multinomial(&c, &q, &lf).map_or(0.0, f64::exp)
        });
        out.insert(c, v);
    }
    Ok(out)
}

/// Rational to `f64`, saturating on failure.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compositions::binomial;

    fn uniform() -> DensityModel {
        DensityModel::new(Family::Uniform).unwrap()
    }

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn single_point_single_vertex() {
        let c = AnchorConditional::new(&uniform(), &[1.0 / 3.0, 2.0 / 3.0], CellMode::Restricted, 1, &cfg()).unwrap();
        let p = pmf_conditional(&c, 1).unwrap();
        assert!((p[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn median_anchor_two_points() {
        let c = AnchorConditional::new(&uniform(), &[0.5], CellMode::Restricted, 2, &cfg()).unwrap();
        let p = pmf_conditional(&c, 2).unwrap();
        assert!((p[1] - 0.5).abs() < 1e-15 && (p[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn composition_dp_and_literal_agree() {
        let fx = DensityModel::new(Family::Linear { a: 1.0 }).unwrap();
        for mode in [CellMode::Hu, CellMode::Restricted] {
            let c = AnchorConditional::new(&fx, &[0.2, 0.45, 0.8], mode, 6, &cfg()).unwrap();
            for n in 1..=6 {
                let a = pmf_conditional(&c, n).unwrap();
                let b = pmf_conditional_dp(&c, n).unwrap();
                assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for k in 0..a.len() {
                    let l = pmf_conditional_literal(&c, n, k).unwrap();
                    assert!((a[k] - b[k]).abs() < 1e-13, "n={n} k={k}");
                    assert!((a[k] - l).abs() < 1e-13, "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn guard_rejects_large_spaces() {
        let c = AnchorConditional::new(&uniform(), &[0.5], CellMode::Restricted, 30, &cfg()).unwrap();
        assert!(pmf_conditional(&c, 24).is_err());
        assert!(pmf_conditional_dp(&c, 30).is_ok());
    }

    #[test]
    fn random_anchor_examples() {
        let u = uniform();
        let o = RandomAnchorOptions::default();
        let p = pmf_random_anchors(&u, &u, 1, 1, &o, &cfg()).unwrap();
        assert!((p[1] - 1.0).abs() < 1e-12);
        let p = pmf_random_anchors(&u, &u, 2, 1, &o, &cfg()).unwrap();
        assert!((p[2] - 1.0 / 3.0).abs() < 1e-12);
        let p = pmf_random_anchors(&u, &u, 4, 2, &o, &cfg()).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_examples() {
        let u = uniform();
        let o = RandomAnchorOptions::default();
        assert!((expected_gamma(&u, &u, 1, 1, &o, &cfg()).unwrap() - 1.0).abs() < 1e-12);
        assert!((expected_gamma(&u, &u, 2, 1, &o, &cfg()).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((expected_gamma(&u, &u, 2, 2, &o, &cfg()).unwrap() - 14.0 / 9.0).abs() < 1e-12);
        assert_eq!(expected_gamma_hu_uniform(2, 1).unwrap(), rat(4, 3));
        assert_eq!(expected_gamma_hu_uniform(2, 2).unwrap(), rat(14, 9));
    }

    #[test]
    fn expectation_routes_agree() {
        let u = uniform();
        let o = RandomAnchorOptions::default();
        for (n, m) in [(2, 2), (3, 2), (3, 3), (6, 3)] {
            let a = expected_gamma(&u, &u, n, m, &o, &cfg()).unwrap();
            let b = to_f64(&expected_gamma_hu_uniform(n, m).unwrap());
            let p: Vec<f64> = uniform_p_rational(n).iter().map(to_f64).collect();
            let c = expected_gamma_hu_f64(n, m, &p).unwrap();
            let pmf = pmf_random_anchors(&u, &u, n, m, &o, &cfg()).unwrap();
            let d: f64 = pmf.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
            assert!((a - b).abs() < 1e-9, "({n},{m}): {a} vs {b}");
            assert!((b - c).abs() < 1e-12);
            assert!((d - b).abs() < 1e-6);
        }
    }

    #[test]
    fn non_uniform_hu_expectation_matches_pmf() {
        let fx = DensityModel::new(Family::TwoStep { delta: 0.5 }).unwrap();
        let u = uniform();
        let o = RandomAnchorOptions::default();
        let e = expected_gamma(&fx, &u, 5, 2, &o, &cfg()).unwrap();
        let pmf = pmf_random_anchors(&fx, &u, 5, 2, &o, &cfg()).unwrap();
        let d: f64 = pmf.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
        assert!((e - d).abs() < 1e-6);
        let t = p_table(&fx, 5, &cfg()).unwrap();
        assert!((expected_gamma_hu_f64(5, 2, &t[1..]).unwrap() - e).abs() < 1e-9);
    }

    #[test]
    fn compositions_equally_likely() {
        for (n, m) in [(3, 1), (4, 2), (5, 3), (9, 3)] {
            let probs = composition_probabilities_uniform(n, m).unwrap();
            let count = binomial(n + m, m).to_f64().unwrap();
            assert_eq!(probs.len() as f64, count);
            for v in probs.values() {
                assert!((v - 1.0 / count).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fixed_m_laws() {
        assert_eq!(asymptotic_law_fixed_m(&[0.3], 1).unwrap(), vec![0.0, 0.0, 1.0]);
        let l = asymptotic_law_fixed_m(&[4.0 / 9.0], 3).unwrap();
        let want = [25.0 / 81.0, 40.0 / 81.0, 16.0 / 81.0];
        for (i, w) in want.iter().enumerate() {
            assert!((l[4 + i] - w).abs() < 1e-15);
        }
        assert!(asymptotic_law_fixed_m(&[0.1, 0.2], 4).is_err());
    }

    #[test]
    fn large_m_random_needs_monte_carlo() {
        let u = uniform();
        let o = RandomAnchorOptions::default();
        assert!(pmf_random_anchors(&u, &u, 3, 5, &o, &cfg()).is_err());
        let o = RandomAnchorOptions {
            monte_carlo: Some((2000, 1)),
            ..o
        };
        let p = pmf_random_anchors(&u, &u, 3, 5, &o, &cfg()).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn growth_small() {
        let r = gamma_growth_check(&[1, 5, 10], 2000, 3).unwrap();
        assert_eq!(r.means[0], 1.0);
        assert!(r.strictly_increasing);
    }
}
