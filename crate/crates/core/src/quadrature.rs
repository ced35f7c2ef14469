//! Adaptive Gauss-Kronrod quadrature in one and two dimensions.
//!
//! The two-dimensional engine integrates over unions of regions of the form
//! `{x0 <= x <= x1, lower(x) <= y <= upper(x)}` with affine `lower`/`upper`.
//! Each region is mapped to the unit square and refined with a global priority
//! queue of panels; every panel is a tensor 15-point Kronrod rule whose embedded
//! 7-point Gauss rule gives a separate error estimate along each axis, and the
//! worst panel is split along the axis that dominates its error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{CccdError, Result};
use crate::parallel;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// Node, Kronrod weight and Gauss weight (zero off the Gauss subset) on [-1, 1].
fn kronrod_nodes() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, 0.0, 0.0); 15];
    for (i, slot) in out.iter_mut().enumerate() {
        let j = i.min(14 - i);
        let x = if i < 7 { -XGK[j] } else if i == 7 { 0.0 } else { XGK[j] };
        let wg = if j % 2 == 1 { WG[(j - 1) / 2] } else { 0.0 };
        *slot = (x, WGK[j], wg);
    }
    out
}

/// Tolerances and limits for the adaptive engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Evaluate large powers as `exp(k ln g)`.
    pub log_domain: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 20_000,
            log_domain: true,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(CccdError::param("rel_tol", "must be positive"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(CccdError::param("abs_tol", "must be positive"));
        }
        if self.max_subdivisions < 1 {
            return Err(CccdError::param("max_subdivisions", "must be at least 1"));
        }
        Ok(())
    }
}

/// An integral estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Interval1 {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval1 {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Interval1 {}
impl PartialOrd for Interval1 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval1 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then(other.a.total_cmp(&self.a))
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = 0.0;
    let mut g = 0.0;
    let mut abs = 0.0;
    for (x, wk, wg) in kronrod_nodes() {
        let v = f(c + h * x);
        k += wk * v;
        g += wg * v;
        abs += wk * v.abs();
    }
    let err = ((k - g) * h).abs().max(50.0 * f64::EPSILON * abs * h.abs());
    (k * h, err)
}

/// Adaptive 15-point Kronrod integration of `f` over `[a, b]`, split first at `breaks`.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, breaks: &[f64], cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let mut heap = BinaryHeap::new();
    for w in pts.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1]);
        heap.push(Interval1 {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= tol {
            return Ok(Estimate {
                value,
                error,
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if heap.len() + 2 > cfg.max_subdivisions || mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            return Err(CccdError::NotConverged {
                estimate: value,
                error_bound: error,
                panels: heap.len(),
            });
        }
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&f, lo, hi);
            heap.push(Interval1 {
                a: lo,
                b: hi,
                value,
                error,
            });
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let nf = n as f64;
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// `y = c0 + c1 x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub c0: f64,
    pub c1: f64,
}

impl Affine {
    pub const fn constant(c: f64) -> Self {
        Affine { c0: c, c1: 0.0 }
    }

    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        self.c0 + self.c1 * x
    }

    pub fn inverse(&self, y: f64) -> Option<f64> {
        (self.c1 != 0.0).then(|| (y - self.c0) / self.c1)
    }
}

/// `{x0 <= x <= x1, lower(x) <= y <= upper(x)}`.
///
/// `x_sqrt` and `y_sqrt` cluster nodes quadratically toward `x = x0` and `y = upper(x)`,
/// which absorbs inverse square-root endpoint singularities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x0: f64,
    pub x1: f64,
    pub lower: Affine,
    pub upper: Affine,
    pub x_sqrt: bool,
    pub y_sqrt: bool,
}

impl Region {
    pub fn new(x0: f64, x1: f64, lower: Affine, upper: Affine) -> Self {
        Region {
            x0,
            x1,
            lower,
            upper,
            x_sqrt: false,
            y_sqrt: false,
        }
    }

    fn map(&self, s: f64, t: f64) -> (f64, f64, f64) {
        let (u, du) = if self.x_sqrt { (s * s, 2.0 * s) } else { (s, 1.0) };
        let (v, dv) = if self.y_sqrt {
            let r = 1.0 - t;
            (1.0 - r * r, 2.0 * r)
        } else {
            (t, 1.0)
        };
        let wx = self.x1 - self.x0;
        let x = self.x0 + wx * u;
        let g = self.lower.at(x);
        let h = self.upper.at(x);
        let y = g + (h - g) * v;
        (x, y, wx * du * (h - g) * dv)
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    region: usize,
    s: (f64, f64),
    t: (f64, f64),
    value: f64,
    err_s: f64,
    err_t: f64,
    id: u64,
}

impl Panel {
    fn error(&self) -> f64 {
        self.err_s + self.err_t
    }
}

#[derive(Debug, Clone, Copy)]
struct Key {
    error: f64,
    id: u64,
}
impl PartialEq for Key {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Key {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error).then(o.id.cmp(&self.id))
    }
}

fn eval_panel<F: Fn(f64, f64) -> f64>(
    f: &F,
    nodes: &[(f64, f64, f64); 15],
    region: &Region,
    idx: usize,
    s: (f64, f64),
    t: (f64, f64),
    id: u64,
) -> Panel {
    let (cs, hs) = (0.5 * (s.0 + s.1), 0.5 * (s.1 - s.0));
    let (ct, ht) = (0.5 * (t.0 + t.1), 0.5 * (t.1 - t.0));
    let mut kk = 0.0;
    let mut gk = 0.0;
    let mut kg = 0.0;
    let mut abs = 0.0;
    for &(xs, wks, wgs) in nodes {
        let si = cs + hs * xs;
        let mut row_k = 0.0;
        let mut row_g = 0.0;
        let mut row_abs = 0.0;
        for &(xt, wkt, wgt) in nodes {
            let (x, y, jac) = region.map(si, ct + ht * xt);
            let v = if jac > 0.0 { f(x, y) * jac } else { 0.0 };
            row_k += wkt * v;
            row_g += wgt * v;
            row_abs += wkt * v.abs();
        }
        kk += wks * row_k;
        gk += wgs * row_k;
        kg += wks * row_g;
        abs += wks * row_abs;
    }
    let area = hs * ht;
    let floor = 50.0 * f64::EPSILON * abs * area;
    Panel {
        region: idx,
        s,
        t,
        value: kk * area,
        err_s: ((kk - gk) * area).abs().max(floor),
        err_t: ((kk - kg) * area).abs().max(floor),
        id,
    }
}

const BATCH: usize = 32;

/// Adaptive integration of `f(x, y)` over the union of `regions`.
///
/// Work is split into fixed-size batches of panels evaluated in parallel; the
/// batch composition and the summation order depend only on the inputs, so the
/// result is bit-identical for any number of worker threads.
pub fn integrate_2d<F>(f: F, regions: &[Region], cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    cfg.validate()?;
    let nodes = kronrod_nodes();
    let mut next_id: u64 = 0;
    let seeds: Vec<(usize, u64)> = (0..regions.len())
        .map(|i| {
            next_id += 1;
            (i, next_id - 1)
        })
        .collect();
    let first = parallel::map(seeds, |(i, id)| {
        eval_panel(&f, &nodes, &regions[i], i, (0.0, 1.0), (0.0, 1.0), id)
    });

    let mut store: std::collections::BTreeMap<u64, Panel> = first.into_iter().map(|p| (p.id, p)).collect();
    let mut heap: BinaryHeap<Key> = store
        .values()
        .map(|p| Key {
            error: p.error(),
            id: p.id,
        })
        .collect();

    loop {
        let (value, error) = store
            .values()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error()));
        let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= tol {
            return Ok(Estimate {
                value,
                error,
                panels: store.len(),
            });
        }
        if store.len() + BATCH > cfg.max_subdivisions {
            return Err(CccdError::NotConverged {
                estimate: value,
                error_bound: error,
                panels: store.len(),
            });
        }
        let mut jobs = Vec::with_capacity(2 * BATCH);
        while jobs.len() < 2 * BATCH {
            let Some(key) = heap.pop() else { break };
            let p = store.remove(&key.id).expect("heap and store agree");
            let halves = if p.err_s >= p.err_t {
                let m = 0.5 * (p.s.0 + p.s.1);
                [((p.s.0, m), p.t), ((m, p.s.1), p.t)]
            } else {
                let m = 0.5 * (p.t.0 + p.t.1);
                [(p.s, (p.t.0, m)), (p.s, (m, p.t.1))]
            };
            for (s, t) in halves {
                jobs.push((p.region, s, t, next_id));
                next_id += 1;
            }
        }
        let fresh = parallel::map(jobs, |(r, s, t, id)| eval_panel(&f, &nodes, &regions[r], r, s, t, id));
        for p in fresh {
            heap.push(Key {
                error: p.error(),
                id: p.id,
            });
            store.insert(p.id, p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let n = kronrod_nodes();
        let k: f64 = n.iter().map(|p| p.1).sum();
        let g: f64 = n.iter().map(|p| p.2).sum();
        assert!((k - 2.0).abs() < 1e-14);
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn one_dimensional_polynomial_and_singular() {
        let cfg = QuadratureConfig::default();
        let e = integrate_1d(|x| x.powi(5), 0.0, 2.0, &[], &cfg).unwrap();
        assert!((e.value - 64.0 / 6.0).abs() < 1e-12);
        let e = integrate_1d(|x| 1.0 / x.sqrt(), 0.0, 1.0, &[], &cfg).unwrap();
        assert!((e.value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..20 {
            let rule = gauss_legendre(n);
            let w: f64 = rule.iter().map(|p| p.1).sum();
            assert!((w - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 1;
            let v: f64 = rule.iter().map(|&(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((v - exact).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn triangle_area_and_moment() {
        let cfg = QuadratureConfig::default();
        let tri = [Region::new(0.0, 1.0, Affine { c0: 0.0, c1: 1.0 }, Affine::constant(1.0))];
        let e = integrate_2d(|_, _| 1.0, &tri, &cfg).unwrap();
        assert!((e.value - 0.5).abs() < 1e-14);
        let e = integrate_2d(|x, y| x * y, &tri, &cfg).unwrap();
        assert!((e.value - 0.125).abs() < 1e-14);
    }

    #[test]
    fn sqrt_maps_absorb_corner_singularity() {
        let cfg = QuadratureConfig::default();
        let mut r = Region::new(0.0, 1.0, Affine::constant(0.0), Affine::constant(1.0));
        r.x_sqrt = true;
        r.y_sqrt = true;
        let e = integrate_2d(|x, y| 1.0 / (x * (1.0 - y)).sqrt(), &[r], &cfg).unwrap();
        assert!((e.value - 4.0).abs() < 1e-9);
    }

    #[test]
    fn non_convergence_reports_estimate() {
        let cfg = QuadratureConfig {
            max_subdivisions: 40,
            ..Default::default()
        };
        let r = Region::new(0.0, 1.0, Affine::constant(0.0), Affine::constant(1.0));
        let err = integrate_2d(|x, y| if x + y < 0.7 { 1.0 } else { 0.0 }, &[r], &cfg).unwrap_err();
        assert!(matches!(err, CccdError::NotConverged { .. }));
    }
}
