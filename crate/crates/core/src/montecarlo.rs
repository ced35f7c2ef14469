//! Seeded simulation of domination numbers.
//!
//! Replicate `r` draws from its own ChaCha8 stream `(seed, r)`, so counts are
//! bit-identical for any worker count. Replicates are processed in fixed-size
//! chunks whose tallies are merged in chunk order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::density::DensityModel;
use crate::digraph::gamma_by_cells;
use crate::error::{CccdError, Result};
use crate::parallel;

/// Attempts per replicate before a tie is treated as a degenerate model.
pub const MAX_TIE_RETRIES: usize = 100;

/// Default per-atom acceptance threshold, in standard errors.
pub const DEFAULT_THRESHOLD: f64 = 4.0;

const CHUNK: u64 = 512;

/// Where the anchors come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Anchors {
    Fixed(Vec<f64>),
    /// `m` iid anchors from `fy`, redrawn every replicate.
    Random { fy: DensityModel, m: usize },
}

/// How target points are placed given the anchors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellSampling {
    /// Points iid from `fx`, independent of the anchors.
    Independent,
    /// A cell is picked with probability proportional to its length inside the
    /// support, and the point is `fx` rescaled onto that cell.
    Rescaled,
}

/// Proximity map used for the domination number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proximity {
    /// Open ball around `x` reaching the nearest anchor.
    Spherical,
    /// The same ball built on `F(x)`, pulled back through `F^-1`.
    CdfTransformed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub fx: DensityModel,
    pub anchors: Anchors,
    pub n: usize,
    pub reps: u64,
    pub seed: u64,
    /// Worker count; `0` uses the default pool.
    pub parallelism: usize,
    pub sampling: CellSampling,
    pub proximity: Proximity,
    /// Record per-middle-cell outcomes keyed by the cell count.
    pub track_cells: bool,
}

impl SimulationPlan {
    pub fn new(fx: DensityModel, anchors: Anchors, n: usize, reps: u64, seed: u64) -> Self {
        SimulationPlan {
            fx,
            anchors,
            n,
            reps,
            seed,
            parallelism: 0,
            sampling: CellSampling::Independent,
            proximity: Proximity::Spherical,
            track_cells: false,
        }
    }

    pub fn m(&self) -> usize {
        match &self.anchors {
            Anchors::Fixed(v) => v.len(),
            Anchors::Random { m, .. } => *m,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(CccdError::range("reps", 0, "reps >= 1"));
        }
        match &self.anchors {
            Anchors::Fixed(v) => {
                if v.is_empty() {
                    return Err(CccdError::NoAnchors);
                }
                if let Some(&bad) = v.iter().find(|y| !y.is_finite()) {
                    return Err(CccdError::NonFinite(bad));
                }
                let mut s = v.clone();
                s.sort_by(f64::total_cmp);
                if let Some(w) = s.windows(2).find(|w| w[0] == w[1]) {
                    return Err(CccdError::Tie { a: w[0], b: w[1] });
                }
            }
            Anchors::Random { m, .. } if *m == 0 => return Err(CccdError::NoAnchors),
            Anchors::Random { .. } => {}
        }
        if self.proximity == Proximity::CdfTransformed && !matches!(self.anchors, Anchors::Fixed(_)) {
            return Err(CccdError::Unsupported("the transformed proximity map needs fixed anchors".into()));
        }
        Ok(())
    }
}

/// Outcomes of one middle cell, keyed by its point count: `[gamma=0, gamma=1, gamma=2]`.
pub type CellTally = BTreeMap<usize, [u64; 3]>;

/// Counts of simulated domination numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmpiricalDistribution {
    /// `counts[k]` replicates had `gamma = k`.
    pub counts: Vec<u64>,
    pub reps: u64,
    pub boundary_hits: u64,
    /// Replicates where `gamma > 2 k1 + k2` or `2 k1 + k2 > min(n, 2m)`.
    pub bound_violations: u64,
    /// Per middle cell (index `0` is the first middle cell), when tracked.
    pub cells: Vec<CellTally>,
}

impl EmpiricalDistribution {
    fn empty(m: usize, track: bool) -> Self {
        EmpiricalDistribution {
            counts: Vec::new(),
            reps: 0,
            boundary_hits: 0,
            bound_violations: 0,
            cells: if track { vec![CellTally::new(); m.saturating_sub(1)] } else { Vec::new() },
        }
    }

    fn record(&mut self, k: usize) {
        if self.counts.len() <= k {
            self.counts.resize(k + 1, 0);
        }
        self.counts[k] += 1;
        self.reps += 1;
    }

    fn merge(&mut self, o: EmpiricalDistribution) {
        if self.counts.len() < o.counts.len() {
            self.counts.resize(o.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&o.counts) {
            *a += b;
        }
        self.reps += o.reps;
        self.boundary_hits += o.boundary_hits;
        self.bound_violations += o.bound_violations;
        for (mine, theirs) in self.cells.iter_mut().zip(o.cells) {
            for (k, v) in theirs {
                let e = mine.entry(k).or_insert([0; 3]);
                for i in 0..3 {
                    e[i] += v[i];
                }
            }
        }
    }

    pub fn fraction(&self, k: usize) -> f64 {
        self.counts.get(k).copied().unwrap_or(0) as f64 / self.reps.max(1) as f64
    }

    /// Empirical probabilities indexed by `gamma`.
    pub fn pmf(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|k| self.fraction(k)).collect()
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum::<f64>() / self.reps.max(1) as f64
    }

    /// Standard error of [`Self::mean`].
    pub fn std_error(&self) -> f64 {
        let mu = self.mean();
        let n = self.reps as f64;
        if n < 2.0 {
            return 0.0;
        }
        let ss: f64 = self.counts.iter().enumerate().map(|(k, &c)| c as f64 * (k as f64 - mu).powi(2)).sum();
        (ss / (n - 1.0) / n).sqrt()
    }
}

fn draw_anchors(plan: &SimulationPlan, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    match &plan.anchors {
        Anchors::Fixed(v) => {
            let mut v = v.clone();
            v.sort_by(f64::total_cmp);
            Ok(v)
        }
        Anchors::Random { fy, m } => {
            for _ in 0..MAX_TIE_RETRIES {
                let ys = fy.sample(*m, rng);
                if ys.windows(2).all(|w| w[0] < w[1]) {
                    return Ok(ys);
                }
            }
            Err(CccdError::TooManyTies {
                attempts: MAX_TIE_RETRIES,
            })
        }
    }
}

fn draw_points(plan: &SimulationPlan, ys: &[f64], rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
    out.clear();
    let fx = &plan.fx;
    match plan.sampling {
        CellSampling::Independent => {
            out.extend((0..plan.n).map(|_| fx.quantile_unchecked(rng.random::<f64>())));
        }
        CellSampling::Rescaled => {
            let s = fx.support();
            let mut edges = vec![s.lo];
            edges.extend(ys.iter().map(|&y| y.clamp(s.lo, s.hi)));
            edges.push(s.hi);
            let w = s.width();
            for _ in 0..plan.n {
                let u = rng.random::<f64>() * w + s.lo;
                let j = (edges.partition_point(|&e| e <= u).max(1) - 1).min(edges.len() - 2);
                let (a, b) = (edges[j], edges[j + 1]);
                let t = (fx.quantile_unchecked(rng.random::<f64>()) - s.lo) / w;
                out.push(a + (b - a) * t);
            }
        }
    }
}

fn has_tie(xs: &mut [f64], ys: &[f64]) -> bool {
    xs.sort_unstable_by(f64::total_cmp);
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return true;
    }
    let (mut i, mut j) = (0, 0);
    while i < xs.len() && j < ys.len() {
        if xs[i] == ys[j] {
            return true;
        }
        if xs[i] < ys[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    false
}

fn replicate(plan: &SimulationPlan, r: u64, xs: &mut Vec<f64>, cells: &mut Vec<(usize, u8)>) -> Result<(usize, usize, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    rng.set_stream(r);
    let mut ys = draw_anchors(plan, &mut rng)?;
    if plan.proximity == Proximity::CdfTransformed {
        ys = ys.iter().map(|&y| plan.fx.cdf(y)).collect();
    }
    for _ in 0..MAX_TIE_RETRIES {
        draw_points(plan, &ys, &mut rng, xs);
        if plan.proximity == Proximity::CdfTransformed {
            for x in xs.iter_mut() {
                *x = plan.fx.cdf(*x);
            }
        }
        if has_tie(xs, &ys) {
            continue;
        }
        cells.clear();
        let scan = gamma_by_cells(xs, &ys, plan.track_cells.then_some(&mut *cells));
        let m = ys.len();
        let bound = 2 * scan.k1 + scan.k2;
        let ok = scan.total <= bound && bound <= plan.n.min(2 * m);
        return Ok((scan.total, scan.boundary_hits, ok));
    }
    Err(CccdError::TooManyTies {
        attempts: MAX_TIE_RETRIES,
    })
}

fn run_chunk(plan: &SimulationPlan, start: u64, end: u64) -> Result<EmpiricalDistribution> {
    let mut acc = EmpiricalDistribution::empty(plan.m(), plan.track_cells);
    let mut xs = Vec::with_capacity(plan.n);
    let mut cells = Vec::new();
    for r in start..end {
        let (g, hits, ok) = replicate(plan, r, &mut xs, &mut cells)?;
        acc.record(g);
        acc.boundary_hits += hits as u64;
        acc.bound_violations += u64::from(!ok);
        for (slot, &(c, g)) in acc.cells.iter_mut().zip(cells.iter()) {
            slot.entry(c).or_insert([0; 3])[g as usize] += 1;
        }
    }
    Ok(acc)
}

/// Runs the plan and returns the counts of each domination number.
pub fn run(plan: &SimulationPlan) -> Result<EmpiricalDistribution> {
    plan.validate()?;
    let chunks: Vec<(u64, u64)> = (0..plan.reps.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(plan.reps)))
        .collect();
    let parts = parallel::with_threads(plan.parallelism, || parallel::map(chunks, |(a, b)| run_chunk(plan, a, b)));
    let mut out = EmpiricalDistribution::empty(plan.m(), plan.track_cells);
    for p in parts {
        out.merge(p?);
    }
    Ok(out)
}

/// `(center, half-width)` of the Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let den = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / den;
    let half = z / den * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (center, half)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomComparison {
    pub k: usize,
    pub count: u64,
    pub empirical: f64,
    pub predicted: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonVerdict {
    /// Pearson chi-square statistic over atoms with positive prediction.
    pub statistic: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub per_atom: Vec<AtomComparison>,
    pub reps: u64,
    pub total_variation: f64,
}

/// Per-atom binomial z-scores of `empirical` against `predicted[k] = P(gamma = k)`.
pub fn compare(empirical: &EmpiricalDistribution, predicted: &[f64], threshold: f64) -> Result<ComparisonVerdict> {
    if empirical.reps == 0 {
        return Err(CccdError::Unsupported("empty empirical distribution".into()));
    }
    let n = empirical.reps as f64;
    let len = empirical.counts.len().max(predicted.len());
    let mut per = Vec::new();
    let mut chi2 = 0.0;
    let mut pass = true;
    for k in 0..len {
        let count = empirical.counts.get(k).copied().unwrap_or(0);
        let p = predicted.get(k).copied().unwrap_or(0.0);
        if count == 0 && p == 0.0 {
            continue;
        }
        let e = count as f64 / n;
        let z = if p > 0.0 && p < 1.0 {
            (e - p) / (p * (1.0 - p) / n).sqrt()
        } else if e == p {
            0.0
        } else {
            f64::INFINITY.copysign(e - p)
        };
        chi2 += if p > 0.0 { (count as f64 - n * p).powi(2) / (n * p) } else { f64::INFINITY };
        pass &= z.abs() <= threshold;
        per.push(AtomComparison {
            k,
            count,
            empirical: e,
            predicted: p,
            z,
        });
    }
    Ok(ComparisonVerdict {
        statistic: chi2,
        threshold,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        per_atom: per,
        reps: empirical.reps,
        total_variation: total_variation(empirical, predicted),
    })
}

/// `sum |p_hat - p| / 2`.
pub fn total_variation(empirical: &EmpiricalDistribution, predicted: &[f64]) -> f64 {
    let len = empirical.counts.len().max(predicted.len());
    0.5 * (0..len)
        .map(|k| (empirical.fraction(k) - predicted.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Family;

    fn uniform() -> DensityModel {
        DensityModel::new(Family::Uniform).unwrap()
    }

    #[test]
    fn single_point_has_gamma_one() {
        let plan = SimulationPlan::new(DensityModel::new(Family::Beta { nu1: 2.0, nu2: 5.0 }).unwrap(), Anchors::Fixed(vec![0.0, 1.0]), 1, 500, 3);
        let e = run(&plan).unwrap();
        assert_eq!(e.counts, vec![0, 500]);
    }

    #[test]
    fn uniform_law_and_compare() {
        let plan = SimulationPlan::new(uniform(), Anchors::Fixed(vec![0.0, 1.0]), 5, 20_000, 11);
        let e = run(&plan).unwrap();
        let p = 4.0 / 9.0 - 16.0 / 9.0 / 1024.0;
        let v = compare(&e, &[0.0, 1.0 - p, p], DEFAULT_THRESHOLD).unwrap();
        assert_eq!(v.verdict, Verdict::Pass, "{v:?}");
        let wrong = compare(&e, &[0.0, 0.5, 0.5], DEFAULT_THRESHOLD).unwrap();
        assert_eq!(wrong.verdict, Verdict::Fail);
        assert_eq!(e.bound_violations, 0);
    }

    #[test]
    fn many_anchors_few_points() {
        let plan = SimulationPlan::new(uniform(), Anchors::Random { fy: uniform(), m: 50 }, 3, 2_000, 5);
        let e = run(&plan).unwrap();
        assert!(e.counts.len() <= 4);
        assert_eq!(e.counts[0], 0);
        assert_eq!(e.bound_violations, 0);
    }

    #[test]
    fn parallelism_does_not_change_counts() {
        let mut plan = SimulationPlan::new(uniform(), Anchors::Random { fy: uniform(), m: 4 }, 9, 3_000, 99);
        plan.track_cells = true;
        plan.parallelism = 1;
        let a = run(&plan).unwrap();
        plan.parallelism = 8;
        let b = run(&plan).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rescaled_sampling_stays_in_cells() {
        let mut plan = SimulationPlan::new(uniform(), Anchors::Fixed(vec![0.25, 0.5]), 30, 200, 1);
        plan.sampling = CellSampling::Rescaled;
        plan.track_cells = true;
        let e = run(&plan).unwrap();
        let total: u64 = e.cells[0].values().map(|v| v.iter().sum::<u64>()).sum();
        assert_eq!(total, 200);
    }

    #[test]
    fn compare_rejects_empty() {
        let e = EmpiricalDistribution::empty(1, false);
        assert!(compare(&e, &[1.0], 4.0).is_err());
    }

    #[test]
    fn wilson_interval() {
        let (c, h) = wilson(50, 100, 1.96);
        assert!((c - 0.5).abs() < 1e-12);
        assert!((h - 0.0960).abs() < 1e-3);
    }
}
