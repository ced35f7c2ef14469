//! CCCD instances and their domination numbers.
//!
//! Anchors split the line into `m + 1` cells, indexed `0..=m` from the left. A
//! ball never contains an anchor, so the digraph is the disjoint union of the
//! per-cell digraphs and the domination number is the sum over cells. End cells
//! (index `0` and `m`) contribute `1` when occupied. A middle cell contributes
//! `1` when some point lies in its Gamma-1 region and `2` otherwise.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::density::DensityModel;
use crate::error::{CccdError, Result};

/// Largest vertex count accepted by [`CccdInstance::domination_number_oracle`].
pub const ORACLE_MAX_N: usize = 20;

/// A target sample and an anchor set, both sorted, with the induced cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CccdInstance {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `xs[offsets[j]..offsets[j + 1]]` lies in cell `j`.
    offsets: Vec<usize>,
}

/// The open ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProximityBall {
    pub center: f64,
    pub radius: f64,
}

impl ProximityBall {
    #[inline]
    pub fn contains(&self, z: f64) -> bool {
        (z - self.center).abs() < self.radius
    }
}

/// The open interval `(lo, hi)`; empty when `lo >= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaOneRegion {
    pub lo: f64,
    pub hi: f64,
}

impl GammaOneRegion {
    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    #[inline]
    pub fn contains(&self, z: f64) -> bool {
        z > self.lo && z < self.hi
    }
}

/// Contribution of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellGamma {
    /// Cell index, `0` is the left end cell.
    pub j: usize,
    pub count: usize,
    pub gamma: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationResult {
    pub total: usize,
    pub per_interval: Vec<CellGamma>,
    pub dominating_set: Vec<f64>,
    /// Points found exactly on a Gamma-1 region boundary (treated as outside).
    pub boundary_hits: usize,
}

fn check_sorted_distinct(v: &[f64]) -> Result<()> {
    for w in v.windows(2) {
        if w[0] == w[1] {
            return Err(CccdError::Tie { a: w[0], b: w[1] });
        }
    }
    Ok(())
}

fn sorted(mut v: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(&bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(CccdError::NonFinite(bad));
    }
    v.sort_by(f64::total_cmp);
    check_sorted_distinct(&v)?;
    Ok(v)
}

impl CccdInstance {
    /// Sorts and partitions the data; ties of any kind are rejected.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if ys.is_empty() {
            return Err(CccdError::NoAnchors);
        }
        let xs = sorted(xs)?;
        let ys = sorted(ys)?;
        let mut offsets = Vec::with_capacity(ys.len() + 2);
        offsets.push(0);
        for &y in &ys {
            let k = xs.partition_point(|&x| x < y);
            if k < xs.len() && xs[k] == y {
                return Err(CccdError::Tie { a: y, b: y });
            }
            offsets.push(k);
        }
        offsets.push(xs.len());
        Ok(CccdInstance { xs, ys, offsets })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn m(&self) -> usize {
        self.ys.len()
    }

    /// Number of cells, `m + 1`.
    pub fn cells(&self) -> usize {
        self.ys.len() + 1
    }

    /// Cell `j` as `(left, right)` with infinite sentinels at the ends.
    pub fn interval(&self, j: usize) -> (f64, f64) {
        let lo = if j == 0 { f64::NEG_INFINITY } else { self.ys[j - 1] };
        let hi = if j == self.ys.len() { f64::INFINITY } else { self.ys[j] };
        (lo, hi)
    }

    pub fn cell_points(&self, j: usize) -> &[f64] {
        &self.xs[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn is_end_cell(&self, j: usize) -> bool {
        j == 0 || j == self.ys.len()
    }

    /// Ball of the `i`-th smallest point.
    pub fn ball(&self, i: usize) -> ProximityBall {
        let x = self.xs[i];
        let k = self.ys.partition_point(|&y| y < x);
        let mut r = f64::INFINITY;
        if k > 0 {
            r = r.min(x - self.ys[k - 1]);
        }
        if k < self.ys.len() {
            r = r.min(self.ys[k] - x);
        }
        ProximityBall { center: x, radius: r }
    }

    /// All arcs `(i, j)`, `i != j`, with `xs[j]` in the ball of `xs[i]`, by sorted index.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.xs.len() {
            let b = self.ball(i);
            let start = self.xs.partition_point(|&z| z <= b.center - b.radius);
            for j in start..self.xs.len() {
                let z = self.xs[j];
                if z >= b.center + b.radius {
                    break;
                }
                if j != i && b.contains(z) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Gamma-1 region of a middle cell.
    pub fn gamma_one_region(&self, j: usize) -> Result<GammaOneRegion> {
        if j >= self.cells() {
            return Err(CccdError::range("j", j, format!("0..={}", self.m())));
        }
        if self.is_end_cell(j) {
            return Err(CccdError::Unsupported(format!("cell {j} is an end cell")));
        }
        let pts = self.cell_points(j);
        if pts.is_empty() {
            return Err(CccdError::Unsupported(format!("cell {j} is empty")));
        }
        let (lo, hi) = self.interval(j);
        Ok(middle_region(pts, lo, hi))
    }

    /// Domination number via the Gamma-1 characterisation, with a witness set.
    pub fn domination_number_fast(&self) -> DominationResult {
        let mut per = Vec::with_capacity(self.cells());
        let mut set = Vec::new();
        let mut hits = 0;
        let last = self.m();
        for j in 0..self.cells() {
            let pts = self.cell_points(j);
            let gamma = if pts.is_empty() {
                0
            } else if j == 0 {
                set.push(pts[0]);
                1
            } else if j == last {
                set.push(pts[pts.len() - 1]);
                1
            } else {
                let (lo, hi) = self.interval(j);
                let (g, witness, h) = middle_cell(pts, lo, hi);
                hits += h;
                set.extend(witness);
                g
            };
            per.push(CellGamma {
                j,
                count: pts.len(),
                gamma,
            });
        }
        DominationResult {
            total: per.iter().map(|c| c.gamma).sum(),
            per_interval: per,
            dominating_set: set,
            boundary_hits: hits,
        }
    }

    /// Exhaustive minimum dominating set size; `n <= 20`.
    pub fn domination_number_oracle(&self) -> Result<usize> {
        let n = self.xs.len();
        if n > ORACLE_MAX_N {
            return Err(CccdError::range("n", n, format!("0..={ORACLE_MAX_N} for exhaustive search")));
        }
        if n == 0 {
            return Ok(0);
        }
        let mut reach = vec![0u32; n];
        for (i, r) in reach.iter_mut().enumerate() {
            *r |= 1 << i;
        }
        for (i, j) in self.arcs() {
            reach[i] |= 1 << j;
        }
        let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        for size in 1..=n {
            // Gosper's hack over all subsets of the given size.
            let mut s: u32 = (1u32 << size) - 1;
            while s <= full {
                let mut cover = 0u32;
                let mut bits = s;
                while bits != 0 {
                    cover |= reach[bits.trailing_zeros() as usize];
                    bits &= bits - 1;
                }
                if cover == full {
                    return Ok(size);
                }
                let c = s & s.wrapping_neg();
                let r = s + c;
                s = (((r ^ s) >> 2) / c) | r;
            }
        }
        Ok(n)
    }

    /// Whether `set` dominates every point, by ball membership.
    pub fn dominates(&self, set: &[f64]) -> bool {
        let idx: Vec<usize> = set.iter().filter_map(|v| self.xs.iter().position(|x| x == v)).collect();
        if idx.len() != set.len() {
            return false;
        }
        (0..self.xs.len()).all(|t| idx.iter().any(|&i| i == t || self.ball(i).contains(self.xs[t])))
    }

    /// `(k1, k2)`: middle cells with more than one point, and middle cells with
    /// one point plus occupied end cells. The domination number is at most `2 k1 + k2`.
    pub fn upper_bound_terms(&self) -> (usize, usize) {
        let counts = self.counts();
        let mut k1 = 0;
        let mut k2 = 0;
        for (j, &c) in counts.iter().enumerate() {
            if self.is_end_cell(j) {
                k2 += usize::from(c > 0);
            } else if c > 1 {
                k1 += 1;
            } else if c == 1 {
                k2 += 1;
            }
        }
        (k1, k2)
    }

    /// Parses the line format `x <value>` / `y <value>` (`#` comments allowed).
    pub fn from_text(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap_or_default();
            let val = it.next().ok_or_else(|| CccdError::Parse {
                line: no + 1,
                reason: "missing value".into(),
            })?;
            if it.next().is_some() {
                return Err(CccdError::Parse {
                    line: no + 1,
                    reason: "trailing tokens".into(),
                });
            }
            let v: f64 = val.parse().map_err(|_| CccdError::Parse {
                line: no + 1,
                reason: format!("`{val}` is not a number"),
            })?;
            match tag {
                "x" => xs.push(v),
                "y" => ys.push(v),
                other => {
                    return Err(CccdError::Parse {
                        line: no + 1,
                        reason: format!("unknown tag `{other}`, expected x or y"),
                    })
                }
            }
        }
        Self::new(xs, ys)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for x in &self.xs {
            let _ = writeln!(s, "x {x}");
        }
        for y in &self.ys {
            let _ = writeln!(s, "y {y}");
        }
        s
    }

    /// Parses `{"xs": [...], "ys": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            xs: Vec<f64>,
            ys: Vec<f64>,
        }
        let r: Raw = serde_json::from_str(text)?;
        Self::new(r.xs, r.ys)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "xs": self.xs, "ys": self.ys }).to_string()
    }
}

fn middle_region(pts: &[f64], lo: f64, hi: f64) -> GammaOneRegion {
    GammaOneRegion {
        lo: 0.5 * (pts[pts.len() - 1] + lo),
        hi: 0.5 * (pts[0] + hi),
    }
}

/// `(gamma, witness, boundary hits)` for an occupied middle cell.
fn middle_cell(pts: &[f64], lo: f64, hi: f64) -> (usize, Vec<f64>, usize) {
    let region = middle_region(pts, lo, hi);
    let mut hits = 0;
    for &x in pts {
        if region.contains(x) {
            return (1, vec![x], hits);
        }
        hits += usize::from(x == region.lo || x == region.hi);
    }
    // No single point covers the cell: the rightmost point of the left half
    // covers that half, the leftmost point of the right half covers the rest.
    let mid = 0.5 * (lo + hi);
    let k = pts.partition_point(|&x| x < mid);
    let mut w = Vec::with_capacity(2);
    if k > 0 {
        w.push(pts[k - 1]);
    }
    if k < pts.len() {
        w.push(pts[k]);
    }
    (2, w, hits)
}

/// Summary of one pass over the cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct Scan {
    pub total: usize,
    pub boundary_hits: usize,
    pub k1: usize,
    pub k2: usize,
}

/// Cell-wise domination number from points and sorted anchors, without building
/// an instance. Middle cells are appended to `per_cell` as `(count, gamma)`.
pub(crate) fn gamma_by_cells(xs: &[f64], ys: &[f64], per_cell: Option<&mut Vec<(usize, u8)>>) -> Scan {
    let cells = ys.len() + 1;
    let mut min = vec![f64::INFINITY; cells];
    let mut max = vec![f64::NEG_INFINITY; cells];
    let mut cnt = vec![0usize; cells];
    let mut cell_of = Vec::with_capacity(xs.len());
    for &x in xs {
        let j = ys.partition_point(|&y| y < x);
        cell_of.push(j);
        cnt[j] += 1;
        min[j] = min[j].min(x);
        max[j] = max[j].max(x);
    }
    let mut covered = vec![false; cells];
    let mut scan = Scan::default();
    for (&x, &j) in xs.iter().zip(&cell_of) {
        if j == 0 || j == cells - 1 || covered[j] {
            continue;
        }
        let lo = 0.5 * (max[j] + ys[j - 1]);
        let hi = 0.5 * (min[j] + ys[j]);
        if x > lo && x < hi {
            covered[j] = true;
        } else if x == lo || x == hi {
            scan.boundary_hits += 1;
        }
    }
    let mut out = per_cell;
    for j in 0..cells {
        let end = j == 0 || j == cells - 1;
        let g = if cnt[j] == 0 {
            0
        } else if end || covered[j] {
            1
        } else {
            2
        };
        scan.total += g;
        if end {
            scan.k2 += usize::from(cnt[j] > 0);
        } else {
            scan.k1 += usize::from(cnt[j] > 1);
            scan.k2 += usize::from(cnt[j] == 1);
            if let Some(v) = out.as_deref_mut() {
                v.push((cnt[j], g as u8));
            }
        }
    }
    scan
}

/// Domination number for the proximity map `F^-1(B(F(x), r))` with anchors at the
/// support ends: the points are mapped through the cdf and treated as a plain instance.
pub fn transformed_digraph_gamma(model: &DensityModel, xs: &[f64]) -> Result<usize> {
    let s = model.support();
    if s.lo != 0.0 || s.hi != 1.0 {
        return Err(CccdError::Unsupported("transformed digraph needs support (0, 1)".into()));
    }
    let mut us = Vec::with_capacity(xs.len());
    for &x in xs {
        if !(x > 0.0 && x < 1.0) {
            return Err(CccdError::range("x", x, "(0, 1)"));
        }
        us.push(model.cdf(x));
    }
    Ok(CccdInstance::new(us, vec![0.0, 1.0])?.domination_number_fast().total)
}

/// The transformed ball `F^-1(B(F(x), min(F(x), 1 - F(x))))` as an interval.
pub fn transformed_ball(model: &DensityModel, x: f64) -> Result<(f64, f64)> {
    let u = model.cdf(x);
    let r = u.min(1.0 - u);
    Ok((model.quantile(u - r)?, model.quantile(u + r)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Family;

    fn inst(xs: &[f64], ys: &[f64]) -> CccdInstance {
        CccdInstance::new(xs.to_vec(), ys.to_vec()).unwrap()
    }

    #[test]
    fn build_examples() {
        let i = inst(&[0.3, 0.2, 0.8], &[0.0, 1.0]);
        assert_eq!(i.xs(), &[0.2, 0.3, 0.8]);
        assert_eq!(i.counts(), vec![0, 3, 0]);
        assert_eq!(i.interval(0), (f64::NEG_INFINITY, 0.0));
        assert_eq!(i.interval(2), (1.0, f64::INFINITY));
        assert_eq!(inst(&[], &[0.5]).counts(), vec![0, 0]);
        assert!(matches!(CccdInstance::new(vec![0.5], vec![0.5]), Err(CccdError::Tie { .. })));
        assert!(matches!(CccdInstance::new(vec![0.2, 0.2], vec![0.5]), Err(CccdError::Tie { .. })));
        assert!(matches!(CccdInstance::new(vec![0.2], vec![]), Err(CccdError::NoAnchors)));
        assert!(CccdInstance::new(vec![f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn arc_examples() {
        assert_eq!(inst(&[0.2, 0.3, 0.8], &[0.0, 1.0]).arcs(), vec![(0, 1), (1, 0)]);
        assert_eq!(inst(&[0.45, 0.55], &[0.0, 1.0]).arcs(), vec![(0, 1), (1, 0)]);
        assert!(inst(&[0.4], &[0.0, 1.0]).arcs().is_empty());
    }

    #[test]
    fn domination_examples() {
        let a = inst(&[0.2, 0.3, 0.8], &[0.0, 1.0]);
        let r = a.domination_number_fast();
        assert_eq!(r.total, 2);
        assert_eq!(a.domination_number_oracle().unwrap(), 2);
        assert!(a.dominates(&r.dominating_set));
        assert_eq!(a.gamma_one_region(1).unwrap(), GammaOneRegion { lo: 0.4, hi: 0.6 });

        let b = inst(&[0.45, 0.55], &[0.0, 1.0]);
        assert_eq!(b.domination_number_fast().total, 1);
        assert_eq!(b.domination_number_oracle().unwrap(), 1);
        let g = b.gamma_one_region(1).unwrap();
        assert!((g.lo - 0.275).abs() < 1e-15 && (g.hi - 0.725).abs() < 1e-15);

        let c = inst(&[-0.5, 0.2], &[0.0, 1.0]);
        let r = c.domination_number_fast();
        assert_eq!(r.total, 2);
        assert_eq!(r.per_interval.iter().map(|p| p.gamma).collect::<Vec<_>>(), vec![1, 1, 0]);

        assert_eq!(inst(&[], &[0.0]).domination_number_oracle().unwrap(), 0);
        let single = inst(&[0.5], &[0.0, 1.0]);
        assert!(single.gamma_one_region(1).unwrap().contains(0.5));
        let two = inst(&[0.1, 0.9], &[0.0, 1.0]);
        assert_eq!(two.domination_number_fast().total, 2);
        assert!(two.gamma_one_region(0).is_err());
    }

    #[test]
    fn witness_for_spread_cell() {
        let a = inst(&[0.1, 0.3, 0.45, 0.9], &[0.0, 1.0]);
        let r = a.domination_number_fast();
        assert_eq!(r.total, 2);
        assert_eq!(r.dominating_set, vec![0.45, 0.9]);
        assert!(a.dominates(&r.dominating_set));
    }

    #[test]
    fn oracle_guard() {
        let xs: Vec<f64> = (0..21).map(|i| i as f64 / 100.0 + 0.005).collect();
        assert!(inst(&xs, &[0.0, 1.0]).domination_number_oracle().is_err());
    }

    #[test]
    fn text_and_json_io() {
        let a = inst(&[0.2, 0.3, 0.8], &[0.0, 1.0]);
        assert_eq!(CccdInstance::from_text(&a.to_text()).unwrap(), a);
        assert_eq!(CccdInstance::from_json(&a.to_json()).unwrap(), a);
        let t = "# sample\nx 0.5\n\ny 0\ny 1 # right\n";
        assert_eq!(CccdInstance::from_text(t).unwrap().counts(), vec![0, 1, 0]);
        assert!(matches!(CccdInstance::from_text("z 1\n"), Err(CccdError::Parse { line: 1, .. })));
        assert!(matches!(CccdInstance::from_text("y 0\nx abc\n"), Err(CccdError::Parse { line: 2, .. })));
    }

    #[test]
    fn lean_counter_matches() {
        let xs = [0.7, -0.2, 0.1, 0.3, 0.45, 0.9, 1.4, 0.65];
        let ys = [0.0, 0.5, 1.0];
        let a = inst(&xs, &ys);
        let mut cells = Vec::new();
        let scan = gamma_by_cells(&xs, &ys, Some(&mut cells));
        assert_eq!(scan.total, a.domination_number_fast().total);
        assert_eq!((scan.k1, scan.k2), a.upper_bound_terms());
        assert_eq!(cells.len(), 2);
    }

    #[test]
    fn transformed_examples() {
        let sq = DensityModel::new(Family::SquareCdf).unwrap();
        let g = transformed_digraph_gamma(&sq, &[0.5, 0.6]).unwrap();
        assert_eq!(g, inst(&[0.25, 0.36], &[0.0, 1.0]).domination_number_fast().total);
        let (lo, hi) = transformed_ball(&sq, 0.5).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(transformed_digraph_gamma(&sq, &[1.5]).is_err());
        let u = DensityModel::new(Family::Uniform).unwrap();
        let xs = [0.1, 0.35, 0.62, 0.8];
        assert_eq!(transformed_digraph_gamma(&u, &xs).unwrap(), inst(&xs, &[0.0, 1.0]).domination_number_fast().total);
    }
}
