//! Density families on a bounded interval.
//!
//! All families except [`Family::GeneralLinear`] live on (0, 1). Sampling goes
//! through the quantile function so one uniform stream reproduces any family.

mod kernel;
mod spec;

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CccdError, Result};
use crate::quadrature::{integrate_1d, QuadratureConfig};

use kernel::Kernel;
pub use spec::DensitySpec;

pub(crate) use kernel::normal_mass;

/// Open support interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SupportInterval {
    pub const UNIT: SupportInterval = SupportInterval { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(CccdError::param("support", "endpoints must be finite"));
        }
        if lo >= hi {
            return Err(CccdError::param("support", format!("need lo < hi, got ({lo}, {hi})")));
        }
        Ok(SupportInterval { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// The supported density families with their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Uniform,
    /// Uniform on `(delta, 1 - delta)`.
    ShrunkUniform { delta: f64 },
    /// Uniform on `(0,1)` minus `(1/2 - delta, 1/2 + delta)`.
    GapUniform { delta: f64 },
    /// `1 + delta` on `(0, 1/2)`, `1 - delta` on `[1/2, 1)`.
    TwoStep { delta: f64 },
    /// `1 + delta` on the outer quarters, `1 - delta` on `[1/4, 3/4)`.
    ThreeStep { delta: f64 },
    /// `a x + 1 - a/2`.
    Linear { a: f64 },
    /// Normal(mu, sigma) restricted to (0, 1).
    TruncatedNormal { mu: f64, sigma: f64 },
    /// `2^q (q+1) t^q` with `t = x` on the left half and `t = x - 1/2` on the right.
    QPower { q: f64 },
    /// `delta + 12 (1 - delta) t^2` with `t` as for [`Family::QPower`].
    PieceQuadratic { delta: f64 },
    ArcSine,
    /// `(pi/2) |sin(2 pi x)|`.
    AbsSine,
    Beta { nu1: f64, nu2: f64 },
    /// `f(x) = 2x`, `F(x) = x^2`.
    SquareCdf,
    /// `a x + b` on an arbitrary support, `b` fixed by normalisation.
    GeneralLinear { a: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::ShrunkUniform { .. } => "shrunk-uniform",
            Family::GapUniform { .. } => "gap-uniform",
            Family::TwoStep { .. } => "two-step",
            Family::ThreeStep { .. } => "three-step",
            Family::Linear { .. } => "linear",
            Family::TruncatedNormal { .. } => "truncated-normal",
            Family::QPower { .. } => "q-power",
            Family::PieceQuadratic { .. } => "piece-quadratic",
            Family::ArcSine => "arcsine",
            Family::AbsSine => "abs-sine",
            Family::Beta { .. } => "beta",
            Family::SquareCdf => "square-cdf",
            Family::GeneralLinear { .. } => "general-linear",
        }
    }
}

/// Side of a one-sided limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// The three points where the limit theory needs derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalPoint {
    Lo,
    Mid,
    Hi,
}

/// A real number or a signed infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

impl ExtendedReal {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        !matches!(self, ExtendedReal::Finite(_))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtendedReal::Finite(v) if *v == 0.0)
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::PosInfinity => f64::INFINITY,
            ExtendedReal::NegInfinity => f64::NEG_INFINITY,
        }
    }

    fn from_sign(positive: bool) -> Self {
        if positive {
            ExtendedReal::PosInfinity
        } else {
            ExtendedReal::NegInfinity
        }
    }

    /// Product where an exact zero annihilates an infinity.
    pub(crate) fn mul(self, o: Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return ExtendedReal::Finite(0.0);
        }
        let a = self.as_f64();
        let b = o.as_f64();
        match (self, o) {
            (ExtendedReal::Finite(_), ExtendedReal::Finite(_)) => ExtendedReal::Finite(a * b),
            _ => Self::from_sign((a > 0.0) == (b > 0.0)),
        }
    }

    /// Sum; opposite infinities resolve to `+inf` only if that is what both agree on,
    /// otherwise the first infinity wins (never produced by the families here).
    pub(crate) fn add(self, o: Self) -> Self {
        match (self, o) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            (ExtendedReal::Finite(_), inf) | (inf, ExtendedReal::Finite(_)) => inf,
            (a, _) => a,
        }
    }

    pub(crate) fn scale(self, s: f64) -> Self {
        self.mul(ExtendedReal::Finite(s))
    }
}

/// A one-sided derivative of the density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneSidedDerivative {
    pub point: f64,
    pub side: Side,
    pub order: u32,
    pub value: ExtendedReal,
}

/// Highest derivative order supplied analytically.
pub const MAX_DERIVATIVE_ORDER: u32 = 2;

/// Anything that behaves like a density on a bounded interval.
pub trait UnivariateDensity: Sync {
    fn support(&self) -> SupportInterval;
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
    /// Interior points where the density is not smooth.
    fn knots(&self) -> Vec<f64>;
    /// True if the density blows up at an endpoint.
    fn unbounded(&self) -> bool {
        false
    }
}

/// A validated density family on its support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityModel {
    family: Family,
    support: SupportInterval,
    kernel: Kernel,
}

fn check(name: &'static str, v: f64, ok: bool, range: &str) -> Result<()> {
    if !v.is_finite() {
        return Err(CccdError::param(name, format!("{v} is not finite")));
    }
    if !ok {
        return Err(CccdError::param(name, format!("{v} outside {range}")));
    }
    Ok(())
}

impl DensityModel {
    /// A family on its canonical support (0, 1).
    pub fn new(family: Family) -> Result<Self> {
        if let Family::GeneralLinear { .. } = family {
            return Err(CccdError::param("support", "general-linear needs an explicit support"));
        }
        Self::on_support(family, SupportInterval::UNIT)
    }

    /// A family on `support`. Only [`Family::GeneralLinear`] accepts a support other than (0, 1).
    pub fn on_support(family: Family, support: SupportInterval) -> Result<Self> {
        SupportInterval::new(support.lo, support.hi)?;
        if !matches!(family, Family::GeneralLinear { .. }) && support != SupportInterval::UNIT {
            return Err(CccdError::param("support", format!("{} is defined on (0, 1) only", family.name())));
        }
        let kernel = match family {
            Family::Uniform => Kernel::Uniform,
            Family::ShrunkUniform { delta } => {
                check("delta", delta, (0.0..0.5).contains(&delta), "[0, 1/2)")?;
                Kernel::Shrunk { delta }
            }
            Family::GapUniform { delta } => {
                check("delta", delta, (0.0..0.5).contains(&delta), "[0, 1/2)")?;
                Kernel::Gap { delta }
            }
            Family::TwoStep { delta } => {
                check("delta", delta, (-1.0..=1.0).contains(&delta), "[-1, 1]")?;
                Kernel::TwoStep { delta }
            }
            Family::ThreeStep { delta } => {
                check("delta", delta, (-1.0..=1.0).contains(&delta), "[-1, 1]")?;
                Kernel::ThreeStep { delta }
            }
            Family::Linear { a } => {
                check("a", a, a.abs() <= 2.0, "[-2, 2]")?;
                Kernel::Linear { a }
            }
            Family::GeneralLinear { a } => {
                let w = support.width();
                check("a", a, a.abs() * w * w <= 2.0 * (1.0 + 1e-12), "[-2/w^2, 2/w^2]")?;
                Kernel::Linear {
                    a: (a * w * w).clamp(-2.0, 2.0),
                }
            }
            Family::TruncatedNormal { mu, sigma } => {
                check("mu", mu, true, "")?;
                check("sigma", sigma, sigma > 0.0, "(0, inf)")?;
                let mass = normal_mass(-mu / sigma, (1.0 - mu) / sigma);
                if !(mass > 1e-280) {
                    return Err(CccdError::param("mu", "(0, 1) carries no normal mass"));
                }
                Kernel::Normal { mu, sigma, mass }
            }
            Family::QPower { q } => {
                check("q", q, q >= 0.0, "[0, inf)")?;
                Kernel::QPower { q }
            }
            Family::PieceQuadratic { delta } => {
                check("delta", delta, (0.0..=1.0).contains(&delta), "[0, 1]")?;
                Kernel::PieceQuadratic { delta }
            }
            Family::ArcSine => Kernel::ArcSine,
            Family::AbsSine => Kernel::AbsSine,
            Family::Beta { nu1, nu2 } => {
                check("nu1", nu1, nu1 >= 1.0, "[1, inf)")?;
                check("nu2", nu2, nu2 >= 1.0, "[1, inf)")?;
                Kernel::Beta {
                    a: nu1,
                    b: nu2,
                    ln_b: kernel::beta_log_norm(nu1, nu2),
                }
            }
            Family::SquareCdf => Kernel::SquareCdf,
        };
        let model = DensityModel { family, support, kernel };
        let total = model.total_mass()?;
        if (total - 1.0).abs() > 1e-10 {
            return Err(CccdError::param(
                "family",
                format!("{} integrates to {total}, not 1", family.name()),
            ));
        }
        Ok(model)
    }

    /// `integral of pdf` on the canonical support, each smooth piece mapped by
    /// `x = a + (b - a)(1 - cos(pi t))/2` to tame endpoint behaviour.
    fn total_mass(&self) -> Result<f64> {
        let mut pts = vec![0.0];
        pts.extend(self.kernel.knots());
        pts.push(1.0);
        let cfg = QuadratureConfig {
            rel_tol: 1e-13,
            abs_tol: 1e-14,
            max_subdivisions: 4000,
            log_domain: false,
        };
        let mut total = 0.0;
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let k = self.kernel;
            let f = move |t: f64| {
                let c = (PI * t).cos();
                let s = (PI * t).sin();
                let x = a + (b - a) * 0.5 * (1.0 - c);
                let y = (1.0 - b) + (b - a) * 0.5 * (1.0 + c);
                k.pdf(x, y) * (b - a) * 0.5 * PI * s
            };
            total += integrate_1d(f, 0.0, 1.0, &[], &cfg)?.value;
        }
        Ok(total)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn support(&self) -> SupportInterval {
        self.support
    }

    pub fn name(&self) -> &'static str {
        self.family.name()
    }

    #[inline]
    fn to_unit(&self, x: f64) -> (f64, f64) {
        let w = self.support.width();
        ((x - self.support.lo) / w, (self.support.hi - x) / w)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let (t, s) = self.to_unit(x);
        self.kernel.pdf(t, s) / self.support.width()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (t, s) = self.to_unit(x);
        self.kernel.cdf(t, s)
    }

    /// Density on the canonical coordinate `t` with `1 - t = s`.
    pub(crate) fn unit_pdf(&self, t: f64, s: f64) -> f64 {
        self.kernel.pdf(t, s)
    }

    pub(crate) fn unit_cdf(&self, t: f64, s: f64) -> f64 {
        self.kernel.cdf(t, s)
    }

    pub(crate) fn unit_knots(&self) -> Vec<f64> {
        self.kernel.knots()
    }

    /// Generalised inverse `inf { x : cdf(x) >= u }`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(CccdError::range("u", u, "[0, 1]"));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        self.support.lo + self.support.width() * self.kernel.quantile(u)
    }

    /// Whether the density is unbounded at an endpoint.
    pub fn is_unbounded(&self) -> bool {
        self.kernel.unbounded()
    }

    /// Locates `point` among the endpoints and the midpoint.
    pub fn critical_point(&self, point: f64) -> Result<CriticalPoint> {
        let tol = 1e-12 * self.support.width().max(1.0);
        let s = self.support;
        if (point - s.lo).abs() <= tol {
            Ok(CriticalPoint::Lo)
        } else if (point - s.hi).abs() <= tol {
            Ok(CriticalPoint::Hi)
        } else if (point - s.mid()).abs() <= tol {
            Ok(CriticalPoint::Mid)
        } else {
            Err(CccdError::range("point", point, "{lo, (lo+hi)/2, hi}"))
        }
    }

    /// Analytic one-sided derivative at an endpoint or the midpoint.
    pub fn one_sided_derivative(&self, point: f64, side: Side, order: u32) -> Result<OneSidedDerivative> {
        let at = self.critical_point(point)?;
        Ok(OneSidedDerivative {
            point,
            side,
            order,
            value: self.derivative_at(at, side, order)?,
        })
    }

    pub fn derivative_at(&self, at: CriticalPoint, side: Side, order: u32) -> Result<ExtendedReal> {
        match (at, side) {
            (CriticalPoint::Lo, Side::Left) | (CriticalPoint::Hi, Side::Right) => {
                return Err(CccdError::Unsupported("derivative from outside the support".into()))
            }
            _ => {}
        }
        self.derivative_near(at, 0.0, side, order)
    }

    /// Derivative at `point + offset` on the lo side of the midpoint for
    /// `Side::Left`, the hi side otherwise; `offset >= 0` is measured into the
    /// support from the endpoints and away from the midpoint.
    pub fn derivative_near(&self, at: CriticalPoint, offset: f64, side: Side, order: u32) -> Result<ExtendedReal> {
        if order > MAX_DERIVATIVE_ORDER {
            return Err(CccdError::Unsupported(format!(
                "derivative order {order} (at most {MAX_DERIVATIVE_ORDER} supported)"
            )));
        }
        let w = self.support.width();
        let d = offset / w;
        let (t, s) = match (at, side) {
            (CriticalPoint::Lo, _) => (d, 1.0 - d),
            (CriticalPoint::Hi, _) => (1.0 - d, d),
            (CriticalPoint::Mid, Side::Right) => (0.5 + d, 0.5 - d),
            (CriticalPoint::Mid, Side::Left) => (0.5 - d, 0.5 + d),
        };
        let v = self.kernel.derivative(t, s, side, order);
        Ok(v.scale(w.powi(-(order as i32 + 1))))
    }

    /// `n` iid draws, sorted ascending.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let mut xs: Vec<f64> = (0..n).map(|_| self.quantile_unchecked(rng.random::<f64>())).collect();
        xs.sort_by(f64::total_cmp);
        xs
    }

    /// Spec form for echoing configurations.
    pub fn to_spec(&self) -> DensitySpec {
        DensitySpec::from_model(self)
    }

    /// Parses a JSON density spec.
    pub fn from_json(text: &str) -> Result<Self> {
        spec::parse(text)
    }
}

impl UnivariateDensity for DensityModel {
    fn support(&self) -> SupportInterval {
        self.support
    }
    fn pdf(&self, x: f64) -> f64 {
        DensityModel::pdf(self, x)
    }
    fn cdf(&self, x: f64) -> f64 {
        DensityModel::cdf(self, x)
    }
    fn knots(&self) -> Vec<f64> {
        let s = self.support;
        self.kernel.knots().into_iter().map(|t| s.lo + s.width() * t).collect()
    }
    fn unbounded(&self) -> bool {
        self.kernel.unbounded()
    }
}
