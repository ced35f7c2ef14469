//! Limits of `p_n(F)` as `n` grows, from one-sided density derivatives at the
//! cell ends and the midpoint.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::density::{CriticalPoint, DensityModel, ExtendedReal, Family, Side, MAX_DERIVATIVE_ORDER};
use crate::error::{CccdError, Result};

/// Derivative data at the three critical points and the resulting limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticProfile {
    /// Smallest order at the left end with `alpha_k != 0`.
    pub k: u32,
    /// Smallest order at the right end with `beta_ell != 0`.
    pub ell: u32,
    pub d_lo: f64,
    pub d_hi: f64,
    pub d_mid_right: f64,
    pub d_mid_left: f64,
    pub alpha_k: f64,
    pub beta_ell: f64,
    pub p_limit: f64,
}

/// How a limit was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitMethod {
    Profile,
    Unbounded,
    FamilyFormula,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitReport {
    pub p_limit: f64,
    pub method: LimitMethod,
    pub profile: Option<AsymptoticProfile>,
}

fn bounded(v: ExtendedReal, at: &str, order: u32) -> Result<f64> {
    v.finite().ok_or_else(|| {
        CccdError::Unsupported(format!(
            "derivative of order {order} at {at} is infinite; use the unbounded limit"
        ))
    })
}

/// Smallest order `j` with `end + 2^-(j+1) mid != 0`, plus the values there.
fn first_order(model: &DensityModel, end: CriticalPoint, side: Side) -> Result<(u32, f64, f64, f64)> {
    let name = if end == CriticalPoint::Lo { "the left end" } else { "the right end" };
    for j in 0..=MAX_DERIVATIVE_ORDER {
        let d_end = bounded(model.derivative_at(end, side, j)?, name, j)?;
        let d_mid = bounded(model.derivative_at(CriticalPoint::Mid, side, j)?, "the midpoint", j)?;
        let c = d_end + 0.5f64.powi(j as i32 + 1) * d_mid;
        if c != 0.0 {
            return Ok((j, d_end, d_mid, c));
        }
    }
    Err(CccdError::Unsupported(format!(
        "every derivative up to order {MAX_DERIVATIVE_ORDER} vanishes at {name} and the midpoint"
    )))
}

/// The limit from the first non-vanishing one-sided derivatives.
pub fn asymptotic_profile(model: &DensityModel) -> Result<AsymptoticProfile> {
    let (k, d_lo, d_mid_right, alpha_k) = first_order(model, CriticalPoint::Lo, Side::Right)?;
    let (ell, d_hi, d_mid_left, beta_ell) = first_order(model, CriticalPoint::Hi, Side::Left)?;
    let p = d_lo * d_hi / (alpha_k * beta_ell);
    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(CccdError::Unsupported(format!("limit {p} outside [0, 1]")));
    }
    Ok(AsymptoticProfile {
        k,
        ell,
        d_lo,
        d_hi,
        d_mid_right,
        d_mid_left,
        alpha_k,
        beta_ell,
        p_limit: p.clamp(0.0, 1.0),
    })
}

/// Family-specific closed forms for the limit.
pub fn limit_family_formula(model: &DensityModel) -> Result<f64> {
    let linear = |a: f64| (4.0 - a * a) / (9.0 - a * a);
    Ok(match model.family() {
        Family::Uniform => 4.0 / 9.0,
        Family::ShrunkUniform { delta } => {
            if delta > 0.0 {
                0.0
            } else {
                4.0 / 9.0
            }
        }
        Family::GapUniform { delta } => {
            if delta > 0.0 {
                1.0
            } else {
                4.0 / 9.0
            }
        }
        Family::TwoStep { delta } => 4.0 * (1.0 - delta * delta) / (9.0 - delta * delta),
        Family::ThreeStep { delta } => 4.0 * (1.0 + delta).powi(2) / (3.0 + delta).powi(2),
        Family::Linear { a } => linear(a),
        Family::GeneralLinear { a } => {
            let w = model.support().width();
            linear(a * w * w)
        }
        Family::TruncatedNormal { mu, sigma } => {
            let s2 = 8.0 * sigma * sigma;
            4.0 / ((2.0 + ((4.0 * mu - 1.0) / s2).exp()) * (2.0 + ((3.0 - 4.0 * mu) / s2).exp()))
        }
        Family::QPower { q } => {
            let t = 2f64.powf(q + 1.0);
            2.0 * t / (3.0 * (1.0 + t))
        }
        Family::PieceQuadratic { delta } => {
            if delta == 0.0 {
                16.0 / 27.0
            } else {
                4.0 / 9.0
            }
        }
        Family::AbsSine => 16.0 / 25.0,
        Family::ArcSine => 1.0,
        Family::Beta { nu1, nu2 } => {
            if nu1 == 1.0 && nu2 == 1.0 {
                4.0 / 9.0
            } else {
                0.0
            }
        }
        Family::SquareCdf => 0.0,
    })
}

/// Offsets `10^-2, ..., 10^-16` (times the support width) for [`limit_unbounded`].
pub const UNBOUNDED_GRID: std::ops::RangeInclusive<i32> = 2..=16;

/// Successive ratio values must agree to this before the limit is accepted.
pub const UNBOUNDED_TOL: f64 = 1e-6;

fn order_for_limit(model: &DensityModel, end: CriticalPoint, side: Side) -> Result<u32> {
    for j in 0..=MAX_DERIVATIVE_ORDER {
        let a = model.derivative_at(end, side, j)?;
        let b = model.derivative_at(CriticalPoint::Mid, side, j)?;
        if !(a.is_zero() && b.is_zero()) {
            return Ok(j);
        }
    }
    Err(CccdError::Unsupported("derivatives vanish at every supported order".into()))
}

/// The limit as a ratio of derivatives evaluated `delta` inside the critical
/// points, with `delta -> 0` along a geometric grid.
pub fn limit_unbounded(model: &DensityModel) -> Result<f64> {
    let k = order_for_limit(model, CriticalPoint::Lo, Side::Right)?;
    let l = order_for_limit(model, CriticalPoint::Hi, Side::Left)?;
    let w = model.support().width();
    let mut seen: Vec<f64> = Vec::new();
    for e in UNBOUNDED_GRID {
        let off = w * 10f64.powi(-e);
        let lo = model.derivative_near(CriticalPoint::Lo, off, Side::Right, k)?.as_f64();
        let mr = model.derivative_near(CriticalPoint::Mid, off, Side::Right, k)?.as_f64();
        let hi = model.derivative_near(CriticalPoint::Hi, off, Side::Left, l)?.as_f64();
        let ml = model.derivative_near(CriticalPoint::Mid, off, Side::Left, l)?.as_f64();
        let den = (lo + 0.5f64.powi(k as i32 + 1) * mr) * (hi + 0.5f64.powi(l as i32 + 1) * ml);
        let r = lo * hi / den;
        if !r.is_finite() {
            continue;
        }
        seen.push(r);
        if let [.., a, b, c] = seen[..] {
            if a.max(b).max(c) - a.min(b).min(c) <= UNBOUNDED_TOL {
                return Ok(c.clamp(0.0, 1.0));
            }
        }
    }
    Err(CccdError::LimitUnstable {
        last: seen.last().copied().unwrap_or(f64::NAN),
    })
}

/// Limit when each end derivative equals the adjacent midpoint derivative.
pub fn limit_matched_derivatives(k: u32, ell: u32) -> f64 {
    1.0 / (1.0 + 0.5f64.powi(k as i32 + 1)) / (1.0 + 0.5f64.powi(ell as i32 + 1))
}

/// Profile for bounded derivatives, the ratio limit for unbounded densities,
/// and the family formula when neither applies. A bounded density with an
/// unbounded derivative (fractional power) has no integer order for the ratio,
/// so it goes to the formula.
pub fn p_limit(model: &DensityModel) -> Result<LimitReport> {
    if !model.is_unbounded() {
        if let Ok(p) = asymptotic_profile(model) {
            return Ok(LimitReport {
                p_limit: p.p_limit,
                method: LimitMethod::Profile,
                profile: Some(p),
            });
        }
    }
    if model.is_unbounded() {
        return Ok(LimitReport {
            p_limit: limit_unbounded(model)?,
            method: LimitMethod::Unbounded,
            profile: None,
        });
    }
    Ok(LimitReport {
        p_limit: limit_family_formula(model)?,
        method: LimitMethod::FamilyFormula,
        profile: None,
    })
}

/// First-order correction `p_n ~ p_F + c1 n^-e1 + c2 n^-e2`.
///
/// Informational only: the sign and size are not checked against data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateConstant {
    pub c1: f64,
    pub e1: f64,
    pub c2: f64,
    pub e2: f64,
    /// Coefficient of the slowest-decaying power, and that power.
    pub leading: f64,
    pub exponent: f64,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `x^(p/q)` for integer `q`, real when `q` is odd or `x >= 0`.
fn root_pow(x: f64, p: i32, q: u32) -> Option<f64> {
    let r = if q % 2 == 1 {
        x.signum() * x.abs().powf(1.0 / q as f64)
    } else if x >= 0.0 {
        x.powf(1.0 / q as f64)
    } else {
        return None;
    };
    Some(r.powi(p))
}

pub fn rate_constant(model: &DensityModel) -> Result<RateConstant> {
    let p = asymptotic_profile(model)?;
    let (k, l) = (p.k, p.ell);
    let d1 = bounded(model.derivative_at(CriticalPoint::Lo, Side::Right, k + 1)?, "the left end", k + 1)?;
    let d2 = bounded(model.derivative_at(CriticalPoint::Hi, Side::Left, l + 1)?, "the right end", l + 1)?;
    let sign_l = if l % 2 == 0 { 1.0 } else { -1.0 };
    let s1 = -sign_l / (factorial(k) * factorial(l + 1)) * p.d_lo * d2;
    let s2 = sign_l / (factorial(l) * factorial(k + 1)) * d1 * p.d_hi;
    let s3 = p.alpha_k / factorial(k + 1);
    let s4 = -sign_l * p.beta_ell / factorial(l + 1);
    let (kq, lq) = (k + 1, l + 1);
    let err = || CccdError::Unsupported("rate constant is not real for these derivatives".into());
    let den = f64::from(kq * lq) * root_pow(s3, k as i32 + 2, kq).ok_or_else(err)? * root_pow(s4, l as i32 + 2, lq).ok_or_else(err)?;
    let g = |x: f64| ln_gamma(x).exp();
    let c1 = s1 * root_pow(s3, 1, kq).ok_or_else(err)? * g(f64::from(l + 2) / f64::from(lq)) / den;
    let c2 = s2 * root_pow(s4, 1, lq).ok_or_else(err)? * g(f64::from(k + 2) / f64::from(kq)) / den;
    let e1 = f64::from(k + l + 1) / f64::from(lq);
    let e2 = f64::from(k + l + 1) / f64::from(kq);
    let (leading, exponent) = if (e1 - e2).abs() < 1e-12 {
        (c1 + c2, e1)
    } else if e1 < e2 {
        (c1, e1)
    } else {
        (c2, e2)
    };
    Ok(RateConstant {
        c1,
        e1,
        c2,
        e2,
        leading,
        exponent,
    })
}

/// Least-squares slope `s` in `|err| ~ C n^-s` over `(n, err)` points.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(n, e)| (n.ln(), e.abs().ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::SupportInterval;

    fn m(f: Family) -> DensityModel {
        DensityModel::new(f).unwrap()
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn profile_examples() {
        close(asymptotic_profile(&m(Family::Uniform)).unwrap().p_limit, 4.0 / 9.0);
        close(asymptotic_profile(&m(Family::Linear { a: 1.0 })).unwrap().p_limit, 3.0 / 8.0);
        let a = asymptotic_profile(&m(Family::AbsSine)).unwrap();
        assert_eq!((a.k, a.ell), (1, 1));
        close(a.p_limit, 16.0 / 25.0);
        let q = asymptotic_profile(&m(Family::PieceQuadratic { delta: 0.0 })).unwrap();
        assert_eq!((q.k, q.ell), (2, 0));
        close(q.p_limit, 16.0 / 27.0);
        close(asymptotic_profile(&m(Family::QPower { q: 1.0 })).unwrap().p_limit, 8.0 / 15.0);
    }

    #[test]
    fn profile_matches_family_formula() {
        let fams = [
            Family::Uniform,
            Family::ShrunkUniform { delta: 0.2 },
            Family::GapUniform { delta: 0.2 },
            Family::TwoStep { delta: 0.5 },
            Family::TwoStep { delta: -1.0 },
            Family::TwoStep { delta: 1.0 },
            Family::ThreeStep { delta: 0.3 },
            Family::ThreeStep { delta: 1.0 },
            Family::ThreeStep { delta: -1.0 },
            Family::Linear { a: 2.0 },
            Family::Linear { a: -2.0 },
            Family::Linear { a: -0.7 },
            Family::TruncatedNormal { mu: 0.3, sigma: 0.4 },
            Family::QPower { q: 0.0 },
            Family::QPower { q: 1.0 },
            Family::QPower { q: 2.0 },
            Family::PieceQuadratic { delta: 0.0 },
            Family::PieceQuadratic { delta: 0.5 },
            Family::AbsSine,
            Family::Beta { nu1: 2.0, nu2: 2.0 },
            Family::Beta { nu1: 1.0, nu2: 3.0 },
            Family::SquareCdf,
        ];
        for f in fams {
            let model = m(f);
            let a = asymptotic_profile(&model).unwrap().p_limit;
            let b = limit_family_formula(&model).unwrap();
            assert!((a - b).abs() < 1e-12, "{f:?}: {a} vs {b}");
        }
        let g = DensityModel::on_support(Family::GeneralLinear { a: 0.1 }, SupportInterval::new(-1.0, 3.0).unwrap()).unwrap();
        close(asymptotic_profile(&g).unwrap().p_limit, limit_family_formula(&g).unwrap());
        close(limit_family_formula(&g).unwrap(), (1.6f64.powi(2) - 4.0) / (1.6f64.powi(2) - 9.0));
    }

    #[test]
    fn degenerate_endpoints() {
        close(limit_family_formula(&m(Family::Linear { a: 2.0 })).unwrap(), 0.0);
        close(limit_family_formula(&m(Family::QPower { q: 0.0 })).unwrap(), 4.0 / 9.0);
        close(asymptotic_profile(&m(Family::TwoStep { delta: 1.0 })).unwrap().p_limit, 0.0);
        close(asymptotic_profile(&m(Family::ThreeStep { delta: 1.0 })).unwrap().p_limit, 1.0);
        close(asymptotic_profile(&m(Family::ThreeStep { delta: -1.0 })).unwrap().p_limit, 0.0);
    }

    #[test]
    fn arcsine_needs_the_unbounded_route() {
        let a = m(Family::ArcSine);
        assert!(asymptotic_profile(&a).is_err());
        assert!((limit_unbounded(&a).unwrap() - 1.0).abs() < 1e-5);
        let r = p_limit(&a).unwrap();
        assert_eq!(r.method, LimitMethod::Unbounded);
    }

    #[test]
    fn bounded_model_through_unbounded_route() {
        for f in [Family::Uniform, Family::Linear { a: 1.0 }, Family::AbsSine, Family::TwoStep { delta: 0.5 }] {
            let model = m(f);
            let a = limit_unbounded(&model).unwrap();
            let b = asymptotic_profile(&model).unwrap().p_limit;
            assert!((a - b).abs() < 1e-6, "{f:?}: {a} vs {b}");
        }
    }

    #[test]
    fn fractional_power_uses_formula() {
        let q = m(Family::QPower { q: 0.5 });
        let r = p_limit(&q).unwrap();
        let t = 2f64.powf(1.5);
        assert!((r.p_limit - 2.0 * t / (3.0 * (1.0 + t))).abs() < 1e-6);
    }

    #[test]
    fn matched_derivatives() {
        close(limit_matched_derivatives(0, 0), 4.0 / 9.0);
        close(limit_matched_derivatives(1, 1), 16.0 / 25.0);
        for q in 0..=6 {
            let t = 2f64.powi(q + 1);
            close(limit_matched_derivatives(q as u32, 0), 2.0 * t / (3.0 * (1.0 + t)));
        }
    }

    #[test]
    fn normal_limit_grows_with_sigma() {
        let sig = [0.05, 0.1, 0.5, 1.0, 5.0, 50.0];
        let v: Vec<f64> = sig
            .iter()
            .map(|&s| limit_family_formula(&m(Family::TruncatedNormal { mu: 0.5, sigma: s })).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(v[0] < 1e-3);
        assert!((v[5] - 4.0 / 9.0).abs() < 1e-3);
    }

    #[test]
    fn linear_formula_in_range() {
        for i in -20..=20 {
            let a = f64::from(i) / 10.0;
            let p = limit_family_formula(&m(Family::Linear { a })).unwrap();
            assert!((0.0..=4.0 / 9.0 + 1e-15).contains(&p));
        }
    }

    #[test]
    fn rate_constant_linear() {
        let r = rate_constant(&m(Family::Linear { a: 1.0 })).unwrap();
        assert_eq!(r.exponent, 1.0);
        close(r.leading, -7.0 / 8.0);
        let u = rate_constant(&m(Family::Uniform)).unwrap();
        close(u.leading, 0.0);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [50.0, 100.0, 200.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-1.5))).collect();
        close(loglog_slope(&pts), 1.5);
    }
}
