//! Family formulas on the canonical support (0, 1).
//!
//! Every evaluation takes both `x` and `y = 1 - x` so that points near the right
//! end can be passed without rounding `1 - x`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::beta::{beta_reg, inv_beta_reg, ln_beta};
use statrs::function::erf::{erfc, erfc_inv};

use super::{ExtendedReal, Side};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kernel {
    Uniform,
    Shrunk { delta: f64 },
    Gap { delta: f64 },
    TwoStep { delta: f64 },
    ThreeStep { delta: f64 },
    Linear { a: f64 },
    Normal { mu: f64, sigma: f64, mass: f64 },
    QPower { q: f64 },
    PieceQuadratic { delta: f64 },
    ArcSine,
    AbsSine,
    Beta { a: f64, b: f64, ln_b: f64 },
    SquareCdf,
}

/// `P(lo < Z < hi)` for standard normal `Z`, using the tail that avoids cancellation.
pub(crate) fn normal_mass(lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        return 0.0;
    }
    if lo >= 0.0 {
        0.5 * (erfc(lo * FRAC_1_SQRT_2) - erfc(hi * FRAC_1_SQRT_2))
    } else if hi <= 0.0 {
        0.5 * (erfc(-hi * FRAC_1_SQRT_2) - erfc(-lo * FRAC_1_SQRT_2))
    } else {
        1.0 - 0.5 * erfc(-lo * FRAC_1_SQRT_2) - 0.5 * erfc(hi * FRAC_1_SQRT_2)
    }
}

fn std_normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// `d^j/dt^j coef * t^e` at `t >= 0`, with the usual conventions at `t = 0`.
pub(crate) fn power_derivative(coef: f64, e: f64, t: f64, j: u32) -> ExtendedReal {
    let mut ff = coef;
    for i in 0..j {
        ff *= e - i as f64;
    }
    if ff == 0.0 {
        return ExtendedReal::Finite(0.0);
    }
    let p = e - j as f64;
    if t > 0.0 {
        return ExtendedReal::Finite(ff * t.powf(p));
    }
    if p == 0.0 {
        ExtendedReal::Finite(ff)
    } else if p > 0.0 {
        ExtendedReal::Finite(0.0)
    } else if ff > 0.0 {
        ExtendedReal::PosInfinity
    } else {
        ExtendedReal::NegInfinity
    }
}

type Pieces = ([(f64, f64, f64); 3], usize);

impl Kernel {
    /// Constant pieces `(start, end, density)` for piecewise-constant families.
    fn pieces(&self) -> Option<Pieces> {
        let z = (0.0, 0.0, 0.0);
        Some(match *self {
            Kernel::Uniform => ([(0.0, 1.0, 1.0), z, z], 1),
            Kernel::Shrunk { delta } => ([(delta, 1.0 - delta, 1.0 / (1.0 - 2.0 * delta)), z, z], 1),
            Kernel::Gap { delta } => {
                let c = 1.0 / (1.0 - 2.0 * delta);
                ([(0.0, 0.5 - delta, c), (0.5 + delta, 1.0, c), z], 2)
            }
            Kernel::TwoStep { delta } => ([(0.0, 0.5, 1.0 + delta), (0.5, 1.0, 1.0 - delta), z], 2),
            Kernel::ThreeStep { delta } => (
                [
                    (0.0, 0.25, 1.0 + delta),
                    (0.25, 0.75, 1.0 - delta),
                    (0.75, 1.0, 1.0 + delta),
                ],
                3,
            ),
            _ => return None,
        })
    }

    /// Interior points where the density or its derivatives are not smooth.
    pub(crate) fn knots(&self) -> Vec<f64> {
        let mut k = match *self {
            Kernel::Shrunk { delta } if delta > 0.0 => vec![delta, 1.0 - delta],
            Kernel::Gap { delta } if delta > 0.0 => vec![0.5 - delta, 0.5 + delta],
            Kernel::TwoStep { .. } | Kernel::QPower { .. } | Kernel::PieceQuadratic { .. } | Kernel::AbsSine => {
                vec![0.5]
            }
            Kernel::ThreeStep { .. } => vec![0.25, 0.75],
            _ => vec![],
        };
        k.retain(|&v| v > 0.0 && v < 1.0);
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    pub(crate) fn unbounded(&self) -> bool {
        matches!(self, Kernel::ArcSine)
    }

    pub(crate) fn pdf(&self, x: f64, y: f64) -> f64 {
        if !(x > 0.0 && y > 0.0) {
            return 0.0;
        }
        if let Some((p, len)) = self.pieces() {
            return p[..len]
                .iter()
                .find(|&&(a, b, _)| x >= a && x < b)
                .map_or(0.0, |&(_, _, d)| d);
        }
        match *self {
            Kernel::Linear { a } => a * x + (1.0 - 0.5 * a),
            Kernel::Normal { mu, sigma, mass } => {
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * sigma * mass)
            }
            Kernel::QPower { q } => {
                let t = if x < 0.5 { x } else { x - 0.5 };
                2f64.powf(q) * (q + 1.0) * t.powf(q)
            }
            Kernel::PieceQuadratic { delta } => {
                let t = if x < 0.5 { x } else { x - 0.5 };
                delta + 12.0 * (1.0 - delta) * t * t
            }
            Kernel::ArcSine => 1.0 / (PI * (x * y).sqrt()),
            Kernel::AbsSine => 0.5 * PI * sin_2pi(x, y).abs(),
            Kernel::Beta { a, b, ln_b } => ((a - 1.0) * x.ln() + (b - 1.0) * y.ln() - ln_b).exp(),
            Kernel::SquareCdf => 2.0 * x,
            _ => unreachable!("piecewise-constant kernels handled above"),
        }
    }

    pub(crate) fn cdf(&self, x: f64, y: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if y <= 0.0 {
            return 1.0;
        }
        if let Some((p, len)) = self.pieces() {
            let mut acc = 0.0;
            for &(a, b, d) in &p[..len] {
                if x <= a {
                    break;
                }
                acc += d * (x.min(b) - a);
            }
            return acc.clamp(0.0, 1.0);
        }
        let v = match *self {
            Kernel::Linear { a } => 0.5 * a * x * x + (1.0 - 0.5 * a) * x,
            Kernel::Normal { mu, sigma, mass } => normal_mass(-mu / sigma, (x - mu) / sigma) / mass,
            Kernel::QPower { q } => {
                let c = 2f64.powf(q);
                if x < 0.5 {
                    c * x.powf(q + 1.0)
                } else {
                    0.5 + c * (x - 0.5).powf(q + 1.0)
                }
            }
            Kernel::PieceQuadratic { delta } => {
                let (base, t) = if x < 0.5 { (0.0, x) } else { (0.5, x - 0.5) };
                base + delta * t + 4.0 * (1.0 - delta) * t * t * t
            }
            Kernel::ArcSine => {
                if x <= 0.5 {
                    2.0 / PI * x.sqrt().asin()
                } else {
                    1.0 - 2.0 / PI * y.sqrt().asin()
                }
            }
            Kernel::AbsSine => {
                if x <= 0.5 {
                    0.5 * (x * PI).sin().powi(2)
                } else {
                    1.0 - 0.5 * (y * PI).sin().powi(2)
                }
            }
            Kernel::Beta { a, b, .. } => {
                if x <= 0.5 {
                    beta_reg(a, b, x)
                } else {
                    1.0 - beta_reg(b, a, y)
                }
            }
            Kernel::SquareCdf => x * x,
            _ => unreachable!(),
        };
        v.clamp(0.0, 1.0)
    }

    /// Smallest `x` with `cdf(x) >= u`.
    pub(crate) fn quantile(&self, u: f64) -> f64 {
        if let Some((p, len)) = self.pieces() {
            let mut acc = 0.0;
            let mut last = 0.0;
            for &(a, b, d) in &p[..len] {
                if d <= 0.0 {
                    continue;
                }
                let mass = d * (b - a);
                if u <= acc + mass {
                    return (a + (u - acc) / d).min(b);
                }
                acc += mass;
                last = b;
            }
            return last;
        }
        match *self {
            Kernel::Linear { a } => {
                let b = 1.0 - 0.5 * a;
                let disc = (b * b + 2.0 * a * u).max(0.0);
                let den = b + disc.sqrt();
                if den > 0.0 {
                    (2.0 * u / den).min(1.0)
                } else {
                    0.0
                }
            }
            Kernel::QPower { q } => {
                let c = 2f64.powf(q);
                if u <= 0.5 {
                    (u / c).powf(1.0 / (q + 1.0))
                } else {
                    0.5 + ((u - 0.5) / c).powf(1.0 / (q + 1.0))
                }
            }
            Kernel::ArcSine => (0.5 * PI * u).sin().powi(2),
            Kernel::AbsSine => {
                if u <= 0.5 {
                    (2.0 * u).sqrt().asin() / PI
                } else {
                    1.0 - (2.0 * (1.0 - u)).sqrt().asin() / PI
                }
            }
            Kernel::SquareCdf => u.sqrt(),
            Kernel::Beta { a, b, .. } if a == 1.0 => 1.0 - (1.0 - u).powf(1.0 / b),
            Kernel::Beta { a, b, .. } if b == 1.0 => u.powf(1.0 / a),
            Kernel::Beta { a, b, .. } => {
                let guess = inv_beta_reg(a, b, u);
                self.solve(u, guess)
            }
            Kernel::Normal { mu, sigma, mass } => {
                let lo = -mu / sigma;
                let guess = if lo < 0.0 {
                    let p0 = 0.5 * erfc(-lo * FRAC_1_SQRT_2);
                    mu + sigma * std_normal_quantile((p0 + u * mass).clamp(0.0, 1.0))
                } else {
                    0.5
                };
                self.solve(u, guess)
            }
            Kernel::PieceQuadratic { .. } => self.solve(u, u),
            _ => unreachable!(),
        }
    }

    /// Safeguarded Newton iteration for `cdf(x) = u` on [0, 1].
    fn solve(&self, u: f64, guess: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut x = if guess.is_finite() && guess > 0.0 && guess < 1.0 { guess } else { 0.5 };
        for _ in 0..200 {
            let r = self.cdf(x, 1.0 - x) - u;
            if r == 0.0 {
                return x;
            }
            if r < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.pdf(x, 1.0 - x);
            let mut next = if d > 0.0 { x - r / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) || hi - lo <= f64::EPSILON * hi {
                return next;
            }
            x = next;
        }
        x
    }

    /// One-sided derivative of the given order at `x` (limit from `side`).
    pub(crate) fn derivative(&self, x: f64, y: f64, side: Side, order: u32) -> ExtendedReal {
        use ExtendedReal::Finite;
        let right = side == Side::Right;
        if (x <= 0.0 && !right) || (y <= 0.0 && right) || x < 0.0 || y < 0.0 {
            return Finite(0.0);
        }
        if let Some((p, len)) = self.pieces() {
            if order > 0 {
                return Finite(0.0);
            }
            let hit = p[..len].iter().find(|&&(a, b, _)| if right { x >= a && x < b } else { x > a && x <= b });
            return Finite(hit.map_or(0.0, |&(_, _, d)| d));
        }
        let left_piece = if right { x < 0.5 } else { x <= 0.5 };
        let t = if left_piece { x } else { x - 0.5 };
        match *self {
            Kernel::Linear { a } => Finite(match order {
                0 => a * x + 1.0 - 0.5 * a,
                1 => a,
                _ => 0.0,
            }),
            Kernel::SquareCdf => Finite(match order {
                0 => 2.0 * x,
                1 => 2.0,
                _ => 0.0,
            }),
            Kernel::Normal { mu, sigma, .. } => {
                let f = self.pdf(x.max(f64::MIN_POSITIVE), y.max(f64::MIN_POSITIVE));
                let z = (x - mu) / sigma;
                Finite(match order {
                    0 => f,
                    1 => -f * z / sigma,
                    _ => f * (z * z - 1.0) / (sigma * sigma),
                })
            }
            Kernel::QPower { q } => power_derivative(2f64.powf(q) * (q + 1.0), q, t, order),
            Kernel::PieceQuadratic { delta } => Finite(match order {
                0 => delta + 12.0 * (1.0 - delta) * t * t,
                1 => 24.0 * (1.0 - delta) * t,
                _ => 24.0 * (1.0 - delta),
            }),
            Kernel::AbsSine => {
                let sgn = if left_piece { 1.0 } else { -1.0 };
                Finite(match order {
                    0 => sgn * 0.5 * PI * sin_2pi(x, y),
                    1 => sgn * PI * PI * cos_2pi(x, y),
                    _ => -sgn * 2.0 * PI.powi(3) * sin_2pi(x, y),
                })
            }
            Kernel::ArcSine => {
                if x == 0.0 || y == 0.0 {
                    return match order {
                        1 if x == 0.0 => ExtendedReal::NegInfinity,
                        _ => ExtendedReal::PosInfinity,
                    };
                }
                let s = x * y;
                let d = y - x;
                Finite(match order {
                    0 => 1.0 / (PI * s.sqrt()),
                    1 => -0.5 / PI * s.powf(-1.5) * d,
                    _ => 0.75 / PI * s.powf(-2.5) * d * d + s.powf(-1.5) / PI,
                })
            }
            Kernel::Beta { a, b, ln_b } => {
                let scale = (-ln_b).exp();
                let mut acc = Finite(0.0);
                for i in 0..=order {
                    let binom = match (order, i) {
                        (2, 1) => 2.0,
                        _ => 1.0,
                    };
                    let r = order - i;
                    let sign = if r % 2 == 1 { -1.0 } else { 1.0 };
                    let term = power_derivative(binom * scale, a - 1.0, x, i).mul(power_derivative(sign, b - 1.0, y, r));
                    acc = acc.add(term);
                }
                acc
            }
            _ => unreachable!(),
        }
    }
}

/// `sin(2 pi x)`, exact at the half-integers.
fn sin_2pi(x: f64, y: f64) -> f64 {
    if x == 0.0 || y == 0.0 || x == 0.5 {
        0.0
    } else if x <= 0.5 {
        (2.0 * PI * x).sin()
    } else {
        -(2.0 * PI * y).sin()
    }
}

fn cos_2pi(x: f64, y: f64) -> f64 {
    if x == 0.5 {
        -1.0
    } else if x <= 0.5 {
        (2.0 * PI * x).cos()
    } else {
        (2.0 * PI * y).cos()
    }
}

pub(crate) fn beta_log_norm(a: f64, b: f64) -> f64 {
    ln_beta(a, b)
}
