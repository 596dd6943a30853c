//! Interval arithmetic with outward rounding.
//!
//! Every operation returns an interval that encloses the exact range of the
//! underlying real operation over its arguments. Rounding is emulated rather
//! than set through the FPU: for the correctly rounded IEEE operations
//! (`+ - * / sqrt`) an error-free transformation tells which side of the true
//! result the native value fell on, and the endpoint is moved one ulp outward
//! only when needed. Library transcendentals are not correctly rounded, so
//! their endpoints are always widened by [`TRANSCENDENTAL_ULPS`].

use std::fmt;

use thiserror::Error;

/// Ulps added on each side of `exp`, `sin`, `cos` and `cbrt` results.
pub const TRANSCENDENTAL_ULPS: u32 = 2;

/// Lower endpoint of the stored enclosure of pi (the f64 nearest to pi, which lies below it).
pub const PI_LO: f64 = std::f64::consts::PI;
/// Upper endpoint of the stored enclosure of pi (one ulp above [`PI_LO`]).
pub const PI_HI: f64 = 3.141_592_653_589_793_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("division by an interval containing zero")]
    DivisionBySpanningZero,
    #[error("argument outside the domain of the operation")]
    Domain,
}

/// Closed interval `[lo, hi]` over the extended reals.
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Interval::new(v[0], v[1])
    }
}

#[allow(clippy::should_implement_trait)]
impl Interval {
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    /// Panics if `lo > hi` or either endpoint is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        Self::try_new(lo, hi).unwrap_or_else(|| panic!("invalid interval [{lo}, {hi}]"))
    }

    pub fn try_new(lo: f64, hi: f64) -> Option<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            None
        } else {
            Some(Interval { lo, hi })
        }
    }

    pub fn point(v: f64) -> Self {
        Interval::new(v, v)
    }

    /// Enclosure of pi.
    pub fn pi() -> Self {
        Interval { lo: PI_LO, hi: PI_HI }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_finite() && self.hi.is_finite() {
            self.lo + 0.5 * (self.hi - self.lo)
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn is_subset(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::try_new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Splits at the midpoint.
    pub fn bisect(&self) -> (Interval, Interval) {
        let m = self.mid();
        (Interval::new(self.lo, m), Interval::new(m, self.hi))
    }

    pub fn add(self, rhs: Interval) -> Interval {
        fix(add_down(self.lo, rhs.lo), add_up(self.hi, rhs.hi))
    }

    pub fn sub(self, rhs: Interval) -> Interval {
        fix(add_down(self.lo, -rhs.hi), add_up(self.hi, -rhs.lo))
    }

    pub fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn mul(self, rhs: Interval) -> Interval {
        let (a, b) = (self, rhs);
        let lo = mul_down(a.lo, b.lo)
            .min(mul_down(a.lo, b.hi))
            .min(mul_down(a.hi, b.lo))
            .min(mul_down(a.hi, b.hi));
        let hi = mul_up(a.lo, b.lo)
            .max(mul_up(a.lo, b.hi))
            .max(mul_up(a.hi, b.lo))
            .max(mul_up(a.hi, b.hi));
        fix(lo, hi)
    }

    pub fn div(self, rhs: Interval) -> Result<Interval, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::DivisionBySpanningZero);
        }
        let (a, b) = (self, rhs);
        let lo = div_down(a.lo, b.lo)
            .min(div_down(a.lo, b.hi))
            .min(div_down(a.hi, b.lo))
            .min(div_down(a.hi, b.hi));
        let hi = div_up(a.lo, b.lo)
            .max(div_up(a.lo, b.hi))
            .max(div_up(a.hi, b.lo))
            .max(div_up(a.hi, b.hi));
        Ok(fix(lo, hi))
    }

    pub fn recip(self) -> Result<Interval, IntervalError> {
        Interval::point(1.0).div(self)
    }

    pub fn pow(self, k: u32) -> Interval {
        if k == 0 {
            return Interval::point(1.0);
        }
        if k % 2 == 1 {
            return fix(pow_down(self.lo, k), pow_up(self.hi, k));
        }
        if self.lo >= 0.0 {
            fix(pow_down(self.lo, k), pow_up(self.hi, k))
        } else if self.hi <= 0.0 {
            fix(pow_down(-self.hi, k), pow_up(-self.lo, k))
        } else {
            let m = (-self.lo).max(self.hi);
            fix(0.0, pow_up(m, k))
        }
    }

    /// `k`-th root for `k` in {2, 3, 4}. Even roots only see the part of the
    /// argument inside `[0, inf)`.
    pub fn root(self, k: u32) -> Result<Interval, IntervalError> {
        match k {
            3 => Ok(fix(
                widen_down(self.lo.cbrt(), TRANSCENDENTAL_ULPS),
                widen_up(self.hi.cbrt(), TRANSCENDENTAL_ULPS),
            )),
            2 | 4 => {
                if self.hi < 0.0 {
                    return Err(IntervalError::Domain);
                }
                let lo = self.lo.max(0.0);
                let (mut a, mut b) = (sqrt_down(lo), sqrt_up(self.hi));
                if k == 4 {
                    a = sqrt_down(a);
                    b = sqrt_up(b);
                }
                Ok(fix(a.max(0.0), b))
            }
            _ => Err(IntervalError::Domain),
        }
    }

    pub fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            self.neg()
        } else {
            Interval {
                lo: 0.0,
                hi: (-self.lo).max(self.hi),
            }
        }
    }

    pub fn exp(self) -> Interval {
        let lo = if self.lo == 0.0 {
            1.0
        } else {
            widen_down(self.lo.exp(), TRANSCENDENTAL_ULPS).max(0.0)
        };
        let hi = if self.hi == 0.0 {
            1.0
        } else {
            widen_up(self.hi.exp(), TRANSCENDENTAL_ULPS)
        };
        fix(lo, hi)
    }

    pub fn sin(self) -> Interval {
        // extrema of sin sit at (j + 1/2) pi: maxima for even j, minima for odd j
        self.periodic(f64::sin, 0.5)
    }

    pub fn cos(self) -> Interval {
        // extrema of cos sit at j pi
        self.periodic(f64::cos, 0.0)
    }

    fn periodic(self, f: fn(f64) -> f64, offset: f64) -> Interval {
        const UNIT: Interval = Interval { lo: -1.0, hi: 1.0 };
        if !self.lo.is_finite() || !self.hi.is_finite() || self.width() >= 6.25 {
            return UNIT;
        }
        let (flo, fhi) = (f(self.lo), f(self.hi));
        let mut lo = widen_down(flo.min(fhi), TRANSCENDENTAL_ULPS).max(-1.0);
        let mut hi = widen_up(flo.max(fhi), TRANSCENDENTAL_ULPS).min(1.0);
        let j_first = (self.lo / PI_HI - offset).floor() as i64 - 1;
        let j_last = (self.hi / PI_LO - offset).ceil() as i64 + 1;
        for j in j_first..=j_last {
            let c = Interval::point(j as f64 + offset).mul(Interval::pi());
            if c.intersects(&self) {
                if j.rem_euclid(2) == 0 {
                    hi = 1.0;
                } else {
                    lo = -1.0;
                }
            }
        }
        fix(lo, hi)
    }

    pub fn min(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    pub fn max(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

pub fn iv_add(a: Interval, b: Interval) -> Interval {
    a.add(b)
}

pub fn iv_sub(a: Interval, b: Interval) -> Interval {
    a.sub(b)
}

pub fn iv_mul(a: Interval, b: Interval) -> Interval {
    a.mul(b)
}

pub fn iv_div(a: Interval, b: Interval) -> Result<Interval, IntervalError> {
    a.div(b)
}

pub fn iv_pow(a: Interval, k: u32) -> Interval {
    a.pow(k)
}

pub fn iv_root(a: Interval, k: u32) -> Result<Interval, IntervalError> {
    a.root(k)
}

pub fn iv_exp(a: Interval) -> Interval {
    a.exp()
}

pub fn iv_sin(a: Interval) -> Interval {
    a.sin()
}

pub fn iv_cos(a: Interval) -> Interval {
    a.cos()
}

pub fn iv_abs(a: Interval) -> Interval {
    a.abs()
}

/// `None` for an empty list.
pub fn iv_min(args: &[Interval]) -> Option<Interval> {
    args.iter().copied().reduce(Interval::min)
}

/// `None` for an empty list.
pub fn iv_max(args: &[Interval]) -> Option<Interval> {
    args.iter().copied().reduce(Interval::max)
}

// NaN endpoints only come from inf - inf or inf / inf; fall back to the whole line.
fn fix(lo: f64, hi: f64) -> Interval {
    Interval {
        lo: if lo.is_nan() { f64::NEG_INFINITY } else { lo },
        hi: if hi.is_nan() { f64::INFINITY } else { hi },
    }
}

fn widen_down(v: f64, ulps: u32) -> f64 {
    (0..ulps).fold(v, |acc, _| acc.next_down())
}

fn widen_up(v: f64, ulps: u32) -> f64 {
    (0..ulps).fold(v, |acc, _| acc.next_up())
}

// Below this magnitude products and quotients may lose the exactness of the
// fma residual, so the endpoint is widened unconditionally.
const TINY: f64 = 1e-290;

/// Error of `a + b` relative to the rounded sum (Knuth's TwoSum).
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s == f64::INFINITY && a.is_finite() && b.is_finite() {
            f64::MAX
        } else {
            s
        };
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s == f64::NEG_INFINITY && a.is_finite() && b.is_finite() {
            f64::MIN
        } else {
            s
        };
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

fn mul_down(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return if p == f64::INFINITY && a.is_finite() && b.is_finite() {
            f64::MAX
        } else {
            p
        };
    }
    if p.abs() < TINY {
        return p.next_down();
    }
    if a.mul_add(b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return if p == f64::NEG_INFINITY && a.is_finite() && b.is_finite() {
            f64::MIN
        } else {
            p
        };
    }
    if p.abs() < TINY {
        return p.next_up();
    }
    if a.mul_add(b, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}

/// Sign of `a / b - q`, where `q` is the rounded quotient.
fn div_residual_sign(a: f64, b: f64, q: f64) -> f64 {
    // q*b - a has the sign of (q - a/b) * b
    let r = q.mul_add(b, -a);
    if r == 0.0 {
        0.0
    } else if (r > 0.0) == (b > 0.0) {
        // q above the true quotient
        -1.0
    } else {
        1.0
    }
}

fn div_down(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if !q.is_finite() || b.is_infinite() || a.is_infinite() {
        return if q == f64::INFINITY && a.is_finite() {
            f64::MAX
        } else if q == 0.0 {
            if (a > 0.0) == (b > 0.0) {
                0.0
            } else {
                (-0.0f64).next_down()
            }
        } else {
            q
        };
    }
    if q.abs() < TINY || a.abs() < TINY {
        return q.next_down();
    }
    if div_residual_sign(a, b, q) < 0.0 {
        q.next_down()
    } else {
        q
    }
}

fn div_up(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if !q.is_finite() || b.is_infinite() || a.is_infinite() {
        return if q == f64::NEG_INFINITY && a.is_finite() {
            f64::MIN
        } else if q == 0.0 {
            if (a > 0.0) == (b > 0.0) {
                0.0f64.next_up()
            } else {
                0.0
            }
        } else {
            q
        };
    }
    if q.abs() < TINY || a.abs() < TINY {
        return q.next_up();
    }
    if div_residual_sign(a, b, q) > 0.0 {
        q.next_up()
    } else {
        q
    }
}

fn sqrt_down(a: f64) -> f64 {
    let s = a.sqrt();
    if !s.is_finite() || s == 0.0 {
        return s;
    }
    if a < TINY {
        return s.next_down().max(0.0);
    }
    // s*s - a > 0 means s overshoots
    if s.mul_add(s, -a) > 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn sqrt_up(a: f64) -> f64 {
    let s = a.sqrt();
    if !s.is_finite() {
        return s;
    }
    if a < TINY {
        return if a == 0.0 { 0.0 } else { s.next_up() };
    }
    if s.mul_add(s, -a) < 0.0 {
        s.next_up()
    } else {
        s
    }
}

fn pow_down(v: f64, k: u32) -> f64 {
    if v >= 0.0 {
        (1..k).fold(v, |acc, _| mul_down(acc, v))
    } else if k % 2 == 1 {
        -pow_up(-v, k)
    } else {
        pow_down(-v, k)
    }
}

fn pow_up(v: f64, k: u32) -> f64 {
    if v >= 0.0 {
        (1..k).fold(v, |acc, _| mul_up(acc, v))
    } else if k % 2 == 1 {
        -pow_down(-v, k)
    } else {
        pow_up(-v, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn add_sub_examples() {
        let s = iv_add(iv(1.0, 2.0), iv(3.0, 4.0));
        assert!(iv(4.0, 6.0).is_subset(&s));
        assert_eq!(s, iv(4.0, 6.0));
        let d = iv_sub(iv(1.0, 2.0), iv(1.0, 2.0));
        assert!(iv(-1.0, 1.0).is_subset(&d));
    }

    #[test]
    fn division_by_spanning_zero() {
        assert_eq!(
            iv_div(iv(1.0, 1.0), iv(-1.0, 1.0)),
            Err(IntervalError::DivisionBySpanningZero)
        );
        assert_eq!(
            iv_div(iv(1.0, 1.0), iv(0.0, 1.0)),
            Err(IntervalError::DivisionBySpanningZero)
        );
    }

    #[test]
    fn inexact_results_are_widened() {
        let third = iv_div(Interval::point(1.0), Interval::point(3.0)).unwrap();
        assert!(third.lo() < third.hi());
        assert_eq!(third.lo().next_up(), third.hi());
        let exact = iv_div(Interval::point(1.0), Interval::point(4.0)).unwrap();
        assert!(exact.is_point());
        let sum = iv_add(Interval::point(0.1), Interval::point(0.2));
        assert!(sum.lo() < sum.hi());
    }

    #[test]
    fn powers_and_roots() {
        assert!(iv(0.0, 4.0).is_subset(&iv_pow(iv(-2.0, 1.0), 2)));
        assert_eq!(iv_pow(iv(-2.0, 1.0), 2).lo(), 0.0);
        assert_eq!(iv_pow(iv(-2.0, 1.0), 3), iv(-8.0, 1.0));
        assert_eq!(iv_pow(iv(-3.0, -2.0), 2), iv(4.0, 9.0));
        assert_eq!(iv_root(iv(4.0, 9.0), 2).unwrap(), iv(2.0, 3.0));
        let c = iv_root(iv(-8.0, 27.0), 3).unwrap();
        assert!(c.contains(-2.0) && c.contains(3.0));
        assert!(c.width() < 5.0 + 1e-12);
        let q = iv_root(iv(16.0, 81.0), 4).unwrap();
        assert_eq!(q, iv(2.0, 3.0));
        assert_eq!(iv_root(iv(-2.0, -1.0), 2), Err(IntervalError::Domain));
        assert_eq!(iv_root(iv(-1.0, 4.0), 2).unwrap(), iv(0.0, 2.0));
    }

    #[test]
    fn transcendental_examples() {
        let s = iv_sin(iv(0.0, PI_HI));
        assert!(iv(0.0, 1.0).is_subset(&s));
        assert!(s.is_subset(&iv(-1.0, 1.0)));
        assert_eq!(s.hi(), 1.0);
        let e = iv_exp(iv(0.0, 1.0));
        assert!(e.contains(1.0) && e.contains(std::f64::consts::E));
        assert_eq!(iv_abs(iv(-3.0, 2.0)), iv(0.0, 3.0));
        let c = iv_cos(iv(3.0, 3.5));
        assert_eq!(c.lo(), -1.0);
        let narrow = iv_sin(iv(0.1, 0.2));
        assert!(narrow.hi() < 0.2 && narrow.lo() > 0.09);
        assert_eq!(iv_min(&[iv(1.0, 3.0), iv(2.0, 2.5)]), Some(iv(1.0, 2.5)));
        assert_eq!(iv_max(&[iv(1.0, 3.0), iv(2.0, 2.5)]), Some(iv(2.0, 3.0)));
        assert_eq!(iv_min(&[]), None);
    }

    #[test]
    fn pi_enclosure_brackets_pi() {
        // 36 correct digits of pi
        let digits: BigInt = "314159265358979323846264338327950288".parse().unwrap();
        let scale = BigInt::from(10u32).pow(35);
        let pi = BigRational::new(digits, scale);
        let slack = BigRational::new(BigInt::from(1), BigInt::from(10u32).pow(35));
        let lo = BigRational::from_float(PI_LO).unwrap();
        let hi = BigRational::from_float(PI_HI).unwrap();
        assert!(lo < pi.clone() - slack.clone());
        assert!(hi > pi + slack);
        assert_eq!(PI_HI, PI_LO.next_up());
    }

    #[test]
    fn overflow_widens_to_infinity() {
        let big = iv_mul(iv(1e200, 1e200), iv(1e200, 1e200));
        assert_eq!(big.hi(), f64::INFINITY);
        assert!(big.lo().is_finite());
        let e = iv_exp(iv(0.0, 1000.0));
        assert_eq!(e.hi(), f64::INFINITY);
        let z = iv_mul(iv(0.0, 0.0), Interval::ENTIRE);
        assert_eq!(z, iv(0.0, 0.0));
    }

    fn interval_strategy() -> impl Strategy<Value = Interval> {
        (-50.0f64..50.0, 0.0f64..20.0).prop_map(|(a, w)| Interval::new(a, a + w))
    }

    fn pick(i: Interval, u: f64) -> f64 {
        (i.lo() + u * i.width()).clamp(i.lo(), i.hi())
    }

    proptest! {
        #[test]
        fn binary_ops_enclose_points(a in interval_strategy(), b in interval_strategy(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let (x, y) = (pick(a, u), pick(b, v));
            prop_assert!(iv_add(a, b).contains(x + y));
            prop_assert!(iv_sub(a, b).contains(x - y));
            prop_assert!(iv_mul(a, b).contains(x * y));
            if let Ok(q) = iv_div(a, b) {
                prop_assert!(q.contains(x / y));
            }
            prop_assert!(a.min(b).contains(x.min(y)));
            prop_assert!(a.max(b).contains(x.max(y)));
        }

        #[test]
        fn unary_ops_enclose_points(a in interval_strategy(), u in 0.0f64..1.0, k in 0u32..6) {
            let x = pick(a, u);
            prop_assert!(iv_pow(a, k).contains(x.powi(k as i32)));
            prop_assert!(iv_sin(a).contains(x.sin()));
            prop_assert!(iv_cos(a).contains(x.cos()));
            prop_assert!(iv_abs(a).contains(x.abs()));
            prop_assert!(iv_root(a, 3).unwrap().contains(x.cbrt()));
            if x >= 0.0 {
                prop_assert!(iv_root(a, 2).unwrap().contains(x.sqrt()));
            }
            let small = Interval::new(a.lo() / 10.0, a.hi() / 10.0);
            prop_assert!(iv_exp(small).contains((x / 10.0).exp()));
        }

        #[test]
        fn enclosure_is_inclusion_monotone(a in interval_strategy(), b in interval_strategy(), s in 0.0f64..1.0, w in 0.0f64..1.0) {
            let inner_lo = pick(a, s);
            let inner = Interval::new(inner_lo, pick(Interval::new(inner_lo, a.hi()), w));
            prop_assert!(iv_add(inner, b).is_subset(&iv_add(a, b)));
            prop_assert!(iv_sub(inner, b).is_subset(&iv_sub(a, b)));
            prop_assert!(iv_mul(inner, b).is_subset(&iv_mul(a, b)));
            if let (Ok(q1), Ok(q2)) = (iv_div(inner, b), iv_div(a, b)) {
                prop_assert!(q1.is_subset(&q2));
            }
            prop_assert!(iv_sin(inner).is_subset(&iv_sin(a)));
        }

        #[test]
        fn point_intervals_contain_point_values(v in -30.0f64..30.0) {
            let p = Interval::point(v);
            prop_assert!(iv_sin(p).contains(v.sin()));
            prop_assert!(iv_cos(p).contains(v.cos()));
            prop_assert!(iv_exp(p).contains(v.exp()));
            prop_assert!(iv_mul(p, p).contains(v * v));
        }
    }
}
