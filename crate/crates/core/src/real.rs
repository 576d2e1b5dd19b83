//! Scalar abstraction over `f64` and a double-double type.
//!
//! Most kernel and determinant code is written once against [`Real`] and
//! instantiated at `f64` for speed or at [`Dd`] (about 32 significant
//! digits) when the discretized operator is badly conditioned.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Real:
    Copy
    + Send
    + Sync
    + fmt::Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    /// Unit roundoff of the representation.
    const EPS: f64;

    fn from_f64(x: f64) -> Self;
    /// Rounds a double-double value into this type.
    fn from_dd(x: Dd) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn sin_cos(self) -> (Self, Self);
    fn pi() -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn mul_f64(self, c: f64) -> Self {
        self * Self::from_f64(c)
    }

    fn div_f64(self, c: f64) -> Self {
        self / Self::from_f64(c)
    }

    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }

    /// Real cube root of 2.
    fn cbrt2() -> Self {
        let x = Self::from_f64(2f64.cbrt());
        // one Newton step doubles the digits of the f64 seed
        x - (x * x * x - Self::from_f64(2.0)) / (x * x).mul_f64(3.0)
    }
}

impl Real for f64 {
    const EPS: f64 = f64::EPSILON / 2.0;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn from_dd(x: Dd) -> Self {
        x.to_f64()
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn cbrt2() -> Self {
        2f64.cbrt()
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[cfg(target_feature = "fma")]
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[cfg(not(target_feature = "fma"))]
#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[cfg(not(target_feature = "fma"))]
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

fn ldexp(x: f64, k: i32) -> f64 {
    if (-1000..=1000).contains(&k) {
        x * 2f64.powi(k)
    } else {
        let h = k / 2;
        x * 2f64.powi(h) * 2f64.powi(k - h)
    }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd { hi: std::f64::consts::PI, lo: 1.2246467991473532e-16 };
    pub const FRAC_PI_2: Dd = Dd { hi: std::f64::consts::FRAC_PI_2, lo: 6.123233995736766e-17 };
    pub const LN_2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.3190468138462996e-17 };

    /// Builds a value from two components, renormalizing them.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn sqr(self) -> Dd {
        let (p1, mut p2) = two_prod(self.hi, self.hi);
        p2 += 2.0 * self.hi * self.lo;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let (p1, p2) = two_prod(q1, b);
        let (s, mut e) = two_sum(self.hi, -p1);
        e -= p2;
        e += self.lo;
        let q2 = (s + e) / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }

    fn ldexp(self, k: i32) -> Dd {
        Dd { hi: ldexp(self.hi, k), lo: ldexp(self.lo, k) }
    }

    fn exp_impl(self) -> Dd {
        if self.hi > 709.8 {
            return Dd { hi: f64::INFINITY, lo: 0.0 };
        }
        if self.hi < -745.2 {
            return Dd::ZERO;
        }
        if self.hi.is_nan() {
            return Dd { hi: f64::NAN, lo: f64::NAN };
        }
        let k = (self.hi / Self::LN_2.hi).round();
        let r = (self - Self::LN_2.mul_f64(k)).ldexp(-10);
        // e^r - 1 by Taylor, |r| < 3.4e-4
        let mut term = r;
        let mut s = r;
        for i in 2..=12 {
            term = (term * r).div_f64(i as f64);
            s += term;
            if term.hi.abs() < 1e-36 * s.hi.abs() {
                break;
            }
        }
        // (1 + s)^2 - 1 = 2 s + s^2 keeps the small quantity accurate
        for _ in 0..10 {
            s = s.mul_f64(2.0) + s.sqr();
        }
        (s + Dd::ONE).ldexp(k as i32)
    }

    fn sin_cos_reduced(r: Dd) -> (Dd, Dd) {
        let r2 = r.sqr();
        let mut sin = r;
        let mut cos = Dd::ONE;
        let mut ts = r;
        let mut tc = Dd::ONE;
        let mut k = 1.0;
        loop {
            ts = -(ts * r2).div_f64((k + 1.0) * (k + 2.0));
            tc = -(tc * r2).div_f64(k * (k + 1.0));
            sin += ts;
            cos += tc;
            k += 2.0;
            if ts.hi.abs() < 1e-36 && tc.hi.abs() < 1e-36 {
                break;
            }
        }
        (sin, cos)
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.hi, f)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p1, mut p2) = two_prod(self.hi, b.hi);
        p2 += self.hi * b.lo + self.lo * b.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from(q3)
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for Dd {
            #[inline]
            fn $m(&mut self, b: Dd) {
                *self = *self $op b;
            }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl Real for Dd {
    const EPS: f64 = 4.93e-32; // 2^-104

    #[inline]
    fn from_f64(x: f64) -> Self {
        Dd::from(x)
    }

    #[inline]
    fn from_dd(x: Dd) -> Self {
        x
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Dd::ZERO } else { Dd::from(f64::NAN) };
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (p, e) = two_prod(ax, ax);
        Dd::from(ax) + Dd::from((self - Dd { hi: p, lo: e }).hi * (x * 0.5))
    }

    fn exp(self) -> Self {
        self.exp_impl()
    }

    fn sin_cos(self) -> (Self, Self) {
        if !self.hi.is_finite() {
            return (Dd::from(f64::NAN), Dd::from(f64::NAN));
        }
        let k = (self.hi / Self::FRAC_PI_2.hi).round();
        let r = self - Self::FRAC_PI_2.mul_f64(k);
        let (s, c) = Dd::sin_cos_reduced(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    fn pi() -> Self {
        Dd::PI
    }

    fn div_f64(self, c: f64) -> Self {
        Dd::div_f64(self, c)
    }

    #[inline]
    fn mul_f64(self, c: f64) -> Self {
        let (p1, mut p2) = two_prod(self.hi, c);
        p2 += self.lo * c;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

/// Integer power by repeated squaring.
pub fn powi<R: Real>(x: R, n: u32) -> R {
    let mut acc = R::one();
    let mut base = x;
    let mut n = n;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: Dd, b: Dd) -> f64 {
        ((a - b) / b).abs().to_f64()
    }

    // reference values: exact decimal expansions rounded to hi + lo
    #[test]
    fn elementary_functions_match_reference_digits() {
        let cases = [
            (Dd::ONE.exp(), Dd::new(std::f64::consts::E, 1.4456468917292502e-16)),
            (Dd::from(-7.25).exp(), Dd::new(0.000710174388842549, 3.546078199295509e-20)),
            (Dd::from(100.0).exp(), Dd::new(2.6881171418161356e+43, -1.6101271449201627e+27)),
            (Dd::from(2.0).sqrt(), Dd::new(std::f64::consts::SQRT_2, -9.667293313452913e-17)),
            (Dd::ONE / Dd::from(3.0), Dd::new(0.3333333333333333, 1.850371707708594e-17)),
            (Dd::ONE.sin_cos().0, Dd::new(0.8414709848078965, 1.776845092935536e-18)),
            (Dd::ONE.sin_cos().1, Dd::new(0.5403023058681398, -4.760954612604417e-17)),
            (Dd::from(100.0).sin_cos().0, Dd::new(-0.5063656411097588, -3.050947053792115e-18)),
            (Dd::from(100.0).sin_cos().1, Dd::new(0.8623188722876839, 4.334809858136501e-17)),
            (Dd::cbrt2() * Dd::cbrt2() * Dd::cbrt2(), Dd::from(2.0)),
        ];
        for (i, (got, want)) in cases.iter().enumerate() {
            assert!(rel(*got, *want) < 1e-30, "case {i}: {got:?} vs {want:?}");
        }
    }

    #[test]
    fn exp_limits() {
        assert_eq!(Dd::from(-800.0).exp(), Dd::ZERO);
        assert!(Dd::from(800.0).exp().hi().is_infinite());
        assert_eq!(Dd::ZERO.exp(), Dd::ONE);
    }

    #[test]
    fn powi_matches_repeated_product() {
        let x = Dd::from(1.1);
        assert!(rel(powi(x, 7), x * x * x * x * x * x * x) < 1e-31);
        assert_eq!(powi(3.0f64, 0), 1.0);
    }

    proptest! {
        #[test]
        fn exp_is_a_homomorphism(a in -300.0f64..300.0, b in -300.0f64..300.0) {
            let (x, y) = (Dd::from(a) / Dd::from(7.0), Dd::from(b) / Dd::from(3.0));
            prop_assert!(rel((x + y).exp(), x.exp() * y.exp()) < 1e-29);
        }

        #[test]
        fn pythagorean_identity(a in -1.0e3f64..1.0e3) {
            let (s, c) = (Dd::from(a) / Dd::from(3.0)).sin_cos();
            prop_assert!((s.sqr() + c.sqr() - Dd::ONE).abs().to_f64() < 1e-30);
        }

        #[test]
        fn division_inverts_multiplication(a in -1.0e6f64..1.0e6, b in 1.0e-3f64..1.0e3) {
            let x = Dd::from(a) / Dd::from(7.0);
            let y = Dd::from(b).sqrt();
            prop_assert!(((x / y) * y - x).abs().to_f64() <= 1e-30 * x.abs().to_f64() + 1e-300);
        }

        #[test]
        fn sqrt_squares_back(a in 1.0e-100f64..1.0e100) {
            let x = Dd::from(a) / Dd::from(3.0);
            prop_assert!(rel(x.sqrt().sqr(), x) < 1e-30);
        }
    }
}
