//! Exact and fixed-point angle arithmetic.
//!
//! An [`Angle`] is a point of the circle `R/Z`, held either as a reduced
//! rational `a/q` or as a 128-bit binary fraction. Everything downstream asks
//! the angle for `{n^2 alpha}` (or `{n alpha}`) and turns the reduced
//! fractional part into a [`Phase`]; phases are never accumulated by
//! repeated multiplication.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::numtheory::gcd;

const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;
const TWO_POW_128: f64 = 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

/// `floor((sqrt(2) - 1) * 2^128)`.
pub const SQRT2_MINUS_1_FRAC: u128 = 0x6a09e667f3bcc908b2fb1366ea957d3e;
/// `floor((sqrt(5) - 1) / 2 * 2^128)`, the fractional part of the golden ratio.
pub const GOLDEN_FRAC: u128 = 0x9e3779b97f4a7c15f39cc0605cedc834;

/// A real number modulo 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Angle {
    /// `a/q` with `gcd(a, q) = 1` and `0 <= a < q`.
    Rational { a: u64, q: u64 },
    /// `frac / 2^128`.
    FixedPoint(u128),
}

impl Angle {
    pub const ZERO: Angle = Angle::Rational { a: 0, q: 1 };

    /// Reduce `a/q` into lowest terms and into `[0, 1)`.
    pub fn rational(a: i128, q: u64) -> Result<Angle> {
        if q == 0 {
            return domain("denominator q must be positive");
        }
        let a = a.rem_euclid(q as i128) as u64;
        let g = gcd(a, q);
        Ok(Angle::Rational { a: a / g, q: q / g })
    }

    pub fn fixed(frac: u128) -> Angle {
        Angle::FixedPoint(frac)
    }

    pub fn sqrt2_minus_1() -> Angle {
        Angle::FixedPoint(SQRT2_MINUS_1_FRAC)
    }

    pub fn golden() -> Angle {
        Angle::FixedPoint(GOLDEN_FRAC)
    }

    /// Parse a decimal literal (`0.4142`, `-1.25`, `3`) into a fixed-point
    /// angle. The result is `floor({x} * 2^128)`, so the angle differs from
    /// the literal by less than `2^-128`; the literal itself carries
    /// whatever precision its digits give.
    pub fn from_decimal(s: &str) -> Result<Angle> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        let valid = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty()) || !valid(int_part) || !valid(frac_part) {
            return Err(Error::Usage(format!("malformed decimal `{s}`")));
        }
        let mut digits: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
        // Binary expansion by repeated doubling of the decimal digit string.
        let mut frac: u128 = 0;
        for _ in 0..128 {
            let mut carry = 0u8;
            for d in digits.iter_mut().rev() {
                let v = *d * 2 + carry;
                *d = v % 10;
                carry = v / 10;
            }
            frac = (frac << 1) | carry as u128;
        }
        Ok(Angle::FixedPoint(if neg { frac.wrapping_neg() } else { frac }))
    }

    /// Approximate value in `[0, 1)`.
    pub fn to_f64(&self) -> f64 {
        match *self {
            Angle::Rational { a, q } => a as f64 / q as f64,
            Angle::FixedPoint(f) => fixed_to_unit(f),
        }
    }

    /// `-alpha`.
    pub fn neg(&self) -> Angle {
        match *self {
            Angle::Rational { a, q } => Angle::Rational { a: (q - a) % q, q },
            Angle::FixedPoint(f) => Angle::FixedPoint(f.wrapping_neg()),
        }
    }

    /// `h * alpha`, exact for rationals (re-reduced) and by 128-bit
    /// wraparound for fixed-point angles.
    pub fn scale(&self, h: u64) -> Angle {
        match *self {
            Angle::Rational { a, q } => {
                let num = (a as u128 * (h % q) as u128 % q as u128) as u64;
                let g = gcd(num, q);
                Angle::Rational { a: num / g, q: q / g }
            }
            Angle::FixedPoint(f) => Angle::FixedPoint(f.wrapping_mul(h as u128)),
        }
    }

    /// `n^2 a mod q` for a rational angle.
    pub fn nsq_residue(&self, n: u64) -> Option<u64> {
        match *self {
            Angle::Rational { a, q } => Some(mul_mod(sq_mod(n, q), a, q)),
            Angle::FixedPoint(_) => None,
        }
    }

    /// `{n^2 alpha}` as a 128-bit fraction. Rationals are rounded down.
    fn nsq_raw(&self, n: u64) -> u128 {
        match *self {
            Angle::Rational { q, .. } => {
                let r = self.nsq_residue(n).unwrap_or(0);
                ratio_to_fixed(r, q)
            }
            Angle::FixedPoint(f) => {
                let n = n as u128;
                (n * n).wrapping_mul(f)
            }
        }
    }

    /// `{n^2 alpha}` in `[0, 1)`.
    ///
    /// Rational angles: `(n^2 a mod q) / q` from exact 128-bit modular
    /// products, rounded once. Fixed-point angles: the leading 53 bits of
    /// `n^2 frac mod 2^128`, error at most `n^2 2^-128 + 2^-53`.
    pub fn frac_nsq(&self, n: u64) -> f64 {
        match *self {
            Angle::Rational { q, .. } => {
                let r = self.nsq_residue(n).unwrap_or(0);
                r as f64 / q as f64
            }
            Angle::FixedPoint(_) => fixed_to_unit(self.nsq_raw(n)),
        }
    }

    /// `{n alpha}` in `[0, 1)`.
    pub fn frac_mul(&self, n: u64) -> f64 {
        match *self {
            Angle::Rational { a, q } => mul_mod(n % q, a, q) as f64 / q as f64,
            Angle::FixedPoint(f) => fixed_to_unit(f.wrapping_mul(n as u128)),
        }
    }

    /// `||n alpha||`, computed from the exact residue.
    pub fn dist_mul(&self, n: u64) -> f64 {
        match *self {
            Angle::Rational { a, q } => {
                let r = mul_mod(n % q, a, q);
                r.min(q - r) as f64 / q as f64
            }
            Angle::FixedPoint(f) => {
                let t = f.wrapping_mul(n as u128) as i128;
                (t as f64 / TWO_POW_128).abs()
            }
        }
    }

    /// `e(n^2 alpha)` from the centred fractional part.
    pub fn phase_nsq(&self, n: u64) -> Phase {
        match *self {
            Angle::Rational { q, .. } => {
                let r = self.nsq_residue(n).unwrap_or(0);
                Phase::from_residue(r, q)
            }
            Angle::FixedPoint(_) => Phase::from_fixed(self.nsq_raw(n)),
        }
    }

    /// `e(n alpha)`.
    pub fn phase_mul(&self, n: u64) -> Phase {
        match *self {
            Angle::Rational { a, q } => Phase::from_residue(mul_mod(n % q, a, q), q),
            Angle::FixedPoint(f) => Phase::from_fixed(f.wrapping_mul(n as u128)),
        }
    }

    /// Worst-case absolute error of `{n^2 alpha}` for `n <= n_max`, in turns,
    /// before the final rounding to `f64`.
    pub fn nsq_error(&self, n_max: u64) -> f64 {
        match self {
            Angle::Rational { .. } => 0.0,
            Angle::FixedPoint(_) => (n_max as f64) * (n_max as f64) / TWO_POW_128,
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Angle::Rational { a, q } => write!(f, "rat:{a}/{q}"),
            Angle::FixedPoint(v) => write!(f, "fix:0x{v:032x}"),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Parses `rat:<a>/<q>`, `dec:<decimal>`, `quad:sqrt2`, `quad:golden` and the
/// `fix:0x<hex>` form produced by `Display`.
impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Angle> {
        let usage = || Error::Usage(format!("malformed angle spec `{s}`"));
        let (kind, body) = s.trim().split_once(':').ok_or_else(usage)?;
        match kind {
            "rat" => {
                let (a, q) = body.split_once('/').ok_or_else(usage)?;
                let a: i128 = a.trim().parse().map_err(|_| usage())?;
                let q: u64 = q.trim().parse().map_err(|_| usage())?;
                if q == 0 {
                    return Err(Error::Usage(format!("zero denominator in `{s}`")));
                }
                Angle::rational(a, q)
            }
            "dec" => Angle::from_decimal(body),
            "quad" => match body {
                "sqrt2" => Ok(Angle::sqrt2_minus_1()),
                "golden" => Ok(Angle::golden()),
                _ => Err(usage()),
            },
            "fix" => {
                let hex = body.strip_prefix("0x").ok_or_else(usage)?;
                u128::from_str_radix(hex, 16).map(Angle::FixedPoint).map_err(|_| usage())
            }
            _ => Err(usage()),
        }
    }
}

/// `||x||`, the distance from `x` to the nearest integer.
pub fn nearest_int_distance(x: f64) -> f64 {
    let f = x - x.floor();
    f.min(1.0 - f)
}

/// A point `e(x) = exp(2 pi i x)` on the unit circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Phase {
    pub re: f64,
    pub im: f64,
}

impl Phase {
    /// `e(x)`; `x` is first reduced into `[-1/2, 1/2]`.
    pub fn from_turns(x: f64) -> Phase {
        let r = x - x.round();
        let (im, re) = (std::f64::consts::TAU * r).sin_cos();
        let p = Phase { re, im };
        debug_assert!((re * re + im * im - 1.0).abs() <= 2f64.powi(-45));
        p
    }

    /// `e(r/q)` for `0 <= r < q`, centred before dividing.
    pub fn from_residue(r: u64, q: u64) -> Phase {
        let centred = if 2 * (r as u128) > q as u128 {
            -((q - r) as f64)
        } else {
            r as f64
        };
        Phase::from_turns(centred / q as f64)
    }

    /// `e(frac / 2^128)`.
    pub fn from_fixed(frac: u128) -> Phase {
        Phase::from_turns(frac as i128 as f64 / TWO_POW_128)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Phase> for Complex64 {
    fn from(p: Phase) -> Complex64 {
        p.to_complex()
    }
}

/// `e(x)` as a complex number.
pub fn e(x: f64) -> Complex64 {
    Phase::from_turns(x).to_complex()
}

fn mul_mod(x: u64, y: u64, m: u64) -> u64 {
    (x as u128 * y as u128 % m as u128) as u64
}

fn sq_mod(n: u64, q: u64) -> u64 {
    let r = n % q;
    mul_mod(r, r, q)
}

/// `floor(r / q * 2^128)` for `r < q`.
fn ratio_to_fixed(r: u64, q: u64) -> u128 {
    // Long division in two 64-bit limbs.
    let q = q as u128;
    let hi_num = (r as u128) << 64;
    let hi = hi_num / q;
    let rem = hi_num % q;
    let lo = (rem << 64) / q;
    (hi << 64) | lo
}

/// Truncate a 128-bit fraction to its leading 53 bits; always `< 1`.
fn fixed_to_unit(f: u128) -> f64 {
    ((f >> 75) as u64) as f64 * TWO_POW_M53
}

/// `a * b` as a 256-bit product `(hi, lo)`.
pub(crate) fn widening_mul(a: u128, b: u128) -> (u128, u128) {
    let mask = u64::MAX as u128;
    let (a1, a0) = (a >> 64, a & mask);
    let (b1, b0) = (b >> 64, b & mask);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & mask) + (p10 & mask);
    let lo = (p00 & mask) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduce_rational_examples() {
        assert_eq!(Angle::rational(6, 8).unwrap(), Angle::Rational { a: 3, q: 4 });
        assert_eq!(Angle::rational(5, 5).unwrap(), Angle::Rational { a: 0, q: 1 });
        assert_eq!(Angle::rational(-1, 7).unwrap(), Angle::Rational { a: 6, q: 7 });
        assert!(matches!(Angle::rational(1, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn frac_nsq_examples() {
        let third = Angle::rational(1, 3).unwrap();
        assert_eq!(third.frac_nsq(5), 1.0 / 3.0);
        assert_eq!(Angle::ZERO.frac_nsq(1_000_000_000), 0.0);
        // {9 sqrt 2} = 9 sqrt 2 - 12, and 9(sqrt2 - 1) differs from it by an integer.
        let v = Angle::sqrt2_minus_1().frac_nsq(3);
        assert!((v - 0.727_922_061_357_855_4).abs() < 1e-15, "{v}");
    }

    #[test]
    fn frac_nsq_large_n_is_exact_for_rationals() {
        let a = Angle::rational(123_456_789, 1_000_000_007).unwrap();
        let n = 1u64 << 63;
        let r = a.nsq_residue(n).unwrap();
        let expect = {
            let m = 1_000_000_007u128;
            let nm = n as u128 % m;
            (nm * nm % m * 123_456_789 % m) as u64
        };
        assert_eq!(r, expect);
    }

    #[test]
    fn nearest_int_distance_examples() {
        assert_eq!(nearest_int_distance(0.75), 0.25);
        assert_eq!(nearest_int_distance(3.0), 0.0);
        assert_eq!(nearest_int_distance(0.4999), 0.4999);
    }

    fn big(v: u128) -> num_bigint::BigInt {
        num_bigint::BigInt::from(v)
    }

    #[test]
    fn golden_constant_satisfies_its_quadratic() {
        // x = g / 2^128 with x^2 + x - 1 = 0  <=>  g^2 + g 2^128 - 2^256 = 0.
        let g = big(GOLDEN_FRAC);
        let one = num_bigint::BigInt::from(1u8) << 128;
        let residual: num_bigint::BigInt = &g * &g + &g * &one - &one * &one;
        // |x^2 + x - 1| * 2^256 < 2^(256 - 120)
        assert!(residual.magnitude().bits() <= 136, "bits {}", residual.magnitude().bits());
    }

    #[test]
    fn sqrt2_constant_squares_to_two() {
        let s = big(SQRT2_MINUS_1_FRAC);
        let one = num_bigint::BigInt::from(1u8) << 128;
        let x = &s + &one;
        let residual: num_bigint::BigInt = &x * &x - (&one * &one) * 2;
        assert!(residual.magnitude().bits() <= 136);
    }

    #[test]
    fn widening_mul_matches_bigint() {
        for (a, b) in [(u128::MAX, u128::MAX), (GOLDEN_FRAC, SQRT2_MINUS_1_FRAC), (1, 0)] {
            let (hi, lo) = widening_mul(a, b);
            let expect = big(a) * big(b);
            assert_eq!((big(hi) << 128) + big(lo), expect);
        }
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(Angle::from_decimal("0.5").unwrap(), Angle::FixedPoint(1 << 127));
        assert_eq!(Angle::from_decimal("1.25").unwrap(), Angle::FixedPoint(1 << 126));
        assert_eq!(Angle::from_decimal("-0.25").unwrap(), Angle::FixedPoint(3 << 126));
        assert_eq!(Angle::from_decimal("7").unwrap(), Angle::FixedPoint(0));
        assert!(Angle::from_decimal("0.1x").is_err());
        assert!(Angle::from_decimal(".").is_err());
        let g = Angle::from_decimal("0.6180339887498948482045868343656381177203").unwrap();
        let Angle::FixedPoint(v) = g else { unreachable!() };
        assert!(GOLDEN_FRAC.abs_diff(v) < 1 << 4);
    }

    #[test]
    fn angle_specs() {
        assert_eq!("rat:3/8".parse::<Angle>().unwrap(), Angle::Rational { a: 3, q: 8 });
        assert_eq!("quad:golden".parse::<Angle>().unwrap(), Angle::golden());
        assert!(matches!("rat:1/0".parse::<Angle>(), Err(Error::Usage(_))));
        assert!("quad:pi".parse::<Angle>().is_err());
        assert!("3/8".parse::<Angle>().is_err());
        for a in [Angle::golden(), Angle::rational(5, 12).unwrap()] {
            assert_eq!(a.to_string().parse::<Angle>().unwrap(), a);
        }
    }

    #[test]
    fn scale_rereduces() {
        let a = Angle::rational(1, 4).unwrap();
        assert_eq!(a.scale(2), Angle::Rational { a: 1, q: 2 });
        assert_eq!(a.scale(4), Angle::ZERO);
        assert_eq!(Angle::FixedPoint(1 << 126).scale(3), Angle::FixedPoint(3 << 126));
    }

    #[test]
    fn quarter_phases() {
        let p = Phase::from_residue(1, 4);
        assert!(p.re.abs() < 1e-15 && (p.im - 1.0).abs() < 1e-15);
        let p = Phase::from_residue(1, 2);
        assert!((p.re + 1.0).abs() < 1e-15 && p.im.abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn rational_frac_nsq_is_exact_and_periodic(a in -1000i128..1000, q in 1u64..5000, n in 0u64..1_000_000) {
            let alpha = Angle::rational(a, q).unwrap();
            let Angle::Rational { q: qr, .. } = alpha else { unreachable!() };
            let r = alpha.nsq_residue(n).unwrap();
            prop_assert!(r < qr);
            let scaled = alpha.frac_nsq(n) * qr as f64;
            prop_assert!((scaled - r as f64).abs() < 1e-9 && scaled.round() as u64 == r);
            prop_assert_eq!(alpha.nsq_residue(n % qr), Some(r));
            prop_assert_eq!(alpha.nsq_residue(n + qr), Some(r));
        }

        #[test]
        fn nearest_int_distance_symmetry(x in -1e6f64..1e6) {
            let d = nearest_int_distance(x);
            prop_assert!((0.0..=0.5).contains(&d));
            prop_assert!((d - nearest_int_distance(-x)).abs() < 1e-9);
            prop_assert!((d - nearest_int_distance(x + 1.0)).abs() < 1e-9);
        }

        #[test]
        fn fixed_frac_nsq_tracks_float(f in any::<u128>(), n in 0u64..100_000) {
            let alpha = Angle::FixedPoint(f);
            let got = alpha.frac_nsq(n);
            prop_assert!((0.0..1.0).contains(&got));
            let raw = (n as u128 * n as u128).wrapping_mul(f);
            let exact = raw as f64 / TWO_POW_128;
            let diff = nearest_int_distance(got - exact);
            prop_assert!(diff <= 2f64.powi(-52));
        }

        #[test]
        fn phase_is_unimodular(x in -1e3f64..1e3) {
            let p = Phase::from_turns(x);
            prop_assert!((p.re * p.re + p.im * p.im - 1.0).abs() <= 2f64.powi(-45));
        }
    }
}
