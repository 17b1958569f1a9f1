//! Continued fractions, convergent-based rational approximation and the
//! Vinogradov sum `sum_{n <= X} min(Y, 1/||alpha n||)`.

use serde::Serialize;

use crate::arith::{widening_mul, Angle};
use crate::error::{domain, Result};
use crate::summation::{sum_range_real, CHUNK};

/// Fixed-point expansions stop once `q_k q_{k+1}` would exceed `2^96`, i.e.
/// when fewer than 32 bits of the 128-bit input remain behind the
/// approximation.
const FIXED_POINT_Q_PRODUCT_LIMIT: u128 = 1 << 96;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Convergent {
    pub p: u64,
    pub q: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContinuedFraction {
    /// `[a_0; a_1, a_2, ...]`
    pub quotients: Vec<u64>,
    /// `p_k / q_k`, one per quotient.
    pub convergents: Vec<Convergent>,
    /// Whether the expansion ended because the value is exactly represented
    /// (as opposed to hitting `max_terms` or the precision floor).
    pub terminated: bool,
}

/// A rational approximation `a/q` to an angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ApproxResult {
    pub a: u64,
    pub q: u64,
    /// `|alpha - a/q|`
    pub err: f64,
    /// `q^2 * err`
    pub quality: f64,
}

/// Partial quotients and convergents of `alpha`, at most `max_terms` of them.
pub fn continued_fraction(alpha: &Angle, max_terms: usize) -> Result<ContinuedFraction> {
    if !(1..=64).contains(&max_terms) {
        return domain("max_terms must lie in 1..=64");
    }
    let mut cf = ContinuedFraction {
        quotients: vec![0],
        convergents: vec![Convergent { p: 0, q: 1 }],
        terminated: false,
    };
    // Remainder pair (num, den) with the tail equal to num/den after a_0 = 0.
    let (mut num, mut den): (u128, u128) = match *alpha {
        Angle::Rational { a, q } => (q as u128, a as u128),
        Angle::FixedPoint(f) => {
            if f == 0 {
                cf.terminated = true;
                return Ok(cf);
            }
            // 2^128 / f, with 2^128 = MAX + 1.
            let (c, r0) = (u128::MAX / f, u128::MAX % f);
            let (c, r) = if r0 + 1 == f { (c + 1, 0) } else { (c, r0 + 1) };
            if c > u64::MAX as u128 {
                return Ok(cf);
            }
            if !push_term(&mut cf, c, true) {
                return Ok(cf);
            }
            if r == 0 {
                cf.terminated = true;
                return Ok(cf);
            }
            (f, r)
        }
    };
    if den == 0 {
        cf.terminated = true;
        return Ok(cf);
    }
    let fixed = matches!(alpha, Angle::FixedPoint(_));
    while cf.quotients.len() < max_terms {
        let c = num / den;
        let r = num % den;
        if c > u64::MAX as u128 || !push_term(&mut cf, c, fixed) {
            break;
        }
        if r == 0 {
            cf.terminated = true;
            break;
        }
        num = den;
        den = r;
    }
    cf.quotients.truncate(max_terms);
    cf.convergents.truncate(max_terms);
    Ok(cf)
}

/// Append a quotient and its convergent. Returns false (leaving `cf`
/// untouched) on overflow or when a fixed-point expansion runs out of
/// reliable precision.
fn push_term(cf: &mut ContinuedFraction, c: u128, fixed: bool) -> bool {
    let k = cf.convergents.len();
    let last = cf.convergents[k - 1];
    let (pp, qp) = if k >= 2 {
        (cf.convergents[k - 2].p as u128, cf.convergents[k - 2].q as u128)
    } else {
        (1u128, 0u128)
    };
    let p = c.checked_mul(last.p as u128).and_then(|v| v.checked_add(pp));
    let q = c.checked_mul(last.q as u128).and_then(|v| v.checked_add(qp));
    let (Some(p), Some(q)) = (p, q) else { return false };
    if p > u64::MAX as u128 || q > u64::MAX as u128 {
        return false;
    }
    if fixed && (last.q as u128).saturating_mul(q) > FIXED_POINT_Q_PRODUCT_LIMIT {
        return false;
    }
    cf.quotients.push(c as u64);
    cf.convergents.push(Convergent { p: p as u64, q: q as u64 });
    true
}

/// `|alpha - a/q|`, evaluated from exact integer residues.
pub fn approximation_error(alpha: &Angle, a: u64, q: u64) -> f64 {
    match *alpha {
        Angle::Rational { a: an, q: qn } => {
            let diff = (an as i128 * q as i128 - a as i128 * qn as i128).unsigned_abs();
            diff as f64 / (qn as f64 * q as f64)
        }
        Angle::FixedPoint(f) => {
            let (hi, lo) = widening_mul(f, q as u128);
            let int_diff = hi as i128 - a as i128;
            let frac = lo as f64 / 340_282_366_920_938_463_463_374_607_431_768_211_456.0;
            ((int_diff as f64) + frac).abs() / q as f64
        }
    }
}

/// The last convergent with denominator at most `max_q`.
pub fn best_approximation(alpha: &Angle, max_q: u64) -> Result<ApproxResult> {
    if max_q == 0 {
        return domain("Q must be positive");
    }
    let cf = continued_fraction(alpha, 64)?;
    let c = cf
        .convergents
        .iter()
        .take_while(|c| c.q <= max_q)
        .last()
        .copied()
        .unwrap_or(Convergent { p: 0, q: 1 });
    let err = approximation_error(alpha, c.p, c.q);
    Ok(ApproxResult {
        a: c.p,
        q: c.q,
        err,
        quality: (c.q as f64) * (c.q as f64) * err,
    })
}

/// `sum_{1 <= n <= X} min(Y, 1/||alpha n||)`, with the summand equal to `Y`
/// when `||alpha n|| = 0`.
pub fn vinogradov_sum(alpha: &Angle, x: f64, y: f64) -> Result<f64> {
    if !(x >= 1.0 && y >= 1.0) {
        return domain("X and Y must be at least 1");
    }
    if x > 1e9 {
        return domain("X above 1e9 is outside the direct-loop range");
    }
    let n_max = x.floor() as u64;
    Ok(sum_range_real(1, n_max, CHUNK, |n| {
        let d = alpha.dist_mul(n);
        if d == 0.0 {
            y
        } else {
            y.min(1.0 / d)
        }
    }))
}

/// `XY/q + (X + q) log 2q`.
pub fn vinogradov_bound_rhs(x: f64, y: f64, q: u64) -> f64 {
    let q = q as f64;
    x * y / q + (x + q) * (2.0 * q).ln()
}
