//! Sifted sequences: odd primitive Gaussian integers (odd sums of two coprime
//! squares), primitive Loeschian integers (coprime `u^2 + uv + v^2`) and
//! their intersection.
//!
//! Each sequence is produced by a segmented sieve and can be checked against
//! a brute-force representation oracle.
//!
//! Note on the Loeschian characterisation: "no prime factor `= 2 (mod 3)`"
//! alone admits `9`, `63`, ... which have no coprime representation. The
//! sieve additionally rejects multiples of 9 so that it agrees with the
//! representation oracle.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numtheory::{exact_sqrt, gcd, isqrt, primes_up_to};

/// Segment length in integers (a multiple of 64).
pub const SEGMENT: u64 = 1 << 20;
const SEGMENT_WORDS: usize = (SEGMENT / 64) as usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Gaussian,
    Loeschian,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SieveMode {
    /// Exact membership.
    Full,
    /// `n = 1 (mod 4)` and coprime to the product of primes `p < z`,
    /// `p = 3 (mod 4)`.
    Truncated { z: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PrimeClass {
    /// `p = 3 (mod 4)`
    ThreeMod4,
    /// `p = 2 (mod 3)`
    TwoMod3,
    All,
}

impl PrimeClass {
    pub fn contains(self, p: u64) -> bool {
        match self {
            PrimeClass::ThreeMod4 => p % 4 == 3,
            PrimeClass::TwoMod3 => p % 3 == 2,
            PrimeClass::All => true,
        }
    }
}

/// Membership bitmap over `1..=limit`.
#[derive(Clone, Debug, PartialEq)]
pub struct SievedSequence {
    limit: u64,
    kind: SequenceKind,
    mode: SieveMode,
    /// Bit `n` of the array is membership of `n`; bit 0 is always clear.
    words: Vec<u64>,
}

impl SievedSequence {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn mode(&self) -> SieveMode {
        self.mode
    }

    #[inline]
    pub fn contains(&self, n: u64) -> bool {
        n >= 1 && n <= self.limit && (self.words[(n / 64) as usize] >> (n % 64)) & 1 == 1
    }

    /// Number of members `<= n`.
    pub fn count_upto(&self, n: u64) -> u64 {
        let n = n.min(self.limit);
        let full = (n / 64) as usize;
        let mut c: u64 = self.words[..full].iter().map(|w| w.count_ones() as u64).sum();
        let rem = n % 64;
        c += (self.words[full] & (((1u128 << (rem + 1)) - 1) as u64)).count_ones() as u64;
        c
    }

    pub fn count(&self) -> u64 {
        self.count_upto(self.limit)
    }

    /// Members in `lo..=hi`, ascending.
    pub fn members_in(&self, lo: u64, hi: u64) -> impl Iterator<Item = u64> + '_ {
        let lo = lo.max(1);
        let hi = hi.min(self.limit);
        (lo..=hi).filter(move |&n| self.contains(n))
    }

    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        self.members_in(1, self.limit)
    }

    /// Bitwise AND of two sequences with the same limit.
    pub fn intersect(&self, other: &SievedSequence, kind: SequenceKind) -> Result<SievedSequence> {
        if self.limit != other.limit {
            return domain("sequences must share a limit");
        }
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        Ok(SievedSequence {
            limit: self.limit,
            kind,
            mode: SieveMode::Full,
            words,
        })
    }

    /// Binary form: 8-byte little-endian `limit`, then membership of
    /// `1..=limit` packed LSB-first (byte `k`, bit `j` is `n = 8k + j + 1`).
    pub fn to_bitmap_bytes(&self) -> Vec<u8> {
        let n_bytes = self.limit.div_ceil(8) as usize;
        let mut out = Vec::with_capacity(8 + n_bytes);
        out.extend_from_slice(&self.limit.to_le_bytes());
        let mut body = vec![0u8; n_bytes];
        for n in self.members() {
            let i = n - 1;
            body[(i / 8) as usize] |= 1 << (i % 8);
        }
        out.extend_from_slice(&body);
        out
    }

    pub fn write_bitmap<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bitmap_bytes())?;
        Ok(())
    }

    /// Inverse of [`to_bitmap_bytes`](Self::to_bitmap_bytes); the file does
    /// not record the kind, so the caller supplies it.
    pub fn read_bitmap<R: Read>(mut r: R, kind: SequenceKind, mode: SieveMode) -> Result<SievedSequence> {
        let mut header = [0u8; 8];
        r.read_exact(&mut header)?;
        let limit = u64::from_le_bytes(header);
        let mut body = vec![0u8; limit.div_ceil(8) as usize];
        r.read_exact(&mut body)?;
        let mut words = vec![0u64; word_count(limit)];
        for (k, byte) in body.iter().enumerate() {
            for j in 0..8 {
                if byte >> j & 1 == 1 {
                    let n = 8 * k as u64 + j + 1;
                    if n > limit {
                        return Err(Error::Usage("bitmap has bits beyond its length".into()));
                    }
                    words[(n / 64) as usize] |= 1 << (n % 64);
                }
            }
        }
        Ok(SievedSequence { limit, kind, mode, words })
    }

    /// One member per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for n in self.members() {
            writeln!(w, "{n}")?;
        }
        Ok(())
    }
}

fn word_count(limit: u64) -> usize {
    (limit / 64 + 1) as usize
}

/// Clear bits beyond `limit` and bit 0.
fn trim(words: &mut [u64], limit: u64) {
    words[0] &= !1;
    let last = (limit / 64) as usize;
    let keep = limit % 64;
    words[last] &= ((1u128 << (keep + 1)) - 1) as u64;
    for w in &mut words[last + 1..] {
        *w = 0;
    }
}

/// Odd `n = u^2 + v^2` with `gcd(u, v) = 1`, by scanning `u <= sqrt(n)`.
pub fn is_primitive_gaussian_oracle(n: u64) -> Result<bool> {
    if n == 0 {
        return domain("n must be positive");
    }
    if n.is_multiple_of(2) {
        return Ok(false);
    }
    Ok((0..=isqrt(n)).any(|u| exact_sqrt(n - u * u).is_some_and(|v| gcd(u, v) == 1)))
}

/// `n = u^2 + uv + v^2` for coprime integers `u, v` of any sign.
pub fn is_primitive_loeschian_oracle(n: u64) -> Result<bool> {
    if n == 0 {
        return domain("n must be positive");
    }
    let bound = 2 * isqrt(n) as i128 + 2;
    let n = n as i128;
    for u in -bound..=bound {
        // v^2 + u v + (u^2 - n) = 0
        let disc = 4 * n - 3 * u * u;
        if disc < 0 {
            continue;
        }
        let Some(d) = exact_sqrt(disc as u64) else { continue };
        let d = d as i128;
        if (d - u).rem_euclid(2) != 0 {
            continue;
        }
        for v in [(-u + d) / 2, (-u - d) / 2] {
            if gcd(u.unsigned_abs() as u64, v.unsigned_abs() as u64) == 1 {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Odd primitive Gaussian integers up to `limit`.
pub fn sieve_gaussian(limit: u64, mode: SieveMode) -> Result<SievedSequence> {
    if limit == 0 {
        return domain("limit must be positive");
    }
    let primes: Vec<u64> = match mode {
        SieveMode::Full => primes_up_to(isqrt(limit))
            .into_iter()
            .filter(|p| p % 4 == 3)
            .collect(),
        SieveMode::Truncated { z } => {
            if !(2.0..=(limit as f64).sqrt() + 1.0).contains(&z) {
                return domain(format!("truncation level z = {z} outside [2, sqrt(N) + 1]"));
            }
            prime_product(z, PrimeClass::ThreeMod4).primes
        }
    };
    let mut words = vec![0u64; word_count(limit)];
    words
        .par_chunks_mut(SEGMENT_WORDS)
        .enumerate()
        .for_each(|(seg, chunk)| {
            let lo = seg as u64 * SEGMENT;
            let hi = (lo + chunk.len() as u64 * 64).min(limit + 1);
            // n = 1 (mod 4); 64 = 0 (mod 4) so the pattern is per-word constant.
            chunk.fill(0x2222_2222_2222_2222);
            for &p in &primes {
                // Multiples p k = 1 (mod 4) have k = 3 (mod 4): step 4p from 3p.
                let step = 4 * p;
                let first = 3 * p;
                let mut m = if first >= lo {
                    first
                } else {
                    first + (lo - first).div_ceil(step) * step
                };
                while m < hi {
                    let i = m - lo;
                    chunk[(i / 64) as usize] &= !(1u64 << (i % 64));
                    m += step;
                }
            }
        });
    trim(&mut words, limit);
    Ok(SievedSequence {
        limit,
        kind: SequenceKind::Gaussian,
        mode,
        words,
    })
}

/// Primitive Loeschian integers up to `limit`: no prime factor `= 2 (mod 3)`
/// and not divisible by 9.
pub fn sieve_loeschian(limit: u64) -> Result<SievedSequence> {
    if limit == 0 {
        return domain("limit must be positive");
    }
    let small = primes_up_to(isqrt(limit));
    let mut words = vec![0u64; word_count(limit)];
    words
        .par_chunks_mut(SEGMENT_WORDS)
        .enumerate()
        .for_each(|(seg, chunk)| {
            let lo = seg as u64 * SEGMENT;
            let hi = (lo + chunk.len() as u64 * 64).min(limit + 1);
            if hi <= lo {
                return;
            }
            let len = (hi - lo) as usize;
            let mut alive = vec![true; len];
            // Cofactor left after removing the small primes that may divide members.
            let mut rem: Vec<u64> = (lo..hi).collect();
            for &p in &small {
                let mut m = lo.div_ceil(p).max(1) * p;
                if p % 3 == 2 {
                    while m < hi {
                        alive[(m - lo) as usize] = false;
                        m += p;
                    }
                } else {
                    while m < hi {
                        let i = (m - lo) as usize;
                        if alive[i] {
                            if p == 3 && m % 9 == 0 {
                                alive[i] = false;
                            } else {
                                while rem[i].is_multiple_of(p) {
                                    rem[i] /= p;
                                }
                            }
                        }
                        m += p;
                    }
                }
            }
            for (i, (&ok, &r)) in alive.iter().zip(&rem).enumerate() {
                // Any cofactor > 1 is a single prime above sqrt(limit).
                if ok && (r == 1 || r % 3 != 2) {
                    chunk[i / 64] |= 1 << (i % 64);
                }
            }
        });
    trim(&mut words, limit);
    Ok(SievedSequence {
        limit,
        kind: SequenceKind::Loeschian,
        mode: SieveMode::Full,
        words,
    })
}

/// Integers that are both odd primitive Gaussian and primitive Loeschian.
pub fn sieve_both(limit: u64) -> Result<SievedSequence> {
    let g = sieve_gaussian(limit, SieveMode::Full)?;
    let l = sieve_loeschian(limit)?;
    g.intersect(&l, SequenceKind::Both)
}

/// Build a sequence of the given kind with full sieving.
pub fn sieve(kind: SequenceKind, limit: u64) -> Result<SievedSequence> {
    match kind {
        SequenceKind::Gaussian => sieve_gaussian(limit, SieveMode::Full),
        SequenceKind::Loeschian => sieve_loeschian(limit),
        SequenceKind::Both => sieve_both(limit),
    }
}

/// The primes `p < z` of a residue class, whose product is the sifting
/// modulus.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrimeProduct {
    pub z: f64,
    pub class: PrimeClass,
    pub primes: Vec<u64>,
}

impl PrimeProduct {
    /// The product itself, when it fits.
    pub fn product(&self) -> Option<u128> {
        self.primes.iter().try_fold(1u128, |acc, &p| acc.checked_mul(p as u128))
    }

    pub fn is_coprime(&self, n: u64) -> bool {
        self.primes.iter().all(|&p| !n.is_multiple_of(p))
    }
}

/// Primes strictly below `z` in `class`.
pub fn prime_product(z: f64, class: PrimeClass) -> PrimeProduct {
    let limit = if z <= 2.0 {
        0
    } else if z.fract() == 0.0 {
        z as u64 - 1
    } else {
        z.floor() as u64
    };
    let primes = primes_up_to(limit).into_iter().filter(|&p| class.contains(p)).collect();
    PrimeProduct { z, class, primes }
}
