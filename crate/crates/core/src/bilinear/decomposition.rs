use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::CoeffSeq;
use crate::arith::Angle;
use crate::error::{domain, Result};
use crate::numtheory::{isqrt, primes_up_to};
use crate::sieve::{prime_product, PrimeClass};
use crate::summation::{tree_combine, ComplexSum, NeumaierSum};

/// Parameters of the three-term decomposition of the sifted sum over
/// `N/2 < n <= N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecompositionParams {
    pub n: u64,
    /// Cutoff `d < M` on the truncated Moebius sum.
    pub m: u64,
    /// Lower end `M0 <= l <= M0 z` of the type-II variable.
    pub m0: u64,
    pub z: f64,
    /// Primes `z <= p < Z` enter the second term.
    pub big_z: f64,
}

impl DecompositionParams {
    /// `M0 = M` and `Z = floor(sqrt N) + 1`, i.e. primes up to `sqrt N`.
    pub fn new(n: u64, m: u64, z: f64) -> Result<DecompositionParams> {
        let p = DecompositionParams {
            n,
            m,
            m0: m,
            z,
            big_z: (isqrt(n) + 1) as f64,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let lo = self.z.max(2.0);
        if !(lo <= self.big_z && self.big_z <= self.n as f64) {
            return domain(format!(
                "need max(2, z) <= Z <= N, got z = {}, Z = {}, N = {}",
                self.z, self.big_z, self.n
            ));
        }
        if !(2 <= self.m0 && self.m0 <= self.m) {
            return domain(format!("need 2 <= M0 <= M, got M0 = {}, M = {}", self.m0, self.m));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TermValue {
    pub value: Complex64,
    /// Sum of the absolute values of the summands.
    pub trivial: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecompositionTerms {
    pub s1: TermValue,
    pub s2: TermValue,
    pub s3: TermValue,
}

#[derive(Clone, Copy, Default)]
struct Acc {
    value: ComplexSum,
    trivial: NeumaierSum,
}

impl Acc {
    fn add(&mut self, coeff: Complex64, phase: Complex64) {
        self.value.add(coeff * phase);
        self.trivial.add(coeff.norm());
    }

    fn merge(self, o: Acc) -> Acc {
        Acc {
            value: self.value.merge(o.value),
            trivial: self.trivial.merge(o.trivial),
        }
    }

    fn finish(parts: Vec<Acc>) -> TermValue {
        let a = tree_combine(parts, Acc::merge).unwrap_or_default();
        TermValue {
            value: a.value.value(),
            trivial: a.trivial.value(),
        }
    }
}

/// Squarefree products of `primes` below `limit`, with their Moebius sign.
fn squarefree_below(primes: &[u64], limit: u64) -> Vec<(u64, f64)> {
    let mut out = vec![(1u64, 1.0)];
    for &p in primes {
        let extra: Vec<(u64, f64)> = out
            .iter()
            .filter_map(|&(d, s)| d.checked_mul(p).filter(|&dp| dp < limit).map(|dp| (dp, -s)))
            .collect();
        out.extend(extra);
    }
    out.retain(|&(d, _)| d < limit);
    out.sort_unstable_by_key(|&(d, _)| d);
    out
}

/// `(lo, hi]` bounds for `k` with `N/2 < k l <= N` and `k l >= floor`.
fn cofactor_range(n: u64, l: u64, floor: u64) -> (u64, u64) {
    let lo = (n / 2 / l).max(floor.div_ceil(l).saturating_sub(1));
    (lo, n / l)
}

/// The three decomposition terms at a single `t` slice:
///
/// * `S1 = sum_{d < M, d | P(z)} mu(d) sum_{d | n, n = 1 (4), N/2 < n <= N} e(alpha n^2)`
///   with `P(z)` the product of primes `p < z`, `p = 3 (mod 4)`;
/// * `S2 = sum_{z <= p < Z, p = 3 (4)} sum_{N/2 < mp <= N, mp = 1 (4)} rho(m) e(alpha (mp)^2)`;
/// * `S3 = sum_{M0 <= l <= M0 z} sum_{kl >= M, N/2 < kl <= N, kl = 1 (4)} alpha_l beta_k e(alpha (kl)^2)`.
pub fn eval_decomposition_terms(
    params: &DecompositionParams,
    alpha: &Angle,
    rho: &CoeffSeq,
    coeff_l: &CoeffSeq,
    coeff_k: &CoeffSeq,
) -> Result<DecompositionTerms> {
    params.validate()?;
    let n = params.n;
    let phase = |x: u64| alpha.phase_nsq(x).to_complex();

    let divisors = squarefree_below(&prime_product(params.z, PrimeClass::ThreeMod4).primes, params.m);
    let s1 = Acc::finish(
        divisors
            .par_iter()
            .map(|&(d, mu)| {
                let mut acc = Acc::default();
                let mu = Complex64::new(mu, 0.0);
                // d is odd, so d j = 1 (mod 4) iff j = d (mod 4).
                let j0 = n / 2 / d + 1;
                let j_start = j0 + (d % 4 + 4 - j0 % 4) % 4;
                for j in (j_start..=n / d).step_by(4) {
                    acc.add(mu, phase(d * j));
                }
                acc
            })
            .collect(),
    );

    let p_lo = params.z.max(2.0).ceil() as u64;
    let p_hi = (params.big_z.ceil() as u64).saturating_sub(1);
    let primes: Vec<u64> = primes_up_to(p_hi)
        .into_iter()
        .filter(|&p| p >= p_lo && (p as f64) < params.big_z && p % 4 == 3)
        .collect();
    let s2 = Acc::finish(
        primes
            .par_iter()
            .map(|&p| {
                let mut acc = Acc::default();
                for m in n / 2 / p + 1..=n / p {
                    if (m * p) % 4 == 1 {
                        acc.add(rho.get(m), phase(m * p));
                    }
                }
                acc
            })
            .collect(),
    );

    let l_hi = (params.m0 as f64 * params.z).floor().min(n as f64) as u64;
    let s3 = Acc::finish(
        (params.m0..=l_hi.max(params.m0 - 1))
            .into_par_iter()
            .map(|l| {
                let mut acc = Acc::default();
                let al = coeff_l.get(l);
                let (lo, hi) = cofactor_range(n, l, params.m);
                for k in lo + 1..=hi {
                    if (k * l) % 4 == 1 {
                        acc.add(al * coeff_k.get(k), phase(k * l));
                    }
                }
                acc
            })
            .collect(),
    );

    Ok(DecompositionTerms { s1, s2, s3 })
}

/// Default `alpha_l = mu(l) [l | P(z)]` (all primes `p < z`).
pub(crate) fn default_coeff_l(len: usize, z: f64) -> CoeffSeq {
    let pp = prime_product(z, PrimeClass::All);
    CoeffSeq::from_fn(len, 1.0, |l| {
        let mut rest = l;
        let mut sign = 1.0;
        for &p in &pp.primes {
            if rest % p == 0 {
                rest /= p;
                if rest % p == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                sign = -sign;
            }
        }
        if rest == 1 {
            Complex64::new(sign, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
    .expect("values are bounded by 1")
}

impl DecompositionTerms {
    /// Evaluate with the default sequences `rho = 1`, `alpha_l = mu(l) [l | P(z)]`,
    /// `beta_k = 1`.
    pub fn with_defaults(params: &DecompositionParams, alpha: &Angle) -> Result<DecompositionTerms> {
        params.validate()?;
        let len = params.n as usize;
        let one = CoeffSeq::constant(len, Complex64::new(1.0, 0.0));
        let coeff_l = default_coeff_l(len, params.z);
        eval_decomposition_terms(params, alpha, &one, &coeff_l, &one)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::mobius;

    fn ones(n: usize) -> CoeffSeq {
        CoeffSeq::constant(n, Complex64::new(1.0, 0.0))
    }

    #[test]
    fn params_validation() {
        assert!(DecompositionParams::new(100, 2, 3.0).is_ok());
        assert!(DecompositionParams::new(100, 1, 3.0).is_err());
        assert!(DecompositionParams::new(100, 5, 50.0).is_err());
        let mut p = DecompositionParams::new(100, 5, 3.0).unwrap();
        p.m0 = 6;
        assert!(p.validate().is_err());
    }

    #[test]
    fn s1_with_only_unit_divisor() {
        let p = DecompositionParams::new(1000, 2, 10.0).unwrap();
        let t = eval_decomposition_terms(&p, &Angle::ZERO, &ones(1000), &ones(1000), &ones(1000)).unwrap();
        let want = (501..=1000).filter(|n| n % 4 == 1).count() as f64;
        assert_eq!(t.s1.value, Complex64::new(want, 0.0));
    }

    #[test]
    fn s1_matches_direct_sum() {
        let alpha = Angle::rational(3, 17).unwrap();
        let p = DecompositionParams::new(2000, 40, 12.0).unwrap();
        let t = DecompositionTerms::with_defaults(&p, &alpha).unwrap();
        let mut direct = Complex64::new(0.0, 0.0);
        for d in 1..40u64 {
            let mu = mobius(d) as f64;
            // d | 3 * 7 * 11
            if mu == 0.0 || 231 % d != 0 {
                continue;
            }
            for n in 1001..=2000u64 {
                if n % d == 0 && n % 4 == 1 {
                    direct += mu * crate::arith::e((3 * n * n % 17) as f64 / 17.0);
                }
            }
        }
        assert!((t.s1.value - direct).norm() < 1e-9, "{} {direct}", t.s1.value);
    }

    #[test]
    fn s2_direct_enumeration() {
        let p = DecompositionParams::new(100, 2, 3.0).unwrap();
        let t = eval_decomposition_terms(&p, &Angle::ZERO, &ones(100), &ones(100), &ones(100)).unwrap();
        let mut count = 0;
        for prime in [3u64, 7] {
            for m in 1..=100u64 {
                let x = m * prime;
                if 50 < x && x <= 100 && x % 4 == 1 {
                    count += 1;
                }
            }
        }
        assert_eq!(t.s2.value, Complex64::new(count as f64, 0.0));
        assert_eq!(t.s2.trivial, count as f64);
    }

    #[test]
    fn s3_zero_coefficients_and_direct() {
        let p = DecompositionParams::new(500, 6, 4.0).unwrap();
        let zero = CoeffSeq::zeros(500);
        let t = eval_decomposition_terms(&p, &Angle::golden(), &zero, &zero, &zero).unwrap();
        assert_eq!(t.s2.value, Complex64::new(0.0, 0.0));
        assert_eq!(t.s3.value, Complex64::new(0.0, 0.0));

        let a = CoeffSeq::random(500, 1);
        let b = CoeffSeq::random(500, 2);
        let alpha = Angle::rational(5, 31).unwrap();
        let t = eval_decomposition_terms(&p, &alpha, &zero, &a, &b).unwrap();
        let mut direct = Complex64::new(0.0, 0.0);
        for l in 6..=24u64 {
            for k in 1..=500u64 {
                let x = k * l;
                if 250 < x && x <= 500 && x % 4 == 1 {
                    direct += a.get(l) * b.get(k) * crate::arith::e((5 * x * x % 31) as f64 / 31.0);
                }
            }
        }
        assert!((t.s3.value - direct).norm() < 1e-9);
    }

    #[test]
    fn terms_within_trivial_bounds() {
        let p = DecompositionParams::new(5000, 30, 30.0).unwrap();
        let t = DecompositionTerms::with_defaults(&p, &Angle::sqrt2_minus_1()).unwrap();
        for term in [t.s1, t.s2, t.s3] {
            assert!(term.value.norm() <= term.trivial + 1e-9);
        }
    }

    #[test]
    fn default_alpha_l() {
        let c = default_coeff_l(40, 6.0);
        assert_eq!(c.get(1).re, 1.0);
        assert_eq!(c.get(6).re, 1.0);
        assert_eq!(c.get(30).re, -1.0);
        assert_eq!(c.get(4).re, 0.0);
        assert_eq!(c.get(7).re, 0.0);
    }
}
