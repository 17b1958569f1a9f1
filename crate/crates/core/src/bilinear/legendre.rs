use num_complex::Complex64;
use rayon::prelude::*;

use super::CoeffSeq;
use crate::error::{Error, Result};
use crate::sieve::{prime_product, PrimeClass};
use crate::summation::{tree_combine, ComplexSum};

/// Largest number of primes in the sifting product (`2^20` divisors).
pub const DIVISOR_PRIME_CAP: usize = 20;

/// Both sides of the sieve identity
/// `sum_{(n, P(z)) = 1} u_n = sum_{d | P(z)} mu(d) sum_{d | n} u_n`
/// for `u` on `1..=len`, `P(z)` the product of primes `p < z` in `class`.
pub fn legendre_identity_check(u: &CoeffSeq, z: f64, class: PrimeClass) -> Result<(Complex64, Complex64)> {
    let pp = prime_product(z, class);
    if pp.primes.len() > DIVISOR_PRIME_CAP {
        return Err(Error::Cap(format!(
            "{} primes below z = {z} (cap {DIVISOR_PRIME_CAP})",
            pp.primes.len()
        )));
    }
    let lhs = u
        .iter()
        .filter(|&(n, _)| pp.is_coprime(n))
        .map(|(_, v)| v)
        .collect::<ComplexSum>()
        .value();

    let n_max = u.len() as u64;
    let primes = &pp.primes;
    let parts: Vec<ComplexSum> = (0u64..1 << primes.len())
        .into_par_iter()
        .map(|mask| {
            let mut d: u64 = 1;
            for (i, &p) in primes.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    d = d.saturating_mul(p);
                }
            }
            let mut acc = ComplexSum::new();
            if d <= n_max {
                let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                for n in (d..=n_max).step_by(d as usize) {
                    acc.add(sign * u.get(n));
                }
            }
            acc
        })
        .collect();
    let rhs = tree_combine(parts, ComplexSum::merge).map_or(Complex64::new(0.0, 0.0), |s| s.value());
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_product() {
        let u = CoeffSeq::random(200, 3);
        let (l, r) = legendre_identity_check(&u, 2.0, PrimeClass::All).unwrap();
        let total = u.iter().map(|(_, v)| v).sum::<Complex64>();
        assert!((l - total).norm() < 1e-10 && (r - total).norm() < 1e-10);
    }

    #[test]
    fn indicator_example() {
        let u = CoeffSeq::constant(30, Complex64::new(1.0, 0.0));
        let (l, r) = legendre_identity_check(&u, 6.0, PrimeClass::ThreeMod4).unwrap();
        assert_eq!(l, Complex64::new(20.0, 0.0));
        assert!((r - 20.0).norm() < 1e-12);
    }

    #[test]
    fn random_sequence() {
        let u = CoeffSeq::random(1000, 11);
        for class in [PrimeClass::ThreeMod4, PrimeClass::All] {
            let (l, r) = legendre_identity_check(&u, 20.0, class).unwrap();
            assert!((l - r).norm() <= 1e-10, "{l} {r}");
        }
    }

    #[test]
    fn divisor_cap() {
        let u = CoeffSeq::random(10, 1);
        // 22 primes below 80.
        assert!(matches!(legendre_identity_check(&u, 80.0, PrimeClass::All), Err(Error::Cap(_))));
    }
}
