//! Coefficient sequences, sieve-identity and decomposition terms, linear and
//! bilinear sums with the `mn = 1 (mod 4)` constraint, Weyl differencing and
//! the Fourier cutoff kernel.

mod decomposition;
mod kernel;
mod legendre;
mod sums;

pub use decomposition::{eval_decomposition_terms, DecompositionParams, DecompositionTerms, TermValue};
pub use kernel::{fourier_cutoff_kernel, kernel_l1, KernelEstimate, KernelL1, C_KERNEL, QUAD_TOL};
pub use legendre::{legendre_identity_check, DIVISOR_PRIME_CAP};
pub use sums::{
    bilinear1_rhs, bilinear_rhs_1, bilinear_rhs_2, bilinear_rhs_3, bilinear_rhs_min, choose_bilinear_bound,
    h_linear_rhs, linear_rhs, type_i_h_sum, type_i_sum, type_ii_sum, Congruence, HRange, PairSum, TypeIISum,
};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{e, Angle, Phase};
use crate::error::{domain, Result};
use crate::summation::{chunked_reduce, ComplexSum};

/// Slack allowed when checking stored values against `sup_bound`.
const SUP_SLACK: f64 = 1e-12;

/// A complex sequence indexed by `1..=len`, with a documented bound on its
/// absolute values. Indices outside the stored range read as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffSeq {
    values: Vec<Complex64>,
    sup_bound: f64,
}

impl CoeffSeq {
    pub fn new(values: Vec<Complex64>, sup_bound: f64) -> Result<CoeffSeq> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.norm() <= sup_bound + SUP_SLACK)) {
            return domain(format!("coefficient at index {} has |value| = {} > {sup_bound}", i + 1, v.norm()));
        }
        Ok(CoeffSeq { values, sup_bound })
    }

    pub fn zeros(len: usize) -> CoeffSeq {
        CoeffSeq {
            values: vec![Complex64::new(0.0, 0.0); len],
            sup_bound: 0.0,
        }
    }

    pub fn constant(len: usize, c: Complex64) -> CoeffSeq {
        CoeffSeq {
            values: vec![c; len],
            sup_bound: c.norm(),
        }
    }

    pub fn from_fn(len: usize, sup_bound: f64, f: impl Fn(u64) -> Complex64) -> Result<CoeffSeq> {
        CoeffSeq::new((1..=len as u64).map(f).collect(), sup_bound)
    }

    /// Values `r e(theta)` with `r` and `theta` uniform in `[0, 1)`.
    pub fn random(len: usize, seed: u64) -> CoeffSeq {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..len).map(|_| rng.gen::<f64>() * e(rng.gen::<f64>())).collect();
        CoeffSeq { values, sup_bound: 1.0 }
    }

    /// Values `e(theta)` with `theta` uniform in `[0, 1)`.
    pub fn random_unimodular(len: usize, seed: u64) -> CoeffSeq {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..len).map(|_| e(rng.gen::<f64>())).collect();
        CoeffSeq { values, sup_bound: 1.0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    #[inline]
    pub fn get(&self, i: u64) -> Complex64 {
        if i == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.values.get((i - 1) as usize).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// `(index, value)` pairs for `1..=len`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (i as u64 + 1, v))
    }
}

/// `((1 - e(n/2)) / 2, (e(n/4) - e(3n/4)) / 2i)`: the principal and the
/// non-principal character mod 4, written with additive characters.
pub fn char4_expansion(n: i64) -> (Complex64, Complex64) {
    let r = n.rem_euclid(4) as u64;
    let one = Complex64::new(1.0, 0.0);
    let w0 = (one - Phase::from_residue(r % 2, 2).to_complex()) / 2.0;
    let w1 = (Phase::from_residue(r, 4).to_complex() - Phase::from_residue(3 * r % 4, 4).to_complex())
        / Complex64::new(0.0, 2.0);
    (w0, w1)
}

/// Longest range accepted by [`weyl_difference_check`].
pub const WEYL_MAX_LEN: u64 = 10_000;

/// `|sum_n e(f(n))|^2` over `lo < n <= hi`, and the same quantity expanded
/// over differences `k = n1 - n2` as `sum_k sum_n e(f(n + k) - f(n))`.
pub fn weyl_difference_check(f: impl Fn(u64) -> f64, lo: u64, hi: u64) -> Result<(f64, f64)> {
    let len = hi.saturating_sub(lo);
    if len > WEYL_MAX_LEN {
        return domain(format!("range length {len} exceeds {WEYL_MAX_LEN}"));
    }
    if len == 0 {
        return Ok((0.0, 0.0));
    }
    let vals: Vec<f64> = (lo + 1..=hi).map(f).collect();
    let direct = vals.iter().map(|&v| e(v)).collect::<ComplexSum>().value().norm_sqr();
    let l = len as usize;
    // Shift index s = k + (l - 1) runs over 0..=2(l - 1).
    let expanded = chunked_reduce(
        0,
        2 * (len - 1),
        64,
        |s0, s1| {
            let mut acc = ComplexSum::new();
            for s in s0..=s1 {
                let k = s as i64 - (l as i64 - 1);
                let (from, to) = if k >= 0 { (0, l - k as usize) } else { ((-k) as usize, l) };
                for i in from..to {
                    let j = (i as i64 + k) as usize;
                    acc.add(e(vals[j] - vals[i]));
                }
            }
            acc
        },
        ComplexSum::merge,
    )
    .map_or(0.0, |s| s.value().re);
    Ok((direct, expanded))
}

/// `n -> {alpha m^2 n^2}`, a quadratic phase in turns.
pub fn quadratic_phase(alpha: Angle, m: u64) -> impl Fn(u64) -> f64 {
    move |n| alpha.frac_nsq(m * n)
}
