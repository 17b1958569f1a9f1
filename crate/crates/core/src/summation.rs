//! Compensated accumulation and a fixed-shape parallel reduction.
//!
//! A range of indices is cut into chunks at fixed offsets, each chunk is
//! summed sequentially with Neumaier compensation, and the chunk partials are
//! combined by a pairwise tree whose shape depends only on the chunk count.
//! The result is therefore bit-identical whatever the worker count.

use num_complex::Complex64;
use rayon::prelude::*;

/// Chunk length used by the exponential-sum evaluators.
pub const CHUNK: u64 = 1 << 16;

/// Neumaier (improved Kahan) running sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(mut self, other: NeumaierSum) -> NeumaierSum {
        self.add(other.sum);
        self.add(other.comp);
        self
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Componentwise compensated complex sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(self, other: ComplexSum) -> ComplexSum {
        ComplexSum {
            re: self.re.merge(other.re),
            im: self.im.merge(other.im),
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

impl FromIterator<Complex64> for ComplexSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = ComplexSum::new();
        for z in iter {
            s.add(z);
        }
        s
    }
}

/// Combine partials pairwise, level by level: `((p0 p1)(p2 p3))...`.
pub fn tree_combine<T, C>(mut parts: Vec<T>, combine: C) -> Option<T>
where
    C: Fn(T, T) -> T,
{
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Map every chunk `[start, end]` of `[lo, hi]` (chunk boundaries at
/// `lo + k * chunk`) in parallel, then tree-combine the partials in order.
pub fn chunked_reduce<T, M, C>(lo: u64, hi: u64, chunk: u64, map: M, combine: C) -> Option<T>
where
    T: Send,
    M: Fn(u64, u64) -> T + Sync,
    C: Fn(T, T) -> T,
{
    if hi < lo {
        return None;
    }
    let chunk = chunk.max(1);
    let n_chunks = (hi - lo) / chunk + 1;
    let parts: Vec<T> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let start = lo + k * chunk;
            let end = (start + (chunk - 1)).min(hi);
            map(start, end)
        })
        .collect();
    tree_combine(parts, combine)
}

/// Deterministic compensated sum of `term(i)` over `lo..=hi`.
pub fn sum_range<F>(lo: u64, hi: u64, chunk: u64, term: F) -> Complex64
where
    F: Fn(u64) -> Complex64 + Sync,
{
    chunked_reduce(
        lo,
        hi,
        chunk,
        |s, e| (s..=e).map(&term).collect::<ComplexSum>(),
        ComplexSum::merge,
    )
    .map_or(Complex64::new(0.0, 0.0), |s| s.value())
}

/// Deterministic sum of real terms over `lo..=hi`.
pub fn sum_range_real<F>(lo: u64, hi: u64, chunk: u64, term: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    chunked_reduce(
        lo,
        hi,
        chunk,
        |s, e| (s..=e).map(&term).collect::<NeumaierSum>(),
        NeumaierSum::merge,
    )
    .map_or(0.0, |s| s.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s: NeumaierSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn tree_shape() {
        let parts: Vec<String> = (0..5).map(|i| i.to_string()).collect();
        let out = tree_combine(parts, |a, b| format!("({a}{b})")).unwrap();
        assert_eq!(out, "(((01)(23))4)");
        assert_eq!(tree_combine(Vec::<u8>::new(), |a, _| a), None);
    }

    #[test]
    fn chunked_sum_independent_of_pool_size() {
        let f = |n: u64| Complex64::new((n as f64).sin(), 1.0 / (n as f64 + 1.0));
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sum_range(3, 200_000, 1000, f))
        };
        let a = run(1);
        for t in [2, 3, 8] {
            let b = run(t);
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn empty_range() {
        assert_eq!(sum_range(5, 4, 10, |_| Complex64::new(1.0, 0.0)), Complex64::new(0.0, 0.0));
        assert_eq!(sum_range_real(0, 9, 4, |n| n as f64), 45.0);
    }
}
