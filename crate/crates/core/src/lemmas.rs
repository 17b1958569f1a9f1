//! Single lemma instances as bound reports, driven by `key=value` parameters.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::arith::Angle;
use crate::bilinear::{
    bilinear1_rhs, bilinear_rhs_min, choose_bilinear_bound, fourier_cutoff_kernel, h_linear_rhs, kernel_l1,
    linear_rhs, type_i_h_sum, type_i_sum, type_ii_sum, CoeffSeq, Congruence, HRange,
};
use crate::diophantine::{best_approximation, vinogradov_bound_rhs, vinogradov_sum};
use crate::error::{Error, Result};
use crate::numtheory::isqrt;
use crate::report::BoundReport;

pub const LEMMA_IDS: [&str; 8] = [
    "linear",
    "linear_cong",
    "hlinear",
    "bilinear1",
    "hbilinear",
    "vino",
    "kernel",
    "kernel_l1",
];

/// Parse a count such as `1000`, `1e6` or `2.5e3`; it must be a non-negative
/// integer value.
pub fn parse_count(s: &str) -> Result<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| Error::Usage(format!("`{s}` is not a number")))?;
    if f < 0.0 || f.fract() != 0.0 || f > 9.0e15 {
        return Err(Error::Usage(format!("`{s}` is not a non-negative integer")));
    }
    Ok(f as u64)
}

/// Comma-separated counts.
pub fn parse_count_list(s: &str) -> Result<Vec<u64>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(parse_count).collect()
}

/// `k=v,k=v,...` parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(BTreeMap<String, String>);

impl FromStr for Params {
    type Err = Error;

    fn from_str(s: &str) -> Result<Params> {
        let mut map = BTreeMap::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("parameter `{item}` is not key=value")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Params(map))
    }
}

impl Params {
    pub fn set(&mut self, k: &str, v: impl ToString) {
        self.0.insert(k.to_string(), v.to_string());
    }

    pub fn has(&self, k: &str) -> bool {
        self.0.contains_key(k)
    }

    pub fn count(&self, k: &str, default: u64) -> Result<u64> {
        self.0.get(k).map_or(Ok(default), |v| parse_count(v))
    }

    pub fn require_count(&self, k: &str) -> Result<u64> {
        let v = self.0.get(k).ok_or_else(|| Error::Usage(format!("missing parameter `{k}`")))?;
        parse_count(v)
    }

    pub fn real(&self, k: &str, default: f64) -> Result<f64> {
        match self.0.get(k) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Usage(format!("parameter `{k}` = `{v}` is not a number"))),
        }
    }

    pub fn require_real(&self, k: &str) -> Result<f64> {
        if !self.has(k) {
            return Err(Error::Usage(format!("missing parameter `{k}`")));
        }
        self.real(k, 0.0)
    }

    pub fn angle(&self, k: &str, default: Angle) -> Result<Angle> {
        self.0.get(k).map_or(Ok(default), |v| v.parse())
    }

    pub fn integer(&self, k: &str) -> Result<i64> {
        let v = self.0.get(k).ok_or_else(|| Error::Usage(format!("missing parameter `{k}`")))?;
        v.parse()
            .map_err(|_| Error::Usage(format!("parameter `{k}` = `{v}` is not an integer")))
    }
}

/// `V = floor(N^{1/3})` for linear sums.
fn linear_v(n: u64) -> u64 {
    ((n as f64).cbrt().floor() as u64).max(1)
}

/// `V = floor(sqrt(N) / 2)` for bilinear sums.
fn bilinear_v(n: u64) -> u64 {
    (isqrt(n) / 2).max(1)
}

/// `W = floor(N / 2V)`, so that `m > V`, `n > W` already forces `mn > N/2`.
fn matching_w(n: u64, v: u64) -> u64 {
    (n / (2 * v)).max(1)
}

/// Evaluate one lemma instance. Recognised parameters:
///
/// * type-I/II sums: `alpha`, `N`, `V`, `W`, `H`, `eps`, `seed`;
/// * `vino`: `alpha`, `X`, `Y`;
/// * `kernel`: `x`, `T`, `beta`; `kernel_l1`: `x`, `T`.
///
/// Rows carry a `trivial` parameter when an exact upper bound on the
/// left-hand side is known.
pub fn run_lemma(id: &str, p: &Params) -> Result<BoundReport> {
    let eps = p.real("eps", 0.0)?;
    let seed = p.count("seed", 0)?;
    match id {
        "linear" | "linear_cong" | "hlinear" => {
            let alpha = p.angle("alpha", Angle::golden())?;
            let n = p.require_count("N")?;
            let v = p.count("V", linear_v(n))?;
            let w = p.count("W", matching_w(n, v))?;
            let q = best_approximation(&alpha, n.max(1))?.q as f64;
            let a = CoeffSeq::random((2 * v) as usize, seed);
            let base = [("N", n as f64), ("V", v as f64), ("W", w as f64), ("q", q), ("eps", eps)];
            if id == "hlinear" {
                let h = p.count("H", 4)?;
                let s = type_i_h_sum(&a, &alpha, v, w, n, HRange::upto(h), Congruence::OneMod4)?;
                let rhs = h_linear_rhs(n as f64, v as f64, q, h as f64, eps);
                let mut params = base.to_vec();
                params.extend([("H", h as f64), ("trivial", s.trivial)]);
                BoundReport::new(id, s.total, rhs, &params)
            } else {
                let cong = if id == "linear" { Congruence::None } else { Congruence::OneMod4 };
                let s = type_i_sum(&a, &alpha, v, w, n, cong)?;
                let mut params = base.to_vec();
                params.extend([("H", 1.0), ("trivial", s.trivial)]);
                BoundReport::new(id, s.value.norm(), linear_rhs(n as f64, v as f64, q, eps), &params)
            }
        }
        "bilinear1" | "hbilinear" => {
            let alpha = p.angle("alpha", Angle::golden())?;
            let n = p.require_count("N")?;
            let v = p.count("V", bilinear_v(n))?;
            let w = p.count("W", matching_w(n, v))?;
            let q = best_approximation(&alpha, n.max(1))?.q as f64;
            let a = CoeffSeq::random((2 * v) as usize, seed);
            let b = CoeffSeq::random((2 * w) as usize, seed.wrapping_add(1));
            let (range, h) = if id == "bilinear1" {
                (HRange::upto(1), 1)
            } else {
                let h = p.count("H", 4)?;
                (HRange::dyadic(h), h)
            };
            let s = type_ii_sum(&a, &b, &alpha, v, w, n, range)?;
            let (nf, wf, hf) = (n as f64, w as f64, h as f64);
            let rhs = if id == "bilinear1" {
                bilinear1_rhs(nf, wf, q, eps)
            } else {
                bilinear_rhs_min(nf, wf, hf, q, eps)
            };
            BoundReport::new(
                id,
                s.total,
                rhs,
                &[
                    ("N", nf),
                    ("V", v as f64),
                    ("W", wf),
                    ("H", hf),
                    ("q", q),
                    ("eps", eps),
                    ("bound", choose_bilinear_bound(v as f64, wf, hf, nf) as f64),
                    ("trivial", s.trivial),
                ],
            )
        }
        "vino" => {
            let alpha = p.angle("alpha", Angle::golden())?;
            let x = p.require_real("X")?;
            let y = p.require_real("Y")?;
            if x < 1.0 {
                return Err(Error::Domain("X must be at least 1".into()));
            }
            let q = best_approximation(&alpha, x.floor() as u64)?.q;
            let lhs = vinogradov_sum(&alpha, x, y)?;
            BoundReport::new(
                id,
                lhs,
                vinogradov_bound_rhs(x, y, q),
                &[("X", x), ("Y", y), ("q", q as f64), ("trivial", x.floor() * y)],
            )
        }
        "kernel" => {
            let x = p.require_real("x")?;
            let t = p.require_real("T")?;
            let beta = p.require_real("beta")?;
            let k = fourier_cutoff_kernel(x, t, beta)?;
            let target = if k.indicator { 1.0 } else { 0.0 };
            BoundReport::new(
                id,
                (k.estimate - target).abs(),
                k.err_allowance,
                &[("x", x), ("T", t), ("beta", beta), ("estimate", k.estimate), ("trivial", k.err_allowance)],
            )
        }
        "kernel_l1" => {
            let x = p.require_real("x")?;
            let t = p.require_real("T")?;
            let k = kernel_l1(x, t)?;
            BoundReport::new(id, k.integral, k.scale, &[("x", x), ("T", t)])
        }
        _ => Err(Error::Usage(format!(
            "unknown lemma id `{id}` (expected one of {})",
            LEMMA_IDS.join(", ")
        ))),
    }
}

/// Exact-bound violations in a row: `lhs` above its `trivial` parameter.
pub fn row_violation(row: &BoundReport) -> Option<String> {
    let t = row.param("trivial")?;
    (row.lhs > t * (1.0 + 1e-12) + 1e-9).then(|| {
        format!(
            "{}: lhs {} exceeds exact bound {} (params {:?})",
            row.lemma_id, row.lhs, t, row.params
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(s: &str) -> Params {
        s.parse().unwrap()
    }

    #[test]
    fn count_parsing() {
        assert_eq!(parse_count("1e6").unwrap(), 1_000_000);
        assert_eq!(parse_count(" 42 ").unwrap(), 42);
        assert_eq!(parse_count_list("1e4,1e5, 1e6").unwrap(), vec![10_000, 100_000, 1_000_000]);
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(matches!(parse_count("abc"), Err(Error::Usage(_))));
    }

    #[test]
    fn params_parsing() {
        let p = params("N=1e3, alpha=rat:1/3,eps=0.1");
        assert_eq!(p.require_count("N").unwrap(), 1000);
        assert_eq!(p.angle("alpha", Angle::ZERO).unwrap(), Angle::rational(1, 3).unwrap());
        assert_eq!(p.real("eps", 0.0).unwrap(), 0.1);
        assert!("N".parse::<Params>().is_err());
        assert!(p.require_count("W").is_err());
    }

    #[test]
    fn every_lemma_runs() {
        let cases = [
            ("linear", "N=2000"),
            ("linear_cong", "N=2000,alpha=quad:sqrt2"),
            ("hlinear", "N=2000,H=3"),
            ("bilinear1", "N=3000"),
            ("hbilinear", "N=3000,H=2"),
            ("vino", "X=1000,Y=10"),
            ("kernel", "x=1,T=100,beta=0.75"),
            ("kernel_l1", "x=2,T=100"),
        ];
        for (id, p) in cases {
            let r = run_lemma(id, &params(p)).unwrap();
            assert_eq!(r.lemma_id, id);
            assert!(r.rhs > 0.0 && r.lhs >= 0.0);
            assert!(row_violation(&r).is_none(), "{r:?}");
        }
        assert!(matches!(run_lemma("nope", &Params::default()), Err(Error::Usage(_))));
    }

    #[test]
    fn zero_angle_linear_sum_is_trivial() {
        let r = run_lemma("linear", &params("N=1000,alpha=rat:0/1")).unwrap();
        assert!(r.lhs > 0.0);
        // All phases are 1 but the random coefficients still cancel partly.
        assert!(r.lhs <= r.param("trivial").unwrap());
    }
}
