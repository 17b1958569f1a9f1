//! Exact counts for diagonal binary and quaternary quadratic equations, and
//! the upper bounds they are compared against.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::numtheory::{exact_sqrt, factorize, gcd, mobius_table};
use crate::report::BoundReport;

/// Largest pair-sum table (`distinct values^2`) built by the hashed counters.
pub const PAIR_TABLE_CAP: u64 = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    BruteForce,
    Hashed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormCountResult {
    pub count: u64,
    /// The box and coefficient parameters of the instance.
    pub params: BTreeMap<String, i64>,
    pub coprime: bool,
    pub method: Method,
}

fn result(count: u64, params: &[(&str, i64)], coprime: bool, method: Method) -> FormCountResult {
    FormCountResult {
        count,
        params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        coprime,
        method,
    }
}

/// Solutions of `a x^2 + b y^2 = c` with `1 <= x, y <= P`.
pub fn count_binary(a: i64, b: i64, c: i64, p: u64, method: Method) -> Result<FormCountResult> {
    if a == 0 || b == 0 || c == 0 {
        return domain("count_binary needs abc != 0");
    }
    let (a, b, c) = (a as i128, b as i128, c as i128);
    let count = match method {
        Method::Hashed => (1..=p as i128)
            .filter(|&x| {
                let r = c - a * x * x;
                if r % b != 0 {
                    return false;
                }
                let y2 = r / b;
                y2 >= 1
                    && u64::try_from(y2)
                        .ok()
                        .and_then(exact_sqrt)
                        .is_some_and(|y| y <= p)
            })
            .count() as u64,
        Method::BruteForce => (1..=p as i128)
            .into_par_iter()
            .map(|x| (1..=p as i128).filter(|&y| a * x * x + b * y * y == c).count() as u64)
            .sum(),
    };
    Ok(result(
        count,
        &[("a", a as i64), ("b", b as i64), ("c", c as i64), ("P", p as i64)],
        false,
        method,
    ))
}

/// Largest `count_binary(a, b, c, P)` over `1 <= c <= c_max`.
pub fn max_binary_representations(a: i64, b: i64, c_max: u64, p: u64) -> Result<u64> {
    if a <= 0 || b <= 0 {
        return domain("positive coefficients required");
    }
    let mut reps: HashMap<u64, u64> = HashMap::new();
    for x in 1..=p {
        for y in 1..=p {
            let v = a as u64 * x * x + b as u64 * y * y;
            if v <= c_max {
                *reps.entry(v).or_default() += 1;
            }
        }
    }
    Ok(reps.values().copied().max().unwrap_or(0))
}

/// Multiset of `h m^2` over `H < h <= 2H`, `V < m <= 2V`.
fn window_values(h: u64, v: u64) -> HashMap<i64, u64> {
    let mut map = HashMap::new();
    for hh in h + 1..=2 * h {
        for m in v + 1..=2 * v {
            *map.entry((hh * m * m) as i64).or_default() += 1;
        }
    }
    map
}

/// `R(j; H)`: solutions of `j = h1 m1^2 - h2 m2^2` with `H < h_i <= 2H`,
/// `V < m_i <= 2V`.
pub fn count_r(j: i64, h: u64, v: u64, method: Method) -> Result<FormCountResult> {
    let count = match method {
        Method::Hashed => {
            let vals = window_values(h, v);
            vals.iter()
                .map(|(&t, &c)| c * vals.get(&(t - j)).copied().unwrap_or(0))
                .sum()
        }
        Method::BruteForce => (h + 1..=2 * h)
            .into_par_iter()
            .map(|h1| {
                let mut c = 0;
                for m1 in v + 1..=2 * v {
                    for h2 in h + 1..=2 * h {
                        for m2 in v + 1..=2 * v {
                            if (h1 * m1 * m1) as i64 - (h2 * m2 * m2) as i64 == j {
                                c += 1;
                            }
                        }
                    }
                }
                c
            })
            .sum(),
    };
    Ok(result(count, &[("j", j), ("H", h as i64), ("V", v as i64)], false, method))
}

/// `R(j; H)` for every `j` with a non-zero count.
pub fn r_table(h: u64, v: u64) -> BTreeMap<i64, u64> {
    let vals = window_values(h, v);
    let mut out = BTreeMap::new();
    for (&t1, &c1) in &vals {
        for (&t2, &c2) in &vals {
            *out.entry(t1 - t2).or_default() += c1 * c2;
        }
    }
    out
}

/// `sum_s #{(t1, t2) : t1 + t2 = s}^2` for a value multiset.
fn additive_energy(vals: &HashMap<i64, u64>) -> Result<u64> {
    let d = vals.len() as u64;
    if d * d > PAIR_TABLE_CAP {
        return Err(Error::Cap(format!("{d} distinct values: pair table above {PAIR_TABLE_CAP}")));
    }
    let mut pairs: HashMap<i64, u64> = HashMap::with_capacity((d * d / 2) as usize);
    for (&t1, &c1) in vals {
        for (&t2, &c2) in vals {
            *pairs.entry(t1 + t2).or_default() += c1 * c2;
        }
    }
    Ok(pairs.values().map(|&c| c * c).sum())
}

/// All solutions, coprime or not, via the additive energy of `h m^2`.
fn m3_all_hashed(h: u64, p: u64) -> Result<u64> {
    let (h, p) = (h as i64, p as i64);
    let mut vals: HashMap<i64, u64> = HashMap::new();
    for hh in -h..=h {
        for m in -p..=p {
            *vals.entry(hh * m * m).or_default() += 1;
        }
    }
    additive_energy(&vals)
}

/// `h4 m4^2 = r` with `|h4| <= H`, `m4` of absolute value `am4`.
fn h4_solutions(r: i64, am4: i64, h: i64) -> u64 {
    if am4 == 0 {
        if r == 0 {
            (2 * h + 1) as u64
        } else {
            0
        }
    } else {
        let sq = am4 * am4;
        u64::from(r % sq == 0 && (r / sq).abs() <= h)
    }
}

/// Enumerate `|m_i|` with sign multiplicity and `h1, h2, h3`, solving for `h4`.
fn m3_brute(h: u64, p: u64, coprime: bool) -> u64 {
    let (h, p) = (h as i64, p as i64);
    let weight = |m: i64| if m == 0 { 1u64 } else { 2 };
    (0..=p)
        .into_par_iter()
        .map(|m1| {
            let mut total = 0u64;
            for m2 in 0..=p {
                for m3 in 0..=p {
                    for m4 in 0..=p {
                        let g = gcd(gcd(m1 as u64, m2 as u64), gcd(m3 as u64, m4 as u64));
                        if coprime && g != 1 {
                            continue;
                        }
                        let w = weight(m1) * weight(m2) * weight(m3) * weight(m4);
                        let mut c = 0;
                        for h1 in -h..=h {
                            for h2 in -h..=h {
                                let left = h1 * m1 * m1 + h2 * m2 * m2;
                                for h3 in -h..=h {
                                    c += h4_solutions(left - h3 * m3 * m3, m4, h);
                                }
                            }
                        }
                        total += w * c;
                    }
                }
            }
            total
        })
        .sum()
}

/// `M3(H, P)`: solutions of `h1 m1^2 + h2 m2^2 = h3 m3^2 + h4 m4^2` with
/// `h in [-H, H]^4` (zero included) and `m in [-P, P]^4`, optionally with
/// `gcd(m1, m2, m3, m4) = 1`.
///
/// The hashed coprime count uses Moebius inversion over the common divisor
/// of the `m_i`, with the all-zero `m` vector (gcd 0) removed from every term.
pub fn count_m3(h: u64, p: u64, coprime: bool, method: Method) -> Result<FormCountResult> {
    let count = match method {
        Method::BruteForce => m3_brute(h, p, coprime),
        Method::Hashed if !coprime => m3_all_hashed(h, p)?,
        Method::Hashed => {
            let zero_m = (2 * h + 1).pow(4) as i64;
            let mu = mobius_table(p as usize);
            let mut acc: i64 = 0;
            for d in 1..=p {
                let s = mu[d as usize] as i64;
                if s != 0 {
                    acc += s * (m3_all_hashed(h, p / d)? as i64 - zero_m);
                }
            }
            u64::try_from(acc).map_err(|_| Error::Domain("negative inclusion-exclusion total".into()))?
        }
    };
    Ok(result(count, &[("H", h as i64), ("P", p as i64)], coprime, method))
}

/// `H^3 P^2 + H^5 P^{2/3} + (HP)^{2 + eps}`.
pub fn m3_bound_rhs(h: f64, p: f64, eps: f64) -> f64 {
    h.powi(3) * p * p + h.powi(5) * p.powf(2.0 / 3.0) + (h * p).powf(2.0 + eps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BhbBound {
    pub delta_q: u128,
    pub norm_q: u64,
    pub delta_bad: u128,
    pub rhs: f64,
    /// `delta_bad^20 <= P`; the bound is only claimed when this holds.
    pub hypothesis_ok: bool,
}

/// The quaternary-form bound
/// `D_bad^{1/4} (|Q|^4 / D_Q)^{5/8} (P^2 / D_Q^{1/4} + P^{4/3}) log(2P) log(2 D_Q) D_bad^eps`.
pub fn bhb_bound_rhs(hs: [u64; 4], p: f64, eps: f64) -> Result<BhbBound> {
    if hs.contains(&0) {
        return domain("coefficients must be positive");
    }
    if !(p >= 1.0) {
        return domain("P must be at least 1");
    }
    let mut exps: BTreeMap<u64, u32> = BTreeMap::new();
    for &x in &hs {
        for (q, e) in factorize(x) {
            *exps.entry(q).or_default() += e;
        }
    }
    let delta_q: u128 = hs.iter().map(|&x| x as u128).product();
    let delta_bad: u128 = exps
        .iter()
        .filter(|&(_, &e)| e >= 2)
        .map(|(&q, &e)| (q as u128).pow(e))
        .product();
    let norm_q = *hs.iter().max().expect("four entries");
    let (dq, db, nq) = (delta_q as f64, delta_bad as f64, norm_q as f64);
    let rhs = db.powf(0.25)
        * (nq.powi(4) / dq).powf(5.0 / 8.0)
        * (p * p / dq.powf(0.25) + p.powf(4.0 / 3.0))
        * (2.0 * p).ln()
        * (2.0 * dq).ln()
        * db.powf(eps);
    Ok(BhbBound {
        delta_q,
        norm_q,
        delta_bad,
        rhs,
        hypothesis_ok: 20.0 * db.ln() <= p.ln(),
    })
}

/// `sum_{0 < |j| <= L'} R(j; H)^2` against `H^3 (N/W)^{2+eps} + H^5 (N/W)^{2/3}`,
/// with `V = floor(N / 2W)`. Every non-zero difference of window values has
/// `|j| < 8 H V^2 <= L'`, so the sum runs over all `j != 0`.
pub fn bound4_check(n: u64, w: u64, h: u64, eps: f64) -> Result<BoundReport> {
    if w == 0 || w > n || h == 0 {
        return domain("need 1 <= W <= N and H >= 1");
    }
    let v = n / (2 * w);
    let vals = window_values(h, v);
    let energy = additive_energy(&vals)?;
    let r0: u64 = vals.values().map(|&c| c * c).sum();
    let lhs = (energy - r0 * r0) as f64;
    let ratio_nw = n as f64 / w as f64;
    let hf = h as f64;
    let rhs = hf.powi(3) * ratio_nw.powf(2.0 + eps) + hf.powi(5) * ratio_nw.powf(2.0 / 3.0);
    BoundReport::new(
        "bound4",
        lhs,
        rhs,
        &[("N", n as f64), ("W", w as f64), ("H", hf), ("V", v as f64), ("eps", eps)],
    )
}
