//! Bound reports: one lemma or theorem instance with its measured left-hand
//! side, the evaluated right-hand side and their ratio.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lemma_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub params: BTreeMap<String, f64>,
}

impl BoundReport {
    pub fn new(lemma_id: &str, lhs: f64, rhs: f64, params: &[(&str, f64)]) -> Result<BoundReport> {
        if !(rhs > 0.0 && rhs.is_finite()) {
            return domain(format!("{lemma_id}: right-hand side must be positive, got {rhs}"));
        }
        Ok(BoundReport {
            lemma_id: lemma_id.to_string(),
            lhs,
            rhs,
            ratio: lhs / rhs,
            params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        })
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    fn sort_key(&self, key: &str) -> f64 {
        self.param(key).unwrap_or(f64::NEG_INFINITY)
    }
}

/// Order rows by `(lemma_id, N, q, H)`; the sort is stable.
pub fn sort_rows(rows: &mut [BoundReport]) {
    rows.sort_by(|a, b| {
        a.lemma_id
            .cmp(&b.lemma_id)
            .then_with(|| cmp_f64(a.sort_key("N"), b.sort_key("N")))
            .then_with(|| cmp_f64(a.sort_key("q"), b.sort_key("q")))
            .then_with(|| cmp_f64(a.sort_key("H"), b.sort_key("H")))
    });
}

fn cmp_f64(a: f64, b: f64) -> Ordering {
    a.total_cmp(&b)
}

/// CSV with one column per parameter name appearing in any row.
pub fn write_csv<W: Write>(rows: &[BoundReport], w: W) -> Result<()> {
    let keys: BTreeSet<&str> = rows
        .iter()
        .flat_map(|r| r.params.keys().map(String::as_str))
        .collect();
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["lemma_id", "lhs", "rhs", "ratio"];
    header.extend(keys.iter().copied());
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.lemma_id.clone(), r.lhs.to_string(), r.rhs.to_string(), r.ratio.to_string()];
        rec.extend(keys.iter().map(|k| r.param(k).map(|v| v.to_string()).unwrap_or_default()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
