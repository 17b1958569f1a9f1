//! Experiment configuration, the fixed desk-scale grids, and suite reports.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::arith::Angle;
use crate::error::{Error, Result};
use crate::expsum::{run_theorem_experiment, TheoremKind};
use crate::lemmas::{row_violation, run_lemma, Params};
use crate::numtheory::isqrt;
use crate::quadform::{bound4_check, count_m3, m3_bound_rhs, Method};
use crate::report::{sort_rows, write_csv, BoundReport};
use crate::sieve::{sieve, SequenceKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Theorem1,
    Theorem2,
    Lemmas,
    Quadforms,
    All,
}

fn gaussian() -> SequenceKind {
    SequenceKind::Gaussian
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    #[serde(default)]
    pub alpha_specs: Vec<String>,
    #[serde(default, rename = "N_list", alias = "n_list")]
    pub n_list: Vec<u64>,
    #[serde(default, rename = "H_list", alias = "h_list")]
    pub h_list: Vec<u64>,
    #[serde(default)]
    pub eps: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_path: Option<String>,
    /// Worker threads; 0 uses the rayon default.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "gaussian")]
    pub kind: SequenceKind,
}

impl ExperimentConfig {
    pub fn new(suite: Suite) -> ExperimentConfig {
        ExperimentConfig {
            suite,
            alpha_specs: Vec::new(),
            n_list: Vec::new(),
            h_list: Vec::new(),
            eps: 0.0,
            seed: 0,
            out_path: None,
            threads: 0,
            kind: SequenceKind::Gaussian,
        }
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let c: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Usage(format!("invalid experiment config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    /// Which lists each suite needs: alphas, N values, H values.
    fn needs(&self) -> (bool, bool, bool) {
        match self.suite {
            Suite::Theorem1 => (true, true, false),
            Suite::Theorem2 | Suite::Lemmas | Suite::All => (true, true, true),
            Suite::Quadforms => (false, true, true),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(Error::Usage(m));
        let (alphas, ns, hs) = self.needs();
        if alphas && self.alpha_specs.is_empty() {
            return usage("alpha_specs must be non-empty for this suite".into());
        }
        if ns && self.n_list.is_empty() {
            return usage("N_list must be non-empty for this suite".into());
        }
        if hs && self.h_list.is_empty() {
            return usage("H_list must be non-empty for this suite".into());
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return usage(format!("N = {n} is below 2"));
        }
        if self.h_list.contains(&0) {
            return usage("H values must be at least 1".into());
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return usage(format!("eps = {} must be a non-negative number", self.eps));
        }
        for s in &self.alpha_specs {
            s.parse::<Angle>()?;
        }
        Ok(())
    }

    fn angles(&self) -> Result<Vec<Angle>> {
        self.alpha_specs.iter().map(|s| s.parse()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub meta: Meta,
    pub rows: Vec<BoundReport>,
    /// Invariant failures detected while running.
    pub violations: Vec<String>,
}

impl SuiteReport {
    /// The rows as JSON: everything except the run metadata.
    pub fn body_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rows)?)
    }

    /// Write the JSON report to `path` and the CSV rows next to it.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        let csv_path = path.with_extension("csv");
        write_csv(&self.rows, fs::File::create(&csv_path)?)?;
        Ok(csv_path)
    }
}

/// Run `f` on a pool with `threads` workers (0: rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `X in {1e3, 1e4, 1e5, 1e6}`, `Y in {10, X}` and 25 angles: `h sqrt 2`,
/// `h golden` for `h = 1..5`, and 15 rationals next to golden-ratio
/// convergents. 200 instances.
pub fn vino_grid() -> Vec<Params> {
    let mut angles: Vec<Angle> = Vec::new();
    for h in 1..=5 {
        angles.push(Angle::sqrt2_minus_1().scale(h));
        angles.push(Angle::golden().scale(h));
    }
    let golden = Angle::golden().to_f64();
    for q in [
        7u64, 13, 31, 89, 101, 144, 377, 1009, 2584, 6765, 10007, 46368, 100003, 317811, 1000003,
    ] {
        let a = (q as f64 * golden).round() as i128 + 1;
        angles.push(Angle::rational(a, q).expect("positive denominator"));
    }
    let mut out = Vec::new();
    for x in [1e3, 1e4, 1e5, 1e6] {
        for y in [10.0, x] {
            for alpha in &angles {
                let mut p = Params::default();
                p.set("alpha", alpha);
                p.set("X", x);
                p.set("Y", y);
                out.push(p);
            }
        }
    }
    out
}

/// 20 points: `T in {1e2, 1e3}` against ten `(x, beta)` pairs, inside and
/// outside `(x/2, x]`.
pub fn kernel_grid() -> Vec<Params> {
    let pairs = [
        (1.0, 0.75),
        (1.0, 3.0),
        (1.0, 0.25),
        (2.0, 1.5),
        (2.0, 0.6),
        (5.0, 4.0),
        (5.0, 7.5),
        (10.0, 6.0),
        (10.0, 3.0),
        (14.0, 20.0),
    ];
    let mut out = Vec::new();
    for t in [1e2, 1e3] {
        for (x, beta) in pairs {
            let mut p = Params::default();
            p.set("x", x);
            p.set("T", t);
            p.set("beta", beta);
            out.push(p);
        }
    }
    out
}

/// `(x, T)` pairs for the L1 bound of the kernel.
pub fn kernel_l1_grid() -> Vec<Params> {
    let mut out = Vec::new();
    for x in [0.5, 1.0, 2.0, 5.0, 14.0] {
        for t in [1e2, 1e3] {
            let mut p = Params::default();
            p.set("x", x);
            p.set("T", t);
            out.push(p);
        }
    }
    out
}

/// `(H, P)` boxes where both quaternary counters run.
pub const M3_GRID: [(u64, u64); 4] = [(1, 2), (2, 4), (4, 4), (2, 8)];

fn theorem_rows(config: &ExperimentConfig, kind: TheoremKind) -> Result<Vec<BoundReport>> {
    let n_max = *config.n_list.iter().max().expect("validated");
    let seq = sieve(config.kind, n_max)?;
    let mut rows = Vec::new();
    for alpha in config.angles()? {
        let mut part = run_theorem_experiment(kind, &seq, &alpha, &config.n_list, &config.h_list, config.eps)?;
        for r in &mut part {
            r.params.insert("alpha".into(), alpha.to_f64());
        }
        rows.extend(part);
    }
    Ok(rows)
}

fn lemma_rows(config: &ExperimentConfig) -> Result<Vec<BoundReport>> {
    let mut rows = Vec::new();
    for (spec, alpha) in config.alpha_specs.iter().zip(config.angles()?) {
        for &n in &config.n_list {
            let mut p = Params::default();
            p.set("alpha", spec);
            p.set("N", n);
            p.set("eps", config.eps);
            p.set("seed", config.seed);
            let mut instance = Vec::new();
            for id in ["linear", "linear_cong", "bilinear1"] {
                instance.push(run_lemma(id, &p)?);
            }
            for &h in &config.h_list {
                p.set("H", h);
                for id in ["hlinear", "hbilinear"] {
                    instance.push(run_lemma(id, &p)?);
                }
            }
            for r in &mut instance {
                r.params.insert("alpha".into(), alpha.to_f64());
            }
            rows.extend(instance);
        }
    }
    for p in vino_grid() {
        rows.push(run_lemma("vino", &p)?);
    }
    for p in kernel_grid() {
        rows.push(run_lemma("kernel", &p)?);
    }
    for p in kernel_l1_grid() {
        rows.push(run_lemma("kernel_l1", &p)?);
    }
    Ok(rows)
}

fn quadform_rows(config: &ExperimentConfig, violations: &mut Vec<String>) -> Result<Vec<BoundReport>> {
    let mut rows = Vec::new();
    for &n in &config.n_list {
        for &h in &config.h_list {
            rows.push(bound4_check(n, isqrt(n).max(1), h, config.eps)?);
        }
    }
    for (h, p) in M3_GRID {
        let hashed = count_m3(h, p, true, Method::Hashed)?.count;
        let brute = count_m3(h, p, true, Method::BruteForce)?.count;
        if hashed != brute {
            violations.push(format!("m3: hashed {hashed} != brute force {brute} at H = {h}, P = {p}"));
        }
        rows.push(BoundReport::new(
            "m3",
            hashed as f64,
            m3_bound_rhs(h as f64, p as f64, config.eps),
            &[("H", h as f64), ("P", p as f64), ("eps", config.eps)],
        )?);
    }
    Ok(rows)
}

fn run_rows(config: &ExperimentConfig) -> Result<(Vec<BoundReport>, Vec<String>)> {
    let mut violations = Vec::new();
    let mut rows = Vec::new();
    let suite = config.suite;
    if matches!(suite, Suite::Theorem1 | Suite::All) {
        rows.extend(theorem_rows(config, TheoremKind::Thm1)?);
    }
    if matches!(suite, Suite::Theorem2 | Suite::All) {
        rows.extend(theorem_rows(config, TheoremKind::Thm2)?);
    }
    if matches!(suite, Suite::Lemmas | Suite::All) {
        rows.extend(lemma_rows(config)?);
    }
    if matches!(suite, Suite::Quadforms | Suite::All) {
        rows.extend(quadform_rows(config, &mut violations)?);
    }
    violations.extend(rows.iter().filter_map(row_violation));
    sort_rows(&mut rows);
    Ok((rows, violations))
}

/// Validate the config and run the selected suite on its own thread pool.
pub fn run_suite(config: &ExperimentConfig) -> Result<SuiteReport> {
    config.validate()?;
    let (rows, violations) = with_threads(config.threads, || run_rows(config))??;
    Ok(SuiteReport {
        meta: Meta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            threads: config.threads,
            config: config.clone(),
        },
        rows,
        violations,
    })
}
