use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use siftsum::arith::Angle;
use siftsum::bilinear::{eval_decomposition_terms, CoeffSeq, DecompositionParams, DecompositionTerms};
use siftsum::diophantine::best_approximation;
use siftsum::expsum::{eval_s, run_theorem_experiment, TheoremKind, Window};
use siftsum::lemmas::{parse_count, parse_count_list, row_violation, run_lemma, Params};
use siftsum::quadform::{bhb_bound_rhs, bound4_check, count_binary, count_m3, count_r, FormCountResult, Method};
use siftsum::report::{write_csv, BoundReport};
use siftsum::sieve::{sieve, sieve_gaussian, SequenceKind, SieveMode};
use siftsum::suite::{run_suite, ExperimentConfig, Suite};
use siftsum::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "siftsum", version, about = "Exponential sums over sifted sequences and checks of their bounds")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "SIFTSUM_THREADS")]
    threads: Option<usize>,
    /// Seed for random coefficient sequences.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Gaussian,
    Loeschian,
    Both,
}

impl From<KindArg> for SequenceKind {
    fn from(k: KindArg) -> SequenceKind {
        match k {
            KindArg::Gaussian => SequenceKind::Gaussian,
            KindArg::Loeschian => SequenceKind::Loeschian,
            KindArg::Both => SequenceKind::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WindowArg {
    Full,
    Dyadic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Hashed,
    Brute,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum QuadOp {
    Binary,
    #[value(name = "R")]
    R,
    #[value(name = "M3")]
    M3,
    Bound4,
    Bhb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Theorem1,
    Theorem2,
    Lemmas,
    Quadforms,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::Theorem1 => Suite::Theorem1,
            SuiteArg::Theorem2 => Suite::Theorem2,
            SuiteArg::Lemmas => Suite::Lemmas,
            SuiteArg::Quadforms => Suite::Quadforms,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sieve a sequence up to a limit; writes a packed bitmap, or members as CSV.
    Sieve {
        #[arg(long, value_enum, default_value = "gaussian")]
        kind: KindArg,
        #[arg(long)]
        limit: String,
        /// Truncated sifting by primes p < z, p = 3 (mod 4) (gaussian only).
        #[arg(long)]
        z: Option<f64>,
    },
    /// Evaluate S(alpha; N).
    Sum {
        #[arg(long, value_enum, default_value = "gaussian")]
        kind: KindArg,
        #[arg(long)]
        alpha: String,
        #[arg(long = "N")]
        n: String,
        #[arg(long, value_enum, default_value = "full")]
        window: WindowArg,
    },
    /// Best rational approximation with denominator at most Q.
    Approx {
        #[arg(long)]
        alpha: String,
        #[arg(long = "Q")]
        q: String,
    },
    /// Theorem bound reports over a list of N.
    Verify {
        #[arg(long, value_parser = ["1", "2"])]
        theorem: String,
        #[arg(long)]
        alpha: String,
        #[arg(long = "N-list")]
        n_list: String,
        /// H values for theorem 2 (comma-separated).
        #[arg(long = "H", default_value = "16")]
        h: String,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, value_enum, default_value = "gaussian")]
        kind: KindArg,
    },
    /// The three decomposition terms with their trivial bounds.
    Decompose {
        #[arg(long)]
        alpha: String,
        #[arg(long = "N")]
        n: String,
        #[arg(long = "M")]
        m: String,
        #[arg(long)]
        z: f64,
        /// Lower end of the type-II variable (defaults to M).
        #[arg(long = "M0")]
        m0: Option<String>,
        /// Use random unimodular coefficient sequences instead of the defaults.
        #[arg(long)]
        random_coeffs: bool,
    },
    /// One lemma instance as a bound report row.
    Lemma {
        #[arg(long)]
        id: String,
        #[arg(long, default_value = "")]
        params: String,
    },
    /// Quadratic-form counts and bound components.
    Quadform {
        #[arg(long, value_enum)]
        op: QuadOp,
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long, value_enum, default_value = "hashed")]
        method: MethodArg,
    },
    /// Run an experiment suite, writing a JSON report and a CSV twin.
    Suite {
        /// JSON experiment config; command-line values override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        suite: Option<SuiteArg>,
        #[arg(long = "alpha-list")]
        alpha_list: Option<String>,
        #[arg(long = "N-list")]
        n_list: Option<String>,
        #[arg(long = "H-list")]
        h_list: Option<String>,
        #[arg(long)]
        eps: Option<f64>,
    },
}

/// A command's outcome: text for the output sink and any invariant failures.
struct Outcome {
    text: Vec<u8>,
    violations: Vec<String>,
}

impl Outcome {
    fn ok(text: impl Into<Vec<u8>>) -> Outcome {
        Outcome {
            text: text.into(),
            violations: Vec::new(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = emit(cli.out.as_deref(), &out.text) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            for v in &out.violations {
                eprintln!("invariant violated: {v}");
            }
            ExitCode::from(status(&out))
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// 0 when every invariant held, 2 otherwise.
fn status(out: &Outcome) -> u8 {
    if out.violations.is_empty() {
        0
    } else {
        2
    }
}

fn emit(out: Option<&Path>, text: &[u8]) -> io::Result<()> {
    match out {
        Some(path) if !text.is_empty() => fs::write(path, text),
        Some(_) => Ok(()),
        None => io::stdout().write_all(text),
    }
}

fn angle(s: &str) -> Result<Angle> {
    s.parse()
}

fn init_pool(threads: Option<usize>) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build_global()
        .map_err(|e| Error::Usage(format!("cannot build thread pool: {e}")))
}

fn rows_text(rows: &[BoundReport], format: Option<Format>) -> Result<Vec<u8>> {
    match format {
        Some(Format::Json) => Ok((serde_json::to_string_pretty(rows)? + "\n").into_bytes()),
        _ => {
            let mut buf = Vec::new();
            write_csv(rows, &mut buf)?;
            Ok(buf)
        }
    }
}

fn rows_outcome(rows: Vec<BoundReport>, format: Option<Format>) -> Result<Outcome> {
    let violations = rows.iter().filter_map(row_violation).collect();
    Ok(Outcome {
        text: rows_text(&rows, format)?,
        violations,
    })
}

fn run(cli: &Cli) -> Result<Outcome> {
    if !matches!(cli.command, Command::Suite { .. }) {
        init_pool(cli.threads)?;
    }
    match &cli.command {
        Command::Sieve { kind, limit, z } => cmd_sieve(cli, (*kind).into(), parse_count(limit)?, *z),
        Command::Sum { kind, alpha, n, window } => {
            let n = parse_count(n)?;
            let seq = sieve((*kind).into(), n)?;
            let window = match window {
                WindowArg::Full => Window::Full,
                WindowArg::Dyadic => Window::Dyadic,
            };
            let s = eval_s(&seq, &angle(alpha)?, n, window)?;
            let mut out = if cli.format == Some(Format::Json) {
                Outcome::ok(serde_json::to_string_pretty(&s)? + "\n")
            } else {
                Outcome::ok(format!(
                    "re,im,abs,terms,err_bound\n{},{},{},{},{}\n",
                    s.value.re,
                    s.value.im,
                    s.abs(),
                    s.terms,
                    s.err_bound
                ))
            };
            if !s.within_trivial_bound() {
                out.violations.push(format!("|S| = {} exceeds {} terms", s.abs(), s.terms));
            }
            Ok(out)
        }
        Command::Approx { alpha, q } => {
            let r = best_approximation(&angle(alpha)?, parse_count(q)?)?;
            Ok(if cli.format == Some(Format::Json) {
                Outcome::ok(serde_json::to_string_pretty(&r)? + "\n")
            } else {
                Outcome::ok(format!("a,q,err,quality\n{},{},{},{}\n", r.a, r.q, r.err, r.quality))
            })
        }
        Command::Verify {
            theorem,
            alpha,
            n_list,
            h,
            eps,
            kind,
        } => {
            let ns = parse_count_list(n_list)?;
            if ns.is_empty() {
                return Err(Error::Usage("empty N list".into()));
            }
            let hs = parse_count_list(h)?;
            let seq = sieve((*kind).into(), *ns.iter().max().expect("non-empty"))?;
            let kind = if theorem == "1" { TheoremKind::Thm1 } else { TheoremKind::Thm2 };
            let rows = run_theorem_experiment(kind, &seq, &angle(alpha)?, &ns, &hs, *eps)?;
            rows_outcome(rows, Some(cli.format.unwrap_or(Format::Json)))
        }
        Command::Decompose {
            alpha,
            n,
            m,
            z,
            m0,
            random_coeffs,
        } => {
            let mut params = DecompositionParams::new(parse_count(n)?, parse_count(m)?, *z)?;
            if let Some(m0) = m0 {
                params.m0 = parse_count(m0)?;
            }
            let alpha = angle(alpha)?;
            let terms = if *random_coeffs {
                let len = params.n as usize;
                let seed = cli.seed.unwrap_or(0);
                eval_decomposition_terms(
                    &params,
                    &alpha,
                    &CoeffSeq::random_unimodular(len, seed),
                    &CoeffSeq::random_unimodular(len, seed + 1),
                    &CoeffSeq::random_unimodular(len, seed + 2),
                )?
            } else {
                DecompositionTerms::with_defaults(&params, &alpha)?
            };
            if cli.format == Some(Format::Json) {
                return Ok(Outcome::ok(serde_json::to_string_pretty(&terms)? + "\n"));
            }
            let mut text = String::from("term,re,im,abs,trivial\n");
            for (name, t) in [("S1", terms.s1), ("S2", terms.s2), ("S3", terms.s3)] {
                text += &format!("{name},{},{},{},{}\n", t.value.re, t.value.im, t.value.norm(), t.trivial);
            }
            Ok(Outcome::ok(text))
        }
        Command::Lemma { id, params } => {
            let mut p: Params = params.parse()?;
            if let Some(seed) = cli.seed {
                p.set("seed", seed);
            }
            rows_outcome(vec![run_lemma(id, &p)?], cli.format)
        }
        Command::Quadform { op, params, method } => cmd_quadform(cli, *op, &params.parse()?, *method),
        Command::Suite {
            config,
            suite,
            alpha_list,
            n_list,
            h_list,
            eps,
        } => {
            let mut c = match config {
                Some(path) => ExperimentConfig::from_json(&fs::read_to_string(path)?)?,
                None => ExperimentConfig::new(
                    (*suite)
                        .ok_or_else(|| Error::Usage("either --config or --suite is required".into()))?
                        .into(),
                ),
            };
            if let Some(s) = suite {
                c.suite = (*s).into();
            }
            if let Some(a) = alpha_list {
                c.alpha_specs = a.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            }
            if let Some(n) = n_list {
                c.n_list = parse_count_list(n)?;
            }
            if let Some(h) = h_list {
                c.h_list = parse_count_list(h)?;
            }
            if let Some(e) = eps {
                c.eps = *e;
            }
            if let Some(s) = cli.seed {
                c.seed = s;
            }
            if let Some(t) = cli.threads {
                c.threads = t;
            }
            if let Some(out) = &cli.out {
                c.out_path = Some(out.display().to_string());
            }
            let out_path = c
                .out_path
                .clone()
                .map(PathBuf::from)
                .ok_or_else(|| Error::Usage("suite needs --out or out_path in the config".into()))?;
            let report = run_suite(&c)?;
            let csv_path = report.write(&out_path)?;
            eprintln!(
                "wrote {} rows to {} and {}",
                report.rows.len(),
                out_path.display(),
                csv_path.display()
            );
            Ok(Outcome {
                text: Vec::new(),
                violations: report.violations,
            })
        }
    }
}

fn cmd_sieve(cli: &Cli, kind: SequenceKind, limit: u64, z: Option<f64>) -> Result<Outcome> {
    let seq = match z {
        Some(z) if kind == SequenceKind::Gaussian => sieve_gaussian(limit, SieveMode::Truncated { z })?,
        Some(_) => return Err(Error::Usage("--z applies to the gaussian sequence only".into())),
        None => sieve(kind, limit)?,
    };
    match cli.format {
        Some(Format::Csv) => {
            let mut buf = Vec::new();
            seq.write_csv(&mut buf)?;
            Ok(Outcome::ok(buf))
        }
        Some(Format::Json) => {
            let members: Vec<u64> = seq.members().collect();
            let v = serde_json::json!({ "limit": limit, "count": members.len(), "members": members });
            Ok(Outcome::ok(serde_json::to_string(&v)? + "\n"))
        }
        None => {
            if cli.out.is_none() {
                return Err(Error::Usage("the binary bitmap needs --out (or use --format csv)".into()));
            }
            let mut buf = Vec::new();
            seq.write_bitmap(&mut buf)?;
            eprintln!("{} members up to {limit}", seq.count());
            Ok(Outcome::ok(buf))
        }
    }
}

fn counted(
    run: impl Fn(Method) -> Result<FormCountResult>,
    method: MethodArg,
) -> Result<(FormCountResult, Vec<String>)> {
    match method {
        MethodArg::Hashed => Ok((run(Method::Hashed)?, Vec::new())),
        MethodArg::Brute => Ok((run(Method::BruteForce)?, Vec::new())),
        MethodArg::Both => {
            let h = run(Method::Hashed)?;
            let b = run(Method::BruteForce)?;
            let v = if h.count == b.count {
                Vec::new()
            } else {
                vec![format!("hashed count {} != brute force {}", h.count, b.count)]
            };
            Ok((h, v))
        }
    }
}

fn count_text(r: &FormCountResult, format: Option<Format>) -> Result<Vec<u8>> {
    if format == Some(Format::Json) {
        return Ok((serde_json::to_string_pretty(r)? + "\n").into_bytes());
    }
    let keys: Vec<&str> = r.params.keys().map(String::as_str).collect();
    let vals: Vec<String> = r.params.values().map(i64::to_string).collect();
    let method = match r.method {
        Method::Hashed => "hashed",
        Method::BruteForce => "bruteforce",
    };
    Ok(format!(
        "count,{},coprime,method\n{},{},{},{}\n",
        keys.join(","),
        r.count,
        vals.join(","),
        r.coprime,
        method
    )
    .into_bytes())
}

fn cmd_quadform(cli: &Cli, op: QuadOp, p: &Params, method: MethodArg) -> Result<Outcome> {
    let (result, violations) = match op {
        QuadOp::Binary => {
            let (a, b, c) = (p.integer("a")?, p.integer("b")?, p.integer("c")?);
            let big_p = p.require_count("P")?;
            counted(|m| count_binary(a, b, c, big_p, m), method)?
        }
        QuadOp::R => {
            let j = p.integer("j")?;
            let (h, v) = (p.require_count("H")?, p.require_count("V")?);
            counted(|m| count_r(j, h, v, m), method)?
        }
        QuadOp::M3 => {
            let (h, big_p) = (p.require_count("H")?, p.require_count("P")?);
            let coprime = p.count("coprime", 0)? != 0;
            counted(|m| count_m3(h, big_p, coprime, m), method)?
        }
        QuadOp::Bound4 => {
            let row = bound4_check(
                p.require_count("N")?,
                p.require_count("W")?,
                p.require_count("H")?,
                p.real("eps", 0.0)?,
            )?;
            return rows_outcome(vec![row], cli.format);
        }
        QuadOp::Bhb => {
            let hs = [
                p.require_count("h1")?,
                p.require_count("h2")?,
                p.require_count("h3")?,
                p.require_count("h4")?,
            ];
            let b = bhb_bound_rhs(hs, p.require_real("P")?, p.real("eps", 0.0)?)?;
            let text = if cli.format == Some(Format::Json) {
                serde_json::to_string_pretty(&b)? + "\n"
            } else {
                format!(
                    "delta_q,norm_q,delta_bad,rhs,hypothesis_ok\n{},{},{},{},{}\n",
                    b.delta_q, b.norm_q, b.delta_bad, b.rhs, b.hypothesis_ok
                )
            };
            return Ok(Outcome::ok(text));
        }
    };
    Ok(Outcome {
        text: count_text(&result, cli.format)?,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn violations_map_to_status_two() {
        let mut out = Outcome::ok("rows");
        assert_eq!(status(&out), 0);
        out.violations.push("lhs above trivial bound".into());
        assert_eq!(status(&out), 2);
    }
}
