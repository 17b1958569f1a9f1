use serde::Serialize;

use crate::error::{domain, Result};

/// Constant in `|estimate - indicator| <= C / (T min(|beta - x|, |beta - x/2|))`.
///
/// The estimate equals `(1/pi) [Si((x+b)T) + Si((x-b)T) - Si((x/2+b)T) - Si((x/2-b)T)]`
/// and `|Si(+-inf) - Si(y)| <= 2/|y|`; each of the four tails is at most
/// `2 / (T d)` with `d` the distance to the nearer breakpoint.
pub const C_KERNEL: f64 = 8.0 / std::f64::consts::PI;

/// Absolute tolerance of the quadrature, added to the analytic allowance.
pub const QUAD_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelEstimate {
    pub estimate: f64,
    pub indicator: bool,
    pub err_allowance: f64,
}

impl KernelEstimate {
    pub fn within_allowance(&self) -> bool {
        let target = if self.indicator { 1.0 } else { 0.0 };
        (self.estimate - target).abs() <= self.err_allowance
    }
}

/// `(sin(xt) - sin(xt/2)) / (pi t)`, with its series near `t = 0`.
fn kernel(x: f64, t: f64) -> f64 {
    let xt = x * t;
    let v = if xt.abs() < 1e-3 {
        let t2 = t * t;
        x / 2.0 - 7.0 * x.powi(3) * t2 / 48.0 + 31.0 * x.powi(5) * t2 * t2 / 3840.0
    } else {
        (xt.sin() - (xt / 2.0).sin()) / t
    };
    v / std::f64::consts::PI
}

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `int_0^T f`, on panels of width at most `1 / freq` (a sixth of the
/// shortest period), each integrated adaptively.
fn panel_integral<F: Fn(f64) -> f64>(f: F, t_max: f64, freq: f64, tol: f64) -> f64 {
    let panels = (t_max * freq).ceil().max(1.0) as u64;
    let width = t_max / panels as f64;
    let panel_tol = tol / panels as f64;
    let mut acc = crate::summation::NeumaierSum::new();
    for i in 0..panels {
        let a = i as f64 * width;
        let b = if i + 1 == panels { t_max } else { a + width };
        acc.add(adaptive_simpson(&f, a, b, panel_tol));
    }
    acc.value()
}

/// `int_{-T}^{T} e^{i beta t} (sin(xt) - sin(xt/2)) / (pi t) dt`, which
/// approximates the indicator of `x/2 < beta <= x`.
pub fn fourier_cutoff_kernel(x: f64, t_max: f64, beta: f64) -> Result<KernelEstimate> {
    if !(x > 0.0 && t_max > 0.0 && beta > 0.0) {
        return domain("x, T and beta must be positive");
    }
    let dist = (beta - x).abs().min((beta - x / 2.0).abs());
    if dist < 1e-6 * x {
        return domain(format!("beta = {beta} is within 1e-6 x of a breakpoint of x = {x}"));
    }
    // The sine part of e^{i beta t} is odd against an even kernel.
    let half = panel_integral(|t| (beta * t).cos() * kernel(x, t), t_max, x + beta, QUAD_TOL / 2.0);
    Ok(KernelEstimate {
        estimate: 2.0 * half,
        indicator: x / 2.0 < beta && beta <= x,
        err_allowance: C_KERNEL / (t_max * dist) + QUAD_TOL,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelL1 {
    /// `int_{-T}^{T} |kernel|`
    pub integral: f64,
    /// `x + log max(1, T)`
    pub scale: f64,
    pub ratio: f64,
}

pub fn kernel_l1(x: f64, t_max: f64) -> Result<KernelL1> {
    if !(x > 0.0 && t_max > 0.0) {
        return domain("x and T must be positive");
    }
    let integral = 2.0 * panel_integral(|t| kernel(x, t).abs(), t_max, x, 1e-7);
    let scale = x + t_max.max(1.0).ln();
    Ok(KernelL1 {
        integral,
        scale,
        ratio: integral / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        (1..=n)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let k = k as f64;
                        (p0, p1) = (p1, ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k);
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    }

    /// `Si(y)`: composite 16-point Gauss-Legendre on unit panels.
    fn si(y: f64) -> f64 {
        if y < 0.0 {
            return -si(-y);
        }
        let gl = gauss_legendre(16);
        let panels = y.ceil().max(1.0) as usize;
        let h = y / panels as f64;
        let mut sum = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for &(x, w) in &gl {
                let t = mid + 0.5 * h * x;
                sum += 0.5 * h * w * t.sin() / t;
            }
        }
        sum
    }

    fn closed_form(x: f64, t: f64, b: f64) -> f64 {
        (si((x + b) * t) + si((x - b) * t) - si((x / 2.0 + b) * t) - si((x / 2.0 - b) * t)) / std::f64::consts::PI
    }

    #[test]
    fn si_reference_values() {
        assert!((si(1.0) - 0.946_083_070_367_183).abs() < 1e-13);
        assert!((si(10.0) - 1.658_347_594_218_874).abs() < 1e-13);
        assert!((si(100.0) - 1.562_225_466_889_056).abs() < 1e-12);
    }

    #[test]
    fn quadrature_matches_sine_integral_form() {
        for (x, t, b) in [(1.0, 10.0, 0.75), (2.0, 100.0, 6.0), (3.0, 50.0, 1.0), (14.0, 20.0, 10.0)] {
            let k = fourier_cutoff_kernel(x, t, b).unwrap();
            assert!((k.estimate - closed_form(x, t, b)).abs() < 1e-7, "{x} {t} {b}");
        }
    }

    #[test]
    fn examples() {
        for t in [1e2, 1e3] {
            let k = fourier_cutoff_kernel(1.0, t, 3.0).unwrap();
            assert!(!k.indicator && k.within_allowance(), "{k:?}");
        }
        let k = fourier_cutoff_kernel(1.0, 1e3, 0.75).unwrap();
        assert!(k.indicator && k.within_allowance(), "{k:?}");
        let k = fourier_cutoff_kernel(1.0, 1e-3, 0.75).unwrap();
        assert!(k.err_allowance > 1e3);
        assert!(fourier_cutoff_kernel(1.0, 10.0, 1.0).is_err());
        assert!(fourier_cutoff_kernel(1.0, 10.0, 0.5).is_err());
    }

    #[test]
    fn l1_grows_like_log() {
        let a = kernel_l1(1.0, 10.0).unwrap();
        let b = kernel_l1(1.0, 1000.0).unwrap();
        assert!(b.integral > a.integral);
        assert!(a.ratio < 2.0 && b.ratio < 2.0);
    }
}
