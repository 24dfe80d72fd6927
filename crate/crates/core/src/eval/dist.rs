//! Distribution functions needed by the rank tests.

use alloc::vec;
use alloc::vec::Vec;

use super::EvalError;
use crate::math::{erfc, exp, ln, ln_gamma, powi, sqrt};

const SQRT_2: f64 = core::f64::consts::SQRT_2;
/// `1 / sqrt(2 pi)`
const INV_SQRT_TAU: f64 = 0.398_942_280_401_432_7;

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_TAU * exp(-0.5 * z * z)
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> Result<f64, EvalError> {
    if !(a > 0.0) || x.is_nan() {
        return Err(EvalError::Numerical("gamma_q needs a > 0"));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let log_prefix = a * ln(x) - x - ln_gamma(a);
    if x < a + 1.0 {
        // series for P(a, x)
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                return Ok((1.0 - sum * exp(log_prefix)).clamp(0.0, 1.0));
            }
        }
        Err(EvalError::Numerical("gamma series did not converge"))
    } else {
        // continued fraction for Q(a, x), modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                return Ok((exp(log_prefix) * h).clamp(0.0, 1.0));
            }
        }
        Err(EvalError::Numerical("gamma continued fraction did not converge"))
    }
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi2_sf(x: f64, df: f64) -> Result<f64, EvalError> {
    gamma_q(df / 2.0, x / 2.0)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre polynomial.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = crate::math::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    fn new() -> Self {
        let (nodes, weights) = gauss_legendre(16);
        Quadrature { nodes, weights }
    }

    /// Composite rule over `pieces` equal sub-intervals of `[a, b]`.
    fn integrate(&self, a: f64, b: f64, pieces: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = (b - a) / pieces as f64;
        let mut total = 0.0;
        for p in 0..pieces {
            let mid = a + (p as f64 + 0.5) * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                total += w * f(mid + 0.5 * h * x);
            }
        }
        0.5 * h * total
    }
}

/// `P(range of m standard normals <= q)`.
fn range_cdf_normal(quad: &Quadrature, q: f64, m: usize) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let inner = quad.integrate(-8.5, 8.5, 17, |z| {
        let band = normal_cdf(z + q) - normal_cdf(z);
        normal_pdf(z) * powi(band, m as i32 - 1)
    });
    (m as f64 * inner).clamp(0.0, 1.0)
}

/// Distribution function of the studentized range for `m` means and
/// `df` error degrees of freedom (`f64::INFINITY` for a known variance).
pub fn ptukey(q: f64, m: usize, df: f64) -> Result<f64, EvalError> {
    if m < 2 || !(df > 0.0) || q.is_nan() {
        return Err(EvalError::Numerical("ptukey needs m >= 2 and df > 0"));
    }
    let quad = Quadrature::new();
    Ok(ptukey_with(&quad, q, m, df))
}

fn ptukey_with(quad: &Quadrature, q: f64, m: usize, df: f64) -> f64 {
    if df > 25_000.0 {
        return range_cdf_normal(quad, q, m);
    }
    // integrate over s = sqrt(chi2_df / df)
    let spread = 12.0 / sqrt(2.0 * df);
    let lo = (1.0 - spread).max(0.0);
    let hi = 1.0 + spread.max(8.0 / sqrt(df));
    let half = df / 2.0;
    let log_norm = ln(2.0) + half * ln(half) - ln_gamma(half);
    let p = quad.integrate(lo, hi, 24, |s| {
        if s <= 0.0 {
            return 0.0;
        }
        let density = exp(log_norm + (df - 1.0) * ln(s) - half * s * s);
        density * range_cdf_normal(quad, q * s, m)
    });
    p.clamp(0.0, 1.0)
}

/// Quantile of the studentized range: the `q` with `ptukey(q) = p`.
pub fn qtukey(p: f64, m: usize, df: f64) -> Result<f64, EvalError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(EvalError::Numerical("qtukey needs 0 < p < 1"));
    }
    if m < 2 || !(df > 0.0) {
        return Err(EvalError::Numerical("qtukey needs m >= 2 and df > 0"));
    }
    let quad = Quadrature::new();
    let f = |q: f64| ptukey_with(&quad, q, m, df) - p;
    let (mut lo, mut hi) = (0.0, 8.0);
    let (mut f_lo, mut f_hi) = (-p, f(hi));
    while f_hi < 0.0 {
        (lo, f_lo) = (hi, f_hi);
        hi *= 2.0;
        if hi > 1e6 {
            return Err(EvalError::Numerical("qtukey bracket failed"));
        }
        f_hi = f(hi);
    }
    // Illinois regula falsi; the bracket always holds the root
    let mut side = 0;
    for _ in 0..200 {
        if hi - lo <= 1e-10 * hi.max(1.0) {
            break;
        }
        let mut x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            (lo, f_lo) = (x, fx);
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            (hi, f_hi) = (x, fx);
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
        if fx.abs() < 1e-15 {
            return Ok(x);
        }
    }
    Ok(if f_hi.abs() < f_lo.abs() { hi } else { lo })
}
