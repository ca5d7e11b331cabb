//! Special functions for the analytic field solution: the confluent
//! hypergeometric function ₁F₁(a;b;z) for real parameters and complex
//! argument, and associated Laguerre polynomials.
//!
//! Method by regime (|z| is the argument modulus):
//! * `|z| ≤ 40` — Taylor series with double-double accumulation; for
//!   `Re z < 0` the series is applied to the reflected argument
//!   (₁F₁(a;b;z) = e^z·₁F₁(b−a;b;−z)) so every summed series has a
//!   non-negative real part and no exponential cancellation.
//! * `|z| > 40` — compound large-argument expansion
//!   ₁F₁ ≈ Γ(b)·[e^z z^{a−b}·S₁/Γ(a) + (−z)^{−a}·S₂/Γ(b−a)] with the two
//!   descending series truncated at their smallest term (they terminate
//!   exactly when `1−a` resp. `a−b+1` is a non-positive integer, which covers
//!   every even-ℓ field evaluation).
//! * Non-positive-integer `a` — the series terminates; summed exactly in any
//!   regime.

pub mod dd;

use dd::{Dd, DdC};
use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Default relative tolerance guaranteed by [`kummer_1f1`].
pub const DEFAULT_TOL: f64 = 1e-12;

/// Series iteration cap.
const MAX_TERMS: usize = 10_000;
/// Relative-term stopping threshold (well below the guaranteed tolerance).
const TERM_STOP: f64 = 1e-15;
/// |z| above which the large-argument expansion takes over.
const ASYM_SWITCH: f64 = 40.0;

fn is_nonpos_int(x: f64) -> bool {
    x <= 0.0 && (x - x.round()).abs() < 1e-12
}

/// 1/Γ(x), zero at the poles.
fn recip_gamma(x: f64) -> f64 {
    if is_nonpos_int(x) {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// Taylor sum Σ (a)ₖ/(b)ₖ · zᵏ/k! with both the accumulation and the term
/// recurrence in double-double arithmetic: the sum is alternating-like for
/// oscillatory z, so term rounding is amplified by the cancellation ratio
/// e^{|z|}·|1F1|⁻¹ and plain f64 terms lose up to half their digits by
/// |z| ≈ 30. Requires Re z ≥ 0 unless the series terminates.
fn taylor_1f1(a: f64, b: f64, z: Complex64, tol: f64) -> Result<Complex64> {
    let mut sum = DdC::one();
    let mut term = DdC::one();
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let num = Dd::from_sum(a, kf);
        let den = Dd::from_sum(b, kf).mul_f64(kf + 1.0);
        term = term.mul_c64(z).mul_dd(num).div_dd(den);
        sum = sum.add(term);
        if term.abs() <= TERM_STOP * sum.abs() {
            return Ok(sum.to_c64());
        }
    }
    let ratio = term.abs() / sum.abs();
    if ratio <= tol {
        return Ok(sum.to_c64());
    }
    Err(Error::Convergence(format!(
        "1F1 Taylor series: {MAX_TERMS} terms at a={a}, b={b}, |z|={:.3e}; \
         last relative term {ratio:.3e} exceeds tol {tol:.1e} (partial value {:.6e}+{:.6e}i)",
        z.norm(),
        sum.to_c64().re,
        sum.to_c64().im,
    )))
}

/// Descending series Σₖ (p)ₖ(q)ₖ/k! · wᵏ truncated at its smallest term.
fn descending_series(p: f64, q: f64, w: Complex64) -> Complex64 {
    let mut sum = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut smallest = f64::INFINITY;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= w * ((p + kf) * (q + kf) / (kf + 1.0));
        let t = term.norm();
        if t >= smallest {
            break; // asymptotic tail started growing
        }
        smallest = t;
        sum += term;
        if t <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// Shared large-argument evaluation of e^{−z}·₁F₁(a;b;z).
fn asym_1f1_scaled(a: f64, b: f64, z: Complex64) -> Complex64 {
    let s1 = descending_series(b - a, 1.0 - a, 1.0 / z);
    let s2 = descending_series(a, a - b + 1.0, -1.0 / z);
    let gb = gamma(b);
    let t1 = z.powc(Complex64::new(a - b, 0.0)) * s1 * recip_gamma(a);
    let t2 = (-z).powc(Complex64::new(-a, 0.0)) * s2 * recip_gamma(b - a) * (-z).exp();
    gb * (t1 + t2)
}

fn validate_b(b: f64) -> Result<()> {
    if is_nonpos_int(b) {
        return Err(Error::Domain(format!(
            "1F1 second parameter b={b} is zero or a negative integer"
        )));
    }
    Ok(())
}

/// ₁F₁(a;b;z) to relative tolerance `tol`.
pub fn kummer_1f1_tol(a: f64, b: f64, z: Complex64, tol: f64) -> Result<Complex64> {
    validate_b(b)?;
    if z == Complex64::new(0.0, 0.0) || a == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if is_nonpos_int(a) {
        return taylor_1f1(a, b, z, tol); // terminating polynomial
    }
    if z.norm() <= ASYM_SWITCH {
        if z.re >= 0.0 {
            taylor_1f1(a, b, z, tol)
        } else {
            Ok(z.exp() * taylor_1f1(b - a, b, -z, tol)?)
        }
    } else {
        Ok(z.exp() * asym_1f1_scaled(a, b, z))
    }
}

/// ₁F₁(a;b;z) at the default tolerance.
pub fn kummer_1f1(a: f64, b: f64, z: Complex64) -> Result<Complex64> {
    kummer_1f1_tol(a, b, z, DEFAULT_TOL)
}

/// Exponentially scaled e^{−z}·₁F₁(a;b;z).
///
/// The field solution evaluates ₁F₁ at arguments whose real part grows like
/// k·r²; the scaled form is the only representation that stays inside f64
/// range there.
pub fn kummer_1f1e(a: f64, b: f64, z: Complex64) -> Result<Complex64> {
    validate_b(b)?;
    if z == Complex64::new(0.0, 0.0) || a == 0.0 {
        return Ok((-z).exp());
    }
    if is_nonpos_int(a) {
        return Ok((-z).exp() * taylor_1f1(a, b, z, DEFAULT_TOL)?);
    }
    if z.norm() <= ASYM_SWITCH {
        if z.re >= 0.0 {
            Ok((-z).exp() * taylor_1f1(a, b, z, DEFAULT_TOL)?)
        } else {
            // e^{−z}·e^{z}·₁F₁(b−a;b;−z): no exponential at all
            taylor_1f1(b - a, b, -z, DEFAULT_TOL)
        }
    } else {
        Ok(asym_1f1_scaled(a, b, z))
    }
}

/// Associated Laguerre polynomial L_p^l(x) by the three-term recurrence.
pub fn assoc_laguerre(p: u32, l: u32, x: f64) -> f64 {
    let lf = l as f64;
    if p == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0; // L_0
    let mut cur = 1.0 + lf - x; // L_1
    for j in 1..p {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + lf - x) * cur - (jf + lf) * lm1) / (jf + 1.0);
        lm1 = cur;
        cur = next;
    }
    cur
}
