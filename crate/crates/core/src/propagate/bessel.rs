//! Bessel functions J_ℓ(x) of integer order for the azimuthally reduced
//! diffraction kernel.
//!
//! Accuracy envelope (tested): absolute error ≲ 1e-12 for 0 ≤ ℓ ≤ 14 over
//! x ∈ [0, 10⁶], the full range the propagation kernel visits.
//!
//! Method by regime:
//! * `x < 14` — ascending power series with double-double accumulation
//!   (the alternating terms cancel to ~e^x, which dd absorbs).
//! * `14 ≤ x < max(40, 2ℓ)` — Miller's downward recurrence with the
//!   Σ-normalization J₀ + 2·Σ J₂ₖ = 1.
//! * larger `x` — Hankel asymptotic (P/Q cosine form) for J₀ and J₁,
//!   then upward recurrence, which is stable because x > 2ℓ there.

use crate::specfun::dd::Dd;

/// J_ℓ(x) for ℓ ≥ 0, x ≥ 0.
pub fn bessel_j(l: u32, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    if x < 14.0 {
        series_jl(l, x)
    } else if x < 40.0f64.max(2.0 * l as f64) {
        miller_jl(l, x)
    } else {
        let j0 = hankel_j01(0, x);
        if l == 0 {
            return j0;
        }
        let j1 = hankel_j01(1, x);
        if l == 1 {
            return j1;
        }
        let mut jm = j0;
        let mut jc = j1;
        for k in 1..l {
            let jn = 2.0 * k as f64 / x * jc - jm;
            jm = jc;
            jc = jn;
        }
        jc
    }
}

fn series_jl(l: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    // (x/2)^l / l!
    let mut lead = Dd::from_f64(1.0);
    for k in 1..=l {
        lead = lead.mul_f64(half).div_f64(k as f64);
    }
    let m = -half * half;
    let mut term = lead;
    let mut sum = lead;
    for k in 1..200 {
        let kf = k as f64;
        term = term.mul_f64(m).div_f64(kf).div_f64(kf + l as f64);
        sum = sum.add(term);
        if term.hi.abs() < 1e-20 * sum.hi.abs().max(1e-280) {
            break;
        }
    }
    sum.to_f64()
}

fn miller_jl(l: u32, x: f64) -> f64 {
    let start = {
        let m = (x.max(l as f64) as usize) + 22 + (x.sqrt() as usize);
        m + (m & 1) // even
    };
    let mut jp = 0.0f64;
    let mut jc = 1e-300;
    let mut norm = 0.0; // accumulates J₀ + 2ΣJ₂ₖ
    let mut out = 0.0;
    for k in (0..=start).rev() {
        let jm = 2.0 * (k as f64 + 1.0) / x * jc - jp;
        jp = jc;
        jc = jm;
        // jc now holds J_k
        if k as u32 == l {
            out = jc;
        }
        if k % 2 == 0 {
            norm += if k == 0 { jc } else { 2.0 * jc };
        }
        if jc.abs() > 1e280 {
            jp /= 1e280;
            jc /= 1e280;
            norm /= 1e280;
            out /= 1e280;
        }
    }
    out / norm
}

/// Hankel asymptotic for J₀/J₁ at large x:
/// J_n(x) = √(2/πx)·[P·cos(χ) − Q·sin(χ)], χ = x − (2n+1)π/4.
fn hankel_j01(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    // a_m = (μ−1)(μ−9)···(μ−(2m−1)²)/(m!·(8x)^m); odd m feed Q, even m
    // feed P, with alternating signs within each series
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0f64;
    let mut prev = f64::INFINITY;
    for m in 1..=24u32 {
        let tm = 2.0 * m as f64 - 1.0;
        a *= (mu - tm * tm) / (m as f64 * 8.0 * x);
        if a.abs() >= prev {
            break;
        }
        prev = a.abs();
        match m % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
    }
    let chi = x - (2.0 * n as f64 + 1.0) * std::f64::consts::FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
