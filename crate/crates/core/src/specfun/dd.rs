//! Minimal double-double (two-f64 compensated) arithmetic for series
//! accumulation. Not a general extended-precision type: only the operations
//! the Taylor summations need. Roughly 32 significant digits, which keeps
//! catastrophic cancellation in oscillatory series below the f64 target.

use num_complex::Complex64;

/// Error-free sum: returns (hi, lo) with hi + lo == a + b exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Error-free product via FMA: hi + lo == a * b exactly.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Unevaluated hi + lo pair, |lo| ≤ ulp(hi)/2 after renormalization.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        Dd::renorm(s, e + self.lo + other.lo)
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        Dd::renorm(p, self.lo.mul_add(b, e))
    }

    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        Dd::renorm(p, e)
    }

    #[inline]
    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let (p, e) = two_prod(q1, b);
        let r = (self.hi - p - e + self.lo) / b;
        Dd::renorm(q1, r)
    }

    #[inline]
    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul_f64(q1));
        let q2 = (r.hi + r.lo) / (other.hi + other.lo);
        Dd::renorm(q1, q2)
    }

    /// Exact sum of two f64 values as a Dd pair.
    #[inline]
    pub fn from_sum(a: f64, b: f64) -> Dd {
        let (s, e) = two_sum(a, b);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Complex value with double-double components.
#[derive(Clone, Copy, Debug, Default)]
pub struct DdC {
    pub re: Dd,
    pub im: Dd,
}

impl DdC {
    #[inline]
    pub fn one() -> Self {
        DdC {
            re: Dd::from_f64(1.0),
            im: Dd::from_f64(0.0),
        }
    }

    #[inline]
    pub fn add(self, other: DdC) -> DdC {
        DdC {
            re: self.re.add(other.re),
            im: self.im.add(other.im),
        }
    }

    /// Multiply by a plain complex scalar.
    #[inline]
    pub fn mul_c64(self, z: Complex64) -> DdC {
        let re = self.re.mul_f64(z.re).sub(self.im.mul_f64(z.im));
        let im = self.re.mul_f64(z.im).add(self.im.mul_f64(z.re));
        DdC { re, im }
    }

    #[inline]
    pub fn div_f64(self, b: f64) -> DdC {
        DdC {
            re: self.re.div_f64(b),
            im: self.im.div_f64(b),
        }
    }

    /// Multiply by a real double-double scalar.
    #[inline]
    pub fn mul_dd(self, s: Dd) -> DdC {
        DdC {
            re: self.re.mul(s),
            im: self.im.mul(s),
        }
    }

    /// Divide by a real double-double scalar.
    #[inline]
    pub fn div_dd(self, s: Dd) -> DdC {
        DdC {
            re: self.re.div(s),
            im: self.im.div(s),
        }
    }

    #[inline]
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.to_c64().norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_recovers_rounding_error() {
        let a = 1.0;
        let b = 1e-20;
        let s = Dd::from_f64(a).add(Dd::from_f64(b));
        assert_eq!(s.hi, 1.0);
        assert_eq!(s.lo, 1e-20);
    }

    #[test]
    fn compensated_harmonic_sum_beats_plain_f64() {
        let mut plain = 0.0f64;
        let mut comp = Dd::from_f64(0.0);
        // forward harmonic sum, then subtract backward sum: exact answer 0
        for k in 1..=100_000 {
            let t = 1.0 / k as f64;
            plain += t;
            comp = comp.add(Dd::from_f64(t));
        }
        for k in (1..=100_000).rev() {
            let t = 1.0 / k as f64;
            plain -= t;
            comp = comp.sub(Dd::from_f64(t));
        }
        assert!(comp.to_f64().abs() <= plain.abs());
        assert!(comp.to_f64().abs() < 1e-25);
    }

    #[test]
    fn mul_keeps_low_part() {
        let x = Dd::from_f64(1.0).add(Dd::from_f64(1e-18));
        let y = x.mul_f64(3.0);
        assert_eq!(y.hi, 3.0);
        assert!((y.lo - 3e-18).abs() < 1e-30);
    }

    #[test]
    fn complex_multiply_matches_plain_for_exact_inputs() {
        let z = DdC {
            re: Dd::from_f64(2.0),
            im: Dd::from_f64(-1.5),
        };
        let w = Complex64::new(0.25, 4.0);
        let p = z.mul_c64(w).to_c64();
        let q = Complex64::new(2.0, -1.5) * w;
        assert_eq!(p, q);
    }
}
