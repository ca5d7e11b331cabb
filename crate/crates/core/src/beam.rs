//! Optical context and field construction: beam parameters, superposition
//! states, the Gaussian source field, the analytic vortex-on-Gaussian field
//! at finite propagation distance, and pure Laguerre-Gaussian reference
//! modes.

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::trapz;
use crate::specfun::kummer_1f1e;

/// Wavelength-derived optical context. The derived members are always
/// consistent with the defining formulas k₀ = 2π/λ and z_R = π·w₀²/λ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamParams {
    pub wavelength: f64,
    pub waist: f64,
    pub k0: f64,
    pub rayleigh: f64,
}

impl BeamParams {
    pub fn new(wavelength: f64, waist: f64) -> Result<Self> {
        if !(wavelength > 0.0) || !(waist > 0.0) {
            return Err(Error::Domain(format!(
                "beam parameters must be positive: wavelength={wavelength}, waist={waist}"
            )));
        }
        Ok(BeamParams {
            wavelength,
            waist,
            k0: 2.0 * std::f64::consts::PI / wavelength,
            rayleigh: std::f64::consts::PI * waist * waist / wavelength,
        })
    }

    /// Beam radius w(z) = w₀·√(1 + (z/z_R)²).
    pub fn w(&self, z: f64) -> f64 {
        self.waist * (1.0 + (z / self.rayleigh).powi(2)).sqrt()
    }
}

/// Normalized finite superposition Σ c_ℓ |ℓ⟩ over distinct topological
/// charges.
#[derive(Clone, Debug)]
pub struct SuperpositionState {
    terms: Vec<(i32, Complex64)>,
}

impl SuperpositionState {
    pub fn new(terms: Vec<(i32, Complex64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain("superposition needs at least one term".into()));
        }
        for (i, (l, _)) in terms.iter().enumerate() {
            if terms[i + 1..].iter().any(|(m, _)| m == l) {
                return Err(Error::Domain(format!("duplicate mode index ℓ={l}")));
            }
        }
        let norm: f64 = terms.iter().map(|(_, c)| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "superposition weights sum to {norm}, expected 1"
            )));
        }
        Ok(SuperpositionState { terms })
    }

    /// Two-mode state α|0⟩ + β|ℓ⟩ from real weights.
    pub fn two_mode(l: i32, alpha: f64, beta: f64) -> Result<Self> {
        SuperpositionState::new(vec![
            (0, Complex64::new(alpha, 0.0)),
            (l, Complex64::new(beta, 0.0)),
        ])
    }

    /// Single pure mode.
    pub fn pure(l: i32) -> Self {
        SuperpositionState {
            terms: vec![(l, Complex64::new(1.0, 0.0))],
        }
    }

    pub fn terms(&self) -> &[(i32, Complex64)] {
        &self.terms
    }

    pub fn coeff(&self, l: i32) -> Option<Complex64> {
        self.terms.iter().find(|(m, _)| *m == l).map(|(_, c)| *c)
    }
}

/// Radial slice of a field at fixed z with azimuthal dependence e^{−iℓθ}
/// carried symbolically through `l`. `amp` is normalized so that
/// 2π·∫|amp|² r dr = 1; `prenorm_power` records the power the defining
/// formula carried on this grid before renormalization.
#[derive(Clone, Debug)]
pub struct RadialField {
    pub z: f64,
    pub l: i32,
    pub grid: Vec<f64>,
    pub amp: Vec<Complex64>,
    pub prenorm_power: f64,
}

impl RadialField {
    /// 2π·∫|amp|² r dr on the field's own grid.
    pub fn power(&self) -> f64 {
        let y: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.amp)
            .map(|(r, a)| a.norm_sqr() * r)
            .collect();
        2.0 * std::f64::consts::PI * trapz(&self.grid, &y)
    }

    pub(crate) fn normalized(z: f64, l: i32, grid: Vec<f64>, amp: Vec<Complex64>) -> Self {
        let mut f = RadialField {
            z,
            l,
            grid,
            amp,
            prenorm_power: 1.0,
        };
        let p = f.power();
        f.prenorm_power = p;
        let s = 1.0 / p.sqrt();
        for a in &mut f.amp {
            *a *= s;
        }
        f
    }

    /// Radius of the intensity maximum, by grid scan.
    pub fn peak_radius(&self) -> f64 {
        let mut best = (0usize, 0.0f64);
        for (i, a) in self.amp.iter().enumerate() {
            let v = a.norm_sqr();
            if v > best.1 {
                best = (i, v);
            }
        }
        self.grid[best.0]
    }
}

/// Source-plane field: Gaussian amplitude with the helical phase carried by
/// the ℓ tag. Unit power on the supplied grid.
pub fn initial_field(params: &BeamParams, l: i32, grid: &[f64]) -> RadialField {
    let w0 = params.waist;
    let amp: Vec<Complex64> = grid
        .iter()
        .map(|&r| Complex64::new((-r * r / (w0 * w0)).exp(), 0.0))
        .collect();
    RadialField::normalized(0.0, l, grid.to_vec(), amp)
}

/// Raw (pre-normalization) analytic amplitude at one radius; see
/// [`hygg_field`].
pub(crate) fn hygg_amp_raw(params: &BeamParams, l: u32, z: f64, r: f64) -> Result<Complex64> {
    let k = params.k0;
    let w0 = params.waist;
    let lf = l as f64;
    let eps = Complex64::new(1.0 / (w0 * w0), k / (2.0 * z));
    let pref = Complex64::i().powu(l + 1)
        * (std::f64::consts::PI / (params.wavelength * z))
        * (2.0 / std::f64::consts::PI).sqrt()
        / w0
        * (gamma(lf / 2.0 + 1.0) / gamma(lf + 1.0))
        * Complex64::new(0.0, -k * z).exp();
    if r == 0.0 {
        return Ok(if l == 0 { pref / eps } else { Complex64::new(0.0, 0.0) });
    }
    let b = k * r / (2.0 * z);
    let x = b * b / eps;
    // plane-to-plane Fresnel chirp of the output plane; without it the
    // remaining factors describe only the co-moving envelope (their phase
    // misses kr²/2z, as a check against the diffraction integral or the
    // textbook Gaussian at ℓ = 0 shows)
    let chirp = Complex64::from_polar(1.0, -k * r * r / (2.0 * z));
    // b^ℓ / ε^{1+ℓ/2} evaluated as exp(ℓ·ln b − (1+ℓ/2)·Ln ε) to keep the
    // two huge factors from overflowing individually
    let scale = (Complex64::new(lf * b.ln(), 0.0) - (1.0 + lf / 2.0) * eps.ln()).exp();
    Ok(pref * chirp * scale * kummer_1f1e(lf / 2.0, lf + 1.0, x)?)
}

/// Analytic field of a Gaussian that picked up an ℓ-fold helical phase at
/// z = 0, evaluated after free propagation by z: the closed-form solution
/// e^{−ikr²/(2z)}·b^ℓ·ε^{−(1+ℓ/2)}·e^{−b²/ε}·₁F₁(ℓ/2; ℓ+1; b²/ε) with
/// b = kr/2z, ε = 1/w₀² + ik/2z, times the power-true prefactor.
/// Renormalized to unit power on the grid; the pre-normalization power is
/// kept as a diagnostic (it reads ~1 when the grid captures the beam).
///
/// Radial shape depends on ℓ only through |ℓ|.
pub fn hygg_field(params: &BeamParams, l: i32, z: f64, grid: &[f64]) -> Result<RadialField> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!(
            "analytic propagated field needs z > 0 (got {z}); the z=0 field is initial_field"
        )));
    }
    let la = l.unsigned_abs();
    let amp = grid
        .iter()
        .map(|&r| hygg_amp_raw(params, la, z, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(RadialField::normalized(z, l, grid.to_vec(), amp))
}

/// Pure Laguerre-Gaussian mode LG_p^ℓ at distance z, unit power.
pub fn lg_mode(params: &BeamParams, p: u32, l: i32, z: f64, grid: &[f64]) -> RadialField {
    let la = l.unsigned_abs();
    let lf = la as f64;
    let w = params.w(z);
    let zr = params.rayleigh;
    let inv_r = z / (z * z + zr * zr); // 1/R(z), finite at z = 0
    let gouy = (z / zr).atan();
    let k = params.k0;
    let amp: Vec<Complex64> = grid
        .iter()
        .map(|&r| {
            let u = 2.0 * r * r / (w * w);
            let radial = (2.0f64.sqrt() * r / w).powi(la as i32)
                * crate::specfun::assoc_laguerre(p, la, u)
                * (-r * r / (w * w)).exp();
            let phase = -(k * z + 0.5 * k * r * r * inv_r
                - (2.0 * p as f64 + lf + 1.0) * gouy);
            radial * Complex64::new(0.0, phase).exp()
        })
        .collect();
    RadialField::normalized(z, l, grid.to_vec(), amp)
}

/// Ring radius of the maximum intensity for a p=0 mode:
/// r₁ = √(|ℓ|/2)·w(z). Also used to size quadrature domains.
pub fn max_intensity_radius(params: &BeamParams, l: i32, z: f64) -> f64 {
    (l.unsigned_abs() as f64 / 2.0).sqrt() * params.w(z)
}
