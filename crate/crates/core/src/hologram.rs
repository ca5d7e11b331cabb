//! Phase-mask synthesis for the twisted double slit, and the image-side
//! diagnostics that go with it.
//!
//! The mask splits one incident Gaussian between two indistinguishable
//! paths drawn in the same plane: a flat mirror disk at the centre keeps
//! the fundamental mode, and the helical exterior converts everything
//! else to topological charge ℓ. How much power takes each path is pure
//! geometry — the Gaussian's encircled energy inside the disk — which is
//! what `mode_weights` computes and what everything downstream consumes
//! as (α², β²).

use crate::beam::RadialField;
use crate::error::{Error, Result};
use std::f64::consts::TAU;
use std::io::Write;

/// Display pixel pitch shared with the delay regulator's bandlimit.
pub use crate::groupdelay::DEFAULT_PIXEL_PITCH;

/// A per-pixel phase pattern as the SLM would hold it.
#[derive(Clone, Debug)]
pub struct PhaseMask {
    pub width: usize,
    pub height: usize,
    /// Metres per pixel.
    pub pitch: f64,
    /// Row-major phase values in [0, 2π).
    pub phase: Vec<f64>,
    /// Number of discrete phase levels the display can hold.
    pub levels: u32,
}

impl PhaseMask {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.phase[y * self.width + x]
    }

    /// Distinct quantized levels on the one-pixel-wide ring at `radius_px`
    /// around `center`: a smoothness proxy for how well the display
    /// resolves one 2π cycle of the helical phase there.
    pub fn ring_levels(&self, center: (f64, f64), radius_px: f64) -> usize {
        let mut seen: Vec<u64> = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let d = (x as f64 - center.0).hypot(y as f64 - center.1);
                if (d - radius_px).abs() <= 0.5 {
                    let key = self.at(x, y).to_bits();
                    if !seen.contains(&key) {
                        seen.push(key);
                    }
                }
            }
        }
        seen.len()
    }

    /// Export as an 8-bit grayscale image, phase 0..2π mapped to 0..255.
    pub fn to_gray(&self) -> GrayImage {
        let data = self
            .phase
            .iter()
            .map(|&p| ((p / TAU * 256.0).floor() as i64).clamp(0, 255) as u8)
            .collect();
        GrayImage { width: self.width, height: self.height, data }
    }
}

/// Geometry of one twisted double slit: the Gaussian slit is the flat
/// disk, the helical exterior is the other slit.
#[derive(Clone, Copy, Debug)]
pub struct SlitSpec {
    /// Topological charge written outside the disk.
    pub l: i32,
    /// Disk diameter in pixels.
    pub gaussian_slit_diameter: f64,
    /// Disk centre in pixel coordinates.
    pub center: (f64, f64),
}

/// Synthesize the mask: flat zero phase on the central disk, helical
/// mod(−ℓθ, 2π) outside, snapped to the display's level grid.
pub fn make_superposition_mask(
    spec: &SlitSpec,
    width: usize,
    height: usize,
    levels: u32,
) -> Result<PhaseMask> {
    if !(spec.gaussian_slit_diameter >= 0.0) {
        return Err(Error::Domain(format!(
            "slit diameter must be non-negative, got {}",
            spec.gaussian_slit_diameter
        )));
    }
    if levels < 2 {
        return Err(Error::Domain(format!(
            "a phase display needs at least 2 levels, got {levels}"
        )));
    }
    let r = spec.gaussian_slit_diameter / 2.0;
    let (cx, cy) = spec.center;
    if cx - r < -0.5
        || cy - r < -0.5
        || cx + r > width as f64 - 0.5
        || cy + r > height as f64 - 0.5
    {
        return Err(Error::Domain(format!(
            "slit of radius {r} px at ({cx}, {cy}) does not fit a {width}×{height} mask"
        )));
    }
    let step = TAU / levels as f64;
    let mut phase = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            if dx * dx + dy * dy <= r * r {
                phase.push(0.0);
            } else {
                let theta = dy.atan2(dx);
                let raw = (-(spec.l as f64) * theta).rem_euclid(TAU);
                let q = ((raw / step).round() as i64).rem_euclid(levels as i64);
                phase.push(q as f64 * step);
            }
        }
    }
    Ok(PhaseMask {
        width,
        height,
        pitch: DEFAULT_PIXEL_PITCH,
        phase,
        levels,
    })
}

/// Power split of an incident Gaussian over the two mask regions:
/// α² = 1 − e^{−2R²/w²} is the encircled energy inside the disk of
/// physical radius R = diameter·pitch/2, and β² is the rest. The pair sums
/// to one exactly; phase depth never enters.
pub fn mode_weights(spec: &SlitSpec, incident_waist: f64) -> Result<(f64, f64)> {
    if !(incident_waist > 0.0) {
        return Err(Error::Domain(format!(
            "incident waist must be positive, got {incident_waist}"
        )));
    }
    let r = spec.gaussian_slit_diameter * DEFAULT_PIXEL_PITCH / 2.0;
    let beta2 = (-2.0 * r * r / (incident_waist * incident_waist)).exp();
    Ok((1.0 - beta2, beta2))
}

/// An 8-bit grayscale raster.
#[derive(Clone, Debug)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major, one byte per pixel.
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Binary PGM (P5), 8-bit.
    pub fn write_pgm<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.data)
    }
}

/// Sample |amp|² of a radial profile onto a centred pixel grid at `scale`
/// metres per pixel, full-scale normalized to 8 bits. Radii beyond the
/// tabulated grid render black.
pub fn render_intensity(field: &RadialField, width: usize, height: usize, scale: f64) -> GrayImage {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let n = field.grid.len();
    let intensity_at = |r: f64| -> f64 {
        if r > field.grid[n - 1] {
            return 0.0;
        }
        let j = field.grid.partition_point(|&g| g < r).clamp(1, n - 1);
        let (r0, r1) = (field.grid[j - 1], field.grid[j]);
        let t = if r1 > r0 { ((r - r0) / (r1 - r0)).clamp(0.0, 1.0) } else { 0.0 };
        let i0 = field.amp[j - 1].norm_sqr();
        let i1 = field.amp[j].norm_sqr();
        i0 * (1.0 - t) + i1 * t
    };
    let mut raw = Vec::with_capacity(width * height);
    let mut peak = 0.0f64;
    for y in 0..height {
        for x in 0..width {
            let r = (x as f64 - cx).hypot(y as f64 - cy) * scale;
            let v = intensity_at(r);
            peak = peak.max(v);
            raw.push(v);
        }
    }
    let norm = if peak > 0.0 { 255.0 / peak } else { 0.0 };
    let data = raw
        .into_iter()
        .map(|v| (v * norm).round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage { width, height, data }
}

/// Twice the smallest radius at which the intensity first climbs to
/// `threshold_fraction` of its peak — how wide the dark core of a ring
/// mode looks on a camera. Zero for any profile that peaks on axis.
pub fn inner_diameter(field: &RadialField, threshold_fraction: f64) -> Result<f64> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "threshold fraction must lie strictly inside (0, 1), got {threshold_fraction}"
        )));
    }
    let intens: Vec<f64> = field.amp.iter().map(|a| a.norm_sqr()).collect();
    let peak = intens.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Domain(
            "field carries no intensity; inner diameter is undefined".into(),
        ));
    }
    let target = threshold_fraction * peak;
    for i in 0..intens.len() {
        if intens[i] >= target {
            if i == 0 {
                return Ok(0.0);
            }
            let (r0, r1) = (field.grid[i - 1], field.grid[i]);
            let (i0, i1) = (intens[i - 1], intens[i]);
            let t = if i1 > i0 { (target - i0) / (i1 - i0) } else { 1.0 };
            return Ok(2.0 * (r0 + t * (r1 - r0)));
        }
    }
    Err(Error::Domain(
        "intensity never reaches the threshold anywhere on the grid".into(),
    ))
}
