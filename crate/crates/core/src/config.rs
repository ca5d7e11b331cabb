//! Run configuration: flat `key = value` text with `[section]` grouping.
//!
//! Wire units follow each quantity's natural scale — wavelength in nm,
//! waists and apertures in mm, distances in m, pulse duration in fs —
//! and everything is converted to SI on parse. Only the beam is
//! mandatory; every other knob has the default the simulations were
//! tuned under. The resolved values (defaults included) can be emitted
//! back as `#` header lines so an output file carries its own provenance.

use crate::beam::{BeamParams, SuperpositionState};
use crate::error::{Error, Result};
use crate::groupdelay::{pixel_bandlimit, RegularizationConfig, DEFAULT_PIXEL_PITCH};
use crate::hologram::{mode_weights, SlitSpec};
use crate::hom::PhotonPair;
use std::collections::BTreeMap;

/// Everything a run needs, fully validated.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub beam: BeamParams,
    /// The prepared two-path state α|0⟩ + β|ℓ⟩.
    pub state: SuperpositionState,
    /// The helical charge of the state (sign preserved from the config).
    pub helical_l: i32,
    /// Propagation distances to evaluate, metres.
    pub distances: Vec<f64>,
    pub reg: RegularizationConfig,
    pub pair: PhotonPair,
    /// Poisson intensity for synthetic scans, counts per grid point.
    pub counts_per_point: f64,
    pub seed: u64,
    pub out_dir: String,
}

struct Raw {
    entries: BTreeMap<String, (usize, String)>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    return Err(Error::Config {
                        key: line.to_string(),
                        line: line_no,
                        message: "unterminated section header".into(),
                    });
                };
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    key: line.to_string(),
                    line: line_no,
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if entries
                .insert(full.clone(), (line_no, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Config {
                    key: full,
                    line: line_no,
                    message: "duplicate key".into(),
                });
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<(usize, f64)>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => {
                let x = v.parse::<f64>().map_err(|e| Error::Config {
                    key: key.to_string(),
                    line,
                    message: format!("not a number ('{v}'): {e}"),
                })?;
                Ok(Some((line, x)))
            }
        }
    }
}

fn require_positive(key: &str, line: usize, value: f64) -> Result<f64> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::Config {
            key: key.to_string(),
            line,
            message: format!("must be positive and finite, got {value}"),
        });
    }
    Ok(value)
}

const KNOWN_KEYS: &[&str] = &[
    "wavelength",
    "waist",
    "beam.wavelength",
    "beam.waist",
    "state.l",
    "state.alpha",
    "state.beta",
    "state.slit_diameter_px",
    "distances.z",
    "regularization.z_min",
    "regularization.window",
    "regularization.spectral_cut",
    "regularization.aperture",
    "pair.duration",
    "pair.visibility",
    "noise.counts_per_point",
    "run.seed",
    "run.out_dir",
];

/// Parse and validate a config document, filling defaults for everything
/// except the beam.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut raw = Raw::parse(text)?;

    // the beam keys may appear bare or under [beam]
    let wl_entry = match raw.take_f64("beam.wavelength")? {
        Some(e) => Some(e),
        None => raw.take_f64("wavelength")?,
    };
    let (wl_line, wl) = wl_entry.ok_or_else(|| Error::Config {
        key: "wavelength".into(),
        line: 0,
        message: "required key `wavelength` missing".into(),
    })?;
    let wavelength = require_positive("wavelength", wl_line, wl)? * 1e-9;
    let w_entry = match raw.take_f64("beam.waist")? {
        Some(e) => Some(e),
        None => raw.take_f64("waist")?,
    };
    let (w_line, w) = w_entry.ok_or_else(|| Error::Config {
        key: "waist".into(),
        line: 0,
        message: "required key `waist` missing".into(),
    })?;
    let waist = require_positive("waist", w_line, w)? * 1e-3;
    let beam = BeamParams::new(wavelength, waist).map_err(|e| Error::Config {
        key: "beam".into(),
        line: wl_line,
        message: e.to_string(),
    })?;

    let helical_l = match raw.take("state.l") {
        None => 10,
        Some((line, v)) => {
            let l = v.parse::<i32>().map_err(|e| Error::Config {
                key: "state.l".into(),
                line,
                message: format!("not an integer ('{v}'): {e}"),
            })?;
            if l == 0 {
                return Err(Error::Config {
                    key: "state.l".into(),
                    line,
                    message: "the helical charge must be non-zero".into(),
                });
            }
            l
        }
    };

    let alpha_entry = raw.take_f64("state.alpha")?;
    let beta_entry = raw.take_f64("state.beta")?;
    let slit_entry = raw.take_f64("state.slit_diameter_px")?;
    let (alpha, beta) = match (slit_entry, alpha_entry, beta_entry) {
        (Some((line, _)), Some(_), _) | (Some((line, _)), _, Some(_)) => {
            return Err(Error::Config {
                key: "state.slit_diameter_px".into(),
                line,
                message: "give either a slit geometry or explicit alpha/beta, not both".into(),
            });
        }
        (Some((line, d)), None, None) => {
            let d = require_positive("state.slit_diameter_px", line, d)?;
            let spec = SlitSpec {
                l: helical_l,
                gaussian_slit_diameter: d,
                center: (0.0, 0.0),
            };
            let (a2, b2) = mode_weights(&spec, beam.waist).map_err(|e| Error::Config {
                key: "state.slit_diameter_px".into(),
                line,
                message: e.to_string(),
            })?;
            (a2.sqrt(), b2.sqrt())
        }
        (None, a, b) => {
            let default = 0.5f64.sqrt();
            let (a_line, alpha) = a.unwrap_or((0, default));
            let (b_line, beta) = b.unwrap_or((0, default));
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::Config {
                    key: "state.alpha".into(),
                    line: a_line,
                    message: format!("amplitude must lie in [0, 1], got {alpha}"),
                });
            }
            if !(0.0..=1.0).contains(&beta) {
                return Err(Error::Config {
                    key: "state.beta".into(),
                    line: b_line,
                    message: format!("amplitude must lie in [0, 1], got {beta}"),
                });
            }
            let norm = alpha * alpha + beta * beta;
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::Config {
                    key: "state.alpha".into(),
                    line: a_line.max(b_line),
                    message: format!("alpha² + beta² = {norm}, must be 1 within 1e-6"),
                });
            }
            // snap tiny rounding from hand-entered amplitudes
            (alpha / norm.sqrt(), beta / norm.sqrt())
        }
    };
    let state = SuperpositionState::two_mode(helical_l, alpha, beta).map_err(|e| {
        Error::Config {
            key: "state.l".into(),
            line: 0,
            message: e.to_string(),
        }
    })?;

    let distances = match raw.take("distances.z") {
        None => vec![1.2, 2.0],
        Some((line, v)) => {
            let mut out = Vec::new();
            for part in v.split(',') {
                let z = part.trim().parse::<f64>().map_err(|e| Error::Config {
                    key: "distances.z".into(),
                    line,
                    message: format!("not a number ('{}'): {e}", part.trim()),
                })?;
                out.push(require_positive("distances.z", line, z)?);
            }
            if out.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Config {
                    key: "distances.z".into(),
                    line,
                    message: "distances must be strictly increasing".into(),
                });
            }
            out
        }
    };

    let mut reg = RegularizationConfig::default();
    if let Some((line, z)) = raw.take_f64("regularization.z_min")? {
        reg.z_min = require_positive("regularization.z_min", line, z)?;
    }
    if let Some((line, m)) = raw.take_f64("regularization.window")? {
        if !(m >= 1.0) {
            return Err(Error::Config {
                key: "regularization.window".into(),
                line,
                message: format!("window multiplier must be at least 1, got {m}"),
            });
        }
        reg.window_multiplier = m;
    }
    if let Some((line, v)) = raw.take("regularization.spectral_cut") {
        reg.kappa_cut = match v.as_str() {
            "off" | "none" => None,
            "pixel" => Some(pixel_bandlimit(DEFAULT_PIXEL_PITCH)),
            other => {
                let k = other.parse::<f64>().map_err(|_| Error::Config {
                    key: "regularization.spectral_cut".into(),
                    line,
                    message: format!("expected `pixel`, `off`, or rad/m, got '{other}'"),
                })?;
                Some(require_positive("regularization.spectral_cut", line, k)?)
            }
        };
    }
    if let Some((line, v)) = raw.take("regularization.aperture") {
        reg.aperture = match v.as_str() {
            "none" => None,
            other => {
                let mm = other.parse::<f64>().map_err(|_| Error::Config {
                    key: "regularization.aperture".into(),
                    line,
                    message: format!("expected `none` or a radius in mm, got '{other}'"),
                })?;
                Some(require_positive("regularization.aperture", line, mm)? * 1e-3)
            }
        };
    }

    let duration_fs = match raw.take_f64("pair.duration")? {
        None => 160.0,
        Some((line, d)) => require_positive("pair.duration", line, d)?,
    };
    let visibility = match raw.take_f64("pair.visibility")? {
        None => 0.9,
        Some((line, v)) => {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config {
                    key: "pair.visibility".into(),
                    line,
                    message: format!("visibility must lie in (0, 1], got {v}"),
                });
            }
            v
        }
    };
    let pair = PhotonPair::new(wavelength, duration_fs * 1e-15, visibility).map_err(|e| {
        Error::Config {
            key: "pair.duration".into(),
            line: 0,
            message: e.to_string(),
        }
    })?;

    let counts_per_point = match raw.take_f64("noise.counts_per_point")? {
        None => 1000.0,
        Some((line, c)) => require_positive("noise.counts_per_point", line, c)?,
    };

    let seed = match raw.take("run.seed") {
        None => 7,
        Some((line, v)) => v.parse::<u64>().map_err(|e| Error::Config {
            key: "run.seed".into(),
            line,
            message: format!("not an unsigned integer ('{v}'): {e}"),
        })?,
    };
    let out_dir = match raw.take("run.out_dir") {
        None => "out".to_string(),
        Some((_, v)) => v,
    };

    if let Some((key, (line, _))) = raw.entries.iter().next() {
        debug_assert!(!KNOWN_KEYS.contains(&key.as_str()));
        return Err(Error::Config {
            key: key.clone(),
            line: *line,
            message: "unknown key".into(),
        });
    }

    Ok(RunConfig {
        beam,
        state,
        helical_l,
        distances,
        reg,
        pair,
        counts_per_point,
        seed,
        out_dir,
    })
}

impl RunConfig {
    /// The resolved configuration as stable `key = value` lines (defaults
    /// filled in, SI units), for embedding in output headers.
    pub fn resolved_lines(&self) -> Vec<String> {
        let alpha = self
            .state
            .coeff(0)
            .map(|c| c.norm())
            .unwrap_or(0.0);
        let beta = self
            .state
            .coeff(self.helical_l)
            .map(|c| c.norm())
            .unwrap_or(0.0);
        let cut = match self.reg.kappa_cut {
            Some(k) => format!("{k}"),
            None => "off".into(),
        };
        let aperture = match self.reg.aperture {
            Some(a) => format!("{a}"),
            None => "none".into(),
        };
        let zs: Vec<String> = self.distances.iter().map(|z| format!("{z}")).collect();
        vec![
            format!("wavelength_m = {}", self.beam.wavelength),
            format!("waist_m = {}", self.beam.waist),
            format!("state_l = {}", self.helical_l),
            format!("state_alpha = {alpha}"),
            format!("state_beta = {beta}"),
            format!("distances_m = {}", zs.join(" ")),
            format!("reg_z_min_m = {}", self.reg.z_min),
            format!("reg_window = {}", self.reg.window_multiplier),
            format!("reg_spectral_cut_rad_per_m = {cut}"),
            format!("reg_aperture_m = {aperture}"),
            format!("pair_sigma_t_s = {}", self.pair.sigma_t),
            format!("pair_visibility = {}", self.pair.visibility),
            format!("noise_counts_per_point = {}", self.counts_per_point),
            format!("seed = {}", self.seed),
        ]
    }
}
