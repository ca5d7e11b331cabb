//! Two-photon coincidence scans and what they measure: the arrival-time
//! shift of a twisted superposition against its Gaussian reference.
//!
//! A scan moves an air-gap delay line through the overlap of signal and
//! reference photons and records coincidences; the dip bottoms out where
//! the paths balance, so the dip centre *is* the arrival delay in optical
//! path units. Everything here works in micrometres of path — multiply by
//! 1/c for time. The model is a Gaussian dip on a flat baseline, which is
//! all that centre extraction needs; spectral detail beyond the pulse
//! duration never enters.

use crate::beam::SuperpositionState;
use crate::error::{Error, Result};
use crate::groupdelay::{superposition_delay, DelayCurve};
use crate::C_LIGHT;
use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::Poisson;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::str::FromStr;

/// Degenerate photon pair from the downconversion source.
#[derive(Clone, Copy, Debug)]
pub struct PhotonPair {
    /// Centre wavelength, metres.
    pub wavelength: f64,
    /// Pulse duration σ_t, seconds.
    pub sigma_t: f64,
    /// Dip visibility in (0, 1].
    pub visibility: f64,
}

impl PhotonPair {
    pub fn new(wavelength: f64, sigma_t: f64, visibility: f64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::Domain(format!(
                "pair wavelength must be positive, got {wavelength}"
            )));
        }
        if !(sigma_t > 0.0) {
            return Err(Error::Domain(format!(
                "pulse duration must be positive, got {sigma_t}"
            )));
        }
        if !(visibility > 0.0 && visibility <= 1.0) {
            return Err(Error::Domain(format!(
                "visibility must lie in (0, 1], got {visibility}"
            )));
        }
        Ok(Self { wavelength, sigma_t, visibility })
    }

    /// The short-pulse source: 160 fs at 795 nm.
    pub fn preset_160fs(visibility: f64) -> Result<Self> {
        Self::new(795e-9, 160e-15, visibility)
    }

    /// The long-pulse source: 400 fs at 795 nm.
    pub fn preset_400fs(visibility: f64) -> Result<Self> {
        Self::new(795e-9, 400e-15, visibility)
    }

    /// Gaussian σ of the dip in path units: c·σ_t, micrometres.
    pub fn dip_scale_um(&self) -> f64 {
        C_LIGHT * self.sigma_t * 1e6
    }
}

/// Provenance of a scan's fluctuations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseModel {
    Noiseless,
    Poisson { counts_per_point: f64, seed: u64 },
}

/// One coincidence scan over the delay line.
#[derive(Clone, Debug)]
pub struct HOMScan {
    /// Air-gap offsets, micrometres, strictly increasing.
    pub positions: Vec<f64>,
    /// Coincidence rate at each offset, baseline-normalized.
    pub rates: Vec<f64>,
    /// Raw counts when the scan is a sampled one.
    pub counts: Option<Vec<u64>>,
    pub noise: NoiseModel,
}

impl HOMScan {
    pub fn new(
        positions: Vec<f64>,
        rates: Vec<f64>,
        counts: Option<Vec<u64>>,
        noise: NoiseModel,
    ) -> Result<Self> {
        if positions.len() != rates.len() {
            return Err(Error::Domain(format!(
                "{} positions but {} rates",
                positions.len(),
                rates.len()
            )));
        }
        if let Some(c) = &counts {
            if c.len() != positions.len() {
                return Err(Error::Domain(format!(
                    "{} positions but {} count samples",
                    positions.len(),
                    c.len()
                )));
            }
        }
        if positions.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(
                "scan positions must be strictly increasing".into(),
            ));
        }
        if rates.iter().any(|&r| !(r >= 0.0)) {
            return Err(Error::Domain("scan rates must be non-negative".into()));
        }
        Ok(Self { positions, rates, counts, noise })
    }
}

/// Evenly spaced scan grid sized to the pair: ±150 μm for the 160 fs
/// source, scaled proportionally for longer pulses, 61 points.
pub fn default_scan_grid(pair: &PhotonPair) -> Vec<f64> {
    let span = 150.0 * (pair.sigma_t / 160e-15);
    (0..61).map(|i| -span + i as f64 * span / 30.0).collect()
}

/// Synthesize a coincidence scan with the dip centred at `true_delay_um`:
/// rate(x) = 1 − V·exp(−(x − d)²/(2(cσ_t)²)), optionally Poisson-sampled
/// at `noise` = (counts-per-point, seed).
pub fn coincidence_curve(
    pair: &PhotonPair,
    true_delay_um: f64,
    grid: &[f64],
    noise: Option<(f64, u64)>,
) -> Result<HOMScan> {
    let sigma = pair.dip_scale_um();
    let lo = grid.first().copied().unwrap_or(f64::NAN);
    let hi = grid.last().copied().unwrap_or(f64::NAN);
    if !(lo <= true_delay_um - sigma + 1e-6 && hi >= true_delay_um + sigma - 1e-6) {
        return Err(Error::Domain(format!(
            "scan grid [{lo}, {hi}] μm does not span the dip at {true_delay_um} μm \
             (width cσ_t = {sigma:.1} μm)"
        )));
    }
    let model = |x: f64| {
        let u = (x - true_delay_um) / sigma;
        1.0 - pair.visibility * (-0.5 * u * u).exp()
    };
    match noise {
        None => {
            let rates = grid.iter().map(|&x| model(x)).collect();
            HOMScan::new(grid.to_vec(), rates, None, NoiseModel::Noiseless)
        }
        Some((cpp, seed)) => {
            if !(cpp > 0.0) {
                return Err(Error::Domain(format!(
                    "counts-per-point must be positive, got {cpp}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut counts = Vec::with_capacity(grid.len());
            for &x in grid {
                let lambda = cpp * model(x);
                let n = if lambda > 0.0 {
                    Poisson::new(lambda)
                        .map_err(|e| Error::Domain(format!("poisson rate: {e}")))?
                        .sample(&mut rng) as u64
                } else {
                    0
                };
                counts.push(n);
            }
            let rates = counts.iter().map(|&n| n as f64 / cpp).collect();
            HOMScan::new(
                grid.to_vec(),
                rates,
                Some(counts),
                NoiseModel::Poisson { counts_per_point: cpp, seed },
            )
        }
    }
}

/// Result of fitting the Gaussian-dip model b·(1 − v·e^{−(x−c)²/2w²}).
#[derive(Clone, Debug)]
pub struct DipFit {
    /// Dip centre, micrometres: the extracted arrival delay.
    pub center: f64,
    pub visibility: f64,
    /// Gaussian σ of the dip, micrometres.
    pub width: f64,
    /// Fitted baseline, in the units the scan was fit in.
    pub baseline: f64,
    /// 1σ uncertainty of the centre from the fit covariance.
    pub center_sigma: f64,
    /// Full parameter covariance, order (baseline, visibility, centre, width).
    pub covariance: [[f64; 4]; 4],
    /// Weighted RMS residual of the converged fit.
    pub residual: f64,
}

fn model_and_jacobian(theta: &[f64; 4], x: f64) -> (f64, [f64; 4]) {
    let [b, v, c, w] = *theta;
    let u = (x - c) / w;
    let e = (-0.5 * u * u).exp();
    let m = b * (1.0 - v * e);
    let db = 1.0 - v * e;
    let dv = -b * e;
    let dc = -b * v * e * (x - c) / (w * w);
    let dw = -b * v * e * (x - c) * (x - c) / (w * w * w);
    (m, [db, dv, dc, dw])
}

fn solve4(a: &mut [[f64; 4]; 4], rhs: &mut [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut out = [0.0; 4];
    for col in (0..4).rev() {
        let mut s = rhs[col];
        for k in col + 1..4 {
            s -= a[col][k] * out[k];
        }
        out[col] = s / a[col][col];
    }
    Some(out)
}

fn invert4(m: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mut inv = [[0.0; 4]; 4];
    for col in 0..4 {
        let mut a = *m;
        let mut e = [0.0; 4];
        e[col] = 1.0;
        let x = solve4(&mut a, &mut e)?;
        for row in 0..4 {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

/// Weighted least squares of the Gaussian-dip model by Levenberg—Marquardt.
/// Sampled scans are fit in counts space with inverse-Poisson weights;
/// noiseless scans in rate space with unit weights and the covariance
/// scaled by the reduced residual.
pub fn fit_dip(scan: &HOMScan) -> Result<DipFit> {
    let n = scan.positions.len();
    if n < 7 {
        return Err(Error::Domain(format!(
            "dip fitting needs at least 7 points, got {n}"
        )));
    }
    let (y, weights, scale_cov): (Vec<f64>, Vec<f64>, bool) = match &scan.counts {
        Some(c) => (
            c.iter().map(|&v| v as f64).collect(),
            c.iter().map(|&v| 1.0 / (v as f64).max(1.0)).collect(),
            false,
        ),
        None => (scan.rates.clone(), vec![1.0; n], true),
    };

    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    let baseline0 = 0.5 * (sorted[(n - 1) / 2] + sorted[n / 2]);
    let (i_min, &y_min) = y
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("n ≥ 7");
    if !(baseline0 > 0.0) || (baseline0 - y_min) / baseline0 < 0.02 {
        return Err(Error::Fit(format!(
            "no visible dip: baseline {baseline0:.3}, minimum {y_min:.3}"
        )));
    }
    let center0 = scan.positions[i_min];
    let vis0 = (1.0 - y_min / baseline0).clamp(0.05, 0.999);
    let half = baseline0 - 0.5 * (baseline0 - y_min);
    let below: Vec<f64> = scan
        .positions
        .iter()
        .zip(&y)
        .filter(|(_, &yi)| yi < half)
        .map(|(&x, _)| x)
        .collect();
    let span = scan.positions[n - 1] - scan.positions[0];
    let width0 = if below.len() >= 2 {
        ((below[below.len() - 1] - below[0]) / 2.355).max(span / 200.0)
    } else {
        span / 8.0
    };

    let mut theta = [baseline0, vis0, center0, width0];
    let ssr_of = |t: &[f64; 4]| -> f64 {
        scan.positions
            .iter()
            .zip(&y)
            .zip(&weights)
            .map(|((&x, &yi), &wi)| {
                let (m, _) = model_and_jacobian(t, x);
                wi * (yi - m) * (yi - m)
            })
            .sum()
    };
    let mut ssr = ssr_of(&theta);
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..200 {
        // normal equations JᵀWJ, JᵀW·r at the current point
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for (&x, (&yi, &wi)) in scan.positions.iter().zip(y.iter().zip(&weights)) {
            let (m, jac) = model_and_jacobian(&theta, x);
            let r = yi - m;
            for a in 0..4 {
                jtr[a] += wi * jac[a] * r;
                for b in a..4 {
                    jtj[a][b] += wi * jac[a] * jac[b];
                }
            }
        }
        for a in 0..4 {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }
        let mut stepped = false;
        for _ in 0..60 {
            let mut damped = jtj;
            for d in 0..4 {
                damped[d][d] *= 1.0 + lambda;
            }
            let mut rhs = jtr;
            let Some(delta) = solve4(&mut damped, &mut rhs) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [
                theta[0] + delta[0],
                theta[1] + delta[1],
                theta[2] + delta[2],
                theta[3] + delta[3],
            ];
            if !trial.iter().all(|t| t.is_finite()) || trial[3] == 0.0 {
                lambda *= 10.0;
                continue;
            }
            let trial_ssr = ssr_of(&trial);
            if trial_ssr <= ssr {
                let rel: f64 = delta
                    .iter()
                    .zip(&theta)
                    .map(|(d, t)| (d / t.abs().max(1e-12)).abs())
                    .fold(0.0, f64::max);
                let improved = ssr - trial_ssr;
                theta = trial;
                ssr = trial_ssr;
                lambda = (lambda / 3.0).max(1e-14);
                stepped = true;
                if rel < 1e-12 || improved <= 1e-14 * ssr.max(1e-300) {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if converged {
            break;
        }
        if !stepped {
            return Err(Error::Fit(format!(
                "step search stalled at damping {lambda:.1e}, residual {ssr:.3e}"
            )));
        }
    }
    if !converged {
        return Err(Error::Fit(format!(
            "no convergence after 200 iterations, residual {ssr:.3e}"
        )));
    }

    theta[3] = theta[3].abs(); // the model is even in the width
    let mut jtj = [[0.0; 4]; 4];
    for (&x, &wi) in scan.positions.iter().zip(&weights) {
        let (_, jac) = model_and_jacobian(&theta, x);
        for a in 0..4 {
            for b in a..4 {
                jtj[a][b] += wi * jac[a] * jac[b];
            }
        }
    }
    for a in 0..4 {
        for b in 0..a {
            jtj[a][b] = jtj[b][a];
        }
    }
    let mut cov = invert4(&jtj)
        .ok_or_else(|| Error::Fit("singular normal equations at the optimum".into()))?;
    if scale_cov {
        let s2 = ssr / (n - 4) as f64;
        for row in cov.iter_mut() {
            for v in row.iter_mut() {
                *v *= s2;
            }
        }
    }
    let fit = DipFit {
        center: theta[2],
        visibility: theta[1],
        width: theta[3],
        baseline: theta[0],
        center_sigma: cov[2][2].max(0.0).sqrt(),
        covariance: cov,
        residual: (ssr / n as f64).sqrt(),
    };
    if !(fit.width > 0.0) || !fit.center.is_finite() {
        return Err(Error::Fit(format!(
            "degenerate optimum: centre {}, width {}",
            fit.center, fit.width
        )));
    }
    Ok(fit)
}

/// Arrival-delay shift between two scans: centre(signal) − centre(reference).
pub fn arrival_delay_shift(reference: &HOMScan, signal: &HOMScan) -> Result<f64> {
    Ok(fit_dip(signal)?.center - fit_dip(reference)?.center)
}

/// What the photon's past is made of, as a testable alternative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hypothesis {
    /// The detected Gaussian mode was the mode all along: no delay.
    CollapsedHistory,
    /// The full superposition propagated until detection: the
    /// weight-averaged delay survives in the arrival time.
    WavefunctionHistory,
}

impl FromStr for Hypothesis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "collapsed-history" => Ok(Self::CollapsedHistory),
            "wavefunction-history" => Ok(Self::WavefunctionHistory),
            other => Err(Error::Lookup(format!(
                "unknown hypothesis '{other}'; use collapsed-history or wavefunction-history"
            ))),
        }
    }
}

/// Predicted arrival delay, micrometres of path, for a state detected
/// after distance `z` under each hypothesis.
pub fn predict_delay(
    hypothesis: Hypothesis,
    state: &SuperpositionState,
    z: f64,
    curves: &BTreeMap<i32, DelayCurve>,
) -> Result<f64> {
    match hypothesis {
        Hypothesis::CollapsedHistory => Ok(0.0),
        Hypothesis::WavefunctionHistory => Ok(superposition_delay(state, curves, z)? * 1e6),
    }
}

/// One measured arrival-delay shift bundled for comparison output.
#[derive(Clone, Debug)]
pub struct ReferenceRow {
    pub label: &'static str,
    /// The prepared signal-arm state.
    pub state: SuperpositionState,
    /// Shift reference; `None` means the plain Gaussian path.
    pub reference_state: Option<SuperpositionState>,
    /// Free-space propagation distance, metres.
    pub distance: f64,
    /// Measured shift, micrometres.
    pub measured_um: f64,
    /// Quoted 1σ uncertainty, micrometres.
    pub sigma_um: f64,
}

impl ReferenceRow {
    /// Wavefunction-history prediction for this row's shift, micrometres.
    pub fn predicted_um(&self, curves: &BTreeMap<i32, DelayCurve>) -> Result<f64> {
        let s = predict_delay(Hypothesis::WavefunctionHistory, &self.state, self.distance, curves)?;
        let r = match &self.reference_state {
            Some(st) => {
                predict_delay(Hypothesis::WavefunctionHistory, st, self.distance, curves)?
            }
            None => 0.0,
        };
        Ok(s - r)
    }
}

/// The six measured shifts this simulation is compared against.
pub fn reference_dataset() -> Vec<ReferenceRow> {
    let h = 0.5f64.sqrt();
    let eq = |l: i32| SuperpositionState::two_mode(l, h, h).expect("valid two-mode state");
    vec![
        ReferenceRow {
            label: "sqrt(1/2)(|0> + |12>), 1.2 m",
            state: eq(12),
            reference_state: None,
            distance: 1.2,
            measured_um: 4.93,
            sigma_um: 0.61,
        },
        ReferenceRow {
            label: "sqrt(1/2)(|0> + |12>), 2 m",
            state: eq(12),
            reference_state: None,
            distance: 2.0,
            measured_um: 7.51,
            sigma_um: 0.46,
        },
        ReferenceRow {
            label: "sqrt(1/2)(|0> + |6>) vs |0>, 2 m",
            state: eq(6),
            reference_state: None,
            distance: 2.0,
            measured_um: 3.76,
            sigma_um: 0.33,
        },
        ReferenceRow {
            label: "sqrt(1/2)(|0> + |12>) vs sqrt(1/2)(|0> + |6>), 2 m",
            state: eq(12),
            reference_state: Some(eq(6)),
            distance: 2.0,
            measured_um: 4.12,
            sigma_um: 0.56,
        },
        ReferenceRow {
            label: "sqrt(1/2)(|0> + |10>), 2 m",
            state: eq(10),
            reference_state: None,
            distance: 2.0,
            measured_um: 6.06,
            sigma_um: 0.36,
        },
        ReferenceRow {
            label: "sqrt(3/4)|0> + sqrt(1/4)|10>, 2 m",
            state: SuperpositionState::two_mode(10, 0.75f64.sqrt(), 0.5)
                .expect("valid two-mode state"),
            reference_state: None,
            distance: 2.0,
            measured_um: 3.29,
            sigma_um: 0.51,
        },
    ]
}

/// Write a scan as CSV: `position_um,rate[,counts]`, with `# seed=` and
/// `# counts_per_point=` headers when the scan is synthetic. Floats use
/// the shortest exact representation, so a write→read cycle is lossless.
pub fn write_scan_csv<W: Write>(scan: &HOMScan, out: &mut W) -> std::io::Result<()> {
    if let NoiseModel::Poisson { counts_per_point, seed } = scan.noise {
        writeln!(out, "# seed={seed}")?;
        writeln!(out, "# counts_per_point={counts_per_point}")?;
    }
    match &scan.counts {
        Some(counts) => {
            writeln!(out, "position_um,rate,counts")?;
            for ((x, r), n) in scan.positions.iter().zip(&scan.rates).zip(counts) {
                writeln!(out, "{x},{r},{n}")?;
            }
        }
        None => {
            writeln!(out, "position_um,rate")?;
            for (x, r) in scan.positions.iter().zip(&scan.rates) {
                writeln!(out, "{x},{r}")?;
            }
        }
    }
    Ok(())
}

/// Read a scan written by [`write_scan_csv`].
pub fn read_scan_csv<R: BufRead>(input: R) -> Result<HOMScan> {
    let mut seed: Option<u64> = None;
    let mut cpp: Option<f64> = None;
    let mut positions = Vec::new();
    let mut rates = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut has_counts = false;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("seed=") {
                seed = Some(v.trim().parse().map_err(|e| {
                    Error::Domain(format!("scan csv line {}: bad seed: {e}", idx + 1))
                })?);
            } else if let Some(v) = rest.strip_prefix("counts_per_point=") {
                cpp = Some(v.trim().parse().map_err(|e| {
                    Error::Domain(format!("scan csv line {}: bad counts_per_point: {e}", idx + 1))
                })?);
            }
            continue;
        }
        if line.starts_with("position_um") {
            has_counts = line.split(',').count() == 3;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 || (has_counts && fields.len() != 3) {
            return Err(Error::Domain(format!(
                "scan csv line {}: expected {} fields, got {}",
                idx + 1,
                if has_counts { 3 } else { 2 },
                fields.len()
            )));
        }
        let parse = |what: &str, s: &str| -> Result<f64> {
            s.trim().parse().map_err(|e| {
                Error::Domain(format!("scan csv line {}: bad {what}: {e}", idx + 1))
            })
        };
        positions.push(parse("position", fields[0])?);
        rates.push(parse("rate", fields[1])?);
        if has_counts {
            counts.push(fields[2].trim().parse().map_err(|e| {
                Error::Domain(format!("scan csv line {}: bad counts: {e}", idx + 1))
            })?);
        }
    }
    let noise = match (seed, cpp) {
        (Some(seed), Some(counts_per_point)) => NoiseModel::Poisson { counts_per_point, seed },
        _ => NoiseModel::Noiseless,
    };
    HOMScan::new(positions, rates, has_counts.then_some(counts), noise)
}
