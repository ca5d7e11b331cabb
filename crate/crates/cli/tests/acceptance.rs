//! Release gates. Each test prints exactly one `CRITERION n PASS/FAIL`
//! line (visible with `--nocapture`); a FAIL line is followed by the
//! panic that fails the target. Tolerances are pinned here, next to the
//! checks they guard.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use twistlight::beam::{
    hygg_field, initial_field, lg_mode, max_intensity_radius, BeamParams, SuperpositionState,
};
use twistlight::coupling::{
    coupling_efficiency, profile_coupling_efficiency, simulated_distinguishability, FOVField,
};
use twistlight::grid::graded_radial_grid;
use twistlight::groupdelay::{
    accumulated_delay, estimator, lg_k2_analytic, superposition_delay, transverse_k2_numeric,
    RegularizationConfig,
};
use twistlight::hom::{coincidence_curve, default_scan_grid, fit_dip, PhotonPair};
use twistlight::propagate::{abcd_free_space, collins_propagate, rel_l2_distance};

fn params() -> BeamParams {
    BeamParams::new(795e-9, 1.5e-3).unwrap()
}

fn verdict(n: u32, failures: Vec<String>, pass_note: &str) {
    if failures.is_empty() {
        println!("CRITERION {n} PASS — {pass_note}");
    } else {
        println!("CRITERION {n} FAIL — {}", failures.join("; "));
        panic!("criterion {n}: {}", failures.join("; "));
    }
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("twistlight-acc-{}-{tag}", std::process::id()));
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_cli(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_twistlight"))
        .args(args)
        .output()
        .expect("spawn CLI");
    assert!(
        status.status.success(),
        "CLI {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&status.stderr)
    );
}

/// Data rows of a CSV (skips `#` comment lines and the header row),
/// honouring one optional leading double-quoted field.
fn csv_rows(path: &std::path::Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut rows = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = Vec::new();
        let rest = if let Some(stripped) = line.strip_prefix('"') {
            let end = stripped.find('"').expect("closing quote");
            cells.push(stripped[..end].to_string());
            stripped[end + 1..].trim_start_matches(',')
        } else {
            line
        };
        cells.extend(rest.split(',').map(|c| c.trim().to_string()));
        rows.push(cells);
    }
    rows
}

/// Reference arrival delays (μm) at 1.2 m and 2 m for three rungs of the
/// charge ladder. The wide band reflects that the regularization behind
/// them is not fully specified; `sensitivity` shows they sit inside the
/// exposed knob ranges.
const DELAY_REFERENCE_UM: [(u32, f64, f64); 3] = [(6, 3.8, 6.0), (10, 10.0, 15.6), (12, 14.0, 21.9)];
const DELAY_REL_BAND: f64 = 0.30;
const RATIO_BAND: (f64, f64) = (1.4, 1.7);

#[test]
fn criterion_1_delay_ladder() {
    let t0 = Instant::now();
    let dir = scratch("c1");
    run_cli(&["fig1", "-o", dir.to_str().unwrap()]);
    let rows = csv_rows(&dir.join("fig1_table.csv"));
    let mut failures = Vec::new();
    if rows.len() != 6 {
        failures.push(format!("expected 6 ladder rows, got {}", rows.len()));
    }
    for row in &rows {
        let l: u32 = row[0].parse().unwrap();
        let t12: f64 = row[1].parse().unwrap();
        let t20: f64 = row[2].parse().unwrap();
        let ratio: f64 = row[3].parse().unwrap();
        if !(RATIO_BAND.0..=RATIO_BAND.1).contains(&ratio) {
            failures.push(format!("ℓ = {l}: ratio {ratio:.3} outside [1.4, 1.7]"));
        }
        if let Some((_, r12, r20)) = DELAY_REFERENCE_UM.iter().find(|(rl, _, _)| *rl == l) {
            for (sim, reference, z) in [(t12, r12, 1.2), (t20, r20, 2.0)] {
                let rel = (sim - reference).abs() / reference;
                if rel > DELAY_REL_BAND {
                    failures.push(format!(
                        "ℓ = {l} at {z} m: {sim:.2} μm vs reference {reference} μm ({:.0}% off)",
                        rel * 100.0
                    ));
                }
            }
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed > 300.0 {
        failures.push(format!("took {elapsed:.0} s, budget 300 s"));
    }
    verdict(
        1,
        failures,
        "ladder delays within ±30% of the reference values, ratios in [1.4, 1.7]",
    );
}

#[test]
fn criterion_2_propagation_routes() {
    let t0 = Instant::now();
    let p = params();
    let src_grid = graded_radial_grid(p.waist, 8.0 * p.waist, 4096);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for l in [0i32, 1, 6, 10] {
        let src = initial_field(&p, l, &src_grid);
        for z in [0.3, 1.0, 2.0] {
            let scale = max_intensity_radius(&p, l, z).max(p.w(z));
            let out_grid = graded_radial_grid(scale, 6.0 * scale, 2048);
            let numeric =
                collins_propagate(&src, &abcd_free_space(z), &p, &out_grid).unwrap();
            let closed = hygg_field(&p, l, z, &out_grid).unwrap();
            let dist = rel_l2_distance(&numeric, &closed).unwrap();
            worst = worst.max(dist);
            if dist > 1e-3 {
                failures.push(format!("ℓ = {l}, z = {z} m: relative L² {dist:.2e} > 1e-3"));
            }
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed > 600.0 {
        failures.push(format!("took {elapsed:.0} s, budget 600 s"));
    }
    verdict(
        2,
        failures,
        &format!("quadrature vs closed-form fields, worst relative L² {worst:.1e} (≤ 1e-3)"),
    );
}

#[test]
fn criterion_3_waist_moment_oracle() {
    let p = params();
    let mut failures = Vec::new();

    // closed form and finite-difference Laplacian against 2(ℓ+1)/w₀²
    let r_max = 8.0 * p.waist;
    let n = 4000;
    let grid: Vec<f64> = (0..n).map(|i| r_max * i as f64 / (n - 1) as f64).collect();
    for l in 0..=12i32 {
        let expect = 2.0 * (l as f64 + 1.0) / (p.waist * p.waist);
        let closed = lg_k2_analytic(&p, l as u32, 0.0);
        if (closed - expect).abs() / expect > 0.01 {
            failures.push(format!("ℓ = {l}: closed form {closed:.4e} vs {expect:.4e}"));
        }
        let numeric = transverse_k2_numeric(&lg_mode(&p, 0, l, 0.0, &grid), r_max).unwrap();
        if (numeric.value - expect).abs() / expect > 0.01 {
            failures.push(format!(
                "ℓ = {l}: sampled Laplacian {:.4e} vs {expect:.4e}",
                numeric.value
            ));
        }
    }

    // the two estimator routes on the helically-imprinted fields
    let reg = RegularizationConfig::default().window_only();
    for (l, z) in [(1i32, 1.0), (6, 0.5), (6, 1.0), (10, 1.0), (12, 1.0)] {
        let a = estimator("analytic-terms")
            .unwrap()
            .estimate(&p, l, z, &reg)
            .unwrap()
            .value;
        let b = estimator("numeric-laplacian")
            .unwrap()
            .estimate(&p, l, z, &reg)
            .unwrap()
            .value;
        let rel = (a - b).abs() / a.max(b);
        if rel > 0.02 {
            failures.push(format!(
                "ℓ = {l}, z = {z} m: term route {a:.4e} vs grid route {b:.4e} ({rel:.1e})"
            ));
        }
    }
    verdict(
        3,
        failures,
        "waist moment 2(ℓ+1)/w₀² from both routes (1%), route agreement on twisted fields (2%)",
    );
}

#[test]
fn criterion_4_superposition_linearity() {
    let p = params();
    let reg = RegularizationConfig::default();
    let l = 10;
    let z = 2.0;
    let mut curves = BTreeMap::new();
    for charge in [0u32, l as u32] {
        curves.insert(charge, accumulated_delay(&p, charge, z, &reg).unwrap());
    }
    let curves: BTreeMap<i32, _> = curves.into_iter().map(|(k, v)| (k as i32, v)).collect();
    let tau_pure = curves[&l].delay_at(z).unwrap();
    let mut failures = Vec::new();
    for t in [0.1f64, 0.25, 0.5, 0.7, 0.9] {
        let state = SuperpositionState::two_mode(l, (1.0 - t).sqrt(), t.sqrt()).unwrap();
        let weight = state.coeff(l).unwrap().norm_sqr();
        let d = superposition_delay(&state, &curves, z).unwrap();
        if (d - weight * tau_pure).abs() > 1e-14 * tau_pure {
            failures.push(format!(
                "weight {weight:.3}: delay {d:.17e} vs {:.17e}",
                weight * tau_pure
            ));
        }
    }
    let half = SuperpositionState::two_mode(l, 0.5f64.sqrt(), 0.5f64.sqrt()).unwrap();
    let d_half = superposition_delay(&half, &curves, z).unwrap();
    if (d_half - 0.5 * tau_pure).abs() > 1e-15 * tau_pure {
        failures.push(format!(
            "equal superposition: {d_half:.17e} vs half the pure delay {:.17e}",
            0.5 * tau_pure
        ));
    }
    verdict(
        4,
        failures,
        "delay linear in the mode weights to machine precision; equal split gives half",
    );
}

#[test]
fn criterion_5_hom_round_trip() {
    let t0 = Instant::now();
    let mut failures = Vec::new();

    // noiseless recovery anywhere in the ±30 μm band, both pulse presets
    for pair in [
        PhotonPair::preset_160fs(0.9).unwrap(),
        PhotonPair::preset_400fs(0.9).unwrap(),
    ] {
        let grid = default_scan_grid(&pair);
        for k in 0..=24 {
            let delay = -30.0 + 60.0 * k as f64 / 24.0;
            let scan = coincidence_curve(&pair, delay, &grid, None).unwrap();
            let fit = fit_dip(&scan).unwrap();
            if (fit.center - delay).abs() > 0.05 {
                failures.push(format!(
                    "noiseless {delay:.1} μm recovered as {:.4} μm",
                    fit.center
                ));
            }
        }
    }

    // Monte-Carlo coverage of the reported 1σ at survey statistics
    let pair = PhotonPair::preset_160fs(0.9).unwrap();
    let grid = default_scan_grid(&pair);
    let trials = 1000;
    let mut covered = 0;
    for k in 0..trials {
        let delay = -20.0 + 40.0 * k as f64 / (trials - 1) as f64;
        let scan = coincidence_curve(&pair, delay, &grid, Some((1000.0, 31_000 + k as u64)))
            .unwrap();
        let fit = fit_dip(&scan).unwrap();
        if (fit.center - delay).abs() <= fit.center_sigma {
            covered += 1;
        }
    }
    let coverage = covered as f64 / trials as f64;
    if !(0.62..=0.74).contains(&coverage) {
        failures.push(format!("1σ coverage {coverage:.3} outside [0.62, 0.74]"));
    }
    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed > 120.0 {
        failures.push(format!("took {elapsed:.0} s, budget 120 s"));
    }
    verdict(
        5,
        failures,
        &format!("noiseless recovery < 0.05 μm; 1σ coverage {coverage:.3} in [0.62, 0.74]"),
    );
}

#[test]
fn criterion_6_history_discrimination() {
    let dir = scratch("c6");
    run_cli(&["hom-sim", "-o", dir.to_str().unwrap()]);
    let rows = csv_rows(&dir.join("hom_comparison.csv"));
    let mut failures = Vec::new();
    if rows.len() != 6 {
        failures.push(format!("expected 6 comparison rows, got {}", rows.len()));
    }
    let mut weakest = f64::INFINITY;
    for row in &rows {
        let label = &row[0];
        let sigma: f64 = row[3].parse().unwrap();
        let wave: f64 = row[4].parse().unwrap();
        let collapsed: f64 = row[5].parse().unwrap();
        if collapsed != 0.0 {
            failures.push(format!("{label}: collapsed-history column is {collapsed}, not 0"));
        }
        let sep = wave.abs() / sigma;
        weakest = weakest.min(sep);
        if sep <= 3.0 {
            failures.push(format!(
                "{label}: prediction {wave:.2} μm is only {sep:.1}σ from the collapsed 0"
            ));
        }
    }
    verdict(
        6,
        failures,
        &format!("comparison table emitted; weakest row separates at {weakest:.1}σ (> 3σ)"),
    );
}

#[test]
fn criterion_7_fiber_coupling() {
    let p = params();
    let mut failures = Vec::new();

    // matched field of view takes exactly the Gaussian weight
    let z = 1.0;
    let l = 10;
    let extent = 4.0 * max_intensity_radius(&p, l, z).max(p.w(z));
    let grid = graded_radial_grid(p.w(z), 2.0 * extent, 8192);
    let mut profiles = BTreeMap::new();
    profiles.insert(0, hygg_field(&p, 0, z, &grid).unwrap());
    profiles.insert(l, hygg_field(&p, l, z, &grid).unwrap());
    let fov = FOVField::new(profiles[&0].clone()).unwrap();
    let state = SuperpositionState::two_mode(l, 0.5f64.sqrt(), 0.5f64.sqrt()).unwrap();
    let alpha_sq = state.coeff(0).unwrap().norm_sqr();
    let eta = coupling_efficiency(&state, &profiles, &fov).unwrap();
    if (eta - alpha_sq).abs() > 1e-8 {
        failures.push(format!("matched coupling {eta:.12} vs α² = {alpha_sq:.12}"));
    }

    // waist-mismatched Gaussians against the closed form (2w₁w₂/(w₁²+w₂²))²
    let p2 = BeamParams::new(795e-9, 1.2e-3).unwrap();
    let g_grid = graded_radial_grid(p.waist, 10.0 * p.waist, 8192);
    let a = initial_field(&p, 0, &g_grid);
    let b = initial_field(&p2, 0, &g_grid);
    let got = profile_coupling_efficiency(&a, &b).unwrap();
    let (w1, w2) = (p.waist, p2.waist);
    let closed = (2.0 * w1 * w2 / (w1 * w1 + w2 * w2)).powi(2);
    if (got - closed).abs() > 1e-6 {
        failures.push(format!("waist mismatch {got:.9} vs closed form {closed:.9}"));
    }

    // which-mode filtering behind the 1.5 mm stop (diameter; radius 0.75 mm)
    let d = simulated_distinguishability(&p, 0, 10, 1.0, 0.75e-3, 1e6, 17).unwrap();
    if d < 0.98 {
        failures.push(format!("simulated distinguishability {d:.4} < 0.98"));
    }

    verdict(
        7,
        failures,
        "η = α² at 1e-8, Gaussian mismatch matches the closed form at 1e-6, D ≥ 0.98",
    );
}

#[test]
fn criterion_8_determinism() {
    let d1 = scratch("c8-first");
    let d2 = scratch("c8-second");
    for dir in [&d1, &d2] {
        run_cli(&["hom-sim", "-o", dir.to_str().unwrap()]);
        run_cli(&["mask", "-o", dir.to_str().unwrap()]);
    }
    let mut names: Vec<String> = fs::read_dir(&d1)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let mut failures = Vec::new();
    if names.is_empty() {
        failures.push("no outputs produced".into());
    }
    for name in &names {
        let first = fs::read(d1.join(name)).unwrap();
        let second = match fs::read(d2.join(name)) {
            Ok(b) => b,
            Err(_) => {
                failures.push(format!("{name} missing from the second run"));
                continue;
            }
        };
        if first != second {
            failures.push(format!("{name} differs between identical runs"));
        }
    }
    verdict(
        8,
        failures,
        &format!("{} outputs byte-identical across two seeded runs", names.len()),
    );
}
