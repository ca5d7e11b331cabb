//! Quadrature and discretization helpers shared by the field and
//! expectation-value modules: graded radial grids, trapezoid integration,
//! Gauss–Legendre panels, and finite-difference weights on scattered nodes.

use std::sync::OnceLock;

/// Default radial sample count.
pub const DEFAULT_RADIAL_POINTS: usize = 4096;

/// Graded radial grid on [0, r_max]: r = 0, then geometric spacing up to
/// `r_scale` (the beam/ring scale), then linear spacing to `r_max`.
/// The geometric section keeps ≳20 samples per decade-fraction near the
/// vortex core where the intensity rises like r^{2ℓ}.
pub fn graded_radial_grid(r_scale: f64, r_max: f64, n: usize) -> Vec<f64> {
    assert!(r_scale > 0.0 && r_max > r_scale && n >= 16);
    let n_geo = n / 2;
    let n_lin = n - n_geo - 1;
    let r_min = r_max * 1e-5;
    let mut r = Vec::with_capacity(n);
    r.push(0.0);
    let q = (r_scale / r_min).powf(1.0 / (n_geo - 1) as f64);
    let mut x = r_min;
    for _ in 0..n_geo {
        r.push(x);
        x *= q;
    }
    let h = (r_max - r_scale) / n_lin as f64;
    for i in 1..=n_lin {
        r.push(r_scale + h * i as f64);
    }
    r
}

/// Trapezoid rule on an arbitrary strictly increasing grid.
pub fn trapz(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mut acc = 0.0;
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    }
    acc
}

/// Gauss–Legendre nodes and weights on [−1, 1], computed by Newton iteration
/// on the Legendre recurrence. Common orders are cached.
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Vec<(usize, (Vec<f64>, Vec<f64>))>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        [16usize, 24, 32, 48, 64]
            .iter()
            .map(|&m| (m, compute_gauss_legendre(m)))
            .collect()
    });
    cache
        .iter()
        .find(|(m, _)| *m == n)
        .map(|(_, nw)| nw)
        .unwrap_or_else(|| panic!("uncached Gauss-Legendre order {n}"))
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P'_n(x) via the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// ∫ₐᵇ f(x) dx by a single Gauss–Legendre panel of order n.
pub fn gl_panel<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> f64 {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (b + a);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..n {
        acc += w[i] * f(c + h * x[i]);
    }
    acc * h
}

/// Panel edges: `n_geo` geometrically spaced panels on [a, m] followed by
/// `n_lin` uniform panels on [m, b]. Used for integrands with a steep core
/// and an oscillatory tail.
pub fn geo_linear_edges(a: f64, m: f64, b: f64, n_geo: usize, n_lin: usize) -> Vec<f64> {
    assert!(a > 0.0 && m > a && b > m);
    let mut edges = Vec::with_capacity(n_geo + n_lin + 1);
    let q = (m / a).powf(1.0 / n_geo as f64);
    let mut x = a;
    for _ in 0..n_geo {
        edges.push(x);
        x *= q;
    }
    let h = (b - m) / n_lin as f64;
    for i in 0..=n_lin {
        edges.push(m + h * i as f64);
    }
    edges
}

/// Finite-difference weights (Fornberg's algorithm): returns `w[d][j]` such
/// that Σⱼ w[d][j]·f(xs[j]) approximates f^{(d)}(x0), for d = 0..=m.
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    assert!(n > m);
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn graded_grid_shape() {
        let g = graded_radial_grid(1.5e-3, 6e-3, DEFAULT_RADIAL_POINTS);
        assert_eq!(g.len(), DEFAULT_RADIAL_POINTS);
        assert_eq!(g[0], 0.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_relative_eq!(*g.last().unwrap(), 6e-3, max_relative = 1e-12);
        // dense near the core: for an r^{2ℓ} intensity rise (ℓ=10) at ring
        // radius ~ r_scale, at least 16 samples sit in the top decade of the
        // rise [0.89·r_scale, r_scale]
        let lo = 1.5e-3 * 0.1f64.powf(1.0 / 20.0);
        let cnt = g.iter().filter(|&&r| r >= lo && r <= 1.5e-3).count();
        assert!(cnt >= 16, "only {cnt} samples in the core rise");
    }

    #[test]
    fn trapz_linear_exact() {
        let x: Vec<f64> = (0..=100).map(|i| (i as f64 / 100.0).powi(2)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        assert_relative_eq!(trapz(&x, &y), 2.5, max_relative = 1e-13);
    }

    #[test]
    fn gauss_legendre_basics() {
        for &n in &[16usize, 24, 32, 48, 64] {
            let (x, w) = gauss_legendre(n);
            assert_eq!(x.len(), n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-13);
            for i in 0..n {
                assert_abs_diff_eq!(x[i], -x[n - 1 - i], epsilon = 1e-13);
            }
        }
        // degree-2n−1 exactness: ∫₋₁¹ x⁶ dx = 2/7 with n=4-equivalent order 16
        let v = gl_panel(-1.0, 1.0, 16, |x| x.powi(6));
        assert_relative_eq!(v, 2.0 / 7.0, max_relative = 1e-13);
        let v = gl_panel(0.0, std::f64::consts::PI, 32, |x| x.sin());
        assert_relative_eq!(v, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn geo_linear_edge_layout() {
        let e = geo_linear_edges(1e-6, 1e-3, 1e-2, 10, 20);
        assert_eq!(e.len(), 31);
        assert!(e.windows(2).all(|w| w[1] > w[0]));
        assert_relative_eq!(e[10], 1e-3, max_relative = 1e-12);
        assert_relative_eq!(e[30], 1e-2, max_relative = 1e-12);
    }

    #[test]
    fn fd_weights_differentiate_polynomials_exactly() {
        let xs = [0.1, 0.13, 0.19, 0.23, 0.31];
        let x0 = 0.19;
        let w = fd_weights(x0, &xs, 2);
        // f(x) = x³: f'' = 6x, f' = 3x²
        let f: Vec<f64> = xs.iter().map(|x| x.powi(3)).collect();
        let d1: f64 = w[1].iter().zip(&f).map(|(wi, fi)| wi * fi).sum();
        let d2: f64 = w[2].iter().zip(&f).map(|(wi, fi)| wi * fi).sum();
        assert_relative_eq!(d1, 3.0 * x0 * x0, max_relative = 1e-10);
        assert_relative_eq!(d2, 6.0 * x0, max_relative = 1e-9);
        // weights for the 0th derivative interpolate
        let d0: f64 = w[0].iter().zip(&f).map(|(wi, fi)| wi * fi).sum();
        assert_relative_eq!(d0, x0.powi(3), max_relative = 1e-12);
    }

    #[test]
    fn fd_weights_fourth_order_on_smooth_function() {
        // 5-point stencil on a mildly graded grid: error should drop ~16x
        // when h halves
        let err = |h: f64| {
            let xs = [-2.0 * h, -h * 0.9, 0.0, h * 1.1, 2.0 * h];
            let w = fd_weights(0.0, &xs, 2);
            let f: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
            let d2: f64 = w[2].iter().zip(&f).map(|(wi, fi)| wi * fi).sum();
            (d2 - 0.0f64.sin() * -1.0).abs()
        };
        let e1 = err(1e-2);
        let e2 = err(5e-3);
        assert!(e1 / e2 > 6.0, "e1={e1:.3e} e2={e2:.3e}");
    }
}
