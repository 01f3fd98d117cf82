//! Product quadrature on spheres: Gauss-Legendre in `cos(colatitude)`
//! times the periodic trapezoid rule in longitude.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates `f(x, y, z)` over the sphere of radius `radius` with `n`
/// Gauss-Legendre nodes in `cos(colatitude)` and `n` trapezoid nodes in
/// longitude.
pub fn integrate_sphere<F>(radius: f64, n: usize, mut f: F) -> f64
where
    F: FnMut(f64, f64, f64) -> f64,
{
    let (nodes, weights) = gauss_legendre(n);
    let dphi = 2.0 * PI / n as f64;
    let mut total = 0.0;
    for (&u, &w) in nodes.iter().zip(&weights) {
        let s = (1.0 - u * u).max(0.0).sqrt();
        let mut ring = 0.0;
        for j in 0..n {
            let phi = (j as f64 + 0.5) * dphi;
            ring += f(radius * s * phi.cos(), radius * s * phi.sin(), radius * u);
        }
        total += w * ring * dphi;
    }
    total * radius * radius
}
