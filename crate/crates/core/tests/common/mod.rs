//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's quadrature, basis or φ code.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Adaptive Simpson quadrature of a complex integrand on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    fn simpson(fa: Complex64, fm: Complex64, fb: Complex64, a: f64, b: f64) -> Complex64 {
        (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> Complex64,
        a: f64,
        b: f64,
        fa: Complex64,
        fm: Complex64,
        fb: Complex64,
        whole: Complex64,
        tol: f64,
        depth: u32,
    ) -> Complex64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.norm() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 40)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `φ_m(z) = ∫_0^1 e^{(1-θ)z} θ^{m-1}/(m-1)! dθ` for `m ≥ 1`; `e^z` for 0.
pub fn phi_by_quadrature(m: usize, z: Complex64) -> Complex64 {
    if m == 0 {
        return z.exp();
    }
    let c = 1.0 / factorial(m - 1);
    let f = move |t: f64| (z * (1.0 - t)).exp() * (c * t.powi(m as i32 - 1));
    adaptive_simpson(&f, 0.0, 1.0, 1e-15)
}

/// Orthonormal shifted Legendre polynomials on `[0, 1]`, closed forms up
/// to degree 3.
pub fn psi_closed(j: usize, t: f64) -> f64 {
    match j {
        0 => 1.0,
        1 => 3f64.sqrt() * (2.0 * t - 1.0),
        2 => 5f64.sqrt() * (6.0 * t * t - 6.0 * t + 1.0),
        3 => 7f64.sqrt() * (20.0 * t.powi(3) - 30.0 * t * t + 12.0 * t - 1.0),
        _ => panic!("closed form only up to degree 3"),
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]` in closed form, `r ≤ 3`.
pub fn gauss_closed(r: usize) -> (Vec<f64>, Vec<f64>) {
    match r {
        1 => (vec![0.5], vec![1.0]),
        2 => {
            let d = 3f64.sqrt() / 6.0;
            (vec![0.5 - d, 0.5 + d], vec![0.5, 0.5])
        }
        3 => {
            let d = 15f64.sqrt() / 10.0;
            (
                vec![0.5 - d, 0.5, 0.5 + d],
                vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
            )
        }
        _ => panic!("closed form only up to r = 3"),
    }
}

/// `Ā_{τ,σ}(iλ) = ∫_0^1 e^{(1-ξ)τh iλ} Σ_j ψ_j(ξτ)ψ_j(σ) dξ` by adaptive
/// quadrature, for one eigenvalue `λ` of the Laplacian.
pub fn abar_by_quadrature(r: usize, tau: f64, sigma: f64, h: f64, lambda_k: f64) -> Complex64 {
    let f = move |xi: f64| {
        let kernel: f64 = (0..r)
            .map(|j| psi_closed(j, xi * tau) * psi_closed(j, sigma))
            .sum();
        Complex64::from_polar(kernel, (1.0 - xi) * tau * h * lambda_k)
    };
    adaptive_simpson(&f, 0.0, 1.0, 1e-15)
}

/// 100 seeded points for the φ oracle, spread over the small-argument
/// region, the switch at |z| = 0.5 and the imaginary axis.
pub fn phi_sample_points() -> Vec<(usize, Complex64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..100)
        .map(|i| {
            let m = rng.gen_range(0..=4);
            let z = match i % 3 {
                0 => Complex64::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)),
                1 => Complex64::from_polar(rng.gen_range(0.45..0.55), rng.gen_range(-3.2..3.2)),
                _ => Complex64::new(rng.gen_range(-1.0..0.2), rng.gen_range(-40.0..40.0)),
            };
            (m, z)
        })
        .collect()
}
