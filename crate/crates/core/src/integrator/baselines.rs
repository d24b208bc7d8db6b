use num_complex::Complex64;

use super::{linear_propagator, relative_change, IntegratorError, ResidualMonitor, StepperConfig};
use crate::collocation::{gauss_legendre, spectrum_phi_table};
use crate::spectral::{SpectralField, TorusGrid};

const AVF_NODES: usize = 4;

/// Strang splitting: half nonlinear flow, full linear flow, half nonlinear
/// flow. The nonlinear substep is the exact phase rotation
/// `u ↦ u e^{-iλ|u|²τ}`.
pub fn step_strang(u: &SpectralField, lambda: f64, h: f64) -> SpectralField {
    strang_with(u, &linear_propagator(u.grid(), h), lambda, h)
}

pub(crate) fn strang_with(
    u: &SpectralField,
    propagator: &[Complex64],
    lambda: f64,
    h: f64,
) -> SpectralField {
    let grid = u.grid();
    let mut buf = u.physical_values();
    rotate(&mut buf, lambda, 0.5 * h);
    grid.forward(&mut buf);
    buf.iter_mut().zip(propagator).for_each(|(v, e)| *v *= e);
    grid.inverse(&mut buf);
    rotate(&mut buf, lambda, 0.5 * h);
    SpectralField::from_physical(grid.clone(), buf).expect("grid-sized buffer")
}

fn rotate(values: &mut [Complex64], lambda: f64, tau: f64) {
    if lambda == 0.0 {
        return;
    }
    values
        .iter_mut()
        .for_each(|v| *v *= Complex64::from_polar(1.0, -lambda * v.norm_sqr() * tau));
}

/// Diagonal data for the exponential AVF step: `e^{hiΛ}` and `φ_1(hiΛ)`.
#[derive(Debug, Clone)]
pub struct EavfOperators {
    h: f64,
    propagator: Vec<Complex64>,
    phi1: Vec<Complex64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl EavfOperators {
    pub fn new(grid: &TorusGrid, h: f64) -> Self {
        let table = spectrum_phi_table(grid, 1.0, h, 1);
        let (nodes, weights) = gauss_legendre(AVF_NODES);
        Self {
            h,
            propagator: table.order(0).to_vec(),
            phi1: table.order(1).to_vec(),
            nodes,
            weights,
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }
}

/// Exponential AVF step
/// `u⁺ = e^{hiΛ}u + i h φ_1(hiΛ) ∫_0^1 f((1-σ)u + σu⁺) dσ`,
/// with the σ-integral done by 4-point Gauss quadrature (exact for the cubic
/// nonlinearity) and `u⁺` found by Picard iteration from `e^{hiΛ}u`.
///
/// Returns the new field, iterations used and the final residual.
pub fn step_eavf(
    u: &SpectralField,
    ops: &EavfOperators,
    lambda: f64,
    cfg: &StepperConfig,
) -> Result<(SpectralField, usize, f64), IntegratorError> {
    let grid = u.grid();
    let u_hat = u.fourier_values();
    let u_phys = u.physical_values();
    let mask = grid.dealiased().then(|| grid.dealias_mask());
    let free: Vec<Complex64> = ops
        .propagator
        .iter()
        .zip(&u_hat)
        .map(|(e, v)| e * v)
        .collect();
    let ih = Complex64::new(0.0, ops.h);

    let mut next = free.clone();
    let mut monitor = ResidualMonitor::default();
    let mut iterations = 0;
    let mut residual;
    loop {
        iterations += 1;
        let mut avg = vec![Complex64::new(0.0, 0.0); u_hat.len()];
        if lambda != 0.0 {
            let mut next_phys = next.clone();
            grid.inverse(&mut next_phys);
            for (&s, &w) in ops.nodes.iter().zip(&ops.weights) {
                for ((a, p), q) in avg.iter_mut().zip(&u_phys).zip(&next_phys) {
                    let v = (1.0 - s) * p + s * q;
                    *a += w * (-lambda * v.norm_sqr()) * v;
                }
            }
            grid.forward(&mut avg);
            if let Some(mask) = &mask {
                avg.iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
            }
        }
        let candidate: Vec<Complex64> = free
            .iter()
            .zip(&ops.phi1)
            .zip(&avg)
            .map(|((e, p), a)| e + ih * p * a)
            .collect();
        residual = relative_change(&candidate, &next);
        next = candidate;
        monitor.push(residual)?;
        if residual <= cfg.fp_tol || iterations >= cfg.fp_max_iter {
            break;
        }
    }
    if next.iter().any(|v| !v.is_finite()) {
        return Err(IntegratorError::Divergence {
            step: None,
            iteration: iterations,
            residual: f64::INFINITY,
        });
    }
    let field = SpectralField::from_fourier(grid.clone(), next).expect("grid-sized buffer");
    Ok((field, iterations, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::Method;
    use crate::spectral::make_grid;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn plane_wave(g: &Arc<TorusGrid>, a: f64, t: f64, lambda: f64) -> SpectralField {
        let omega = -(1.0 + lambda * a * a);
        SpectralField::from_fn(g.clone(), |x| Complex64::from_polar(a, x[0] + omega * t))
    }

    #[test]
    fn linear_limits() {
        let g = Arc::new(make_grid(1, 32, 2.0 * PI).unwrap());
        let u = SpectralField::from_fn(g.clone(), |x| {
            Complex64::new(x[0].cos(), (3.0 * x[0]).sin())
        });
        let exact = u
            .clone()
            .apply_diagonal(&linear_propagator(&g, 0.7))
            .unwrap();
        assert!(step_strang(&u, 0.0, 0.7).l2_distance(&exact) < 1e-13);
        let ops = EavfOperators::new(&g, 0.7);
        let (v, it, _) = step_eavf(&u, &ops, 0.0, &StepperConfig::new(Method::Eavf, 0.7)).unwrap();
        assert_eq!(it, 1);
        assert!(v.l2_distance(&exact) < 1e-13);
    }

    #[test]
    fn strang_local_error_is_third_order() {
        let g = Arc::new(make_grid(1, 16, 2.0 * PI).unwrap());
        let mut errs = vec![];
        let u0 = SpectralField::from_fn(g.clone(), |x| {
            Complex64::new(0.5 + 0.2 * x[0].cos(), 0.1 * x[0].sin())
        });
        for h in [0.02, 0.01] {
            // two half steps as reference
            let mut fine = u0.clone();
            for _ in 0..64 {
                fine = step_strang(&fine, -1.0, h / 64.0);
            }
            errs.push(step_strang(&u0, -1.0, h).l2_distance(&fine));
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 6.5 && ratio < 9.5, "ratio {ratio}");
    }

    #[test]
    fn strang_plane_wave_and_mass() {
        let g = Arc::new(make_grid(1, 16, 2.0 * PI).unwrap());
        let u = plane_wave(&g, 0.8, 0.0, -2.0);
        let v = step_strang(&u, -2.0, 0.01);
        // single-mode |u| is constant, so splitting is exact here
        assert!(v.l2_distance(&plane_wave(&g, 0.8, 0.01, -2.0)) < 1e-14);

        let mut w =
            SpectralField::from_fn(g, |x| Complex64::new(1.0 / (1.0 + x[0].sin().powi(2)), 0.0));
        let m0 = w.mass();
        for _ in 0..1000 {
            w = step_strang(&w, -1.0, 0.01);
        }
        assert!((w.mass() - m0).abs() < 1e-11);
    }

    #[test]
    fn eavf_order_two_on_plane_wave() {
        let g = Arc::new(make_grid(1, 16, 2.0 * PI).unwrap());
        let t_end = 1.0;
        let mut errs = vec![];
        for n in [20usize, 40] {
            let h = t_end / n as f64;
            let ops = EavfOperators::new(&g, h);
            let cfg = StepperConfig::new(Method::Eavf, h).with_fixed_point(1e-14, 50);
            let mut u = plane_wave(&g, 0.8, 0.0, -2.0);
            for _ in 0..n {
                u = step_eavf(&u, &ops, -2.0, &cfg).unwrap().0;
            }
            errs.push(u.l2_distance(&plane_wave(&g, 0.8, t_end, -2.0)));
        }
        let p = (errs[0] / errs[1]).log2();
        assert!((p - 2.0).abs() < 0.2, "order {p}");
    }
}
