use num_complex::Complex64;

use super::{nonlinear_hat, relative_change, IntegratorError, ResidualMonitor, StepperConfig};
use crate::collocation::{CollocationTableau, EcmOperatorSet};
use crate::spectral::{SpectralField, TorusGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Converged (or capped) stage values of one ECM step, in Fourier space.
#[derive(Debug, Clone)]
pub struct StageSolution {
    pub stages: Vec<Vec<Complex64>>,
    /// Nonlinearity evaluated at `stages`.
    pub forces: Vec<Vec<Complex64>>,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

/// Picard iteration for the stage equations
///
/// ```text
/// y_k = e^{c_k h iΛ} û + i c_k h Σ_l b_l Ā_{c_k,c_l}(iΛ) F(y_l)
/// ```
///
/// started from the free flight `y_k = e^{c_k h iΛ} û`. Hitting the
/// iteration cap is not an error.
pub fn fixed_point_solve(
    grid: &TorusGrid,
    u_hat: &[Complex64],
    ops: &EcmOperatorSet,
    tableau: &CollocationTableau,
    lambda: f64,
    cfg: &StepperConfig,
) -> Result<StageSolution, IntegratorError> {
    let r = tableau.stages();
    let h = ops.h();
    let mask = grid.dealiased().then(|| grid.dealias_mask());
    let free: Vec<Vec<Complex64>> = (0..r)
        .map(|k| {
            ops.propagator(k)
                .iter()
                .zip(u_hat)
                .map(|(e, u)| e * u)
                .collect()
        })
        .collect();

    let mut stages = free.clone();
    let mut forces: Vec<Vec<Complex64>>;
    let mut monitor = ResidualMonitor::default();
    let mut residual;
    let mut iterations = 0;
    loop {
        iterations += 1;
        forces = stages
            .iter()
            .map(|y| nonlinear_hat(grid, y, lambda, mask.as_deref()))
            .collect();
        let mut next = free.clone();
        for (k, yk) in next.iter_mut().enumerate() {
            let ck = tableau.nodes()[k];
            for (l, fl) in forces.iter().enumerate() {
                let scale = I * (ck * h * tableau.weights()[l]);
                for ((y, m), f) in yk.iter_mut().zip(ops.abar_stage(k, l)).zip(fl) {
                    *y += scale * m * f;
                }
            }
        }
        residual = next
            .iter()
            .zip(&stages)
            .map(|(a, b)| relative_change(a, b))
            .fold(
                0.0,
                |acc: f64, v| if v.is_nan() { f64::NAN } else { acc.max(v) },
            );
        stages = next;
        monitor.push(residual)?;
        if residual <= cfg.fp_tol || iterations >= cfg.fp_max_iter {
            break;
        }
    }
    if residual > 0.0 {
        forces = stages
            .iter()
            .map(|y| nonlinear_hat(grid, y, lambda, mask.as_deref()))
            .collect();
    }
    if forces.iter().flatten().any(|v| !v.is_finite()) {
        return Err(IntegratorError::Divergence {
            step: None,
            iteration: iterations,
            residual: f64::INFINITY,
        });
    }
    Ok(StageSolution {
        stages,
        forces,
        iterations,
        residual,
        residual_history: monitor.history(),
    })
}

/// One ECMr step: solve the stages, then
/// `u⁺ = e^{h iΛ} û + i h Σ_l b_l Ā_{1,c_l}(iΛ) F(y_l)`.
pub fn step_ecm(
    u: &SpectralField,
    ops: &EcmOperatorSet,
    tableau: &CollocationTableau,
    lambda: f64,
    cfg: &StepperConfig,
) -> Result<(SpectralField, StageSolution), IntegratorError> {
    let grid = u.grid();
    let u_hat = u.fourier_values();
    let sol = fixed_point_solve(grid, &u_hat, ops, tableau, lambda, cfg)?;
    let h = ops.h();
    let mut next: Vec<Complex64> = ops
        .final_propagator()
        .iter()
        .zip(&u_hat)
        .map(|(e, v)| e * v)
        .collect();
    for (l, fl) in sol.forces.iter().enumerate() {
        let scale = I * (h * tableau.weights()[l]);
        for ((y, m), f) in next.iter_mut().zip(ops.abar_final(l)).zip(fl) {
            *y += scale * m * f;
        }
    }
    if next.iter().any(|v| !v.is_finite()) {
        return Err(IntegratorError::Divergence {
            step: None,
            iteration: sol.iterations,
            residual: f64::INFINITY,
        });
    }
    let field = SpectralField::from_fourier(grid.clone(), next).expect("grid-sized buffer");
    Ok((field, sol))
}
