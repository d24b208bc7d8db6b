use std::time::{Duration, Instant};

use super::{IntegratorError, Method, Stepper, StepperConfig};
use crate::spectral::SpectralField;

/// Callback invoked after every accepted step (and once for the initial
/// state with `step == 0`).
pub trait Observer {
    fn observe(&mut self, step: usize, t: f64, u: &SpectralField);
}

impl<F: FnMut(usize, f64, &SpectralField)> Observer for F {
    fn observe(&mut self, step: usize, t: f64, u: &SpectralField) {
        self(step, t, u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    /// Record a sample every `stride` steps; the final step is always kept.
    pub stride: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { stride: 1 }
    }
}

/// One recorded point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    /// `H_N(u_n) - H_N(u_0)`.
    pub energy_err: f64,
    pub mass: f64,
    /// `‖u_n‖ - ‖u_0‖`.
    pub mass_err: f64,
    pub fp_iters: usize,
    pub fp_residual: f64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub method: Method,
    pub h: f64,
    pub steps: usize,
    pub t_end: f64,
    pub samples: Vec<Sample>,
    pub final_field: SpectralField,
    /// Fixed-point iterations summed over all steps.
    pub total_fp_iters: usize,
    pub wall_clock: Duration,
}

impl RunRecord {
    pub fn max_energy_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.energy_err.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_mass_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.mass_err.abs())
            .fold(0.0, f64::max)
    }

    pub fn mean_fp_iters(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total_fp_iters as f64 / self.steps as f64
        }
    }
}

/// Number of full steps and the leftover stepsize (0 when `t_end/h` is an
/// integer up to a relative `1e-9`).
fn step_plan(t_end: f64, h: f64) -> (usize, f64) {
    let q = t_end / h;
    let n = q.round();
    if (q - n).abs() <= 1e-9 * q.max(1.0) {
        (n as usize, 0.0)
    } else {
        let n = q.floor();
        (n as usize, t_end - n * h)
    }
}

/// Integrates from `u0` up to `t_end`, building the stepper from `cfg`.
pub fn integrate(
    u0: &SpectralField,
    lambda: f64,
    cfg: &StepperConfig,
    t_end: f64,
    options: IntegrateOptions,
    observers: &mut [&mut dyn Observer],
) -> Result<RunRecord, IntegratorError> {
    let stepper = Stepper::new(u0.grid().clone(), lambda, *cfg)?;
    integrate_with(&stepper, u0, t_end, options, observers)
}

/// Integrates with a prebuilt stepper. Times are accumulated as `n·h`; a
/// trailing partial step uses operators rebuilt for the remainder.
pub fn integrate_with(
    stepper: &Stepper,
    u0: &SpectralField,
    t_end: f64,
    options: IntegrateOptions,
    observers: &mut [&mut dyn Observer],
) -> Result<RunRecord, IntegratorError> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(IntegratorError::InvalidConfig(format!(
            "t_end must be non-negative, got {t_end}"
        )));
    }
    if options.stride == 0 {
        return Err(IntegratorError::InvalidConfig(
            "stride must be at least 1".into(),
        ));
    }
    let started = Instant::now();
    let cfg = *stepper.config();
    let lambda = stepper.lambda();
    let (full, rem) = step_plan(t_end, cfg.h);
    let tail = if rem > 0.0 {
        let mut c = cfg;
        c.h = rem;
        Some(Stepper::new(stepper.grid().clone(), lambda, c)?)
    } else {
        None
    };
    let total = full + usize::from(tail.is_some());

    let e0 = u0.energy(lambda);
    let m0 = u0.mass();
    let mut samples = vec![Sample {
        step: 0,
        t: 0.0,
        energy: e0,
        energy_err: 0.0,
        mass: m0,
        mass_err: 0.0,
        fp_iters: 0,
        fp_residual: 0.0,
    }];
    for obs in observers.iter_mut() {
        obs.observe(0, 0.0, u0);
    }

    let mut u = u0.clone();
    let mut total_fp_iters = 0;
    for n in 1..=total {
        let (active, t) = match &tail {
            Some(s) if n == total => (s, t_end),
            _ => (stepper, n as f64 * cfg.h),
        };
        let (next, report) = active.step(&u).map_err(|e| e.at_step(n))?;
        u = next;
        total_fp_iters += report.iterations;
        for obs in observers.iter_mut() {
            obs.observe(n, t, &u);
        }
        if n % options.stride == 0 || n == total {
            samples.push(Sample {
                step: n,
                t,
                energy: report.energy,
                energy_err: report.energy - e0,
                mass: report.mass,
                mass_err: report.mass - m0,
                fp_iters: report.iterations,
                fp_residual: report.residual,
            });
        }
    }
    Ok(RunRecord {
        method: cfg.method,
        h: cfg.h,
        steps: total,
        t_end,
        samples,
        final_field: u,
        total_fp_iters,
        wall_clock: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use num_complex::Complex64;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn datum() -> SpectralField {
        let g = Arc::new(make_grid(1, 32, 2.0 * PI).unwrap());
        SpectralField::from_fn(g, |x| Complex64::new(1.0 / (1.0 + x[0].sin().powi(2)), 0.0))
    }

    #[test]
    fn step_plan_cases() {
        assert_eq!(step_plan(1.0, 0.01), (100, 0.0));
        assert_eq!(step_plan(10.0, 0.1 / 32.0), (3200, 0.0));
        assert_eq!(step_plan(0.0, 0.1), (0, 0.0));
        let (n, rem) = step_plan(1.0, 0.3);
        assert_eq!(n, 3);
        assert!((rem - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_steps_records_initial_state() {
        let u = datum();
        let cfg = StepperConfig::new(Method::Ecm(2), 0.1);
        let rec = integrate(&u, -1.0, &cfg, 0.0, IntegrateOptions::default(), &mut []).unwrap();
        assert_eq!(rec.steps, 0);
        assert_eq!(rec.samples.len(), 1);
        assert_eq!(rec.samples[0].energy, u.energy(-1.0));
    }

    #[test]
    fn stride_and_partial_step() {
        let u = datum();
        let cfg = StepperConfig::new(Method::Strang, 0.3);
        let mut seen = vec![];
        let mut obs = |n: usize, t: f64, _: &SpectralField| seen.push((n, t));
        let rec = integrate(
            &u,
            -1.0,
            &cfg,
            1.0,
            IntegrateOptions { stride: 2 },
            &mut [&mut obs],
        )
        .unwrap();
        assert_eq!(rec.steps, 4);
        let steps: Vec<usize> = rec.samples.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 2, 4]);
        assert_eq!(rec.samples.last().unwrap().t, 1.0);
        assert_eq!(seen.len(), 5);
        assert!(rec.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn runs_are_bit_identical() {
        let u = datum();
        let cfg = StepperConfig::new(Method::Ecm(3), 0.05);
        let a = integrate(&u, -1.0, &cfg, 0.5, IntegrateOptions::default(), &mut []).unwrap();
        let b = integrate(&u, -1.0, &cfg, 0.5, IntegrateOptions::default(), &mut []).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(
            a.final_field.fourier_values(),
            b.final_field.fourier_values()
        );
    }

    #[test]
    fn divergence_reports_step() {
        let u = datum();
        let cfg = StepperConfig::new(Method::Ecm(2), 10.0).with_fixed_point(1e-14, 50);
        let err =
            integrate(&u, -1.0, &cfg, 20.0, IntegrateOptions::default(), &mut []).unwrap_err();
        assert!(
            matches!(err, IntegratorError::Divergence { step: Some(1), .. }),
            "{err:?}"
        );
    }
}
