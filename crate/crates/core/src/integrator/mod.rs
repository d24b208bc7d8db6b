//! Time steppers for `iu_t + Δu = λ|u|²u`: exponential collocation (ECMr)
//! and two baselines, Strang splitting and an exponential AVF scheme.

mod baselines;
mod ecm;
mod run;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::collocation::{
    build_operator_set, CollocationError, CollocationTableau, EcmOperatorSet, MAX_STAGES,
};
use crate::spectral::{cubic_in_place, SpectralField, TorusGrid};

pub use baselines::{step_eavf, step_strang, EavfOperators};
pub use ecm::{fixed_point_solve, step_ecm, StageSolution};
pub use run::{integrate, integrate_with, IntegrateOptions, Observer, RunRecord, Sample};

/// Relative residual below which growth is never treated as divergence;
/// at round-off level the residual fluctuates without meaning.
pub const DIVERGENCE_FLOOR: f64 = 1e-6;

/// Consecutive residual increases that signal a diverging iteration.
pub const DIVERGENCE_RUN: usize = 3;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum IntegratorError {
    #[error("fixed-point iteration diverged at iteration {iteration} (residual {residual:e}){}", step_suffix(*.step))]
    Divergence {
        step: Option<usize>,
        iteration: usize,
        residual: f64,
    },
    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),
    #[error("field grid does not match the stepper grid")]
    GridMismatch,
    #[error(transparent)]
    Collocation(#[from] CollocationError),
}

fn step_suffix(step: Option<usize>) -> String {
    step.map(|s| format!(" at step {s}")).unwrap_or_default()
}

impl IntegratorError {
    pub(crate) fn at_step(self, n: usize) -> Self {
        match self {
            Self::Divergence {
                iteration,
                residual,
                ..
            } => Self::Divergence {
                step: Some(n),
                iteration,
                residual,
            },
            other => other,
        }
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Exponential collocation with `r` Gauss stages.
    Ecm(usize),
    Strang,
    Eavf,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Ecm(r) => write!(f, "ecm{r}"),
            Method::Strang => f.write_str("strang"),
            Method::Eavf => f.write_str("eavf"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "strang" => Ok(Method::Strang),
            "eavf" => Ok(Method::Eavf),
            _ => {
                let r = s
                    .strip_prefix("ecm")
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| {
                        format!("unknown method '{s}' (expected ecmR, strang or eavf)")
                    })?;
                if r == 0 || r > MAX_STAGES {
                    return Err(format!(
                        "ecm stage count must be in 1..={MAX_STAGES}, got {r}"
                    ));
                }
                Ok(Method::Ecm(r))
            }
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Stepper settings. Defaults follow the capped Picard iteration of the
/// reference experiments: tolerance `1e-16`, at most 5 sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub method: Method,
    pub h: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub error_alpha: f64,
}

impl StepperConfig {
    pub const DEFAULT_FP_TOL: f64 = 1e-16;
    pub const DEFAULT_FP_MAX_ITER: usize = 5;

    pub fn new(method: Method, h: f64) -> Self {
        Self {
            method,
            h,
            fp_tol: Self::DEFAULT_FP_TOL,
            fp_max_iter: Self::DEFAULT_FP_MAX_ITER,
            error_alpha: 0.0,
        }
    }

    pub fn with_fixed_point(mut self, tol: f64, max_iter: usize) -> Self {
        self.fp_tol = tol;
        self.fp_max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(IntegratorError::InvalidConfig(format!(
                "h must be positive, got {}",
                self.h
            )));
        }
        if !(self.fp_tol > 0.0) {
            return Err(IntegratorError::InvalidConfig(format!(
                "fp_tol must be positive, got {}",
                self.fp_tol
            )));
        }
        if self.fp_max_iter == 0 {
            return Err(IntegratorError::InvalidConfig(
                "fp_max_iter must be at least 1".into(),
            ));
        }
        if !(self.error_alpha >= 0.0) {
            return Err(IntegratorError::InvalidConfig(
                "error_alpha must be non-negative".into(),
            ));
        }
        if let Method::Ecm(r) = self.method {
            if r == 0 || r > MAX_STAGES {
                return Err(CollocationError::InvalidStageCount(r).into());
            }
        }
        Ok(())
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    pub mass: f64,
}

#[derive(Debug, Clone)]
enum Scheme {
    Ecm {
        tableau: CollocationTableau,
        ops: Arc<EcmOperatorSet>,
    },
    Strang {
        propagator: Vec<Complex64>,
    },
    Eavf(EavfOperators),
}

/// A configured one-step map with its precomputed operators.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Arc<TorusGrid>,
    lambda: f64,
    cfg: StepperConfig,
    scheme: Scheme,
}

impl Stepper {
    pub fn new(
        grid: Arc<TorusGrid>,
        lambda: f64,
        cfg: StepperConfig,
    ) -> Result<Self, IntegratorError> {
        cfg.validate()?;
        let scheme = match cfg.method {
            Method::Ecm(r) => {
                let tableau = CollocationTableau::new(r)?;
                let ops = Arc::new(build_operator_set(&grid, &tableau, cfg.h)?);
                Scheme::Ecm { tableau, ops }
            }
            Method::Strang => Scheme::Strang {
                propagator: linear_propagator(&grid, cfg.h),
            },
            Method::Eavf => Scheme::Eavf(EavfOperators::new(&grid, cfg.h)),
        };
        Ok(Self {
            grid,
            lambda,
            cfg,
            scheme,
        })
    }

    /// ECM stepper around an operator set shared with other runs.
    pub fn with_operators(
        grid: Arc<TorusGrid>,
        lambda: f64,
        cfg: StepperConfig,
        ops: Arc<EcmOperatorSet>,
    ) -> Result<Self, IntegratorError> {
        cfg.validate()?;
        let Method::Ecm(r) = cfg.method else {
            return Err(IntegratorError::InvalidConfig(
                "operator sets apply to ECM methods only".into(),
            ));
        };
        if ops.stages() != r || ops.h() != cfg.h {
            return Err(IntegratorError::InvalidConfig(
                "operator set does not match method or stepsize".into(),
            ));
        }
        let tableau = CollocationTableau::new(r)?;
        Ok(Self {
            grid,
            lambda,
            cfg,
            scheme: Scheme::Ecm { tableau, ops },
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Advances `u` by one step of size `h`.
    pub fn step(&self, u: &SpectralField) -> Result<(SpectralField, StepReport), IntegratorError> {
        if **u.grid() != *self.grid {
            return Err(IntegratorError::GridMismatch);
        }
        let (next, iterations, residual) = match &self.scheme {
            Scheme::Ecm { tableau, ops } => {
                let (v, sol) = step_ecm(u, ops, tableau, self.lambda, &self.cfg)?;
                (v, sol.iterations, sol.residual)
            }
            Scheme::Strang { propagator } => {
                (strang_with(u, propagator, self.lambda, self.cfg.h), 0, 0.0)
            }
            Scheme::Eavf(ops) => step_eavf(u, ops, self.lambda, &self.cfg)?,
        };
        let energy = next.energy(self.lambda);
        let mass = next.mass();
        Ok((
            next,
            StepReport {
                iterations,
                residual,
                energy,
                mass,
            },
        ))
    }
}

/// `e^{h iλ_k}` per mode.
pub fn linear_propagator(grid: &TorusGrid, h: f64) -> Vec<Complex64> {
    grid.lap_symbol()
        .iter()
        .map(|&l| Complex64::from_polar(1.0, h * l))
        .collect()
}

pub(crate) use baselines::strang_with;

/// Fourier coefficients of `-λ|y|²y` for `y` given by its coefficients.
pub(crate) fn nonlinear_hat(
    grid: &TorusGrid,
    y_hat: &[Complex64],
    lambda: f64,
    mask: Option<&[f64]>,
) -> Vec<Complex64> {
    let mut buf = y_hat.to_vec();
    if lambda == 0.0 {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        return buf;
    }
    grid.inverse(&mut buf);
    cubic_in_place(&mut buf, lambda);
    grid.forward(&mut buf);
    if let Some(mask) = mask {
        buf.iter_mut().zip(mask).for_each(|(v, m)| *v *= m);
    }
    buf
}

pub(crate) fn relative_change(new: &[Complex64], old: &[Complex64]) -> f64 {
    let diff: f64 = new
        .iter()
        .zip(old)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let base: f64 = old.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if base > 0.0 {
        diff / base
    } else {
        diff
    }
}

/// Tracks residuals and flags non-finite values or sustained growth.
#[derive(Debug, Default)]
pub(crate) struct ResidualMonitor {
    history: Vec<f64>,
}

impl ResidualMonitor {
    pub(crate) fn push(&mut self, residual: f64) -> Result<(), IntegratorError> {
        self.history.push(residual);
        let iteration = self.history.len();
        if !residual.is_finite() {
            return Err(IntegratorError::Divergence {
                step: None,
                iteration,
                residual,
            });
        }
        if iteration > DIVERGENCE_RUN && residual > DIVERGENCE_FLOOR {
            let tail = &self.history[iteration - DIVERGENCE_RUN - 1..];
            if tail.windows(2).all(|w| w[1] > w[0]) {
                return Err(IntegratorError::Divergence {
                    step: None,
                    iteration,
                    residual,
                });
            }
        }
        Ok(())
    }

    pub(crate) fn history(self) -> Vec<f64> {
        self.history
    }
}
