//! The five harness commands plus the perturbation stability probe.
//!
//! Sweeps over `(method, h)` run through [`crate::parallel::map`]; rows are
//! merged in config order so every CSV is independent of scheduling.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::output::{fmt_f64, fmt_opt, gnuplot_script, write_csv, write_plot};
use super::reference::{ensure_reference, load_reference, CacheStatus, ReferenceCache};
use super::ExperimentError;
use crate::integrator::{
    integrate, integrate_with, IntegrateOptions, Method, RunRecord, Sample, Stepper,
};
use crate::parallel::{self, Execution};
use crate::spectral::{coef_l2, h_alpha_norm_of, SpectralField, TorusGrid};

/// Default sample stride for drift runs.
pub const DRIFT_STRIDE: usize = 10;

fn first_method(cfg: &ExperimentConfig) -> Method {
    cfg.methods[0]
}

fn first_h(cfg: &ExperimentConfig) -> f64 {
    cfg.stepsizes[0]
}

fn single_run(
    cfg: &ExperimentConfig,
    grid: &Arc<TorusGrid>,
    method: Method,
    h: f64,
) -> Result<RunRecord, ExperimentError> {
    let u0 = cfg.initial.sample(grid);
    let sc = cfg.stepper_config(method, h);
    Ok(integrate(
        &u0,
        cfg.lambda,
        &sc,
        cfg.t_end,
        IntegrateOptions::default(),
        &mut [],
    )?)
}

/// Samples written to time-series CSVs: steps that are multiples of
/// `stride` plus the final step; the initial state only when no step is
/// taken.
fn csv_samples(record: &RunRecord, stride: usize) -> Vec<&Sample> {
    if record.steps == 0 {
        return record.samples.iter().take(1).collect();
    }
    record
        .samples
        .iter()
        .filter(|s| s.step > 0 && (s.step % stride == 0 || s.step == record.steps))
        .collect()
}

/// Single trajectory of the first configured method at the first stepsize;
/// writes `run.csv` (t, energy_err, mass_err, fp_iters).
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<RunRecord, ExperimentError> {
    let grid = cfg.build_grid()?;
    let rec = single_run(cfg, &grid, first_method(cfg), first_h(cfg))?;
    let rows: Vec<Vec<String>> = csv_samples(&rec, cfg.stride.unwrap_or(1))
        .into_iter()
        .map(|s| {
            vec![
                fmt_f64(s.t),
                fmt_f64(s.energy_err),
                fmt_f64(s.mass_err),
                s.fp_iters.to_string(),
            ]
        })
        .collect();
    write_csv(
        out,
        "run.csv",
        &["t", "energy_err", "mass_err", "fp_iters"],
        &rows,
    )?;
    if cfg.plot {
        write_plot(
            out,
            "run.gp",
            &gnuplot_script("run.csv", "t", "energy error", 1, 2, false),
        )?;
    }
    Ok(rec)
}

#[derive(Debug, Clone)]
pub struct DriftSummary {
    pub record: RunRecord,
    /// `max |H_N(u_n) - H_N(u_0)|` over `t ≤ t_end/2`.
    pub max_first_half: f64,
    /// Same over the whole run.
    pub max_full: f64,
}

impl DriftSummary {
    /// `max_full / max_first_half`; 1 when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.max_first_half > 0.0 {
            self.max_full / self.max_first_half
        } else if self.max_full > 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    }
}

/// Long-horizon energy drift; writes `drift.csv` (t, abs_energy_err) every
/// `stride` steps (default 10) and `drift_summary.csv` with the window
/// maxima, which are taken over every step.
pub fn cmd_drift(cfg: &ExperimentConfig, out: &Path) -> Result<DriftSummary, ExperimentError> {
    let grid = cfg.build_grid()?;
    let method = first_method(cfg);
    let h = first_h(cfg);
    let record = single_run(cfg, &grid, method, h)?;
    let half = cfg.t_end / 2.0;
    let max_over = |pred: &dyn Fn(&Sample) -> bool| {
        record
            .samples
            .iter()
            .filter(|s| pred(s))
            .map(|s| s.energy_err.abs())
            .fold(0.0, f64::max)
    };
    let max_first_half = max_over(&|s| s.t <= half);
    let max_full = max_over(&|_| true);
    let summary = DriftSummary {
        record,
        max_first_half,
        max_full,
    };

    let rows: Vec<Vec<String>> = csv_samples(&summary.record, cfg.stride.unwrap_or(DRIFT_STRIDE))
        .into_iter()
        .map(|s| vec![fmt_f64(s.t), fmt_f64(s.energy_err.abs())])
        .collect();
    write_csv(out, "drift.csv", &["t", "abs_energy_err"], &rows)?;
    write_csv(
        out,
        "drift_summary.csv",
        &[
            "method",
            "h",
            "t_end",
            "max_first_half",
            "max_full",
            "ratio",
        ],
        &[vec![
            method.to_string(),
            fmt_f64(h),
            fmt_f64(cfg.t_end),
            fmt_f64(max_first_half),
            fmt_f64(max_full),
            fmt_f64(summary.ratio()),
        ]],
    )?;
    if cfg.plot {
        write_plot(
            out,
            "drift.gp",
            &gnuplot_script("drift.csv", "t", "|H_N(u_n) - H_N(u_0)|", 1, 2, false),
        )?;
    }
    Ok(summary)
}

/// Computes (or reuses) the cached reference solution.
pub fn cmd_reference(
    cfg: &ExperimentConfig,
) -> Result<(SpectralField, CacheStatus, PathBuf), ExperimentError> {
    let grid = cfg.build_grid()?;
    let cache = ReferenceCache::for_config(cfg);
    let (field, status) = ensure_reference(cfg, &grid, &cache)?;
    let path = cache.path_for(&super::reference::reference_key(cfg));
    Ok((field, status, path))
}

/// Error target: closed form when available, otherwise the cached reference
/// (`require_cached`) or a cached-or-computed one.
fn target_solution(
    cfg: &ExperimentConfig,
    grid: &Arc<TorusGrid>,
    require_cached: bool,
) -> Result<SpectralField, ExperimentError> {
    if let Some(exact) = cfg.exact_solution(grid, cfg.t_end) {
        return Ok(exact);
    }
    let cache = ReferenceCache::for_config(cfg);
    if require_cached {
        load_reference(cfg, grid, &cache)
    } else {
        Ok(ensure_reference(cfg, grid, &cache)?.0)
    }
}

fn error_in_norm(grid: &TorusGrid, u: &SpectralField, target: &SpectralField, alpha: f64) -> f64 {
    let a = u.fourier_values();
    let b = target.fourier_values();
    let diff: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    h_alpha_norm_of(grid, &diff, alpha)
}

fn error_max(u: &SpectralField, target: &SpectralField) -> f64 {
    let a = u.physical_values();
    let b = target.physical_values();
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn sweep_entries(cfg: &ExperimentConfig) -> Vec<(Method, f64)> {
    cfg.methods
        .iter()
        .flat_map(|&m| cfg.stepsizes.iter().map(move |&h| (m, h)))
        .collect()
}

type SweepResults = Vec<((Method, f64), RunRecord)>;

fn run_sweep(
    cfg: &ExperimentConfig,
    grid: &Arc<TorusGrid>,
    exec: Execution,
) -> Result<SweepResults, ExperimentError> {
    let entries = sweep_entries(cfg);
    let u0 = cfg.initial.sample(grid);
    let results = parallel::map(exec, &entries, |&(method, h)| {
        let sc = cfg.stepper_config(method, h);
        let stepper = Stepper::new(grid.clone(), cfg.lambda, sc)?;
        integrate_with(
            &stepper,
            &u0,
            cfg.t_end,
            IntegrateOptions::default(),
            &mut [],
        )
    });
    entries
        .into_iter()
        .zip(results)
        .map(|(e, r)| r.map(|rec| (e, rec)).map_err(ExperimentError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeRow {
    pub method: Method,
    pub h: f64,
    /// Error in the configured `H^alpha` norm.
    pub error: f64,
    pub error_l2: f64,
    pub error_h1: f64,
    pub error_max: f64,
    /// `log₂(error_i / error_{i+1})` against the next smaller stepsize.
    pub observed_order: Option<f64>,
}

/// `log₂(e_i / e_{i+1})` for consecutive entries.
pub fn observed_orders(errors: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| errors.get(i + 1).map(|next| (errors[i] / next).log2()))
        .collect()
}

/// Global error at `t_end` in the `H^alpha` norm for every (method, h);
/// writes `converge.csv` (method, h, error, error_l2, error_h1, error_max,
/// observed_order); `error` is in the configured norm.
pub fn cmd_converge(
    cfg: &ExperimentConfig,
    out: &Path,
    exec: Execution,
) -> Result<Vec<ConvergeRow>, ExperimentError> {
    let grid = cfg.build_grid()?;
    let target = target_solution(cfg, &grid, true)?;
    let runs = run_sweep(cfg, &grid, exec)?;
    let mut rows = Vec::with_capacity(runs.len());
    for &method in &cfg.methods {
        let first = rows.len();
        for ((_, h), rec) in runs.iter().filter(|((m, _), _)| *m == method) {
            let u = &rec.final_field;
            rows.push(ConvergeRow {
                method,
                h: *h,
                error: error_in_norm(&grid, u, &target, cfg.alpha),
                error_l2: error_in_norm(&grid, u, &target, 0.0),
                error_h1: error_in_norm(&grid, u, &target, 1.0),
                error_max: error_max(u, &target),
                observed_order: None,
            });
        }
        let errors: Vec<f64> = rows[first..].iter().map(|r| r.error).collect();
        for (row, order) in rows[first..].iter_mut().zip(observed_orders(&errors)) {
            row.observed_order = order;
        }
    }
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.method.to_string(),
                fmt_f64(r.h),
                fmt_f64(r.error),
                fmt_f64(r.error_l2),
                fmt_f64(r.error_h1),
                fmt_f64(r.error_max),
                fmt_opt(r.observed_order),
            ]
        })
        .collect();
    write_csv(
        out,
        "converge.csv",
        &[
            "method",
            "h",
            "error",
            "error_l2",
            "error_h1",
            "error_max",
            "observed_order",
        ],
        &csv_rows,
    )?;
    if cfg.plot {
        write_plot(
            out,
            "converge.gp",
            &gnuplot_script("converge.csv", "h", "error", 2, 3, true),
        )?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub method: Method,
    pub h: f64,
    pub error: f64,
    pub max_energy_error: f64,
    pub wall_clock_s: f64,
    pub mean_fp_iters: f64,
}

/// One row per (method, h); writes `compare.csv`. The reference is computed
/// and cached if absent.
pub fn cmd_compare(
    cfg: &ExperimentConfig,
    out: &Path,
    exec: Execution,
) -> Result<Vec<CompareRow>, ExperimentError> {
    let grid = cfg.build_grid()?;
    let target = target_solution(cfg, &grid, false)?;
    let rows: Vec<CompareRow> = run_sweep(cfg, &grid, exec)?
        .into_iter()
        .map(|((method, h), rec)| CompareRow {
            method,
            h,
            error: error_in_norm(&grid, &rec.final_field, &target, cfg.alpha),
            max_energy_error: rec.max_energy_error(),
            wall_clock_s: rec.wall_clock.as_secs_f64(),
            mean_fp_iters: rec.mean_fp_iters(),
        })
        .collect();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.method.to_string(),
                fmt_f64(r.h),
                fmt_f64(r.error),
                fmt_f64(r.max_energy_error),
                fmt_f64(r.wall_clock_s),
                fmt_f64(r.mean_fp_iters),
            ]
        })
        .collect();
    write_csv(
        out,
        "compare.csv",
        &[
            "method",
            "h",
            "error",
            "max_energy_error",
            "wall_clock_s",
            "mean_fp_iters",
        ],
        &csv_rows,
    )?;
    if cfg.plot {
        write_plot(
            out,
            "compare.gp",
            &gnuplot_script("compare.csv", "h", "error", 2, 3, true),
        )?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub initial_gap: f64,
    pub final_gap: f64,
}

/// Seeded perturbation `δu₀` with `‖δu₀‖ = eps`, normalized in the discrete
/// `L²` norm; returns `‖δu(t_end)‖` for the first configured method and
/// stepsize.
pub fn stability_probe(
    cfg: &ExperimentConfig,
    eps: f64,
) -> Result<StabilityReport, ExperimentError> {
    let grid = cfg.build_grid()?;
    let u0 = cfg.initial.sample(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise: Vec<Complex64> = (0..grid.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut delta = noise;
    grid.forward(&mut delta);
    let scale = eps / coef_l2(&delta);
    let perturbed_hat: Vec<Complex64> = u0
        .fourier_values()
        .iter()
        .zip(&delta)
        .map(|(u, d)| u + d * scale)
        .collect();
    let v0 = SpectralField::from_fourier(grid.clone(), perturbed_hat).expect("length matches grid");
    let initial_gap = v0.l2_distance(&u0);

    let sc = cfg.stepper_config(first_method(cfg), first_h(cfg));
    let stepper = Stepper::new(grid.clone(), cfg.lambda, sc)?;
    let opts = IntegrateOptions { stride: usize::MAX };
    let a = integrate_with(&stepper, &u0, cfg.t_end, opts, &mut [])?;
    let b = integrate_with(&stepper, &v0, cfg.t_end, opts, &mut [])?;
    Ok(StabilityReport {
        initial_gap,
        final_gap: a.final_field.l2_distance(&b.final_field),
    })
}
