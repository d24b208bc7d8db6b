//! Cached high-accuracy reference solutions.
//!
//! A reference is an ECM3 run at `min(stepsizes)/20` with a tight
//! fixed-point tolerance. Entries are keyed by a SHA-256 over everything
//! that determines the solution and written with create-then-rename so a
//! concurrent reader never sees a partial file.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::ExperimentError;
use crate::integrator::{integrate, IntegrateOptions, IntegratorError, Method, StepperConfig};
use crate::spectral::{SpectralField, TorusGrid};

pub const REFERENCE_METHOD: Method = Method::Ecm(3);
pub const REFERENCE_REFINEMENT: f64 = 20.0;
pub const REFERENCE_FP_TOL: f64 = 1e-14;
pub const REFERENCE_FP_MAX_ITER: usize = 100;

const FORMAT: &str = "nls-expocol-reference/1";

/// Stepsize of the reference run.
pub fn reference_h(cfg: &ExperimentConfig) -> f64 {
    cfg.stepsizes.iter().copied().fold(f64::INFINITY, f64::min) / REFERENCE_REFINEMENT
}

pub fn reference_stepper_config(cfg: &ExperimentConfig) -> StepperConfig {
    StepperConfig::new(REFERENCE_METHOD, reference_h(cfg))
        .with_fixed_point(REFERENCE_FP_TOL, REFERENCE_FP_MAX_ITER)
}

/// Content hash of problem, λ, grid, initial datum, `t_end` and the
/// reference scheme. Floats enter by their bit patterns.
pub fn reference_key(cfg: &ExperimentConfig) -> String {
    let sc = reference_stepper_config(cfg);
    let desc = serde_json::json!({
        "format": FORMAT,
        "problem": cfg.problem.to_string(),
        "lambda": cfg.lambda.to_bits(),
        "grid": {
            "dim": cfg.grid.dim,
            "n": cfg.grid.n,
            "period": cfg.grid.period.0.to_bits(),
            "dealias": cfg.grid.dealias,
        },
        "initial": cfg.initial,
        "t_end": cfg.t_end.to_bits(),
        "method": sc.method.to_string(),
        "h": sc.h.to_bits(),
        "fp_tol": sc.fp_tol.to_bits(),
        "fp_max_iter": sc.fp_max_iter,
    });
    hex::encode(Sha256::digest(desc.to_string().as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Computed,
    /// A corrupt entry was found and replaced.
    Recomputed,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    format: String,
    key: String,
    len: usize,
    re: Vec<u64>,
    im: Vec<u64>,
    checksum: String,
}

fn checksum(re: &[u64], im: &[u64]) -> String {
    let mut h = Sha256::new();
    for v in re.iter().chain(im) {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug)]
pub enum Lookup {
    Hit(SpectralField),
    Miss,
    Corrupt(String),
}

#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Cache directory for a config: `cache_dir` if set, else `<out>/cache`.
    pub fn for_config(cfg: &ExperimentConfig) -> Self {
        Self::new(
            cfg.cache_dir
                .clone()
                .unwrap_or_else(|| cfg.output_dir.join("cache")),
        )
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn lookup(&self, key: &str, grid: &Arc<TorusGrid>) -> Lookup {
        let path = self.path_for(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Lookup::Miss,
            Err(e) => return Lookup::Corrupt(e.to_string()),
        };
        let entry: Entry = match serde_json::from_str(&text) {
            Ok(e) => e,
            Err(e) => return Lookup::Corrupt(format!("unreadable entry: {e}")),
        };
        if entry.format != FORMAT || entry.key != key {
            return Lookup::Corrupt("format or key mismatch".into());
        }
        if entry.len != grid.len() || entry.re.len() != entry.len || entry.im.len() != entry.len {
            return Lookup::Corrupt("length mismatch".into());
        }
        if checksum(&entry.re, &entry.im) != entry.checksum {
            return Lookup::Corrupt("checksum mismatch".into());
        }
        let coefs = entry
            .re
            .iter()
            .zip(&entry.im)
            .map(|(&r, &i)| Complex64::new(f64::from_bits(r), f64::from_bits(i)))
            .collect();
        match SpectralField::from_fourier(grid.clone(), coefs) {
            Ok(f) => Lookup::Hit(f),
            Err(e) => Lookup::Corrupt(e.to_string()),
        }
    }

    pub fn store(&self, key: &str, field: &SpectralField) -> Result<PathBuf, ExperimentError> {
        fs::create_dir_all(&self.dir).map_err(|e| ExperimentError::io(&self.dir, e))?;
        let coefs = field.fourier_values();
        let re: Vec<u64> = coefs.iter().map(|c| c.re.to_bits()).collect();
        let im: Vec<u64> = coefs.iter().map(|c| c.im.to_bits()).collect();
        let entry = Entry {
            format: FORMAT.into(),
            key: key.into(),
            len: coefs.len(),
            checksum: checksum(&re, &im),
            re,
            im,
        };
        let path = self.path_for(key);
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        let text = serde_json::to_string(&entry).expect("reference entry serializes");
        fs::write(&tmp, text).map_err(|e| ExperimentError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| ExperimentError::io(&path, e))?;
        Ok(path)
    }
}

/// Runs the reference integration for `cfg`.
pub fn compute_reference(
    cfg: &ExperimentConfig,
    grid: &Arc<TorusGrid>,
) -> Result<SpectralField, IntegratorError> {
    let u0 = cfg.initial.sample(grid);
    let sc = reference_stepper_config(cfg);
    let rec = integrate(
        &u0,
        cfg.lambda,
        &sc,
        cfg.t_end,
        IntegrateOptions { stride: usize::MAX },
        &mut [],
    )?;
    Ok(rec.final_field)
}

/// Cached reference, computed and stored on a miss or a corrupt entry.
pub fn ensure_reference(
    cfg: &ExperimentConfig,
    grid: &Arc<TorusGrid>,
    cache: &ReferenceCache,
) -> Result<(SpectralField, CacheStatus), ExperimentError> {
    let key = reference_key(cfg);
    let status = match cache.lookup(&key, grid) {
        Lookup::Hit(f) => return Ok((f, CacheStatus::Hit)),
        Lookup::Miss => CacheStatus::Computed,
        Lookup::Corrupt(why) => {
            log::warn!(
                "reference cache entry {} is corrupt ({why}); recomputing",
                cache.path_for(&key).display()
            );
            CacheStatus::Recomputed
        }
    };
    let field = compute_reference(cfg, grid)?;
    cache.store(&key, &field)?;
    Ok((field, status))
}

/// Cached reference only; a miss or corrupt entry is a missing reference.
pub fn load_reference(
    cfg: &ExperimentConfig,
    grid: &Arc<TorusGrid>,
    cache: &ReferenceCache,
) -> Result<SpectralField, ExperimentError> {
    let key = reference_key(cfg);
    match cache.lookup(&key, grid) {
        Lookup::Hit(f) => Ok(f),
        Lookup::Miss => Err(ExperimentError::MissingReference {
            problem: cfg.problem,
            key,
        }),
        Lookup::Corrupt(why) => {
            log::warn!(
                "reference cache entry {} is corrupt ({why})",
                cache.path_for(&key).display()
            );
            Err(ExperimentError::MissingReference {
                problem: cfg.problem,
                key,
            })
        }
    }
}
