use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::expr::Num;
use crate::integrator::{Method, StepperConfig};
use crate::spectral::{make_grid, SpectralField, TorusGrid};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config field '{field}': {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    TestOne,
    TestTwo,
    PlaneWave,
    Custom,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::TestOne => "test_one",
            Problem::TestTwo => "test_two",
            Problem::PlaneWave => "plane_wave",
            Problem::Custom => "custom",
        })
    }
}

/// Initial data. One-dimensional profiles vary along the first coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDatum {
    /// `mean + amplitude·cos(wavenumber·x_1)`.
    Cosine {
        mean: Num,
        amplitude: Num,
        wavenumber: Num,
    },
    /// `1 / (1 + sin(x_1)²)`.
    InverseSinSquared,
    /// `amplitude·e^{iκ(mode)·x}`; has a closed-form solution.
    PlaneWave { amplitude: Num, mode: Vec<i64> },
}

impl InitialDatum {
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        match self {
            InitialDatum::Cosine {
                mean,
                amplitude,
                wavenumber,
            } => Complex64::new(mean.0 + amplitude.0 * (wavenumber.0 * x[0]).cos(), 0.0),
            InitialDatum::InverseSinSquared => {
                let s = x[0].sin();
                Complex64::new(1.0 / (1.0 + s * s), 0.0)
            }
            InitialDatum::PlaneWave { amplitude, .. } => {
                // phase is set by sample(); this path is only used off-grid
                Complex64::new(amplitude.0, 0.0)
            }
        }
    }

    pub fn sample(&self, grid: &Arc<TorusGrid>) -> SpectralField {
        match self {
            InitialDatum::PlaneWave { amplitude, mode } => {
                let k = plane_wave_kappa(grid, mode);
                let a = amplitude.0;
                SpectralField::from_fn(grid.clone(), |x| {
                    Complex64::from_polar(a, x.iter().zip(&k).map(|(xi, ki)| xi * ki).sum())
                })
            }
            _ => SpectralField::from_fn(grid.clone(), |x| self.eval(x)),
        }
    }
}

fn plane_wave_kappa(grid: &TorusGrid, mode: &[i64]) -> Vec<f64> {
    mode.iter()
        .map(|&m| 2.0 * PI * m as f64 / grid.period())
        .collect()
}

/// Closed-form plane-wave solution `a e^{i(κ·x + ωt)}`,
/// `ω = -(|κ|² + λ|a|²)`.
pub fn plane_wave_solution(
    grid: &Arc<TorusGrid>,
    amplitude: f64,
    mode: &[i64],
    lambda: f64,
    t: f64,
) -> SpectralField {
    let k = plane_wave_kappa(grid, mode);
    let k2: f64 = k.iter().map(|v| v * v).sum();
    let omega = -(k2 + lambda * amplitude * amplitude);
    SpectralField::from_fn(grid.clone(), |x| {
        let phase: f64 = x.iter().zip(&k).map(|(xi, ki)| xi * ki).sum::<f64>() + omega * t;
        Complex64::from_polar(amplitude, phase)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub period: Num,
    #[serde(default)]
    pub dealias: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: Option<Problem>,
    lambda: Option<Num>,
    grid: Option<RawGrid>,
    initial: Option<InitialDatum>,
    methods: Option<Vec<Method>>,
    stepsizes: Option<Vec<Num>>,
    t_end: Option<Num>,
    output_dir: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    alpha: Option<Num>,
    seed: Option<u64>,
    fp_tol: Option<Num>,
    fp_max_iter: Option<usize>,
    stride: Option<usize>,
    plot: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dim: Option<usize>,
    n: Option<usize>,
    period: Option<Num>,
    dealias: Option<bool>,
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub lambda: f64,
    pub grid: GridSpec,
    pub initial: InitialDatum,
    pub methods: Vec<Method>,
    pub stepsizes: Vec<f64>,
    pub t_end: f64,
    pub output_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub alpha: f64,
    pub seed: u64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// Sample stride; `None` lets each command pick its default.
    pub stride: Option<usize>,
    pub plot: bool,
}

fn paper_stepsizes() -> Vec<f64> {
    (2..=5).map(|i| 0.1 / 2f64.powi(i)).collect()
}

impl ExperimentConfig {
    /// Preset for one of the named problems.
    pub fn preset(problem: Problem) -> Option<Self> {
        let base = |lambda: f64, grid: GridSpec, initial: InitialDatum, t_end: f64| Self {
            problem,
            lambda,
            grid,
            initial,
            methods: vec![Method::Ecm(2), Method::Ecm(3)],
            stepsizes: paper_stepsizes(),
            t_end,
            output_dir: PathBuf::from("out"),
            cache_dir: None,
            alpha: 0.0,
            seed: 0,
            fp_tol: StepperConfig::DEFAULT_FP_TOL,
            fp_max_iter: StepperConfig::DEFAULT_FP_MAX_ITER,
            stride: None,
            plot: false,
        };
        match problem {
            Problem::TestOne => {
                let period = 4.0 * 2f64.sqrt() * PI;
                Some(base(
                    -2.0,
                    GridSpec {
                        dim: 1,
                        n: 128,
                        period: Num(period),
                        dealias: false,
                    },
                    InitialDatum::Cosine {
                        mean: Num(0.5),
                        amplitude: Num(0.025),
                        wavenumber: Num(2.0 * PI / period),
                    },
                    10.0,
                ))
            }
            Problem::TestTwo => Some(base(
                -1.0,
                GridSpec {
                    dim: 1,
                    n: 128,
                    period: Num(2.0 * PI),
                    dealias: false,
                },
                InitialDatum::InverseSinSquared,
                10.0,
            )),
            Problem::PlaneWave => {
                let mut c = base(
                    -2.0,
                    GridSpec {
                        dim: 1,
                        n: 32,
                        period: Num(2.0 * PI),
                        dealias: false,
                    },
                    InitialDatum::PlaneWave {
                        amplitude: Num(0.8),
                        mode: vec![1],
                    },
                    1.0,
                );
                c.fp_tol = 1e-14;
                c.fp_max_iter = 50;
                Some(c)
            }
            Problem::Custom => None,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_json_with_overrides(text, &[])
    }

    /// Parses `text`, applies `key=value` overrides (dotted keys reach into
    /// `grid` and `initial`), then validates.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        let raw: RawConfig =
            serde_json::from_value(value).map_err(|e| schema_error(&e.to_string()))?;
        resolve(raw)
    }

    pub fn build_grid(&self) -> Result<Arc<TorusGrid>, ConfigError> {
        let g = make_grid(self.grid.dim, self.grid.n, self.grid.period.0)
            .map_err(|e| invalid("grid", e.to_string()))?
            .with_dealiasing(self.grid.dealias);
        Ok(Arc::new(g))
    }

    pub fn stepper_config(&self, method: Method, h: f64) -> StepperConfig {
        let mut c = StepperConfig::new(method, h).with_fixed_point(self.fp_tol, self.fp_max_iter);
        c.error_alpha = self.alpha;
        c
    }

    /// Closed-form solution at `t`, when the initial datum has one.
    pub fn exact_solution(&self, grid: &Arc<TorusGrid>, t: f64) -> Option<SpectralField> {
        match &self.initial {
            InitialDatum::PlaneWave { amplitude, mode } => {
                Some(plane_wave_solution(grid, amplitude.0, mode, self.lambda, t))
            }
            _ => None,
        }
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::from_json_with_overrides(&text, overrides)
}

fn schema_error(msg: &str) -> ConfigError {
    // serde messages name the offending key as `field` or variant; keep the
    // whole message and pull out the first backticked name when present.
    let field = msg
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "<root>".to_string());
    ConfigError::Invalid {
        field,
        message: msg.to_string(),
    }
}

fn apply_override(root: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| invalid(spec, "override must look like key=value"))?;
    let key = key.trim();
    let parsed: Value =
        serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let Value::Object(_) = root else {
        return Err(invalid("<root>", "config must be a JSON object"));
    };
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| invalid(key, format!("'{}' is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let problem = raw.problem.ok_or_else(|| {
        invalid(
            "problem",
            "missing (test_one, test_two, plane_wave or custom)",
        )
    })?;
    let mut cfg = match ExperimentConfig::preset(problem) {
        Some(p) => p,
        None => {
            let grid = raw
                .grid
                .as_ref()
                .ok_or_else(|| invalid("grid", "required for custom problems"))?;
            ExperimentConfig {
                problem,
                lambda: raw
                    .lambda
                    .ok_or_else(|| invalid("lambda", "required for custom problems"))?
                    .0,
                grid: GridSpec {
                    dim: grid.dim.unwrap_or(1),
                    n: grid
                        .n
                        .ok_or_else(|| invalid("grid.n", "required for custom problems"))?,
                    period: grid.period.unwrap_or(Num(2.0 * PI)),
                    dealias: grid.dealias.unwrap_or(false),
                },
                initial: raw
                    .initial
                    .clone()
                    .ok_or_else(|| invalid("initial", "required for custom problems"))?,
                methods: raw
                    .methods
                    .clone()
                    .ok_or_else(|| invalid("methods", "required for custom problems"))?,
                stepsizes: raw
                    .stepsizes
                    .as_ref()
                    .ok_or_else(|| invalid("stepsizes", "required for custom problems"))?
                    .iter()
                    .map(|n| n.0)
                    .collect(),
                t_end: raw
                    .t_end
                    .ok_or_else(|| invalid("t_end", "required for custom problems"))?
                    .0,
                output_dir: PathBuf::from("out"),
                cache_dir: None,
                alpha: 0.0,
                seed: 0,
                fp_tol: StepperConfig::DEFAULT_FP_TOL,
                fp_max_iter: StepperConfig::DEFAULT_FP_MAX_ITER,
                stride: None,
                plot: false,
            }
        }
    };

    if let Some(v) = raw.lambda {
        cfg.lambda = v.0;
    }
    if let Some(g) = raw.grid {
        if let Some(d) = g.dim {
            cfg.grid.dim = d;
        }
        if let Some(n) = g.n {
            cfg.grid.n = n;
        }
        if let Some(p) = g.period {
            cfg.grid.period = p;
        }
        if let Some(a) = g.dealias {
            cfg.grid.dealias = a;
        }
    }
    if let Some(i) = raw.initial {
        cfg.initial = i;
    }
    if let Some(m) = raw.methods {
        cfg.methods = m;
    }
    if let Some(s) = raw.stepsizes {
        cfg.stepsizes = s.into_iter().map(|n| n.0).collect();
    }
    if let Some(t) = raw.t_end {
        cfg.t_end = t.0;
    }
    if let Some(o) = raw.output_dir {
        cfg.output_dir = o;
    }
    if raw.cache_dir.is_some() {
        cfg.cache_dir = raw.cache_dir;
    }
    if let Some(a) = raw.alpha {
        cfg.alpha = a.0;
    }
    if let Some(s) = raw.seed {
        cfg.seed = s;
    }
    if let Some(t) = raw.fp_tol {
        cfg.fp_tol = t.0;
    }
    if let Some(m) = raw.fp_max_iter {
        cfg.fp_max_iter = m;
    }
    if raw.stride.is_some() {
        cfg.stride = raw.stride;
    }
    if let Some(p) = raw.plot {
        cfg.plot = p;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    if !cfg.lambda.is_finite() {
        return Err(invalid("lambda", "must be finite"));
    }
    make_grid(cfg.grid.dim, cfg.grid.n, cfg.grid.period.0)
        .map_err(|e| invalid("grid", e.to_string()))?;
    if let InitialDatum::PlaneWave { amplitude, mode } = &cfg.initial {
        if mode.len() != cfg.grid.dim {
            return Err(invalid(
                "initial.mode",
                format!("needs {} components", cfg.grid.dim),
            ));
        }
        if !amplitude.0.is_finite() {
            return Err(invalid("initial.amplitude", "must be finite"));
        }
    }
    if cfg.methods.is_empty() {
        return Err(invalid("methods", "at least one method is required"));
    }
    if cfg.stepsizes.is_empty() {
        return Err(invalid("stepsizes", "at least one stepsize is required"));
    }
    if cfg.stepsizes.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(invalid("stepsizes", "stepsizes must be positive"));
    }
    if cfg.stepsizes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("stepsizes", "must be strictly decreasing"));
    }
    if !(cfg.t_end.is_finite() && cfg.t_end >= 0.0) {
        return Err(invalid("t_end", "must be non-negative"));
    }
    if !(cfg.alpha >= 0.0) {
        return Err(invalid("alpha", "must be non-negative"));
    }
    if !(cfg.fp_tol > 0.0) {
        return Err(invalid("fp_tol", "must be positive"));
    }
    if cfg.fp_max_iter == 0 {
        return Err(invalid("fp_max_iter", "must be at least 1"));
    }
    if cfg.stride == Some(0) {
        return Err(invalid("stride", "must be at least 1"));
    }
    Ok(())
}
