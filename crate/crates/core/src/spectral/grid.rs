use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::SpectralError;

/// Periodic tensor grid on `[0, L)^d` with `N` points per dimension.
///
/// Storage is row-major with the last dimension varying fastest. Along each
/// axis, index `i` carries the integer wavenumber `i` for `i < N/2` and
/// `i - N` otherwise, so the unpaired mode is `-N/2`.
#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    period: f64,
    kappa_1d: Vec<f64>,
    lap_symbol: Vec<f64>,
    dealias: bool,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("period", &self.period)
            .field("dealias", &self.dealias)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && self.period.to_bits() == other.period.to_bits()
            && self.dealias == other.dealias
    }
}

/// Builds a grid; `n` must be even and at least 4.
pub fn make_grid(dim: usize, n: usize, period: f64) -> Result<TorusGrid, SpectralError> {
    TorusGrid::new(dim, n, period)
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize, period: f64) -> Result<Self, SpectralError> {
        if dim == 0 {
            return Err(SpectralError::InvalidGrid(
                "dimension must be positive".into(),
            ));
        }
        if n < 4 || n % 2 != 0 {
            return Err(SpectralError::InvalidGrid(format!(
                "points per dimension must be even and >= 4, got {n}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(SpectralError::InvalidGrid(format!(
                "period must be positive, got {period}"
            )));
        }
        let len = n
            .checked_pow(dim as u32)
            .ok_or_else(|| SpectralError::InvalidGrid("grid too large".into()))?;

        let scale = 2.0 * std::f64::consts::PI / period;
        let kappa_1d: Vec<f64> = (0..n).map(|i| wavenumber(i, n) as f64 * scale).collect();

        let mut lap_symbol = vec![0.0; len];
        for (flat, lam) in lap_symbol.iter_mut().enumerate() {
            let mut rem = flat;
            let mut sum = 0.0;
            for _ in 0..dim {
                let k = kappa_1d[rem % n];
                sum += k * k;
                rem /= n;
            }
            *lam = -sum;
        }

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self {
            dim,
            n,
            period,
            kappa_1d,
            lap_symbol,
            dealias: false,
            fwd,
            inv,
        })
    }

    /// Enables 2/3-rule truncation of the nonlinear term.
    pub fn with_dealiasing(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_dim(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dealiased(&self) -> bool {
        self.dealias
    }

    /// Total number of grid points (and Fourier modes), `N^d`.
    pub fn len(&self) -> usize {
        self.lap_symbol.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Eigenvalues `-|κ(k)|²` of the discrete Laplacian, in storage order.
    pub fn lap_symbol(&self) -> &[f64] {
        &self.lap_symbol
    }

    /// Integer multi-index of the mode stored at `flat`.
    pub fn mode_index(&self, flat: usize) -> Vec<i64> {
        let mut idx = self.unravel(flat);
        idx.iter_mut()
            .for_each(|i| *i = wavenumber(*i as usize, self.n));
        idx
    }

    /// Physical wavenumber vector `2πk/L` of the mode stored at `flat`.
    pub fn kappa(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .into_iter()
            .map(|i| self.kappa_1d[i as usize])
            .collect()
    }

    /// Flat storage position of integer mode `k`, if it lies on the grid.
    pub fn flat_mode(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let half = (self.n / 2) as i64;
        let mut flat = 0usize;
        for &kj in k {
            if kj < -half || kj >= half {
                return None;
            }
            let i = if kj < 0 { kj + self.n as i64 } else { kj } as usize;
            flat = flat * self.n + i;
        }
        Some(flat)
    }

    /// Coordinates of grid point `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let dx = self.spacing();
        self.unravel(flat)
            .into_iter()
            .map(|i| i as f64 * dx)
            .collect()
    }

    /// Mask that zeroes modes with some `|k_j| > N/3`.
    pub fn dealias_mask(&self) -> Vec<f64> {
        let cut = self.n as i64 / 3;
        (0..self.len())
            .map(|flat| {
                let keep = self.mode_index(flat).iter().all(|k| k.abs() <= cut);
                if keep {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn unravel(&self, mut flat: usize) -> Vec<i64> {
        let mut idx = vec![0i64; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = (flat % self.n) as i64;
            flat /= self.n;
        }
        idx
    }

    /// In-place forward transform with mean normalization
    /// `û_k = N^{-d} Σ_j u_j e^{-iκ(k)·x_j}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// In-place inverse of [`TorusGrid::forward`].
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "buffer does not match grid size");
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // last axis is contiguous
        plan.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let total = self.len();
        let mut stride = n;
        for _ in 1..self.dim {
            let block = stride * n;
            for base in (0..total).step_by(block) {
                for off in 0..stride {
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[base + off + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[base + off + i * stride] = *v;
                    }
                }
            }
            stride = block;
        }
    }
}

fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
