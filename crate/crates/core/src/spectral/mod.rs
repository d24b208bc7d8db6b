//! Fourier pseudospectral layer on the periodic domain `[0, L)^d`.
//!
//! Fourier coefficients use the mean normalization, so that the `L²` norm of
//! a field is `(N^{-d} Σ_j |u_j|²)^{1/2} = (Σ_k |û_k|²)^{1/2}` and the
//! Laplacian acts as multiplication by `-|κ(k)|²` with `κ(k) = 2πk/L`.

mod field;
mod grid;

pub use field::{coef_l2, cubic_in_place, h_alpha_norm_of, SpectralField};
pub use grid::{make_grid, TorusGrid};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("size mismatch: expected {expected} entries, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("norm exponent must be non-negative, got {0}")]
    NegativeAlpha(f64),
}
