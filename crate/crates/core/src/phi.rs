//! Scalar φ-functions `φ_0(z) = e^z`, `φ_{m+1}(z) = (φ_m(z) - 1/m!)/z`,
//! evaluated on the diagonal spectrum of the linear operator.
//!
//! Equivalently `φ_m(z) = ∫_0^1 e^{(1-θ)z} θ^{m-1}/(m-1)! dθ` for `m ≥ 1`.

use num_complex::Complex64;

/// Below this modulus the Taylor series is used instead of the recurrence.
pub const SMALL_ARG: f64 = 0.5;

const TAYLOR_TAIL: f64 = 1e-20;

/// `φ_m(z)`.
pub fn phi(m: usize, z: Complex64) -> Complex64 {
    let mut out = vec![Complex64::new(0.0, 0.0); m + 1];
    phi_all(z, &mut out);
    out[m]
}

/// Fills `out[m] = φ_m(z)` for `m = 0..out.len()`.
pub fn phi_all(z: Complex64, out: &mut [Complex64]) {
    if out.is_empty() {
        return;
    }
    out[0] = z.exp();
    if z.norm() < SMALL_ARG {
        for (m, slot) in out.iter_mut().enumerate().skip(1) {
            *slot = taylor(m, z);
        }
    } else {
        let mut inv_fact = 1.0;
        for m in 1..out.len() {
            out[m] = (out[m - 1] - inv_fact) / z;
            inv_fact /= m as f64;
        }
    }
}

/// `Σ_{k≥0} z^k/(k+m)!`, truncated once a term drops below `1e-20`.
fn taylor(m: usize, z: Complex64) -> Complex64 {
    let mut term = Complex64::new(inv_factorial(m), 0.0);
    let mut sum = term;
    let mut k = 0usize;
    while term.norm() >= TAYLOR_TAIL {
        k += 1;
        term *= z / (k + m) as f64;
        sum += term;
    }
    sum
}

fn inv_factorial(m: usize) -> f64 {
    (1..=m).fold(1.0, |acc, j| acc / j as f64)
}

/// φ-function values for a batch of arguments, indexed `[order][mode]`.
#[derive(Debug, Clone)]
pub struct PhiTable {
    max_order: usize,
    args: Vec<Complex64>,
    values: Vec<Vec<Complex64>>,
}

/// Evaluates `φ_0..=φ_{m_max}` at every argument.
pub fn phi_table(args: &[Complex64], m_max: usize) -> PhiTable {
    let mut values = vec![Vec::with_capacity(args.len()); m_max + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); m_max + 1];
    for &z in args {
        phi_all(z, &mut buf);
        for (row, v) in values.iter_mut().zip(&buf) {
            row.push(*v);
        }
    }
    PhiTable {
        max_order: m_max,
        args: args.to_vec(),
        values,
    }
}

impl PhiTable {
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn args(&self) -> &[Complex64] {
        &self.args
    }

    /// Row of `φ_m` over all arguments.
    pub fn order(&self, m: usize) -> &[Complex64] {
        &self.values[m]
    }

    pub fn len(&self) -> usize {
        self.args.len()
    }

    pub fn is_empty(&self) -> bool {
        self.args.is_empty()
    }
}
