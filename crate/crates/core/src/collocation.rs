//! Orthonormal polynomial basis on `[0, 1]`, Gauss–Legendre data, the
//! projection onto degree `< r` polynomials, and the diagonal operators
//! `Ā_{τ,σ}(iΛ)` used by the exponential collocation stepper.
//!
//! The coefficient operator
//!
//! ```text
//! Ā_{τ,σ}(iΛ) = ∫_0^1 e^{(1-ξ)τh iΛ} Σ_j ψ_j(ξτ) ψ_j(σ) dξ
//! ```
//!
//! is evaluated exactly by expanding `ψ_j(ξτ)` in powers of `ξ` and using
//! `∫_0^1 e^{(1-ξ)w} ξ^m dξ = m! φ_{m+1}(w)`.

use num_complex::Complex64;

use crate::phi::{phi_table, PhiTable};
use crate::spectral::TorusGrid;

/// Largest supported number of stages; the monomial basis representation
/// loses accuracy beyond this.
pub const MAX_STAGES: usize = 10;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CollocationError {
    #[error("number of stages must be between 1 and {MAX_STAGES}, got {0}")]
    InvalidStageCount(usize),
    #[error("stage index {index} out of range for {stages} stages")]
    StageOutOfRange { index: usize, stages: usize },
    #[error("stepsize must be positive and finite, got {0}")]
    InvalidStepsize(f64),
    #[error("φ-table covers orders up to {have}, need {need}")]
    PhiTableTooShort { have: usize, need: usize },
}

/// Monomial coefficients `a[j][m]` of `ψ_j(t) = √(2j+1) P_j(2t-1)`.
pub fn shifted_legendre_coeffs(r: usize) -> Result<Vec<Vec<f64>>, CollocationError> {
    if r == 0 || r > MAX_STAGES {
        return Err(CollocationError::InvalidStageCount(r));
    }
    Ok((0..r)
        .map(|j| {
            let norm = ((2 * j + 1) as f64).sqrt();
            (0..r)
                .map(|m| {
                    if m > j {
                        return 0.0;
                    }
                    let sign = if (j + m) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * norm * binomial(j, m) * binomial(j + m, m)
                })
                .collect()
        })
        .collect())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `r`-point Gauss–Legendre nodes and weights on `[0, 1]`, nodes ascending.
pub fn gauss_legendre(r: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; r];
    let mut weights = vec![0.0; r];
    for i in 0..r.div_ceil(2) {
        // Newton on P_r from the Chebyshev-type guess; roots are simple.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (r as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(r, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(r, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root on [-1, 1]
        nodes[r - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[r - 1 - i] = w;
        weights[i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss nodes/weights and the orthonormal basis for an `r`-stage method.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationTableau {
    r: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl CollocationTableau {
    pub fn new(r: usize) -> Result<Self, CollocationError> {
        let basis = shifted_legendre_coeffs(r)?;
        let (nodes, weights) = gauss_legendre(r);
        Ok(Self {
            r,
            nodes,
            weights,
            basis,
        })
    }

    pub fn stages(&self) -> usize {
        self.r
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn basis_coeffs(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// `ψ_j(t)`, by the three-term recurrence (the monomial form cancels
    /// badly for `j ≳ 6`).
    pub fn psi(&self, j: usize, t: f64) -> f64 {
        assert!(j < self.r, "basis index {j} out of range");
        let x = 2.0 * t - 1.0;
        let (mut p0, mut p1) = (1.0, x);
        if j == 0 {
            return 1.0;
        }
        for k in 1..j {
            let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
            p0 = p1;
            p1 = p2;
        }
        ((2 * j + 1) as f64).sqrt() * p1
    }

    /// `ψ_j(t)` from the monomial coefficients.
    pub fn psi_monomial(&self, j: usize, t: f64) -> f64 {
        self.basis[j].iter().rev().fold(0.0, |acc, a| acc * t + a)
    }

    /// Projection kernel `P_{τ,σ} = Σ_j ψ_j(τ) ψ_j(σ)`.
    pub fn kernel(&self, tau: f64, sigma: f64) -> f64 {
        (0..self.r)
            .map(|j| self.psi(j, tau) * self.psi(j, sigma))
            .sum()
    }

    /// Orthogonal projection of `g` onto span{ψ_0..ψ_{r-1}}, sampled at
    /// `points`. Inner products use a 32-point Gauss rule, exact for
    /// polynomial `g` up to degree `63 - (r-1)`.
    pub fn projection_apply(&self, g: impl Fn(f64) -> f64, points: &[f64]) -> Vec<f64> {
        let (qn, qw) = gauss_legendre(32);
        let gv: Vec<f64> = qn.iter().map(|&s| g(s)).collect();
        let moments: Vec<f64> = (0..self.r)
            .map(|j| {
                qn.iter()
                    .zip(&qw)
                    .zip(&gv)
                    .map(|((&s, &w), &gs)| w * self.psi(j, s) * gs)
                    .sum()
            })
            .collect();
        points
            .iter()
            .map(|&t| {
                moments
                    .iter()
                    .enumerate()
                    .map(|(j, mj)| mj * self.psi(j, t))
                    .sum()
            })
            .collect()
    }

    /// Scalar weights `w[m] = Σ_j ψ_j(σ) a[j][m] τ^m m!` so that
    /// `Ā_{τ,σ} = Σ_m w[m] φ_{m+1}(τh iΛ)`.
    fn abar_weights(&self, tau: f64, sigma: f64) -> Vec<f64> {
        let mut w = vec![0.0; self.r];
        let mut tau_pow_fact = 1.0;
        for (m, wm) in w.iter_mut().enumerate() {
            if m > 0 {
                tau_pow_fact *= tau * m as f64;
            }
            *wm = (m..self.r)
                .map(|j| self.psi(j, sigma) * self.basis[j][m])
                .sum::<f64>()
                * tau_pow_fact;
        }
        w
    }
}

/// Per-mode multiplier `Ā_{τ,c_l}(iΛ)`, given φ-values at `τh iλ_k`.
pub fn abar_multiplier(
    tableau: &CollocationTableau,
    phi: &PhiTable,
    tau: f64,
    stage: usize,
) -> Result<Vec<Complex64>, CollocationError> {
    if stage >= tableau.r {
        return Err(CollocationError::StageOutOfRange {
            index: stage,
            stages: tableau.r,
        });
    }
    if phi.max_order() < tableau.r {
        return Err(CollocationError::PhiTableTooShort {
            have: phi.max_order(),
            need: tableau.r,
        });
    }
    let w = tableau.abar_weights(tau, tableau.nodes[stage]);
    let mut out = vec![Complex64::new(0.0, 0.0); phi.len()];
    for (m, wm) in w.iter().enumerate() {
        for (o, p) in out.iter_mut().zip(phi.order(m + 1)) {
            *o += wm * p;
        }
    }
    Ok(out)
}

/// φ-table for arguments `τ h i λ_k` over the grid spectrum.
pub fn spectrum_phi_table(grid: &TorusGrid, tau: f64, h: f64, m_max: usize) -> PhiTable {
    let args: Vec<Complex64> = grid
        .lap_symbol()
        .iter()
        .map(|&l| Complex64::new(0.0, tau * h * l))
        .collect();
    phi_table(&args, m_max)
}

/// All diagonal arrays one ECM step needs at a fixed stepsize.
#[derive(Debug, Clone)]
pub struct EcmOperatorSet {
    h: f64,
    propagators: Vec<Vec<Complex64>>,
    final_propagator: Vec<Complex64>,
    abar_stage: Vec<Vec<Vec<Complex64>>>,
    abar_final: Vec<Vec<Complex64>>,
}

impl EcmOperatorSet {
    pub fn h(&self) -> f64 {
        self.h
    }

    /// `e^{c_k h iΛ}`.
    pub fn propagator(&self, k: usize) -> &[Complex64] {
        &self.propagators[k]
    }

    /// `e^{h iΛ}`.
    pub fn final_propagator(&self) -> &[Complex64] {
        &self.final_propagator
    }

    /// `Ā_{c_k,c_l}(iΛ)`.
    pub fn abar_stage(&self, k: usize, l: usize) -> &[Complex64] {
        &self.abar_stage[k][l]
    }

    /// `Ā_{1,c_l}(iΛ)`.
    pub fn abar_final(&self, l: usize) -> &[Complex64] {
        &self.abar_final[l]
    }

    pub fn stages(&self) -> usize {
        self.propagators.len()
    }
}

pub fn build_operator_set(
    grid: &TorusGrid,
    tableau: &CollocationTableau,
    h: f64,
) -> Result<EcmOperatorSet, CollocationError> {
    if !(h.is_finite() && h > 0.0) {
        return Err(CollocationError::InvalidStepsize(h));
    }
    let r = tableau.stages();
    let mut propagators = Vec::with_capacity(r);
    let mut abar_stage = Vec::with_capacity(r);
    for &ck in tableau.nodes() {
        let table = spectrum_phi_table(grid, ck, h, r);
        propagators.push(table.order(0).to_vec());
        abar_stage.push(
            (0..r)
                .map(|l| abar_multiplier(tableau, &table, ck, l))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    let table = spectrum_phi_table(grid, 1.0, h, r);
    let final_propagator = table.order(0).to_vec();
    let abar_final = (0..r)
        .map(|l| abar_multiplier(tableau, &table, 1.0, l))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EcmOperatorSet {
        h,
        propagators,
        final_propagator,
        abar_stage,
        abar_final,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn rejects_bad_stage_counts() {
        assert_eq!(
            CollocationTableau::new(0).unwrap_err(),
            CollocationError::InvalidStageCount(0)
        );
        assert!(CollocationTableau::new(MAX_STAGES + 1).is_err());
        assert!(CollocationTableau::new(MAX_STAGES).is_ok());
    }

    #[test]
    fn low_order_bases() {
        assert_eq!(shifted_legendre_coeffs(1).unwrap(), vec![vec![1.0]]);
        let a = shifted_legendre_coeffs(2).unwrap();
        let s3 = 3f64.sqrt();
        assert!((a[1][0] + s3).abs() < 1e-15 && (a[1][1] - 2.0 * s3).abs() < 1e-15);
        let a = shifted_legendre_coeffs(3).unwrap();
        let s5 = 5f64.sqrt();
        for (got, want) in a[2].iter().zip([s5, -6.0 * s5, 6.0 * s5]) {
            assert!((got - want).abs() < 1e-14);
        }
        for r in 1..=MAX_STAGES {
            let a = shifted_legendre_coeffs(r).unwrap();
            for (j, row) in a.iter().enumerate() {
                assert!(row[j] > 0.0);
                assert!(row[j + 1..].iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn closed_form_gauss_rules() {
        let (c, b) = gauss_legendre(2);
        let d = 3f64.sqrt() / 6.0;
        assert!((c[0] - (0.5 - d)).abs() < 1e-15 && (c[1] - (0.5 + d)).abs() < 1e-15);
        assert!(b.iter().all(|w| (w - 0.5).abs() < 1e-15));
        let (c, b) = gauss_legendre(3);
        let d = 15f64.sqrt() / 10.0;
        assert!(
            (c[0] - (0.5 - d)).abs() < 1e-15
                && (c[1] - 0.5).abs() < 1e-15
                && (c[2] - (0.5 + d)).abs() < 1e-15
        );
        for (got, want) in b.iter().zip([5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        let (c, b) = gauss_legendre(5);
        let i9: f64 = c.iter().zip(&b).map(|(x, w)| w * x.powi(9)).sum();
        assert!((i9 - 0.1).abs() < 1e-14);
    }

    #[test]
    fn quadrature_exactness() {
        for r in 1..=MAX_STAGES {
            let (c, b) = gauss_legendre(r);
            for p in 0..2 * r {
                let q: f64 = c.iter().zip(&b).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p + 1) as f64).abs() < 1e-13, "r={r} p={p}");
            }
            assert!(b.iter().all(|&w| w > 0.0));
            assert!(c.iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }

    #[test]
    fn basis_is_orthonormal() {
        let (qn, qw) = gauss_legendre(24);
        for r in 1..=MAX_STAGES {
            let t = CollocationTableau::new(r).unwrap();
            for i in 0..r {
                let mean: f64 = qn.iter().zip(&qw).map(|(&s, w)| w * t.psi(i, s)).sum();
                assert!(
                    (mean - if i == 0 { 1.0 } else { 0.0 }).abs() < 1e-13,
                    "r={r} i={i} mean={mean:e}"
                );
                for j in 0..r {
                    let ip: f64 = qn
                        .iter()
                        .zip(&qw)
                        .map(|(&s, w)| w * t.psi(i, s) * t.psi(j, s))
                        .sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - want).abs() < 1e-12, "r={r} i={i} j={j} ip={ip}");
                }
            }
        }
    }

    #[test]
    fn monomial_form_matches_recurrence() {
        for r in 1..=MAX_STAGES {
            let t = CollocationTableau::new(r).unwrap();
            // coefficients grow like C(2j, j)^2, so does the cancellation error
            let tol = 1e-15 * t.basis_coeffs()[r - 1].iter().map(|a| a.abs()).sum::<f64>();
            for i in 0..=20 {
                let x = i as f64 / 20.0;
                for j in 0..r {
                    assert!((t.psi(j, x) - t.psi_monomial(j, x)).abs() <= tol.max(1e-15));
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        let pts: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let t1 = CollocationTableau::new(1).unwrap();
        let e = t1.projection_apply(f64::exp, &pts);
        assert!(e.iter().all(|v| (v - (1f64.exp() - 1.0)).abs() < 1e-14));

        let t3 = CollocationTableau::new(3).unwrap();
        let t4 = CollocationTableau::new(4).unwrap();
        let killed = t3.projection_apply(|s| t4.psi(3, s), &pts);
        let cubic = t3.projection_apply(|s| 2.0 - s + 4.0 * s * s, &pts);
        assert!(cubic
            .iter()
            .zip(&pts)
            .all(|(v, s)| (v - (2.0 - s + 4.0 * s * s)).abs() < 1e-12));
        assert!(killed.iter().all(|v| v.abs() < 1e-12));

        let rest = t3.projection_apply(|s| s.powi(3), &pts);
        assert!(rest
            .iter()
            .zip(&pts)
            .any(|(v, s)| (v - s.powi(3)).abs() > 1e-3));
    }

    #[test]
    fn single_stage_abar_is_phi1() {
        let g = make_grid(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        let t = CollocationTableau::new(1).unwrap();
        let table = spectrum_phi_table(&g, 0.3, 0.1, 1);
        let m = abar_multiplier(&t, &table, 0.3, 0).unwrap();
        assert_eq!(m, table.order(1));
        assert!(matches!(
            abar_multiplier(&t, &table, 0.3, 1),
            Err(CollocationError::StageOutOfRange { .. })
        ));
    }

    #[test]
    fn operator_set_zero_mode_and_unimodularity() {
        let g = make_grid(1, 16, 2.0 * std::f64::consts::PI).unwrap();
        for r in 1..=4 {
            let t = CollocationTableau::new(r).unwrap();
            let ops = build_operator_set(&g, &t, 0.05).unwrap();
            for k in 0..r {
                assert!(ops
                    .propagator(k)
                    .iter()
                    .all(|e| (e.norm() - 1.0).abs() < 1e-14));
                assert!((ops.propagator(k)[0] - 1.0).norm() == 0.0);
                for l in 0..r {
                    // Σ_j ψ_j(c_l) ∫_0^1 ψ_j(ξ c_k) dξ at λ = 0
                    let want: f64 = (0..r)
                        .map(|j| {
                            let (qn, qw) = gauss_legendre(16);
                            t.psi(j, t.nodes()[l])
                                * qn.iter()
                                    .zip(&qw)
                                    .map(|(&x, w)| w * t.psi(j, x * t.nodes()[k]))
                                    .sum::<f64>()
                        })
                        .sum();
                    assert!((ops.abar_stage(k, l)[0] - want).norm() < 1e-13);
                }
            }
            for l in 0..r {
                assert!((ops.abar_final(l)[0] - 1.0).norm() < 1e-13);
            }
            assert!(ops
                .final_propagator()
                .iter()
                .all(|e| (e.norm() - 1.0).abs() < 1e-14));
        }
        let t = CollocationTableau::new(2).unwrap();
        assert!(build_operator_set(&g, &t, 0.0).is_err());
        assert!(build_operator_set(&g, &t, f64::NAN).is_err());
    }

    #[test]
    fn final_abar_tends_to_one_as_h_vanishes() {
        let g = make_grid(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        let t = CollocationTableau::new(3).unwrap();
        let ops = build_operator_set(&g, &t, 1e-12).unwrap();
        for l in 0..3 {
            assert!(ops.abar_final(l).iter().all(|m| (m - 1.0).norm() < 1e-10));
        }
    }
}
