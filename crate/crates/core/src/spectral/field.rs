use std::sync::Arc;

use num_complex::Complex64;

use super::{SpectralError, TorusGrid};

/// Complex field on a [`TorusGrid`] held as grid samples, Fourier
/// coefficients, or both. At least one representation is always present and
/// any present representation is current.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<TorusGrid>,
    phys: Option<Vec<Complex64>>,
    coef: Option<Vec<Complex64>>,
}

impl SpectralField {
    pub fn from_physical(
        grid: Arc<TorusGrid>,
        samples: Vec<Complex64>,
    ) -> Result<Self, SpectralError> {
        check_len(&grid, samples.len())?;
        Ok(Self {
            grid,
            phys: Some(samples),
            coef: None,
        })
    }

    pub fn from_fourier(
        grid: Arc<TorusGrid>,
        coefs: Vec<Complex64>,
    ) -> Result<Self, SpectralError> {
        check_len(&grid, coefs.len())?;
        Ok(Self {
            grid,
            phys: None,
            coef: Some(coefs),
        })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Arc<TorusGrid>, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let samples = (0..grid.len()).map(|j| f(&grid.point(j))).collect();
        Self {
            grid,
            phys: Some(samples),
            coef: None,
        }
    }

    pub fn zeros(grid: Arc<TorusGrid>) -> Self {
        let len = grid.len();
        Self {
            grid,
            phys: Some(vec![Complex64::new(0.0, 0.0); len]),
            coef: None,
        }
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn has_physical(&self) -> bool {
        self.phys.is_some()
    }

    pub fn has_fourier(&self) -> bool {
        self.coef.is_some()
    }

    /// Current grid samples, if valid.
    pub fn physical(&self) -> Option<&[Complex64]> {
        self.phys.as_deref()
    }

    /// Current Fourier coefficients, if valid.
    pub fn fourier(&self) -> Option<&[Complex64]> {
        self.coef.as_deref()
    }

    /// Populates the Fourier representation; no-op when already valid.
    pub fn to_fourier(mut self) -> Self {
        self.ensure_fourier();
        self
    }

    /// Populates the physical representation; no-op when already valid.
    pub fn to_physical(mut self) -> Self {
        self.ensure_physical();
        self
    }

    pub fn ensure_fourier(&mut self) -> &[Complex64] {
        if self.coef.is_none() {
            let mut buf = self
                .phys
                .clone()
                .expect("field has no valid representation");
            self.grid.forward(&mut buf);
            self.coef = Some(buf);
        }
        self.coef.as_deref().unwrap()
    }

    pub fn ensure_physical(&mut self) -> &[Complex64] {
        if self.phys.is_none() {
            let mut buf = self
                .coef
                .clone()
                .expect("field has no valid representation");
            self.grid.inverse(&mut buf);
            self.phys = Some(buf);
        }
        self.phys.as_deref().unwrap()
    }

    /// Fourier coefficients, transforming a copy if needed.
    pub fn fourier_values(&self) -> Vec<Complex64> {
        match &self.coef {
            Some(c) => c.clone(),
            None => {
                let mut buf = self.phys.clone().unwrap();
                self.grid.forward(&mut buf);
                buf
            }
        }
    }

    /// Grid samples, transforming a copy if needed.
    pub fn physical_values(&self) -> Vec<Complex64> {
        match &self.phys {
            Some(p) => p.clone(),
            None => {
                let mut buf = self.coef.clone().unwrap();
                self.grid.inverse(&mut buf);
                buf
            }
        }
    }

    pub fn into_fourier_values(mut self) -> Vec<Complex64> {
        self.ensure_fourier();
        self.coef.take().unwrap()
    }

    pub fn into_physical_values(mut self) -> Vec<Complex64> {
        self.ensure_physical();
        self.phys.take().unwrap()
    }

    /// Multiplies every Fourier coefficient by the matching entry of `m`.
    pub fn apply_diagonal(mut self, m: &[Complex64]) -> Result<Self, SpectralError> {
        check_len(&self.grid, m.len())?;
        self.ensure_fourier();
        let coef = self.coef.as_mut().unwrap();
        coef.iter_mut().zip(m).for_each(|(c, mk)| *c *= mk);
        self.phys = None;
        Ok(self)
    }

    /// Discrete `H^α` norm `(|û_0|² + Σ_{k≠0} |û_k|² |κ(k)|^{2α})^{1/2}`.
    pub fn h_alpha_norm(&self, alpha: f64) -> Result<f64, SpectralError> {
        if !(alpha >= 0.0) {
            return Err(SpectralError::NegativeAlpha(alpha));
        }
        Ok(h_alpha_norm_of(&self.grid, &self.fourier_values(), alpha))
    }

    /// `L²` norm under the mean-normalized inner product.
    pub fn mass(&self) -> f64 {
        let sum: f64 = match &self.phys {
            Some(p) => p.iter().map(|v| v.norm_sqr()).sum::<f64>() / p.len() as f64,
            None => self
                .coef
                .as_ref()
                .unwrap()
                .iter()
                .map(|v| v.norm_sqr())
                .sum(),
        };
        sum.sqrt()
    }

    /// Discrete energy `½ Σ_k |κ(k)|² |û_k|² + (λ/4) N^{-d} Σ_j |u_j|⁴`.
    pub fn energy(&self, lambda: f64) -> f64 {
        let coef = self.fourier_values();
        let kinetic = kinetic_energy(&self.grid, &coef);
        if lambda == 0.0 {
            return kinetic;
        }
        let phys = self.physical_values();
        let quartic = phys
            .iter()
            .map(|v| v.norm_sqr() * v.norm_sqr())
            .sum::<f64>()
            / phys.len() as f64;
        kinetic + 0.25 * lambda * quartic
    }

    /// Pointwise `-λ|u|²u` in physical space.
    pub fn nonlinearity(&self, lambda: f64) -> Self {
        let mut out = self.physical_values();
        cubic_in_place(&mut out, lambda);
        Self {
            grid: self.grid.clone(),
            phys: Some(out),
            coef: None,
        }
    }

    /// `L²` distance to `other` on the same grid.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        let a = self.fourier_values();
        let b = other.fourier_values();
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn check_len(grid: &TorusGrid, got: usize) -> Result<(), SpectralError> {
    if got != grid.len() {
        return Err(SpectralError::SizeMismatch {
            expected: grid.len(),
            got,
        });
    }
    Ok(())
}

/// `g ← -λ|g|²g`, element-wise.
pub fn cubic_in_place(values: &mut [Complex64], lambda: f64) {
    values.iter_mut().for_each(|v| *v *= -lambda * v.norm_sqr());
}

/// `H^α` norm of a coefficient array laid out on `grid`.
pub fn h_alpha_norm_of(grid: &TorusGrid, coef: &[Complex64], alpha: f64) -> f64 {
    let mut sum = 0.0;
    for (c, lam) in coef.iter().zip(grid.lap_symbol()) {
        let k2 = -lam;
        let w = if k2 == 0.0 || alpha == 0.0 {
            1.0
        } else {
            k2.powf(alpha)
        };
        sum += c.norm_sqr() * w;
    }
    sum.sqrt()
}

fn kinetic_energy(grid: &TorusGrid, coef: &[Complex64]) -> f64 {
    0.5 * coef
        .iter()
        .zip(grid.lap_symbol())
        .map(|(c, lam)| -lam * c.norm_sqr())
        .sum::<f64>()
}

/// Plain `L²` norm of a coefficient array.
pub fn coef_l2(coef: &[Complex64]) -> f64 {
    coef.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid(n: usize) -> Arc<TorusGrid> {
        Arc::new(make_grid(1, n, 2.0 * PI).unwrap())
    }

    #[test]
    fn constant_field_has_only_zero_mode() {
        let g = grid(16);
        let u = SpectralField::from_fn(g.clone(), |_| c(0.3, -0.2)).to_fourier();
        let coef = u.fourier().unwrap();
        assert!((coef[0] - c(0.3, -0.2)).norm() < 1e-15);
        assert!(coef[1..].iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn single_exponential_maps_to_unit_coefficient() {
        let g = grid(16);
        let u =
            SpectralField::from_fn(g.clone(), |x| Complex64::from_polar(1.0, x[0])).to_fourier();
        let coef = u.fourier().unwrap();
        let one = g.flat_mode(&[1]).unwrap();
        for (i, v) in coef.iter().enumerate() {
            let want = if i == one { 1.0 } else { 0.0 };
            assert!((v - c(want, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn transform_is_idempotent() {
        let g = grid(8);
        let u = SpectralField::from_fn(g, |x| c(x[0].sin(), 0.0)).to_fourier();
        let before = u.fourier().unwrap().to_vec();
        let u = u.to_fourier();
        assert_eq!(before, u.fourier().unwrap());
        assert!(u.has_physical());
    }

    #[test]
    fn apply_diagonal_cases() {
        let g = grid(16);
        let u = SpectralField::from_fn(g.clone(), |x| Complex64::from_polar(1.0, x[0]));
        let ones = vec![c(1.0, 0.0); g.len()];
        let same = u.clone().apply_diagonal(&ones).unwrap();
        assert!(same.l2_distance(&u) < 1e-15);
        assert!(!same.has_physical());

        let lap: Vec<Complex64> = g.lap_symbol().iter().map(|&l| c(l, 0.0)).collect();
        let lu = u
            .clone()
            .apply_diagonal(&lap)
            .unwrap()
            .into_physical_values();
        let pu = u.physical_values();
        for (a, b) in lu.iter().zip(&pu) {
            assert!((a + b).norm() < 1e-13);
        }

        let short = vec![c(1.0, 0.0); 3];
        assert!(matches!(
            u.apply_diagonal(&short),
            Err(SpectralError::SizeMismatch {
                expected: 16,
                got: 3
            })
        ));
    }

    #[test]
    fn unimodular_multiplier_keeps_moduli() {
        let g = grid(32);
        let u = SpectralField::from_fn(g.clone(), |x| c((2.0 * x[0]).cos() + 0.3, x[0].sin()))
            .to_fourier();
        let m: Vec<Complex64> = g
            .lap_symbol()
            .iter()
            .map(|&l| Complex64::from_polar(1.0, 0.37 * l))
            .collect();
        let v = u.clone().apply_diagonal(&m).unwrap();
        for (a, b) in u.fourier().unwrap().iter().zip(v.fourier().unwrap()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn h_alpha_norm_examples() {
        let g = grid(16);
        let e1 = SpectralField::from_fn(g.clone(), |x| Complex64::from_polar(1.0, x[0]));
        for alpha in [0.0, 0.5, 1.0, 3.0] {
            assert!((e1.h_alpha_norm(alpha).unwrap() - 1.0).abs() < 1e-14);
        }
        let cst = SpectralField::from_fn(g.clone(), |_| c(-0.6, 0.8));
        assert!((cst.h_alpha_norm(2.0).unwrap() - 1.0).abs() < 1e-14);
        let two = SpectralField::from_fn(g, |x| {
            Complex64::from_polar(1.0, x[0]) + Complex64::from_polar(1.0, 2.0 * x[0])
        });
        assert!((two.h_alpha_norm(1.0).unwrap() - 5f64.sqrt()).abs() < 1e-13);
        assert!(matches!(
            two.h_alpha_norm(-1.0),
            Err(SpectralError::NegativeAlpha(_))
        ));
    }

    #[test]
    fn energy_examples() {
        let g = grid(16);
        let cst = SpectralField::from_fn(g.clone(), |_| c(0.5, 0.0));
        assert!((cst.energy(-2.0) + 0.03125).abs() < 1e-16);
        let e1 = SpectralField::from_fn(g, |x| Complex64::from_polar(1.0, x[0]));
        assert!((e1.energy(0.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn mass_examples() {
        let g = grid(16);
        assert!((SpectralField::from_fn(g.clone(), |_| c(3.0, 4.0)).mass() - 5.0).abs() < 1e-14);
        let a = c(0.3, -1.1);
        let m3 = SpectralField::from_fn(g, |x| a * Complex64::from_polar(1.0, 3.0 * x[0]));
        assert!((m3.mass() - a.norm()).abs() < 1e-14);
        assert!((m3.clone().to_fourier().mass() - a.norm()).abs() < 1e-14);
    }

    #[test]
    fn nonlinearity_examples() {
        let g = grid(8);
        let one = SpectralField::from_fn(g.clone(), |_| c(1.0, 0.0)).nonlinearity(-2.0);
        assert!(one
            .physical()
            .unwrap()
            .iter()
            .all(|v| (v - c(2.0, 0.0)).norm() < 1e-15));
        assert!(!one.has_fourier());
        let zero = SpectralField::zeros(g.clone()).nonlinearity(-2.0);
        assert!(zero.physical().unwrap().iter().all(|v| v.norm() == 0.0));
        let u = Complex64::from_polar(0.7, 1.3);
        let out = SpectralField::from_fn(g, |_| u).nonlinearity(0.9);
        let want = -0.9 * 0.49 * u;
        assert!(out
            .physical()
            .unwrap()
            .iter()
            .all(|v| (v - want).norm() < 1e-15));
    }
}
