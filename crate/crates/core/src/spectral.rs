//! Truncated Fourier representation on an oversampled periodic grid.
//!
//! Functions live on [0, 2pi) and are represented by complex coefficients on
//! modes |k| <= n_modes with conjugate symmetry (real-valued functions). The
//! physical grid is oversampled so that pointwise products of moderate degree
//! transform back without aliasing the retained modes.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients indexed k = -n_modes ..= n_modes (offset storage).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVec {
    n_modes: usize,
    data: Vec<Complex64>,
}

impl ModeVec {
    pub fn zeros(n_modes: usize) -> Self {
        ModeVec {
            n_modes,
            data: vec![Complex64::ZERO; 2 * n_modes + 1],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn get(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.n_modes {
            Complex64::ZERO
        } else {
            self.data[(k + self.n_modes as i64) as usize]
        }
    }

    pub fn set(&mut self, k: i64, value: Complex64) {
        assert!(k.unsigned_abs() as usize <= self.n_modes);
        self.data[(k + self.n_modes as i64) as usize] = value;
    }

    pub fn add(&mut self, k: i64, value: Complex64) {
        assert!(k.unsigned_abs() as usize <= self.n_modes);
        self.data[(k + self.n_modes as i64) as usize] += value;
    }

    /// Applies a real symbol s(k) diagonally.
    pub fn multiplier(&self, mut symbol: impl FnMut(i64) -> f64) -> ModeVec {
        let mut out = self.clone();
        for k in -(self.n_modes as i64)..=(self.n_modes as i64) {
            let s = symbol(k);
            let idx = (k + self.n_modes as i64) as usize;
            out.data[idx] = self.data[idx] * s;
        }
        out
    }

    /// Applies a complex symbol s(k) diagonally (e.g. the derivative i kappa k).
    pub fn multiplier_complex(&self, mut symbol: impl FnMut(i64) -> Complex64) -> ModeVec {
        let mut out = self.clone();
        for k in -(self.n_modes as i64)..=(self.n_modes as i64) {
            let s = symbol(k);
            let idx = (k + self.n_modes as i64) as usize;
            out.data[idx] = self.data[idx] * s;
        }
        out
    }

    /// Largest |coefficient|.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Maximum deviation from conjugate symmetry (0 for a real function).
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.n_modes as i64;
        (0..=n)
            .map(|k| (self.get(k) - self.get(-k).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn iter_modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.n_modes as i64;
        (-n..=n).map(move |k| (k, self.get(k)))
    }
}

/// Mode cutoff plus an oversampled physical grid and the transform pair.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    n_modes: usize,
    oversample: usize,
    n_phys: usize,
    /// e^{i x_j} for each grid point.
    unit_phases: Vec<Complex64>,
}

impl SpectralGrid {
    pub const DEFAULT_OVERSAMPLE: usize = 4;

    pub fn new(n_modes: usize, oversample: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::bad_input("grid needs at least one mode"));
        }
        if oversample < 2 {
            return Err(Error::bad_input(
                "oversample factor must be at least 2 to keep quadratic products alias-free",
            ));
        }
        let n_phys = oversample * (2 * n_modes + 1);
        let unit_phases = (0..n_phys)
            .map(|j| {
                let x = 2.0 * std::f64::consts::PI * j as f64 / n_phys as f64;
                Complex64::new(x.cos(), x.sin())
            })
            .collect();
        Ok(SpectralGrid {
            n_modes,
            oversample,
            n_phys,
            unit_phases,
        })
    }

    pub fn with_default_oversample(n_modes: usize) -> Result<Self> {
        Self::new(n_modes, Self::DEFAULT_OVERSAMPLE)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    pub fn n_phys(&self) -> usize {
        self.n_phys
    }

    pub fn grid_points(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_phys;
        (0..n).map(move |j| 2.0 * std::f64::consts::PI * j as f64 / n as f64)
    }

    /// Synthesis: point values u(x_j) of a real function given its modes.
    pub fn to_physical(&self, modes: &ModeVec) -> Vec<f64> {
        assert_eq!(modes.n_modes(), self.n_modes);
        let n = self.n_modes as i64;
        let mut values = vec![0.0; self.n_phys];
        for (j, value) in values.iter_mut().enumerate() {
            // accumulate k and -k together so the sum is exactly real
            let mut acc = modes.get(0).re;
            for k in 1..=n {
                let phase = self.unit_phases[(j * k as usize) % self.n_phys];
                acc += 2.0 * (modes.get(k) * phase).re;
            }
            *value = acc;
        }
        values
    }

    /// Analysis: modes |k| <= n_modes of real point values.
    pub fn to_modes(&self, values: &[f64]) -> ModeVec {
        assert_eq!(values.len(), self.n_phys);
        let n = self.n_modes as i64;
        let mut out = ModeVec::zeros(self.n_modes);
        for k in 0..=n {
            let mut acc = Complex64::ZERO;
            for (j, &v) in values.iter().enumerate() {
                // e^{-i k x_j}
                let phase = self.unit_phases[(j * k as usize) % self.n_phys].conj();
                acc += phase * v;
            }
            acc /= self.n_phys as f64;
            out.set(k, acc);
            if k > 0 {
                out.set(-k, acc.conj());
            }
        }
        out
    }

    /// Pointwise product in physical space, projected back onto the retained
    /// modes. Exact for quadratic products at oversample >= 2.
    pub fn product_modes(&self, a: &ModeVec, b: &ModeVec) -> ModeVec {
        let pa = self.to_physical(a);
        let pb = self.to_physical(b);
        let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
        self.to_modes(&prod)
    }

    /// Quadrature of point values over the period (trapezoid rule, which is
    /// spectrally exact on equispaced periodic grids).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.n_phys);
        values.iter().sum::<f64>() * 2.0 * std::f64::consts::PI / self.n_phys as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact_to_1e13() {
        let grid = SpectralGrid::new(16, 4).unwrap();
        let mut modes = ModeVec::zeros(16);
        modes.set(0, Complex64::new(0.3, 0.0));
        for k in 1..=16i64 {
            let c = Complex64::new(0.7 / (k as f64 + 1.0), -0.2 / (k as f64).powi(2));
            modes.set(k, c);
            modes.set(-k, c.conj());
        }
        let values = grid.to_physical(&modes);
        let back = grid.to_modes(&values);
        for (k, c) in modes.iter_modes() {
            assert!(
                (back.get(k) - c).norm() < 1e-13,
                "mode {k} round trip error {}",
                (back.get(k) - c).norm()
            );
        }
    }

    #[test]
    fn quadratic_product_is_alias_free() {
        let grid = SpectralGrid::new(8, 4).unwrap();
        // u = cos(3x), v = cos(5x): u*v = cos(2x)/2 + cos(8x)/2
        let mut u = ModeVec::zeros(8);
        u.set(3, Complex64::new(0.5, 0.0));
        u.set(-3, Complex64::new(0.5, 0.0));
        let mut v = ModeVec::zeros(8);
        v.set(5, Complex64::new(0.5, 0.0));
        v.set(-5, Complex64::new(0.5, 0.0));
        let p = grid.product_modes(&u, &v);
        assert!((p.get(2).re - 0.25).abs() < 1e-14);
        assert!((p.get(8).re - 0.25).abs() < 1e-14);
        assert!(p.get(1).norm() < 1e-14);
    }

    #[test]
    fn integrate_matches_mean() {
        let grid = SpectralGrid::new(4, 4).unwrap();
        let values: Vec<f64> = grid.grid_points().map(|x| 1.5 + x.cos()).collect();
        let integral = grid.integrate(&values);
        assert!((integral - 1.5 * 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
