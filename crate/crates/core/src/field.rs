//! Phase-space densities and their discrete Fourier representation.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fft::{transform_axis, PlanPair};
use crate::grid::GridSpec;

/// A real density `f(x, θ)` sampled on the tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl DensityField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x1, x2, θ)` at every node.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i1 in 0..grid.n_x() {
            let x1 = grid.x_coord(i1);
            for i2 in 0..grid.n_x() {
                let x2 = grid.x_coord(i2);
                for j in 0..grid.n_theta() {
                    values.push(f(x1, x2, grid.theta_coord(j)));
                }
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i1: usize, i2: usize, j: usize) -> f64 {
        self.values[self.grid.index(i1, i2, j)]
    }

    /// θ-profile at spatial site `(i1, i2)`.
    pub fn site(&self, i1: usize, i2: usize) -> &[f64] {
        let start = self.grid.index(i1, i2, 0);
        &self.values[start..start + self.grid.n_theta()]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| a * u + b * v)
                .collect(),
        })
    }

    /// Discrete `L²(𝕋² × S¹)` inner product.
    pub fn inner(&self, other: &Self) -> f64 {
        let s: f64 = self.values.iter().zip(&other.values).map(|(u, v)| u * v).sum();
        s * self.grid.cell_volume()
    }

    /// Mean value with respect to the phase-space measure, i.e. the constant
    /// equilibrium carrying the same mass.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Subtracts the global average so that the field carries zero mass.
    pub fn zero_mass(&self) -> Self {
        let m = self.mean();
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }

    /// Removes every discrete invariant of the split-step scheme: the mean and
    /// the velocity-uniform parts of the three spatial Nyquist modes, which
    /// the spectral transport leaves fixed.
    pub fn without_invariants(&self) -> Self {
        let n = self.grid.n_x();
        let nt = self.grid.n_theta();
        let avg: Vec<f64> = self
            .values
            .chunks(nt)
            .map(|site| site.iter().sum::<f64>() / nt as f64)
            .collect();
        let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        let modes: [fn(f64, f64) -> f64; 4] = [|_, _| 1.0, |a, _| a, |_, b| b, |a, b| a * b];
        let mut shift = vec![0.0; n * n];
        for e in modes {
            let basis = |s: usize| e(sign(s / n), sign(s % n));
            let c = (0..n * n).map(|s| avg[s] * basis(s)).sum::<f64>() / (n * n) as f64;
            for (s, v) in shift.iter_mut().enumerate() {
                *v += c * basis(s);
            }
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v - shift[k / nt])
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        self.check_grid(other.grid)
    }

    pub(crate) fn check_grid(&self, grid: GridSpec) -> Result<()> {
        if self.grid != grid {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: self.grid.len(),
            });
        }
        Ok(())
    }
}

/// Complex Fourier coefficients `f̂(k1, k2, m)` in FFT bin order, scaled so
/// that the zero mode equals the grid mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of the signed wavenumbers `(k1, k2, m)`.
    pub fn mode(&self, k1: i64, k2: i64, m: i64) -> Complex64 {
        let n = self.grid.n_x() as i64;
        let nt = self.grid.n_theta() as i64;
        let b = |k: i64, n: i64| k.rem_euclid(n) as usize;
        self.coeffs[self.grid.index(b(k1, n), b(k2, n), b(m, nt))]
    }

    /// Largest violation of `f̂(-k) = conj(f̂(k))`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.grid.n_x();
        let nt = self.grid.n_theta();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..nt {
                    let here = self.coeffs[self.grid.index(a, b, c)];
                    let mirror =
                        self.coeffs[self.grid.index((n - a) % n, (n - b) % n, (nt - c) % nt)];
                    worst = worst.max((here - mirror.conj()).norm());
                }
            }
        }
        worst
    }
}

fn plans(grid: GridSpec) -> (PlanPair, PlanPair) {
    let mut planner = FftPlanner::new();
    (
        PlanPair::new(&mut planner, grid.n_x()),
        PlanPair::new(&mut planner, grid.n_theta()),
    )
}

/// Discrete Fourier transform in all three periodic directions.
pub fn transform_forward(f: &DensityField) -> Spectrum {
    let grid = f.grid();
    let (px, pt) = plans(grid);
    let shape = [grid.n_x(), grid.n_x(), grid.n_theta()];
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_axis(&mut data, shape, 2, &pt, true);
    transform_axis(&mut data, shape, 1, &px, true);
    transform_axis(&mut data, shape, 0, &px, true);
    Spectrum { grid, coeffs: data }
}

/// Inverse of [`transform_forward`]; imaginary residue of the synthesis is
/// discarded, which is exact for conjugate-symmetric input.
pub fn transform_inverse(s: &Spectrum) -> DensityField {
    let grid = s.grid();
    let (px, pt) = plans(grid);
    let shape = [grid.n_x(), grid.n_x(), grid.n_theta()];
    let mut data = s.coeffs.clone();
    transform_axis(&mut data, shape, 0, &px, false);
    transform_axis(&mut data, shape, 1, &px, false);
    transform_axis(&mut data, shape, 2, &pt, false);
    DensityField {
        grid,
        values: data.into_iter().map(|c| c.re).collect(),
    }
}
