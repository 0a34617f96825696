//! Initial-data presets.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::deviation_l2_sq;
use crate::error::{Error, Result};
use crate::field::{transform_inverse, DensityField, Spectrum};
use crate::grid::{GridSpec, PhasePoint};
use crate::registry::{Named, Registry};

/// Parameters shared by the presets; each preset reads the ones it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialParams {
    /// Perturbation size (single-mode) or target `‖g‖` (bump, random).
    pub amplitude: f64,
    /// Spatial wavevector of the single mode.
    pub mode: [i64; 2],
    /// Bump center in space.
    pub center: [f64; 2],
    /// Bump center in angle.
    pub theta0: f64,
    /// Bump width in space; the angular width is `2π·width`.
    pub width: f64,
    /// Largest `|k₁|, |k₂|` of random data.
    pub max_wavenumber: i64,
    /// Largest `|m|` of random data.
    pub max_angular_mode: i64,
    pub seed: u64,
}

impl Default for InitialParams {
    fn default() -> Self {
        Self {
            amplitude: 0.5,
            mode: [1, 0],
            center: [0.5, 0.5],
            theta0: 0.0,
            width: 0.1,
            max_wavenumber: 3,
            max_angular_mode: 3,
            seed: 0,
        }
    }
}

pub trait InitialData: Named + Send + Sync {
    fn description(&self) -> &'static str;
    fn build(&self, grid: GridSpec, params: &InitialParams) -> Result<DensityField>;
}

/// `1 + ε cos(2π k·x) cos θ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SingleMode;

impl Named for SingleMode {
    fn name(&self) -> &'static str {
        "single-mode"
    }
}

impl InitialData for SingleMode {
    fn description(&self) -> &'static str {
        "1 + amplitude cos(2 pi mode.x) cos(theta)"
    }

    fn build(&self, grid: GridSpec, p: &InitialParams) -> Result<DensityField> {
        let [k1, k2] = p.mode;
        let (k1, k2) = (k1 as f64, k2 as f64);
        Ok(DensityField::from_fn(grid, |x1, x2, th| {
            1.0 + p.amplitude * (TAU * (k1 * x1 + k2 * x2)).cos() * th.cos()
        }))
    }
}

/// Smooth periodic phase-space bump of zero mass and norm `amplitude`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bump;

impl Named for Bump {
    fn name(&self) -> &'static str {
        "bump"
    }
}

impl InitialData for Bump {
    fn description(&self) -> &'static str {
        "von Mises bump at (center, theta0), spatial std ~ width, angular std ~ 2 pi width, mean removed"
    }

    fn build(&self, grid: GridSpec, p: &InitialParams) -> Result<DensityField> {
        bump(grid, PhasePoint::new(p.center, p.theta0), p.width, p.amplitude)
    }
}

/// Bump centered at `z`; periodic in every direction with standard deviation
/// close to `width` in space and `2π·width` in angle.
pub fn bump(grid: GridSpec, z: PhasePoint, width: f64, norm: f64) -> Result<DensityField> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::param("width", "must be positive"));
    }
    let [c1, c2] = z.x();
    let kx = 1.0 / (TAU * width).powi(2);
    let kt = 1.0 / (TAU * width).powi(2);
    let raw = DensityField::from_fn(grid, |x1, x2, th| {
        ((TAU * (x1 - c1)).cos() - 1.0 + (TAU * (x2 - c2)).cos() - 1.0) * kx
            + ((th - z.theta()).cos() - 1.0) * kt
    });
    let raw = DensityField::from_values(grid, raw.values().iter().map(|v| v.exp()).collect())?;
    normalized(raw.zero_mass(), norm)
}

/// Random real trigonometric polynomial without the constant mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomBandLimited;

impl Named for RandomBandLimited {
    fn name(&self) -> &'static str {
        "random"
    }
}

impl InitialData for RandomBandLimited {
    fn description(&self) -> &'static str {
        "Gaussian Fourier coefficients for |k1|,|k2| <= max_wavenumber, |m| <= max_angular_mode, zero mass"
    }

    fn build(&self, grid: GridSpec, p: &InitialParams) -> Result<DensityField> {
        random_band_limited(grid, p.max_wavenumber, p.max_angular_mode, p.seed, p.amplitude)
    }
}

pub fn random_band_limited(
    grid: GridSpec,
    kmax: i64,
    mmax: i64,
    seed: u64,
    norm: f64,
) -> Result<DensityField> {
    let n = grid.n_x() as i64;
    let nt = grid.n_theta() as i64;
    if kmax < 0 || mmax < 0 || kmax + mmax == 0 || 2 * kmax >= n || 2 * mmax >= nt {
        return Err(Error::param(
            "max_wavenumber",
            "band limits must be non-trivial and below the Nyquist modes",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::default(); grid.len()];
    let bin = |k: i64, n: i64| k.rem_euclid(n) as usize;
    for k1 in -kmax..=kmax {
        for k2 in -kmax..=kmax {
            for m in -mmax..=mmax {
                // one representative per conjugate pair
                if (k1, k2, m) <= (0, 0, 0) {
                    continue;
                }
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let c = Complex64::new(re, im);
                coeffs[grid.index(bin(k1, n), bin(k2, n), bin(m, nt))] = c;
                coeffs[grid.index(bin(-k1, n), bin(-k2, n), bin(-m, nt))] = c.conj();
            }
        }
    }
    let f = transform_inverse(&Spectrum::from_coeffs(grid, coeffs)?);
    normalized(f, norm)
}

fn normalized(f: DensityField, norm: f64) -> Result<DensityField> {
    let current = deviation_l2_sq(&f).sqrt();
    if current == 0.0 {
        return Err(Error::DegenerateMember { index: 0 });
    }
    Ok(f.scaled(norm / current))
}

pub fn initial_registry() -> Registry<dyn InitialData> {
    let mut r: Registry<dyn InitialData> = Registry::new("initial-data preset");
    r.register(Box::new(SingleMode))
        .register(Box::new(Bump))
        .register(Box::new(RandomBandLimited));
    r
}
