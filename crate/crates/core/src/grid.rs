//! Phase-space discretization of the torus 𝕋² × S¹.
//!
//! Positions live on the unit torus `[0,1)²`, velocities are unit vectors
//! parametrized by the angle `θ ∈ [0, 2π)`. Field values are stored row-major
//! with the angle as the fastest index: `(i1, i2, j) -> (i1 * n_x + i2) * n_theta + j`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduces `v` into `[0, period)`.
#[inline]
pub fn wrap(v: f64, period: f64) -> f64 {
    let r = v.rem_euclid(period);
    // rem_euclid can round up to `period` for tiny negative inputs
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Signed periodic difference `a - b` folded into `[-period/2, period/2)`.
#[inline]
pub fn periodic_delta(a: f64, b: f64, period: f64) -> f64 {
    wrap(a - b + 0.5 * period, period) - 0.5 * period
}

/// A point `z = (x, v)` of phase space, `v = (cos θ, sin θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    x: [f64; 2],
    theta: f64,
}

impl PhasePoint {
    pub fn new(x: [f64; 2], theta: f64) -> Self {
        Self {
            x: [wrap(x[0], 1.0), wrap(x[1], 1.0)],
            theta: wrap(theta, TAU),
        }
    }

    pub fn x(&self) -> [f64; 2] {
        self.x
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.theta.cos(), self.theta.sin()]
    }
}

/// Tensor grid on 𝕋² × S¹ with power-of-two sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    n_x: usize,
    n_theta: usize,
}

impl GridSpec {
    pub fn new(n_x: usize, n_theta: usize) -> Result<Self> {
        for (name, n) in [("n_x", n_x), ("n_theta", n_theta)] {
            if n < 8 {
                return Err(Error::InvalidGrid(format!("{name} = {n} is below 8")));
            }
            if !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!("{name} = {n} is not a power of two")));
            }
        }
        Ok(Self { n_x, n_theta })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n_x as f64
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    /// Local equilibrium `M = 1/|S¹|`.
    pub fn local_equilibrium(&self) -> f64 {
        1.0 / (2.0 * PI)
    }

    /// Number of spatial sites `n_x²`.
    pub fn sites(&self) -> usize {
        self.n_x * self.n_x
    }

    /// Total number of phase-space nodes.
    pub fn len(&self) -> usize {
        self.sites() * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one phase-space node.
    pub fn cell_volume(&self) -> f64 {
        self.dx() * self.dx() * self.dtheta()
    }

    /// Measure of the whole phase space, `|𝕋²| · |S¹| = 2π`.
    pub fn phase_volume(&self) -> f64 {
        TAU
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize, j: usize) -> usize {
        (i1 * self.n_x + i2) * self.n_theta + j
    }

    #[inline]
    pub fn x_coord(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    #[inline]
    pub fn theta_coord(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    /// Signed integer wavenumber of FFT bin `k` for length `n`.
    #[inline]
    pub fn wavenumber(k: usize, n: usize) -> i64 {
        if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    /// Wavenumber used for first derivatives: identical to [`Self::wavenumber`]
    /// except that the Nyquist bin maps to zero, which keeps the derivative
    /// real-valued and skew-adjoint.
    #[inline]
    pub fn derivative_wavenumber(k: usize, n: usize) -> f64 {
        if 2 * k == n {
            0.0
        } else {
            Self::wavenumber(k, n) as f64
        }
    }

    pub fn phase_point(&self, i1: usize, i2: usize, j: usize) -> PhasePoint {
        PhasePoint::new([self.x_coord(i1), self.x_coord(i2)], self.theta_coord(j))
    }
}
