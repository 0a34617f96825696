use rayon::prelude::*;

use super::{flow, ray_integral, RayRule};
use crate::absorption::AbsorptionField;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, PhasePoint};

/// Smallest admissible denominator `∫₀^{T*} χ(Z_{s-t}(z)) ds` where χ > 0.
pub const PSI_DENOMINATOR_MARGIN: f64 = 0.5;

/// The control weight
///
/// ```text
/// ψ_t(z) = χ(z) / ∫₀^{T*} χ(Z_{s-t}(z)) ds
/// ```
///
/// tabulated on `n_t` equispaced times of `[0, T*]` and the phase-space grid.
/// Along every characteristic the denominator is constant, so
/// `∫₀^{T*} ψ_t(Z_t(z)) dt = 1`.
#[derive(Debug, Clone)]
pub struct ControlWeight {
    grid: GridSpec,
    t_star: f64,
    n_t: usize,
    rule: RayRule,
    values: Vec<f64>,
    min_denominator: f64,
    chi: Vec<f64>,
}

/// Tabulates ψ. χ must already be normalized (see [`super::normalize_chi`]).
pub fn build_psi(
    field: &AbsorptionField,
    t_star: f64,
    n_t: usize,
    dt_quad: f64,
) -> Result<ControlWeight> {
    if !(t_star.is_finite() && t_star > 0.0) {
        return Err(Error::param("t_star", "must be positive"));
    }
    if n_t < 2 {
        return Err(Error::param("n_t", "needs at least two time samples"));
    }
    let grid = field.grid();
    let n = grid.n_x();
    let nt = grid.n_theta();
    let rule = RayRule::aligned(t_star, dt_quad);
    let chi = field.chi().to_vec();
    let per_time: Vec<(Vec<f64>, f64)> = (0..n_t)
        .into_par_iter()
        .map(|i| {
            let t = t_star * i as f64 / (n_t - 1) as f64;
            let mut slab = vec![0.0; grid.len()];
            let mut min_den = f64::INFINITY;
            for i1 in 0..n {
                for i2 in 0..n {
                    let c = chi[i1 * n + i2];
                    if c <= 0.0 {
                        continue;
                    }
                    for j in 0..nt {
                        let z = grid.phase_point(i1, i2, j);
                        let den = ray_integral(&chi, n, z, -t, &rule);
                        min_den = min_den.min(den);
                        slab[grid.index(i1, i2, j)] = c / den;
                    }
                }
            }
            (slab, min_den)
        })
        .collect();
    let min_denominator = per_time.iter().fold(f64::INFINITY, |m, (_, d)| m.min(*d));
    if min_denominator < PSI_DENOMINATOR_MARGIN {
        return Err(Error::DenominatorMargin {
            min_denominator,
            margin: PSI_DENOMINATOR_MARGIN,
        });
    }
    let mut values = Vec::with_capacity(n_t * grid.len());
    for (slab, _) in per_time {
        values.extend(slab);
    }
    Ok(ControlWeight {
        grid,
        t_star,
        n_t,
        rule,
        values,
        min_denominator,
        chi,
    })
}

impl ControlWeight {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn t_star(&self) -> f64 {
        self.t_star
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_star * i as f64 / (self.n_t - 1) as f64
    }

    /// Table in `(time, i1, i2, j)` row-major order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slab(&self, i: usize) -> &[f64] {
        &self.values[i * self.grid.len()..(i + 1) * self.grid.len()]
    }

    /// Minimum denominator over tabulated nodes with χ > 0.
    pub fn min_denominator(&self) -> f64 {
        self.min_denominator
    }

    /// Denominator `∫₀^{T*} χ(Z_{s-t}(z)) ds` at an arbitrary point.
    pub fn denominator(&self, t: f64, z: PhasePoint) -> f64 {
        ray_integral(&self.chi, self.grid.n_x(), z, -t, &self.rule)
    }

    /// Per-query ψ_t(z) with bilinear χ.
    pub fn eval(&self, t: f64, z: PhasePoint) -> f64 {
        let c = crate::absorption::bilinear(&self.chi, self.grid.n_x(), z.x());
        if c <= 0.0 {
            0.0
        } else {
            c / self.denominator(t, z)
        }
    }

    /// `∫₀^{T*} ψ_t(Z_t(z)) dt` on the denominator's time nodes.
    pub fn trajectory_average(&self, z: PhasePoint) -> f64 {
        self.rule.integrate(|t| self.eval(t, flow(z, t)))
    }
}
