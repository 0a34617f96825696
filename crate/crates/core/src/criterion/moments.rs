//! Velocity moments of the deviation and the flux identity
//! `∂_i ρ = K_i + Σ_j ∂_j J_{ij}` with `∂_0 = ∂_t`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::absorption::AbsorptionField;
use crate::error::Result;
use crate::field::DensityField;
use crate::fft::{transpose_square, PlanPair};
use crate::grid::GridSpec;

/// `φ_0 = 1/2π`, `φ_1 = cos θ/π`, `φ_2 = sin θ/π` at the θ nodes.
pub fn test_functions(grid: GridSpec) -> [Vec<f64>; 3] {
    let th: Vec<f64> = (0..grid.n_theta()).map(|j| grid.theta_coord(j)).collect();
    [
        th.iter().map(|_| 1.0 / TAU).collect(),
        th.iter().map(|t| t.cos() / PI).collect(),
        th.iter().map(|t| t.sin() / PI).collect(),
    ]
}

/// `B[i][k] = ∫ φ_i b_k dθ` for `b = (1, cos θ, sin θ)`; the identity for exact quadrature.
pub fn biorthogonality(grid: GridSpec) -> [[f64; 3]; 3] {
    let phi = test_functions(grid);
    let dth = grid.dtheta();
    let basis = |k: usize, t: f64| match k {
        0 => 1.0,
        1 => t.cos(),
        _ => t.sin(),
    };
    let mut b = [[0.0; 3]; 3];
    for (i, row) in b.iter_mut().enumerate() {
        for (k, e) in row.iter_mut().enumerate() {
            *e = (0..grid.n_theta())
                .map(|j| phi[i][j] * basis(k, grid.theta_coord(j)) * dth)
                .sum();
        }
    }
    b
}

/// Spectral gradient of a periodic `n × n` table (Nyquist derivative set to 0).
pub fn spectral_gradient(values: &[f64], n: usize) -> [Vec<f64>; 2] {
    let mut planner = FftPlanner::new();
    let plan = PlanPair::new(&mut planner, n);
    spectral_gradient_with(&plan, values, n)
}

fn spectral_gradient_with(plan: &PlanPair, values: &[f64], n: usize) -> [Vec<f64>; 2] {
    let mut hat: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    // rows are i1, columns i2
    plan.forward(&mut hat);
    transpose_square(&mut hat, n);
    plan.forward(&mut hat);
    // layout [k2][k1] after the second pass
    let kappa: Vec<f64> = (0..n).map(|k| GridSpec::derivative_wavenumber(k, n)).collect();
    let mut out = [hat.clone(), hat];
    for (axis, buf) in out.iter_mut().enumerate() {
        for (k2, row) in buf.chunks_mut(n).enumerate() {
            for (k1, c) in row.iter_mut().enumerate() {
                let k = if axis == 0 { kappa[k1] } else { kappa[k2] };
                *c *= Complex64::new(0.0, TAU * k);
            }
        }
        plan.inverse(buf);
        transpose_square(buf, n);
        plan.inverse(buf);
    }
    let [d1, d2] = out;
    [
        d1.into_iter().map(|c| c.re).collect(),
        d2.into_iter().map(|c| c.re).collect(),
    ]
}

/// Right-hand side of the equation, `−v·∇g + σ ∂²_θ g`, evaluated spectrally.
pub fn generator(g: &DensityField, field: &AbsorptionField) -> Result<DensityField> {
    g.check_grid(field.grid())?;
    let grid = g.grid();
    let (n, nt) = (grid.n_x(), grid.n_theta());
    let mut planner = FftPlanner::new();
    let x_plan = PlanPair::new(&mut planner, n);
    let t_plan = PlanPair::new(&mut planner, nt);
    let values = g.values();
    let transport: Vec<Vec<f64>> = (0..nt)
        .into_par_iter()
        .map(|j| {
            let slice: Vec<f64> = (0..n * n).map(|s| values[s * nt + j]).collect();
            let [d1, d2] = spectral_gradient_with(&x_plan, &slice, n);
            let th = grid.theta_coord(j);
            let (c, s) = (th.cos(), th.sin());
            d1.iter().zip(&d2).map(|(a, b)| -(c * a + s * b)).collect()
        })
        .collect();
    let sigma = field.sigma();
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(nt).enumerate().for_each(|(s, site)| {
        let mut buf: Vec<Complex64> = g.values()[s * nt..(s + 1) * nt]
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        t_plan.forward(&mut buf);
        for (m, c) in buf.iter_mut().enumerate() {
            let w = GridSpec::wavenumber(m, nt) as f64;
            *c *= -sigma[s] * w * w;
        }
        t_plan.inverse(&mut buf);
        for (j, v) in site.iter_mut().enumerate() {
            *v = transport[j][s] + buf[j].re;
        }
    });
    DensityField::from_values(grid, out)
}

/// `(next − prev) / 2dt` from snapshots on either side of the evaluation time.
pub fn centered_time_derivative(prev: &DensityField, next: &DensityField, dt: f64) -> Result<DensityField> {
    prev.combine(-0.5 / dt, next, 0.5 / dt)
}

/// Moment fields at one time, each an `n × n` table.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentDecomposition {
    grid: GridSpec,
    /// Velocity average of the deviation.
    pub density: Vec<f64>,
    /// `K_i = σ ∫ (2πg − ρ) φ_i'' dθ`; `K_0 = 0`.
    pub k: [Vec<f64>; 3],
    /// `J_ij = ∫ (ρ − 2πg) v_j φ_i dθ` with `v_0 = 1`.
    pub j: [[Vec<f64>; 3]; 3],
}

impl MomentDecomposition {
    pub fn build(f: &DensityField, field: &AbsorptionField) -> Result<Self> {
        f.check_grid(field.grid())?;
        let grid = f.grid();
        let (nt, sites) = (grid.n_theta(), grid.sites());
        let dth = grid.dtheta();
        let mean = f.mean();
        let phi = test_functions(grid);
        let v: [Vec<f64>; 3] = [
            vec![1.0; nt],
            (0..nt).map(|j| grid.theta_coord(j).cos()).collect(),
            (0..nt).map(|j| grid.theta_coord(j).sin()).collect(),
        ];
        let sigma = field.sigma();
        let mut density = vec![0.0; sites];
        let mut k: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; sites]);
        let mut jf: [[Vec<f64>; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; sites]));
        for s in 0..sites {
            let site = &f.values()[s * nt..(s + 1) * nt];
            let rho: f64 = site.iter().map(|x| (x - mean) * dth).sum();
            density[s] = rho;
            for i in 0..3 {
                let mut kk = 0.0;
                let mut jj = [0.0; 3];
                for (jn, &x) in site.iter().enumerate() {
                    let defect = rho - TAU * (x - mean);
                    // φ_i'' = −φ_i for i ≥ 1 and 0 for i = 0
                    if i > 0 {
                        kk += defect * phi[i][jn] * dth;
                    }
                    for (jv, acc) in jj.iter_mut().enumerate() {
                        *acc += defect * v[jv][jn] * phi[i][jn] * dth;
                    }
                }
                k[i][s] = sigma[s] * kk;
                for jv in 0..3 {
                    jf[i][jv][s] = jj[jv];
                }
            }
        }
        Ok(Self {
            grid,
            density,
            k,
            j: jf,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// L² norms over the torus of `∂_i ρ − K_i − Σ_j ∂_j J_ij`, given `∂_t g`.
    pub fn identity_residual(&self, dg_dt: &DensityField) -> Result<[f64; 3]> {
        dg_dt.check_grid(self.grid)?;
        let n = self.grid.n_x();
        let dx2 = self.grid.dx() * self.grid.dx();
        let rate = Self::build_time_parts(dg_dt);
        let grad_rho = spectral_gradient(&self.density, n);
        let mut out = [0.0; 3];
        for (i, slot) in out.iter_mut().enumerate() {
            let lhs: Vec<f64> = if i == 0 { rate.0.clone() } else { grad_rho[i - 1].clone() };
            let d1 = spectral_gradient(&self.j[i][1], n)[0].clone();
            let d2 = spectral_gradient(&self.j[i][2], n)[1].clone();
            let sum: f64 = (0..lhs.len())
                .map(|s| {
                    // ∂_t J_i0 = ∫ (∂_t ρ − 2π ∂_t g) φ_i
                    let dt_j = if i == 0 { 0.0 } else { rate.1[i - 1][s] };
                    let r = lhs[s] - self.k[i][s] - dt_j - d1[s] - d2[s];
                    r * r
                })
                .sum();
            *slot = (sum * dx2).sqrt();
        }
        Ok(out)
    }

    /// `(∂_t ρ, [∂_t J_10, ∂_t J_20])` from a time derivative of g.
    fn build_time_parts(dg: &DensityField) -> (Vec<f64>, [Vec<f64>; 2]) {
        let grid = dg.grid();
        let nt = grid.n_theta();
        let dth = grid.dtheta();
        let phi = test_functions(grid);
        let mut rho = Vec::with_capacity(grid.sites());
        let mut flux = [Vec::with_capacity(grid.sites()), Vec::with_capacity(grid.sites())];
        for site in dg.values().chunks(nt) {
            let r: f64 = site.iter().map(|x| x * dth).sum();
            rho.push(r);
            for (i, fl) in flux.iter_mut().enumerate() {
                fl.push(site.iter().zip(&phi[i + 1]).map(|(x, p)| (r - TAU * x) * p * dth).sum());
            }
        }
        (rho, flux)
    }

    /// `(Σ_i ‖K_i‖², Σ_ij ‖J_ij‖²)` in `L²` over the sites where `mask` holds.
    pub fn defect_norms_sq(&self, mask: &[bool]) -> (f64, f64) {
        let dx2 = self.grid.dx() * self.grid.dx();
        let on = |table: &Vec<f64>| -> f64 {
            table
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(v, _)| v * v)
                .sum::<f64>()
                * dx2
        };
        let k = self.k.iter().map(on).sum();
        let j = self.j.iter().flat_map(|row| row.iter()).map(on).sum();
        (k, j)
    }
}
