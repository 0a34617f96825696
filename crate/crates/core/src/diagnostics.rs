//! Rectangle-rule functionals of the state and exponential decay fitting.
//!
//! Apart from [`mass`], the sample quantities are evaluated on the deviation
//! `g = f − c` from the conserved constant state.

use std::f64::consts::TAU;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::absorption::AbsorptionField;
use crate::error::{Error, Result};
use crate::fft::PlanPair;
use crate::field::DensityField;
use crate::grid::GridSpec;

/// Floor below which norms are treated as roundoff in [`fit_decay`].
pub const NORM_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsSample {
    pub t: f64,
    pub mass: f64,
    /// `‖g_t‖²`.
    pub l2_sq: f64,
    /// `D = −d/dt ‖g‖²`; see [`crate::solver::RunReport`] for the convention.
    pub dissipation: f64,
    /// `∫σ|∂_θ g|²` at this instant.
    pub dissipation_functional: f64,
    /// `∫σ|g − ⟨g⟩M|²`.
    pub sigma_defect: f64,
    /// `∫_Σ ⟨g⟩² dx` at this instant.
    pub good_set_density_sq: f64,
}

pub fn mass(f: &DensityField) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

pub fn l2_norm_sq(f: &DensityField) -> f64 {
    f.values().iter().map(|v| v * v).sum::<f64>() * f.grid().cell_volume()
}

/// `‖f − c‖²` for the constant `c` carrying the mass of `f`.
pub fn deviation_l2_sq(f: &DensityField) -> f64 {
    let c = f.mean();
    f.values().iter().map(|v| (v - c) * (v - c)).sum::<f64>() * f.grid().cell_volume()
}

/// `⟨f⟩(x) = ∫ f(x, θ) dθ` on the `n_x × n_x` grid.
pub fn velocity_average(f: &DensityField) -> Vec<f64> {
    let g = f.grid();
    f.values()
        .chunks(g.n_theta())
        .map(|site| site.iter().sum::<f64>() * g.dtheta())
        .collect()
}

/// Replaces `f` by its local equilibrium `⟨f⟩M`.
pub fn local_equilibrium(f: &DensityField) -> DensityField {
    let g = f.grid();
    let m = g.local_equilibrium();
    let avg = velocity_average(f);
    let mut values = Vec::with_capacity(g.len());
    for a in avg {
        values.extend(std::iter::repeat_n(a * m, g.n_theta()));
    }
    DensityField::from_values(g, values).expect("same grid")
}

/// Per-site `(∫|f − ⟨f⟩M|² dθ, ∫|∂_θ f|² dθ)`, the latter spectral with the
/// full symbol `m²`.
fn site_pairs(f: &DensityField) -> Vec<(f64, f64)> {
    let g = f.grid();
    let nt = g.n_theta();
    let plan = PlanPair::new(&mut FftPlanner::new(), nt);
    f.values()
        .par_chunks(nt)
        .map(|site| {
            let mut buf: Vec<Complex64> = site.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            plan.forward(&mut buf);
            let mut defect = 0.0;
            let mut grad = 0.0;
            for (m, c) in buf.iter().enumerate().skip(1) {
                let w = GridSpec::wavenumber(m, nt) as f64;
                defect += c.norm_sqr();
                grad += w * w * c.norm_sqr();
            }
            (TAU * defect, TAU * grad)
        })
        .collect()
}

/// `∫σ|∂_θ f|² dx dθ`.
pub fn dissipation(f: &DensityField, field: &AbsorptionField) -> f64 {
    let dx2 = f.grid().dx() * f.grid().dx();
    site_pairs(f)
        .iter()
        .zip(field.sigma())
        .map(|((_, grad), s)| s * grad)
        .sum::<f64>()
        * dx2
}

/// `∫σ|f − ⟨f⟩M|² dx dθ`.
pub fn sigma_defect(f: &DensityField, field: &AbsorptionField) -> f64 {
    let dx2 = f.grid().dx() * f.grid().dx();
    site_pairs(f)
        .iter()
        .zip(field.sigma())
        .map(|((d, _), s)| s * d)
        .sum::<f64>()
        * dx2
}

/// `∫_Σ ⟨f − c⟩² dx` over the good set of `field`.
pub fn good_set_density_sq(f: &DensityField, field: &AbsorptionField) -> f64 {
    let g = f.grid();
    let shift = TAU * f.mean();
    velocity_average(f)
        .iter()
        .zip(field.good_set())
        .filter(|(_, &good)| good)
        .map(|(a, _)| (a - shift) * (a - shift))
        .sum::<f64>()
        * g.dx()
        * g.dx()
}

/// Assembles a sample; `dissipation_rate` is supplied by the caller.
pub fn sample(f: &DensityField, field: &AbsorptionField, t: f64, dissipation_rate: f64) -> DiagnosticsSample {
    let dx2 = f.grid().dx() * f.grid().dx();
    let pairs = site_pairs(f);
    let (mut diss, mut defect) = (0.0, 0.0);
    for ((d, grad), s) in pairs.iter().zip(field.sigma()) {
        diss += s * grad;
        defect += s * d;
    }
    DiagnosticsSample {
        t,
        mass: mass(f),
        l2_sq: deviation_l2_sq(f),
        dissipation: dissipation_rate,
        dissipation_functional: diss * dx2,
        sigma_defect: defect * dx2,
        good_set_density_sq: good_set_density_sq(f, field),
    }
}

/// One site of the micro-coercivity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroPair {
    pub site: (usize, usize),
    pub lhs: f64,
    pub rhs: f64,
}

/// Per-site Poincaré pairs `(∫|g − ⟨g⟩M|², C_P ∫|∂_θ g|²)` with `C_P = 1`, at
/// every site.
pub fn micro_coercivity_defect(f: &DensityField) -> Vec<MicroPair> {
    let n = f.grid().n_x();
    site_pairs(f)
        .into_iter()
        .enumerate()
        .map(|(s, (lhs, rhs))| MicroPair {
            site: (s / n, s % n),
            lhs,
            rhs,
        })
        .collect()
}

/// σ-weighted pairs `(∫|g − ⟨g⟩M|², (C_P/σ_min) ∫σ|∂_θ g|²)` on the good set.
pub fn weighted_micro_coercivity(f: &DensityField, field: &AbsorptionField) -> Vec<MicroPair> {
    let n = f.grid().n_x();
    let smin = field.sigma_min_good();
    site_pairs(f)
        .into_iter()
        .enumerate()
        .filter(|(s, _)| field.good_set()[*s])
        .map(|(s, (lhs, grad))| MicroPair {
            site: (s / n, s % n),
            lhs,
            rhs: field.sigma()[s] * grad / smin,
        })
        .collect()
}

/// Least-squares fit `log ‖g_t‖ ≈ log c − λ t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub lambda_emp: f64,
    pub c_emp: f64,
    pub fit_window: (f64, f64),
    /// RMS of the log-linear residuals.
    pub residual: f64,
    pub samples: usize,
}

impl DecayFit {
    pub fn bound(&self, t: f64) -> f64 {
        self.c_emp * (-self.lambda_emp * t).exp()
    }
}

/// Fits over the series after dropping the first 20% of its time span.
pub fn fit_decay(series: &[(f64, f64)]) -> Result<DecayFit> {
    let (Some(first), Some(last)) = (series.first(), series.last()) else {
        return Err(Error::Fit("empty series".into()));
    };
    let lo = first.0 + 0.2 * (last.0 - first.0);
    fit_decay_window(series, lo, last.0)
}

/// Fits over the samples with `t_lo ≤ t ≤ t_hi`.
pub fn fit_decay_window(series: &[(f64, f64)], t_lo: f64, t_hi: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t_lo - 1e-12 && t <= t_hi + 1e-12)
        .collect();
    if pts.len() < 10 {
        return Err(Error::Fit(format!("{} samples in window, need at least 10", pts.len())));
    }
    if let Some(&(t, v)) = pts.iter().find(|&&(_, v)| !(v > NORM_FLOOR)) {
        return Err(Error::Fit(format!("norm {v:.3e} at t = {t} is at the roundoff floor")));
    }
    let k = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let ym = pts.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, v) in &pts {
        sxy += (t - tm) * (v.ln() - ym);
        sxx += (t - tm) * (t - tm);
    }
    if sxx == 0.0 {
        return Err(Error::Fit("window has zero time extent".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let rss: f64 = pts
        .iter()
        .map(|&(t, v)| {
            let r = v.ln() - (intercept + slope * t);
            r * r
        })
        .sum();
    Ok(DecayFit {
        lambda_emp: -slope,
        c_emp: intercept.exp(),
        fit_window: (pts[0].0, pts[pts.len() - 1].0),
        residual: (rss / k).sqrt(),
        samples: pts.len(),
    })
}
