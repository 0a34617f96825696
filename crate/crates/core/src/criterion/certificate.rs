use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::energy::measure_lambda;
use super::ledger::decay_from_lambda;
use crate::absorption::AbsorptionField;
use crate::characteristics::GccCertificate;
use crate::diagnostics::deviation_l2_sq;
use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::initial::{bump, random_band_limited};
use crate::solver::{evolve, Direction, Propagator, RunReport, SolverConfig};

/// Which reading of the decay bound the held-out runs are checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundForm {
    /// `‖g_t‖ ≤ C e^{−Λt} ‖g_0‖`.
    #[default]
    Norm,
    /// `‖g_t‖² ≤ C² e^{−Λt} ‖g_0‖²`.
    Squared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateConfig {
    pub t_star: f64,
    pub solver: SolverConfig,
    /// Random band-limited members of the ensemble.
    pub ensemble_size: usize,
    pub held_out: usize,
    pub seed: u64,
    pub max_wavenumber: i64,
    pub max_angular_mode: i64,
    /// Width of the bump aimed along the minimizing ray.
    pub bump_width: f64,
    /// Power iterations on `S*S` (0 disables the member).
    pub power_iterations: usize,
    /// Length of the held-out runs.
    pub held_out_horizon: f64,
    pub form: BoundForm,
}

impl CertificateConfig {
    pub fn new(t_star: f64, solver: SolverConfig) -> Self {
        Self {
            t_star,
            solver,
            ensemble_size: 16,
            held_out: 8,
            seed: 0,
            max_wavenumber: 3,
            max_angular_mode: 3,
            bump_width: 0.1,
            power_iterations: 12,
            held_out_horizon: 5.0 * t_star,
            form: BoundForm::Norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub label: String,
    pub lambda: f64,
}

/// Worst ratios of a held-out run against both readings of the bound;
/// values ≤ 1 mean the bound holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeldOutRun {
    pub seed: u64,
    pub norm_ratio: f64,
    pub norm_ratio_t: f64,
    pub squared_ratio: f64,
    pub squared_ratio_t: f64,
}

impl HeldOutRun {
    pub fn ratio(&self, form: BoundForm) -> (f64, f64) {
        match form {
            BoundForm::Norm => (self.norm_ratio, self.norm_ratio_t),
            BoundForm::Squared => (self.squared_ratio, self.squared_ratio_t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayCertificate {
    pub t_star: f64,
    pub lambda_ens: f64,
    pub big_c: f64,
    pub big_lambda: f64,
    pub members: Vec<EnsembleMember>,
    pub held_out: Vec<HeldOutRun>,
    pub form: BoundForm,
}

impl DecayCertificate {
    /// Largest held-out ratio for a reading of the bound and the run that attains it.
    pub fn worst(&self, form: BoundForm) -> Option<(u64, f64, f64)> {
        self.held_out
            .iter()
            .map(|h| {
                let (r, t) = h.ratio(form);
                (h.seed, t, r)
            })
            .max_by(|a, b| a.2.total_cmp(&b.2))
    }

    /// `1 − worst ratio`; positive when every held-out run satisfies the bound.
    pub fn margin(&self, form: BoundForm) -> f64 {
        self.worst(form).map_or(f64::INFINITY, |(_, _, r)| 1.0 - r)
    }

    pub fn holds(&self, form: BoundForm) -> bool {
        self.margin(form) >= -1e-12
    }
}

impl fmt::Display for DecayCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "t_star        {:.6e}", self.t_star)?;
        writeln!(f, "ensemble      {} members", self.members.len())?;
        for m in &self.members {
            writeln!(f, "  {:<24} lambda_emp {:.10e}", m.label, m.lambda)?;
        }
        writeln!(f, "lambda_ens    {:.10e}", self.lambda_ens)?;
        writeln!(f, "C             {:.10e}", self.big_c)?;
        writeln!(f, "Lambda        {:.10e}", self.big_lambda)?;
        writeln!(f, "held_out      {} runs", self.held_out.len())?;
        for h in &self.held_out {
            writeln!(
                f,
                "  seed {:<8} norm ratio {:.6e} at t={:.3}, squared ratio {:.6e} at t={:.3}",
                h.seed, h.norm_ratio, h.norm_ratio_t, h.squared_ratio, h.squared_ratio_t
            )?;
        }
        for (form, label) in [(BoundForm::Norm, "norm"), (BoundForm::Squared, "squared")] {
            let verdict = if self.holds(form) { "holds" } else { "VIOLATED" };
            writeln!(f, "margin_{label:<7} {:.6e} ({verdict})", self.margin(form))?;
        }
        Ok(())
    }
}

/// Largest `‖S_T g‖² / ‖g‖²` by power iteration on `S_T* S_T`, restricted to
/// the complement of the scheme's invariants; returns the last iterate (unit norm).
pub fn worst_direction(
    field: &AbsorptionField,
    solver: &SolverConfig,
    t_star: f64,
    start: DensityField,
    iterations: usize,
) -> Result<(DensityField, f64)> {
    let config = SolverConfig { t_end: t_star, ..*solver };
    config.validate()?;
    let steps = config.steps();
    let reversed: Vec<f64> = steps.iter().rev().copied().collect();
    let mut prop = Propagator::new(field);
    let normalize = |g: DensityField| -> Result<DensityField> {
        let g = g.without_invariants();
        let n = deviation_l2_sq(&g).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::DegenerateMember { index: 0 });
        }
        Ok(g.scaled(1.0 / n))
    };
    let mut g = normalize(start)?;
    let mut ratio = 0.0;
    for _ in 0..iterations {
        let mut h = g.clone();
        prop.advance(&mut h, &steps, Direction::Forward);
        ratio = deviation_l2_sq(&h);
        prop.advance(&mut h, &reversed, Direction::Backward);
        g = normalize(h)?;
    }
    Ok((g, ratio))
}

fn member_lambda(f0: &DensityField, field: &AbsorptionField, solver: &SolverConfig, t_star: f64) -> Result<f64> {
    let config = SolverConfig { t_end: t_star, ..*solver };
    let (run, _) = evolve(f0, field, &config, |_, _| {})?;
    measure_lambda(&run, t_star)
}

/// Worst ratios of one run against `C e^{−Λt}` bounds.
pub fn held_out_ratios(run: &RunReport, seed: u64, big_c: f64, big_lambda: f64) -> HeldOutRun {
    let g0 = run.initial().l2_sq;
    let mut out = HeldOutRun {
        seed,
        norm_ratio: f64::NEG_INFINITY,
        norm_ratio_t: 0.0,
        squared_ratio: f64::NEG_INFINITY,
        squared_ratio_t: 0.0,
    };
    for s in &run.samples {
        let decay = (-big_lambda * s.t).exp();
        let norm = (s.l2_sq / g0).sqrt() / (big_c * decay);
        let sq = s.l2_sq / g0 / (big_c * big_c * decay);
        if norm > out.norm_ratio {
            out.norm_ratio = norm;
            out.norm_ratio_t = s.t;
        }
        if sq > out.squared_ratio {
            out.squared_ratio = sq;
            out.squared_ratio_t = s.t;
        }
    }
    out
}

/// Builds `(C, Λ)` from an ensemble and checks it on held-out runs, without
/// failing on violations.
pub fn issue_certificate(
    field: &AbsorptionField,
    gcc: &GccCertificate,
    config: &CertificateConfig,
) -> Result<DecayCertificate> {
    if !gcc.is_uniform() {
        return Err(Error::NotCertified { c_min: gcc.c_min });
    }
    let grid = field.grid();
    let random = |seed: u64| {
        random_band_limited(grid, config.max_wavenumber, config.max_angular_mode, seed, 1.0)
    };
    let mut inputs: Vec<(String, DensityField)> = Vec::new();
    for k in 0..config.ensemble_size {
        let seed = config.seed.wrapping_add(k as u64);
        inputs.push((format!("random seed {seed}"), random(seed)?));
    }
    inputs.push(("worst-ray bump".into(), bump(grid, gcc.worst_point, config.bump_width, 1.0)?));
    let mut members: Vec<EnsembleMember> = inputs
        .par_iter()
        .map(|(label, f0)| {
            Ok(EnsembleMember {
                label: label.clone(),
                lambda: member_lambda(f0, field, &config.solver, config.t_star)?,
            })
        })
        .collect::<Result<_>>()?;
    if config.power_iterations > 0 {
        let start = random(config.seed.wrapping_add(u64::MAX / 2))?;
        let (g, _) = worst_direction(field, &config.solver, config.t_star, start, config.power_iterations)?;
        members.push(EnsembleMember {
            label: format!("power iteration x{}", config.power_iterations),
            lambda: member_lambda(&g, field, &config.solver, config.t_star)?,
        });
    }
    let lambda_ens = members.iter().map(|m| m.lambda).fold(f64::NEG_INFINITY, f64::max);
    let (big_c, big_lambda) = decay_from_lambda(lambda_ens, config.t_star)?;
    let held_config = SolverConfig {
        t_end: config.held_out_horizon,
        ..config.solver
    };
    // fresh seeds disjoint from the ensemble
    let held_out = (0..config.held_out as u64)
        .into_par_iter()
        .map(|k| {
            let seed = config.seed.wrapping_add(1_000_003 + k);
            let (run, _) = evolve(&random(seed)?, field, &held_config, |_, _| {})?;
            Ok(held_out_ratios(&run, seed, big_c, big_lambda))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayCertificate {
        t_star: config.t_star,
        lambda_ens,
        big_c,
        big_lambda,
        members,
        held_out,
        form: config.form,
    })
}

/// As [`issue_certificate`], failing when a held-out run violates the bound
/// in the configured form.
pub fn end_to_end_certificate(
    field: &AbsorptionField,
    gcc: &GccCertificate,
    config: &CertificateConfig,
) -> Result<DecayCertificate> {
    let cert = issue_certificate(field, gcc, config)?;
    match cert.worst(config.form) {
        Some((seed, t, ratio)) if ratio > 1.0 + 1e-12 => Err(Error::HeldOutViolation { seed, t, ratio }),
        _ => Ok(cert),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, PhasePoint};

    fn gcc(c_min: f64) -> GccCertificate {
        GccCertificate {
            t_star: 1.0,
            c_min,
            worst_point: PhasePoint::new([0.5, 0.5], 0.0),
            positions: 1,
            angles: 1,
            quadrature_step: 0.1,
            threshold: 1e-9,
            trapped_fraction: 0.0,
        }
    }

    fn small() -> (AbsorptionField, CertificateConfig) {
        let g = GridSpec::new(8, 8).unwrap();
        let field = AbsorptionField::from_raw(g, vec![1.0; g.sites()]).unwrap();
        let mut c = CertificateConfig::new(1.0, SolverConfig::new(0.05, 1.0, 1));
        c.ensemble_size = 4;
        c.held_out = 3;
        c.max_wavenumber = 2;
        c.max_angular_mode = 2;
        c.power_iterations = 6;
        (field, c)
    }

    #[test]
    fn refuses_without_control() {
        let (field, c) = small();
        assert!(matches!(
            issue_certificate(&field, &gcc(0.0), &c),
            Err(Error::NotCertified { .. })
        ));
    }

    #[test]
    fn uniform_absorption_is_certified() {
        let (field, c) = small();
        let cert = issue_certificate(&field, &gcc(1.0), &c).unwrap();
        assert_eq!(cert.members.len(), 6);
        assert!(cert.big_c >= 1.0 && cert.big_lambda > 0.0);
        assert!(cert.holds(BoundForm::Squared), "{cert}");
        // the power member dominates the random ones
        let power = cert.members.last().unwrap().lambda;
        assert!(cert.members.iter().all(|m| m.lambda <= power + 1e-9), "{cert}");
    }

    #[test]
    fn power_iteration_matches_semigroup_ratio() {
        let (field, c) = small();
        let start = random_band_limited(field.grid(), 2, 2, 9, 1.0).unwrap();
        let (g, ratio) = worst_direction(&field, &c.solver, 1.0, start, 10).unwrap();
        let run = evolve(&g, &field, &SolverConfig { t_end: 1.0, ..c.solver }, |_, _| {})
            .unwrap()
            .0;
        let r = run.last().l2_sq / run.initial().l2_sq;
        assert!(r >= ratio * (1.0 - 1e-6), "{r} {ratio}");
        let lambda = measure_lambda(&run, 1.0).unwrap();
        assert!((lambda - 1.0 / (1.0 - r)).abs() < 1e-8 * lambda);
    }

    #[test]
    fn squared_bound_holds_at_multiples_of_t() {
        // semigroup: ‖g_{kT}‖² ≤ r^k ‖g_0‖² = C² e^{−ΛkT} ‖g_0‖² with r = 1/C²
        let (field, c) = small();
        let cert = issue_certificate(&field, &gcc(1.0), &c).unwrap();
        let r = 1.0 / (cert.big_c * cert.big_c);
        assert!(((-cert.big_lambda * c.t_star).exp() - r).abs() < 1e-12_f64);
    }
}
