use super::energy::dissipation_integral;
use super::moments::{generator, MomentDecomposition};
use super::report::{InequalityRow, Status};
use crate::absorption::AbsorptionField;
use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::solver::{evolve, RunReport, SolverConfig};

/// Smallest `C₃` with `∫₀^{T*} (Σ‖K_i‖² + Σ‖J_ij‖²) ≤ C₃ ∫₀^{T*} D` on one run,
/// norms taken over the good set.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimMeasurement {
    pub t_star: f64,
    /// Time integral of `Σ‖K_i‖²`.
    pub k_part: f64,
    /// Time integral of `Σ‖J_ij‖²`.
    pub j_part: f64,
    pub dissipated: f64,
    pub c3: f64,
    /// Largest `‖∂_iρ − K_i − Σ_j ∂_j J_ij‖ / ‖g‖` over snapshots and `i`.
    pub identity_residual: f64,
    pub vacuous: bool,
}

impl ClaimMeasurement {
    pub fn row(&self) -> InequalityRow {
        let lhs = self.k_part + self.j_part;
        if self.vacuous {
            return InequalityRow::with_status("claim-am (C3)", lhs, 0.0, Status::Vacuous)
                .note("no dissipation on the window");
        }
        InequalityRow::with_status("claim-am (C3)", lhs, self.dissipated, Status::Info)
            .note(format!("C3 = {:.6e}, identity residual {:.2e}", self.c3, self.identity_residual))
    }
}

/// Runs `f0` over `[0, t_star]` (the config's `t_end` is replaced) and
/// accumulates the moment defects at every recorded time.
pub fn measure_claim(
    f0: &DensityField,
    field: &AbsorptionField,
    config: &SolverConfig,
    t_star: f64,
) -> Result<(ClaimMeasurement, RunReport)> {
    let config = SolverConfig { t_end: t_star, ..*config };
    let mask = field.good_set().to_vec();
    let mut series: Vec<(f64, f64, f64)> = Vec::new();
    let mut residual: f64 = 0.0;
    let mut failure: Option<Error> = None;
    let (run, _) = evolve(f0, field, &config, |f, s| {
        let step = MomentDecomposition::build(f, field).and_then(|d| {
            let dg = generator(f, field)?;
            let r = d.identity_residual(&dg)?;
            Ok((d.defect_norms_sq(&mask), r))
        });
        match step {
            Ok(((k, j), r)) => {
                series.push((s.t, k, j));
                let norm = s.l2_sq.sqrt();
                if norm > 0.0 {
                    residual = residual.max(r.iter().cloned().fold(0.0, f64::max) / norm);
                }
            }
            Err(e) => failure = failure.take().or(Some(e)),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let integrate = |pick: fn(&(f64, f64, f64)) -> f64| -> f64 {
        series
            .windows(2)
            .map(|w| 0.5 * (pick(&w[0]) + pick(&w[1])) * (w[1].0 - w[0].0))
            .sum()
    };
    let k_part = integrate(|e| e.1);
    let j_part = integrate(|e| e.2);
    let dissipated = dissipation_integral(&run, 0.0, t_star);
    let vacuous = !(dissipated >= 1e-14 * run.initial().l2_sq) || run.initial().l2_sq == 0.0;
    let c3 = if vacuous { f64::INFINITY } else { (k_part + j_part) / dissipated };
    Ok((
        ClaimMeasurement {
            t_star,
            k_part,
            j_part,
            dissipated,
            c3,
            identity_residual: residual,
            vacuous,
        },
        run,
    ))
}

/// Relative change of `C₃` between two resolutions, `|fine/coarse − 1| ≤ tol`.
pub fn claim_refinement_row(coarse: &ClaimMeasurement, fine: &ClaimMeasurement, tol: f64) -> InequalityRow {
    let change = (fine.c3 / coarse.c3 - 1.0).abs();
    InequalityRow::check("claim-am refinement", change, tol, 0.0)
        .note(format!("C3 coarse {:.6e}, fine {:.6e}", coarse.c3, fine.c3))
}
