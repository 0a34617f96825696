use super::energy::{dissipation_integral, l2_sq_at, trapezoid, trapezoid_error};
use super::ledger::ConstantsLedger;
use super::report::InequalityRow;
use crate::solver::RunReport;

/// `‖g_{t0}‖² ≤ C₁ ∫_{t0}^{t0+T*} D + C₂ ∫_{t0}^{t0+T*} ∫_Σ ⟨g⟩²` on one window.
pub fn verify_following_at(run: &RunReport, ledger: &ConstantsLedger, t0: f64) -> InequalityRow {
    let t1 = t0 + ledger.t_star;
    let lhs = l2_sq_at(run, t0);
    let diss = dissipation_integral(run, t0, t1);
    let density = trapezoid(run, t0, t1, |s| s.good_set_density_sq);
    let quad = trapezoid_error(run, t0, t1, |s| s.good_set_density_sq);
    let rhs = ledger.c1 * diss + ledger.c2 * density;
    let tol = 1e-8 * lhs + ledger.c2 * quad;
    InequalityRow::check("following", lhs, rhs, tol).note(format!("window [{t0:.3}, {t1:.3}]"))
}

pub fn verify_following(run: &RunReport, ledger: &ConstantsLedger) -> InequalityRow {
    verify_following_at(run, ledger, run.initial().t)
}

/// Checks every window `[t_k, t_k + T*]` starting at a recorded time.
pub fn verify_following_windows(run: &RunReport, ledger: &ConstantsLedger) -> Vec<InequalityRow> {
    let end = run.last().t;
    run.samples
        .iter()
        .map(|s| s.t)
        .filter(|&t| t + ledger.t_star <= end + 1e-9)
        .map(|t| verify_following_at(run, ledger, t))
        .collect()
}
