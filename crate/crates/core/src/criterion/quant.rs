use super::energy::{dissipation_integral, trapezoid};
use super::report::{InequalityRow, Status};
use crate::solver::RunReport;

pub const DEFAULT_DELTAS: [f64; 3] = [1.0, 0.1, 0.01];

/// Smallest `C_δ ≥ 0` with
/// `∫₀^{T*}∫_Σ⟨g⟩² ≤ C_δ ∫₀^{T*} D + δ ∫₀^{T*} ‖g‖²` on one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantMeasurement {
    pub delta: f64,
    pub density: f64,
    pub norm: f64,
    pub dissipated: f64,
    pub c_delta: f64,
}

impl QuantMeasurement {
    pub fn row(&self) -> InequalityRow {
        let name = format!("quant (delta={})", self.delta);
        let rhs = self.delta * self.norm;
        if self.density <= rhs {
            return InequalityRow::with_status(name, self.density, rhs, Status::Pass)
                .note("C_delta = 0 suffices");
        }
        if !(self.dissipated > 0.0) {
            return InequalityRow::with_status(name, self.density, rhs, Status::Vacuous)
                .note("no dissipation on the window");
        }
        InequalityRow::with_status(name, self.density, rhs + self.c_delta * self.dissipated, Status::Info)
            .note(format!("C_delta = {:.6e}", self.c_delta))
    }
}

pub fn verify_quant(run: &RunReport, t_star: f64, delta: f64) -> QuantMeasurement {
    let t0 = run.initial().t;
    let t1 = t0 + t_star;
    let density = trapezoid(run, t0, t1, |s| s.good_set_density_sq);
    let norm = trapezoid(run, t0, t1, |s| s.l2_sq);
    let dissipated = dissipation_integral(run, t0, t1);
    let excess = density - delta * norm;
    let c_delta = if excess <= 0.0 {
        0.0
    } else if dissipated > 0.0 {
        excess / dissipated
    } else {
        f64::INFINITY
    };
    QuantMeasurement {
        delta,
        density,
        norm,
        dissipated,
        c_delta,
    }
}
