//! Quantitative form of the decay argument: measured constants, inequality
//! residuals and the end-to-end decay certificate.

mod certificate;
pub mod checks;
mod claim;
mod energy;
mod following;
mod ledger;
pub mod moments;
mod quant;
mod report;

pub use certificate::{
    end_to_end_certificate, held_out_ratios, issue_certificate, worst_direction, BoundForm, CertificateConfig,
    DecayCertificate, EnsembleMember, HeldOutRun,
};
pub use claim::{claim_refinement_row, measure_claim, ClaimMeasurement};
pub use energy::{
    dissipation_integral, energy_ledger, l2_sq_at, measure_lambda, trapezoid, trapezoid_error, EnergyLedger,
};
pub use following::{verify_following, verify_following_at, verify_following_windows};
pub use ledger::{decay_from_lambda, following_constants, ConstantsLedger};
pub use moments::MomentDecomposition;
pub use report::{InequalityRow, Status};
pub use quant::{verify_quant, QuantMeasurement, DEFAULT_DELTAS};
pub use checks::{check_registry, format_rows, run_checks, CheckContext, InequalityCheck};
