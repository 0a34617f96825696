//! Named inequality checks selectable from a run configuration.

use super::claim::measure_claim;
use super::energy::{dissipation_integral, energy_ledger, measure_lambda};
use super::following::verify_following_windows;
use super::ledger::ConstantsLedger;
use super::quant::{verify_quant, DEFAULT_DELTAS};
use super::report::{InequalityRow, Status};
use crate::absorption::AbsorptionField;
use crate::diagnostics::{micro_coercivity_defect, weighted_micro_coercivity, MicroPair};
use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::registry::{Named, Registry};
use crate::solver::{RunReport, SolverConfig};

/// Everything a check may look at. `ledger` is `None` when χ could not be
/// normalized (no uniform control), which makes `following` inapplicable.
#[derive(Debug, Clone, Copy)]
pub struct CheckContext<'a> {
    pub run: &'a RunReport,
    pub field: &'a AbsorptionField,
    pub ledger: Option<&'a ConstantsLedger>,
    pub t_star: f64,
    pub initial: &'a DensityField,
    pub last: &'a DensityField,
    pub solver: &'a SolverConfig,
    pub deltas: &'a [f64],
}

pub trait InequalityCheck: Named + Send + Sync {
    fn description(&self) -> &'static str;
    fn evaluate(&self, ctx: &CheckContext<'_>) -> Result<Vec<InequalityRow>>;
}

fn covers_window(ctx: &CheckContext<'_>) -> bool {
    ctx.run.last().t >= ctx.run.initial().t + ctx.t_star - 1e-9
}

pub struct Mass;

impl Named for Mass {
    fn name(&self) -> &'static str {
        "mass"
    }
}

impl InequalityCheck for Mass {
    fn description(&self) -> &'static str {
        "relative mass drift over the run is at most 1e-12"
    }

    fn evaluate(&self, ctx: &CheckContext<'_>) -> Result<Vec<InequalityRow>> {
        let run = ctx.run;
        let m0 = run.initial().mass;
        let volume = ctx.field.grid().phase_volume();
        let scale = m0.abs().max((volume * run.initial().l2_sq).sqrt()).max(f64::MIN_POSITIVE);
        let drift = run
            .samples
            .iter()
            .map(|s| (s.mass - m0).abs())
            .fold(0.0, f64::max)
            / scale;
        Ok(vec![InequalityRow::check("mass conservation", drift, 1e-12, 0.0).mandatory()])
    }
}

pub struct Monotone;

impl Named for Monotone {
    fn name(&self) -> &'static str {
        "monotone"
    }
}

impl InequalityCheck for Monotone {
    fn description(&self) -> &'static str {
        "‖g_t‖² is nonincreasing between consecutive samples"
    }

    fn evaluate(&self, ctx: &CheckContext<'_>) -> Result<Vec<InequalityRow>> {
        let s = &ctx.run.samples;
        let tol = 1e-13 * s[0].l2_sq;
        let worst = s
            .windows(2)
            .map(|w| w[1].l2_sq - w[0].l2_sq)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        Ok(vec![InequalityRow::check("norm nonincreasing", worst, 0.0, tol)
            .mandatory()
            .note("largest increase between samples")])
    }
}

pub struct Energy;

impl Named for Energy {
    fn name(&self) -> &'static str {
        "energy-ledger"
    }
}

impl InequalityCheck for Energy {
    fn description(&self) -> &'static str {
        "‖g_0‖² − ‖g_T‖² equals the integrated dissipation to 1e-6 relative"
    }

    fn evaluate(&self, ctx: &CheckContext<'_>) -> Result<Vec<InequalityRow>> {
        let e = energy_ledger(ctx.run);
        Ok(vec![InequalityRow::check("energy ledger", e.relative_error, 1e-6, 0.0)
            .mandatory()
            .note(format!(
                "drop {:.6e}, dissipated {:.6e}, D/functional {:.4}",
                e.drop, e.dissipated, e.dissipation_factor
            ))])
    }
}

pub struct Sufficient;

impl Named for Sufficient {
    fn name(&self) -> &'static str {
        "sufficient"
    }
}

impl InequalityCheck for Sufficient {
    fn description(&self) -> &'static str {
        "integral criterion ‖g_0‖² ≤ λ ∫₀^{T*} D; reports the measured λ"
    }

    fn evaluate(&self, ctx: &CheckContext<'_>) -> Result<Vec<InequalityRow>> {
        let name = "sufficient (lambda_emp)";
        let lhs = ctx.run.initial().l2_sq;
        if !covers_window(ctx) {
            return Ok(vec![InequalityRow::with_status(name, lhs, 0.0, Status::NotApplicable)
                .note("run shorter than T*")]);
        }
        let t0 = ctx.run.initial().t;
        let dissipated = dissipation_integral(ctx.run, t0, t0 + ctx.t_star);
        let row = match measure_lambda(ctx.run, ctx.t_star) {
            Ok(lambda) => InequalityRow::with_status(name, lhs, lambda * dissipated, Status::Info)
                .note(format!("lambda_emp = {lambda:.10e}")),
            Err(Error::VacuousCriterion { .. }) => {
                InequalityRow::with_status(name, lhs, dissipated, Status::Vacuous)
                    .note("no dissipation: criterion vacuous, no decay certificate")
            }
            Err(e) => return Err(e),
        };
        Ok(vec![row])
    }
}

pub struct Following;

impl Named for Following {
    fn name(&self) -> &'static str {
        "following"
    }
}

impl InequalityCheck for Following {
    fn description(&self) -> &'static str {
        "‖g_{t0}‖² ≤ C₁∫D + C₂∫∫_Σ⟨g⟩² on every window [t0, t0 + T*] of the run"
    }

    fn evaluate(&self, ctx: &CheckContext<'_>) -> Result<Vec<InequalityRow>> {
        let lhs = ctx.run.initial().l2_sq;
        let Some(ledger) = ctx.ledger else {
            return Ok(vec![InequalityRow::with_status("following", lhs, 0.0, Status::NotApplicable)
                .note("chi cannot be normalized without uniform control")]);
        };
        if !covers_window(ctx) {
            return Ok(vec![InequalityRow::with_status("following", lhs, 0.0, Status::NotApplicable)
                .note("run shorter than T*")]);
        }
        let rows = verify_following_windows(ctx.run, ledger);
        let first = rows[0].clone();
        let failed = rows.iter().filter(|r| !r.passed()).count();
        let tightest = rows
            .iter()
            .min_by(|a, b| a.ratio().total_cmp(&b.ratio()))
            .cloned()
            .unwrap_or_else(|| first.clone());
        let mut summary = InequalityRow::with_status(
            "following (all windows)",
            tightest.lhs,
            tightest.rhs,
            if failed == 0 { Status::Pass } else { Status::Fail },
        )
        .note(format!("{} windows, {failed} failed, tightest {}", rows.len(), tightest.note));
        summary.tolerance = tightest.tolerance;
        Ok(vec![first, summary])
    }
}

pub struct Quant;

impl Named for Quant {
    fn name(&self) -> &'static str {
        "quant"
    }
}

impl InequalityCheck for Quant {
    fn description(&self) -> &'static str {
        "smallest C_δ with ∫∫_Σ⟨g⟩² ≤ C_δ∫D + δ∫‖g‖² for each configured δ"
    }

    fn evaluate(&self, ctx: &CheckContext<'_>) -> Result<Vec<InequalityRow>> {
        if !covers_window(ctx) {
            return Ok(vec![InequalityRow::with_status("quant", 0.0, 0.0, Status::NotApplicable)
                .note("run shorter than T*")]);
        }
        let deltas = if ctx.deltas.is_empty() { &DEFAULT_DELTAS[..] } else { ctx.deltas };
        Ok(deltas.iter().map(|&d| verify_quant(ctx.run, ctx.t_star, d).row()).collect())
    }
}

pub struct Claim;

impl Named for Claim {
    fn name(&self) -> &'static str {
        "claim-am"
    }
}

impl InequalityCheck for Claim {
    fn description(&self) -> &'static str {
        "moment identity and the smallest C₃ for Σ‖K_i‖² + Σ‖J_ij‖² ≤ C₃∫D over [0, T*]"
    }

    fn evaluate(&self, ctx: &CheckContext<'_>) -> Result<Vec<InequalityRow>> {
        let config = SolverConfig {
            record_every: 1,
            ..*ctx.solver
        };
        let (m, _) = measure_claim(ctx.initial, ctx.field, &config, ctx.t_star)?;
        let identity = InequalityRow::check("claim-dec identity", m.identity_residual, 1e-8, 0.0)
            .note("max relative residual over snapshots");
        Ok(vec![identity, m.row()])
    }
}

pub struct Micro;

impl Named for Micro {
    fn name(&self) -> &'static str {
        "micro"
    }
}

fn micro_row(name: &str, pairs: &[MicroPair]) -> InequalityRow {
    let scale = pairs.iter().map(|p| p.lhs.abs().max(p.rhs.abs())).fold(0.0, f64::max);
    let worst = pairs
        .iter()
        .max_by(|a, b| (a.lhs - a.rhs).total_cmp(&(b.lhs - b.rhs)));
    match worst {
        Some(p) => InequalityRow::check(name, p.lhs, p.rhs, 1e-12 * scale.max(f64::MIN_POSITIVE))
            .note(format!("{} sites, tightest at {:?}", pairs.len(), p.site)),
        None => InequalityRow::with_status(name, 0.0, 0.0, Status::NotApplicable).note("empty good set"),
    }
}

impl InequalityCheck for Micro {
    fn description(&self) -> &'static str {
        "Poincaré inequality on S¹ at every site, unweighted and σ-weighted on the good set"
    }

    fn evaluate(&self, ctx: &CheckContext<'_>) -> Result<Vec<InequalityRow>> {
        let mut rows = Vec::new();
        for (label, f) in [("initial", ctx.initial), ("final", ctx.last)] {
            rows.push(micro_row(&format!("micro ({label})"), &micro_coercivity_defect(f)));
            rows.push(micro_row(
                &format!("micro weighted ({label})"),
                &weighted_micro_coercivity(f, ctx.field),
            ));
        }
        Ok(rows)
    }
}

pub fn check_registry() -> Registry<dyn InequalityCheck> {
    let mut r: Registry<dyn InequalityCheck> = Registry::new("inequality check");
    r.register(Box::new(Mass))
        .register(Box::new(Monotone))
        .register(Box::new(Energy))
        .register(Box::new(Sufficient))
        .register(Box::new(Following))
        .register(Box::new(Quant))
        .register(Box::new(Claim))
        .register(Box::new(Micro));
    r
}

/// Evaluates the named checks in order; an unknown name is an error.
pub fn run_checks(names: &[String], ctx: &CheckContext<'_>) -> Result<Vec<InequalityRow>> {
    let registry = check_registry();
    let mut rows = Vec::new();
    for name in names {
        rows.extend(registry.get(name)?.evaluate(ctx)?);
    }
    Ok(rows)
}

/// Aligned plain-text table.
pub fn format_rows(rows: &[InequalityRow]) -> String {
    let mut out = InequalityRow::header();
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}
