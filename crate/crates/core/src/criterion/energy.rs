use crate::diagnostics::DiagnosticsSample;
use crate::error::{Error, Result};
use crate::solver::RunReport;

/// `∫_{t0}^{t1} D dt` from a recorded series, where `samples[k].dissipation`
/// is the mean rate over `(t_{k−1}, t_k]`.
pub fn dissipation_integral(run: &RunReport, t0: f64, t1: f64) -> f64 {
    run.samples
        .windows(2)
        .map(|w| {
            let lo = w[0].t.max(t0);
            let hi = w[1].t.min(t1);
            if hi > lo {
                w[1].dissipation * (hi - lo)
            } else {
                0.0
            }
        })
        .sum()
}

/// Trapezoid rule for a sampled quantity on `[t0, t1]`, interpolating
/// linearly at window ends that fall between samples.
pub fn trapezoid(run: &RunReport, t0: f64, t1: f64, q: impl Fn(&DiagnosticsSample) -> f64) -> f64 {
    let mut total = 0.0;
    for w in run.samples.windows(2) {
        let (ta, tb) = (w[0].t, w[1].t);
        let lo = ta.max(t0);
        let hi = tb.min(t1);
        if hi <= lo {
            continue;
        }
        let (qa, qb) = (q(&w[0]), q(&w[1]));
        let at = |t: f64| qa + (qb - qa) * (t - ta) / (tb - ta);
        total += 0.5 * (at(lo) + at(hi)) * (hi - lo);
    }
    total
}

/// Trapezoid-rule error estimate from halving the sampling: `|T_Δ − T_2Δ| / 3`.
pub fn trapezoid_error(run: &RunReport, t0: f64, t1: f64, q: impl Fn(&DiagnosticsSample) -> f64 + Copy) -> f64 {
    let fine = trapezoid(run, t0, t1, q);
    let coarse_samples: Vec<DiagnosticsSample> = run
        .samples
        .iter()
        .enumerate()
        .filter(|(k, s)| k % 2 == 0 || s.t >= run.last().t)
        .map(|(_, s)| *s)
        .collect();
    let coarse = RunReport {
        samples: coarse_samples,
        ..run.clone()
    };
    (fine - trapezoid(&coarse, t0, t1, q)).abs() / 3.0
}

/// `‖g(t)‖²` by linear interpolation of the recorded series.
pub fn l2_sq_at(run: &RunReport, t: f64) -> f64 {
    let s = &run.samples;
    if t <= s[0].t {
        return s[0].l2_sq;
    }
    for w in s.windows(2) {
        if t <= w[1].t {
            let a = (t - w[0].t) / (w[1].t - w[0].t);
            return w[0].l2_sq + a * (w[1].l2_sq - w[0].l2_sq);
        }
    }
    run.last().l2_sq
}

/// Energy ledger `‖g_0‖² − ‖g_T‖²` against the recorded dissipation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLedger {
    pub drop: f64,
    pub dissipated: f64,
    pub relative_error: f64,
    /// `∫D / ∫σ|∂_θ g|²` with the functional integrated by the trapezoid rule.
    pub dissipation_factor: f64,
}

pub fn energy_ledger(run: &RunReport) -> EnergyLedger {
    let (t0, t1) = (run.initial().t, run.last().t);
    let drop = run.initial().l2_sq - run.last().l2_sq;
    let dissipated = dissipation_integral(run, t0, t1);
    let functional = trapezoid(run, t0, t1, |s| s.dissipation_functional);
    let scale = run.initial().l2_sq.max(f64::MIN_POSITIVE);
    EnergyLedger {
        drop,
        dissipated,
        relative_error: (drop - dissipated).abs() / scale,
        dissipation_factor: if functional > 0.0 { dissipated / functional } else { f64::NAN },
    }
}

/// `λ_emp = ‖g_init‖² / ∫₀^T D dt`.
pub fn measure_lambda(run: &RunReport, t_horizon: f64) -> Result<f64> {
    let initial = run.initial().l2_sq;
    let t0 = run.initial().t;
    if run.last().t < t0 + t_horizon - 1e-9 {
        return Err(Error::param("t_horizon", "exceeds the recorded run"));
    }
    let dissipated = dissipation_integral(run, t0, t0 + t_horizon);
    if !(dissipated >= 1e-14 * initial) || initial == 0.0 {
        return Err(Error::VacuousCriterion { dissipated, initial });
    }
    Ok(initial / dissipated)
}
