use std::f64::consts::TAU;
use std::fmt;

use crate::absorption::AbsorptionField;
use crate::error::{Error, Result};

/// Named constants of the decay argument; measured entries are `None` until
/// the corresponding check has run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstantsLedger {
    /// Poincaré constant on S¹ for the unweighted inequality.
    pub c_p: f64,
    /// `C_P / σ_min` on the good set, the constant used in `C₁`.
    pub c_p_good: f64,
    pub t_star: f64,
    pub chi_sup: f64,
    pub grad_chi_sup: f64,
    pub sigma_sup: f64,
    pub c1: f64,
    pub c2: f64,
    pub lambda: Option<f64>,
    pub big_c: Option<f64>,
    pub big_lambda: Option<f64>,
    /// `(δ, C_δ)` pairs.
    pub c_delta: Vec<(f64, f64)>,
    pub c_d: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
    pub c6: Option<f64>,
    /// Measured ratio `(−d/dt ‖g‖²) / ∫σ|∂_θ g|²`.
    pub dissipation_factor: Option<f64>,
}

impl ConstantsLedger {
    /// Formula constants for a field whose χ is already normalized.
    pub fn for_field(field: &AbsorptionField, t_star: f64) -> Self {
        let c_p_good = if field.sigma_min_good() > 0.0 {
            1.0 / field.sigma_min_good()
        } else {
            f64::INFINITY
        };
        let (c1, c2) = following_constants(
            c_p_good,
            t_star,
            field.chi_sup(),
            field.grad_chi_sup(),
            field.sigma_sup(),
        );
        Self {
            c_p: 1.0,
            c_p_good,
            t_star,
            chi_sup: field.chi_sup(),
            grad_chi_sup: field.grad_chi_sup(),
            sigma_sup: field.sigma_sup(),
            c1,
            c2,
            ..Default::default()
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6e}"))
}

impl fmt::Display for ConstantsLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "C_P            {:.6e}", self.c_p)?;
        writeln!(f, "C_P/sigma_min  {:.6e}", self.c_p_good)?;
        writeln!(f, "T*             {:.6e}", self.t_star)?;
        writeln!(f, "|chi|_inf      {:.6e}", self.chi_sup)?;
        writeln!(f, "|grad chi|_inf {:.6e}", self.grad_chi_sup)?;
        writeln!(f, "|sigma|_inf    {:.6e}", self.sigma_sup)?;
        writeln!(f, "C1             {:.6e}", self.c1)?;
        writeln!(f, "C2             {:.6e}", self.c2)?;
        writeln!(f, "lambda         {}", opt(self.lambda))?;
        writeln!(f, "C              {}", opt(self.big_c))?;
        writeln!(f, "Lambda         {}", opt(self.big_lambda))?;
        for (d, c) in &self.c_delta {
            writeln!(f, "C_delta        {c:.6e} (delta = {d})")?;
        }
        writeln!(f, "C_D            {}", opt(self.c_d))?;
        writeln!(f, "C3             {}", opt(self.c3))?;
        writeln!(f, "C4             {}", opt(self.c4))?;
        writeln!(f, "C5             {}", opt(self.c5))?;
        writeln!(f, "C6             {}", opt(self.c6))?;
        writeln!(f, "D factor       {}", opt(self.dissipation_factor))
    }
}

/// `(C, Λ) = (√(λ/(λ−1)), log(λ/(λ−1)) / T)`.
pub fn decay_from_lambda(lambda: f64, t_horizon: f64) -> Result<(f64, f64)> {
    if !(lambda > 1.0) {
        return Err(Error::param("lambda", format!("{lambda} does not exceed 1; no decay certificate")));
    }
    if !(t_horizon.is_finite() && t_horizon > 0.0) {
        return Err(Error::param("t_horizon", "must be positive"));
    }
    let q = lambda / (lambda - 1.0);
    Ok((q.sqrt(), q.ln() / t_horizon))
}

/// `C₁ = 4C_P‖χ‖ + 4T*‖χ‖ + 4T*³‖∇χ‖²‖σ‖`, `C₂ = 4‖χ‖/2π`.
pub fn following_constants(
    c_p: f64,
    t_star: f64,
    chi_sup: f64,
    grad_chi_sup: f64,
    sigma_sup: f64,
) -> (f64, f64) {
    let c1 = 4.0 * c_p * chi_sup
        + 4.0 * t_star * chi_sup
        + 4.0 * t_star.powi(3) * grad_chi_sup * grad_chi_sup * sigma_sup;
    (c1, 4.0 * chi_sup / TAU)
}
