//! The thermalisation coefficient σ(x), its control companion χ and the
//! support region Σ they are built from.
//!
//! σ is assembled from primitive shapes through a signed distance `d` (negative
//! inside Σ) and the quintic smoothstep `S`:
//!
//! ```text
//! σ(x) = amplitude · S(-d(x) / w)          σ = amplitude where d ≤ -w, 0 outside Σ
//! χ(x) = scale · S((-d(x) - w) / w)        supp χ ⊂ {d ≤ -w}
//! ```
//!
//! so `χ ≤ (‖χ‖_∞ / amplitude) · σ` holds pointwise by construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{periodic_delta, wrap, GridSpec};

/// Largest slope of [`smoothstep`].
pub const SMOOTHSTEP_MAX_SLOPE: f64 = 1.875;

/// Quintic smoothstep, C² with `S(0) = 0`, `S(1) = 1`.
#[inline]
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

#[inline]
pub fn smoothstep_slope(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandAxis {
    /// `{x₂ ∈ (c - width/2, c + width/2)}`
    Horizontal,
    /// `{x₁ ∈ (c - width/2, c + width/2)}`
    Vertical,
}

/// Primitive building block of a support region on 𝕋².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    /// The whole torus.
    Full,
    Band {
        axis: BandAxis,
        center: f64,
        width: f64,
    },
    /// Union of a horizontal and a vertical band through `center`.
    Cross { center: [f64; 2], width: f64 },
    Disk { center: [f64; 2], radius: f64 },
    Rectangle { center: [f64; 2], size: [f64; 2] },
}

impl Shape {
    /// Signed distance to the boundary, negative inside. For rectangles and
    /// crosses this is the Chebyshev-type `max` of the slab distances, which
    /// is 1-Lipschitz like a true distance.
    pub fn signed_distance(&self, x: [f64; 2]) -> f64 {
        match *self {
            Shape::Full => f64::NEG_INFINITY,
            Shape::Band {
                axis,
                center,
                width,
            } => {
                let c = match axis {
                    BandAxis::Horizontal => x[1],
                    BandAxis::Vertical => x[0],
                };
                periodic_delta(c, center, 1.0).abs() - 0.5 * width
            }
            Shape::Cross { center, width } => {
                let h = periodic_delta(x[1], center[1], 1.0).abs() - 0.5 * width;
                let v = periodic_delta(x[0], center[0], 1.0).abs() - 0.5 * width;
                h.min(v)
            }
            Shape::Disk { center, radius } => {
                let d0 = periodic_delta(x[0], center[0], 1.0);
                let d1 = periodic_delta(x[1], center[1], 1.0);
                d0.hypot(d1) - radius
            }
            Shape::Rectangle { center, size } => {
                let a = periodic_delta(x[0], center[0], 1.0).abs() - 0.5 * size[0];
                let b = periodic_delta(x[1], center[1], 1.0).abs() - 0.5 * size[1];
                a.max(b)
            }
        }
    }

    /// Smallest length scale of the shape (width, diameter or shorter side).
    pub fn min_dimension(&self) -> f64 {
        match *self {
            Shape::Full => f64::INFINITY,
            Shape::Band { width, .. } | Shape::Cross { width, .. } => width,
            Shape::Disk { radius, .. } => 2.0 * radius,
            Shape::Rectangle { size, .. } => size[0].min(size[1]),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidRegion(format!("{what} in {self:?}")));
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Shape::Full => Ok(()),
            Shape::Band { width, center, .. } => {
                if !finite_pos(width) || width >= 1.0 || !center.is_finite() {
                    bad("band width must lie in (0, 1)")
                } else {
                    Ok(())
                }
            }
            Shape::Cross { width, center } => {
                if !finite_pos(width) || width >= 1.0 || !center.iter().all(|c| c.is_finite()) {
                    bad("cross width must lie in (0, 1)")
                } else {
                    Ok(())
                }
            }
            Shape::Disk { radius, center } => {
                if !finite_pos(radius) || radius >= 0.5 || !center.iter().all(|c| c.is_finite()) {
                    bad("disk radius must lie in (0, 1/2)")
                } else {
                    Ok(())
                }
            }
            Shape::Rectangle { size, center } => {
                if !size.iter().all(|&s| finite_pos(s) && s < 1.0)
                    || !center.iter().all(|c| c.is_finite())
                {
                    bad("rectangle sides must lie in (0, 1)")
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Σ as a finite union of primitive shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportRegion {
    components: Vec<Shape>,
}

impl SupportRegion {
    pub fn new(components: Vec<Shape>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidRegion("empty region".into()));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self { components })
    }

    pub fn full() -> Self {
        Self {
            components: vec![Shape::Full],
        }
    }

    pub fn components(&self) -> &[Shape] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn signed_distance(&self, x: [f64; 2]) -> f64 {
        self.components
            .iter()
            .map(|s| s.signed_distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.signed_distance(x) < 0.0
    }

    pub fn min_dimension(&self) -> f64 {
        self.components
            .iter()
            .map(Shape::min_dimension)
            .fold(f64::INFINITY, f64::min)
    }
}

/// How an [`AbsorptionField`] was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    /// Built from shapes; smoothness and support of χ are certified.
    Shapes {
        region: SupportRegion,
        smoothing_width: f64,
        amplitude: f64,
    },
    /// Imported grid values; no smoothness certificate, χ ≡ 0.
    Raw,
}

/// σ, χ and the good set on the spatial grid, with their certified norms.
#[derive(Debug, Clone)]
pub struct AbsorptionField {
    grid: GridSpec,
    sigma: Vec<f64>,
    chi: Vec<f64>,
    good_set: Vec<bool>,
    construction: Construction,
    chi_scale: f64,
    sigma_sup: f64,
    chi_sup: f64,
    grad_chi_sup: f64,
    sigma_min_good: f64,
}

/// Builds σ and the unnormalized χ (sup 1) from a support region.
pub fn build_sigma(
    grid: GridSpec,
    region: &SupportRegion,
    smoothing_width: f64,
    amplitude: f64,
) -> Result<AbsorptionField> {
    if region.is_empty() {
        return Err(Error::InvalidRegion("empty region".into()));
    }
    if !(smoothing_width.is_finite() && smoothing_width > 0.0) {
        return Err(Error::param("smoothing_width", "must be positive"));
    }
    if smoothing_width >= 0.5 * region.min_dimension() {
        return Err(Error::param(
            "smoothing_width",
            format!(
                "{smoothing_width} is not below half the smallest shape dimension {}",
                region.min_dimension()
            ),
        ));
    }
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::param("amplitude", "must be positive"));
    }
    let w = smoothing_width;
    let n = grid.n_x();
    let mut sigma = Vec::with_capacity(grid.sites());
    let mut chi = Vec::with_capacity(grid.sites());
    let mut good_set = Vec::with_capacity(grid.sites());
    let mut grad_chi_sup = 0.0f64;
    for i1 in 0..n {
        for i2 in 0..n {
            let d = region.signed_distance([grid.x_coord(i1), grid.x_coord(i2)]);
            sigma.push(amplitude * smoothstep(-d / w));
            let s = (-d - w) / w;
            chi.push(smoothstep(s));
            grad_chi_sup = grad_chi_sup.max(smoothstep_slope(s) / w);
            good_set.push(d <= -w);
        }
    }
    let chi_sup = chi.iter().fold(0.0f64, |m, &v| m.max(v));
    Ok(AbsorptionField {
        grid,
        sigma_sup: amplitude.min(sigma.iter().fold(0.0f64, |m, &v| m.max(v))),
        sigma,
        chi,
        good_set,
        construction: Construction::Shapes {
            region: region.clone(),
            smoothing_width,
            amplitude,
        },
        chi_scale: 1.0,
        chi_sup,
        grad_chi_sup,
        sigma_min_good: amplitude,
    })
}

impl AbsorptionField {
    /// Imports σ from grid values. The good set is `{σ ≥ ‖σ‖_∞ / 2}` and χ ≡ 0.
    pub fn from_raw(grid: GridSpec, sigma: Vec<f64>) -> Result<Self> {
        if sigma.len() != grid.sites() {
            return Err(Error::DimensionMismatch {
                expected: grid.sites(),
                found: sigma.len(),
            });
        }
        if let Some(bad) = sigma.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::param("sigma", format!("entry {bad} is not a finite non-negative real")));
        }
        let sup = sigma.iter().fold(0.0f64, |m, &v| m.max(v));
        let good_set = sigma.iter().map(|&v| sup > 0.0 && v >= 0.5 * sup).collect();
        Ok(Self {
            grid,
            chi: vec![0.0; sigma.len()],
            sigma,
            good_set,
            construction: Construction::Raw,
            chi_scale: 0.0,
            sigma_sup: sup,
            chi_sup: 0.0,
            grad_chi_sup: 0.0,
            sigma_min_good: 0.5 * sup,
        })
    }

    /// σ ≡ 0: pure transport.
    pub fn vanishing(grid: GridSpec) -> Self {
        Self::from_raw(grid, vec![0.0; grid.sites()]).expect("zeros are valid")
    }

    /// Returns a copy with χ multiplied by `factor`.
    pub fn with_chi_scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in out.chi.iter_mut() {
            *c *= factor;
        }
        out.chi_scale *= factor;
        out.chi_sup *= factor;
        out.grad_chi_sup *= factor;
        out
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    /// Sites of the eroded region where σ equals its amplitude.
    pub fn good_set(&self) -> &[bool] {
        &self.good_set
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    pub fn region(&self) -> Option<&SupportRegion> {
        match &self.construction {
            Construction::Shapes { region, .. } => Some(region),
            Construction::Raw => None,
        }
    }

    pub fn smoothing_width(&self) -> Option<f64> {
        match self.construction {
            Construction::Shapes {
                smoothing_width, ..
            } => Some(smoothing_width),
            Construction::Raw => None,
        }
    }

    pub fn chi_scale(&self) -> f64 {
        self.chi_scale
    }

    pub fn sigma_sup(&self) -> f64 {
        self.sigma_sup
    }

    pub fn chi_sup(&self) -> f64 {
        self.chi_sup
    }

    /// Sup of |∇χ| from the analytic gradient at grid points.
    pub fn grad_chi_sup(&self) -> f64 {
        self.grad_chi_sup
    }

    /// Lower bound of σ on the good set.
    pub fn sigma_min_good(&self) -> f64 {
        self.sigma_min_good
    }

    /// Construction constant κ with `χ ≤ κ·σ` pointwise.
    pub fn kappa(&self) -> f64 {
        match self.construction {
            Construction::Shapes { amplitude, .. } => self.chi_sup / amplitude,
            Construction::Raw => 0.0,
        }
    }

    /// `∫_{𝕋²} σ dx` by the rectangle rule.
    pub fn sigma_mass(&self) -> f64 {
        self.sigma.iter().sum::<f64>() * self.grid.dx() * self.grid.dx()
    }

    /// Grid measure of the good set.
    pub fn good_set_area(&self) -> f64 {
        self.good_set.iter().filter(|&&g| g).count() as f64 * self.grid.dx() * self.grid.dx()
    }

    pub fn sigma_at_site(&self, i1: usize, i2: usize) -> f64 {
        self.sigma[i1 * self.grid.n_x() + i2]
    }

    /// Bilinear interpolation of σ at an arbitrary point of 𝕋².
    pub fn sigma_at(&self, x: [f64; 2]) -> f64 {
        bilinear(&self.sigma, self.grid.n_x(), x)
    }

    pub fn chi_at(&self, x: [f64; 2]) -> f64 {
        bilinear(&self.chi, self.grid.n_x(), x)
    }
}

/// Periodic bilinear interpolation of an `n × n` row-major table on `[0,1)²`.
#[inline]
pub fn bilinear(table: &[f64], n: usize, x: [f64; 2]) -> f64 {
    let nf = n as f64;
    let u = wrap(x[0], 1.0) * nf;
    let v = wrap(x[1], 1.0) * nf;
    let i0 = (u.floor() as usize).min(n - 1);
    let j0 = (v.floor() as usize).min(n - 1);
    let fu = u - i0 as f64;
    let fv = v - j0 as f64;
    let i1 = if i0 + 1 == n { 0 } else { i0 + 1 };
    let j1 = if j0 + 1 == n { 0 } else { j0 + 1 };
    let a = table[i0 * n + j0];
    let b = table[i0 * n + j1];
    let c = table[i1 * n + j0];
    let d = table[i1 * n + j1];
    (1.0 - fu) * ((1.0 - fv) * a + fv * b) + fu * ((1.0 - fv) * c + fv * d)
}
