//! Named support geometries.

use crate::absorption::{BandAxis, Shape, SupportRegion};
use crate::registry::{Named, Registry};

pub trait Scenario: Named + Send + Sync {
    fn description(&self) -> &'static str;
    fn region(&self) -> SupportRegion;
    fn t_star(&self) -> f64 {
        2.0
    }
    /// Whether the geometry is expected to satisfy the uniform control condition.
    fn expects_uniform_gcc(&self) -> bool {
        true
    }
}

/// σ ≡ amplitude on the whole torus.
#[derive(Debug, Clone, Copy, Default)]
pub struct Uniform;

impl Named for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }
}

impl Scenario for Uniform {
    fn description(&self) -> &'static str {
        "absorption on the whole torus"
    }

    fn region(&self) -> SupportRegion {
        SupportRegion::full()
    }
}

/// Union of the horizontal and vertical bands of width 1/3 through the center.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cross;

impl Named for Cross {
    fn name(&self) -> &'static str {
        "cross"
    }
}

impl Scenario for Cross {
    fn description(&self) -> &'static str {
        "cross of two bands of width 1/3 centered at (0.5, 0.5); every ray meets it"
    }

    fn region(&self) -> SupportRegion {
        SupportRegion::new(vec![Shape::Cross {
            center: [0.5, 0.5],
            width: 1.0 / 3.0,
        }])
        .expect("non-empty")
    }
}

/// Horizontal band `{x₂ ∈ (1/3, 2/3)}`; horizontal rays outside it are trapped.
#[derive(Debug, Clone, Copy, Default)]
pub struct Band;

impl Named for Band {
    fn name(&self) -> &'static str {
        "band"
    }
}

impl Scenario for Band {
    fn description(&self) -> &'static str {
        "horizontal band 1/3 < x2 < 2/3; horizontal rays outside never meet it"
    }

    fn region(&self) -> SupportRegion {
        SupportRegion::new(vec![Shape::Band {
            axis: BandAxis::Horizontal,
            center: 0.5,
            width: 1.0 / 3.0,
        }])
        .expect("non-empty")
    }

    fn expects_uniform_gcc(&self) -> bool {
        false
    }
}

/// Two disjoint disks whose shadows cover both axes.
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoDisks;

impl Named for TwoDisks {
    fn name(&self) -> &'static str {
        "two-disks"
    }
}

impl TwoDisks {
    pub const BIG: ([f64; 2], f64) = ([0.25, 0.25], 0.42);
    pub const SMALL: ([f64; 2], f64) = ([0.75, 0.75], 0.2);
}

impl Scenario for TwoDisks {
    fn description(&self) -> &'static str {
        "disks of radius 0.42 at (0.25, 0.25) and 0.2 at (0.75, 0.75); two components"
    }

    fn region(&self) -> SupportRegion {
        let disk = |(center, radius): ([f64; 2], f64)| Shape::Disk { center, radius };
        SupportRegion::new(vec![disk(Self::BIG), disk(Self::SMALL)]).expect("non-empty")
    }
}

pub fn scenario_registry() -> Registry<dyn Scenario> {
    let mut r: Registry<dyn Scenario> = Registry::new("scenario");
    r.register(Box::new(Uniform))
        .register(Box::new(Cross))
        .register(Box::new(Band))
        .register(Box::new(TwoDisks));
    r
}
