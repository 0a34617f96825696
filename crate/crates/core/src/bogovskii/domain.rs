use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar shapes with an explicit inside test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlanarShape {
    Disk { center: [f64; 2], radius: f64 },
    Rectangle { center: [f64; 2], half: [f64; 2] },
    /// `[−a, a]² ∖ (0, a]²`.
    LShape { half: f64 },
}

impl PlanarShape {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match *self {
            PlanarShape::Disk { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) < radius
            }
            PlanarShape::Rectangle { center, half } => {
                (p[0] - center[0]).abs() < half[0] && (p[1] - center[1]).abs() < half[1]
            }
            PlanarShape::LShape { half } => {
                p[0].abs() < half && p[1].abs() < half && !(p[0] > 0.0 && p[1] > 0.0)
            }
        }
    }

    /// `(lower corner, upper corner)`.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match *self {
            PlanarShape::Disk { center: c, radius: r } => ([c[0] - r, c[1] - r], [c[0] + r, c[1] + r]),
            PlanarShape::Rectangle { center: c, half: h } => {
                ([c[0] - h[0], c[1] - h[1]], [c[0] + h[0], c[1] + h[1]])
            }
            PlanarShape::LShape { half } => ([-half, -half], [half, half]),
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            PlanarShape::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            PlanarShape::Rectangle { half, .. } => 4.0 * half[0] * half[1],
            PlanarShape::LShape { half } => 3.0 * half * half,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            PlanarShape::Disk { radius, .. } => radius > 0.0,
            PlanarShape::Rectangle { half, .. } => half[0] > 0.0 && half[1] > 0.0,
            PlanarShape::LShape { half } => half > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param("shape", "sizes must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Cell-centered uniform mesh over the bounding box; `index = i·dims[1] + j`
/// with `i` along the first axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub origin: [f64; 2],
    pub spacing: f64,
    pub dims: [usize; 2],
    pub inside: Vec<bool>,
}

impl Mesh {
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, idx: usize) -> [f64; 2] {
        let (i, j) = (idx / self.dims[1], idx % self.dims[1]);
        [
            self.origin[0] + (i as f64 + 0.5) * self.spacing,
            self.origin[1] + (j as f64 + 0.5) * self.spacing,
        ]
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    /// Inside cells with a 4-neighbour outside the domain.
    pub fn boundary_adjacent(&self) -> Vec<usize> {
        let [n0, n1] = self.dims;
        (0..self.len())
            .filter(|&idx| {
                if !self.inside[idx] {
                    return false;
                }
                let (i, j) = (idx / n1, idx % n1);
                let out = |a: Option<usize>, b: Option<usize>| match (a, b) {
                    (Some(a), Some(b)) if a < n0 && b < n1 => !self.inside[a * n1 + b],
                    _ => true,
                };
                out(i.checked_sub(1), Some(j))
                    || out(Some(i + 1), Some(j))
                    || out(Some(i), j.checked_sub(1))
                    || out(Some(i), Some(j + 1))
            })
            .collect()
    }
}

/// Planar domain star-shaped with respect to a ball, with its mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct StarDomain {
    pub shape: PlanarShape,
    pub ball: Ball,
    pub resolution: usize,
    pub mesh: Mesh,
}

const STAR_PAIRS: usize = 512;
const SEGMENT_SAMPLES: usize = 64;

impl StarDomain {
    /// `resolution` cells along the longer side of the bounding box. Rejects
    /// balls that leave the domain and domains failing the star spot-check.
    pub fn new(shape: PlanarShape, ball: Ball, resolution: usize) -> Result<Self> {
        shape.validate()?;
        if !(ball.radius > 0.0) {
            return Err(Error::param("ball.radius", "must be positive"));
        }
        if resolution < 4 {
            return Err(Error::param("resolution", "must be at least 4"));
        }
        let (lo, hi) = shape.bounding_box();
        let extent = [hi[0] - lo[0], hi[1] - lo[1]];
        let spacing = extent[0].max(extent[1]) / resolution as f64;
        let dims = [
            (extent[0] / spacing).round().max(1.0) as usize,
            (extent[1] / spacing).round().max(1.0) as usize,
        ];
        let mut mesh = Mesh {
            origin: lo,
            spacing,
            dims,
            inside: vec![],
        };
        mesh.inside = (0..mesh.len()).map(|k| shape.contains(mesh.center(k))).collect();
        let domain = Self {
            shape,
            ball,
            resolution,
            mesh,
        };
        domain.check_ball()?;
        domain.check_star()?;
        Ok(domain)
    }

    fn check_ball(&self) -> Result<()> {
        let b = self.ball;
        for k in 0..256 {
            let a = std::f64::consts::TAU * k as f64 / 256.0;
            let p = [b.center[0] + b.radius * a.cos(), b.center[1] + b.radius * a.sin()];
            if !self.shape.contains(p) && !on_closure(&self.shape, p) {
                return Err(Error::InvalidRegion(format!("star ball leaves the domain at {p:?}")));
            }
        }
        if !self.shape.contains(b.center) {
            return Err(Error::InvalidRegion("star ball center outside the domain".into()));
        }
        Ok(())
    }

    /// Random segments from interior mesh points to ball points stay inside.
    fn check_star(&self) -> Result<()> {
        let interior: Vec<usize> = (0..self.mesh.len()).filter(|&k| self.mesh.inside[k]).collect();
        if interior.is_empty() {
            return Err(Error::InvalidRegion("mesh has no interior cells".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..STAR_PAIRS {
            let to = self.mesh.center(interior[rng.random_range(0..interior.len())]);
            let r = self.ball.radius * rng.random::<f64>().sqrt();
            let a = std::f64::consts::TAU * rng.random::<f64>();
            let from = [self.ball.center[0] + r * a.cos(), self.ball.center[1] + r * a.sin()];
            for s in 1..SEGMENT_SAMPLES {
                let t = s as f64 / SEGMENT_SAMPLES as f64;
                let p = [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])];
                if !self.shape.contains(p) && !on_closure(&self.shape, p) {
                    return Err(Error::NotStarShaped { from, to });
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.shape.contains(p)
    }

    pub fn spacing(&self) -> f64 {
        self.mesh.spacing
    }

    /// Unit disk, ball of radius 1/2 at the origin.
    pub fn disk(resolution: usize) -> Result<Self> {
        Self::new(
            PlanarShape::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            },
            Ball {
                center: [0.0, 0.0],
                radius: 0.5,
            },
            resolution,
        )
    }

    /// Rectangle `[−a, a] × [−b, b]` with a centered ball of radius `0.8·min(a, b)`.
    pub fn rectangle(a: f64, b: f64, resolution: usize) -> Result<Self> {
        Self::new(
            PlanarShape::Rectangle {
                center: [0.0, 0.0],
                half: [a, b],
            },
            Ball {
                center: [0.0, 0.0],
                radius: 0.8 * a.min(b),
            },
            resolution,
        )
    }

    pub fn square(resolution: usize) -> Result<Self> {
        Self::rectangle(1.0, 1.0, resolution)
    }

    /// Aspect ratio 8: `[−2, 2] × [−1/4, 1/4]`.
    pub fn thin_rectangle(resolution: usize) -> Result<Self> {
        Self::rectangle(2.0, 0.25, resolution)
    }

    /// `[−1, 1]² ∖ (0, 1]²` with the ball at `(−1/2, −1/2)`, radius 0.45.
    pub fn l_shape(resolution: usize) -> Result<Self> {
        Self::new(
            PlanarShape::LShape { half: 1.0 },
            Ball {
                center: [-0.5, -0.5],
                radius: 0.45,
            },
            resolution,
        )
    }
}

/// Boundary points count as inside for segment tests (the domain is open,
/// but a segment may graze the boundary at a reentrant corner).
fn on_closure(shape: &PlanarShape, p: [f64; 2]) -> bool {
    const EPS: f64 = 1e-12;
    match *shape {
        PlanarShape::LShape { half } => {
            p[0].abs() <= half + EPS && p[1].abs() <= half + EPS && (p[0] <= EPS || p[1] <= EPS)
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_star_shaped() {
        for d in [
            StarDomain::disk(32),
            StarDomain::square(32),
            StarDomain::thin_rectangle(32),
            StarDomain::l_shape(32),
        ] {
            let d = d.unwrap();
            let inside = d.mesh.inside.iter().filter(|&&b| b).count() as f64;
            let area = inside * d.mesh.cell_area();
            assert!((area - d.shape.area()).abs() < 0.1 * d.shape.area(), "{:?}", d.shape);
        }
        let thin = StarDomain::thin_rectangle(64).unwrap();
        assert_eq!(thin.mesh.dims, [64, 8]);
    }

    #[test]
    fn l_shape_with_ball_in_the_wrong_arm_is_rejected() {
        let r = StarDomain::new(
            PlanarShape::LShape { half: 1.0 },
            Ball {
                center: [0.5, -0.5],
                radius: 0.4,
            },
            32,
        );
        assert!(matches!(r, Err(Error::NotStarShaped { .. })), "{r:?}");
    }

    #[test]
    fn ball_outside_is_rejected() {
        let r = StarDomain::new(
            PlanarShape::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            },
            Ball {
                center: [0.8, 0.0],
                radius: 0.5,
            },
            16,
        );
        assert!(matches!(r, Err(Error::InvalidRegion(_))));
    }

    #[test]
    fn boundary_cells_touch_the_outside() {
        let d = StarDomain::square(8).unwrap();
        assert_eq!(d.mesh.boundary_adjacent().len(), 28);
    }
}
