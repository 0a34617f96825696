//! Right inverse of the divergence with zero boundary values on planar
//! domains star-shaped with respect to a ball, by direct quadrature of the
//! explicit integral kernel.

mod domain;

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use domain::{Ball, Mesh, PlanarShape, StarDomain};

use crate::error::{Error, Result};

type PointDatum<'a> = dyn Fn([f64; 2]) -> f64 + Sync + 'a;

/// `ω(u) = scale · (1 − |u − c|²/R²)⁴` on the ball, zero outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpWeight {
    pub ball: Ball,
    pub scale: f64,
}

impl BumpWeight {
    /// Unit-mass weight on `ball`.
    pub fn normalized(ball: Ball) -> Self {
        Self {
            ball,
            scale: 5.0 / (PI * ball.radius * ball.radius),
        }
    }

    pub fn mass(&self) -> f64 {
        self.scale * PI * self.ball.radius * self.ball.radius / 5.0
    }

    pub fn eval(&self, u: [f64; 2]) -> f64 {
        let r = self.ball.radius;
        let q = 1.0 - ((u[0] - self.ball.center[0]).powi(2) + (u[1] - self.ball.center[1]).powi(2)) / (r * r);
        if q > 0.0 {
            self.scale * q.powi(4)
        } else {
            0.0
        }
    }

    fn check(&self) -> Result<()> {
        let m = self.mass();
        if (m - 1.0).abs() > 1e-8 {
            return Err(Error::BumpMass { mass: m });
        }
        Ok(())
    }

    /// `∫_{ρ}^∞ ω(y + r e) r dr` for a unit vector `e`, in closed form.
    pub fn radial_integral(&self, y: [f64; 2], e: [f64; 2], rho: f64) -> f64 {
        let r2 = self.ball.radius * self.ball.radius;
        let d = [y[0] - self.ball.center[0], y[1] - self.ball.center[1]];
        let b = d[0] * e[0] + d[1] * e[1];
        let l2 = r2 - (d[0] * d[0] + d[1] * d[1]) + b * b;
        if l2 <= 0.0 {
            return 0.0;
        }
        let l = l2.sqrt();
        let lo = (rho + b).max(-l);
        if lo >= l {
            return 0.0;
        }
        // with s = r + b: ω = scale/R⁸ (L² − s²)⁴ and r dr = (s − b) ds
        let q = |s: f64| {
            let s2 = s * s;
            s * (l2.powi(4) - s2 * (4.0 / 3.0 * l2.powi(3) - s2 * (1.2 * l2 * l2 - s2 * (4.0 / 7.0 * l2 - s2 / 9.0))))
        };
        let p = |s: f64| -(l2 - s * s).powi(5) / 10.0 - b * q(s);
        self.scale / (r2 * r2 * r2 * r2) * (p(l) - p(lo))
    }
}

/// Solution of `∇·F = h` with the measured quality figures.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceSolution {
    /// Components of `F` at cell centers, zero outside the domain.
    pub f_field: [Vec<f64>; 2],
    /// The mean-corrected datum (zero outside the domain).
    pub h_input: Vec<f64>,
    /// Mean subtracted from the datum before solving.
    pub mean_correction: f64,
    pub h_norm: f64,
    pub f_h1: f64,
    /// `‖F‖_{H¹} / ‖h‖_{L²}`.
    pub c_d_witness: f64,
    /// `‖∇·F − h‖_{L²} / ‖h‖_{L²}` with fourth-order centered differences.
    pub residual: f64,
    /// Largest `|F|` on cells adjacent to the boundary.
    pub boundary_max: f64,
}

impl DivergenceSolution {
    /// `boundary_max / (spacing · ‖h‖)`.
    pub fn boundary_constant(&self, spacing: f64) -> f64 {
        if self.h_norm == 0.0 {
            0.0
        } else {
            self.boundary_max / (spacing * self.h_norm)
        }
    }
}

const SELF_ORDER: usize = 8;
const FAR_ORDER: usize = 2;
const NEAR_ORDER: usize = 6;
/// Cells within this Chebyshev distance use the near rule.
const NEAR_CELLS: usize = 3;

/// Right-hand side of a solve.
#[derive(Clone, Copy)]
pub enum Datum<'a> {
    /// Mesh table, constant on each cell.
    Cells(&'a [f64]),
    /// Pointwise function, sampled at the quadrature nodes.
    Function(&'a (dyn Fn([f64; 2]) -> f64 + Sync)),
}

impl std::fmt::Debug for Datum<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Datum::Cells(v) => write!(f, "Cells({} values)", v.len()),
            Datum::Function(_) => f.write_str("Function"),
        }
    }
}

/// Tensor Gauss rule on one mesh cell, as offsets from the center.
struct CellRule {
    points: Vec<([f64; 2], f64)>,
}

impl CellRule {
    fn new(spacing: f64, order: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("nonzero"));
        let pairs = rule.as_node_weight_pairs();
        let half = 0.5 * spacing;
        let mut points = Vec::with_capacity(order * order);
        for &(a, wa) in pairs {
            for &(b, wb) in pairs {
                points.push(([a * half, b * half], wa * wb * half * half));
            }
        }
        Self { points }
    }

    /// Visits `(y, w·(x − y)/|x − y|² ∫_{|x−y|}^∞ ω(y + r e) r dr)` for the
    /// nodes of a cell centered at `yc` not containing `x`.
    fn visit(&self, weight: &BumpWeight, x: [f64; 2], yc: [f64; 2], mut f: impl FnMut([f64; 2], [f64; 2])) {
        for &(off, w) in &self.points {
            let y = [yc[0] + off[0], yc[1] + off[1]];
            let d = [x[0] - y[0], x[1] - y[1]];
            let rho = d[0].hypot(d[1]);
            let e = [d[0] / rho, d[1] / rho];
            let i = weight.radial_integral(y, e, rho);
            if i != 0.0 {
                let c = w * i / rho;
                f(y, [c * e[0], c * e[1]]);
            }
        }
    }
}

/// Polar rule on the cell centered at `x` (the `1/ρ` of the kernel cancels
/// the Jacobian); visits the same pairs as [`CellRule::visit`].
fn visit_self(
    weight: &BumpWeight,
    x: [f64; 2],
    spacing: f64,
    rule: &GaussLegendre,
    mut f: impl FnMut([f64; 2], [f64; 2]),
) {
    let pairs = rule.as_node_weight_pairs();
    let half = 0.5 * spacing;
    for side in 0..4 {
        let phi_n = side as f64 * 0.5 * PI;
        for &(tn, tw) in pairs {
            let phi = phi_n + tn * PI / 4.0;
            let dphi = tw * PI / 4.0;
            let rmax = half / (phi - phi_n).cos();
            // u points from x to the source y; e = −u points from y to x
            let u = [phi.cos(), phi.sin()];
            let e = [-u[0], -u[1]];
            for &(rn, rw) in pairs {
                let rho = 0.5 * rmax * (rn + 1.0);
                let y = [x[0] + rho * u[0], x[1] + rho * u[1]];
                let i = weight.radial_integral(y, e, rho);
                if i != 0.0 {
                    let c = dphi * 0.5 * rmax * rw * i;
                    f(y, [c * e[0], c * e[1]]);
                }
            }
        }
    }
}

/// Solves `∇·F_k = h_k` for every datum in one sweep over cell pairs. Values
/// outside the domain are ignored; each datum has its mean over the domain
/// removed first.
pub fn bogovskii_solve_data(
    domain: &StarDomain,
    data: &[Datum<'_>],
    weight: &BumpWeight,
) -> Result<Vec<DivergenceSolution>> {
    weight.check()?;
    let mesh = &domain.mesh;
    for d in data {
        if let Datum::Cells(h) = d {
            if h.len() != mesh.len() {
                return Err(Error::DimensionMismatch {
                    expected: mesh.len(),
                    found: h.len(),
                });
            }
        }
    }
    let cells: Vec<usize> = (0..mesh.len()).filter(|&k| mesh.inside[k]).collect();
    let centers: Vec<[f64; 2]> = cells.iter().map(|&k| mesh.center(k)).collect();
    let self_rule = GaussLegendre::new(NonZeroUsize::new(SELF_ORDER).expect("nonzero"));
    let far = CellRule::new(mesh.spacing, FAR_ORDER);
    let near = CellRule::new(mesh.spacing, NEAR_ORDER);
    let means: Vec<f64> = data
        .iter()
        .map(|d| match d {
            Datum::Cells(h) => cells.iter().map(|&k| h[k]).sum::<f64>() / cells.len() as f64,
            Datum::Function(h) => {
                let total: f64 = centers
                    .iter()
                    .flat_map(|c| far.points.iter().map(move |(o, w)| w * h([c[0] + o[0], c[1] + o[1]])))
                    .sum();
                total / (cells.len() as f64 * mesh.cell_area())
            }
        })
        .collect();
    // cell data packed [cell][member]; function members are sampled per node
    let constant: Vec<usize> = (0..data.len()).filter(|&k| matches!(data[k], Datum::Cells(_))).collect();
    let pointwise: Vec<(usize, &PointDatum<'_>)> = data
        .iter()
        .enumerate()
        .filter_map(|(k, d)| match d {
            Datum::Function(h) => Some((k, *h)),
            Datum::Cells(_) => None,
        })
        .collect();
    let means_ref = &means;
    let packed: Vec<f64> = cells
        .iter()
        .flat_map(|&c| {
            constant.iter().map(move |&k| match data[k] {
                Datum::Cells(h) => h[c] - means_ref[k],
                Datum::Function(_) => unreachable!(),
            })
        })
        .collect();
    let mc = constant.len();
    let near_reach = NEAR_CELLS as f64 * mesh.spacing * (1.0 + 1e-9);
    let values: Vec<Vec<[f64; 2]>> = centers
        .par_iter()
        .enumerate()
        .map(|(a, &x)| {
            let mut f = vec![[0.0; 2]; data.len()];
            for (b, &y) in centers.iter().enumerate() {
                let mut kv = [0.0; 2];
                let mut visit = |p: [f64; 2], k: [f64; 2]| {
                    kv[0] += k[0];
                    kv[1] += k[1];
                    for &(m, h) in &pointwise {
                        let v = h(p) - means[m];
                        f[m][0] += v * k[0];
                        f[m][1] += v * k[1];
                    }
                };
                if a == b {
                    visit_self(weight, x, mesh.spacing, &self_rule, &mut visit);
                } else if (x[0] - y[0]).abs() <= near_reach && (x[1] - y[1]).abs() <= near_reach {
                    near.visit(weight, x, y, &mut visit);
                } else {
                    far.visit(weight, x, y, &mut visit);
                }
                if kv == [0.0, 0.0] {
                    continue;
                }
                for (i, &hk) in packed[b * mc..(b + 1) * mc].iter().enumerate() {
                    let fk = &mut f[constant[i]];
                    fk[0] += hk * kv[0];
                    fk[1] += hk * kv[1];
                }
            }
            f
        })
        .collect();
    let boundary = mesh.boundary_adjacent();
    Ok(data
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let mut f_field = [vec![0.0; mesh.len()], vec![0.0; mesh.len()]];
            let mut h_input = vec![0.0; mesh.len()];
            for (a, &cell) in cells.iter().enumerate() {
                f_field[0][cell] = values[a][k][0];
                f_field[1][cell] = values[a][k][1];
                h_input[cell] = match d {
                    Datum::Cells(h) => h[cell],
                    Datum::Function(h) => h(centers[a]),
                } - means[k];
            }
            assemble(mesh, f_field, h_input, means[k], &boundary)
        })
        .collect())
}

/// [`bogovskii_solve_data`] for mesh tables.
pub fn bogovskii_solve_many(
    domain: &StarDomain,
    data: &[Vec<f64>],
    weight: &BumpWeight,
) -> Result<Vec<DivergenceSolution>> {
    let data: Vec<Datum<'_>> = data.iter().map(|h| Datum::Cells(h)).collect();
    bogovskii_solve_data(domain, &data, weight)
}

pub fn bogovskii_solve(domain: &StarDomain, h: &[f64], weight: &BumpWeight) -> Result<DivergenceSolution> {
    let mut out = bogovskii_solve_data(domain, &[Datum::Cells(h)], weight)?;
    Ok(out.remove(0))
}

fn assemble(
    mesh: &Mesh,
    f_field: [Vec<f64>; 2],
    h_input: Vec<f64>,
    mean_correction: f64,
    boundary: &[usize],
) -> DivergenceSolution {
    let [n0, n1] = mesh.dims;
    let sp = mesh.spacing;
    let area = mesh.cell_area();
    let at = |c: &Vec<f64>, i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i as usize >= n0 || j as usize >= n1 {
            0.0
        } else {
            c[i as usize * n1 + j as usize]
        }
    };
    let h_norm = (h_input.iter().map(|v| v * v).sum::<f64>() * area).sqrt();
    let mut res = 0.0;
    let mut l2 = 0.0;
    let mut grad = 0.0;
    for i in -1..n0 as isize {
        for j in -1..n1 as isize {
            for c in &f_field {
                let v = at(c, i, j);
                let dx = at(c, i + 1, j) - v;
                let dy = at(c, i, j + 1) - v;
                grad += dx * dx + dy * dy;
            }
        }
    }
    for idx in 0..mesh.len() {
        if !mesh.inside[idx] {
            continue;
        }
        let (i, j) = ((idx / n1) as isize, (idx % n1) as isize);
        // fourth-order centered differences
        let d = |c: &Vec<f64>, di: isize, dj: isize| {
            (8.0 * (at(c, i + di, j + dj) - at(c, i - di, j - dj))
                - (at(c, i + 2 * di, j + 2 * dj) - at(c, i - 2 * di, j - 2 * dj)))
                / (12.0 * sp)
        };
        let div = d(&f_field[0], 1, 0) + d(&f_field[1], 0, 1);
        let r = div - h_input[idx];
        res += r * r;
        l2 += f_field[0][idx].powi(2) + f_field[1][idx].powi(2);
    }
    // forward differences over faces: Σ (Δv/sp)² sp² = Σ Δv²
    let f_h1 = (l2 * area + grad).sqrt();
    let boundary_max = boundary
        .iter()
        .map(|&k| f_field[0][k].hypot(f_field[1][k]))
        .fold(0.0, f64::max);
    let ratio = |a: f64| if h_norm > 0.0 { a / h_norm } else { 0.0 };
    DivergenceSolution {
        c_d_witness: ratio(f_h1),
        residual: ratio((res * area).sqrt()),
        f_field,
        h_input,
        mean_correction,
        h_norm,
        f_h1,
        boundary_max,
    }
}

/// Random data `Σ a_pq cos(πpξ₁) cos(πqξ₂)` for `p, q ≤ modes` in box
/// coordinates `ξ ∈ [0, 1]²`; independent of the resolution.
pub fn random_datum(domain: &StarDomain, modes: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..(modes + 1) * (modes + 1))
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let (lo, hi) = domain.shape.bounding_box();
    let mesh = &domain.mesh;
    (0..mesh.len())
        .map(|k| {
            let c = mesh.center(k);
            let xi = [(c[0] - lo[0]) / (hi[0] - lo[0]), (c[1] - lo[1]) / (hi[1] - lo[1])];
            let mut v = 0.0;
            for p in 0..=modes {
                for q in 0..=modes {
                    v += coeffs[p * (modes + 1) + q] * (PI * p as f64 * xi[0]).cos() * (PI * q as f64 * xi[1]).cos();
                }
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdEstimate {
    pub c_d: f64,
    pub witnesses: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// `max ‖F‖_{H¹}/‖h‖` over an ensemble of at least 8 nonzero data.
pub fn estimate_c_d(domain: &StarDomain, ensemble: &[Vec<f64>], weight: &BumpWeight) -> Result<CdEstimate> {
    if ensemble.len() < 8 {
        return Err(Error::param("ensemble", "needs at least 8 members"));
    }
    let cells: Vec<usize> = (0..domain.mesh.len()).filter(|&k| domain.mesh.inside[k]).collect();
    for (index, h) in ensemble.iter().enumerate() {
        let mean = cells.iter().map(|&k| h[k]).sum::<f64>() / cells.len() as f64;
        if cells.iter().all(|&k| (h[k] - mean).abs() <= f64::MIN_POSITIVE) {
            return Err(Error::DegenerateMember { index });
        }
    }
    let sols = bogovskii_solve_many(domain, ensemble, weight)?;
    let witnesses: Vec<f64> = sols.iter().map(|s| s.c_d_witness).collect();
    Ok(CdEstimate {
        c_d: witnesses.iter().cloned().fold(0.0, f64::max),
        witnesses,
        residuals: sols.iter().map(|s| s.residual).collect(),
    })
}

/// Smooth vector field supported in a disk, `G = (a, b) (1 − |y − c|²/r²)⁵₊`,
/// and its divergence. Used as a manufactured datum `h = ∇·G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompactField {
    pub center: [f64; 2],
    pub radius: f64,
    pub direction: [f64; 2],
}

impl CompactField {
    pub fn value(&self, y: [f64; 2]) -> [f64; 2] {
        let q = self.profile(y);
        [self.direction[0] * q.powi(5), self.direction[1] * q.powi(5)]
    }

    pub fn divergence(&self, y: [f64; 2]) -> f64 {
        let q = self.profile(y);
        if q <= 0.0 {
            return 0.0;
        }
        let r2 = self.radius * self.radius;
        let g = [-2.0 * (y[0] - self.center[0]) / r2, -2.0 * (y[1] - self.center[1]) / r2];
        5.0 * q.powi(4) * (self.direction[0] * g[0] + self.direction[1] * g[1])
    }

    fn profile(&self, y: [f64; 2]) -> f64 {
        let d2 = (y[0] - self.center[0]).powi(2) + (y[1] - self.center[1]).powi(2);
        (1.0 - d2 / (self.radius * self.radius)).max(0.0)
    }
}

/// `h = Σ ∇·G_k` sampled at cell centers.
pub fn manufactured_datum(domain: &StarDomain, fields: &[CompactField]) -> Vec<f64> {
    (0..domain.mesh.len())
        .map(|k| {
            let y = domain.mesh.center(k);
            fields.iter().map(|g| g.divergence(y)).sum()
        })
        .collect()
}
