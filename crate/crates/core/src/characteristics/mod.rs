//! Free transport on the torus: the straight-line flow `Z_t(x, v) = (x + t v, v)`,
//! ray quadrature of spatial coefficients along it, control-condition
//! certificates, the control weight ψ and reachability between components.

mod gcc;
mod psi;
mod reach;

pub use gcc::{certify_gcc, normalize_chi, GccCertificate, GccSampling};
pub use psi::{build_psi, ControlWeight, PSI_DENOMINATOR_MARGIN};
pub use reach::{component_reachability, Reachability, ReachSampling};

use crate::grid::{wrap, PhasePoint};

/// `Z_t(z)`; `t` may be negative.
pub fn flow(z: PhasePoint, t: f64) -> PhasePoint {
    let [v1, v2] = z.velocity();
    let [x1, x2] = z.x();
    PhasePoint::new([x1 + t * v1, x2 + t * v2], z.theta())
}

/// Fixed-step quadrature rule on `[0, t]`: `steps` full panels of width `h`
/// followed by a partial panel of width `rem < h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayRule {
    pub h: f64,
    pub steps: usize,
    pub rem: f64,
}

impl RayRule {
    pub fn new(t: f64, h: f64) -> Self {
        let steps = (t / h).floor();
        let mut rem = t - steps * h;
        let mut steps = steps as usize;
        // absorb a remainder that is only rounding noise
        if rem <= 1e-12 * h {
            rem = 0.0;
        } else if h - rem <= 1e-12 * h {
            steps += 1;
            rem = 0.0;
        }
        Self { h, steps, rem }
    }

    /// Rule on `[0, t]` whose step divides `t` and does not exceed `h_max`.
    pub fn aligned(t: f64, h_max: f64) -> Self {
        let steps = (t / h_max).ceil().max(1.0) as usize;
        Self {
            h: t / steps as f64,
            steps,
            rem: 0.0,
        }
    }

    /// Integrates the piecewise-linear interpolant of `f` through the nodes
    /// `0, h, 2h, …`; on full panels this is the composite trapezoid rule.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = self.h;
        self.integrate_nodes(|k| f(k as f64 * h))
    }

    /// As [`Self::integrate`], with the integrand indexed by node number and
    /// called once per node in increasing order.
    pub fn integrate_nodes(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        let mut prev = f(0);
        let mut acc = 0.0;
        for k in 1..=self.steps {
            let cur = f(k);
            acc += 0.5 * (prev + cur);
            prev = cur;
        }
        let mut total = acc * self.h;
        if self.rem > 0.0 {
            let next = f(self.steps + 1);
            total += self.rem * prev + 0.5 * self.rem * self.rem / self.h * (next - prev);
        }
        total
    }
}

/// `∫_{t0}^{t0+len} table(X_s(z)) ds` along the ray, with bilinear
/// interpolation of the `n × n` spatial table.
pub fn ray_integral(table: &[f64], n: usize, z: PhasePoint, t0: f64, rule: &RayRule) -> f64 {
    let mut ray = GridRay::new(n, z, t0, rule.h);
    rule.integrate_nodes(|_| ray.next(table))
}

/// Ray integral of a non-negative table, abandoned with `None` as soon as the
/// running value exceeds `cap`.
pub(crate) fn ray_integral_capped(
    table: &[f64],
    n: usize,
    z: PhasePoint,
    rule: &RayRule,
    cap: f64,
) -> Option<f64> {
    let mut ray = GridRay::new(n, z, 0.0, rule.h);
    let h = rule.h;
    let mut prev = ray.next(table);
    let mut acc = 0.0;
    for _ in 1..=rule.steps {
        let cur = ray.next(table);
        acc += 0.5 * (prev + cur);
        prev = cur;
        if acc * h > cap {
            return None;
        }
    }
    let mut total = acc * h;
    if rule.rem > 0.0 {
        let next = ray.next(table);
        total += rule.rem * prev + 0.5 * rule.rem * rule.rem / h * (next - prev);
    }
    (total <= cap).then_some(total)
}

/// A ray marched in grid units, `u ← u + du` wrapped into `[0, n)`, one
/// quadrature node per call of [`GridRay::next`].
struct GridRay {
    n: usize,
    nf: f64,
    u: [f64; 2],
    du: [f64; 2],
}

impl GridRay {
    fn new(n: usize, z: PhasePoint, t0: f64, h: f64) -> Self {
        let nf = n as f64;
        let [v1, v2] = z.velocity();
        let [x1, x2] = z.x();
        // steps shorter than one period need a single wrap correction
        let step = |v: f64| wrap(h * v + 0.5, 1.0) * nf - 0.5 * nf;
        Self {
            n,
            nf,
            u: [wrap(x1 + t0 * v1, 1.0) * nf, wrap(x2 + t0 * v2, 1.0) * nf],
            du: [step(v1), step(v2)],
        }
    }

    /// Bilinear value at the current node, then advances one node.
    #[inline]
    fn next(&mut self, table: &[f64]) -> f64 {
        let n = self.n;
        let [u, v] = self.u;
        let i0 = (u as usize).min(n - 1);
        let j0 = (v as usize).min(n - 1);
        let fu = u - i0 as f64;
        let fv = v - j0 as f64;
        let i1 = if i0 + 1 == n { 0 } else { i0 + 1 };
        let j1 = if j0 + 1 == n { 0 } else { j0 + 1 };
        let a = table[i0 * n + j0];
        let b = table[i0 * n + j1];
        let c = table[i1 * n + j0];
        let d = table[i1 * n + j1];
        for (x, dx) in self.u.iter_mut().zip(self.du) {
            *x += dx;
            if *x >= self.nf {
                *x -= self.nf;
            } else if *x < 0.0 {
                *x += self.nf;
            }
        }
        (1.0 - fu) * ((1.0 - fv) * a + fv * b) + fu * ((1.0 - fv) * c + fv * d)
    }
}

/// `∫₀^{T*} σ(X_t(z)) dt` with the fixed-step rule of width `dt_quad`.
pub fn line_integral(
    field: &crate::absorption::AbsorptionField,
    z: PhasePoint,
    t_star: f64,
    dt_quad: f64,
) -> f64 {
    let rule = RayRule::new(t_star, dt_quad);
    ray_integral(field.sigma(), field.grid().n_x(), z, 0.0, &rule).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absorption::{build_sigma, BandAxis, Shape, SupportRegion};
    use crate::grid::GridSpec;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn band_field() -> crate::absorption::AbsorptionField {
        let r = SupportRegion::new(vec![Shape::Band {
            axis: BandAxis::Horizontal,
            center: 0.5,
            width: 1.0 / 3.0,
        }])
        .unwrap();
        build_sigma(GridSpec::new(64, 16).unwrap(), &r, 0.04, 1.0).unwrap()
    }

    #[test]
    fn flow_examples() {
        let z = flow(PhasePoint::new([0.2, 0.3], 0.0), 0.5);
        assert!((z.x()[0] - 0.7).abs() < 1e-15 && (z.x()[1] - 0.3).abs() < 1e-15);
        let z0 = PhasePoint::new([0.4, 0.6], 1.0);
        assert_eq!(flow(z0, 0.0), z0);
        let z = flow(PhasePoint::new([0.1, 0.9], FRAC_PI_2), 1.0);
        assert!((z.x()[0] - 0.1).abs() < 1e-15 && (z.x()[1] - 0.9).abs() < 1e-14);
        assert_eq!(z.theta(), FRAC_PI_2);
    }

    proptest! {
        #[test]
        fn flow_group_property(
            x1 in 0.0..1.0f64, x2 in 0.0..1.0f64, th in 0.0..TAU,
            s in -5.0..5.0f64, t in -5.0..5.0f64,
        ) {
            let z = PhasePoint::new([x1, x2], th);
            let a = flow(flow(z, s), t);
            let b = flow(z, s + t);
            let d0 = crate::grid::periodic_delta(a.x()[0], b.x()[0], 1.0).abs();
            let d1 = crate::grid::periodic_delta(a.x()[1], b.x()[1], 1.0).abs();
            prop_assert!(d0 < 1e-13 && d1 < 1e-13);
            prop_assert_eq!(a.theta(), b.theta());
        }
    }

    #[test]
    fn grid_ray_matches_pointwise_interpolation() {
        let f = band_field();
        let n = f.grid().n_x();
        for (x, th, t0, t) in [([0.3, 0.9], 0.4, 0.0, 2.0), ([0.01, 0.5], 3.9, -1.3, 1.77), ([0.99, 0.0], 5.5, 0.2, 0.3)] {
            let z = PhasePoint::new(x, th);
            let rule = RayRule::new(t, 0.01);
            let direct = rule.integrate(|s| crate::absorption::bilinear(f.sigma(), n, flow(z, t0 + s).x()));
            assert!((ray_integral(f.sigma(), n, z, t0, &rule) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn capped_integral_agrees_or_exceeds() {
        let f = band_field();
        let n = f.grid().n_x();
        let rule = RayRule::new(1.37, 0.01);
        for (x, th) in [([0.3, 0.9], 0.4), ([0.5, 0.1], 1.2), ([0.5, 0.1], 0.0)] {
            let z = PhasePoint::new(x, th);
            let full = ray_integral(f.sigma(), n, z, 0.0, &rule);
            assert_eq!(ray_integral_capped(f.sigma(), n, z, &rule, f64::INFINITY), Some(full));
            assert_eq!(ray_integral_capped(f.sigma(), n, z, &rule, full), Some(full));
            if full > 0.0 {
                assert_eq!(ray_integral_capped(f.sigma(), n, z, &rule, 0.5 * full), None);
            }
        }
    }

    #[test]
    fn constant_integrand() {
        let f = build_sigma(GridSpec::new(16, 8).unwrap(), &SupportRegion::full(), 0.05, 1.0).unwrap();
        let v = line_integral(&f, PhasePoint::new([0.3, 0.7], 0.4), 2.0, 0.01);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trapped_horizontal_ray_sees_nothing() {
        let f = band_field();
        for t in [0.5, 2.0, 7.0] {
            assert_eq!(line_integral(&f, PhasePoint::new([0.5, 0.1], 0.0), t, 0.01), 0.0);
        }
    }

    #[test]
    fn vertical_crossing_of_band() {
        // sharp band of width 1/3; the smoothstep transition on each side has
        // the same mass as a sharp edge at its midpoint, so the mollified
        // crossing length is 1/3 - w
        let f = band_field();
        let v = line_integral(&f, PhasePoint::new([0.5, 0.1], FRAC_PI_2), 1.0, 0.0025);
        let oracle = 1.0 / 3.0 - 0.04;
        assert!((v - oracle).abs() < 2e-3, "{v} vs {oracle}");
    }

    #[test]
    fn additive_in_time() {
        let f = band_field();
        let z = PhasePoint::new([0.21, 0.13], 0.7);
        let h = 0.01;
        let whole = line_integral(&f, z, 2.0, h);
        let first = line_integral(&f, z, 1.0, h);
        let second = line_integral(&f, flow(z, 1.0), 1.0, h);
        assert!((whole - first - second).abs() < 1e-10);
    }

    #[test]
    fn partial_panel_is_monotone() {
        let f = band_field();
        let z = PhasePoint::new([0.5, 0.2], 1.2);
        let mut last = 0.0;
        for k in 0..400 {
            let v = line_integral(&f, z, 0.003 * k as f64, 0.01);
            assert!(v >= last - 1e-15);
            last = v;
        }
    }

    #[test]
    fn flow_preserves_sampled_measure() {
        let f = band_field();
        let n = f.grid().n_x();
        let total: f64 = f.sigma().iter().sum();
        for (th, t) in [(0.3, 0.77), (2.0, 1.3), (4.4, 0.05)] {
            let mut moved = 0.0;
            for i1 in 0..n {
                for i2 in 0..n {
                    let z = PhasePoint::new([i1 as f64 / n as f64, i2 as f64 / n as f64], th);
                    moved += f.sigma_at(flow(z, t).x());
                }
            }
            assert!((moved - total).abs() / total < 10.0 / (n * n) as f64);
        }
    }
}
