//! Thin helpers over `rustfft` for the tensor layouts used in this crate.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse plan pair of one length. Forward transforms are scaled by
/// `1/n`, inverse transforms are unscaled, so `inverse(forward(u)) = u`.
#[derive(Clone)]
pub struct PlanPair {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PlanPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlanPair").field("n", &self.n).finish()
    }
}

impl PlanPair {
    pub fn new(planner: &mut FftPlanner<f64>, n: usize) -> Self {
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Forward transform of every length-`n` chunk of `buf`, normalized.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
        let s = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= s;
        }
    }

    /// Inverse transform of every length-`n` chunk of `buf`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }
}

/// In-place transpose of a square `n × n` row-major block.
pub fn transpose_square(block: &mut [Complex64], n: usize) {
    debug_assert_eq!(block.len(), n * n);
    for r in 0..n {
        for c in (r + 1)..n {
            block.swap(r * n + c, c * n + r);
        }
    }
}

/// Transform along one axis of a row-major 3-tensor of the given shape.
pub fn transform_axis(
    data: &mut [Complex64],
    shape: [usize; 3],
    axis: usize,
    plan: &PlanPair,
    forward: bool,
) {
    assert_eq!(data.len(), shape[0] * shape[1] * shape[2]);
    assert_eq!(plan.len(), shape[axis]);
    let run = |line: &mut [Complex64]| {
        if forward {
            plan.forward(line)
        } else {
            plan.inverse(line)
        }
    };
    match axis {
        2 => run(data),
        _ => {
            let strides = [shape[1] * shape[2], shape[2], 1];
            let stride = strides[axis];
            let n = shape[axis];
            let (outer_axis, inner_axis) = if axis == 0 { (1, 2) } else { (0, 2) };
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for a in 0..shape[outer_axis] {
                for b in 0..shape[inner_axis] {
                    let base = a * strides[outer_axis] + b * strides[inner_axis];
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + k * stride];
                    }
                    run(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_is_involution() {
        let n = 4;
        let orig: Vec<Complex64> = (0..16).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let mut b = orig.clone();
        transpose_square(&mut b, n);
        assert_eq!(b[1], orig[4]);
        transpose_square(&mut b, n);
        assert_eq!(b, orig);
    }

    #[test]
    fn forward_is_normalized() {
        let mut planner = FftPlanner::new();
        let p = PlanPair::new(&mut planner, 8);
        let mut buf = vec![Complex64::new(1.0, 0.0); 8];
        p.forward(&mut buf);
        assert!((buf[0].re - 1.0).abs() < 1e-15);
        assert!(buf[1..].iter().all(|c| c.norm() < 1e-15));
    }
}
