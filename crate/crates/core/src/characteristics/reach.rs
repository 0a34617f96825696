use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::absorption::SupportRegion;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachSampling {
    /// Candidate start positions per axis (kept when inside the component).
    pub positions: usize,
    pub angles: usize,
    /// March step along rays; should resolve the smallest component.
    pub step: f64,
    /// Longest hitting time searched, at least `t_star`.
    pub horizon: f64,
}

impl Default for ReachSampling {
    fn default() -> Self {
        Self {
            positions: 32,
            angles: 64,
            step: 0.005,
            horizon: 8.0,
        }
    }
}

/// Transport connectivity between the components of Σ.
#[derive(Debug, Clone, PartialEq)]
pub struct Reachability {
    pub t_star: f64,
    /// `matrix[i][j]`: a sampled ray from component i enters j within `t_star`.
    pub matrix: Vec<Vec<bool>>,
    /// Smallest sampled hitting time from i to j (`inf` if never within the horizon).
    pub hitting_times: Vec<Vec<f64>>,
    /// Smallest sampled horizon for which the matrix is irreducible.
    pub irreducible_t_star: Option<f64>,
}

impl Reachability {
    pub fn is_irreducible(&self) -> bool {
        strongly_connected(&self.hitting_times, self.t_star)
    }
}

fn strongly_connected(times: &[Vec<f64>], t: f64) -> bool {
    let k = times.len();
    let reach_all = |transpose: bool| {
        let mut seen = vec![false; k];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..k {
                let h = if transpose { times[j][i] } else { times[i][j] };
                if !seen[j] && h <= t {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    k == 0 || (reach_all(false) && reach_all(true))
}

/// Samples rays starting in each component and records when they first enter
/// every other component.
pub fn component_reachability(
    region: &SupportRegion,
    t_star: f64,
    sampling: &ReachSampling,
) -> Reachability {
    let shapes = region.components();
    let k = shapes.len();
    let horizon = sampling.horizon.max(t_star);
    let steps = (horizon / sampling.step).ceil() as usize;
    let p = sampling.positions;
    let hitting_times: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut best = vec![f64::INFINITY; k];
            best[i] = 0.0;
            for a in 0..sampling.angles {
                let th = TAU * a as f64 / sampling.angles as f64;
                let (v1, v2) = (th.cos(), th.sin());
                for i1 in 0..p {
                    for i2 in 0..p {
                        let x0 = [(i1 as f64 + 0.5) / p as f64, (i2 as f64 + 0.5) / p as f64];
                        if shapes[i].signed_distance(x0) >= 0.0 {
                            continue;
                        }
                        for s in 1..=steps {
                            let t = s as f64 * sampling.step;
                            if best.iter().all(|&b| b <= t) {
                                break;
                            }
                            let x = [x0[0] + t * v1, x0[1] + t * v2];
                            for (j, shape) in shapes.iter().enumerate() {
                                if t < best[j] && shape.signed_distance(x) < 0.0 {
                                    best[j] = t;
                                }
                            }
                        }
                    }
                }
            }
            best
        })
        .collect();
    let matrix = hitting_times
        .iter()
        .map(|row| row.iter().map(|&h| h <= t_star).collect())
        .collect();
    let mut candidates: Vec<f64> = hitting_times
        .iter()
        .flatten()
        .copied()
        .filter(|h| h.is_finite())
        .collect();
    candidates.sort_by(f64::total_cmp);
    let irreducible_t_star = candidates
        .into_iter()
        .find(|&t| strongly_connected(&hitting_times, t));
    Reachability {
        t_star,
        matrix,
        hitting_times,
        irreducible_t_star,
    }
}
