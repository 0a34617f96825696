//! Acceptance suite: one verdict line per criterion, with the measured
//! numbers behind it. Oracles are computed here from first principles where
//! the criterion compares against one.
//!
//! Exit status is nonzero when a criterion fails that is not listed in
//! `KNOWN_RED` (each entry carries the reason printed with the summary).

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use hypolab::absorption::{build_sigma, smoothstep, AbsorptionField, SupportRegion};
use hypolab::app::{cmd_simulate, RunConfig};
use hypolab::bogovskii::{
    bogovskii_solve_data, estimate_c_d, random_datum, BumpWeight, CompactField, Datum, StarDomain,
};
use hypolab::characteristics::{build_psi, certify_gcc, flow, normalize_chi, GccSampling};
use hypolab::criterion::{
    energy_ledger, issue_certificate, measure_claim, measure_lambda,
    verify_following_windows, BoundForm, CertificateConfig, ConstantsLedger, MomentDecomposition,
};
use hypolab::criterion::moments::{biorthogonality, generator};
use hypolab::diagnostics::{fit_decay, fit_decay_window, micro_coercivity_defect, weighted_micro_coercivity};
use hypolab::error::Error;
use hypolab::field::DensityField;
use hypolab::grid::{GridSpec, PhasePoint};
use hypolab::initial::{bump, random_band_limited};
use hypolab::scenario::scenario_registry;
use hypolab::solver::{evolve, step_collision, step_transport, strang_step, RunReport, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N_X: usize = 64;
const N_THETA: usize = 32;
const DT: f64 = 0.01;
const T_STAR: f64 = 2.0;
const WIDTH: f64 = 0.05;
const PRESETS: [&str; 4] = ["uniform", "cross", "band", "two-disks"];

const KNOWN_RED: &[(u8, &str)] = &[(
    7,
    "the prescribed Λ = log(λ/(λ−1))/T bounds the decay of ‖g‖² (energy argument with D = −d/dt‖g‖²), \
     so applied to ‖g‖ it claims twice the supported rate; the squared reading holds (info line)",
)];

struct Verdict {
    pass: bool,
    lines: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            pass: true,
            lines: Vec::new(),
        }
    }

    /// Records a sub-check; any failing sub-check fails the criterion.
    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn info(&mut self, line: String) {
        self.lines.push(format!("info {line}"));
    }
}

fn grid() -> GridSpec {
    GridSpec::new(N_X, N_THETA).unwrap()
}

fn field(name: &str, g: GridSpec) -> AbsorptionField {
    let region = scenario_registry().get(name).unwrap().region();
    build_sigma(g, &region, WIDTH, 1.0).unwrap()
}

fn sampling(positions: usize, angles: usize) -> GccSampling {
    GccSampling {
        positions,
        angles,
        dt_quad: 0.25 * WIDTH,
        threshold: 1e-9,
    }
}

/// Desk-scale run of one preset with non-zero mass, and its formula
/// constants when χ can be normalized.
struct PresetRun {
    name: &'static str,
    field: AbsorptionField,
    f0: DensityField,
    last: DensityField,
    run: RunReport,
    ledger: Option<ConstantsLedger>,
}

fn preset_runs() -> &'static [PresetRun] {
    static RUNS: OnceLock<Vec<PresetRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        PRESETS
            .iter()
            .enumerate()
            .map(|(k, &name)| {
                let g = grid();
                let raw = field(name, g);
                let pert = random_band_limited(g, 3, 3, 11 + k as u64, 0.5).unwrap();
                let f0 = DensityField::constant(g, 1.0).combine(1.0, &pert, 1.0).unwrap();
                let (run, last) = evolve(&f0, &raw, &SolverConfig::new(DT, 2.0 * T_STAR, 5), |_, _| {}).unwrap();
                let normalized = normalize_chi(&raw, T_STAR, &GccSampling::for_field(&raw), 1e-3).ok();
                let ledger = normalized.as_ref().map(|(f, _)| ConstantsLedger::for_field(f, T_STAR));
                PresetRun {
                    name,
                    field: normalized.map_or(raw, |(f, _)| f),
                    f0,
                    last,
                    run,
                    ledger,
                }
            })
            .collect()
    })
}

/// `Σ f dx² dθ` and `Σ (f − mean)² dx² dθ`, summed directly.
fn mass_and_energy(f: &DensityField) -> (f64, f64) {
    let g = f.grid();
    let vol = g.dx() * g.dx() * g.dtheta();
    let mass: f64 = f.values().iter().sum::<f64>() * vol;
    let mean = mass / (TAU);
    let energy: f64 = f.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() * vol;
    (mass, energy)
}

fn c1_conservation() -> Verdict {
    let mut v = Verdict::new();
    for p in preset_runs() {
        let m0 = p.run.initial().mass;
        let drift = p.run.samples.iter().map(|s| (s.mass - m0).abs()).fold(0.0, f64::max) / m0.abs();
        let (direct0, _) = mass_and_energy(&p.f0);
        let (direct1, _) = mass_and_energy(&p.last);
        let direct = (direct1 - direct0).abs() / direct0.abs();
        v.check(
            drift <= 1e-12 && direct <= 1e-12,
            format!("{:<9} mass drift {drift:.2e} (recorded), {direct:.2e} (direct sum)", p.name),
        );
        let l2 = |k: usize| p.run.samples[k].l2_sq;
        let worst = (1..p.run.samples.len()).map(|k| l2(k) - l2(k - 1)).fold(f64::NEG_INFINITY, f64::max);
        v.check(
            worst <= 0.0,
            format!("{:<9} largest step change of ‖g‖² {worst:.3e} over {} samples", p.name, p.run.samples.len()),
        );
    }
    v
}

fn c2_energy_ledger() -> Verdict {
    let mut v = Verdict::new();
    for p in preset_runs() {
        let e = energy_ledger(&p.run);
        let (_, e0) = mass_and_energy(&p.f0);
        let (_, e1) = mass_and_energy(&p.last);
        let quad: f64 = p.run.samples.windows(2).map(|w| w[1].dissipation * (w[1].t - w[0].t)).sum();
        let direct = ((e0 - e1) - quad).abs() / e0;
        v.check(
            e.relative_error <= 1e-6 && direct <= 1e-6,
            format!(
                "{:<9} relative error {:.2e} (library), {direct:.2e} (direct energies against summed series)",
                p.name, e.relative_error
            ),
        );
        v.info(format!("{:<9} measured −d/dt‖g‖² / ∫σ|∂θg|² = {:.6}", p.name, e.dissipation_factor));
    }
    v
}

fn c3_substeps() -> Verdict {
    let mut v = Verdict::new();
    let g = grid();
    let f = random_band_limited(g, 5, 6, 3, 1.0).unwrap();
    let norm = |f: &DensityField| f.values().iter().map(|x| x * x).sum::<f64>();
    let moved = step_transport(&f, 0.37);
    let rel = (norm(&moved) - norm(&f)).abs() / norm(&f);
    v.check(rel <= 1e-12, format!("transport L² change {rel:.2e}"));
    // θ-independent profile is shifted exactly along each velocity
    let t = 0.37;
    let wave = DensityField::from_fn(g, |x1, x2, _| (TAU * (x1 + 2.0 * x2)).cos());
    let shifted = step_transport(&wave, t);
    let exact = DensityField::from_fn(g, |x1, x2, th| (TAU * (x1 - t * th.cos() + 2.0 * (x2 - t * th.sin()))).cos());
    let err = shifted.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    v.check(err <= 1e-12, format!("transport of cos 2π(x1+2x2) matches exact shift to {err:.2e}"));

    let cross = field("cross", g);
    let cos = DensityField::from_fn(g, |_, _, th| th.cos());
    let dt = 0.05;
    let out = step_collision(&cos, &cross, dt).unwrap();
    let mut worst: f64 = 0.0;
    let mut sites = 0;
    for i1 in 0..N_X {
        for i2 in 0..N_X {
            let s = cross.sigma_at_site(i1, i2);
            if s != 1.0 {
                continue;
            }
            sites += 1;
            for j in 0..N_THETA {
                let expect = (-s * dt).exp() * g.theta_coord(j).cos();
                worst = worst.max((out.get(i1, i2, j) - expect).abs());
            }
        }
    }
    v.check(
        worst <= 1e-12 && sites > 0,
        format!("collision maps cos θ to e^(−σdt) cos θ on {sites} constant-σ sites, error {worst:.2e}"),
    );

    let g = GridSpec::new(32, 16).unwrap();
    let sigma = field("cross", g);
    let f0 = random_band_limited(g, 3, 3, 5, 1.0).unwrap();
    let solve = |dt: f64| {
        let steps = (1.0 / dt).round() as usize;
        let mut f = f0.clone();
        for _ in 0..steps {
            f = strang_step(&f, &sigma, dt).unwrap();
        }
        f
    };
    let (a, b, c) = (solve(0.1), solve(0.05), solve(0.025));
    let diff = |x: &DensityField, y: &DensityField| x.combine(1.0, y, -1.0).unwrap().values().iter().map(|v| v * v).sum::<f64>().sqrt();
    let order = (diff(&a, &b) / diff(&b, &c)).log2();
    v.check((order - 2.0).abs() <= 0.2, format!("Strang self-convergence order {order:.3} (dt 0.1, 0.05, 0.025)"));
    v
}

/// Per-site Poincaré pair from the θ-Fourier coefficients, computed directly.
fn poincare_oracle(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let dth = TAU / n as f64;
    let mean = values.iter().sum::<f64>() / n as f64;
    let lhs: f64 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * dth;
    let mut rhs = 0.0;
    for m in 1..n / 2 {
        let (mut a, mut b) = (0.0, 0.0);
        for (j, &x) in values.iter().enumerate() {
            let th = j as f64 * dth;
            a += x * (m as f64 * th).cos() * dth / PI;
            b += x * (m as f64 * th).sin() * dth / PI;
        }
        rhs += (m * m) as f64 * PI * (a * a + b * b);
    }
    (lhs, rhs)
}

fn c4_poincare() -> Verdict {
    let mut v = Verdict::new();
    let g = GridSpec::new(8, 32).unwrap();
    let mut max_ratio: f64 = 0.0;
    let mut oracle_err: f64 = 0.0;
    for seed in 0..100u64 {
        let f = random_band_limited(g, 2, 12, 1000 + seed, 1.0).unwrap();
        for p in micro_coercivity_defect(&f) {
            if p.rhs > 0.0 {
                max_ratio = max_ratio.max(p.lhs / p.rhs);
            }
            if seed < 10 {
                let (l, r) = poincare_oracle(f.site(p.site.0, p.site.1));
                oracle_err = oracle_err.max((l - p.lhs).abs() / l.max(1e-300)).max((r - p.rhs).abs() / r.max(1e-300));
            }
        }
    }
    v.check(max_ratio <= 1.0 + 1e-10, format!("max lhs/rhs over 100 random fields x 64 sites: {max_ratio:.12}"));
    v.check(oracle_err <= 1e-10, format!("pairs agree with direct Fourier oracle to {oracle_err:.2e}"));
    let cos = DensityField::from_fn(g, |_, _, th| th.cos());
    let dev = micro_coercivity_defect(&cos)
        .iter()
        .map(|p| (p.lhs / p.rhs - 1.0).abs().max((p.lhs - PI).abs()))
        .fold(0.0, f64::max);
    v.check(dev <= 1e-10, format!("first harmonic: lhs = rhs = π at every site to {dev:.2e}"));
    let cross = field("cross", GridSpec::new(32, 32).unwrap());
    let f = random_band_limited(cross.grid(), 3, 6, 7, 1.0).unwrap();
    let weighted = weighted_micro_coercivity(&f, &cross);
    let wmax = weighted.iter().filter(|p| p.rhs > 0.0).map(|p| p.lhs / p.rhs).fold(0.0, f64::max);
    v.info(format!(
        "σ-weighted form on the cross good set ({} sites, σ_min = {}): max lhs/rhs {wmax:.6}",
        weighted.len(),
        cross.sigma_min_good()
    ));
    v
}

/// Minimal ray integral of the exact smoothed σ over a sampled family, by
/// composite Simpson with step `h`.
fn gcc_oracle(region: &SupportRegion, t_star: f64, positions: usize, angles: usize, h: f64) -> f64 {
    let sigma = |x: [f64; 2]| smoothstep(-region.signed_distance([x[0].rem_euclid(1.0), x[1].rem_euclid(1.0)]) / WIDTH);
    let panels = (t_star / h).ceil() as usize;
    let h = t_star / panels as f64;
    let mut best = f64::INFINITY;
    for a in 0..angles {
        let th = TAU * a as f64 / angles as f64;
        let (c, s) = (th.cos(), th.sin());
        for i1 in 0..positions {
            for i2 in 0..positions {
                let x = [i1 as f64 / positions as f64, i2 as f64 / positions as f64];
                let at = |t: f64| sigma([x[0] + t * c, x[1] + t * s]);
                let mut acc = 0.0;
                let mut prev = at(0.0);
                for k in 0..panels {
                    let t0 = k as f64 * h;
                    let next = at(t0 + h);
                    acc += h / 6.0 * (prev + 4.0 * at(t0 + 0.5 * h) + next);
                    prev = next;
                    if acc >= best {
                        break;
                    }
                }
                best = best.min(acc);
            }
        }
    }
    best
}

fn c5_gcc() -> Verdict {
    let mut v = Verdict::new();
    let g = grid();
    let s = sampling(32, 64);
    let uniform = certify_gcc(&field("uniform", g), T_STAR, &s).unwrap();
    v.check(
        (uniform.c_min - T_STAR).abs() <= 1e-12,
        format!("uniform: c_min = {:.15} (T* = {T_STAR})", uniform.c_min),
    );
    let band_field = field("band", g);
    let band = certify_gcc(&band_field, 4.0, &s).unwrap();
    let th = band.worst_point.theta();
    let horizontal = th.sin().abs() < 1e-12;
    let region = band_field.region().unwrap();
    v.check(
        band.c_min == 0.0 && horizontal && !region.contains(band.worst_point.x()) && !band.is_uniform(),
        format!(
            "band, T* = 4: c_min = {}, worst ray x = {:?}, θ = {th}",
            band.c_min,
            band.worst_point.x()
        ),
    );
    let cross_field = field("cross", g);
    let cross = certify_gcc(&cross_field, T_STAR, &s).unwrap();
    let oracle = gcc_oracle(cross_field.region().unwrap(), T_STAR, 64, 128, 0.5 * s.dt_quad);
    let rel = (cross.c_min - oracle).abs() / oracle;
    v.check(
        cross.c_min > 0.0 && rel <= 0.02,
        format!(
            "cross, T* = 2: c_min = {:.6}, doubled-sampling pointwise oracle {oracle:.6}, relative gap {rel:.2e}",
            cross.c_min
        ),
    );
    v
}

fn bilinear(table: &[f64], n: usize, x: [f64; 2]) -> f64 {
    let u = x[0].rem_euclid(1.0) * n as f64;
    let w = x[1].rem_euclid(1.0) * n as f64;
    let (i, j) = (u.floor() as usize % n, w.floor() as usize % n);
    let (a, b) = (u - u.floor(), w - w.floor());
    let at = |p: usize, q: usize| table[(p % n) * n + q % n];
    (1.0 - a) * (1.0 - b) * at(i, j) + a * (1.0 - b) * at(i + 1, j) + (1.0 - a) * b * at(i, j + 1) + a * b * at(i + 1, j + 1)
}

fn c6_psi() -> Verdict {
    let mut v = Verdict::new();
    let run = preset_runs().iter().find(|p| p.name == "cross").unwrap();
    let f = &run.field;
    let h = 0.25 * WIDTH;
    let psi = build_psi(f, T_STAR, 3, h).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xc6);
    let zs: Vec<PhasePoint> = (0..1000)
        .map(|_| PhasePoint::new([rng.random(), rng.random()], TAU * rng.random::<f64>()))
        .collect();
    let dev = zs.iter().map(|&z| (psi.trajectory_average(z) - 1.0).abs()).fold(0.0, f64::max);
    v.check(dev <= 1e-6, format!("max |∫ψ_t(Z_t z)dt − 1| over 1000 random z: {dev:.2e}"));
    // independent evaluation of ψ from the χ table on the same time nodes
    let n = f.grid().n_x();
    let steps = (T_STAR / h).ceil() as usize;
    let hh = T_STAR / steps as f64;
    let trap = |g: &dyn Fn(f64) -> f64| {
        (0..=steps).map(|k| g(k as f64 * hh) * if k == 0 || k == steps { 0.5 } else { 1.0 }).sum::<f64>() * hh
    };
    let mut gap: f64 = 0.0;
    for &z in zs.iter().take(100) {
        let chi_along = |t: f64| bilinear(f.chi(), n, flow(z, t).x());
        let psi_at = |t: f64| {
            let y = flow(z, t);
            let den = trap(&|s: f64| bilinear(f.chi(), n, flow(y, s - t).x()));
            chi_along(t) / den
        };
        gap = gap.max((trap(&psi_at) - psi.trajectory_average(z)).abs());
    }
    v.check(gap <= 1e-10, format!("library average agrees with direct evaluation to {gap:.2e} (100 z)"));
    let mut off = 0.0f64;
    for &z in zs.iter().take(50) {
        let fine = 4 * steps;
        let hf = T_STAR / fine as f64;
        let simpson: f64 = (0..fine / 2)
            .map(|k| {
                let t0 = 2.0 * k as f64 * hf;
                let e = |t: f64| psi.eval(t, flow(z, t));
                hf / 3.0 * (e(t0) + 4.0 * e(t0 + hf) + e(t0 + 2.0 * hf))
            })
            .sum();
        off = off.max((simpson - 1.0).abs());
    }
    v.info(format!("off-node Simpson quadrature of the same integral deviates by at most {off:.2e}"));
    v
}

fn c7_certificate() -> Verdict {
    let mut v = Verdict::new();
    for name in ["uniform", "cross", "two-disks"] {
        let f = field(name, grid());
        let gcc = certify_gcc(&f, T_STAR, &sampling(32, 64)).unwrap();
        let mut config = CertificateConfig::new(T_STAR, SolverConfig::new(DT, T_STAR, 10));
        config.seed = 2024;
        let cert = match issue_certificate(&f, &gcc, &config) {
            Ok(c) => c,
            Err(e) => {
                v.check(false, format!("{name:<9} no certificate: {e}"));
                continue;
            }
        };
        let issued = cert.big_c >= 1.0 && cert.big_lambda > 0.0;
        // same verdict rule as end_to_end_certificate
        let (seed, t, ratio) = cert.worst(BoundForm::Norm).unwrap();
        v.check(
            issued && ratio <= 1.0 + 1e-12,
            format!(
                "{name:<9} λ_ens {:.4}, C {:.4}, Λ {:.4}; worst ‖g_t‖/(C e^(−Λt)‖g_0‖) = {ratio:.4} (seed {seed}, t = {t:.2}), {} held-out runs",
                cert.lambda_ens,
                cert.big_c,
                cert.big_lambda,
                cert.held_out.len()
            ),
        );
        let (_, ts, rs) = cert.worst(BoundForm::Squared).unwrap();
        v.info(format!(
            "{name:<9} squared reading ‖g_t‖² ≤ C² e^(−Λt)‖g_0‖²: worst ratio {rs:.4} at t = {ts:.2} ({})",
            if rs <= 1.0 + 1e-12 { "holds" } else { "violated" }
        ));
    }
    v
}

fn c8_band() -> Verdict {
    let mut v = Verdict::new();
    let f = field("band", grid());
    let gcc = certify_gcc(&f, 4.0, &sampling(32, 64)).unwrap();
    let config = CertificateConfig::new(4.0, SolverConfig::new(DT, 4.0, 10));
    let refused = matches!(issue_certificate(&f, &gcc, &config), Err(Error::NotCertified { .. }));
    v.check(refused && !gcc.is_uniform(), format!("no uniform certificate (c_min = {})", gcc.c_min));
    let mut rates = Vec::new();
    for width in [0.2, 0.1, 0.05] {
        let f0 = bump(grid(), gcc.worst_point, width, 1.0).unwrap();
        let (run, _) = evolve(&f0, &f, &SolverConfig::new(DT, 6.0, 10), |_, _| {}).unwrap();
        let fit = fit_decay_window(&run.norm_series(), 1.0, 6.0).unwrap();
        rates.push(fit.lambda_emp);
    }
    let decreasing = rates.windows(2).all(|w| w[1] < w[0]);
    v.check(
        decreasing,
        format!("Λ_emp on [1, 6] for bump widths 0.2, 0.1, 0.05 at the trapped ray: {rates:.5?}"),
    );
    v
}

fn c9_following() -> Verdict {
    let mut v = Verdict::new();
    for p in preset_runs() {
        let Some(ledger) = &p.ledger else {
            v.info(format!("{:<9} not applicable: χ has no positive minimal ray integral (no uniform control)", p.name));
            continue;
        };
        let rows = verify_following_windows(&p.run, ledger);
        let worst = rows.iter().map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
        let ok = !rows.is_empty() && rows.iter().all(|r| r.passed());
        v.check(
            ok,
            format!(
                "{:<9} {} windows, C1 = {:.3}, C2 = {:.4}, largest lhs/rhs {worst:.4}",
                p.name,
                rows.len(),
                ledger.c1,
                ledger.c2
            ),
        );
    }
    v
}

fn c10_moments() -> Verdict {
    let mut v = Verdict::new();
    let b = biorthogonality(grid());
    let dev = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (b[i][j] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    v.check(dev <= 1e-12, format!("biorthogonality defect {dev:.2e}"));
    let cross = preset_runs().iter().find(|p| p.name == "cross").unwrap();
    let mut snaps: Vec<DensityField> = (0..5).map(|k| random_band_limited(grid(), 4, 4, 70 + k, 1.0).unwrap()).collect();
    snaps.push(cross.last.clone());
    let mut worst: f64 = 0.0;
    for f in &snaps {
        let d = MomentDecomposition::build(f, &cross.field).unwrap();
        let r = d.identity_residual(&generator(f, &cross.field).unwrap()).unwrap();
        let (_, e) = mass_and_energy(f);
        worst = worst.max(r.iter().cloned().fold(0.0, f64::max) / e.sqrt());
    }
    v.check(worst <= 1e-8, format!("identity residual / ‖g‖ over {} snapshots: {worst:.2e}", snaps.len()));
    let mut c3 = Vec::new();
    for n in [64, 128] {
        let g = GridSpec::new(n, N_THETA).unwrap();
        let raw = field("cross", g);
        let (f, _) = normalize_chi(&raw, T_STAR, &sampling(32, 64), 1e-3).unwrap();
        let f0 = random_band_limited(g, 3, 3, 1, 1.0).unwrap();
        let (m, _) = measure_claim(&f0, &f, &SolverConfig::new(DT, T_STAR, 10), T_STAR).unwrap();
        c3.push(m.c3);
    }
    let rel = (c3[1] - c3[0]).abs() / c3[0];
    v.check(rel <= 0.2, format!("C3 on cross: {:.4} (n_x 64), {:.4} (n_x 128), relative change {rel:.3}", c3[0], c3[1]));
    v
}

fn c11_bogovskii() -> Verdict {
    let mut v = Verdict::new();
    let g = CompactField {
        center: [0.2, -0.1],
        radius: 0.5,
        direction: [1.0, 0.5],
    };
    let h = move |y: [f64; 2]| g.divergence(y);
    let mut res = Vec::new();
    for n in [64, 128] {
        let d = StarDomain::disk(n).unwrap();
        let s = bogovskii_solve_data(&d, &[Datum::Function(&h)], &BumpWeight::normalized(d.ball)).unwrap().remove(0);
        let bound = d.spacing() * s.h_norm;
        v.check(
            s.boundary_max <= bound,
            format!("disk n = {n}: boundary max |F| {:.2e} ≤ spacing·‖h‖ = {bound:.2e}", s.boundary_max),
        );
        res.push(s.residual);
    }
    v.check(res[1] <= 1e-3, format!("manufactured residual at 128²: {:.2e} of ‖h‖", res[1]));
    let ratio = res[1] / res[0];
    v.check(ratio <= 0.6, format!("residual ratio under halving 64 → 128: {ratio:.3}"));

    let c_d = |d: &StarDomain| {
        let ens: Vec<Vec<f64>> = (0..8).map(|k| random_datum(d, 3, 500 + k)).collect();
        estimate_c_d(d, &ens, &BumpWeight::normalized(d.ball)).unwrap().c_d
    };
    let mut stable = |label: &str, a: StarDomain, b: StarDomain| {
        let (ca, cb) = (c_d(&a), c_d(&b));
        let rel = (cb / ca - 1.0).abs();
        v.check(
            rel <= 0.3 && ca.is_finite() && cb.is_finite(),
            format!("{label}: C_D {ca:.4} (n = {}), {cb:.4} (n = {}), relative change {rel:.3}", a.resolution, b.resolution),
        );
        (ca, cb)
    };
    stable("disk", StarDomain::disk(32).unwrap(), StarDomain::disk(64).unwrap());
    stable("L-shape", StarDomain::l_shape(32).unwrap(), StarDomain::l_shape(64).unwrap());
    let (thin, _) = stable("thin rectangle", StarDomain::thin_rectangle(128).unwrap(), StarDomain::thin_rectangle(256).unwrap());
    let square = c_d(&StarDomain::square(64).unwrap());
    v.check(
        thin > square && square.is_finite(),
        format!("thin rectangle C_D {thin:.4} > square C_D {square:.4} at equal spacing 1/32"),
    );
    v
}

fn c12_scaling() -> Verdict {
    let mut v = Verdict::new();
    let f = field("cross", grid());
    let f0 = random_band_limited(grid(), 3, 3, 12, 1.0).unwrap();
    let measure = |a: f64| {
        let (run, _) = evolve(&f0.scaled(a), &f, &SolverConfig::new(DT, 6.0, 5), |_, _| {}).unwrap();
        (measure_lambda(&run, T_STAR).unwrap(), fit_decay(&run.norm_series()).unwrap().lambda_emp)
    };
    let (l1, r1) = measure(1.0);
    for a in [0.5, 2.0, 10.0] {
        let (l, r) = measure(a);
        let (dl, dr) = ((l / l1 - 1.0).abs(), (r / r1 - 1.0).abs());
        v.check(dl <= 1e-10 && dr <= 1e-10, format!("scale {a:>4}: λ_emp change {dl:.2e}, Λ_emp change {dr:.2e}"));
    }
    v.info(format!("λ_emp {l1:.10}, Λ_emp {r1:.10} at scale 1"));
    v
}

fn c13_determinism() -> Verdict {
    let mut v = Verdict::new();
    let dir = tempfile::tempdir().unwrap();
    let text = |out: &str| {
        format!(
            "seed = 42\nscenario.preset = \"cross\"\nsolver.t_end = 2.0\nsolver.record_every = 5\noutput.dir = {:?}\n",
            dir.path().join(out).display().to_string()
        )
    };
    let a = RunConfig::parse(&text("a")).unwrap();
    let b = RunConfig::parse(&text("b")).unwrap();
    cmd_simulate(&a).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    pool.install(|| cmd_simulate(&b)).unwrap();
    let read = |p: &str| std::fs::read_to_string(dir.path().join(p).join("series.csv")).unwrap();
    let (ra, rb) = (read("a"), read("b"));
    let body = |s: &str| s.lines().skip(1).map(String::from).collect::<Vec<_>>();
    let headers = ra.starts_with("# generated") && rb.starts_with("# generated");
    v.check(
        headers && body(&ra) == body(&rb) && body(&ra).len() > 2,
        format!("{} CSV lines after the timestamp identical across two runs (second on 3 threads)", body(&ra).len()),
    );
    v
}

type Criterion = (u8, &'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 13] = [
        (1, "conservation", c1_conservation),
        (2, "energy ledger identity", c2_energy_ledger),
        (3, "exact sub-steps and Strang order", c3_substeps),
        (4, "Poincaré on S¹", c4_poincare),
        (5, "GCC certificates", c5_gcc),
        (6, "ψ trajectory invariant", c6_psi),
        (7, "decay certificate with held-out runs", c7_certificate),
        (8, "degenerate band scenario", c8_band),
        (9, "trajectory-transfer inequality", c9_following),
        (10, "moment decomposition", c10_moments),
        (11, "divergence right inverse", c11_bogovskii),
        (12, "scaling invariance", c12_scaling),
        (13, "determinism", c13_determinism),
    ];
    let filter: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (id, title, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict {
                pass: false,
                lines: vec![format!("FAIL panicked: {msg}")],
            }
        });
        println!(
            "criterion {id:>2} {}: {title} ({:.1} s)",
            if verdict.pass { "pass" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for line in &verdict.lines {
            println!("    {line}");
        }
        if !verdict.pass {
            failed.push(id);
        }
    }
    let unexpected: Vec<u8> = failed.iter().copied().filter(|id| !KNOWN_RED.iter().any(|(k, _)| k == id)).collect();
    println!("acceptance: {} of {ran} criteria pass", ran - failed.len());
    for (id, why) in KNOWN_RED {
        if failed.contains(id) {
            println!("known red {id}: {why}");
        } else if filter.is_empty() || filter.contains(id) {
            println!("note: criterion {id} is listed as known red but passed");
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
