//! The five run commands. Each writes its files into `output.dir` and
//! returns the report text; reports always start with the config echo.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{DatumKind, RunConfig, ScenarioSource};
use super::io::{gnuplot_script, read_series_csv, read_sigma_matrix, write_raw, write_series_csv, write_text};
use crate::absorption::{build_sigma, AbsorptionField, Construction, SupportRegion};
use crate::bogovskii::{
    bogovskii_solve_data, estimate_c_d, random_datum, BumpWeight, CdEstimate, Datum, DivergenceSolution,
    StarDomain,
};
use crate::characteristics::{
    build_psi, certify_gcc, component_reachability, normalize_chi, GccCertificate, GccSampling, ReachSampling,
};
use crate::criterion::{
    decay_from_lambda, energy_ledger, format_rows, issue_certificate, measure_lambda, run_checks, verify_quant,
    CertificateConfig, CheckContext, ConstantsLedger, InequalityRow, Status,
};
use crate::diagnostics::fit_decay;
use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::grid::GridSpec;
use crate::initial::initial_registry;
use crate::scenario::scenario_registry;
use crate::solver::{evolve, RunReport, SolverConfig};

/// Files written by a command and its report.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub files: Vec<PathBuf>,
}

/// Aligned `key  value` text with section headings.
#[derive(Debug, Default)]
struct Report(String);

impl Report {
    fn new(command: &str, config: &RunConfig) -> Self {
        let mut r = Report(format!("hypolab {command}\n"));
        r.section("config");
        for line in config.to_toml().lines() {
            let _ = writeln!(r.0, "  {line}");
        }
        r
    }

    fn section(&mut self, title: &str) {
        let _ = writeln!(self.0, "\n[{title}]");
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "  {key:<28} {value}");
    }

    fn block(&mut self, text: &str) {
        for line in text.lines() {
            let _ = writeln!(self.0, "  {line}");
        }
    }
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        write_text(&p, text)
    }

    fn raw(&mut self, name: &str, dims: &[usize], values: &[f64]) -> Result<()> {
        let p = self.path(name);
        write_raw(&p, dims, values)
    }
}

/// Field, horizon and solver settings resolved from a config.
pub struct Setup {
    pub field: AbsorptionField,
    pub region: Option<SupportRegion>,
    pub source: String,
    pub t_star: f64,
    pub solver: SolverConfig,
    pub sampling: GccSampling,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let grid = GridSpec::new(config.grid.n_x, config.grid.n_theta)?;
        let sc = &config.scenario;
        let (field, region, source) = match sc.source()? {
            ScenarioSource::Preset(name) => {
                let region = scenario_registry().get(&name)?.region();
                let f = build_sigma(grid, &region, sc.smoothing_width, sc.amplitude)?;
                (f, Some(region), format!("preset {name}"))
            }
            ScenarioSource::Shapes(shapes) => {
                let region = SupportRegion::new(shapes)?;
                let f = build_sigma(grid, &region, sc.smoothing_width, sc.amplitude)?;
                (f, Some(region), "explicit shapes".to_string())
            }
            ScenarioSource::Raw(path) => {
                let sigma = read_sigma_matrix(&path, grid.n_x())?;
                (AbsorptionField::from_raw(grid, sigma)?, None, format!("raw {}", path.display()))
            }
        };
        let s = &config.solver;
        let solver = SolverConfig {
            dt: s.dt.unwrap_or_else(|| SolverConfig::default_dt(field.sigma_sup())),
            t_end: s.t_end,
            record_every: s.record_every,
            zero_mass: s.zero_mass,
        };
        solver.validate()?;
        let mut sampling = GccSampling::for_field(&field);
        let g = &config.gcc;
        sampling.positions = g.positions.unwrap_or(sampling.positions);
        sampling.angles = g.angles.unwrap_or(sampling.angles);
        sampling.dt_quad = g.dt_quad.unwrap_or(sampling.dt_quad);
        sampling.threshold = g.threshold;
        Ok(Self {
            field,
            region,
            source,
            t_star: config.resolved_t_star()?,
            solver,
            sampling,
        })
    }

    pub fn initial(&self, config: &RunConfig) -> Result<DensityField> {
        let preset = initial_registry();
        preset
            .get(&config.initial.preset)?
            .build(self.field.grid(), &config.initial.params(config.seed))
    }

    pub fn gcc(&self) -> Result<GccCertificate> {
        certify_gcc(&self.field, self.t_star, &self.sampling)
    }

    /// Field with χ normalized and its formula constants, when σ was built
    /// from shapes and χ has a positive minimal ray integral.
    pub fn normalized(&self, margin: f64) -> Result<Option<(AbsorptionField, ConstantsLedger)>> {
        if !matches!(self.field.construction(), Construction::Shapes { .. }) {
            return Ok(None);
        }
        match normalize_chi(&self.field, self.t_star, &self.sampling, margin) {
            Ok((f, _)) => {
                let ledger = ConstantsLedger::for_field(&f, self.t_star);
                Ok(Some((f, ledger)))
            }
            Err(Error::NotCertified { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn describe(&self, r: &mut Report) {
        let f = &self.field;
        r.section("field");
        r.kv("source", &self.source);
        r.kv("grid", format!("{} x {} x {}", f.grid().n_x(), f.grid().n_x(), f.grid().n_theta()));
        r.kv("t_star", format!("{:.6e}", self.t_star));
        r.kv("dt", format!("{:.6e}", self.solver.dt));
        r.kv("sigma_sup", format!("{:.6e}", f.sigma_sup()));
        r.kv("sigma_mass", format!("{:.6e}", f.sigma_mass()));
        r.kv("good_set_area", format!("{:.6e}", f.good_set_area()));
        if let Some(w) = f.smoothing_width() {
            r.kv("smoothing_width", format!("{w:.6e}"));
        }
    }
}

fn gcc_status(r: &mut Report, gcc: &GccCertificate) {
    r.section("control condition");
    r.block(&gcc.to_string());
}

/// Measured entries of the ledger that follow from one run.
fn fill_ledger(ledger: &mut ConstantsLedger, run: &RunReport, t_star: f64, deltas: &[f64]) {
    let covers = run.last().t >= run.initial().t + t_star - 1e-9;
    if covers {
        if let Ok(lambda) = measure_lambda(run, t_star) {
            ledger.lambda = Some(lambda);
            if let Ok((c, l)) = decay_from_lambda(lambda, t_star) {
                ledger.big_c = Some(c);
                ledger.big_lambda = Some(l);
            }
        }
        ledger.c_delta = deltas.iter().map(|&d| (d, verify_quant(run, t_star, d).c_delta)).collect();
    }
    let e = energy_ledger(run);
    if e.dissipation_factor.is_finite() {
        ledger.dissipation_factor = Some(e.dissipation_factor);
    }
}

fn run_summary(r: &mut Report, run: &RunReport, t_star: f64) {
    let e = energy_ledger(run);
    let m0 = run.initial().mass;
    let drift = run.samples.iter().map(|s| (s.mass - m0).abs()).fold(0.0, f64::max);
    r.section("run");
    r.kv("steps", run.steps);
    r.kv("samples", run.samples.len());
    r.kv("t_end", format!("{:.6e}", run.last().t));
    r.kv("mass", format!("{m0:.17e}"));
    r.kv("mass_drift", format!("{drift:.3e}"));
    r.kv("l2_initial", format!("{:.17e}", run.initial().l2_sq.sqrt()));
    r.kv("l2_final", format!("{:.17e}", run.last().l2_sq.sqrt()));
    r.kv("energy_drop", format!("{:.10e}", e.drop));
    r.kv("dissipated", format!("{:.10e}", e.dissipated));
    r.kv("ledger_relative_error", format!("{:.3e}", e.relative_error));
    r.kv("dissipation_factor", format!("{:.6e}", e.dissipation_factor));
    match measure_lambda(run, t_star) {
        Ok(l) => r.kv("lambda_emp", format!("{l:.10e}")),
        Err(e) => r.kv("lambda_emp", format!("unavailable ({e})")),
    }
    r.section("decay fit");
    match fit_decay(&run.norm_series()) {
        Ok(fit) => {
            r.kv("Lambda_emp", format!("{:.10e}", fit.lambda_emp));
            r.kv("C_emp", format!("{:.10e}", fit.c_emp));
            r.kv("window", format!("[{:.4}, {:.4}]", fit.fit_window.0, fit.fit_window.1));
            r.kv("samples", fit.samples);
            r.kv("residual", format!("{:.3e}", fit.residual));
        }
        Err(e) => r.kv("status", format!("rejected ({e})")),
    }
}

fn run_files(w: &mut Writer<'_>, config: &RunConfig, run: &RunReport, f0: &DensityField, last: &DensityField) -> Result<()> {
    let grid = f0.grid();
    let dims = [grid.n_x(), grid.n_x(), grid.n_theta()];
    let csv = w.path("series.csv");
    write_series_csv(&csv, run)?;
    if config.output.gnuplot {
        w.text("series.gp", &gnuplot_script("series.csv"))?;
    }
    w.raw("initial.bin", &dims, f0.values())?;
    w.raw("final.bin", &dims, last.values())?;
    w.text("config.toml", &config.to_toml())
}

/// Builds σ, runs the solver and writes `series.csv`, `report.txt`, the
/// initial and final states, σ and the config.
pub fn cmd_simulate(config: &RunConfig) -> Result<Outcome> {
    let setup = Setup::new(config)?;
    let f0 = setup.initial(config)?;
    let (run, last) = evolve(&f0, &setup.field, &setup.solver, |_, _| {})?;
    let mut w = Writer::new(&config.output.dir)?;
    run_files(&mut w, config, &run, &f0, &last)?;
    let n = setup.field.grid().n_x();
    w.raw("sigma.bin", &[n, n], setup.field.sigma())?;

    let gcc = setup.gcc()?;
    let mut r = Report::new("simulate", config);
    setup.describe(&mut r);
    gcc_status(&mut r, &gcc);
    run_summary(&mut r, &run, setup.t_star);
    r.section("constants");
    match setup.normalized(config.gcc.chi_margin)? {
        Some((_, mut ledger)) => {
            fill_ledger(&mut ledger, &run, setup.t_star, &config.verify.deltas);
            r.block(&ledger.to_string());
        }
        None => r.kv("status", "chi not normalizable; formula constants unavailable"),
    }
    w.text("report.txt", &r.0)?;
    Ok(Outcome {
        report: r.0,
        files: w.files,
    })
}

/// Certifies the control condition and writes `gcc.txt` (and `psi.bin` when
/// `gcc.psi_slabs > 0`).
pub fn cmd_gcc(config: &RunConfig) -> Result<Outcome> {
    let setup = Setup::new(config)?;
    let gcc = setup.gcc()?;
    let mut w = Writer::new(&config.output.dir)?;
    let mut r = Report::new("gcc", config);
    setup.describe(&mut r);
    gcc_status(&mut r, &gcc);
    if let Some(region) = setup.region.as_ref().filter(|reg| reg.len() > 1) {
        let reach = component_reachability(region, setup.t_star, &ReachSampling::default());
        r.section("component reachability");
        for (i, row) in reach.hitting_times.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|t| format!("{t:.4e}")).collect();
            r.kv(&format!("from component {i}"), cells.join("  "));
        }
        r.kv("irreducible within t_star", reach.is_irreducible());
    }
    if config.gcc.psi_slabs > 0 {
        r.section("control weight");
        match setup.normalized(config.gcc.chi_margin)? {
            Some((normalized, _)) => {
                let psi = build_psi(&normalized, setup.t_star, config.gcc.psi_slabs, setup.sampling.dt_quad)?;
                let g = psi.grid();
                w.raw("psi.bin", &[psi.n_t(), g.n_x(), g.n_x(), g.n_theta()], psi.values())?;
                r.kv("time_slabs", psi.n_t());
                r.kv("min_denominator", format!("{:.6e}", psi.min_denominator()));
            }
            None => r.kv("status", "chi not normalizable; no weight written"),
        }
    }
    w.text("gcc.txt", &r.0)?;
    Ok(Outcome {
        report: r.0,
        files: w.files,
    })
}

/// Runs (or replays) a simulation and evaluates the configured inequality
/// checks into `verify.txt`. Fails only when a mandatory row fails.
pub fn cmd_verify(config: &RunConfig) -> Result<Outcome> {
    let (run_config, stored) = match &config.verify.run_dir {
        Some(dir) => {
            let mut c = RunConfig::load(&dir.join("config.toml"))?;
            c.verify = config.verify.clone();
            c.output = config.output.clone();
            (c, Some(dir.join("series.csv")))
        }
        None => (config.clone(), None),
    };
    let setup = Setup::new(&run_config)?;
    let f0 = setup.initial(&run_config)?;
    let (run, last) = evolve(&f0, &setup.field, &setup.solver, |_, _| {})?;
    let mut w = Writer::new(&config.output.dir)?;
    run_files(&mut w, &run_config, &run, &f0, &last)?;

    let mut r = Report::new("verify", &run_config);
    setup.describe(&mut r);
    let gcc = setup.gcc()?;
    gcc_status(&mut r, &gcc);
    let mut rows: Vec<InequalityRow> = Vec::new();
    if let Some(stored) = stored {
        let reproduced = read_series_csv(&w.dir.join("series.csv"))? == read_series_csv(&stored)?;
        let status = if reproduced { Status::Pass } else { Status::Fail };
        rows.push(
            InequalityRow::with_status("replay matches stored series", 0.0, 0.0, status)
                .mandatory()
                .note(stored.display().to_string()),
        );
    }
    let normalized = setup.normalized(run_config.gcc.chi_margin)?;
    let (field, ledger) = match &normalized {
        Some((f, l)) => (f, Some(l)),
        None => (&setup.field, None),
    };
    let ctx = CheckContext {
        run: &run,
        field,
        ledger,
        t_star: setup.t_star,
        initial: &f0,
        last: &last,
        solver: &setup.solver,
        deltas: &config.verify.deltas,
    };
    rows.extend(run_checks(&config.verify.inequalities, &ctx)?);
    r.section("inequalities");
    r.block(&format_rows(&rows));
    if let Some(mut ledger) = ledger.cloned() {
        fill_ledger(&mut ledger, &run, setup.t_star, &config.verify.deltas);
        r.section("constants");
        r.block(&ledger.to_string());
    }
    let failed: Vec<&str> = rows
        .iter()
        .filter(|row| row.mandatory && !row.passed())
        .map(|row| row.name.as_str())
        .collect();
    r.section("verdict");
    r.kv(
        "mandatory identities",
        if failed.is_empty() { "pass".to_string() } else { format!("FAIL ({})", failed.join(", ")) },
    );
    w.text("verify.txt", &r.0)?;
    if !failed.is_empty() {
        return Err(Error::MandatoryCheck(failed.join(", ")));
    }
    Ok(Outcome {
        report: r.0,
        files: w.files,
    })
}

/// Issues `(C, Λ)` from an ensemble and checks held-out runs; writes
/// `certificate.txt` and fails when the configured form of the bound is violated.
pub fn cmd_certificate(config: &RunConfig) -> Result<Outcome> {
    let setup = Setup::new(config)?;
    let gcc = setup.gcc()?;
    let mut w = Writer::new(&config.output.dir)?;
    let mut r = Report::new("certificate", config);
    setup.describe(&mut r);
    gcc_status(&mut r, &gcc);
    if !gcc.is_uniform() {
        r.section("decay certificate");
        r.kv("status", "not issued: uniform GCC not certified");
        w.text("certificate.txt", &r.0)?;
        return Err(Error::NotCertified { c_min: gcc.c_min });
    }
    let c = &config.certificate;
    let cert_config = CertificateConfig {
        ensemble_size: c.ensemble_size,
        held_out: c.held_out,
        seed: config.seed,
        max_wavenumber: c.max_wavenumber,
        max_angular_mode: c.max_angular_mode,
        bump_width: c.bump_width,
        power_iterations: c.power_iterations,
        held_out_horizon: c.horizon.unwrap_or(5.0 * setup.t_star),
        form: c.form,
        ..CertificateConfig::new(setup.t_star, setup.solver)
    };
    let cert = issue_certificate(&setup.field, &gcc, &cert_config)?;
    r.section("decay certificate");
    r.block(&cert.to_string());
    r.kv("checked form", format!("{:?}", c.form).to_lowercase());
    w.text("certificate.txt", &r.0)?;
    match cert.worst(c.form) {
        Some((seed, t, ratio)) if ratio > 1.0 + 1e-12 => Err(Error::HeldOutViolation { seed, t, ratio }),
        _ => Ok(Outcome {
            report: r.0,
            files: w.files,
        }),
    }
}

/// Named domain presets.
pub fn domain_preset(name: &str, resolution: usize) -> Result<StarDomain> {
    match name {
        "disk" => StarDomain::disk(resolution),
        "square" => StarDomain::square(resolution),
        "thin-rectangle" => StarDomain::thin_rectangle(resolution),
        "l-shape" => StarDomain::l_shape(resolution),
        _ => Err(Error::Unknown {
            kind: "domain",
            name: name.to_string(),
        }),
    }
}

fn bogovskii_domain(config: &RunConfig, resolution: usize) -> Result<StarDomain> {
    let b = &config.bogovskii;
    match (b.shape, b.ball) {
        (Some(shape), Some(ball)) => StarDomain::new(shape, ball, resolution),
        _ => domain_preset(&b.domain, resolution),
    }
}

fn estimate(config: &RunConfig, domain: &StarDomain) -> Result<(CdEstimate, Vec<Vec<f64>>)> {
    let b = &config.bogovskii;
    let ensemble: Vec<Vec<f64>> = (0..b.ensemble as u64)
        .map(|k| random_datum(domain, b.modes, config.seed.wrapping_add(k)))
        .collect();
    let est = estimate_c_d(domain, &ensemble, &BumpWeight::normalized(domain.ball))?;
    Ok((est, ensemble))
}

fn solution_rows(r: &mut Report, label: &str, s: &DivergenceSolution, spacing: f64) {
    r.kv(
        label,
        format!(
            "|h| {:.6e}  |F|_H1 {:.6e}  ratio {:.6e}  residual {:.3e}  boundary {:.3e} ({:.3e} h|h|)",
            s.h_norm,
            s.f_h1,
            s.c_d_witness,
            s.residual,
            s.boundary_max,
            s.boundary_constant(spacing)
        ),
    );
}

/// Solves `∇·F = h` on a star-shaped domain; writes `divergence.txt` and the
/// datum and field components of the first solution.
pub fn cmd_bogovskii(config: &RunConfig) -> Result<Outcome> {
    let b = &config.bogovskii;
    let domain = bogovskii_domain(config, b.resolution)?;
    let weight = BumpWeight::normalized(domain.ball);
    let spacing = domain.spacing();
    let mut w = Writer::new(&config.output.dir)?;
    let mut r = Report::new("bogovskii", config);
    r.section("domain");
    r.kv("shape", format!("{:?}", domain.shape));
    r.kv("ball", format!("center {:?}, radius {}", domain.ball.center, domain.ball.radius));
    r.kv("mesh", format!("{} x {}, spacing {:.6e}", domain.mesh.dims[0], domain.mesh.dims[1], spacing));
    r.kv("inside_cells", domain.mesh.inside.iter().filter(|&&i| i).count());

    let first = match b.datum {
        DatumKind::Zero => {
            let h = vec![0.0; domain.mesh.len()];
            let mut sols = bogovskii_solve_data(&domain, &[Datum::Cells(&h)], &weight)?;
            r.section("zero datum");
            let s = sols.remove(0);
            let max = s.f_field.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            r.kv("max |F|", format!("{max:.3e}"));
            s
        }
        DatumKind::Manufactured => {
            let fields = b.fields.clone();
            let h = move |y: [f64; 2]| fields.iter().map(|g| g.divergence(y)).sum::<f64>();
            let mut sols = bogovskii_solve_data(&domain, &[Datum::Function(&h)], &weight)?;
            r.section("manufactured datum");
            for g in &b.fields {
                let inside = (0..64).all(|k| {
                    let a = std::f64::consts::TAU * k as f64 / 64.0;
                    domain.contains([g.center[0] + g.radius * a.cos(), g.center[1] + g.radius * a.sin()])
                });
                r.kv("field", format!("{g:?} support inside: {inside}"));
            }
            let s = sols.remove(0);
            solution_rows(&mut r, "solution", &s, spacing);
            s
        }
        DatumKind::Random => {
            let (est, ensemble) = estimate(config, &domain)?;
            r.section("C_D estimate");
            let sols = bogovskii_solve_data(&domain, &[Datum::Cells(&ensemble[0])], &weight)?;
            for (k, (wit, res)) in est.witnesses.iter().zip(&est.residuals).enumerate() {
                r.kv(&format!("member {k}"), format!("ratio {wit:.6e}  residual {res:.3e}"));
            }
            r.kv("C_D", format!("{:.6e}", est.c_d));
            if let Some(res2) = b.compare_resolution {
                let other = bogovskii_domain(config, res2)?;
                let (est2, _) = estimate(config, &other)?;
                let rel = (est2.c_d / est.c_d - 1.0).abs();
                r.kv(&format!("C_D at resolution {res2}"), format!("{:.6e}", est2.c_d));
                r.kv("relative change", format!("{rel:.3e} ({})", if rel <= 0.3 { "stable" } else { "UNSTABLE" }));
            }
            sols.into_iter().next().expect("one datum")
        }
    };
    let dims = domain.mesh.dims;
    w.raw("h.bin", &dims, &first.h_input)?;
    w.raw("f1.bin", &dims, &first.f_field[0])?;
    w.raw("f2.bin", &dims, &first.f_field[1])?;
    w.text("divergence.txt", &r.0)?;
    Ok(Outcome {
        report: r.0,
        files: w.files,
    })
}
