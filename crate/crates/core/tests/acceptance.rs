//! Acceptance criteria A1–A8, end to end. Prints one PASS/FAIL line per
//! criterion with the measured values and exits non-zero if any fails.
//!
//! The long supercritical run executes on its own thread while the other
//! criteria run.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use growup_core::cutoff::Cutoff;
use growup_core::diagnostics::{stationary_residuals, EIGHT_PI};
use growup_core::functionals::{estimate_k_sob, sobolev_check_i, sobolev_ratio, FunctionalSample};
use growup_core::harness::config::RunConfig;
use growup_core::harness::init::init_fields;
use growup_core::harness::io::{read_checkpoint, read_series, write_checkpoint, CheckpointHeader};
use growup_core::harness::{self, validate_series, RunOutcome};
use growup_core::{Error, FieldState, RadialGrid, Solver, SolverConfig, StepController};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{bessel_j01, first_neumann_root};

#[derive(Default)]
struct Checks {
    notes: Vec<String>,
    failed: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.failed.push(what.clone());
        }
        self.notes.push(what);
    }

    fn fail(&mut self, what: impl Into<String>) {
        self.check(false, what);
    }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// Load a shipped configuration with `overrides` applied as `("table.key", value)`.
fn config_with(name: &str, overrides: &[(&str, toml::Value)]) -> RunConfig {
    let path = config_path(name);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut table: toml::Table = text.parse().unwrap();
    for (key, value) in overrides {
        let (section, field) = key.split_once('.').unwrap();
        let entry = table.entry(section).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        entry.as_table_mut().unwrap().insert(field.to_string(), value.clone());
    }
    RunConfig::from_toml_str(&toml::to_string(&table).unwrap(), &path.display().to_string()).unwrap()
}

fn run_in(config: &RunConfig, dir: &Path) -> (RunOutcome, Vec<FunctionalSample>) {
    let outcome = harness::run(config, dir).unwrap();
    let (_, samples) = read_series(&dir.join(&config.output.csv)).unwrap();
    (outcome, samples)
}

fn rel(x: f64, scale: f64) -> f64 {
    x / (scale.abs() + 1.0)
}

fn max(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, f64::max)
}

// ---------------------------------------------------------------- A1

fn a1() -> Checks {
    let mut c = Checks::default();
    let cfg = config_with(
        "subcritical_09.toml",
        &[
            ("init.v0_mode", "constant".into()),
            ("init.v0_constant", 2.0.into()),
            ("init.w0_mode", "constant".into()),
            ("init.w0_constant", 1.0.into()),
        ],
    );
    let grid = RadialGrid::new(cfg.domain.radius, cfg.domain.cells).unwrap();
    let mut state = init_fields(&grid, &cfg.init).unwrap();
    let (m_u, m_v, m_w) = (grid.integrate(&state.u), grid.integrate(&state.v), grid.integrate(&state.w));
    let w_cap = m_u.max(m_v).max(m_w) + 1e-8;
    let mut solver = Solver::new(grid.clone(), cfg.solver.clone()).unwrap();
    let mut controller = StepController::new();
    let (mut mass_err, mut v_err, mut w_excess) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..10_000 {
        let dt = controller.next_dt(&grid, &state, &cfg.solver, f64::INFINITY).unwrap();
        solver.step(&mut state, dt).unwrap();
        mass_err = mass_err.max((grid.integrate(&state.u) - m_u).abs() / m_u);
        let law = (-state.t).exp() * m_v - (-state.t).exp_m1() * m_u;
        v_err = v_err.max((grid.integrate(&state.v) - law).abs() / law);
        w_excess = w_excess.max(grid.integrate(&state.w) - w_cap);
    }
    c.check(state.cells() == 512 && state.step_count == 10_000, format!("N = 512, {} steps to t = {:.3}", state.step_count, state.t));
    c.check(mass_err <= 1e-12, format!("mass drift {mass_err:.2e} ≤ 1e-12"));
    c.check(v_err <= 1e-10, format!("v-law error {v_err:.2e} ≤ 1e-10"));
    c.check(w_excess <= 0.0, format!("max ∫w − (max initial mass + 1e-8) = {w_excess:.3e} ≤ 0"));
    c
}

// ---------------------------------------------------------------- A2

/// Decay rate of the first radial Neumann mode under pure diffusion.
fn mode_rate(cells: usize, dt: f64, theta: f64, alpha: f64) -> f64 {
    let grid = RadialGrid::new(1.0, cells).unwrap();
    let mode: Vec<f64> = grid.cell_centers().iter().map(|r| bessel_j01(alpha * r).0).collect();
    let u: Vec<f64> = mode.iter().map(|m| 1.0 + 0.5 * m).collect();
    let mean = grid.integrate(&u) / grid.disk_area();
    let norm: f64 = grid.integrate(&mode.iter().map(|m| m * m).collect::<Vec<_>>());
    let amplitude = |u: &[f64]| grid.integrate(&u.iter().zip(&mode).map(|(u, m)| (u - mean) * m).collect::<Vec<_>>()) / norm;
    let cfg = SolverConfig { chemotaxis: false, theta, dt_max: 1.0, ..SolverConfig::default() };
    let mut solver = Solver::new(grid.clone(), cfg).unwrap();
    let n = cells;
    let mut state = FieldState::new(u, vec![0.0; n], vec![0.0; n]);
    let a0 = amplitude(&state.u);
    let t_end = 0.1;
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        solver.step(&mut state, dt).unwrap();
    }
    (a0 / amplitude(&state.u)).ln() / state.t
}

fn a2() -> Checks {
    let mut c = Checks::default();
    let alpha = first_neumann_root();
    c.check((alpha - 3.8317).abs() < 1e-4, format!("α = {alpha:.10}"));
    let exact = alpha * alpha;
    let fine = 1e-5;
    let r512 = mode_rate(512, fine, 0.5, alpha);
    let r256 = mode_rate(256, fine, 0.5, alpha);
    let e512 = (r512 - exact).abs();
    let e256 = (r256 - exact).abs();
    c.check(e512 / exact <= 0.01, format!("rate {r512:.6} vs α² = {exact:.6} (rel {:.2e} ≤ 1e-2)", e512 / exact));
    c.check(e256 / e512 >= 3.5, format!("Δr-halving reduces error {:.2}× ≥ 3.5×", e256 / e512));
    let e_coarse = (mode_rate(512, 2e-3, 0.5, alpha) - r512).abs();
    let e_half = (mode_rate(512, 1e-3, 0.5, alpha) - r512).abs();
    c.check(e_coarse / e_half >= 3.5, format!("dt-halving reduces error {:.2}× ≥ 3.5×", e_coarse / e_half));
    c
}

// ---------------------------------------------------------------- A3 / A5

struct SubcriticalRun {
    name: &'static str,
    config: RunConfig,
    outcome: RunOutcome,
    samples: Vec<FunctionalSample>,
}

fn cutoff_index(config: &RunConfig, samples_radii: &[f64], radius: f64) -> usize {
    assert_eq!(config.cutoffs.exponent, 8, "criterion is stated for n = 8");
    samples_radii.iter().position(|&r| (r - radius).abs() < 1e-12).expect("cutoff r = R/4 is configured")
}

fn a3(runs: &[SubcriticalRun]) -> Checks {
    let mut c = Checks::default();
    for run in runs {
        let r = &run.outcome.report;
        c.check(
            r.growth.verdict.as_str() == "bounded",
            format!("{}: growth {}", run.name, r.growth.verdict.as_str()),
        );
        c.check(
            r.f_trend.verdict.as_str() == "bounded_below",
            format!("{}: F trend {}", run.name, r.f_trend.verdict.as_str()),
        );
        let lyap = max(run.samples.iter().map(|s| rel(s.lyap_defect, s.f.abs() + s.d)));
        c.check(lyap <= 1e-2, format!("{}: max Lyapunov defect {lyap:.2e} ≤ 1e-2·(|F|+D+1)", run.name));
        let jensen = run
            .samples
            .iter()
            .flat_map(|s| s.localized.iter().map(|l| l.jensen_gap / l.jensen_scale))
            .fold(f64::INFINITY, f64::min);
        c.check(jensen >= -1e-8, format!("{}: min jensen gap/scale {jensen:.2e} ≥ −1e-8", run.name));
        let (evaluated, failures) = sobolev_failures(std::slice::from_ref(&run.samples));
        c.check(failures == 0, format!("{}: Sobolev check failures {failures}/{evaluated}", run.name));
        c.check(r.status.t_final == 200.0, format!("{}: reached t = {}", run.name, r.status.t_final));
    }
    c
}

/// `(evaluations, failures)`; a non-evaluable slack (a zero in `u`) counts as a failure.
fn sobolev_failures(sets: &[Vec<FunctionalSample>]) -> (usize, usize) {
    let slacks = sets.iter().flatten().flat_map(|s| s.localized.iter().map(|l| l.sobolev_slack));
    slacks.fold((0, 0), |(n, bad), x| (n + 1, bad + usize::from(x.is_nan() || x < 0.0)))
}

fn max_loc_defect(samples: &[FunctionalSample], idx: usize) -> (f64, f64) {
    samples
        .iter()
        .map(|s| {
            let l = &s.localized[idx];
            (s.loc_defects[idx] / (l.f_phi.abs() + l.d_phi + 1.0), s.t)
        })
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a })
}

fn a5(runs: &[SubcriticalRun], root: &Path) -> Checks {
    let mut c = Checks::default();
    for run in runs {
        let (_, layout_radii) = radii_of(&run.config, &run.samples);
        let idx = cutoff_index(&run.config, &layout_radii, 0.25 * run.config.domain.radius);
        let (worst, at) = max_loc_defect(&run.samples, idx);
        c.check(worst <= 1e-2, format!("{}: max localized defect {worst:.2e} (t = {at:.3}) ≤ 1e-2", run.name));
    }
    // dt-halving on the early transient, where the defect peaks
    let base = &runs[0].config;
    let s = &base.solver;
    let short = |halvings: i32| {
        let f = 2f64.powi(-halvings);
        config_with(
            "subcritical_05.toml",
            &[
                ("time.t_end", 1.0.into()),
                ("time.sample_stride", 1.into()),
                ("solver.cfl", (s.cfl * f).into()),
                ("solver.dt_max", (s.dt_max * f).into()),
                ("solver.dt_init", (s.dt_init * f).into()),
                ("solver.dt_growth", (1.0 + (s.dt_growth - 1.0) * f).into()),
            ],
        )
    };
    let mut previous: Option<f64> = None;
    for h in 0..3 {
        let cfg = short(h);
        let (_, samples) = run_in(&cfg, &root.join(format!("a5_half{h}")));
        let (_, radii) = radii_of(&cfg, &samples);
        let (worst, _) = max_loc_defect(&samples, cutoff_index(&cfg, &radii, 0.25 * cfg.domain.radius));
        match previous {
            None => c.check(worst <= 1e-2, format!("dt/1: {worst:.2e}")),
            Some(p) => c.check(worst < p, format!("dt/{}: {worst:.2e} (ratio {:.2})", 1 << h, p / worst)),
        }
        previous = Some(worst);
    }
    c
}

fn radii_of(config: &RunConfig, samples: &[FunctionalSample]) -> (usize, Vec<f64>) {
    let ctx = harness::run::functional_context(config).unwrap();
    assert_eq!(ctx.cutoffs.len(), samples[0].localized.len());
    (ctx.cutoffs.len(), ctx.cutoffs.iter().map(|c| c.radius()).collect())
}

// ---------------------------------------------------------------- A4

fn a4(outcome: &RunOutcome) -> Checks {
    let mut c = Checks::default();
    let r = &outcome.report;
    let v = r.growth.verdict.as_str();
    c.check(v == "growing" || v == "numerically_collapsed", format!("growth {v} ({})", r.status.message));
    match r.locus.radius {
        Some(x) => c.check(x <= 2.0 * r.locus.dr, format!("locus {x:.3e} ≤ 2Δr = {:.3e}", 2.0 * r.locus.dr)),
        None => c.fail("no growup locus"),
    }
    match &r.eps_regularity {
        Some(e) => {
            let idx = e.radii.iter().position(|&x| (x - 0.05).abs() < 1e-12);
            let threshold_ok = e.threshold == 1.0 / (200.0 * e.k_sob * e.k_sob);
            c.check(threshold_ok, format!("threshold {:.4e} = 1/(200·K²), K = {:.4}", e.threshold, e.k_sob));
            match idx {
                Some(i) => c.check(e.attained[i], format!("ε-regularity at r = 0.05R: max ball mass {:.3}", e.max_ball_mass[i])),
                None => c.fail("ε-regularity radius 0.05R not configured"),
            }
        }
        None => c.fail("no ε-regularity section"),
    }
    match &r.eightpi {
        Some(e) => c.check(
            e.attained && e.max_mass_phi >= 0.95 * EIGHT_PI,
            format!("late M_φ(r = {}) = {:.3} ≥ 0.95·8π = {:.3}", e.radius, e.max_mass_phi, 0.95 * EIGHT_PI),
        ),
        None => c.fail("no 8π section"),
    }
    c.check(r.delta_weight.monotone, format!("delta-weight curve monotone: {:?}", r.delta_weight.masses));
    c.check(
        r.delta_weight.m_hat.is_some(),
        format!(
            "recorded: F trend {}, m̂ = {:?} vs ‖u₀‖₁ = {:.3}, branch {}",
            r.f_trend.verdict.as_str(),
            r.delta_weight.m_hat,
            r.delta_weight.u0_mass,
            r.energy_branch
        ),
    );
    c
}

// ---------------------------------------------------------------- A6

/// Deterministic positive probe fields unrelated to the family that fixes `K`.
fn inequality_probes(grid: &RadialGrid, count: usize) -> Vec<Vec<f64>> {
    let rr = grid.radius();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..count)
        .map(|k| {
            let floor = 10f64.powf(rng.gen_range(-8.0..0.0));
            let bumps: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..4))
                .map(|_| {
                    let center = if k % 3 == 0 { 0.0 } else { rng.gen_range(0.0..rr) };
                    let width = rr * 10f64.powf(rng.gen_range(-2.5..0.0));
                    (rng.gen_range(0.1..100.0), center, width)
                })
                .collect();
            let wave = rng.gen_range(0.0..0.9);
            let freq = rng.gen_range(1.0..20.0);
            grid.cell_centers()
                .iter()
                .map(|&r| {
                    let b: f64 = bumps.iter().map(|(a, c, s)| a * (-((r - c) / s).powi(2)).exp()).sum();
                    floor + b * (1.0 + wave * (freq * PI * r / rr).cos())
                })
                .collect()
        })
        .collect()
}

fn a6_static() -> Checks {
    let mut c = Checks::default();
    let mut verified = 0;
    for name in ["constant.toml", "subcritical_05.toml", "subcritical_09.toml", "supercritical.toml"] {
        let cfg = config_with(name, &[]);
        let grid = RadialGrid::new(cfg.domain.radius, cfg.domain.cells).unwrap();
        for &r in cfg.cutoff_radii() {
            match Cutoff::build(&grid, r, cfg.cutoffs.exponent) {
                Ok(cut) => {
                    let v = cut.verify();
                    verified += 1;
                    if !v.passed {
                        c.fail(format!("{name}: cutoff r = {r} failed verification {v:?}"));
                    }
                }
                Err(Error::Resolution(_)) => {}
                Err(e) => c.fail(format!("{name}: cutoff r = {r}: {e}")),
            }
        }
    }
    c.check(verified > 0, format!("{verified} resolvable cutoffs verified"));

    let g512 = RadialGrid::new(1.0, 512).unwrap();
    let g1024 = RadialGrid::new(1.0, 1024).unwrap();
    let k512 = estimate_k_sob(&g512, 0);
    let k1024 = estimate_k_sob(&g1024, 0);
    let drift = (k512.k_sob - k1024.k_sob).abs() / k1024.k_sob;
    c.check(drift <= 0.05, format!("K_sob {:.5} / {:.5} at N = 512 / 1024 (rel {drift:.2e} ≤ 5e-2)", k512.k_sob, k1024.k_sob));
    let ones = sobolev_ratio(&g512, &vec![1.0; 512]);
    let err = (ones - 1.0 / PI.sqrt()).abs();
    c.check(err <= 1e-3, format!("z ≡ 1 ratio {ones:.12} vs 1/√π (err {err:.1e} ≤ 1e-3)"));

    let cfg = config_with("subcritical_05.toml", &[]);
    let cutoffs: Vec<Cutoff> =
        cfg.cutoff_radii().iter().filter_map(|&r| Cutoff::build(&g512, r, cfg.cutoffs.exponent).ok()).collect();
    let probes = inequality_probes(&g512, 1000);
    let mut min_slack = f64::INFINITY;
    let mut failures = 0;
    for z in &probes {
        for cut in &cutoffs {
            let s = sobolev_check_i(&g512, z, cut, &k512);
            failures += usize::from(!s.passed);
            min_slack = min_slack.min(s.slack / s.rhs);
        }
    }
    c.check(
        failures == 0,
        format!("{} probe fields × {} cutoffs: {failures} failures, min slack/rhs {min_slack:.3e}", probes.len(), cutoffs.len()),
    );
    c
}

fn a6_states(c: &mut Checks, sets: &[Vec<FunctionalSample>]) {
    let (n, bad) = sobolev_failures(sets);
    c.check(n > 0 && bad == 0, format!("solver states: {bad} failures in {n} evaluations"));
}

// ---------------------------------------------------------------- A7

/// Radial profile of `−Δw + w = λe^w`, `w'(0) = w'(R) = 0`, sampled at the
/// cell centres, with the shooting parameter `w(0)` in `[lo, hi]`.
fn shooting_oracle(grid: &RadialGrid, lambda: f64, lo: f64, hi: f64) -> Vec<f64> {
    // RK4 on a mesh with 2m steps per cell so the centres are mesh points
    let m = 8;
    let h = grid.dr() / (2 * m) as f64;
    let steps = 2 * m * grid.cells();
    let rhs = |r: f64, w: f64, p: f64| (p, w - lambda * w.exp() - p / r);
    let integrate = |a: f64, keep: bool| {
        let c = a - lambda * a.exp();
        let (mut r, mut w, mut p) = (h, a + c * h * h / 4.0, c * h / 2.0);
        let mut out = Vec::new();
        for j in 1..steps {
            if keep && j % (2 * m) == m {
                out.push(w);
            }
            let (k1w, k1p) = rhs(r, w, p);
            let (k2w, k2p) = rhs(r + h / 2.0, w + h / 2.0 * k1w, p + h / 2.0 * k1p);
            let (k3w, k3p) = rhs(r + h / 2.0, w + h / 2.0 * k2w, p + h / 2.0 * k2p);
            let (k4w, k4p) = rhs(r + h, w + h * k3w, p + h * k3p);
            w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            r += h;
        }
        (p, out)
    };
    let (mut lo, mut hi) = (lo, hi);
    let sign_lo = integrate(lo, false).0.signum();
    assert_ne!(sign_lo, integrate(hi, false).0.signum(), "shooting bracket does not straddle a root");
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if integrate(mid, false).0.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    integrate(0.5 * (lo + hi), true).1
}

fn a7() -> Checks {
    let mut c = Checks::default();
    let grid = RadialGrid::new(1.0, 512).unwrap();
    let s = stationary_residuals(&grid, &FieldState::constant(512, 1.7, 1.7, 1.7), 4.0 * grid.dr());
    let worst = s.res1.max(s.res2).max(s.res3);
    c.check(worst <= 1e-10, format!("constant state: residuals {:.1e}, {:.1e}, {:.1e} ≤ 1e-10", s.res1, s.res2, s.res3));

    // λ = 0.1 on R = 3: the constants 0.112 and 3.577 solve the problem, and a
    // nonconstant branch has w(0) ≈ 2.12 and rises towards the boundary
    let lambda = 0.1;
    let grid = RadialGrid::new(3.0, 512).unwrap();
    let w = shooting_oracle(&grid, lambda, 2.0, 2.3);
    assert_eq!(w.len(), grid.cells());
    let u: Vec<f64> = w.iter().map(|w| lambda * w.exp()).collect();
    c.check((w[0] - w[511]).abs() > 1.0, format!("nonconstant oracle: w(0) = {:.6}, w(R) = {:.6}", w[0], w[511]));
    let state = FieldState::new(u.clone(), u, w);
    let s = stationary_residuals(&grid, &state, 4.0 * grid.dr());
    c.check(s.res1 == 0.0, format!("oracle res1 = {:e}", s.res1));
    c.check(s.res3 <= 1e-6, format!("oracle res3 = {:.2e} ≤ 1e-6 (res2 = {:.2e}, discretization)", s.res3, s.res2));
    c
}

// ---------------------------------------------------------------- A8

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn state_bits_equal(a: &FieldState, b: &FieldState) -> bool {
    same_bits(&a.u, &b.u)
        && same_bits(&a.v, &b.v)
        && same_bits(&a.w, &b.w)
        && a.t.to_bits() == b.t.to_bits()
        && a.step_count == b.step_count
        && same_bits(a.u0(), b.u0())
        && same_bits(a.v0(), b.v0())
        && same_bits(a.w0(), b.w0())
}

fn a8_determinism(root: &Path) -> Checks {
    let mut c = Checks::default();
    let cfg = config_with("subcritical_09.toml", &[("domain.cells", 128.into()), ("time.t_end", 2.0.into())]);
    let (da, db) = (root.join("a8_a"), root.join("a8_b"));
    harness::run(&cfg, &da).unwrap();
    harness::run(&cfg, &db).unwrap();
    for file in [cfg.output.csv.as_str(), cfg.output.report.as_str(), "checkpoint.csv", "late_snapshots.csv"] {
        let same = std::fs::read(da.join(file)).unwrap() == std::fs::read(db.join(file)).unwrap();
        c.check(same, format!("{file} byte-identical"));
    }

    let (head, state) = read_checkpoint(&da.join("checkpoint.csv")).unwrap();
    let copy = root.join("a8_copy.csv");
    write_checkpoint(&copy, &head, &state).unwrap();
    let bytes_same = std::fs::read(&copy).unwrap() == std::fs::read(da.join("checkpoint.csv")).unwrap();
    let (_, again) = read_checkpoint(&copy).unwrap();
    c.check(bytes_same && state_bits_equal(&state, &again), "checkpoint re-write byte-identical, state bit-exact");

    // a live state with awkward values
    let grid = RadialGrid::new(1.0, 64).unwrap();
    let init = config_with("subcritical_05.toml", &[("domain.cells", 64.into())]).init;
    let mut live = init_fields(&grid, &init).unwrap();
    let mut solver = Solver::new(grid.clone(), SolverConfig::default()).unwrap();
    for _ in 0..37 {
        solver.step(&mut live, 1.0 / 3.0 * 1e-3).unwrap();
    }
    let head = CheckpointHeader { radius: 1.0, cells: 64, config_hash: "live".into() };
    let path = root.join("a8_live.csv");
    write_checkpoint(&path, &head, &live).unwrap();
    let (h2, back) = read_checkpoint(&path).unwrap();
    c.check(h2 == head && state_bits_equal(&live, &back), "live state round trip bit-exact");
    c
}

fn a8_validate(c: &mut Checks, root: &Path) {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "series.csv") {
                files.push(path);
            }
        }
    }
    files.sort();
    let mut rows = 0;
    for f in &files {
        let v = validate_series(f).unwrap();
        rows += v.rows;
        if !v.ok() {
            c.fail(format!("{}: {:?}", f.display(), &v.violations[..v.violations.len().min(3)]));
        }
    }
    c.check(files.len() >= 8, format!("validate accepted {} series files ({rows} rows)", files.len()));
}

// ----------------------------------------------------------------

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    let started = Instant::now();
    let mut results: Vec<(&str, &str, Checks)> = Vec::new();

    let supercritical = {
        let dir = root.join("a4");
        std::thread::spawn(move || {
            let cfg = config_with("supercritical.toml", &[("output.csv", "series.csv".into())]);
            run_in(&cfg, &dir)
        })
    };

    results.push(("A1", "exact identities", a1()));
    results.push(("A2", "oracle accuracy", a2()));

    let runs: Vec<SubcriticalRun> = [("0.5·8π", "subcritical_05.toml"), ("0.9·8π", "subcritical_09.toml")]
        .into_iter()
        .map(|(name, file)| {
            let config = config_with(file, &[("output.csv", "series.csv".into())]);
            let (outcome, samples) = run_in(&config, &root.join(file.trim_end_matches(".toml")));
            SubcriticalRun { name, config, outcome, samples }
        })
        .collect();
    results.push(("A3", "subcritical boundedness", a3(&runs)));
    results.push(("A5", "localized Lyapunov identity", a5(&runs, &root)));
    let mut a6 = a6_static();
    results.push(("A7", "stationarity", a7()));
    let mut a8 = a8_determinism(&root);

    let (outcome, super_samples) = supercritical.join().expect("supercritical run panicked");
    results.push(("A4", "supercritical concentration", a4(&outcome)));
    let mut sets: Vec<Vec<FunctionalSample>> = runs.into_iter().map(|r| r.samples).collect();
    sets.push(super_samples);
    a6_states(&mut a6, &sets);
    results.push(("A6", "inequality suite", a6));
    a8_validate(&mut a8, &root);
    results.push(("A8", "determinism and I/O", a8));

    results.sort_by_key(|r| r.0);
    let mut all = true;
    println!();
    for (id, title, checks) in &results {
        let ok = checks.failed.is_empty();
        all &= ok;
        println!("{id} {title:<30} {}", if ok { "PASS" } else { "FAIL" });
        for n in &checks.notes {
            let mark = if checks.failed.contains(n) { "  ✗ " } else { "    " };
            println!("{mark}{n}");
        }
    }
    println!("acceptance: {} in {:.1?}", if all { "all criteria pass" } else { "FAILED" }, started.elapsed());
    if !all {
        std::process::exit(1);
    }
}
