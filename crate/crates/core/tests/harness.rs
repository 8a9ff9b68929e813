use std::path::Path;

use growup_core::cutoff::Cutoff;
use growup_core::diagnostics::stationary_residuals;
use growup_core::harness::config::RunConfig;
use growup_core::harness::io::read_checkpoint;
use growup_core::harness::run::SNAPSHOT_DIR;
use growup_core::harness::{self, report_from_dir, sweep, validate_series, SweepSpec, Termination};
use growup_core::{Error, RadialGrid};

/// A shipped configuration with `("table.key", value)` overrides.
fn config(name: &str, overrides: &[(&str, toml::Value)]) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let mut table: toml::Table = std::fs::read_to_string(&path).unwrap().parse().unwrap();
    for (key, value) in overrides {
        let (section, field) = key.split_once('.').unwrap();
        let entry = table.entry(section).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        entry.as_table_mut().unwrap().insert(field.to_string(), value.clone());
    }
    RunConfig::from_toml_str(&toml::to_string(&table).unwrap(), name).unwrap()
}

#[test]
fn subcritical_run_end_to_end() {
    let cfg = config("subcritical_05.toml", &[]);
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let outcome = harness::run(&cfg, &dir).unwrap();
    let r = &outcome.report;
    assert_eq!(outcome.exit_code(), 0);
    assert_eq!(r.growth.verdict.as_str(), "bounded");
    assert_eq!(r.f_trend.verdict.as_str(), "bounded_below");
    assert_eq!(r.energy_branch, "bounded_energy");
    assert_eq!(format!("{:?}", r.stationary_limit_verdict), "Consistent");
    assert!(r.mass_identities.w_gap <= 1e-6 * r.delta_weight.u0_mass);

    // the bounded limit is the uniform state, so m̂ is the uniform share of the smallest cutoff
    let grid = RadialGrid::new(1.0, 512).unwrap();
    let r_min = *r.delta_weight.radii.last().unwrap();
    let phi = Cutoff::build(&grid, r_min, 8).unwrap();
    let share: f64 = phi.phi().iter().zip(grid.cell_areas()).map(|(p, a)| p * a).sum::<f64>() / grid.disk_area();
    let m_hat = r.delta_weight.m_hat.unwrap();
    let uniform = r.delta_weight.u0_mass * share;
    assert!((m_hat - uniform).abs() <= 1e-3 * uniform, "{m_hat} vs {uniform}");

    // stationary residuals shrink over the last decade of snapshots
    let mut residuals = vec![];
    for (k, &t) in cfg.snapshot_times().iter().enumerate() {
        if t >= 0.1 * cfg.time.t_end {
            let (_, s) = read_checkpoint(&dir.join(SNAPSHOT_DIR).join(format!("snap_{k}.csv"))).unwrap();
            residuals.push((t, stationary_residuals(&grid, &s, r.stationary.rho_cut)));
        }
    }
    // the run converges well inside the decade; below `floor` the residuals are rounding noise
    let floor = 1e-9 * (1.0 + r.delta_weight.u0_mass);
    assert!(residuals.len() >= 3);
    for pair in residuals.windows(2) {
        let (a, b) = (&pair[0].1, &pair[1].1);
        for (x, y) in [(a.res1, b.res1), (a.res2, b.res2), (a.res3, b.res3)] {
            assert!(y <= x || y <= floor, "{pair:?}");
        }
    }

    // time suprema are finite and pinned
    let m = &r.monitors;
    assert!(m.pointwise_w_sup.is_finite());
    assert!(m.mt_ratio_min.iter().chain(&m.mt_ratio_max).all(|x| x.is_finite()));
    let pin = |x: f64, v: f64| assert!((x - v).abs() <= 1e-6 * v.abs(), "{x} drifted from {v}");
    pin(m.pointwise_w_sup, PIN_POINTWISE_W_SUP);
    pin(m.mt_ratio_max[0], PIN_MT_RATIO_MAX);
    pin(m.mt_ratio_min[0], PIN_MT_RATIO_MIN);

    assert!(validate_series(&dir.join(&cfg.output.csv)).unwrap().ok());
    // NaN fields make the serialized form the right comparison
    assert_eq!(report_from_dir(&dir).unwrap().to_toml_string(), r.to_toml_string());
}

// regression values of the 0.5·8π run at r = R/4
const PIN_POINTWISE_W_SUP: f64 = 3.9986974925782897;
const PIN_MT_RATIO_MAX: f64 = 2.7994122684402685;
const PIN_MT_RATIO_MIN: f64 = -1.2005877317029983;

#[test]
fn stiffness_collapse_still_reports() {
    let cfg = config(
        "supercritical.toml",
        &[("domain.cells", 256.into()), ("time.t_end", 1.0.into()), ("solver.dt_floor", 1e-3.into()), ("solver.stiff_steps", 3.into())],
    );
    let tmp = tempfile::tempdir().unwrap();
    let outcome = harness::run(&cfg, tmp.path()).unwrap();
    assert_eq!(outcome.report.status.termination, Termination::Stiffness);
    assert_eq!(outcome.exit_code(), 4);
    assert_eq!(outcome.report.growth.verdict.as_str(), "numerically_collapsed");
    assert!(validate_series(&tmp.path().join(&cfg.output.csv)).unwrap().ok());
    assert_eq!(report_from_dir(tmp.path()).unwrap().to_toml_string(), outcome.report.to_toml_string());
}

#[test]
fn report_rejects_foreign_checkpoint() {
    let cfg = config("constant.toml", &[]);
    let tmp = tempfile::tempdir().unwrap();
    harness::run(&cfg, tmp.path()).unwrap();
    let path = tmp.path().join("config.toml");
    let edited = std::fs::read_to_string(&path).unwrap().replace("t_end = 5.0", "t_end = 6.0");
    std::fs::write(&path, edited).unwrap();
    assert!(matches!(report_from_dir(tmp.path()), Err(Error::Format { .. })));
}

#[test]
fn subcritical_sweep_rows_are_bounded() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = SweepSpec::new(config("subcritical_05.toml", &[]), vec![0.9, 0.5], tmp.path().to_path_buf()).unwrap();
    let rows = sweep(&spec).unwrap();
    assert_eq!(rows.iter().map(|r| r.multiplier).collect::<Vec<_>>(), [0.5, 0.9]);
    for row in &rows {
        assert_eq!(row.growth_verdict, "bounded", "{row:?}");
        assert_eq!(row.termination, "completed");
    }
    let summary = std::fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn heavy_sweep_row_collapses() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = SweepSpec::new(config("supercritical.toml", &[]), vec![4.0], tmp.path().to_path_buf()).unwrap();
    let rows = sweep(&spec).unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!(row.growth_verdict, "numerically_collapsed", "{row:?}");
    assert_eq!(row.termination, "stiffness");
    assert_eq!(row.eightpi_attained, Some(true));
    assert!(row.locus.is_some_and(|l| l < 0.01), "{row:?}");
}
