//! One simulation from configuration to report.
//!
//! A run directory holds:
//!
//! | file                 | content                                         |
//! |----------------------|-------------------------------------------------|
//! | `config.toml`        | the resolved configuration                      |
//! | `<output.csv>`       | functional time series                          |
//! | `checkpoint.csv`     | final state                                     |
//! | `snapshots/snap_k.csv` | state at the k-th configured snapshot time    |
//! | `late_snapshots.csv` | retained `u` fields for the Cauchy distance     |
//! | `status.toml`        | termination cause                               |
//! | `<output.report>`    | the run report                                  |

use std::path::{Path, PathBuf};

use crate::diagnostics::resolvable_cutoffs;
use crate::error::{Error, Result};
use crate::functionals::{estimate_k_sob, FunctionalContext, FunctionalSample};
use crate::grid::RadialGrid;
use crate::harness::config::RunConfig;
use crate::harness::init::init_fields;
use crate::harness::io::{
    read_checkpoint, read_series, read_snapshots, write_checkpoint, write_snapshots, CheckpointHeader, SeriesLayout,
    SeriesWriter,
};
use crate::harness::report::{analyze, AnalysisInput, RunReport, RunStatus, Termination};
use crate::solver::{FieldState, Solver, StepController};

pub const CONFIG_FILE: &str = "config.toml";
pub const CHECKPOINT_FILE: &str = "checkpoint.csv";
pub const LATE_SNAPSHOTS_FILE: &str = "late_snapshots.csv";
pub const STATUS_FILE: &str = "status.toml";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: RunReport,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.report.status.termination.exit_code()
    }
}

/// Keeps a bounded, roughly uniform thinning of all sampled `u` fields.
struct SnapshotRing {
    cap: usize,
    every: u64,
    seen: u64,
    kept: Vec<(f64, Vec<f64>)>,
}

impl SnapshotRing {
    fn new(cap: usize) -> Self {
        Self { cap, every: 1, seen: 0, kept: Vec::new() }
    }

    fn offer(&mut self, t: f64, u: &[f64]) {
        if self.seen.is_multiple_of(self.every) {
            self.kept.push((t, u.to_vec()));
            if self.kept.len() > 2 * self.cap {
                let mut k = 0;
                self.kept.retain(|_| {
                    k += 1;
                    k % 2 == 1
                });
                self.every *= 2;
            }
        }
        self.seen += 1;
    }

    /// Make sure the final state is present.
    fn finish(mut self, t: f64, u: &[f64]) -> Vec<(f64, Vec<f64>)> {
        if self.kept.last().is_none_or(|(tl, _)| *tl != t) {
            self.kept.push((t, u.to_vec()));
        }
        self.kept
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Functional context built exactly as a run builds it.
pub fn functional_context(config: &RunConfig) -> Result<FunctionalContext> {
    let grid = RadialGrid::new(config.domain.radius, config.domain.cells)?;
    let cutoffs = resolvable_cutoffs(&grid, config.cutoff_radii(), config.cutoffs.exponent)?;
    let k_sob = estimate_k_sob(&grid, config.cutoffs.sobolev_seed);
    Ok(FunctionalContext {
        grid,
        cutoffs,
        k_sob,
        mt_exponent: config.cutoffs.mt_exponent,
        pointwise_p: config.cutoffs.pointwise_p,
        ball_radii: config.ball_radii().to_vec(),
    })
}

/// Run `config` writing into `dir`. Solver failures end the run early and are
/// recorded in the report; only configuration and I/O failures are errors.
pub fn run(config: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let ctx = functional_context(config)?;
    let grid = ctx.grid.clone();
    let mut state = init_fields(&grid, &config.init)?;
    let mut solver = Solver::new(grid.clone(), config.solver.clone())?;

    create_dir(dir)?;
    create_dir(&dir.join(SNAPSHOT_DIR))?;
    let cfg_path = dir.join(CONFIG_FILE);
    std::fs::write(&cfg_path, config.to_toml_string()).map_err(|e| Error::io(&cfg_path, e))?;
    let head = CheckpointHeader { radius: grid.radius(), cells: grid.cells(), config_hash: config.hash() };

    let layout = SeriesLayout {
        cutoff_radii: ctx.cutoffs.iter().map(|c| c.radius()).collect(),
        ball_radii: ctx.ball_radii.clone(),
    };
    let mut writer = SeriesWriter::create(&dir.join(&config.output.csv), layout.clone())?;
    let mut ring = SnapshotRing::new(config.diagnostics.retained_snapshots);
    let mut samples: Vec<FunctionalSample> = Vec::new();
    // `pre` is the state one step earlier, so the identity defects measure a single step
    let mut record = |state: &FieldState,
                      dt: f64,
                      pre: Option<&FunctionalSample>,
                      samples: &mut Vec<FunctionalSample>,
                      w: &mut SeriesWriter| {
        let mut s = ctx.sample(state, dt);
        if let Some(prev) = pre {
            FunctionalContext::attach_defects(prev, &mut s);
        }
        w.write(&s)?;
        ring.offer(state.t, &state.u);
        samples.push(s);
        Ok::<(), Error>(())
    };

    let snapshot_times = config.snapshot_times().to_vec();
    let mut next_snapshot = 0;
    let write_snapshot = |k: usize, state: &FieldState| {
        write_checkpoint(&dir.join(SNAPSHOT_DIR).join(format!("snap_{k}.csv")), &head, state)
    };
    while next_snapshot < snapshot_times.len() && snapshot_times[next_snapshot] <= 0.0 {
        write_snapshot(next_snapshot, &state)?;
        next_snapshot += 1;
    }

    record(&state, 0.0, None, &mut samples, &mut writer)?;
    let mut last_good = state.clone();
    let t_end = config.time.t_end;
    let stride = config.time.sample_stride;
    let mut controller = StepController::new();
    let mut last_dt = 0.0;
    let mut failure: Option<Error> = None;
    while state.t < t_end {
        let target = snapshot_times.get(next_snapshot).copied().unwrap_or(t_end).min(t_end);
        let dt = match controller.next_dt(&grid, &state, &config.solver, target) {
            Ok(dt) => dt,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        let sampled_next = (state.step_count + 1) % stride == 0;
        let pre = sampled_next.then(|| ctx.sample(&state, last_dt));
        if let Err(e) = solver.step(&mut state, dt) {
            // fall back to the last sampled state for the checkpoint and the report
            state = last_good;
            failure = Some(e);
            break;
        }
        last_dt = dt;
        if (state.t - target).abs() <= 1e-9 * target.max(1.0) {
            state.t = target;
        }
        while next_snapshot < snapshot_times.len() && snapshot_times[next_snapshot] <= state.t {
            write_snapshot(next_snapshot, &state)?;
            next_snapshot += 1;
        }
        if sampled_next {
            record(&state, dt, pre.as_ref(), &mut samples, &mut writer)?;
            last_good.clone_from(&state);
        }
    }
    if samples.last().is_some_and(|s| s.t != state.t) {
        record(&state, last_dt, None, &mut samples, &mut writer)?;
    }
    writer.finish()?;

    let termination = failure.as_ref().map_or(Termination::Completed, |e| {
        Termination::from_error(e).expect("only solver errors end a run early")
    });
    let status = RunStatus {
        termination,
        message: failure.as_ref().map_or_else(|| "reached t_end".to_string(), |e| e.to_string()),
        t_final: state.t,
        steps: state.step_count,
        samples: samples.len(),
    };
    if let Some(e) = &failure {
        log::warn!("run in {} ended early: {e}", dir.display());
    }
    status.write(&dir.join(STATUS_FILE))?;
    write_checkpoint(&dir.join(CHECKPOINT_FILE), &head, &state)?;
    let snapshots = ring.finish(state.t, &state.u);
    write_snapshots(&dir.join(LATE_SNAPSHOTS_FILE), &snapshots)?;

    let report = analyze(AnalysisInput {
        config,
        samples: &samples,
        cutoff_radii: &layout.cutoff_radii,
        final_state: &state,
        snapshots: &snapshots,
        status,
    })?;
    report.write(&dir.join(&config.output.report))?;
    Ok(RunOutcome { dir: dir.to_path_buf(), report })
}

/// Rebuild the report of a finished run from its directory.
pub fn report_from_dir(dir: &Path) -> Result<RunReport> {
    let config = RunConfig::load(&dir.join(CONFIG_FILE))?;
    let (layout, samples) = read_series(&dir.join(&config.output.csv))?;
    let (head, state) = read_checkpoint(&dir.join(CHECKPOINT_FILE))?;
    if head.config_hash != config.hash() {
        return Err(Error::format(dir.join(CHECKPOINT_FILE), "checkpoint does not belong to this configuration"));
    }
    let snapshots = read_snapshots(&dir.join(LATE_SNAPSHOTS_FILE))?;
    let status = RunStatus::read(&dir.join(STATUS_FILE))?;
    analyze(AnalysisInput {
        config: &config,
        samples: &samples,
        cutoff_radii: &layout.cutoff_radii,
        final_state: &state,
        snapshots: &snapshots,
        status,
    })
}
