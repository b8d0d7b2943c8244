//! The stage iteration, its parameter schedule and run diagnostics.

mod run;
mod schedule;
mod stage;
mod weak;

pub use run::{
    drift_bound, rescale_inputs, run, unscale, Calibration, Rescale, RunOptions, RunOutcome, StageVerdict, StateRow,
};
pub use schedule::{
    alpha_threshold, make_schedule, Audit, Check, Overrides, ScheduleParams, StageParams, AUDIT_STAGES,
};
pub use stage::{deficit, StageOptions, StageReport, StageState, Stager};
pub use weak::{very_weak_residual, WeakResidual};
