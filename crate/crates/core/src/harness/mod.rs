//! Scenario-driven convergence sweeps, reports and the self-test suite
//! behind the `relaxlab` command line.

pub mod config;
pub mod report;
pub mod selftest;
pub mod sweep;

pub use config::{load_config, parse_config, parse_operator_spec, Mode, ScenarioConfig};
pub use report::{emit_report, ConvergenceReport, ConvergenceRow, ReferenceInfo, ReportFormat};
pub use selftest::{selftest, SelftestSummary};
pub use sweep::{corrector_energy, preflight, run_sweep, run_sweep_detailed, semicontinuity_probe, ProbeResult, SweepArtifacts};
