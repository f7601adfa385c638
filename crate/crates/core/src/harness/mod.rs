//! Scenario generation, file formats, pipeline execution and method
//! comparison.

pub mod config;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod scenario;

pub use config::RunConfig;
pub use pipeline::{run_pipeline, FrameRecord, Pipeline, PipelineRun, StepTrace};
pub use report::{compare, run_suite, RunReport, ScenarioReport, SuiteOutput, TimingStats};
pub use scenario::{default_suite, generate_scenario, Phase, ScenarioConfig};
