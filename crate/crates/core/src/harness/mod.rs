//! Experiment pipeline: config parsing, seeded multi-run execution, CSV and
//! JSON output, SVG plots and the command-line interface.

mod cli;
mod config;
mod plot;
mod run;

pub use cli::{run_cli, Cli, Command, ProcessArg};
pub use config::{load_config, parse_config, AgentSpec, EnvironmentSpec, ExperimentConfig};
pub use plot::{emit_plots, nice_ticks, render_svg, Series};
pub use run::{
    agent_seed, downsample_indices, env_seed, mean_and_se, run_csv_path, run_experiment, run_single, running_mean,
    summarize_agent, write_run_csv, AgentSummary, RunSummary, CSV_HEADER,
};
