//! Experiment runner: builds triples from a JSON config, runs the flow engines side by side
//! and runs the property suites.

pub mod compare;
pub mod config;
pub mod suites;
pub mod table;

pub use compare::{run_flow_compare, Comparison, Row};
pub use config::{Engine, ExperimentConfig, Format};
pub use suites::{run_property_suite, Suite, SuiteReport};
