//! Datasets: representation, CSV ingestion, the OpenML client, stratified
//! splitting, the simulation generator and the benchmark registry.

mod csv_io;
mod dataset;
pub mod openml;
mod registry;
pub mod simulate;
mod split;

pub use csv_io::{load_csv, load_csv_with_mapping, to_csv_string, write_csv, TargetMapping, SYNTHETIC_COLUMN};
pub(crate) use dataset::hex;
pub use dataset::{Dataset, ImbalanceSummary, Source, TIE_MINORITY_CLASS};
pub use openml::{fetch_openml, fetch_openml_with, HttpGet};
pub use registry::{lookup, registry, registry_csv, satisfies_curation, RegistryEntry, IR_TOLERANCE};
pub use simulate::{scenario_grid, simulate, simulate_linear_logit, SimulationScenario};
pub use split::{stratified_split, SplitPair, DEFAULT_TEST_FRACTION};

/// Class balance of `d`; see [`Dataset::summarize`].
pub fn summarize(d: &Dataset) -> ImbalanceSummary {
    d.summarize()
}
