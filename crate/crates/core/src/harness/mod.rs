//! Scenario configuration, scheme comparison sweeps and result export.

mod config;
mod experiments;
mod results;
mod schemes;
mod system;
mod validate;

pub use config::{
    CapacityConfig, ChannelConfig, ClassConfig, CodebookConfig, DetEquivConfig, EstimationConfig, FdmaConfig,
    NoiseConfig, ProfileConfig, ReceiverConfig, ResourceConfig, Scenario, Tap,
};
pub use experiments::{
    fdma_users, max_users_meeting, moma_det_equiv, monte_carlo_users, run_capacity_vs_target_rate, run_det_equiv,
    run_rate_vs_antennas, CapacityOutcome, DetEquivOutput, UserSummary,
};
pub use results::{export_results, read_results, write_results, ResultRow, ResultSource};
pub use schemes::{baseline_codes, fdma_rate, BaselineAssignment, Scheme};
pub use system::{mmse_options, CodeAssignment, PreparedLink, NOISELESS_PILOT_SNR};
pub use validate::{validate_scenario, CheckOutcome};
