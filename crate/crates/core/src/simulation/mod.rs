//! Calibrated data-generating process, population values by Monte Carlo,
//! and the replication harness for operating characteristics.

mod generate;
mod replicate;
mod scenario;
mod truth;

pub use generate::{simulate_dataset, simulate_latent, simulate_subject, weibull_time, LatentSubject};
pub use replicate::{
    rejection_rates, replicate_study, run_campaign, run_campaign_with, run_replication, summarize, type1_rates,
    write_power_csv, write_summary_csv, write_type1_csv, MethodOutcome, RejectionRow, ReplicationRecord,
    ReplicationSummary, ReplicationWriter, StudyResult, SummaryRow, TypeOneRow, FAILURE_BUDGET, REPLICATION_HEADER,
    SINK_BLOCK,
};
pub use scenario::{
    scenario_table5, CauseParams, CovariateParams, ObservationParams, OutcomeParams, ScenarioParams,
};
pub use truth::{truth_oracle, TruthValues};
