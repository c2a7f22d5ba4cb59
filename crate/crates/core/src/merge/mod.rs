//! Random-measurement state merging: instruments, quantum error, decoding and ledgers.

mod instrument;
mod protocol;
mod twirl;

pub use instrument::{
    build_instrument, decode_outcomes, rank_l_average_check, mean_stderr, merge_target, output_entanglement,
    post_measurement, qe_bound, quantum_error, Instrument, RankLCheck, Measurement, MergeOutcome, A1, B1, B_PRIME,
    DROP_PROB,
};
pub use protocol::{
    canonical_abr, classical_cost_check, entanglement_ledger_check, merge_frame, run_merging, trivial_reference,
    ClassicalCost, LedgerCheck, MergeConfig, MergeReport, TrialRecord, ALICE, BOB, DEFAULT_CAP, LEDGER_SLACK_PER_COPY,
    REFERENCE,
};
pub use twirl::{max_entry_gap, restricted_flip, twirl_analytic, twirl_monte_carlo};
