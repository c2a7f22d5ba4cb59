//! Rate regions for distributed compression and the multiple-access channel,
//! side information at the decoder, and entanglement of assistance.

mod assistance;
mod region;
mod side_info;

pub use assistance::{
    assistance_protocol, covering_experiment, default_helper_order, min_cut_assistance, min_cut_assistance_density,
    simultaneous_assistance_experiment, AssistanceReport, CoveringReport, CutValue, ExperimentConfig, MinCut,
    NEAR_TIE, PURITY_TOL,
};
pub use region::{
    distributed_compression_region, distributed_compression_region_pure, mac_rates, Corner, Inequality, RateRegion,
    Sense, REGION_TOL,
};
pub use side_info::{
    identity_candidate, side_info_rates, side_info_search, trivial_candidate, SideInfoRates, SideInfoSearch, ENV,
    SEARCH_STEPS,
};
