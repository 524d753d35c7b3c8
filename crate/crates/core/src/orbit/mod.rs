//! The binned oracle-price learner: coarse grid localization of an anchor
//! price per bin, then local polynomial refinement inside a trust region.

mod grid;
mod partition;
mod policy_map;
mod state;

pub use grid::{build_grid, PriceGrid};
pub use partition::{build_bins, BinPartition};
pub use policy_map::{poly_price, trust_region_membership};
pub use state::{
    anchor_event_check, anchor_index, default_bin_width, AnchorEvent, BinState, OrbitConfig,
    OrbitPhase, OrbitState, Proposal,
};
