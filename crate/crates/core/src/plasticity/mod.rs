//! Learning rules and losses.
//!
//! All operations are pure: state goes in, new state comes out.

mod adaptive;
mod cka;
mod eligibility;
mod hybrid;
mod losses;
mod stdp;

pub use adaptive::{apply_adaptive_stdp, AdaptiveStdpConfig, AdaptiveStdpState, LayerResponse};
pub use cka::{
    linear_cka, matched_rows, sigmoid, transfer_loss, transfer_loss_from_alignment, FeatureBatch,
    TransferLossConfig,
};
pub use eligibility::{rstdp_apply, update_eligibility, EligibilityTrace};
pub use hybrid::{hybrid_update, hybrid_update_all, HybridUpdateParams};
pub use losses::{temporal_consistency_loss, ConsistencyAnchor};
pub use stdp::{stdp_delta, StdpParams};
