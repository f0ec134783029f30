//! Generic polar-coding machinery.
//!
//! The same engine serves every scheme in this crate: a successive
//! cancellation pass over the transform domain, driven by per-position
//! posterior pairs of the product-domain symbol given whatever observations
//! a scheme provides. Quantization (randomized rounding plus MAP shaping),
//! decoding (pinned bits plus MAP decisions), and Monte-Carlo reliability
//! construction are all the same tree walk with different per-index decision
//! rules.

mod construct;
mod engine;
mod partition;
mod process;

pub use construct::{
    estimate_profile, estimate_profiles, BhattacharyyaProfile, ConstructionParams, FnSampler,
    FrameSampler, PartitionMode,
};
pub use engine::{bhattacharyya, sc_run, Pair, PAIR_CLAMP};
pub use partition::{
    build_channel_partition, build_partition, design_nested_pair, IndexPartition, NestedCodePair,
    NestedTargets, RankTargets, SetClass,
};
pub use process::{
    assemble_roles, preshared_fill, sc_decode, sc_quantize, IndexRole, SequentialSourceModel,
};
