//! Flat metric and `C^{1+α}`-dual norm brackets for particle measures.

mod flat;
mod holder;
mod zbracket;

pub use flat::{flat_distance, flat_norm, FlatNormResult, LpStatus, MAX_PARTICLES};
pub use holder::{
    holder_norm_estimate, interpolated_seminorm, BoxGrid, HolderBound, HolderEstimate,
};
pub use zbracket::{
    cluster_bound, dictionary_ratio, multiscale_cluster_bound, z_norm_bracket, z_upper, Bump,
    BumpDictionary, ZBracket, DEFAULT_ATOMS, DEFAULT_BUDGET,
};
