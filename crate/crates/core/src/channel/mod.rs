//! Correlated multipath MIMO-OFDM channels and their second-order statistics.

mod bessel;
mod draw;
mod profile;
mod spatial;
mod stats;

pub use bessel::bessel_j0;
pub use draw::{draw_channel, ChannelRealization, ChannelSampler, SQRT_CLIP};
pub use profile::{temporal_corr, Numerology, PathProfile, ETU_TAPS};
pub use spatial::{
    build_spatial_corr, physical_dims, steering_vector, uniform_angles, user_spatial_corrs,
    SpatialModel,
};
pub use stats::{
    build_phi_k, build_pilot_second_order, build_r_k, covariance_between, EstimationQuality,
    FlatStats, PilotCovConvention, SecondOrderStats, UserLinkModel,
};
