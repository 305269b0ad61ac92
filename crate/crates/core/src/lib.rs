//! Finite-rate feedback multi-antenna broadcast: channel draws, random vector
//! quantization, zero-forcing beams, on-user selection and the large-system
//! spatial efficiency.

pub mod asymptotic;
pub mod beamforming;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod quantization;
pub mod rng;
pub mod selection;
pub mod sim;

pub use asymptotic::{
    build_eta_distribution, eta_threshold, optimal_sbar, spatial_efficiency, EtaAtom, EtaDistribution, OptimalSbar,
    UserClass,
};
pub use beamforming::{beam_gains, link_metrics, sum_rate, zero_forcing_beams, LinkMetrics, TransmissionPlan};
pub use channel::{draw_channel, draw_channels, ChannelVector, SystemConfig, UserProfile};
pub use error::{Error, Result};
pub use quantization::{
    distortion_rate_bounds, empirical_distortion, estimate_distortion, quantize, random_codebook, Codebook,
    DistortionBounds, QuantizationResult,
};
pub use selection::{choose_s_main, eta, expected_powers, i_main, oracle_on_users, ExpectedPowers, SchemeReport};
