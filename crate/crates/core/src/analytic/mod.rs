//! Closed-form solutions: the single-atom dynamics, the complete two-atom
//! solution with its exact master-equation coefficients, and the
//! weak-coupling references (mean-field profile and Dicke cascade).

mod markov;
mod pair;
mod single;

pub(crate) use markov::parabolic_vertex;
pub use markov::{
    cascade_peak, markovian_cascade, meanfield_intensity, meanfield_peak, CascadePeak,
};
pub use pair::{
    build_pair_propagators, pair_gamma_matrix, GammaMatrix, GammaSample, PairPropagators,
};
pub use single::{
    single_amplitude, single_decay_rate, single_excitation, single_extrema, single_intensity,
    single_intensity_trace, single_pole_time, SingleExtrema,
};
