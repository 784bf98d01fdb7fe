//! Grid analysis: convolution, oscillation, left-invariant derivatives,
//! the discrete sub-Laplacian and the constants built from them.

pub mod constants;
pub mod convolve;
pub mod derivatives;
pub mod layer;
pub mod oscillation;
pub mod spectrum;

pub use convolve::{convolve, convolve_at, convolve_direct, convolve_fft};
pub use derivatives::{apply_multi_index, partial, vector_field_apply, MultiIndex};
pub use layer::{spectral_layer_check, SpectralLayerReport};
pub use oscillation::{ball_sample, osc_conv_check, oscillation, oscillation_with, OscConvReport};
pub use spectrum::{
    random_bandlimited, sublaplacian_spectrum, sublaplacian_spectrum_cached, GridLaplacian,
    SpectralProjector,
};
