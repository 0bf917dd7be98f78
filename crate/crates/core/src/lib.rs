//! Directional short-time Fourier transform of sampled n-dimensional signals,
//! reconstruction from directional coefficients, and detection of directional
//! singularities from the decay of coefficient magnitudes over frequency cones.

pub mod directions;
pub mod error;
pub mod fftn;
pub mod io;
pub mod lattice;
pub mod signals;
pub mod transform;
pub mod wavefront;
pub mod windowchange;
pub mod windows;

pub use directions::{Completion, DirectionFrame};
pub use error::{Error, ErrorClass, Result};
pub use lattice::{inner_product, riemann_integral, FrequencyLattice, Lattice, SampledField};
pub use signals::{ground_truth, render, Envelope, GroundTruth, RecipeFile, SignalRecipe, Width};
pub use transform::{
    dstft_at, dstft_forward, dstft_quadrature, invert, parseval_check, synthesis, CoefficientField,
    ComplexFrequencyPoint, ParsevalReport, Provenance, Reduction,
};
pub use wavefront::{
    analyze_cell, classify, cone_supremum, fit_decay, wavefront_map, ConeQuery, DecayReport,
    DetectorParams, MapSettings, Verdict, WaveFrontMap,
};
pub use windowchange::{cross_kernel, verify_window_change, window_change, WindowChangeReport};
pub use windows::{eval_ridge_atom, WindowBank, WindowSpec};
