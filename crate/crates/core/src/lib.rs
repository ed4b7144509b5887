//! MUSIC-type location imaging of small two-dimensional inhomogeneities from
//! far-field multistatic response data, with and without the diagonal
//! (monostatic) elements.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: Bessel functions `J0, J1, J2` and the Hankel functions
//!   `H0, H1` of the first kind.
//! - [`scene`]: background medium, inclusions, direction sets and masks,
//!   imaging grids.
//! - [`forward`]: MSR matrices from the Born far field or a Foldy-Lax
//!   point-scatterer model, diagonal removal, masking and noise.
//! - [`music`]: SVD, signal-rank selection, noise-subspace projection and
//!   imaging maps.
//! - [`theory`]: direction-sum identities, closed-form single-inclusion
//!   predictors and the map comparison harness.
//! - [`io`] and [`commands`]: file formats, configuration and the
//!   command-line entry points.

pub mod commands;
pub mod error;
pub mod forward;
pub mod io;
mod linalg;
pub mod music;
pub mod scene;
pub mod specfun;
pub mod theory;

pub use error::{Error, Result};
pub use forward::{
    add_noise, apply_mask, assemble_msr, born_farfield, foldy_lax_farfield, strip_diagonal,
    Generator, MatrixKind, MsrMatrix, NoiseSpec,
};
pub use music::{
    combined_bistatic_map, decompose, image_map, noise_projection, select_signal_rank,
    test_vector_te, test_vector_tm, ImagingMap, RankPolicy, Side, SubspaceDecomposition,
    TestFamily,
};
pub use scene::{
    paper_scene, uniform_directions, ArrayConfig, Background, ContrastMode, Inhomogeneity, Mask,
    RoiGrid, Scene, Vec2,
};
pub use theory::{compare_maps, predicted_map, ComparisonReport, Polarization, TheoryParams};
