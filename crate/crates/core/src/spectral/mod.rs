//! Dense spectral computations.

mod eig;
mod fourier;
mod orthogonal;

pub use eig::{
    eig_dense, eig_mirror_blocked, estimate_eig_mib, radiance_order, EigOptions, EigenDecomposition, DEFAULT_MAX_DIM,
    RESIDUAL_TOL,
};
pub use fourier::{fourier2d, inverse_fourier2d, k_grid, weight_near_phase_points};
pub use orthogonal::{
    decompose_symmetric, relative_error, truncate_decomposition, OrthogonalSymmetricDecomposition, OrthogonalTerm,
    DEFECT_GAP_TOL, QUASI_NULL_TOL,
};
