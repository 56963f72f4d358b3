//! Polynomial approximation operators on `[-1, 1]^d` and empirical bound checks.

mod bernstein;
mod field;
mod legendre;
mod modulus;
mod sweep;

pub use bernstein::{bernstein_basis, bernstein_project, Bernstein, MAX_BERNSTEIN_NODES};
pub use field::{
    multi_index, sample_s, sup_distance, sup_grid_size, sup_norm_on_grid, FnField, SampleSet,
    ScalarField,
};
pub use legendre::{
    decode_phi, encode_phi, gauss_legendre_1d, gauss_legendre_nodes, legendre_1d, legendre_all,
    legendre_eval, legendre_eval_flat, MultiPoly,
};
pub use modulus::{modulus_of_continuity, modulus_or_estimate, ModulusEstimator};
pub use sweep::{
    bernstein_error_sweep, discretization_error_sweep, rows_to_csv, ErrorRow, GaussianSmoothing,
    IdentityOp, ModulusOptions, NamedField, Operator, SoftClip,
};
