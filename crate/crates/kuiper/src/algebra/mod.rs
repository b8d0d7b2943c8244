//! Matrix spaces built from Clifford / division algebra representations.

mod base_locus;
mod dual;
mod frame;
mod hurwitz;
mod radon_hurwitz;
mod space;
mod vector_form;

pub use base_locus::{base_locus_probe, BaseLocusReport, BaseLocusVerdict};
pub use dual::dual_space;
pub use frame::{
    find_primitive_frame, load_or_find_frame, FrameSearch, PrimitiveFrame, FRAME_CACHE_VERSION,
};
pub use hurwitz::{build_invertible_space, division_algebra_units, kronecker, kronecker_sum};
pub use radon_hurwitz::{radon_hurwitz, rho, rho_half, xi_index, RhIndex};
pub use space::{certify_invertible, choose_l, choose_l_with, CaseTag, CertifyOptions, MatrixSpace};
pub use vector_form::{
    doubled, matrix_form, pairing, sym_dim, sym_index, sym_pairs, vector_form, vector_form_unchecked,
};
