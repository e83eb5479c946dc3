//! Free-probability transforms and the limiting spectrum of `K_α/M`.

pub mod density;
pub mod mp;
pub mod quartic;
pub mod stieltjes;
pub mod transforms;

pub use density::{cosine_nodes, graded_nodes, trapezoid_weights, Atom, DensityHeader, SpectralDensity};
pub use mp::{mp_atom, mp_density, mp_edges, mp_eta, mp_stieltjes};
pub use quartic::{quartic_coefficients, solve_quartic};
pub use stieltjes::{
    aepdf_k_alpha, fixed_point_residual, k_alpha_atom, k_alpha_density, k_alpha_support,
    k_alpha_support_bracket, stieltjes_k_alpha, stieltjes_k_alpha_near, DensityOptions, KAlphaDensity,
    StieltjesSample,
};
pub use transforms::{
    eta_m_alpha, eta_numeric, inverse_eta_k_alpha, inverse_eta_m_alpha, inverse_eta_m_alpha_branches,
    inverse_eta_m_alpha_complex, m_alpha_density, m_alpha_edges, s_transform_n2,
};
