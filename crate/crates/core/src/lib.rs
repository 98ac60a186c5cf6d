//! Band-structure toolkit for discretized periodic Schrödinger
//! operators with Anderson-type disorder
//! H_{λ,ω} = −Δ + W_per + λ Σ_γ ω_γ f(·−γ) on the torus, d ∈ {1, 2}.
//!
//! The crate computes Floquet band functions over the Brillouin zone,
//! locates and refines first-band minima, assembles the coupling
//! matrix built from single-site potential and band-edge
//! eigenfunctions, and verifies at desk scale where the spectral
//! infimum sits among periodic disorder configurations.

pub mod coupling;
pub mod eigen;
pub mod export;
pub mod floquet;
pub mod matrix;
pub mod model;
pub mod operator;
pub mod potential;
pub mod verifier;

pub use coupling::{
    classify_definiteness, coupling_at_lambda, coupling_matrix, lambda_threshold_scan,
    CouplingError, CouplingMatrix, Definiteness, ThresholdScan,
};
pub use eigen::{eig_hermitian, eig_smallest_k, eig_values, EigenDecomposition, EigenError};
pub use floquet::{
    bloch_eigenfunction, compute_band_structure, default_n_theta, find_band_minima,
    quadratic_model, track_minima_in_lambda, BandStructure, BlochFunction, FloquetError,
    MinimaSet, MinimaTrack, QuadraticModel,
};
pub use matrix::HermitianMatrix;
pub use model::{Extreme, Model, ModelError, ModelFamily};
pub use operator::{
    assemble_bloch_hamiltonian, assemble_dirichlet_box, CellGrid, OperatorError, QuasiMomentum,
};
pub use potential::{
    build_single_site, enumerate_periodic_configs, sample_random_config, Bump,
    DisorderConfiguration, DisorderLaw, PeriodicBackground, PotentialError, SingleSite,
};
pub use verifier::{
    box_sampling_check, monotone_case_oracle, projection_positivity_check, supercell_min_energy,
    verify_min_location, BoxSamplingSummary, ConfigurationSpectrum, ProjectionCheck, Verdict,
    VerificationReport, VerifierError,
};
