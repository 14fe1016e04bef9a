//! Tolerance policy shared by every invariant check.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Hermiticity defect accepted by the eigensolver and density matrices.
    pub hermiticity: f64,
    /// Hermiticity defect for hermitian setting operators.
    pub hermitian_setting: f64,
    pub trace: f64,
    /// Smallest eigenvalue allowed for a density matrix.
    pub psd: f64,
    pub state_norm: f64,
    pub unitarity: f64,
    /// U^d = I defect for root-of-identity settings.
    pub root_of_identity: f64,
    /// Relative eigen-residual ‖Hv − λv‖ / ‖H‖.
    pub eigen_residual: f64,
    /// Squared-overlap defect for the MUB predicate.
    pub mub: f64,
    /// Normality defect ‖[M, M†]‖ accepted before diagonalizing.
    pub normality: f64,
    /// Relative size under which ‖M^k‖ counts as zero.
    pub nilpotency: f64,
    /// Eigenvalue gap under which two eigenvalues count as degenerate.
    pub degeneracy: f64,
    /// Distance under which a coefficient snaps to an exact cyclotomic value.
    pub snap: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    hermiticity: 1e-10,
    hermitian_setting: 1e-12,
    trace: 1e-10,
    psd: 1e-10,
    state_norm: 1e-12,
    unitarity: 1e-10,
    root_of_identity: 1e-10,
    eigen_residual: 1e-8,
    mub: 1e-8,
    normality: 1e-10,
    nilpotency: 1e-12,
    degeneracy: 1e-8,
    snap: 1e-9,
};

impl Default for Tolerances {
    fn default() -> Self {
        TOLERANCES
    }
}

/// Largest number of deterministic strategies enumerated without an explicit override.
pub const ENUMERATION_GUARD: u128 = 100_000_000;

/// Largest Hilbert-space dimension handed to the dense eigensolver.
pub const MAX_DIM: usize = 729;

/// Dimension up to which the eigensolver uses a full decomposition.
pub const DENSE_EIGEN_DIM: usize = 96;
