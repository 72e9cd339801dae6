use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("empty matrix")]
    EmptyMatrix,

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not Hermitian (max |H - H^dagger| = {deviation:e} > {tolerance:e}) {context}")]
    NotHermitian {
        deviation: f64,
        tolerance: f64,
        context: String,
    },

    #[error(
        "level multiplicities change between grid points {k_prev} and {k_next} \
         (t in [{t_prev}, {t_next}]): {before:?} -> {after:?}; \
         a level crossing or degeneracy splitting is not supported"
    )]
    MultiplicityChange {
        k_prev: usize,
        k_next: usize,
        t_prev: f64,
        t_next: f64,
        before: Vec<usize>,
        after: Vec<usize>,
    },

    #[error(
        "eigenframes of level {level} nearly orthogonal between grid points {k} and {} \
         (smallest overlap singular value {sigma_min:e}); refine the time grid",
        k + 1
    )]
    FrameOverlapSingular { level: usize, k: usize, sigma_min: f64 },

    #[error("gauge anchor for level {level} is nearly orthogonal to the eigenspace at grid point {k}")]
    AnchorDegenerate { level: usize, k: usize },

    #[error("intra-level block M^{{{level}{level}}} is gauge dependent and cannot be computed from dH/dt")]
    IntraLevelHdot { level: usize },

    #[error("model provides no analytic time derivative")]
    MissingDerivative,

    #[error("connection at step {step} is not anti-Hermitian (max |A + A^dagger| = {deviation:e})")]
    NotAntiHermitian { step: usize, deviation: f64 },

    #[error("matrix is not unitary (max |U^dagger U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("zero gap between levels {n} and {m} at grid point {k}; the levels should have been merged")]
    ZeroGap { n: usize, m: usize, k: usize },

    #[error("closed-form solution singular: Omega_{sign} = 0 (w = b with cos(theta) = {cos_theta})")]
    SingularGammaParameters { sign: char, cos_theta: f64 },

    #[error("every holonomy coefficient of row {row} is below the null cutoff at grid point {k}")]
    NoNonNullCoefficient { row: usize, k: usize },

    #[error("index {index} out of range for {what} (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
