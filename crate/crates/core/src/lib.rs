//! Bayes-optimal re-identification analysis in the shuffle model.
//!
//! One message is drawn from a distribution `P` and hidden among `n - 1`
//! messages drawn from `Q`; everything is uniformly shuffled. This crate
//! computes the optimal adversary's success probability `beta_n(P, Q)`
//! exactly (arbitrary-precision rationals) or in floating point, together
//! with the additive/multiplicative advantages, the total-variation
//! sandwich, and the clone/blanket decomposition bounds for shuffled
//! eps-DP local randomizers. Every closed form is backed by brute-force
//! enumeration oracles and seeded Monte Carlo simulation of the games.

pub mod bayes;
pub mod decomposition;
pub mod dist;
pub mod io;
pub mod mechanism;
pub mod numeric;
pub mod oracle;
pub mod profile;
pub mod sim;

pub use bayes::{advantage, asymptotics, beta_n, beta_n_example1, beta_nk, AdvantageReport, AsymptoticsReport};
pub use decomposition::{
    blanket_decompose, blanket_m, blanket_mass, clone_bound, clone_decompose, compare_decompositions, psi,
    psi_sweep, DecompositionKind, MixtureDecomposition,
};
pub use dist::{total_variation, DiscreteDistribution};
pub use mechanism::{discretized_laplace, krr, InputPrior, Mechanism};
pub use numeric::{Exact, Extended, Float, NumericMode, Scalar};
pub use oracle::{brute_force_beta, brute_force_beta_het, permanent};
pub use profile::{ratio_profile, RatioAtom, RatioProfile};
pub use sim::{mc_guess_game, mc_reduced_game, mc_shuffle_game, ShuffleAdversary, SimulationReport, UserInput};

/// Errors shared across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("probability at index {index} is negative: {value}")]
    NegativeProbability { index: usize, value: String },
    #[error("probabilities do not sum to 1 (deviation {deviation})")]
    NotNormalized { deviation: String },
    #[error("duplicate label: {0}")]
    DuplicateLabel(String),
    #[error("support size must be at least 1")]
    ZeroSize,
    #[error("zipf exponent must be positive, got {0}")]
    NonpositiveExponent(f64),
    #[error("label count {labels} does not match probability count {probs}")]
    LengthMismatch { labels: usize, probs: usize },
    #[error("number of users must be at least 1")]
    ZeroUsers,
    #[error("guess count k={k} out of range 1..={n}")]
    BadGuessCount { k: u64, n: u64 },
    #[error("discretization needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("randomized response arity must be at least 2, got {0}")]
    BadArity(usize),
    #[error("epsilon must be positive (e^eps must exceed 1)")]
    NonpositiveEpsilon,
    #[error("{0}")]
    SpaceMismatch(String),
    #[error("mechanism has infinite epsilon; clone decomposition is degenerate")]
    InfiniteEpsilon,
    #[error("blanket mass is zero: the rows share no common component")]
    ZeroBlanket,
    #[error("instance too large for exact enumeration: {0}")]
    InstanceTooLarge(String),
    #[error("matrix is not square")]
    NotSquare,
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
