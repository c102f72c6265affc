use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // channel
    #[error("row {row} sums to {sum}, expected 1")]
    NonStochasticRow { row: usize, sum: f64 },
    #[error("entry ({row}, {col}) = {value} is negative or not finite")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("alphabet too small: |X| = {inputs}, |Y| = {outputs} (both must be >= 2)")]
    AlphabetTooSmall { inputs: usize, outputs: usize },
    #[error("matrix is not rectangular: row {row} has {len} entries, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("crossover probability {0} outside (0, 0.5)")]
    DegenerateChannel(f64),
    #[error("symbols {0} and {1} have disjoint output supports (infinite Bhattacharyya distance)")]
    InfiniteDistance(usize, usize),
    #[error("invalid input distribution: {0}")]
    InvalidDistribution(String),
    #[error("distribution has {got} entries, channel has {expected} inputs")]
    DimensionMismatch { expected: usize, got: usize },

    // exponents
    #[error("rho = {0} outside the admissible range")]
    RhoOutOfRange(f64),
    #[error("rate {rate} outside the admissible range [{lo}, {hi})")]
    RateOutOfRange { rate: f64, lo: f64, hi: f64 },
    #[error("constant-composition ascent did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("expurgated supremum still increasing at rho = {rho_max}")]
    BracketExhausted { rho_max: f64 },
    #[error("sphere-packing supremum not attained for rho <= {rho_max}")]
    Diverging { rho_max: f64 },
    #[error("lambda bisection failed: {0}")]
    BisectionFailure(String),

    // typecalc
    #[error("joint distribution puts mass on ({0}, {1}) where the product reference is zero")]
    SupportViolation(usize, usize),
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("enumeration would produce {0} joint types (limit 10^7)")]
    EnumerationTooLarge(u128),
    #[error("no grid point satisfies the divergence constraint")]
    EmptyFeasibleSet,
    #[error("grid oracle requires a binary alphabet and step in [1e-3, 1e-1]: {0}")]
    OracleDomain(String),

    // ensemble
    #[error("exhaustive evaluation over {0} output sequences exceeds the limit")]
    InstanceTooLarge(f64),
    #[error("{got} samples, at least {needed} required")]
    TooFewSamples { got: usize, needed: usize },
    #[error("invalid ensemble configuration: {0}")]
    InvalidConfig(String),

    // refdist
    #[error("adaptive quadrature did not reach tolerance")]
    QuadratureFailure,
}
