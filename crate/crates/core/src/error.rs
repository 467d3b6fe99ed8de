use thiserror::Error;

pub type Result<T> = std::result::Result<T, ChoreoError>;

#[derive(Debug, Error)]
pub enum ChoreoError {
    #[error("n must be at least 2, got {0}")]
    BodyCount(usize),
    #[error("sign word has length {got}, expected {expected}")]
    OmegaLength { expected: usize, got: usize },
    #[error("invalid sign character {0:?}; use '+' or '-'")]
    OmegaAlphabet(String),
    #[error("sign word is not admissible for n = {n}: {reason}")]
    InfeasibleOmega { n: usize, reason: String },
    #[error("grid of {samples} samples is incompatible with n = {n}: {reason}")]
    Grid { n: usize, samples: usize, reason: String },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("boundary identities violated: {0}")]
    Boundary(String),
    #[error("collision: minimum pairwise distance {distance:.3e} below {guard:.1e}")]
    Collision { distance: f64, guard: f64 },
    #[error("well regions of bodies {0} and {1} overlap")]
    WellOverlap(usize, usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid separation witness: {0}")]
    Witness(String),
    #[error("deformation parameter {eps} must be below the segment duration {duration}")]
    EpsilonTooLarge { eps: f64, duration: f64 },
    #[error("kick profile support [{lo}, {hi}] leaves the segment [{t0}, {t1}]")]
    ProfileOutsideSegment { lo: f64, hi: f64, t0: f64, t1: f64 },
    #[error("kick profile widths must satisfy 0 < plateau < ramp <= support")]
    ProfileWidths,
    #[error("tau vector is identically zero")]
    ZeroTau,
    #[error("no plateau of length >= {min_nodes} nodes found")]
    NoPlateau { min_nodes: usize },
    #[error("unknown trajectory format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
