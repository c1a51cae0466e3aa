use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("unsupported cumulant order {0} (supported orders are 2 through 6)")]
    Order(usize),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("latent bound exceeded: no confounder count up to {0} fits the rank evidence")]
    LatentBound(usize),

    #[error("degenerate polynomial: {0}")]
    DegeneratePolynomial(String),

    #[error("noisy roots: imaginary part {0:.3e} exceeds tolerance")]
    NoisyRoots(f64),

    #[error("ill-conditioned system: condition number {0:.3e}")]
    IllConditioned(f64),

    #[error("single-confounder criterion undetermined: {0}")]
    Undetermined(String),

    #[error("degenerate triad: {0}")]
    DegenerateTriad(String),

    #[error("cyclic ancestral evidence: {0}")]
    CyclicEvidence(String),

    #[error("rho undefined: {0}")]
    RhoUndefined(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than a broken invariant.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Invariant(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
