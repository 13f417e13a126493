use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid waveform: {0}")]
    Waveform(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("propagator did not converge: step doubling changed the result by {0:.3e}")]
    PropagatorConvergence(f64),

    #[error("quadrature did not converge: sample doubling changed the result by {0:.3e}")]
    QuadratureConvergence(f64),

    #[error("state is not normalized: |norm - 1| = {0:.3e}")]
    NotNormalized(f64),

    #[error("effective temperature undefined: spectral function does not cool at this energy")]
    NoCooling,

    #[error("jump weight vanishes on this state")]
    ZeroJumpWeight,

    #[error("ground manifold is not twofold quasi-degenerate: splitting {splitting:.3e}, gap {gap:.3e}")]
    NotQuasiDegenerate { splitting: f64, gap: f64 },

    #[error("dynamics error: {0}")]
    Dynamics(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
