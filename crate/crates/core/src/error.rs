use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed graph document: {0}")]
    Malformed(String),

    #[error("missing source: the graph document has no `source` field")]
    MissingSource,

    #[error("nonpositive weight {weight} on edges[{edge}] = ({from} -> {to})")]
    NonpositiveWeight {
        edge: usize,
        from: i64,
        to: i64,
        weight: f64,
    },

    #[error("self-edge on node {node} (edges[{edge}])")]
    SelfEdge { edge: usize, node: i64 },

    #[error("duplicate edge edges[{edge}] = ({from} -> {to})")]
    DuplicateEdge { edge: usize, from: i64, to: i64 },

    #[error("{what} index {index} out of range [1, {max}]")]
    IndexOutOfRange {
        what: String,
        index: i64,
        max: usize,
    },

    #[error("label count {labels} does not match node count {nodes}")]
    LabelCount { labels: usize, nodes: usize },

    #[error("pinned Laplacian is singular (smallest pivot {min_pivot:.3e}, pivot ratio {pivot_ratio:.3e}); some agent is not reachable from the source")]
    SingularPinnedLaplacian { min_pivot: f64, pivot_ratio: f64 },

    #[error(
        "eigensolver did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error(
        "source connectivity violated: eigenvalue #{index} has real part {real_part:.3e} <= 0"
    )]
    NotSourceConnected { index: usize, real_part: f64 },

    #[error("spectrum is not real (max |imag| = {max_imag:.3e}); use the general complex bound")]
    NonRealSpectrum { max_imag: f64 },

    #[error("update gain {gamma} outside the stable range (0, {upper})")]
    GainOutOfRange { gamma: f64, upper: f64 },

    #[error("{what} is unstable (spectral radius {radius:.6}); pass --force to run anyway")]
    Unstable { what: String, radius: f64 },

    #[error("simulation diverged at step {step}")]
    Diverged { step: usize },

    #[error("empty gain grid")]
    EmptyGrid,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("cannot read {}: {source}", path.display())]
    ReadFile {
        path: std::path::PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularPinnedLaplacian { .. }
                | Error::NoConvergence { .. }
                | Error::NotSourceConnected { .. }
                | Error::NonRealSpectrum { .. }
                | Error::GainOutOfRange { .. }
                | Error::Unstable { .. }
                | Error::Diverged { .. }
        )
    }
}
