use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The document is not valid JSON or does not match the schema.
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("pipe `{pipe}` references undeclared node `{node}`")]
    DanglingNode { pipe: String, node: String },
    #[error("duplicate pipe id `{0}`")]
    DuplicatePipe(String),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("pipe `{0}` is a self-loop")]
    SelfLoop(String),
    #[error("invalid pipe `{pipe}`: {reason}")]
    InvalidPipe { pipe: String, reason: String },
    #[error("invalid node `{node}`: {reason}")]
    InvalidNode { node: String, reason: String },
    #[error("network is disconnected: node `{0}` is unreachable")]
    Disconnected(String),
    #[error("network contains a directed cycle through pipe `{0}`")]
    Cycle(String),
    #[error("network needs at least one {0} node")]
    MissingTerminal(&'static str),
    #[error("invalid transmitter/receiver placement: {0}")]
    Placement(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular flow system: {0}")]
    SingularFlow(String),
    #[error("edge direction inconsistent with flow on pipe `{pipe}` (Q = {flow:e} m^3/s)")]
    FlowDirection { pipe: String, flow: f64 },
    #[error("no Tx->Rx path exists")]
    NoPath,
    #[error("path enumeration exceeded the cap of {0} paths")]
    PathExplosion(usize),
    #[error("particle exceeded {0} hops")]
    HopLimit(usize),
    #[error("frequency grid too coarse near f = {frequency} Hz: phase step {step} rad; refine the grid")]
    GridTooCoarse { frequency: f64, step: f64 },
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("channel tap zero at sampling time")]
    ZeroTap,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors raised while reading the input document, as opposed
    /// to errors about the model it describes.
    pub fn is_parse(&self) -> bool {
        matches!(
            self,
            Error::Schema(_)
                | Error::DanglingNode { .. }
                | Error::DuplicatePipe(_)
                | Error::DuplicateNode(_)
        )
    }
}
