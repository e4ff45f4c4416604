use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown {kind} '{name}'")]
    UnknownName { kind: &'static str, name: String },
    #[error("degenerate induced metric at node ({i0}, {i1}): det γ = {det:e}")]
    Degenerate { i0: usize, i1: usize, det: f64 },
    #[error("{0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
