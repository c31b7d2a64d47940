use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Syntax or validation error in a textual source file.
    #[error("{file}:{line}:{col}: {msg}")]
    Parse {
        file: String,
        line: usize,
        col: usize,
        msg: String,
    },

    /// A pass rejected the program (capacity overflow, bad configuration, ...).
    #[error("{0}")]
    Invalid(String),

    /// Malformed or truncated bootstream.
    #[error("bootstream: {0}")]
    Bootstream(String),

    /// The machine observed a schedule bug at run time (dropped message or
    /// data-hazard violation). Compiled schedules must never trigger this.
    #[error("schedule bug: {0}")]
    ScheduleBug(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(file: &str, line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.to_string(),
            line,
            col,
            msg: msg.into(),
        }
    }
}
