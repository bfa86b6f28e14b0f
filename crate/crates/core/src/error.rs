use alloc::string::String;

/// Errors reported by the simulator and the trainer.
///
/// The variants follow the error kinds the operator surface maps onto exit
/// codes: configuration and input errors are usage problems, training errors
/// signal divergence, composition errors come from policy reassembly.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("training error: {0}")]
    Training(String),
    /// Unsupported file format or robot model version.
    #[error("version error: {0}")]
    Version(String),
    #[error("composition error: {0}")]
    Composition(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! config_err {
    ($($arg:tt)*) => { $crate::Error::Config(alloc::format!($($arg)*)) };
}
macro_rules! input_err {
    ($($arg:tt)*) => { $crate::Error::Input(alloc::format!($($arg)*)) };
}
pub(crate) use config_err;
pub(crate) use input_err;
