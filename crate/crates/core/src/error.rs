use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("divisibility error: {value} is not divisible by {divisor} ({context})")]
    Divisibility {
        value: usize,
        divisor: usize,
        context: &'static str,
    },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("channel count mismatch: {0}")]
    ChannelMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("layer {index} ({name}): {source}")]
    Layer {
        index: usize,
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn at_layer(self, index: usize, name: &str) -> Self {
        Error::Layer {
            index,
            name: name.to_string(),
            source: Box::new(self),
        }
    }
}
