use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    /// A model was evaluated outside the range it is defined for.
    #[error("`{name}` = {value} is outside the validity range of the model ({range})")]
    OutOfValidity {
        name: String,
        value: f64,
        range: String,
    },

    /// The channel matrix does not have full column rank.
    #[error("singular channel: {0}")]
    SingularChannel(String),

    /// A statistic was requested from an empty sample.
    #[error("empty statistics: {0}")]
    EmptyStats(String),

    /// A failure inside one segment of the end-to-end chain.
    #[error("segment {segment}: {source}")]
    Segment {
        segment: crate::Segment,
        #[source]
        source: Box<SimError>,
    },
}

impl SimError {
    pub fn parameter(name: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::Parameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn in_segment(self, segment: crate::Segment) -> Self {
        SimError::Segment {
            segment,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
