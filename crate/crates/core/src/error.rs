use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntaxErrorKind {
    EmptyPattern,
    UnbalancedOpen,
    UnbalancedClose,
    EmptyGroup,
    EmptyAlternative,
    DanglingStar,
    TrailingEscape,
}

impl fmt::Display for SyntaxErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Self::EmptyPattern => "empty pattern",
            Self::UnbalancedOpen => "unclosed '('",
            Self::UnbalancedClose => "unmatched ')'",
            Self::EmptyGroup => "empty group",
            Self::EmptyAlternative => "empty alternative",
            Self::DanglingStar => "'*' with nothing to repeat",
            Self::TrailingEscape => "trailing backslash",
        };
        f.write_str(msg)
    }
}

/// A pattern rejected by the parser, with the byte offset of the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {kind}")]
pub struct SyntaxError {
    pub offset: usize,
    pub kind: SyntaxErrorKind,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("limit of {limit} exceeded")]
    LimitExceeded { limit: usize },
    #[error("no tables registered for shape {0:#x}")]
    UnknownShape(u64),
    #[error("table budget k={k} outside [{min}, {max}]")]
    BadBudget { k: u32, min: u32, max: u32 },
    #[error("distance bound {d} needs value lanes wider than a machine word allows")]
    DistanceTooLarge { d: usize },
    #[error("malformed serialized data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_budget(k: u32) -> Result<()> {
    if !(crate::MIN_K..=crate::WORD_BITS).contains(&k) {
        return Err(Error::BadBudget {
            k,
            min: crate::MIN_K,
            max: crate::WORD_BITS,
        });
    }
    Ok(())
}
