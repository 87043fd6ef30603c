use thiserror::Error;

/// Why a deterministic evaluation did not produce an output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    Stuck,
    NonFinalEnd,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::Stuck => f.write_str("stuck"),
            RejectReason::NonFinalEnd => f.write_str("non-final end"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("not well-nested at position {position}")]
    NotWellNested { position: usize },
    #[error("alphabet mismatch")]
    AlphabetMismatch,
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("invalid machine: {0}")]
    InvalidMachine(String),
    #[error("resource limit exceeded: {what} > {limit}")]
    ResourceLimit { what: &'static str, limit: usize },
    #[error("machine is not unambiguous")]
    NotUnambiguous,
    #[error("not letter-to-letter: {0}")]
    NotLetterToLetter(String),
    #[error("not deterministic: {0}")]
    NotDeterministic(String),
    #[error("not co-deterministic: {0}")]
    NotCoDeterministic(String),
    #[error("look-around checker has no accepting run")]
    NoAcceptingRun,
    #[error("look-around guards are not disjoint: {0}")]
    GuardsNotDisjoint(String),
    #[error("look-around requires checked evaluation")]
    LookaroundUnsupported,
    #[error("single-use precondition violated: {0}")]
    SingleUseIllFormed(String),
    #[error("producing cycle on a required entry: {0}")]
    ProducingCycle(String),
    #[error("rejected at position {position} ({reason})")]
    Rejected { position: usize, reason: RejectReason },
    #[error("diverged at position {position}")]
    Diverged { position: usize },
    #[error("step limit exceeded after {steps} steps")]
    StepLimitExceeded { steps: u64 },
    #[error("no final output in state {0}")]
    NoFinalOutput(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
