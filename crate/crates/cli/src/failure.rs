use std::fmt;

/// Why a run stopped, and the matching process exit status.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or ill-formed config.
    Schema(String),
    /// An expression in the config did not parse.
    Expression { what: String, source: hyperlace::Error },
    Core(hyperlace::Error),
    /// The task ran but its check did not hold.
    Check(String),
    Io(std::io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        use hyperlace::Error as E;
        match self {
            Failure::Schema(_) | Failure::Expression { .. } => 2,
            Failure::Core(e) => match e {
                E::Syntax { .. }
                | E::UnknownIdentifier { .. }
                | E::VariableOutOfRange { .. }
                | E::ImaginaryLiteral
                | E::InvalidSignature(_)
                | E::InvalidGrid(_)
                | E::InvalidTimeGrid(_)
                | E::Unsupported(_) => 2,
                E::Hypothesis(_) | E::ConditionA { .. } | E::Precondition(_) => 3,
                E::Io(_) | E::Json(_) => 1,
                _ => 4,
            },
            Failure::Check(_) => 4,
            Failure::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "schema",
            3 => "hypothesis",
            4 => "numerical",
            _ => "io",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Schema(m) | Failure::Check(m) => f.write_str(m),
            Failure::Expression { what, source } => write!(f, "{what}: {source}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<hyperlace::Error> for Failure {
    fn from(e: hyperlace::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hyperlace::Error as E;

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(E::Syntax { offset: 3, message: String::new() }).exit_code(), 2);
        assert_eq!(Failure::from(E::Hypothesis(String::new())).exit_code(), 3);
        assert_eq!(Failure::from(E::ConditionA { point: vec![], detail: String::new() }).exit_code(), 3);
        assert_eq!(Failure::from(E::Instability(String::new())).exit_code(), 4);
        assert_eq!(Failure::from(E::NonFinite { location: String::new() }).exit_code(), 4);
        assert_eq!(Failure::Check(String::new()).exit_code(), 4);
        assert_eq!(Failure::Io(std::io::Error::other("x")).exit_code(), 1);
    }
}
