use parahyp_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Rejected(CoreError),

    #[error("{0}")]
    Numerical(CoreError),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status: 1 failed check, 2 bad input, 3 rejected forcing,
    /// 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Rejected(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::RejectedForcing(_) => CliError::Rejected(e),
            CoreError::InsufficientData { .. } => CliError::Numerical(e),
            e if e.is_numerical() => CliError::Numerical(e),
            e => CliError::Config(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_stable() {
        let q = CoreError::Quadrature { best: 0.0, error_bound: 1.0 };
        assert_eq!(CliError::from(q).exit_code(), 4);
        assert_eq!(CliError::from(CoreError::Cfl { dt: 2.0, dx: 1.0 }).exit_code(), 4);
        assert_eq!(CliError::from(CoreError::RejectedForcing(Vec::new())).exit_code(), 3);
        assert_eq!(CliError::from(CoreError::InvalidDomain("p".into())).exit_code(), 2);
        assert_eq!(CliError::VerificationFailed(String::new()).exit_code(), 1);
    }
}
