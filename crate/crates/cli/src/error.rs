use std::fmt;

/// A failure reported as one machine-parsable line on stderr.
#[derive(Debug)]
pub struct CliError {
    pub module: &'static str,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn new(module: &'static str, kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            module,
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("cli", "usage", message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let message = serde_json::to_string(&self.message).expect("strings serialize");
        write!(f, "error module={} kind={} message={message}", self.module, self.kind)
    }
}

/// Attributes library errors to the module that raised them.
pub trait Context<T> {
    fn context(self, module: &'static str) -> Result<T, CliError>;
}

impl<T> Context<T> for lff::Result<T> {
    fn context(self, module: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(module, e.origin(), e.to_string()))
    }
}
