use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl Failure {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
            key: None,
            path: None,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config", message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new("data", message)
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self::new("numeric", message)
    }

    /// Failure to write run artifacts.
    pub fn output(path: &Path, err: impl std::fmt::Display) -> Self {
        Self {
            path: Some(path.display().to_string()),
            ..Self::new("io", format!("{}: {err}", path.display()))
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            "usage" => 2,
            "config" => 3,
            "data" => 4,
            "numeric" => 5,
            "io" => 6,
            _ => 7,
        }
    }

    pub fn report(&self) -> ExitCode {
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: &'a Failure,
        }
        eprintln!("{}", serde_json::to_string(&Wrapper { error: self }).expect("failure serializes"));
        ExitCode::from(self.exit_code())
    }
}

impl From<smixup::Error> for Failure {
    fn from(e: smixup::Error) -> Self {
        let mut f = Self::new(e.kind(), e.to_string());
        match &e {
            smixup::Error::Config { key, .. } => f.key = Some(key.clone()),
            smixup::Error::Parse { path, .. } | smixup::Error::Io { path, .. } => {
                f.path = Some(path.display().to_string())
            }
            _ => {}
        }
        f
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;
