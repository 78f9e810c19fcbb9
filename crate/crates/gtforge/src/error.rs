use std::path::PathBuf;

/// Failures of the file-backed tools.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{len} bytes is not a whole number of {record}-byte records")]
    SizeMismatch { len: u64, record: u64 },
    #[error("grid payload has {found} label bytes, header promises {expected}")]
    GridSize { expected: u64, found: u64 },
    #[error("bad magic {0:?}, expected \"OGRD\"")]
    BadMagic([u8; 4]),
    #[error("unsupported grid version {0}")]
    BadVersion(u32),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("keyframe {0} has no annotation file")]
    KeyframeMissingAnnotation(i64),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] gtforge_core::Error),
    #[error("{}: {source}", path.display())]
    InFile { path: PathBuf, source: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io { path: path.into(), source }
    }

    /// Attaches the file being processed.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Error {
        match self {
            e @ (Error::Io { .. } | Error::InFile { .. }) => e,
            e => Error::InFile { path: path.into(), source: Box::new(e) },
        }
    }

    /// Process exit status: 2 for I/O and format problems, 3 for inputs
    /// that parse but fail validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::SizeMismatch { .. }
            | Error::GridSize { .. }
            | Error::BadMagic(_)
            | Error::BadVersion(_)
            | Error::Parse(_) => 2,
            Error::Core(e) if e.is_source() => 2,
            Error::Core(gtforge_core::Error::InvalidLabelCode(_) | gtforge_core::Error::NonFinite(_)) => 2,
            Error::InFile { source, .. } => source.exit_code(),
            Error::KeyframeMissingAnnotation(_) | Error::Manifest(_) | Error::Invalid(_) | Error::Core(_) => 3,
        }
    }
}

pub trait ResultExt<T> {
    fn in_file(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T, E: Into<Error>> ResultExt<T> for std::result::Result<T, E> {
    fn in_file(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|e| e.into().in_file(path))
    }
}
