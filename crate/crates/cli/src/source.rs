use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use lipdyn::dsl::{parse_map, DslError, MapDefinition};
use lipdyn::maps::{builtin, from_dsl, MapError, ParamFamily, ScalarMap};
use thiserror::Error;

const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("cannot read {}: {err}", path.display())]
    Io { path: PathBuf, err: io::Error },
    #[error("{}: {err}", path.display())]
    Parse { path: PathBuf, err: DslError },
    #[error(transparent)]
    Builtin(#[from] MapError),
}

/// Reads and parses a `.map` file.
pub fn load_map_file(path: &Path) -> Result<MapDefinition, SourceError> {
    let text = fs::read_to_string(path).map_err(|err| SourceError::Io {
        path: path.to_path_buf(),
        err,
    })?;
    parse_map(&text).map_err(|err| SourceError::Parse {
        path: path.to_path_buf(),
        err,
    })
}

/// Resolves `builtin:<spec>` or a file path.
pub fn resolve(spec: &str) -> Result<ScalarMap, SourceError> {
    match spec.strip_prefix(BUILTIN_PREFIX) {
        Some(family) => Ok(builtin(&family.parse::<ParamFamily>()?)?),
        None => Ok(from_dsl(&load_map_file(Path::new(spec))?)),
    }
}
