use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::CliError;

/// Destination for one command's artifacts.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<&Path>) -> Result<Self, CliError> {
        if let Some(d) = dir {
            fs::create_dir_all(d).map_err(|e| CliError::input(format!("{}: {e}", d.display())))?;
        }
        Ok(Sink { dir: dir.map(Path::to_path_buf) })
    }

    /// Writes `name` into the output directory via a temporary file and a
    /// rename, or to stdout when no directory was given.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<Option<PathBuf>, CliError> {
        match &self.dir {
            None => {
                let mut out = io::stdout().lock();
                out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| CliError::input(format!("stdout: {e}")))?;
                Ok(None)
            }
            Some(dir) => {
                let path = dir.join(name);
                write_atomic(&path, bytes)?;
                Ok(Some(path))
            }
        }
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io_err = |e: io::Error| CliError::input(format!("{}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// `# key: value` lines placed ahead of CSV output.
pub fn comment_header(meta: &[(&str, String)]) -> String {
    meta.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
}

pub fn meta_json(meta: &[(&str, String)]) -> serde_json::Value {
    serde_json::Value::Object(meta.iter().map(|(k, v)| (k.to_string(), serde_json::Value::String(v.clone()))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let sink = Sink::new(Some(dir.path())).unwrap();
        sink.write("a.txt", b"one").unwrap();
        let p = sink.write("a.txt", b"two").unwrap().unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn header_lines() {
        assert_eq!(comment_header(&[("seed", "3".into()), ("t", "0..5".into())]), "# seed: 3\n# t: 0..5\n");
    }
}
