use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::job::{Artifact, Format, Job};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub format: Format,
    pub rng_seed: Option<u64>,
    /// The resolved job, suffixes expanded and defaults filled in.
    pub parameters: Job,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(job: &Job, format: Format) -> Self {
        RunManifest {
            tool: env!("CARGO_BIN_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: job.name().to_string(),
            format,
            rng_seed: job.rng_seed(),
            parameters: job.clone(),
            outputs: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Emits the artifacts and the manifest. Without an output directory the
/// primary artifact goes to stdout and the manifest to stderr.
pub fn emit(job: &Job, format: Format, artifacts: Vec<Artifact>, output_dir: Option<&Path>) -> Result<RunManifest, CliError> {
    let mut manifest = RunManifest::new(job, format);
    match output_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            for a in &artifacts {
                let path: PathBuf = dir.join(&a.file_name);
                write_atomic(&path, &a.bytes)?;
                log::info!("wrote {}", path.display());
                manifest.outputs.push(path.display().to_string());
            }
            let bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
            write_atomic(&dir.join(MANIFEST_FILE), &bytes)?;
        }
        None => {
            if let Some(extra) = artifacts.iter().find(|a| !a.primary) {
                return Err(CliError::Validation(format!(
                    "{} needs --output-dir",
                    extra.file_name
                )));
            }
            let mut stdout = std::io::stdout().lock();
            for a in &artifacts {
                stdout.write_all(&a.bytes)?;
                manifest.outputs.push("-".into());
            }
            stdout.flush()?;
            let line = serde_json::to_string(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
            eprintln!("{line}");
        }
    }
    Ok(manifest)
}
