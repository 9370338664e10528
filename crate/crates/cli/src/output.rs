use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::CliError;

/// Seventeen significant digits, locale independent.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes `name` through `fill`, recording it for the manifest.
    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        fill(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// `manifest.txt`: tool version, command, resolved configuration and outputs.
    pub fn manifest(&mut self, command: &str, config: &RunConfig, extra: &[(String, String)]) -> Result<PathBuf, CliError> {
        let files: Vec<String> = self
            .written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        self.write("manifest.txt", |w| {
            writeln!(w, "tool = {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))?;
            writeln!(w, "command = {command}")?;
            for (k, v) in &config.echo {
                writeln!(w, "{k} = {v}")?;
            }
            writeln!(w, "solver_tol = {:e}", config.tol)?;
            for (k, v) in extra {
                writeln!(w, "{k} = {v}")?;
            }
            writeln!(w, "outputs = {}", files.join(","))
        })
    }
}
