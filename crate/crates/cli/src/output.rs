//! CSV and SVG files with a provenance comment line.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliError;

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "NAMESCALE_OUT_DIR";

/// Tool version plus the SHA-256 of whatever configured the run: the
/// manifest bytes, or the argument list of a one-off subcommand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    hash: String,
}

impl Provenance {
    pub fn of_bytes(bytes: &[u8]) -> Self {
        let digest = Sha256::digest(bytes);
        let hash = digest.iter().map(|b| format!("{b:02x}")).collect();
        Provenance { hash }
    }

    /// Hash of the arguments joined by NUL, so argument boundaries count.
    pub fn of_args<I: IntoIterator<Item = String>>(args: I) -> Self {
        let joined = args.into_iter().collect::<Vec<_>>().join("\0");
        Self::of_bytes(joined.as_bytes())
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn comment(&self) -> String {
        format!("# namescale {} manifest={}", env!("CARGO_PKG_VERSION"), self.hash)
    }
}

fn create(stage: &str, path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::data(stage, format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::data(stage, format!("cannot write {}: {e}", path.display())))
}

/// Writes the provenance comment, the header row and the rows.
pub fn write_csv(
    stage: &str,
    path: &Path,
    provenance: &Provenance,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<PathBuf, CliError> {
    let io = |e: &dyn std::fmt::Display| CliError::data(stage, format!("writing {}: {e}", path.display()));
    let mut out = create(stage, path)?;
    writeln!(out, "{}", provenance.comment()).map_err(|e| io(&e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(|e| io(&e))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(CliError::invariant(
                stage,
                format!("row of {} fields under a header of {}", row.len(), header.len()),
            ));
        }
        w.write_record(row).map_err(|e| io(&e))?;
    }
    w.flush().map_err(|e| io(&e))?;
    Ok(path.to_path_buf())
}

/// Writes an SVG document preceded by the provenance as an XML comment.
pub fn write_svg(stage: &str, path: &Path, provenance: &Provenance, svg: &str) -> Result<PathBuf, CliError> {
    let mut out = create(stage, path)?;
    let comment = provenance.comment();
    write!(out, "<!--{} -->\n{svg}", comment.trim_start_matches('#'))
        .and_then(|_| out.flush())
        .map_err(|e| CliError::data(stage, format!("writing {}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

pub fn num(x: f64, places: usize) -> String {
    let s = format!("{x:.places$}");
    // "-0.0000" and "0.0000" must not differ between runs or platforms
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

pub fn opt_num(x: Option<f64>, places: usize) -> String {
    x.map(|v| num(v, places)).unwrap_or_default()
}
