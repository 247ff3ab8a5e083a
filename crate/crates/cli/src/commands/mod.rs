//! Subcommand implementations.

pub mod curate;
pub mod eval;
pub mod generate;
pub mod preview;
pub mod refine;

use lesionforge::volume::{LabelMap, Volume3D};
use std::path::Path;

/// Atomic NIfTI writes: the temp name keeps the final `.nii[.gz]` suffix so
/// compression detection matches, then renames over the target.
fn tmp_sibling(path: &Path) -> std::path::PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!(".tmp-{name}"))
}

pub fn write_volume_atomic(path: &Path, vol: &Volume3D) -> lesionforge::Result<()> {
    let tmp = tmp_sibling(path);
    lesionforge::io::nifti::write_volume(&tmp, vol)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_labels_atomic(path: &Path, labels: &LabelMap) -> lesionforge::Result<()> {
    let tmp = tmp_sibling(path);
    lesionforge::io::nifti::write_labels(&tmp, labels)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Resolve a manifest-relative path against the manifest's directory.
pub fn resolve_path(base: &Path, p: &Path) -> std::path::PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
