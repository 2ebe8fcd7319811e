//! KITTI-layout directories: frame discovery, per-frame loading, and
//! atomic output writes.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

use ppc_core::kitti::{frame_ids, parse_calib, parse_label_line, parse_velodyne, CalibrationSet, KittiLabel};
use ppc_core::{Error, Point3};

use crate::failure::{Failure, Outcome};

/// One non-blank line of a label or prediction file, kept verbatim so
/// filtered output reproduces the detector's own text.
#[derive(Debug, Clone)]
pub struct LabelLine {
    pub line_no: usize,
    pub text: String,
    pub label: KittiLabel,
}

pub fn read_label_lines(path: &Path) -> Outcome<Vec<LabelLine>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let label = parse_label_line(l)
                .map_err(|m| Failure::Parse(format!("{}: line {}: {m}", path.display(), i + 1)))?;
            Ok(LabelLine {
                line_no: i + 1,
                text: l.to_string(),
                label,
            })
        })
        .collect()
}

pub fn ids_in(dir: &Path, ext: &str) -> Outcome<BTreeSet<String>> {
    if !dir.is_dir() {
        return Err(Failure::usage(format!("{} is not a directory", dir.display())));
    }
    Ok(frame_ids(dir, ext)?)
}

/// Fails with the first id of `wanted` that `have` lacks.
pub fn require_ids(wanted: &BTreeSet<String>, have: &BTreeSet<String>, what: &str) -> Outcome {
    match wanted.iter().find(|id| !have.contains(*id)) {
        Some(id) => Err(Failure::FrameMismatch(format!("frame {id} has no {what} file"))),
        None => Ok(()),
    }
}

/// The inputs the classifier needs for one frame.
#[derive(Debug, Clone)]
pub struct ScanFrame {
    pub id: String,
    pub points: Vec<Point3>,
    pub calib: CalibrationSet,
    pub predictions: Vec<LabelLine>,
}

pub struct ScanDirs<'a> {
    pub pred: &'a Path,
    pub velo: &'a Path,
    pub calib: &'a Path,
}

impl ScanDirs<'_> {
    /// Ids of the prediction files, each checked to have a scan and a
    /// calibration. Scans without predictions are ignored.
    pub fn frame_ids(&self) -> Outcome<BTreeSet<String>> {
        let preds = ids_in(self.pred, "txt")?;
        require_ids(&preds, &ids_in(self.velo, "bin")?, "velodyne")?;
        require_ids(&preds, &ids_in(self.calib, "txt")?, "calibration")?;
        Ok(preds)
    }

    pub fn load(&self, id: &str) -> Outcome<ScanFrame> {
        let scan = parse_velodyne(self.velo.join(format!("{id}.bin")))?;
        Ok(ScanFrame {
            id: id.to_string(),
            points: scan.points,
            calib: parse_calib(self.calib.join(format!("{id}.txt")))?,
            predictions: read_label_lines(&self.pred.join(format!("{id}.txt")))?,
        })
    }
}

/// Writes through a temporary sibling and renames it into place, so an
/// interrupted run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Outcome {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(anyhow::Error::new(e)
            .context(format!("writing {}", path.display()))
            .into());
    }
    Ok(())
}
