use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// One object line of a KITTI label or prediction file, camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KittiLabel {
    pub kind: String,
    pub truncated: f64,
    pub occluded: i32,
    pub alpha: f64,
    /// left, top, right, bottom in pixels.
    pub bbox: [f64; 4],
    /// height, width, length in meters.
    pub dims: [f64; 3],
    /// Bottom-face center in the rectified camera frame.
    pub location: [f64; 3],
    pub rotation_y: f64,
    pub score: Option<f64>,
}

impl KittiLabel {
    pub fn bbox_height(&self) -> f64 {
        self.bbox[3] - self.bbox[1]
    }

    pub fn is_dont_care(&self) -> bool {
        self.kind == "DontCare"
    }
}

/// KITTI object difficulty levels, from the devkit thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
    Ignored,
}

impl Difficulty {
    pub fn name(&self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Moderate => "moderate",
            Difficulty::Hard => "hard",
            Difficulty::Ignored => "ignored",
        }
    }
}

impl std::str::FromStr for Difficulty {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Ok(Difficulty::Easy),
            "moderate" => Ok(Difficulty::Moderate),
            "hard" => Ok(Difficulty::Hard),
            _ => Err(Error::InvalidArgument(format!("unknown difficulty {s:?}"))),
        }
    }
}

pub fn assign_difficulty(label: &KittiLabel) -> Difficulty {
    if label.is_dont_care() {
        return Difficulty::Ignored;
    }
    let height = label.bbox_height();
    let (occ, trunc) = (label.occluded, label.truncated);
    if height >= 40.0 && occ <= 0 && trunc <= 0.15 {
        Difficulty::Easy
    } else if height >= 25.0 && occ <= 1 && trunc <= 0.30 {
        Difficulty::Moderate
    } else if height >= 25.0 && occ <= 2 && trunc <= 0.50 {
        Difficulty::Hard
    } else {
        Difficulty::Ignored
    }
}

pub fn parse_labels(path: impl AsRef<Path>) -> Result<Vec<KittiLabel>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels_str(&text, path)
}

/// Parses label text. Blank lines are skipped; line numbers in errors are
/// 1-based physical lines.
pub fn parse_labels_str(text: &str, path: &Path) -> Result<Vec<KittiLabel>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_label_line(l).map_err(|m| Error::parse(path, i + 1, m)))
        .collect()
}

pub fn parse_label_line(line: &str) -> std::result::Result<KittiLabel, String> {
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() != 15 && f.len() != 16 {
        return Err(format!("expected 15 or 16 fields, found {}", f.len()));
    }
    let num = |k: usize| -> std::result::Result<f64, String> {
        f[k].parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("field {}: bad number {:?}", k + 1, f[k]))
    };
    let occluded = f[2]
        .parse::<i32>()
        .or_else(|_| num(2).map(|v| v as i32))
        .map_err(|_| format!("field 3: bad occlusion {:?}", f[2]))?;
    Ok(KittiLabel {
        kind: f[0].to_string(),
        truncated: num(1)?,
        occluded,
        alpha: num(3)?,
        bbox: [num(4)?, num(5)?, num(6)?, num(7)?],
        dims: [num(8)?, num(9)?, num(10)?],
        location: [num(11)?, num(12)?, num(13)?],
        rotation_y: num(14)?,
        score: if f.len() == 16 { Some(num(15)?) } else { None },
    })
}

/// Serializes one label the way the devkit does: two decimals for every
/// geometric field. Scores keep four decimals so rankings survive a round
/// trip.
pub fn format_label(l: &KittiLabel) -> String {
    let mut s = format!(
        "{} {:.2} {} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2}",
        l.kind,
        l.truncated,
        l.occluded,
        l.alpha,
        l.bbox[0],
        l.bbox[1],
        l.bbox[2],
        l.bbox[3],
        l.dims[0],
        l.dims[1],
        l.dims[2],
        l.location[0],
        l.location[1],
        l.location[2],
        l.rotation_y,
    );
    if let Some(score) = l.score {
        let _ = write!(s, " {score:.4}");
    }
    s
}

pub fn format_labels(labels: &[KittiLabel]) -> String {
    let mut out = String::new();
    for l in labels {
        out.push_str(&format_label(l));
        out.push('\n');
    }
    out
}

pub fn write_labels(labels: &[KittiLabel], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_labels(labels)).map_err(|e| Error::io(path, e))
}
