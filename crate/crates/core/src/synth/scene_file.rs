//! Line-based scene descriptions.
//!
//! ```text
//! # comment
//! lidar az_min=-0.8 az_max=0.8 az_step=0.003 el_min=-0.43 el_max=0.06 el_step=0.0078 range=120
//! wall axis=z offset=-1.73 extent=200,200 cu=60 cv=0
//! box cx=30 cy=0 cz=0 w=0.2 l=8 h=4 yaw=1.5708
//! car cad=sedan cx=15 cy=3 cz=-0.98 w=1.8 l=4.5 h=1.5 yaw=0.3
//! detection cx=12 cy=-2 cz=-0.98 w=1.8 l=4.5 h=1.5 yaw=0 score=0.4
//! ```
//!
//! Wall `extent` gives the full side lengths of the patch along the two
//! remaining axes in x, y, z order (one value for a square); `cu`/`cv`
//! center it. A `car` with `cad=sedan` (the default) casts against the
//! built-in sedan solid; any other value casts against its bounding box.
//! Every `car` line is also a ground-truth box.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{Axis, LidarGrid, PlanePatch, Primitive, Scene};
use crate::cad::{BoxSize, Detection, OrientedBox3};
use crate::error::{Error, Result};
use crate::geometry::Point3;

#[derive(Debug, Clone)]
pub struct SceneFile {
    pub scene: Scene,
    pub grid: LidarGrid,
    pub ground_truth: Vec<OrientedBox3>,
    pub detections: Vec<Detection>,
}

pub fn parse_scene(path: impl AsRef<Path>) -> Result<SceneFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene_str(&text, path)
}

struct Fields<'a> {
    map: HashMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn parse(tokens: &[&'a str]) -> std::result::Result<Self, String> {
        let mut map = HashMap::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{tok}`"))?;
            if map.insert(k, v).is_some() {
                return Err(format!("duplicate key `{k}`"));
            }
        }
        Ok(Fields { map })
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.map.get(key).copied()
    }

    fn opt(&self, key: &str) -> std::result::Result<Option<f64>, String> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| format!("bad number for `{key}`: `{v}`"))
            })
            .transpose()
    }

    fn num(&self, key: &str) -> std::result::Result<f64, String> {
        self.opt(key)?.ok_or_else(|| format!("missing `{key}`"))
    }

    fn oriented_box(&self) -> std::result::Result<OrientedBox3, String> {
        let center = Point3::new(self.num("cx")?, self.num("cy")?, self.num("cz")?);
        let size = BoxSize::new(self.num("w")?, self.num("l")?, self.num("h")?);
        OrientedBox3::new(center, size, self.opt("yaw")?.unwrap_or(0.0)).map_err(|e| e.to_string())
    }

    fn check_known(&self, known: &[&str]) -> std::result::Result<(), String> {
        match self.map.keys().find(|k| !known.contains(k)) {
            Some(k) => Err(format!("unknown key `{k}`")),
            None => Ok(()),
        }
    }
}

const BOX_KEYS: [&str; 7] = ["cx", "cy", "cz", "w", "l", "h", "yaw"];

fn parse_wall(f: &Fields) -> std::result::Result<PlanePatch, String> {
    f.check_known(&["axis", "offset", "extent", "cu", "cv"])?;
    let axis = match f.raw("axis").ok_or("missing `axis`")? {
        "x" | "X" => Axis::X,
        "y" | "Y" => Axis::Y,
        "z" | "Z" => Axis::Z,
        other => return Err(format!("bad axis `{other}`")),
    };
    let extent = f.raw("extent").ok_or("missing `extent`")?;
    let sides: Vec<f64> = extent
        .split(',')
        .map(|s| s.parse::<f64>().map_err(|_| format!("bad extent `{extent}`")))
        .collect::<std::result::Result<_, _>>()?;
    let half = match sides.as_slice() {
        [a] => [a / 2.0, a / 2.0],
        [a, b] => [a / 2.0, b / 2.0],
        _ => return Err(format!("bad extent `{extent}`")),
    };
    Ok(PlanePatch {
        axis,
        offset: f.num("offset")?,
        center: [f.opt("cu")?.unwrap_or(0.0), f.opt("cv")?.unwrap_or(0.0)],
        half,
    })
}

fn parse_lidar(f: &Fields) -> std::result::Result<LidarGrid, String> {
    f.check_known(&[
        "az_min", "az_max", "az_step", "el_min", "el_max", "el_step", "range",
    ])?;
    let d = LidarGrid::default();
    let grid = LidarGrid {
        az_min: f.opt("az_min")?.unwrap_or(d.az_min),
        az_max: f.opt("az_max")?.unwrap_or(d.az_max),
        az_step: f.opt("az_step")?.unwrap_or(d.az_step),
        el_min: f.opt("el_min")?.unwrap_or(d.el_min),
        el_max: f.opt("el_max")?.unwrap_or(d.el_max),
        el_step: f.opt("el_step")?.unwrap_or(d.el_step),
        max_range: f.opt("range")?.unwrap_or(d.max_range),
    };
    grid.validate().map_err(|e| e.to_string())?;
    Ok(grid)
}

pub fn parse_scene_str(text: &str, path: &Path) -> Result<SceneFile> {
    let mut out = SceneFile {
        scene: Scene::default(),
        grid: LidarGrid::default(),
        ground_truth: Vec::new(),
        detections: Vec::new(),
    };
    let mut seen_lidar = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let mut step = || -> std::result::Result<(), String> {
            let f = Fields::parse(&tokens[1..])?;
            match tokens[0] {
                "box" => {
                    f.check_known(&BOX_KEYS)?;
                    let b = f.oriented_box()?;
                    out.scene.add(Primitive::Box(b)).map_err(|e| e.to_string())?;
                }
                "wall" => {
                    let w = parse_wall(&f)?;
                    out.scene.add(Primitive::Wall(w)).map_err(|e| e.to_string())?;
                }
                "car" => {
                    let mut keys = BOX_KEYS.to_vec();
                    keys.push("cad");
                    f.check_known(&keys)?;
                    let pose = f.oriented_box()?;
                    let bounds_only = f.raw("cad").is_some_and(|c| c != "sedan");
                    out.scene
                        .add(Primitive::Car { pose, bounds_only })
                        .map_err(|e| e.to_string())?;
                    out.ground_truth.push(pose);
                }
                "lidar" => {
                    if seen_lidar {
                        return Err("more than one lidar record".into());
                    }
                    seen_lidar = true;
                    out.grid = parse_lidar(&f)?;
                }
                "detection" => {
                    let mut keys = BOX_KEYS.to_vec();
                    keys.extend(["score", "class"]);
                    f.check_known(&keys)?;
                    out.detections.push(Detection {
                        bbox: f.oriented_box()?,
                        score: f.num("score")?,
                        class: f.raw("class").unwrap_or("Car").to_string(),
                    });
                }
                other => return Err(format!("unknown record `{other}`")),
            }
            Ok(())
        };
        step().map_err(|m| Error::parse(path, i + 1, m))?;
    }
    Ok(out)
}
