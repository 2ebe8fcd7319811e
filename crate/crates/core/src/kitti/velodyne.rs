use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point3;

const RECORD: usize = 16;

/// A decoded velodyne scan.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VelodyneScan {
    pub points: Vec<Point3>,
    pub reflectance: Vec<f32>,
}

impl VelodyneScan {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn parse_velodyne(path: impl AsRef<Path>) -> Result<VelodyneScan> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_velodyne(&bytes, path)
}

/// Decodes little-endian `(x, y, z, reflectance)` f32 quadruples.
pub fn decode_velodyne(bytes: &[u8], path: &Path) -> Result<VelodyneScan> {
    if !bytes.len().is_multiple_of(RECORD) {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            len: bytes.len(),
            record: RECORD,
        });
    }
    let n = bytes.len() / RECORD;
    let mut scan = VelodyneScan {
        points: Vec::with_capacity(n),
        reflectance: Vec::with_capacity(n),
    };
    for rec in bytes.chunks_exact(RECORD) {
        let f = |k: usize| f32::from_le_bytes([rec[4 * k], rec[4 * k + 1], rec[4 * k + 2], rec[4 * k + 3]]);
        scan.points
            .push(Point3::new(f(0) as f64, f(1) as f64, f(2) as f64));
        scan.reflectance.push(f(3));
    }
    Ok(scan)
}

pub fn encode_velodyne(points: &[Point3], reflectance: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(points.len() * RECORD);
    for (i, p) in points.iter().enumerate() {
        let refl = reflectance.get(i).copied().unwrap_or(0.0);
        for v in [p.x as f32, p.y as f32, p.z as f32, refl] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_velodyne(path: impl AsRef<Path>, points: &[Point3], reflectance: &[f32]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_velodyne(points, reflectance)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_one_record() {
        let mut bytes = Vec::new();
        for v in [1.0f32, 2.0, 3.0, 0.5] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let scan = decode_velodyne(&bytes, Path::new("a.bin")).unwrap();
        assert_eq!(scan.points, vec![Point3::new(1.0, 2.0, 3.0)]);
        assert_eq!(scan.reflectance, vec![0.5]);
    }

    #[test]
    fn empty_and_truncated() {
        assert!(decode_velodyne(&[], Path::new("a.bin")).unwrap().is_empty());
        assert!(matches!(
            decode_velodyne(&[0u8; 17], Path::new("a.bin")),
            Err(Error::TruncatedFile { len: 17, .. })
        ));
    }

    proptest! {
        #[test]
        fn consumes_exactly_sixteen_bytes_per_point(
            raw in prop::collection::vec((-1e6f32..1e6, -1e6f32..1e6, -1e6f32..1e6, any::<f32>()), 0..64),
        ) {
            let mut bytes = Vec::new();
            for (x, y, z, r) in &raw {
                for v in [x, y, z, r] {
                    bytes.extend_from_slice(&v.to_le_bytes());
                }
            }
            let scan = decode_velodyne(&bytes, Path::new("a.bin")).unwrap();
            prop_assert_eq!(scan.len() * 16, bytes.len());
            for (i, (x, y, z, r)) in raw.iter().enumerate() {
                prop_assert_eq!((scan.points[i].x as f32).to_bits(), x.to_bits());
                prop_assert_eq!((scan.points[i].y as f32).to_bits(), y.to_bits());
                prop_assert_eq!((scan.points[i].z as f32).to_bits(), z.to_bits());
                prop_assert_eq!(scan.reflectance[i].to_bits(), r.to_bits());
            }
        }
    }
}
