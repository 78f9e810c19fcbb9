//! Little-endian point records.
//!
//! LiDAR, 28 bytes: `x y z intensity` f32, `ring` u32, `time` f64 seconds.
//! Radar, 32 bytes: `x y z power snr v_xr v_yr t_diff` f32.

use std::path::Path;

use gtforge_core::geometry::{LidarAttrs, RadarAttrs};
use gtforge_core::{PointAttributes, PointCloud, PointKind, Vec3};

use super::{read_bytes, write_atomic};
use crate::error::{Error, Result, ResultExt};

pub const LIDAR_RECORD: usize = 28;
pub const RADAR_RECORD: usize = 32;

pub fn record_size(kind: PointKind) -> Result<usize> {
    match kind {
        PointKind::Lidar => Ok(LIDAR_RECORD),
        PointKind::Radar => Ok(RADAR_RECORD),
        PointKind::Plain => Err(Error::Invalid("plain clouds have no file format".into())),
    }
}

fn f32_at(b: &[u8], off: usize) -> f32 {
    f32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

pub fn decode_point_cloud(bytes: &[u8], kind: PointKind) -> Result<PointCloud> {
    let rec = record_size(kind)?;
    if !bytes.len().is_multiple_of(rec) {
        return Err(Error::SizeMismatch { len: bytes.len() as u64, record: rec as u64 });
    }
    let n = bytes.len() / rec;
    let mut positions = Vec::with_capacity(n);
    let attributes = match kind {
        PointKind::Lidar => {
            let mut a = LidarAttrs {
                intensity: Vec::with_capacity(n),
                ring: Vec::with_capacity(n),
                time_s: Vec::with_capacity(n),
            };
            for r in bytes.chunks_exact(rec) {
                positions.push(Vec3::new(f32_at(r, 0).into(), f32_at(r, 4).into(), f32_at(r, 8).into()));
                a.intensity.push(f32_at(r, 12));
                a.ring.push(u32_at(r, 16));
                a.time_s.push(f64::from_le_bytes(r[20..28].try_into().unwrap()));
            }
            PointAttributes::Lidar(a)
        }
        _ => {
            let mut a = RadarAttrs::default();
            for r in bytes.chunks_exact(rec) {
                positions.push(Vec3::new(f32_at(r, 0).into(), f32_at(r, 4).into(), f32_at(r, 8).into()));
                a.power.push(f32_at(r, 12));
                a.snr.push(f32_at(r, 16));
                a.v_xr.push(f32_at(r, 20));
                a.v_yr.push(f32_at(r, 24));
                a.t_diff.push(f32_at(r, 28));
            }
            PointAttributes::Radar(a)
        }
    };
    Ok(PointCloud::new(positions, attributes)?)
}

/// Positions are narrowed to f32.
pub fn encode_point_cloud(cloud: &PointCloud) -> Result<Vec<u8>> {
    let rec = record_size(cloud.kind())?;
    let mut out = Vec::with_capacity(cloud.len() * rec);
    for (i, p) in cloud.positions().iter().enumerate() {
        for c in [p.x, p.y, p.z] {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
        match cloud.attributes() {
            PointAttributes::Lidar(a) => {
                out.extend_from_slice(&a.intensity[i].to_le_bytes());
                out.extend_from_slice(&a.ring[i].to_le_bytes());
                out.extend_from_slice(&a.time_s[i].to_le_bytes());
            }
            PointAttributes::Radar(a) => {
                for v in [a.power[i], a.snr[i], a.v_xr[i], a.v_yr[i], a.t_diff[i]] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            PointAttributes::Plain => unreachable!(),
        }
    }
    Ok(out)
}

pub fn read_point_cloud(path: &Path, kind: PointKind) -> Result<PointCloud> {
    decode_point_cloud(&read_bytes(path)?, kind).in_file(path)
}

pub fn write_point_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    write_atomic(path, &encode_point_cloud(cloud).in_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lidar_record(x: f32, ring: u32, t: f64) -> Vec<u8> {
        let mut r = Vec::new();
        for v in [x, 2.0, 3.0, 0.5] {
            r.extend_from_slice(&v.to_le_bytes());
        }
        r.extend_from_slice(&ring.to_le_bytes());
        r.extend_from_slice(&t.to_le_bytes());
        r
    }

    #[test]
    fn two_lidar_points_round_trip() {
        let mut bytes = lidar_record(1.0, 7, 0.25);
        bytes.extend(lidar_record(-4.5, 31, 0.0375));
        assert_eq!(bytes.len(), 56);
        let cloud = decode_point_cloud(&bytes, PointKind::Lidar).unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.positions()[1], Vec3::new(-4.5, 2.0, 3.0));
        match cloud.attributes() {
            PointAttributes::Lidar(a) => assert_eq!((a.ring[1], a.time_s[0]), (31, 0.25)),
            other => panic!("{other:?}"),
        }
        assert_eq!(encode_point_cloud(&cloud).unwrap(), bytes);
    }

    #[test]
    fn empty_and_truncated() {
        assert!(decode_point_cloud(&[], PointKind::Lidar).unwrap().is_empty());
        assert!(matches!(
            decode_point_cloud(&[0; 30], PointKind::Lidar),
            Err(Error::SizeMismatch { len: 30, record: 28 })
        ));
        assert!(decode_point_cloud(&[0; 64], PointKind::Radar).is_ok());
    }

    #[test]
    fn non_finite_position() {
        let bytes = lidar_record(f32::NAN, 0, 0.0);
        assert!(matches!(
            decode_point_cloud(&bytes, PointKind::Lidar),
            Err(Error::Core(gtforge_core::Error::NonFinite(0)))
        ));
    }
}
