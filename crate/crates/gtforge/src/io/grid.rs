//! OGRD voxel grids: `"OGRD"`, u32 version 1, f64×3 origin, f64 voxel size,
//! u32×3 dims, then one code per cell in linear index order. Little-endian.

use std::path::Path;

use gtforge_core::{Vec3, VoxelGrid};

use super::{read_bytes, write_atomic};
use crate::error::{Error, Result, ResultExt};

pub const MAGIC: [u8; 4] = *b"OGRD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 52;

pub fn encode_grid(grid: &VoxelGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + grid.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [grid.origin.x, grid.origin.y, grid.origin.z, grid.voxel_size] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for d in grid.dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(grid.labels());
    out
}

pub fn decode_grid(bytes: &[u8]) -> Result<VoxelGrid> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        let mut m = [0u8; 4];
        let n = bytes.len().min(4);
        m[..n].copy_from_slice(&bytes[..n]);
        return Err(Error::BadMagic(m));
    }
    if bytes.len() < 8 {
        return Err(Error::GridSize { expected: HEADER_LEN as u64, found: bytes.len() as u64 });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::BadVersion(version));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::GridSize { expected: HEADER_LEN as u64, found: bytes.len() as u64 });
    }
    let origin = Vec3::new(f64_at(8), f64_at(16), f64_at(24));
    let voxel = f64_at(32);
    let dims = [u32_at(40), u32_at(44), u32_at(48)];
    let cells: u64 = dims.iter().map(|&d| u64::from(d)).product();
    let found = (bytes.len() - HEADER_LEN) as u64;
    if found != cells {
        return Err(Error::GridSize { expected: cells, found });
    }
    Ok(VoxelGrid::from_labels(origin, voxel, dims, bytes[HEADER_LEN..].to_vec())?)
}

pub fn read_grid(path: &Path) -> Result<VoxelGrid> {
    decode_grid(&read_bytes(path)?).in_file(path)
}

pub fn write_grid(path: &Path, grid: &VoxelGrid) -> Result<()> {
    write_atomic(path, &encode_grid(grid))
}
