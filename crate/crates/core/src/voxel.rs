//! Dense semantic occupancy volume and the grid layout configuration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::classes::{is_valid_code, FREE};
use crate::error::{Error, Result};
use crate::math::Vec3;

/// Dense label volume. Cell `(ix, iy, iz)` is stored at
/// `(ix·ny + iy)·nz + iz`.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    /// Minimum corner, m.
    pub origin: Vec3,
    pub voxel_size: f64,
    pub dims: [u32; 3],
    labels: Vec<u8>,
}

impl VoxelGrid {
    /// All-free grid.
    pub fn free(origin: Vec3, voxel_size: f64, dims: [u32; 3]) -> Result<VoxelGrid> {
        let n = checked_cells(dims)?;
        VoxelGrid::from_labels(origin, voxel_size, dims, vec![FREE; n])
    }

    /// Validates dimensions, label count and the code table.
    pub fn from_labels(origin: Vec3, voxel_size: f64, dims: [u32; 3], labels: Vec<u8>) -> Result<VoxelGrid> {
        let n = checked_cells(dims)?;
        if !(voxel_size.is_finite() && voxel_size > 0.0) || !origin.is_finite() {
            return Err(Error::InvalidParams(format!("bad grid geometry: origin {origin:?}, voxel size {voxel_size}")));
        }
        if labels.len() != n {
            return Err(Error::LabelLengthMismatch { expected: n, found: labels.len() });
        }
        if let Some(bad) = labels.iter().find(|&&c| !is_valid_code(c)) {
            return Err(Error::InvalidLabelCode(*bad));
        }
        Ok(VoxelGrid { origin, voxel_size, dims, labels })
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn linear_index(&self, ix: u32, iy: u32, iz: u32) -> usize {
        let [_, ny, nz] = self.dims;
        (ix as usize * ny as usize + iy as usize) * nz as usize + iz as usize
    }

    pub fn cell_of(&self, index: usize) -> [u32; 3] {
        let [_, ny, nz] = self.dims;
        let (ny, nz) = (ny as usize, nz as usize);
        [(index / (ny * nz)) as u32, ((index / nz) % ny) as u32, (index % nz) as u32]
    }

    pub fn get(&self, ix: u32, iy: u32, iz: u32) -> u8 {
        self.labels[self.linear_index(ix, iy, iz)]
    }

    /// Panics on a code outside the table.
    pub fn set(&mut self, ix: u32, iy: u32, iz: u32, code: u8) {
        assert!(is_valid_code(code), "label code {code} outside the code table");
        let i = self.linear_index(ix, iy, iz);
        self.labels[i] = code;
    }

    pub fn center(&self, ix: u32, iy: u32, iz: u32) -> Vec3 {
        let s = self.voxel_size;
        self.origin + Vec3::new((ix as f64 + 0.5) * s, (iy as f64 + 0.5) * s, (iz as f64 + 0.5) * s)
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_at(&self, p: Vec3) -> Option<[u32; 3]> {
        cell_at(self.origin, self.voxel_size, self.dims, p)
    }

    pub fn same_shape(&self, other: &VoxelGrid) -> bool {
        self.origin == other.origin && self.voxel_size == other.voxel_size && self.dims == other.dims
    }

    pub fn occupied_count(&self) -> usize {
        self.labels.iter().filter(|&&c| c != FREE).count()
    }
}

pub(crate) fn cell_at(origin: Vec3, voxel_size: f64, dims: [u32; 3], p: Vec3) -> Option<[u32; 3]> {
    let mut cell = [0u32; 3];
    for (a, c) in cell.iter_mut().enumerate() {
        let f = libm::floor((p.get(a) - origin.get(a)) / voxel_size);
        if !(f >= 0.0 && f < dims[a] as f64) {
            return None;
        }
        *c = f as u32;
    }
    Some(cell)
}

fn checked_cells(dims: [u32; 3]) -> Result<usize> {
    let n = dims.iter().map(|&d| u64::from(d)).product::<u64>();
    if dims.contains(&0) || n > (1u64 << 31) {
        return Err(Error::InvalidParams(format!("grid dims {dims:?} must be positive with at most 2^31 cells")));
    }
    Ok(n as usize)
}

/// Metric extent and resolution of generated grids.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OccConfig {
    /// `(xmin, xmax, ymin, ymax, zmin, zmax)` in ego coordinates, m.
    pub range: [f64; 6],
    pub voxel_size: f64,
    pub filter_radius: f64,
    pub filter_min_neighbors: usize,
    pub use_non_keyframes: bool,
}

impl Default for OccConfig {
    fn default() -> Self {
        OccConfig {
            range: [-60.0, 60.0, -40.0, 40.0, -3.0, 5.0],
            voxel_size: 0.4,
            filter_radius: 0.3,
            filter_min_neighbors: 4,
            use_non_keyframes: true,
        }
    }
}

impl OccConfig {
    /// Cell counts per axis. Each extent must be a positive whole multiple of
    /// the voxel size (within 1e-9 voxels).
    pub fn dims(&self) -> Result<[u32; 3]> {
        if !(self.voxel_size.is_finite() && self.voxel_size > 0.0) {
            return Err(Error::InvalidParams(format!("voxel size {} must be positive", self.voxel_size)));
        }
        if !(self.filter_radius.is_finite() && self.filter_radius > 0.0) {
            return Err(Error::InvalidParams(format!("filter radius {} must be positive", self.filter_radius)));
        }
        let mut dims = [0u32; 3];
        for (a, d) in dims.iter_mut().enumerate() {
            let extent = self.range[2 * a + 1] - self.range[2 * a];
            let cells = extent / self.voxel_size;
            let rounded = libm::round(cells);
            if !(extent.is_finite() && extent > 0.0) || libm::fabs(cells - rounded) > 1e-9 || rounded > u32::MAX as f64 {
                return Err(Error::InvalidParams(format!(
                    "extent {extent} on axis {a} is not a positive multiple of voxel size {}",
                    self.voxel_size
                )));
            }
            *d = rounded as u32;
        }
        checked_cells(dims)?;
        Ok(dims)
    }

    pub fn origin(&self) -> Vec3 {
        Vec3::new(self.range[0], self.range[2], self.range[4])
    }

    pub fn empty_grid(&self) -> Result<VoxelGrid> {
        VoxelGrid::free(self.origin(), self.voxel_size, self.dims()?)
    }
}
