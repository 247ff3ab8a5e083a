//! Canonical 3D volume representation and voxel-grid operations.
//!
//! Voxels are stored x-fastest (`index = x + nx*(y + ny*z)`), matching the
//! NIfTI on-disk layout. Physical coordinates are expressed in an
//! anatomical frame whose positive axes point toward Left, Posterior and
//! Superior; the canonical orientation is exactly that frame.

mod morph;
mod orient;
mod resample;
mod tiling;

pub use morph::{mask_volume_mm3, morphology, squared_distance_transform, MorphOp};
pub use orient::{
    canonicalize_labels, canonicalize_orientation, AxisDir, Orientation, OrientationTransform,
};
pub use resample::resample_isotropic_1mm;
pub use tiling::{tile_sliding_windows, WindowBox, WindowTiling};

use crate::error::{Error, Result};

/// Dimensions plus physical spacing of a voxel grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelGrid {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidGeometry(format!(
                "all dims must be >= 1, got {dims:?}"
            )));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidGeometry(format!(
                "all spacing components must be finite and > 0, got {spacing:?}"
            )));
        }
        Ok(Self { dims, spacing })
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Volume of one voxel in mm³.
    pub fn voxel_mm3(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.dims[0];
        let y = (index / self.dims[0]) % self.dims[1];
        let z = index / (self.dims[0] * self.dims[1]);
        [x, y, z]
    }

    pub fn contains(&self, p: [i64; 3]) -> bool {
        (0..3).all(|a| p[a] >= 0 && (p[a] as usize) < self.dims[a])
    }
}

/// Scalar 3D grid in Hounsfield units (or unitless intensities).
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    orientation: Orientation,
    voxels: Vec<f64>,
}

impl Volume3D {
    pub fn new(
        dims: [usize; 3],
        spacing: [f64; 3],
        origin: [f64; 3],
        orientation: Orientation,
        voxels: Vec<f64>,
    ) -> Result<Self> {
        let grid = VoxelGrid::new(dims, spacing)?;
        if voxels.len() != grid.voxel_count() {
            return Err(Error::InvalidGeometry(format!(
                "voxel count {} does not match dims {:?}",
                voxels.len(),
                dims
            )));
        }
        if !origin.iter().all(|o| o.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "origin must be finite, got {origin:?}"
            )));
        }
        if voxels.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteVoxels);
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            orientation,
            voxels,
        })
    }

    /// Constant-valued volume in canonical orientation with zero origin.
    pub fn filled(dims: [usize; 3], spacing: [f64; 3], value: f64) -> Result<Self> {
        let n = VoxelGrid::new(dims, spacing)?.voxel_count();
        Self::new(
            dims,
            spacing,
            [0.0; 3],
            Orientation::canonical(),
            vec![value; n],
        )
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn grid(&self) -> VoxelGrid {
        VoxelGrid {
            dims: self.dims,
            spacing: self.spacing,
        }
    }

    pub fn voxels(&self) -> &[f64] {
        &self.voxels
    }

    pub fn voxels_mut(&mut self) -> &mut [f64] {
        &mut self.voxels
    }

    pub fn into_voxels(self) -> Vec<f64> {
        self.voxels
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> f64 {
        self.voxels[self.grid().index(x, y, z)]
    }

    /// Replace the voxel buffer, keeping geometry. Lengths must match.
    pub fn with_voxels(&self, voxels: Vec<f64>) -> Result<Self> {
        Self::new(self.dims, self.spacing, self.origin, self.orientation, voxels)
    }

    /// Extract an axis-aligned sub-volume. The box must lie inside the grid.
    pub fn crop(&self, start: [usize; 3], size: [usize; 3]) -> Result<Self> {
        for a in 0..3 {
            if size[a] == 0 || start[a] + size[a] > self.dims[a] {
                return Err(Error::InvalidGeometry(format!(
                    "crop box start {start:?} size {size:?} exceeds dims {:?}",
                    self.dims
                )));
            }
        }
        let grid = self.grid();
        let mut out = Vec::with_capacity(size[0] * size[1] * size[2]);
        for z in 0..size[2] {
            for y in 0..size[1] {
                let row = grid.index(start[0], start[1] + y, start[2] + z);
                out.extend_from_slice(&self.voxels[row..row + size[0]]);
            }
        }
        let mut origin = self.origin;
        for a in 0..3 {
            origin[a] += start[a] as f64 * self.spacing[a];
        }
        Self::new(size, self.spacing, origin, self.orientation, out)
    }
}

/// Integer 3D grid of anatomical class ids over the same geometry model as
/// [`Volume3D`]. Id semantics depend on context: synthesized label maps use
/// the fixed 25-class scheme (checked by [`LabelMap::validate_lesion_scheme`]),
/// while curation inputs may carry additional structure ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    orientation: Orientation,
    voxels: Vec<u16>,
}

impl LabelMap {
    pub fn new(
        dims: [usize; 3],
        spacing: [f64; 3],
        origin: [f64; 3],
        orientation: Orientation,
        voxels: Vec<u16>,
    ) -> Result<Self> {
        let grid = VoxelGrid::new(dims, spacing)?;
        if voxels.len() != grid.voxel_count() {
            return Err(Error::InvalidGeometry(format!(
                "label count {} does not match dims {:?}",
                voxels.len(),
                dims
            )));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            orientation,
            voxels,
        })
    }

    pub fn zeros(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let n = VoxelGrid::new(dims, spacing)?.voxel_count();
        Self::new(
            dims,
            spacing,
            [0.0; 3],
            Orientation::canonical(),
            vec![0; n],
        )
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn grid(&self) -> VoxelGrid {
        VoxelGrid {
            dims: self.dims,
            spacing: self.spacing,
        }
    }

    pub fn voxels(&self) -> &[u16] {
        &self.voxels
    }

    pub fn voxels_mut(&mut self) -> &mut [u16] {
        &mut self.voxels
    }

    /// True where the class id equals `id`.
    pub fn mask_of(&self, id: u16) -> Vec<bool> {
        self.voxels.iter().map(|&v| v == id).collect()
    }

    /// Geometry equality with a scalar volume (dims, spacing, origin, orientation).
    pub fn same_geometry(&self, vol: &Volume3D) -> bool {
        self.dims == vol.dims()
            && self.spacing == vol.spacing()
            && self.origin == vol.origin()
            && self.orientation == vol.orientation()
    }

    /// Check the 25-class output scheme: every id in {0} ∪ {1..25}.
    pub fn validate_lesion_scheme(&self) -> Result<()> {
        match self.voxels.iter().find(|&&v| v > 25) {
            None => Ok(()),
            Some(&bad) => Err(Error::InvalidParameter(format!(
                "label id {bad} outside the 25-class scheme"
            ))),
        }
    }

    /// Nearest-neighbor resample onto an isotropic 1 mm grid (labels must
    /// not be interpolated linearly).
    pub fn resample_isotropic_1mm_nearest(&self) -> Result<LabelMap> {
        let out_dims = resample::output_dims(self.dims, self.spacing);
        let out_grid = VoxelGrid::new(out_dims, [1.0; 3])?;
        let grid = self.grid();
        let mut out = vec![0u16; out_grid.voxel_count()];
        for z in 0..out_dims[2] {
            let sz = nearest_source(z, self.spacing[2], self.dims[2]);
            for y in 0..out_dims[1] {
                let sy = nearest_source(y, self.spacing[1], self.dims[1]);
                for x in 0..out_dims[0] {
                    let sx = nearest_source(x, self.spacing[0], self.dims[0]);
                    out[out_grid.index(x, y, z)] = self.voxels[grid.index(sx, sy, sz)];
                }
            }
        }
        LabelMap::new(out_dims, [1.0; 3], self.origin, self.orientation, out)
    }

    pub fn crop(&self, start: [usize; 3], size: [usize; 3]) -> Result<LabelMap> {
        for a in 0..3 {
            if size[a] == 0 || start[a] + size[a] > self.dims[a] {
                return Err(Error::InvalidGeometry(format!(
                    "crop box start {start:?} size {size:?} exceeds dims {:?}",
                    self.dims
                )));
            }
        }
        let grid = self.grid();
        let mut out = Vec::with_capacity(size[0] * size[1] * size[2]);
        for z in 0..size[2] {
            for y in 0..size[1] {
                let row = grid.index(start[0], start[1] + y, start[2] + z);
                out.extend_from_slice(&self.voxels[row..row + size[0]]);
            }
        }
        let mut origin = self.origin;
        for a in 0..3 {
            origin[a] += start[a] as f64 * self.spacing[a];
        }
        LabelMap::new(size, self.spacing, origin, self.orientation, out)
    }
}

fn nearest_source(out_idx: usize, spacing: f64, n_in: usize) -> usize {
    let u = out_idx as f64 / spacing;
    (u.round() as usize).min(n_in - 1)
}
