//! Axis orientation codes and reorientation to the canonical frame.
//!
//! An orientation assigns each voxel axis one of the six anatomical
//! directions (the direction of increasing index). The canonical frame is
//! `LPS`: axis 0 runs right→left, axis 1 anterior→posterior, axis 2
//! inferior→superior. There are 3!·2³ = 48 valid codes.

use super::{LabelMap, Volume3D};
use crate::error::{Error, Result};

/// Anatomical direction of increasing voxel index along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisDir {
    Right,
    Left,
    Anterior,
    Posterior,
    Inferior,
    Superior,
}

impl AxisDir {
    /// Anatomical plane index: 0 = left/right, 1 = anterior/posterior,
    /// 2 = inferior/superior.
    pub fn plane(self) -> usize {
        match self {
            AxisDir::Right | AxisDir::Left => 0,
            AxisDir::Anterior | AxisDir::Posterior => 1,
            AxisDir::Inferior | AxisDir::Superior => 2,
        }
    }

    /// Whether the direction points toward the positive canonical axis
    /// (Left, Posterior, Superior).
    pub fn is_positive(self) -> bool {
        matches!(self, AxisDir::Left | AxisDir::Posterior | AxisDir::Superior)
    }

    pub fn code(self) -> char {
        match self {
            AxisDir::Right => 'R',
            AxisDir::Left => 'L',
            AxisDir::Anterior => 'A',
            AxisDir::Posterior => 'P',
            AxisDir::Inferior => 'I',
            AxisDir::Superior => 'S',
        }
    }

    pub fn from_code(c: char) -> Option<AxisDir> {
        match c.to_ascii_uppercase() {
            'R' => Some(AxisDir::Right),
            'L' => Some(AxisDir::Left),
            'A' => Some(AxisDir::Anterior),
            'P' => Some(AxisDir::Posterior),
            'I' => Some(AxisDir::Inferior),
            'S' => Some(AxisDir::Superior),
            _ => None,
        }
    }

    pub fn flipped(self) -> AxisDir {
        match self {
            AxisDir::Right => AxisDir::Left,
            AxisDir::Left => AxisDir::Right,
            AxisDir::Anterior => AxisDir::Posterior,
            AxisDir::Posterior => AxisDir::Anterior,
            AxisDir::Inferior => AxisDir::Superior,
            AxisDir::Superior => AxisDir::Inferior,
        }
    }
}

/// One of the 48 axis permutation/flip codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Orientation([AxisDir; 3]);

impl Orientation {
    pub fn new(dirs: [AxisDir; 3]) -> Result<Self> {
        let mut seen = [false; 3];
        for d in dirs {
            if seen[d.plane()] {
                return Err(Error::UnknownOrientation(
                    dirs.iter().map(|d| d.code()).collect(),
                ));
            }
            seen[d.plane()] = true;
        }
        Ok(Self(dirs))
    }

    /// Parse a three-letter code such as `"LPS"` or `"RAS"`.
    pub fn from_code(code: &str) -> Result<Self> {
        let chars: Vec<char> = code.chars().collect();
        if chars.len() != 3 {
            return Err(Error::UnknownOrientation(code.to_string()));
        }
        let mut dirs = [AxisDir::Left; 3];
        for (i, c) in chars.iter().enumerate() {
            dirs[i] =
                AxisDir::from_code(*c).ok_or_else(|| Error::UnknownOrientation(code.to_string()))?;
        }
        Self::new(dirs)
    }

    pub fn code(&self) -> String {
        self.0.iter().map(|d| d.code()).collect()
    }

    pub fn dirs(&self) -> [AxisDir; 3] {
        self.0
    }

    /// The canonical right→left, anterior→posterior, inferior→superior frame.
    pub fn canonical() -> Self {
        Self([AxisDir::Left, AxisDir::Posterior, AxisDir::Superior])
    }

    pub fn is_canonical(&self) -> bool {
        *self == Self::canonical()
    }

    /// Enumerate all 48 valid orientations.
    pub fn all() -> Vec<Orientation> {
        let dirs = [
            AxisDir::Right,
            AxisDir::Left,
            AxisDir::Anterior,
            AxisDir::Posterior,
            AxisDir::Inferior,
            AxisDir::Superior,
        ];
        let mut out = Vec::with_capacity(48);
        for &a in &dirs {
            for &b in &dirs {
                for &c in &dirs {
                    if let Ok(o) = Orientation::new([a, b, c]) {
                        out.push(o);
                    }
                }
            }
        }
        out
    }
}

/// Axis permutation/flip applied during canonicalization, with the original
/// geometry recorded so the inverse restores the input bit-exactly.
#[derive(Debug, Clone)]
pub struct OrientationTransform {
    /// Output axis k was drawn from input axis `perm[k]`.
    perm: [usize; 3],
    /// Output axis k reverses its source axis.
    flip: [bool; 3],
    original_dims: [usize; 3],
    original_spacing: [f64; 3],
    original_origin: [f64; 3],
    original_orientation: Orientation,
}

impl OrientationTransform {
    pub fn perm(&self) -> [usize; 3] {
        self.perm
    }

    pub fn flip(&self) -> [bool; 3] {
        self.flip
    }

    /// Invert the canonicalization, recovering the original volume
    /// (voxels, dims, spacing, origin and orientation) bit-exactly.
    pub fn apply_inverse(&self, canonical: &Volume3D) -> Result<Volume3D> {
        if canonical.dims() != permuted_dims(self.original_dims, self.perm) {
            return Err(Error::InvalidGeometry(
                "canonical volume dims do not match the recorded transform".into(),
            ));
        }
        let (inv_perm, inv_flip) = invert(self.perm, self.flip);
        let (_, voxels) = permute_buffer(canonical.dims(), canonical.voxels(), inv_perm, inv_flip);
        Volume3D::new(
            self.original_dims,
            self.original_spacing,
            self.original_origin,
            self.original_orientation,
            voxels,
        )
    }

    /// Invert the canonicalization for a label map with the same recorded
    /// geometry.
    pub fn apply_inverse_labels(&self, canonical: &LabelMap) -> Result<LabelMap> {
        if canonical.dims() != permuted_dims(self.original_dims, self.perm) {
            return Err(Error::InvalidGeometry(
                "canonical label dims do not match the recorded transform".into(),
            ));
        }
        let (inv_perm, inv_flip) = invert(self.perm, self.flip);
        let (_, voxels) = permute_buffer(canonical.dims(), canonical.voxels(), inv_perm, inv_flip);
        LabelMap::new(
            self.original_dims,
            self.original_spacing,
            self.original_origin,
            self.original_orientation,
            voxels,
        )
    }
}

fn permuted_dims(dims: [usize; 3], perm: [usize; 3]) -> [usize; 3] {
    [dims[perm[0]], dims[perm[1]], dims[perm[2]]]
}

fn invert(perm: [usize; 3], flip: [bool; 3]) -> ([usize; 3], [bool; 3]) {
    let mut inv_perm = [0usize; 3];
    let mut inv_flip = [false; 3];
    for k in 0..3 {
        inv_perm[perm[k]] = k;
        inv_flip[perm[k]] = flip[k];
    }
    (inv_perm, inv_flip)
}

/// Copy `data` (x-fastest over `dims_in`) so that output axis k runs over
/// input axis `perm[k]`, optionally reversed.
fn permute_buffer<T: Copy + Default>(
    dims_in: [usize; 3],
    data: &[T],
    perm: [usize; 3],
    flip: [bool; 3],
) -> ([usize; 3], Vec<T>) {
    let dims_out = permuted_dims(dims_in, perm);
    let stride_in = [1usize, dims_in[0], dims_in[0] * dims_in[1]];
    let mut out = vec![T::default(); data.len()];
    let mut o = 0usize;
    for z in 0..dims_out[2] {
        for y in 0..dims_out[1] {
            for x in 0..dims_out[0] {
                let ovox = [x, y, z];
                let mut iidx = 0usize;
                for k in 0..3 {
                    let j = perm[k];
                    let i = if flip[k] {
                        dims_in[j] - 1 - ovox[k]
                    } else {
                        ovox[k]
                    };
                    iidx += i * stride_in[j];
                }
                out[o] = data[iidx];
                o += 1;
            }
        }
    }
    (dims_out, out)
}

fn plan(orientation: Orientation) -> ([usize; 3], [bool; 3]) {
    let dirs = orientation.dirs();
    let mut perm = [0usize; 3];
    let mut flip = [false; 3];
    for (j, d) in dirs.iter().enumerate() {
        perm[d.plane()] = j;
        flip[d.plane()] = !d.is_positive();
    }
    (perm, flip)
}

fn canonical_origin(
    origin: [f64; 3],
    dims: [usize; 3],
    spacing: [f64; 3],
    orientation: Orientation,
    perm: [usize; 3],
    flip: [bool; 3],
) -> [f64; 3] {
    // Origin components are physical coordinates along the L/P/S planes of
    // voxel (0,0,0); a flipped axis makes the former last voxel first.
    let dirs = orientation.dirs();
    let mut out = origin;
    for k in 0..3 {
        let j = perm[k];
        if flip[k] {
            let sign = if dirs[j].is_positive() { 1.0 } else { -1.0 };
            out[k] = origin[k] + sign * (dims[j] as f64 - 1.0) * spacing[j];
        }
    }
    out
}

/// Reorient a volume into the canonical frame, returning the transform
/// whose inverse recovers the input bit-exactly.
///
/// The voxel multiset is preserved; only the axis order/direction changes.
pub fn canonicalize_orientation(vol: &Volume3D) -> (Volume3D, OrientationTransform) {
    let (perm, flip) = plan(vol.orientation());
    let (dims_out, voxels) = permute_buffer(vol.dims(), vol.voxels(), perm, flip);
    let origin = canonical_origin(
        vol.origin(),
        vol.dims(),
        vol.spacing(),
        vol.orientation(),
        perm,
        flip,
    );
    let spacing = perm.map(|j| vol.spacing()[j]);
    let out = Volume3D::new(dims_out, spacing, origin, Orientation::canonical(), voxels)
        .expect("canonicalized geometry is valid");
    let transform = OrientationTransform {
        perm,
        flip,
        original_dims: vol.dims(),
        original_spacing: vol.spacing(),
        original_origin: vol.origin(),
        original_orientation: vol.orientation(),
    };
    (out, transform)
}

/// [`canonicalize_orientation`] for label maps.
pub fn canonicalize_labels(lm: &LabelMap) -> (LabelMap, OrientationTransform) {
    let (perm, flip) = plan(lm.orientation());
    let (dims_out, voxels) = permute_buffer(lm.dims(), lm.voxels(), perm, flip);
    let origin = canonical_origin(
        lm.origin(),
        lm.dims(),
        lm.spacing(),
        lm.orientation(),
        perm,
        flip,
    );
    let spacing = perm.map(|j| lm.spacing()[j]);
    let out = LabelMap::new(dims_out, spacing, origin, Orientation::canonical(), voxels)
        .expect("canonicalized geometry is valid");
    let transform = OrientationTransform {
        perm,
        flip,
        original_dims: lm.dims(),
        original_spacing: lm.spacing(),
        original_origin: lm.origin(),
        original_orientation: lm.orientation(),
    };
    (out, transform)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn vol_with(orientation: &str, dims: [usize; 3], voxels: Vec<f64>) -> Volume3D {
        Volume3D::new(
            dims,
            [1.0, 2.0, 3.0],
            [10.0, 20.0, 30.0],
            Orientation::from_code(orientation).unwrap(),
            voxels,
        )
        .unwrap()
    }

    #[test]
    fn there_are_exactly_48_orientations() {
        assert_eq!(Orientation::all().len(), 48);
    }

    #[test]
    fn rejects_duplicate_planes() {
        assert!(Orientation::from_code("LLS").is_err());
        assert!(Orientation::from_code("XPS").is_err());
        assert!(Orientation::from_code("LP").is_err());
    }

    #[test]
    fn already_canonical_volume_is_unchanged() {
        let v = vol_with("LPS", [2, 3, 4], (0..24).map(|i| i as f64).collect());
        let (c, _) = canonicalize_orientation(&v);
        assert_eq!(c, v);
    }

    #[test]
    fn single_flip_reverses_axis_zero_and_round_trips() {
        // Axis 0 pointing left→right is the mirrored canonical frame.
        let v = vol_with("RPS", [3, 2, 2], (0..12).map(|i| i as f64).collect());
        let (c, t) = canonicalize_orientation(&v);
        for z in 0..2 {
            for y in 0..2 {
                for x in 0..3 {
                    assert_eq!(c.at(x, y, z), v.at(2 - x, y, z));
                }
            }
        }
        let back = t.apply_inverse(&c).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn known_permutation_matches_hand_oracle() {
        // SLP: axis0→superior, axis1→left, axis2→posterior. Canonical axes
        // draw L from input axis 1, P from input axis 2, S from input axis 0.
        let voxels: Vec<f64> = (0..27).map(|i| i as f64).collect();
        let v = vol_with("SLP", [3, 3, 3], voxels.clone());
        let (c, _) = canonicalize_orientation(&v);
        for z in 0..3 {
            for y in 0..3 {
                for x in 0..3 {
                    // Input index (i0,i1,i2) = (z, x, y), x-fastest layout.
                    let expected = voxels[z + 3 * (x + 3 * y)];
                    assert_eq!(c.at(x, y, z), expected, "at ({x},{y},{z})");
                }
            }
        }
    }

    #[test]
    fn round_trip_is_bit_exact_for_all_48_codes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for o in Orientation::all() {
            let voxels: Vec<f64> = (0..64).map(|_| rng.gen_range(-1000.0..1000.0)).collect();
            let v = Volume3D::new(
                [4, 4, 4],
                [0.5, 1.0, 2.0],
                [-7.25, 3.5, 11.0],
                o,
                voxels,
            )
            .unwrap();
            let (c, t) = canonicalize_orientation(&v);
            assert!(c.orientation().is_canonical());
            let back = t.apply_inverse(&c).unwrap();
            assert_eq!(back, v, "orientation {}", o.code());

            // Voxel multiset is preserved.
            let mut sorted_in = v.voxels().to_vec();
            let mut sorted_out = c.voxels().to_vec();
            sorted_in.sort_by(|a, b| a.partial_cmp(b).unwrap());
            sorted_out.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(sorted_in, sorted_out);
        }
    }

    #[test]
    fn label_round_trip_is_bit_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for o in Orientation::all().into_iter().take(8) {
            let voxels: Vec<u16> = (0..27).map(|_| rng.gen_range(0..25)).collect();
            let lm = LabelMap::new([3, 3, 3], [1.0; 3], [0.0; 3], o, voxels).unwrap();
            let (c, t) = canonicalize_labels(&lm);
            let back = t.apply_inverse_labels(&c).unwrap();
            assert_eq!(back, lm);
        }
    }
}
