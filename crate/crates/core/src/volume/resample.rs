//! Isotropic 1 mm resampling with trilinear interpolation.

use super::Volume3D;
use crate::error::Result;

/// Output grid size preserving the physical extent within one output voxel.
pub(super) fn output_dims(dims: [usize; 3], spacing: [f64; 3]) -> [usize; 3] {
    let mut out = [0usize; 3];
    for a in 0..3 {
        out[a] = ((dims[a] as f64 * spacing[a]).round() as usize).max(1);
    }
    out
}

/// Resample a volume onto an isotropic 1 mm grid using trilinear
/// interpolation. Sampling outside the source grid clamps to the edge
/// voxel. Voxel (0,0,0) keeps its physical position, so an input already
/// at 1 mm spacing passes through unchanged.
pub fn resample_isotropic_1mm(vol: &Volume3D) -> Result<Volume3D> {
    let dims = vol.dims();
    let spacing = vol.spacing();
    if spacing == [1.0; 3] {
        return Ok(vol.clone());
    }
    let out_dims = output_dims(dims, spacing);
    let n = out_dims[0] * out_dims[1] * out_dims[2];
    let mut out = vec![0.0f64; n];
    let src = vol.voxels();
    let grid = vol.grid();

    // Per-axis clamped source coordinates, precomputed once.
    let mut lo = [Vec::new(), Vec::new(), Vec::new()];
    let mut hi = [Vec::new(), Vec::new(), Vec::new()];
    let mut frac = [Vec::new(), Vec::new(), Vec::new()];
    for a in 0..3 {
        for i in 0..out_dims[a] {
            let u = (i as f64 / spacing[a]).clamp(0.0, (dims[a] - 1) as f64);
            let f = u.floor();
            let l = f as usize;
            lo[a].push(l);
            hi[a].push((l + 1).min(dims[a] - 1));
            frac[a].push(u - f);
        }
    }

    let mut o = 0usize;
    for z in 0..out_dims[2] {
        let (z0, z1, fz) = (lo[2][z], hi[2][z], frac[2][z]);
        for y in 0..out_dims[1] {
            let (y0, y1, fy) = (lo[1][y], hi[1][y], frac[1][y]);
            for x in 0..out_dims[0] {
                let (x0, x1, fx) = (lo[0][x], hi[0][x], frac[0][x]);
                let c000 = src[grid.index(x0, y0, z0)];
                let c100 = src[grid.index(x1, y0, z0)];
                let c010 = src[grid.index(x0, y1, z0)];
                let c110 = src[grid.index(x1, y1, z0)];
                let c001 = src[grid.index(x0, y0, z1)];
                let c101 = src[grid.index(x1, y0, z1)];
                let c011 = src[grid.index(x0, y1, z1)];
                let c111 = src[grid.index(x1, y1, z1)];
                let c00 = c000 + (c100 - c000) * fx;
                let c10 = c010 + (c110 - c010) * fx;
                let c01 = c001 + (c101 - c001) * fx;
                let c11 = c011 + (c111 - c011) * fx;
                let c0 = c00 + (c10 - c00) * fy;
                let c1 = c01 + (c11 - c01) * fy;
                out[o] = c0 + (c1 - c0) * fz;
                o += 1;
            }
        }
    }

    Volume3D::new(out_dims, [1.0; 3], vol.origin(), vol.orientation(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Orientation;

    fn affine_volume(dims: [usize; 3], spacing: [f64; 3]) -> Volume3D {
        // v(x,y,z) = 2x + 3y - z + 5 in physical mm.
        let mut voxels = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    let (px, py, pz) = (
                        x as f64 * spacing[0],
                        y as f64 * spacing[1],
                        z as f64 * spacing[2],
                    );
                    voxels.push(2.0 * px + 3.0 * py - pz + 5.0);
                }
            }
        }
        Volume3D::new(dims, spacing, [0.0; 3], Orientation::canonical(), voxels).unwrap()
    }

    #[test]
    fn identity_at_unit_spacing() {
        let v = affine_volume([5, 4, 3], [1.0; 3]);
        let out = resample_isotropic_1mm(&v).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn exact_on_affine_fields() {
        let v = affine_volume([9, 7, 8], [2.0, 2.0, 2.0]);
        let out = resample_isotropic_1mm(&v).unwrap();
        assert_eq!(out.spacing(), [1.0; 3]);
        // Physical extent preserved within one output voxel.
        for a in 0..3 {
            let in_extent = v.dims()[a] as f64 * 2.0;
            let out_extent = out.dims()[a] as f64;
            assert!((in_extent - out_extent).abs() <= 1.0);
        }
        // Trilinear interpolation is exact on affine fields inside the
        // source grid; beyond the last source voxel center the sampler
        // clamps to the edge.
        let dims = out.dims();
        let hull = [0, 1, 2].map(|a| ((v.dims()[a] - 1) as f64 * 2.0).floor() as usize);
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    let inside = x <= hull[0] && y <= hull[1] && z <= hull[2];
                    let (cx, cy, cz) = (
                        (x.min(hull[0])) as f64,
                        (y.min(hull[1])) as f64,
                        (z.min(hull[2])) as f64,
                    );
                    let expected = if inside {
                        2.0 * x as f64 + 3.0 * y as f64 - z as f64 + 5.0
                    } else {
                        2.0 * cx + 3.0 * cy - cz + 5.0
                    };
                    assert!(
                        (out.at(x, y, z) - expected).abs() < 1e-6,
                        "at ({x},{y},{z}): {} vs {expected}",
                        out.at(x, y, z)
                    );
                }
            }
        }
    }

    #[test]
    fn constant_volume_stays_constant() {
        let v = Volume3D::filled([4, 5, 6], [0.7, 1.3, 2.9], -77.5).unwrap();
        let out = resample_isotropic_1mm(&v).unwrap();
        assert!(out.voxels().iter().all(|&x| x == -77.5));
    }

    #[test]
    fn output_stays_within_input_range() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let dims = [
                rng.gen_range(2..6),
                rng.gen_range(2..6),
                rng.gen_range(2..6),
            ];
            let spacing = [
                rng.gen_range(0.4..3.0),
                rng.gen_range(0.4..3.0),
                rng.gen_range(0.4..3.0),
            ];
            let voxels: Vec<f64> = (0..dims[0] * dims[1] * dims[2])
                .map(|_| rng.gen_range(-1000.0..1000.0))
                .collect();
            let lo = voxels.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = voxels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let v =
                Volume3D::new(dims, spacing, [0.0; 3], Orientation::canonical(), voxels).unwrap();
            let out = resample_isotropic_1mm(&v).unwrap();
            for &x in out.voxels() {
                assert!(x >= lo - 1e-9 && x <= hi + 1e-9);
            }
        }
    }
}
