//! Spacing-aware binary morphology and exact Euclidean distance transforms.
//!
//! The structuring element is the set of voxel centers within Euclidean
//! `radius_mm` of a voxel, evaluated at the grid's physical spacing.
//! Morphology quantifies over in-grid voxels only: erosion does not shrink
//! a mask at the volume boundary, which keeps closing extensive
//! (`erode(dilate(M,r),r) ⊇ M`) everywhere including the edges.

use super::VoxelGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Erode,
    Dilate,
}

/// Lower-envelope distance transform along one line of samples located at
/// `i * spacing`. `f` holds the incoming squared distances (`INFINITY`
/// where no site exists); the result overwrites `f`.
fn dt_line(f: &mut [f64], spacing: f64, v: &mut Vec<usize>, z: &mut Vec<f64>, buf: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    buf.clear();
    buf.extend_from_slice(f);

    for q in 0..n {
        if !buf[q].is_finite() {
            continue;
        }
        let xq = q as f64 * spacing;
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let xp = p as f64 * spacing;
                    let s = ((buf[q] + xq * xq) - (buf[p] + xp * xp)) / (2.0 * (xq - xp));
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }

    if v.is_empty() {
        for g in f.iter_mut() {
            *g = f64::INFINITY;
        }
        return;
    }

    let mut k = 0usize;
    for q in 0..n {
        let xq = q as f64 * spacing;
        while k + 1 < v.len() && z[k + 1] < xq {
            k += 1;
        }
        let xp = v[k] as f64 * spacing;
        f[q] = (xq - xp) * (xq - xp) + buf[v[k]];
    }
}

/// Exact squared Euclidean distance (mm²) from every voxel to the nearest
/// voxel of `set`. Voxels of `set` get 0; if `set` is empty the whole field
/// is `INFINITY`.
pub fn squared_distance_transform(grid: &VoxelGrid, set: &[bool]) -> Vec<f64> {
    assert_eq!(set.len(), grid.voxel_count(), "mask length mismatch");
    let [nx, ny, nz] = grid.dims;
    let mut d: Vec<f64> = set
        .iter()
        .map(|&s| if s { 0.0 } else { f64::INFINITY })
        .collect();

    let mut line = Vec::new();
    let mut v = Vec::new();
    let mut z = Vec::new();
    let mut buf = Vec::new();

    // Pass along x.
    for zi in 0..nz {
        for yi in 0..ny {
            let base = grid.index(0, yi, zi);
            line.clear();
            line.extend_from_slice(&d[base..base + nx]);
            dt_line(&mut line, grid.spacing[0], &mut v, &mut z, &mut buf);
            d[base..base + nx].copy_from_slice(&line);
        }
    }
    // Pass along y.
    for zi in 0..nz {
        for xi in 0..nx {
            line.clear();
            for yi in 0..ny {
                line.push(d[grid.index(xi, yi, zi)]);
            }
            dt_line(&mut line, grid.spacing[1], &mut v, &mut z, &mut buf);
            for yi in 0..ny {
                d[grid.index(xi, yi, zi)] = line[yi];
            }
        }
    }
    // Pass along z.
    for yi in 0..ny {
        for xi in 0..nx {
            line.clear();
            for zi in 0..nz {
                line.push(d[grid.index(xi, yi, zi)]);
            }
            dt_line(&mut line, grid.spacing[2], &mut v, &mut z, &mut buf);
            for zi in 0..nz {
                d[grid.index(xi, yi, zi)] = line[zi];
            }
        }
    }
    d
}

/// Ball-structuring-element morphology at the grid's spacing. Radius 0 is
/// the identity for both operations.
pub fn morphology(grid: &VoxelGrid, mask: &[bool], op: MorphOp, radius_mm: f64) -> Vec<bool> {
    assert!(radius_mm >= 0.0, "radius must be non-negative");
    assert_eq!(mask.len(), grid.voxel_count(), "mask length mismatch");
    let r2 = radius_mm * radius_mm;
    // Absorbs float rounding on anisotropic spacings without admitting the
    // next-nearest voxel shell.
    let eps = 1e-9 * (1.0 + r2);
    match op {
        MorphOp::Dilate => {
            let d = squared_distance_transform(grid, mask);
            d.iter().map(|&q| q <= r2 + eps).collect()
        }
        MorphOp::Erode => {
            let inv: Vec<bool> = mask.iter().map(|&m| !m).collect();
            let d = squared_distance_transform(grid, &inv);
            mask.iter()
                .zip(d.iter())
                .map(|(&m, &q)| m && q > r2 + eps)
                .collect()
        }
    }
}

/// Physical volume of a binary mask: foreground count times voxel volume.
pub fn mask_volume_mm3(mask: &[bool], spacing: [f64; 3]) -> f64 {
    let count = mask.iter().filter(|&&m| m).count();
    count as f64 * spacing[0] * spacing[1] * spacing[2]
}
