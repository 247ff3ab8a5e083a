//! Sliding-window tilings with partition-of-unity blend weights.
//!
//! Windows advance by a stride derived from the overlap fraction; when the
//! stride does not divide the extent, the final window shifts flush to the
//! volume edge instead of padding. Blend weights are separable triangular
//! ramps normalized per axis, so the weights of all windows covering any
//! voxel sum to one.

use crate::error::{Error, Result};

/// Axis-aligned window within a voxel grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowBox {
    pub start: [usize; 3],
    pub size: [usize; 3],
}

#[derive(Debug, Clone)]
struct AxisTiling {
    /// (start, len) of each interval along this axis.
    intervals: Vec<(usize, usize)>,
    /// Per-interval normalized weights; `weights[i][local]`.
    weights: Vec<Vec<f64>>,
}

/// Deterministic sliding-window decomposition of a volume.
#[derive(Debug, Clone)]
pub struct WindowTiling {
    window: usize,
    dims: [usize; 3],
    boxes: Vec<WindowBox>,
    /// Per box, the per-axis interval index.
    box_axes: Vec<[usize; 3]>,
    axes: [AxisTiling; 3],
}

fn axis_intervals(dim: usize, window: usize, overlap: f64) -> Vec<(usize, usize)> {
    let w = window.min(dim);
    if w >= dim {
        return vec![(0, dim)];
    }
    let stride = ((w as f64) * (1.0 - overlap)).floor().max(1.0) as usize;
    let mut starts = Vec::new();
    let mut s = 0usize;
    loop {
        starts.push(s.min(dim - w));
        if s + w >= dim {
            break;
        }
        s += stride;
    }
    starts.dedup();
    starts.into_iter().map(|s| (s, w)).collect()
}

fn axis_weights(dim: usize, intervals: &[(usize, usize)]) -> Vec<Vec<f64>> {
    // Raw triangular ramp peaking at the interval center, then normalized
    // across the intervals covering each voxel.
    let raw: Vec<Vec<f64>> = intervals
        .iter()
        .map(|&(_, len)| {
            (0..len)
                .map(|i| (i + 1).min(len - i) as f64)
                .collect::<Vec<f64>>()
        })
        .collect();
    let mut sums = vec![0.0f64; dim];
    for (iv, w) in intervals.iter().zip(raw.iter()) {
        for (local, &val) in w.iter().enumerate() {
            sums[iv.0 + local] += val;
        }
    }
    intervals
        .iter()
        .zip(raw)
        .map(|(iv, w)| {
            w.into_iter()
                .enumerate()
                .map(|(local, val)| val / sums[iv.0 + local])
                .collect()
        })
        .collect()
}

/// Build the sliding-window tiling of a `dims` volume with cubic windows of
/// the given edge length (clamped per axis to the volume extent) and an
/// overlap fraction in `[0, 1)`.
pub fn tile_sliding_windows(
    dims: [usize; 3],
    window: usize,
    overlap_fraction: f64,
) -> Result<WindowTiling> {
    if window == 0 {
        return Err(Error::InvalidParameter("window edge must be > 0".into()));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidGeometry(format!(
            "all dims must be >= 1, got {dims:?}"
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::InvalidParameter(format!(
            "overlap fraction must be in [0, 1), got {overlap_fraction}"
        )));
    }

    let axes: [AxisTiling; 3] = [0, 1, 2].map(|a| {
        let intervals = axis_intervals(dims[a], window, overlap_fraction);
        let weights = axis_weights(dims[a], &intervals);
        AxisTiling { intervals, weights }
    });

    let mut boxes = Vec::new();
    let mut box_axes = Vec::new();
    for (iz, &(sz, lz)) in axes[2].intervals.iter().enumerate() {
        for (iy, &(sy, ly)) in axes[1].intervals.iter().enumerate() {
            for (ix, &(sx, lx)) in axes[0].intervals.iter().enumerate() {
                boxes.push(WindowBox {
                    start: [sx, sy, sz],
                    size: [lx, ly, lz],
                });
                box_axes.push([ix, iy, iz]);
            }
        }
    }

    Ok(WindowTiling {
        window,
        dims,
        boxes,
        box_axes,
        axes,
    })
}

impl WindowTiling {
    pub fn window_edge(&self) -> usize {
        self.window
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn boxes(&self) -> &[WindowBox] {
        &self.boxes
    }

    /// Blend weight of window `b` at window-local coordinates.
    pub fn weight(&self, b: usize, local: [usize; 3]) -> f64 {
        let ax = self.box_axes[b];
        (0..3)
            .map(|a| self.axes[a].weights[ax[a]][local[a]])
            .product()
    }

    /// Materialize the blend-weight field of window `b` (x-fastest layout).
    pub fn weight_field(&self, b: usize) -> Vec<f64> {
        let size = self.boxes[b].size;
        let ax = self.box_axes[b];
        let wx = &self.axes[0].weights[ax[0]];
        let wy = &self.axes[1].weights[ax[1]];
        let wz = &self.axes[2].weights[ax[2]];
        let mut out = Vec::with_capacity(size[0] * size[1] * size[2]);
        for z in 0..size[2] {
            for y in 0..size[1] {
                let wyz = wy[y] * wz[z];
                for x in 0..size[0] {
                    out.push(wx[x] * wyz);
                }
            }
        }
        out
    }

    /// Sum of blend weights of every window covering the given voxel.
    pub fn weight_sum_at(&self, voxel: [usize; 3]) -> f64 {
        let mut sum = 0.0;
        for (b, bx) in self.boxes.iter().enumerate() {
            let inside = (0..3).all(|a| {
                voxel[a] >= bx.start[a] && voxel[a] < bx.start[a] + bx.size[a]
            });
            if inside {
                let local = [0, 1, 2].map(|a| voxel[a] - bx.start[a]);
                sum += self.weight(b, local);
            }
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_window_when_dims_equal_window() {
        let t = tile_sliding_windows([32, 32, 32], 32, 0.5).unwrap();
        assert_eq!(t.boxes().len(), 1);
        assert_eq!(
            t.boxes()[0],
            WindowBox {
                start: [0, 0, 0],
                size: [32, 32, 32]
            }
        );
        let field = t.weight_field(0);
        assert!(field.iter().all(|&w| (w - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rejects_zero_window_and_bad_overlap() {
        assert!(tile_sliding_windows([8, 8, 8], 0, 0.5).is_err());
        assert!(tile_sliding_windows([8, 8, 8], 4, 1.0).is_err());
        assert!(tile_sliding_windows([8, 8, 8], 4, -0.1).is_err());
    }

    #[test]
    fn weights_sum_to_one_at_random_voxels() {
        let t = tile_sliding_windows([192, 192, 192], 128, 0.5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let v = [
                rng.gen_range(0..192),
                rng.gen_range(0..192),
                rng.gen_range(0..192),
            ];
            let s = t.weight_sum_at(v);
            assert!((s - 1.0).abs() < 1e-6, "sum {s} at {v:?}");
        }
    }

    #[test]
    fn union_of_boxes_covers_volume() {
        let t = tile_sliding_windows([50, 70, 90], 32, 0.25).unwrap();
        let mut covered = vec![false; 50 * 70 * 90];
        for b in t.boxes() {
            for z in b.start[2]..b.start[2] + b.size[2] {
                for y in b.start[1]..b.start[1] + b.size[1] {
                    for x in b.start[0]..b.start[0] + b.size[0] {
                        covered[x + 50 * (y + 70 * z)] = true;
                    }
                }
            }
        }
        assert!(covered.iter().all(|&c| c));
    }

    #[test]
    fn windows_advance_only_along_longest_axis() {
        let t = tile_sliding_windows([128, 128, 200], 128, 0.5).unwrap();
        for b in t.boxes() {
            assert_eq!(b.start[0], 0);
            assert_eq!(b.start[1], 0);
            assert_eq!(b.size, [128, 128, 128]);
        }
        let z_starts: Vec<usize> = t.boxes().iter().map(|b| b.start[2]).collect();
        assert_eq!(z_starts, vec![0, 64, 72]);
    }

    #[test]
    fn tiling_is_deterministic() {
        let a = tile_sliding_windows([100, 90, 80], 48, 0.5).unwrap();
        let b = tile_sliding_windows([100, 90, 80], 48, 0.5).unwrap();
        assert_eq!(a.boxes(), b.boxes());
        for i in 0..a.boxes().len() {
            assert_eq!(a.weight_field(i), b.weight_field(i));
        }
    }
}
