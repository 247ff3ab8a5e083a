//! Procedural scalar fields: lattice value noise, seeded white noise, and
//! separable Gaussian blur.

use crate::seed::derive_seed_indexed;
use crate::volume::VoxelGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn hash3(seed: u64, x: i64, y: i64, z: i64) -> u64 {
    let mut h = seed ^ 0x51_7c_c1_b7_27_22_0a_95;
    for v in [x as u64, y as u64, z as u64] {
        h ^= v.wrapping_mul(0x9e3779b97f4a7c15);
        h = h.rotate_left(29).wrapping_mul(0xbf58476d1ce4e5b9);
    }
    h ^= h >> 32;
    h
}

/// Uniform lattice value in [-1, 1] at integer lattice coordinates.
fn lattice_value(seed: u64, x: i64, y: i64, z: i64) -> f64 {
    let h = hash3(seed, x, y, z);
    // Map the top 53 bits to [0,1), then to [-1,1].
    (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Trilinearly interpolated lattice value noise in [-1, 1], evaluated at a
/// physical point (mm). `lattice_mm` sets the feature wavelength.
pub fn value_noise_at(seed: u64, point_mm: [f64; 3], lattice_mm: f64) -> f64 {
    let p = point_mm.map(|c| c / lattice_mm);
    let base = p.map(|c| c.floor());
    let f = [p[0] - base[0], p[1] - base[1], p[2] - base[2]];
    let (x0, y0, z0) = (base[0] as i64, base[1] as i64, base[2] as i64);
    let mut acc = 0.0;
    for dz in 0..2i64 {
        let wz = if dz == 0 { 1.0 - f[2] } else { f[2] };
        for dy in 0..2i64 {
            let wy = if dy == 0 { 1.0 - f[1] } else { f[1] };
            for dx in 0..2i64 {
                let wx = if dx == 0 { 1.0 - f[0] } else { f[0] };
                acc += wx * wy * wz * lattice_value(seed, x0 + dx, y0 + dy, z0 + dz);
            }
        }
    }
    acc
}

/// Sample the value-noise field over a whole grid.
pub fn value_noise_field(seed: u64, grid: &VoxelGrid, lattice_mm: f64) -> Vec<f64> {
    let [nx, ny, nz] = grid.dims;
    let mut out = Vec::with_capacity(grid.voxel_count());
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let p = [
                    x as f64 * grid.spacing[0],
                    y as f64 * grid.spacing[1],
                    z as f64 * grid.spacing[2],
                ];
                out.push(value_noise_at(seed, p, lattice_mm));
            }
        }
    }
    out
}

/// Standard-normal white noise of length `n`, fully determined by the seed.
pub fn white_noise(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// White noise for one window of a tiling, seeded by (base seed, window index).
pub fn window_noise(base_seed: u64, window_index: usize, n: usize) -> Vec<f64> {
    white_noise(
        derive_seed_indexed(base_seed, "window-noise", window_index as u64),
        n,
    )
}

fn gaussian_kernel(sigma_vox: f64) -> Vec<f64> {
    // Truncated at 3 sigma; degenerate sigma yields the identity kernel.
    let radius = (3.0 * sigma_vox).ceil() as i64;
    if sigma_vox <= 0.0 || radius == 0 {
        return vec![1.0];
    }
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i as f64 * i as f64) / (2.0 * sigma_vox * sigma_vox)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn blur_axis(grid: &VoxelGrid, data: &[f64], axis: usize, kernel: &[f64]) -> Vec<f64> {
    if kernel.len() == 1 {
        return data.to_vec();
    }
    let radius = (kernel.len() / 2) as i64;
    let [nx, ny, nz] = grid.dims;
    let dims = [nx as i64, ny as i64, nz as i64];
    let mut out = vec![0.0f64; data.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let mut acc = 0.0;
                let c = [x as i64, y as i64, z as i64];
                for (ki, &kv) in kernel.iter().enumerate() {
                    let mut p = c;
                    // Clamp-to-edge boundary.
                    p[axis] = (c[axis] + ki as i64 - radius).clamp(0, dims[axis] - 1);
                    acc += kv * data[grid.index(p[0] as usize, p[1] as usize, p[2] as usize)];
                }
                out[grid.index(x, y, z)] = acc;
            }
        }
    }
    out
}

/// Separable Gaussian blur with a physical sigma (mm), truncated at 3 sigma,
/// clamp-to-edge boundary. `sigma_mm = 0` returns the input unchanged.
pub fn gaussian_blur(grid: &VoxelGrid, data: &[f64], sigma_mm: f64) -> Vec<f64> {
    assert_eq!(data.len(), grid.voxel_count(), "field length mismatch");
    if sigma_mm <= 0.0 {
        return data.to_vec();
    }
    let mut out = data.to_vec();
    for axis in 0..3 {
        let kernel = gaussian_kernel(sigma_mm / grid.spacing[axis]);
        out = blur_axis(grid, &out, axis, &kernel);
    }
    out
}
