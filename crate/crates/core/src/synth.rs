//! Lesion synthesis: placement, shape voxelization, intensity painting,
//! invasion geometry, and label composition.
//!
//! `synthesize` drives the stages in order: place the center inside the
//! eroded organ, build the shape mask, finalize it against the organ
//! (clip for non-invasive lesions, extend through a boundary sector for
//! invasive ones), then paint density / heterogeneity / surface into the
//! final mask and overwrite the label map with the lesion class id. The
//! mask is finalized before any intensity work so the image is only ever
//! touched inside the final lesion (plus the blur band around it).

use crate::error::{Error, Result};
use crate::field::{gaussian_blur, value_noise_at, value_noise_field, white_noise};
use crate::lesion::{
    Density, Heterogeneity, Invasion, LesionSpec, SamplingParams, Shape, StructuredReport,
    TypeParams,
};
use crate::seed::derive_seed;
use crate::volume::{
    mask_volume_mm3, morphology, squared_distance_transform, LabelMap, MorphOp, Volume3D,
    VoxelGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Shell thickness probing the normal tissue around a lesion, mm.
pub const RING_SHELL_MM: f64 = 3.0;

/// Half-angle of the invasion sector cone, degrees.
pub const INVASION_CONE_HALF_ANGLE_DEG: f64 = 30.0;

/// Minimum organ volume accepted for lesion placement, mm³.
pub const MIN_ORGAN_VOLUME_MM3: f64 = 4000.0;

/// A loaded template scan: canonical image plus its organ label map.
#[derive(Debug, Clone)]
pub struct Template {
    pub scan_id: String,
    pub image: Volume3D,
    pub labels: LabelMap,
}

/// Mean/std of HU in the tissue shell around the lesion, restricted to the
/// target organ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingStats {
    pub mean: f64,
    pub std: f64,
    pub voxel_count: usize,
}

/// Everything needed to regenerate a sample byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub template_id: String,
    pub spec: LesionSpec,
    pub ring: RingStats,
    pub blur_sigma_mm: f64,
}

/// Result of one synthesis run.
#[derive(Debug, Clone)]
pub struct SynthSample {
    pub image: Volume3D,
    pub labels: LabelMap,
    pub lesion_mask: Vec<bool>,
    pub report: StructuredReport,
    pub provenance: Provenance,
}

/// Draw the lesion center uniformly from the organ mask eroded by half the
/// smallest lesion extent (never less than 1 mm).
pub fn place_lesion(
    organ_mask: &[bool],
    grid: &VoxelGrid,
    spec: &LesionSpec,
    rng_seed: u64,
) -> Result<[usize; 3]> {
    let volume = mask_volume_mm3(organ_mask, grid.spacing);
    if volume <= MIN_ORGAN_VOLUME_MM3 {
        return Err(Error::PlacementFailed {
            organ: spec.organ().key().to_string(),
            reason: format!(
                "organ volume {volume:.0} mm³ below the {MIN_ORGAN_VOLUME_MM3} mm³ floor"
            ),
        });
    }
    let margin = (spec.size_mm.min() / 2.0).max(1.0);
    let eroded = morphology(grid, organ_mask, MorphOp::Erode, margin);
    // Grid faces count as background here so the lesion also fits the
    // volume, not just the organ.
    let face_ok = |c: [usize; 3]| {
        (0..3).all(|a| {
            (c[a] as f64 + 1.0) * grid.spacing[a] > margin
                && (grid.dims[a] - c[a]) as f64 * grid.spacing[a] > margin
        })
    };
    let candidates: Vec<usize> = eroded
        .iter()
        .enumerate()
        .filter_map(|(i, &m)| (m && face_ok(grid.coords(i))).then_some(i))
        .collect();
    if candidates.is_empty() {
        return Err(Error::PlacementFailed {
            organ: spec.organ().key().to_string(),
            reason: format!(
                "no interior left after eroding by {margin:.1} mm for size {}",
                spec.size_mm.render()
            ),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, "place"));
    let pick = candidates[rng.gen_range(0..candidates.len())];
    Ok(grid.coords(pick))
}

fn ellipsoid_semi_axes(spec: &LesionSpec) -> [f64; 3] {
    // Size is reported (Z, X, Y); grid axes are ordered (X, Y, Z).
    [
        spec.size_mm.x / 2.0,
        spec.size_mm.y / 2.0,
        spec.size_mm.z / 2.0,
    ]
}

/// Normalized ellipsoid radius of a voxel relative to the center.
fn rho(grid: &VoxelGrid, v: [usize; 3], center: [usize; 3], semi: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        let d = (v[a] as f64 - center[a] as f64) * grid.spacing[a] / semi[a];
        s += d * d;
    }
    s.sqrt()
}

fn bounding_box(
    grid: &VoxelGrid,
    center: [usize; 3],
    radius_mm: [f64; 3],
) -> ([usize; 3], [usize; 3]) {
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        let r = (radius_mm[a] / grid.spacing[a]).ceil() as i64 + 1;
        lo[a] = (center[a] as i64 - r).max(0) as usize;
        hi[a] = ((center[a] as i64 + r) as usize).min(grid.dims[a] - 1);
    }
    (lo, hi)
}

/// Voxelize the lesion shape around the center. The mask is pre-blur and
/// not yet reconciled with the organ (that is the invasion stage), except
/// for wall thickening which is intrinsically built from the organ
/// boundary band (a labeled-out lumen contributes its own wall side).
pub fn make_shape_mask(
    spec: &LesionSpec,
    tp: &TypeParams,
    center: [usize; 3],
    grid: &VoxelGrid,
    organ_mask: &[bool],
    rng_seed: u64,
) -> Result<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, "shape"));
    let semi = ellipsoid_semi_axes(spec);
    let mut mask = vec![false; grid.voxel_count()];

    match spec.shape {
        Shape::RoundLike | Shape::Irregular => {
            let amplitude = if spec.shape == Shape::Irregular {
                rng.gen_range(tp.irregular_amplitude.0..=tp.irregular_amplitude.1)
            } else {
                0.0
            };
            let noise_seed = derive_seed(rng_seed, "shape-noise");
            let max_semi = [semi[0] * 1.5, semi[1] * 1.5, semi[2] * 1.5];
            let (lo, hi) = bounding_box(grid, center, max_semi);
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        let r = rho(grid, [x, y, z], center, semi);
                        let limit = if amplitude > 0.0 && r > 0.0 {
                            // Low-frequency radial modulation sampled on the
                            // direction sphere.
                            let d = [
                                (x as f64 - center[0] as f64) * grid.spacing[0],
                                (y as f64 - center[1] as f64) * grid.spacing[1],
                                (z as f64 - center[2] as f64) * grid.spacing[2],
                            ];
                            let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                            let probe = 12.0;
                            let p = [d[0] / len * probe, d[1] / len * probe, d[2] / len * probe];
                            1.0 + amplitude * value_noise_at(noise_seed, p, tp.noise_lattice_mm)
                        } else {
                            1.0
                        };
                        if r <= limit {
                            mask[grid.index(x, y, z)] = true;
                        }
                    }
                }
            }
        }
        Shape::WallThickening => {
            if organ_mask.iter().all(|&m| m) || organ_mask.iter().all(|&m| !m) {
                return Err(Error::ShapeFailed(
                    "wall thickening requires an organ with a computable wall".into(),
                ));
            }
            let inv: Vec<bool> = organ_mask.iter().map(|&m| !m).collect();
            let dist_to_outside = squared_distance_transform(grid, &inv);
            let min_spacing = grid.spacing.iter().cloned().fold(f64::MAX, f64::min);
            let depth = (spec.size_mm.min() / 2.0).max(min_spacing);
            let envelope = [
                spec.size_mm.x.max(spec.size_mm.z) / 2.0,
                spec.size_mm.y.max(spec.size_mm.z) / 2.0,
                spec.size_mm.z.max(spec.size_mm.min()) / 2.0,
            ];
            let (lo, hi) = bounding_box(grid, center, envelope);
            let d2 = depth * depth + 1e-9;
            let mut any = false;
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        let idx = grid.index(x, y, z);
                        if !organ_mask[idx] || dist_to_outside[idx] > d2 {
                            continue;
                        }
                        if rho(grid, [x, y, z], center, envelope) <= 1.0 {
                            mask[idx] = true;
                            any = true;
                        }
                    }
                }
            }
            if !any {
                return Err(Error::ShapeFailed(format!(
                    "no wall band found around center {center:?}"
                )));
            }
        }
        Shape::PunctateNodular => {
            let n_foci = rng.gen_range(tp.punctate_focus_count.0..=tp.punctate_focus_count.1);
            let center_mm = [
                center[0] as f64 * grid.spacing[0],
                center[1] as f64 * grid.spacing[1],
                center[2] as f64 * grid.spacing[2],
            ];
            let mut foci: Vec<([f64; 3], f64)> = Vec::with_capacity(n_foci as usize);
            for k in 0..n_foci {
                let radius = rng
                    .gen_range(tp.punctate_focus_radius_mm.0..=tp.punctate_focus_radius_mm.1)
                    .min(spec.size_mm.min() / 2.0);
                if k == 0 {
                    // Anchor focus keeps the mask non-empty and centered.
                    foci.push((center_mm, radius));
                    continue;
                }
                // Uniform in the shrunken extent ellipsoid by rejection.
                let inner = [
                    (semi[0] - radius).max(0.0),
                    (semi[1] - radius).max(0.0),
                    (semi[2] - radius).max(0.0),
                ];
                let offset = loop {
                    let u = [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ];
                    if u[0] * u[0] + u[1] * u[1] + u[2] * u[2] <= 1.0 {
                        break [u[0] * inner[0], u[1] * inner[1], u[2] * inner[2]];
                    }
                };
                foci.push((
                    [
                        center_mm[0] + offset[0],
                        center_mm[1] + offset[1],
                        center_mm[2] + offset[2],
                    ],
                    radius,
                ));
            }
            for (fc, radius) in foci {
                let fc_vox = [
                    ((fc[0] / grid.spacing[0]).round() as usize).min(grid.dims[0] - 1),
                    ((fc[1] / grid.spacing[1]).round() as usize).min(grid.dims[1] - 1),
                    ((fc[2] / grid.spacing[2]).round() as usize).min(grid.dims[2] - 1),
                ];
                let (lo, hi) = bounding_box(grid, fc_vox, [radius; 3]);
                let r2 = radius * radius;
                for z in lo[2]..=hi[2] {
                    for y in lo[1]..=hi[1] {
                        for x in lo[0]..=hi[0] {
                            let dx = x as f64 * grid.spacing[0] - fc[0];
                            let dy = y as f64 * grid.spacing[1] - fc[1];
                            let dz = z as f64 * grid.spacing[2] - fc[2];
                            if dx * dx + dy * dy + dz * dz <= r2 {
                                mask[grid.index(x, y, z)] = true;
                            }
                        }
                    }
                }
            }
        }
    }

    if mask.iter().all(|&m| !m) {
        return Err(Error::ShapeFailed(format!(
            "empty shape mask for {} at {center:?}",
            spec.shape.option_str()
        )));
    }
    Ok(mask)
}

/// Finalize the lesion mask against the organ. Non-invasive lesions are
/// clipped to the organ; close-relationship lesions additionally grow a
/// contiguous sector through the organ boundary, at most `depth` mm past
/// the surface.
pub fn apply_invasion(
    lesion_mask: &[bool],
    organ_mask: &[bool],
    grid: &VoxelGrid,
    spec: &LesionSpec,
    tp: &TypeParams,
    rng_seed: u64,
) -> Result<Vec<bool>> {
    if lesion_mask.len() != organ_mask.len() || lesion_mask.len() != grid.voxel_count() {
        return Err(Error::ShapeMismatch {
            expected: vec![grid.voxel_count()],
            got: vec![lesion_mask.len(), organ_mask.len()],
        });
    }
    let mut base: Vec<bool> = lesion_mask
        .iter()
        .zip(organ_mask)
        .map(|(&l, &o)| l && o)
        .collect();
    if spec.invasion == Invasion::NoCloseRelationship {
        return Ok(base);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, "invasion"));
    let depth = rng.gen_range(tp.invasion_depth_mm.0..=tp.invasion_depth_mm.1);
    if depth <= 0.0 {
        return Ok(base);
    }

    // Centroid of the in-organ lesion body, physical mm.
    let mut centroid = [0.0f64; 3];
    let mut count = 0usize;
    for (i, &m) in base.iter().enumerate() {
        if m {
            let c = grid.coords(i);
            for a in 0..3 {
                centroid[a] += c[a] as f64 * grid.spacing[a];
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::ShapeFailed(
            "invasion requested but the lesion has no in-organ body".into(),
        ));
    }
    for c in &mut centroid {
        *c /= count as f64;
    }

    // Random exposed boundary voxel fixes the outward sector direction.
    let deltas: [[i64; 3]; 6] = [
        [1, 0, 0],
        [-1, 0, 0],
        [0, 1, 0],
        [0, -1, 0],
        [0, 0, 1],
        [0, 0, -1],
    ];
    let boundary: Vec<usize> = (0..grid.voxel_count())
        .filter(|&i| {
            if !organ_mask[i] {
                return false;
            }
            let [x, y, z] = grid.coords(i);
            deltas.iter().any(|d| {
                let p = [x as i64 + d[0], y as i64 + d[1], z as i64 + d[2]];
                grid.contains(p)
                    && !organ_mask[grid.index(p[0] as usize, p[1] as usize, p[2] as usize)]
            })
        })
        .collect();
    if boundary.is_empty() {
        // Organ touches no in-grid background; nothing to invade into.
        return Ok(base);
    }
    let bvox = grid.coords(boundary[rng.gen_range(0..boundary.len())]);
    let bpos = [
        bvox[0] as f64 * grid.spacing[0],
        bvox[1] as f64 * grid.spacing[1],
        bvox[2] as f64 * grid.spacing[2],
    ];
    let mut dir = [
        bpos[0] - centroid[0],
        bpos[1] - centroid[1],
        bpos[2] - centroid[2],
    ];
    let dir_len = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if dir_len == 0.0 {
        dir = [1.0, 0.0, 0.0];
    } else {
        for d in &mut dir {
            *d /= dir_len;
        }
    }
    let reach = dir_len + depth;
    let cos_half = INVASION_CONE_HALF_ANGLE_DEG.to_radians().cos();
    let dist_to_organ = squared_distance_transform(grid, organ_mask);
    let depth2 = depth * depth + 1e-9;

    for i in 0..grid.voxel_count() {
        if base[i] {
            continue;
        }
        let [x, y, z] = grid.coords(i);
        let p = [
            x as f64 * grid.spacing[0] - centroid[0],
            y as f64 * grid.spacing[1] - centroid[1],
            z as f64 * grid.spacing[2] - centroid[2],
        ];
        let len = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if len == 0.0 || len > reach {
            continue;
        }
        let cosine = (p[0] * dir[0] + p[1] * dir[1] + p[2] * dir[2]) / len;
        if cosine < cos_half {
            continue;
        }
        if organ_mask[i] {
            // Bridge through organ tissue toward the wall.
            base[i] = true;
        } else if dist_to_organ[i] <= depth2 {
            base[i] = true;
        }
    }
    Ok(base)
}

/// Mean/std of template HU in a shell of `ring_mm` around the lesion,
/// restricted to the target organ.
pub fn ring_stats(
    image: &Volume3D,
    lesion_mask: &[bool],
    organ_mask: &[bool],
    ring_mm: f64,
) -> Result<RingStats> {
    let grid = image.grid();
    let dilated = morphology(&grid, lesion_mask, MorphOp::Dilate, ring_mm);
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut count = 0usize;
    for i in 0..dilated.len() {
        if dilated[i] && !lesion_mask[i] && organ_mask[i] {
            let v = image.voxels()[i];
            sum += v;
            sum2 += v * v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::ShapeFailed(
            "ring shell around the lesion is empty".into(),
        ));
    }
    let mean = sum / count as f64;
    let var = (sum2 / count as f64 - mean * mean).max(0.0);
    Ok(RingStats {
        mean,
        std: var.sqrt(),
        voxel_count: count,
    })
}

/// Fill the lesion with ring mean plus a sampled offset: negative for
/// hypodense, positive for hyperdense, within ±iso-band for isodense.
/// Returns the sampled offset.
pub fn apply_density(
    image: &mut Volume3D,
    lesion_mask: &[bool],
    spec: &LesionSpec,
    tp: &TypeParams,
    ring: &RingStats,
    rng_seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, "density"));
    let offset = match spec.density {
        Density::Hypodense => rng.gen_range(tp.hypodense_offset_hu.0..=tp.hypodense_offset_hu.1),
        Density::Hyperdense => rng.gen_range(tp.hyperdense_offset_hu.0..=tp.hyperdense_offset_hu.1),
        Density::Isodense => rng.gen_range(-tp.isodense_band_hu..=tp.isodense_band_hu),
    };
    let value = ring.mean + offset;
    for (v, &m) in image.voxels_mut().iter_mut().zip(lesion_mask) {
        if m {
            *v = value;
        }
    }
    offset
}

/// Superimpose texture: fine Gaussian noise for homogeneous lesions, plus a
/// variance-controlled low-frequency field for heterogeneous ones.
pub fn apply_heterogeneity(
    image: &mut Volume3D,
    lesion_mask: &[bool],
    spec: &LesionSpec,
    tp: &TypeParams,
    rng_seed: u64,
) {
    let grid = image.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, "heterogeneity"));

    if spec.heterogeneity == Heterogeneity::Heterogeneous {
        let amplitude =
            rng.gen_range(tp.heterogeneity_amplitude_hu.0..=tp.heterogeneity_amplitude_hu.1);
        if amplitude > 0.0 {
            let field = value_noise_field(
                derive_seed(rng_seed, "heterogeneity-field"),
                &grid,
                tp.noise_lattice_mm,
            );
            // Standardize the in-lesion field so its std is amplitude/2.
            let idx: Vec<usize> = lesion_mask
                .iter()
                .enumerate()
                .filter_map(|(i, &m)| m.then_some(i))
                .collect();
            let mean = idx.iter().map(|&i| field[i]).sum::<f64>() / idx.len() as f64;
            let var = idx
                .iter()
                .map(|&i| (field[i] - mean) * (field[i] - mean))
                .sum::<f64>()
                / idx.len() as f64;
            let std = var.sqrt();
            if std > 1e-12 {
                let scale = amplitude / 2.0 / std;
                let voxels = image.voxels_mut();
                for &i in &idx {
                    voxels[i] += (field[i] - mean) * scale;
                }
            }
        }
    }

    if tp.homogeneous_noise_hu > 0.0 {
        let noise = white_noise(
            derive_seed(rng_seed, "fine-noise"),
            lesion_mask.iter().filter(|&&m| m).count(),
        );
        let voxels = image.voxels_mut();
        let mut k = 0usize;
        for (i, &m) in lesion_mask.iter().enumerate() {
            if m {
                voxels[i] += noise[k] * tp.homogeneous_noise_hu;
                k += 1;
            }
        }
    }
}

/// Blend the lesion into the background across a Gaussian-blurred boundary
/// band. Voxels farther than 3 sigma from the lesion boundary are
/// untouched. Returns the sampled blur sigma (mm).
pub fn apply_surface(
    image: &mut Volume3D,
    lesion_mask: &[bool],
    spec: &LesionSpec,
    tp: &TypeParams,
    rng_seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, "surface"));
    let range = match spec.surface {
        crate::lesion::Surface::WellDefined => tp.well_defined_blur_mm,
        crate::lesion::Surface::IllDefined => tp.ill_defined_blur_mm,
    };
    let sigma = rng.gen_range(range.0..=range.1);
    if sigma <= 0.0 {
        return 0.0;
    }
    let grid = image.grid();
    let blurred = gaussian_blur(&grid, image.voxels(), sigma);

    let inv: Vec<bool> = lesion_mask.iter().map(|&m| !m).collect();
    let d_out = squared_distance_transform(&grid, lesion_mask);
    let d_in = squared_distance_transform(&grid, &inv);
    let reach = 3.0 * sigma;
    let voxels = image.voxels_mut();
    for i in 0..voxels.len() {
        // Distance to the lesion boundary from either side.
        let d2 = if lesion_mask[i] { d_in[i] } else { d_out[i] };
        let d = d2.sqrt();
        if d >= reach {
            continue;
        }
        let w = 1.0 - d / reach;
        voxels[i] += w * (blurred[i] - voxels[i]);
    }
    sigma
}

/// Overwrite the lesion voxels with the lesion class id, preserving every
/// other label.
pub fn compose_labels(
    organ_labels: &LabelMap,
    lesion_mask: &[bool],
    lesion_type: crate::lesion::LesionType,
) -> Result<LabelMap> {
    if lesion_mask.len() != organ_labels.grid().voxel_count() {
        return Err(Error::ShapeMismatch {
            expected: vec![organ_labels.grid().voxel_count()],
            got: vec![lesion_mask.len()],
        });
    }
    let mut out = organ_labels.clone();
    let id = lesion_type.class_id();
    for (v, &m) in out.voxels_mut().iter_mut().zip(lesion_mask) {
        if m {
            *v = id;
        }
    }
    Ok(out)
}

/// The region a synthesis run may modify: the lesion mask dilated by three
/// blur sigmas.
pub fn modified_region(grid: &VoxelGrid, lesion_mask: &[bool], blur_sigma_mm: f64) -> Vec<bool> {
    if blur_sigma_mm <= 0.0 {
        return lesion_mask.to_vec();
    }
    morphology(grid, lesion_mask, MorphOp::Dilate, 3.0 * blur_sigma_mm)
}

/// Run the full pipeline on a template. Deterministic for a fixed
/// (template, spec) pair.
pub fn synthesize(
    template: &Template,
    spec: &LesionSpec,
    params: &SamplingParams,
) -> Result<SynthSample> {
    spec.validate(params)?;
    let tp = params.for_type(spec.lesion_type)?;
    if !template.labels.same_geometry(&template.image) {
        return Err(Error::InvalidGeometry(
            "template image and labels disagree on geometry".into(),
        ));
    }
    let grid = template.image.grid();
    let organ_mask = template.labels.mask_of(spec.organ().class_id());
    let seed = spec.seed;

    let center = place_lesion(&organ_mask, &grid, spec, seed).map_err(|e| e.in_stage("place"))?;
    let shape_mask = make_shape_mask(spec, tp, center, &grid, &organ_mask, seed)
        .map_err(|e| e.in_stage("shape"))?;
    let lesion_mask = apply_invasion(&shape_mask, &organ_mask, &grid, spec, tp, seed)
        .map_err(|e| e.in_stage("invasion"))?;
    if lesion_mask.iter().all(|&m| !m) {
        return Err(Error::ShapeFailed(format!(
            "lesion vanished when clipped to organ `{}`",
            spec.organ().key()
        ))
        .in_stage("invasion"));
    }

    let ring = ring_stats(&template.image, &lesion_mask, &organ_mask, RING_SHELL_MM)
        .map_err(|e| e.in_stage("density"))?;

    let mut image = template.image.clone();
    apply_density(&mut image, &lesion_mask, spec, tp, &ring, seed);
    apply_heterogeneity(&mut image, &lesion_mask, spec, tp, seed);
    let blur_sigma_mm = apply_surface(&mut image, &lesion_mask, spec, tp, seed);

    let labels = compose_labels(&template.labels, &lesion_mask, spec.lesion_type)
        .map_err(|e| e.in_stage("compose"))?;

    let sample = SynthSample {
        image,
        labels,
        lesion_mask,
        report: spec.render_report(),
        provenance: Provenance {
            template_id: template.scan_id.clone(),
            spec: spec.clone(),
            ring,
            blur_sigma_mm,
        },
    };
    sample.validate(&organ_mask)?;
    Ok(sample)
}

impl SynthSample {
    /// Structural invariants every sample must satisfy.
    pub fn validate(&self, organ_mask: &[bool]) -> Result<()> {
        let spec = &self.provenance.spec;
        if self.lesion_mask.iter().all(|&m| !m) {
            return Err(Error::ShapeFailed("sample has an empty lesion".into()));
        }
        if !self.labels.same_geometry(&self.image) {
            return Err(Error::InvalidGeometry(
                "sample image and labels disagree on geometry".into(),
            ));
        }
        let id = spec.lesion_type.class_id();
        for (i, &m) in self.lesion_mask.iter().enumerate() {
            let lbl = self.labels.voxels()[i];
            if m != (lbl == id) {
                return Err(Error::InvalidGeometry(format!(
                    "label {lbl} at voxel {i} does not match the lesion mask"
                )));
            }
            if m && spec.invasion == Invasion::NoCloseRelationship && !organ_mask[i] {
                return Err(Error::InvalidGeometry(format!(
                    "non-invasive lesion voxel {i} escaped the organ"
                )));
            }
        }
        self.labels.validate_lesion_scheme()?;
        Ok(())
    }

    /// Centroid voxel of the lesion mask.
    pub fn lesion_centroid(&self) -> Option<[usize; 3]> {
        let grid = self.image.grid();
        let mut acc = [0.0f64; 3];
        let mut count = 0usize;
        for (i, &m) in self.lesion_mask.iter().enumerate() {
            if m {
                let c = grid.coords(i);
                for a in 0..3 {
                    acc[a] += c[a] as f64;
                }
                count += 1;
            }
        }
        if count == 0 {
            return None;
        }
        Some([
            (acc[0] / count as f64).round() as usize,
            (acc[1] / count as f64).round() as usize,
            (acc[2] / count as f64).round() as usize,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lesion::{Enhancement, LesionType, SizeMm, Surface};

    fn grid64() -> VoxelGrid {
        VoxelGrid::new([64, 64, 64], [1.0; 3]).unwrap()
    }

    fn full_cube_mask(grid: &VoxelGrid) -> Vec<bool> {
        vec![true; grid.voxel_count()]
    }

    fn sphere_mask(grid: &VoxelGrid, center: [f64; 3], radius: f64) -> Vec<bool> {
        let mut m = vec![false; grid.voxel_count()];
        let [nx, ny, nz] = grid.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let dx = x as f64 * grid.spacing[0] - center[0];
                    let dy = y as f64 * grid.spacing[1] - center[1];
                    let dz = z as f64 * grid.spacing[2] - center[2];
                    if dx * dx + dy * dy + dz * dz <= radius * radius {
                        m[grid.index(x, y, z)] = true;
                    }
                }
            }
        }
        m
    }

    fn spec_with(
        lesion_type: LesionType,
        size: SizeMm,
        shape: Shape,
        density: Density,
        invasion: Invasion,
        seed: u64,
    ) -> LesionSpec {
        LesionSpec {
            lesion_type,
            enhancement: lesion_type.allowed_modalities()[0],
            size_mm: size,
            shape,
            density,
            heterogeneity: Heterogeneity::Homogeneous,
            surface: Surface::WellDefined,
            invasion,
            seed,
        }
    }

    fn default_tp(ty: LesionType) -> TypeParams {
        SamplingParams::default().for_type(ty).unwrap().clone()
    }

    #[test]
    fn placement_respects_erosion_margin() {
        let grid = grid64();
        let organ = full_cube_mask(&grid);
        let spec = spec_with(
            LesionType::LiverCyst,
            SizeMm::new(10.0, 10.0, 10.0),
            Shape::RoundLike,
            Density::Hypodense,
            Invasion::NoCloseRelationship,
            3,
        );
        for seed in 0..50u64 {
            let c = place_lesion(&organ, &grid, &spec, seed).unwrap();
            for a in 0..3 {
                assert!(c[a] >= 5 && c[a] <= 58, "center {c:?} too close to a face");
            }
        }
    }

    #[test]
    fn placement_single_candidate_and_determinism() {
        let grid = VoxelGrid::new([20, 20, 20], [2.0; 3]).unwrap();
        let organ = sphere_mask(&grid, [20.0, 20.0, 20.0], 11.0);
        let spec = spec_with(
            LesionType::LiverCyst,
            SizeMm::new(18.0, 18.0, 18.0),
            Shape::RoundLike,
            Density::Hypodense,
            Invasion::NoCloseRelationship,
            3,
        );
        let eroded = morphology(&grid, &organ, MorphOp::Erode, 9.0);
        let survivors: Vec<usize> = eroded
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect();
        assert!(!survivors.is_empty());
        let c1 = place_lesion(&organ, &grid, &spec, 9).unwrap();
        let c2 = place_lesion(&organ, &grid, &spec, 9).unwrap();
        assert_eq!(c1, c2);
        if survivors.len() == 1 {
            assert_eq!(grid.index(c1[0], c1[1], c1[2]), survivors[0]);
        }

        // Tiny organ: rejected by the volume floor.
        let tiny = sphere_mask(&grid, [20.0, 20.0, 20.0], 4.0);
        assert!(place_lesion(&tiny, &grid, &spec, 1).is_err());
    }

    #[test]
    fn round_like_mask_matches_analytic_ellipsoid() {
        let grid = grid64();
        let organ = full_cube_mask(&grid);
        let spec = spec_with(
            LesionType::LiverCyst,
            SizeMm::new(20.0, 20.0, 20.0),
            Shape::RoundLike,
            Density::Hypodense,
            Invasion::NoCloseRelationship,
            5,
        );
        let tp = default_tp(LesionType::LiverCyst);
        let mask = make_shape_mask(&spec, &tp, [32, 32, 32], &grid, &organ, 5).unwrap();
        let count = mask.iter().filter(|&&m| m).count() as f64;
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * 10.0f64.powi(3);
        assert!(
            (count - analytic).abs() / analytic < 0.10,
            "voxel count {count} vs analytic {analytic}"
        );
        // Bounding extents within one voxel of the requested size.
        for axis in 0..3 {
            let mut lo = usize::MAX;
            let mut hi = 0usize;
            for (i, &m) in mask.iter().enumerate() {
                if m {
                    let c = grid.coords(i);
                    lo = lo.min(c[axis]);
                    hi = hi.max(c[axis]);
                }
            }
            let extent = (hi - lo + 1) as f64;
            assert!(
                (extent - 20.0).abs() <= 1.0,
                "axis {axis} extent {extent} voxels"
            );
        }
    }

    #[test]
    fn round_like_mask_is_reflection_symmetric() {
        let grid = grid64();
        let organ = full_cube_mask(&grid);
        let spec = spec_with(
            LesionType::LiverCyst,
            SizeMm::new(14.0, 20.0, 16.0),
            Shape::RoundLike,
            Density::Hypodense,
            Invasion::NoCloseRelationship,
            5,
        );
        let tp = default_tp(LesionType::LiverCyst);
        let c = [32usize, 32, 32];
        let mask = make_shape_mask(&spec, &tp, c, &grid, &organ, 5).unwrap();
        for (i, &m) in mask.iter().enumerate() {
            let v = grid.coords(i);
            let mirrored = [2 * c[0] - v[0], v[1], v[2]];
            if mirrored[0] < grid.dims[0] {
                assert_eq!(m, mask[grid.index(mirrored[0], mirrored[1], mirrored[2])]);
            }
        }
    }

    #[test]
    fn irregular_with_zero_amplitude_equals_round_like() {
        let grid = grid64();
        let organ = full_cube_mask(&grid);
        let mut tp = default_tp(LesionType::LiverTumor);
        tp.irregular_amplitude = (0.0, 0.0);
        let size = SizeMm::new(16.0, 18.0, 14.0);
        let spec_round = spec_with(
            LesionType::LiverTumor,
            size,
            Shape::RoundLike,
            Density::Hypodense,
            Invasion::NoCloseRelationship,
            7,
        );
        let spec_irr = LesionSpec {
            shape: Shape::Irregular,
            ..spec_round.clone()
        };
        let m1 = make_shape_mask(&spec_round, &tp, [32, 32, 32], &grid, &organ, 7).unwrap();
        let m2 = make_shape_mask(&spec_irr, &tp, [32, 32, 32], &grid, &organ, 7).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn wall_thickening_hugs_the_organ_boundary() {
        let grid = grid64();
        let organ = sphere_mask(&grid, [32.0, 32.0, 32.0], 20.0);
        let spec = spec_with(
            LesionType::GastricCancer,
            SizeMm::new(8.0, 24.0, 24.0),
            Shape::WallThickening,
            Density::Hyperdense,
            Invasion::NoCloseRelationship,
            11,
        );
        let tp = default_tp(LesionType::GastricCancer);
        // Center on the wall of the sphere.
        let center = [32usize, 32, 12];
        let mask = make_shape_mask(&spec, &tp, center, &grid, &organ, 11).unwrap();
        let inv: Vec<bool> = organ.iter().map(|&m| !m).collect();
        let d = squared_distance_transform(&grid, &inv);
        let depth = 4.0f64;
        for (i, &m) in mask.iter().enumerate() {
            if m {
                assert!(organ[i], "wall voxel outside organ");
                assert!(
                    d[i] <= depth * depth + 1e-6,
                    "wall voxel {i} deeper than the band"
                );
            }
        }

        // No wall on an all-foreground organ.
        let solid = full_cube_mask(&grid);
        assert!(make_shape_mask(&spec, &tp, center, &grid, &solid, 11).is_err());
    }

    #[test]
    fn punctate_mask_stays_within_extents() {
        let grid = grid64();
        let organ = full_cube_mask(&grid);
        let spec = spec_with(
            LesionType::KidneyStone,
            SizeMm::new(14.0, 14.0, 14.0),
            Shape::PunctateNodular,
            Density::Hyperdense,
            Invasion::NoCloseRelationship,
            13,
        );
        let tp = default_tp(LesionType::KidneyStone);
        let c = [32usize, 32, 32];
        let mask = make_shape_mask(&spec, &tp, c, &grid, &organ, 13).unwrap();
        assert!(mask.iter().any(|&m| m));
        for (i, &m) in mask.iter().enumerate() {
            if m {
                let v = grid.coords(i);
                for a in 0..3 {
                    let d = (v[a] as f64 - c[a] as f64).abs();
                    assert!(d <= 7.0 + 1.0, "axis {a} offset {d} voxels exceeds extent");
                }
            }
        }
    }

    fn mean_at(vol: &Volume3D, mask: &[bool]) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (v, &m) in vol.voxels().iter().zip(mask) {
            if m {
                sum += v;
                n += 1;
            }
        }
        sum / n as f64
    }

    fn std_at(vol: &Volume3D, mask: &[bool]) -> f64 {
        let mean = mean_at(vol, mask);
        let mut sum2 = 0.0;
        let mut n = 0usize;
        for (v, &m) in vol.voxels().iter().zip(mask) {
            if m {
                sum2 += (v - mean) * (v - mean);
                n += 1;
            }
        }
        (sum2 / n as f64).sqrt()
    }

    #[test]
    fn density_examples() {
        let grid = grid64();
        let organ = full_cube_mask(&grid);
        let lesion = sphere_mask(&grid, [32.0, 32.0, 32.0], 8.0);
        let base = Volume3D::filled([64, 64, 64], [1.0; 3], 60.0).unwrap();
        let ring = ring_stats(&base, &lesion, &organ, RING_SHELL_MM).unwrap();
        assert!((ring.mean - 60.0).abs() < 1e-9);
        assert_eq!(ring.std, 0.0);

        let spec = spec_with(
            LesionType::LiverTumor,
            SizeMm::new(16.0, 16.0, 16.0),
            Shape::RoundLike,
            Density::Hypodense,
            Invasion::NoCloseRelationship,
            17,
        );
        let tp = default_tp(LesionType::LiverTumor);

        let mut hypo = base.clone();
        apply_density(&mut hypo, &lesion, &spec, &tp, &ring, 17);
        let lesion_mean = mean_at(&hypo, &lesion);
        assert!(lesion_mean < ring.mean - 20.0 + 1e-9);

        let mut iso = base.clone();
        let spec_iso = LesionSpec {
            density: Density::Isodense,
            ..spec.clone()
        };
        apply_density(&mut iso, &lesion, &spec_iso, &tp, &ring, 17);
        assert!((mean_at(&iso, &lesion) - ring.mean).abs() <= tp.isodense_band_hu + 1e-9);

        // Zero offset, no texture: lesion voxels equal the ring mean exactly.
        let mut exact = base.clone();
        let mut tp_zero = tp.clone();
        tp_zero.isodense_band_hu = 0.0;
        apply_density(&mut exact, &lesion, &spec_iso, &tp_zero, &ring, 17);
        for (i, &m) in lesion.iter().enumerate() {
            if m {
                assert_eq!(exact.voxels()[i], ring.mean);
            }
        }
    }

    #[test]
    fn heterogeneity_examples() {
        let grid = grid64();
        let lesion = sphere_mask(&grid, [32.0, 32.0, 32.0], 10.0);
        let base = Volume3D::filled([64, 64, 64], [1.0; 3], 40.0).unwrap();
        let tp = default_tp(LesionType::LiverTumor);

        // Homogeneous: fine noise only, std within 1.2x the configured sigma.
        let mut homog = base.clone();
        let spec_h = spec_with(
            LesionType::LiverTumor,
            SizeMm::new(20.0, 20.0, 20.0),
            Shape::RoundLike,
            Density::Hypodense,
            Invasion::NoCloseRelationship,
            19,
        );
        apply_heterogeneity(&mut homog, &lesion, &spec_h, &tp, 19);
        assert!(std_at(&homog, &lesion) <= tp.homogeneous_noise_hu * 1.2);

        // Heterogeneous: low-frequency field pushes std over the floor.
        let mut het = base.clone();
        let spec_het = LesionSpec {
            heterogeneity: Heterogeneity::Heterogeneous,
            ..spec_h.clone()
        };
        apply_heterogeneity(&mut het, &lesion, &spec_het, &tp, 19);
        assert!(std_at(&het, &lesion) >= 10.0);

        // Zero amplitude and zero fine noise leave the image untouched.
        let mut untouched = base.clone();
        let mut tp_zero = tp.clone();
        tp_zero.heterogeneity_amplitude_hu = (0.0, 0.0);
        tp_zero.homogeneous_noise_hu = 0.0;
        apply_heterogeneity(&mut untouched, &lesion, &spec_het, &tp_zero, 19);
        assert_eq!(untouched.voxels(), base.voxels());
    }

    fn mean_boundary_gradient(vol: &Volume3D, lesion: &[bool]) -> f64 {
        let grid = vol.grid();
        let inv: Vec<bool> = lesion.iter().map(|&m| !m).collect();
        let d_out = squared_distance_transform(&grid, lesion);
        let d_in = squared_distance_transform(&grid, &inv);
        let mut sum = 0.0;
        let mut n = 0usize;
        let [nx, ny, nz] = grid.dims;
        for z in 1..nz - 1 {
            for y in 1..ny - 1 {
                for x in 1..nx - 1 {
                    let i = grid.index(x, y, z);
                    let d2 = if lesion[i] { d_in[i] } else { d_out[i] };
                    if d2.sqrt() > 2.0 {
                        continue;
                    }
                    let gx = vol.at(x + 1, y, z) - vol.at(x - 1, y, z);
                    let gy = vol.at(x, y + 1, z) - vol.at(x, y - 1, z);
                    let gz = vol.at(x, y, z + 1) - vol.at(x, y, z - 1);
                    sum += (gx * gx + gy * gy + gz * gz).sqrt();
                    n += 1;
                }
            }
        }
        sum / n as f64
    }

    #[test]
    fn surface_examples() {
        let grid = grid64();
        let lesion = sphere_mask(&grid, [32.0, 32.0, 32.0], 8.0);
        let mut base = Volume3D::filled([64, 64, 64], [1.0; 3], 50.0).unwrap();
        // Hard-edged lesion fill.
        for (v, &m) in base.voxels_mut().iter_mut().zip(&lesion) {
            if m {
                *v = -50.0;
            }
        }
        let tp = default_tp(LesionType::LiverTumor);
        let spec_well = spec_with(
            LesionType::LiverTumor,
            SizeMm::new(16.0, 16.0, 16.0),
            Shape::RoundLike,
            Density::Hypodense,
            Invasion::NoCloseRelationship,
            23,
        );
        let spec_ill = LesionSpec {
            surface: Surface::IllDefined,
            ..spec_well.clone()
        };

        // Zero blur: image unchanged.
        let mut zero = base.clone();
        let mut tp_zero = tp.clone();
        tp_zero.well_defined_blur_mm = (0.0, 0.0);
        let s = apply_surface(&mut zero, &lesion, &spec_well, &tp_zero, 23);
        assert_eq!(s, 0.0);
        assert_eq!(zero.voxels(), base.voxels());

        let mut well = base.clone();
        let sigma_well = apply_surface(&mut well, &lesion, &spec_well, &tp, 23);
        let mut ill = base.clone();
        let sigma_ill = apply_surface(&mut ill, &lesion, &spec_ill, &tp, 23);
        assert!(sigma_well < sigma_ill);

        // Boundary-band gradients are steeper for the well-defined margin.
        let g_well = mean_boundary_gradient(&well, &lesion);
        let g_ill = mean_boundary_gradient(&ill, &lesion);
        assert!(
            g_well > g_ill,
            "well-defined gradient {g_well} not above ill-defined {g_ill}"
        );

        // Compact support: voxels beyond 3 sigma from the boundary unchanged.
        let region = modified_region(&grid, &lesion, sigma_ill);
        for i in 0..base.voxels().len() {
            if !region[i] && !lesion[i] {
                assert_eq!(ill.voxels()[i], base.voxels()[i]);
            }
        }
    }

    #[test]
    fn invasion_examples() {
        let grid = grid64();
        let organ = sphere_mask(&grid, [32.0, 32.0, 32.0], 16.0);
        let tp = default_tp(LesionType::LiverTumor);

        // Benign clip: output is a subset of the organ.
        let lesion = sphere_mask(&grid, [44.0, 32.0, 32.0], 8.0);
        let spec_benign = spec_with(
            LesionType::LiverCyst,
            SizeMm::new(16.0, 16.0, 16.0),
            Shape::RoundLike,
            Density::Hypodense,
            Invasion::NoCloseRelationship,
            29,
        );
        let clipped = apply_invasion(&lesion, &organ, &grid, &spec_benign, &tp, 29).unwrap();
        for (i, &m) in clipped.iter().enumerate() {
            assert!(!m || organ[i]);
        }
        assert!(clipped.iter().any(|&m| m));

        // Depth-zero invasion equals the clipped result.
        let mut tp_zero = tp.clone();
        tp_zero.invasion_depth_mm = (0.0, 0.0);
        let spec_inv = LesionSpec {
            invasion: Invasion::CloseRelationship,
            lesion_type: LesionType::LiverTumor,
            ..spec_benign.clone()
        };
        let depth_zero = apply_invasion(&lesion, &organ, &grid, &spec_inv, &tp_zero, 29).unwrap();
        assert_eq!(depth_zero, clipped);

        // Five-millimetre invasion: spills outside, never deeper than 5 mm
        // (plus one voxel) past the surface.
        let mut tp5 = tp.clone();
        tp5.invasion_depth_mm = (5.0, 5.0);
        let invaded = apply_invasion(&lesion, &organ, &grid, &spec_inv, &tp5, 31).unwrap();
        let d_organ = squared_distance_transform(&grid, &organ);
        let mut outside = 0usize;
        for (i, &m) in invaded.iter().enumerate() {
            if m && !organ[i] {
                outside += 1;
                let d = d_organ[i].sqrt();
                assert!(d <= 6.0 + 1e-6, "spill voxel {i} at {d} mm");
            }
        }
        assert!(outside >= 1, "invasion produced no voxels outside the organ");
    }

    #[test]
    fn compose_labels_examples() {
        let mut labels = LabelMap::zeros([8, 8, 8], [1.0; 3]).unwrap();
        for i in 0..labels.voxels().len() {
            if i % 3 == 0 {
                labels.voxels_mut()[i] = 6;
            }
        }
        let mut lesion = vec![false; 512];
        lesion[0] = true;
        lesion[3] = true;
        lesion[10] = true;
        let out = compose_labels(&labels, &lesion, LesionType::GastricCancer).unwrap();
        // Brute-force oracle: overwrite exactly the masked voxels.
        for i in 0..512 {
            let expected = if lesion[i] { 16 } else { labels.voxels()[i] };
            assert_eq!(out.voxels()[i], expected);
        }

        let empty = vec![false; 512];
        let same = compose_labels(&labels, &empty, LesionType::GastricCancer).unwrap();
        assert_eq!(same.voxels(), labels.voxels());
    }

    fn liver_template() -> Template {
        let dims = [64usize, 64, 64];
        let grid = VoxelGrid::new(dims, [1.0; 3]).unwrap();
        let organ = sphere_mask(&grid, [32.0, 32.0, 32.0], 14.0);
        let mut image = Volume3D::filled(dims, [1.0; 3], -50.0).unwrap();
        let mut labels = LabelMap::zeros(dims, [1.0; 3]).unwrap();
        for (i, &m) in organ.iter().enumerate() {
            if m {
                image.voxels_mut()[i] = 60.0;
                labels.voxels_mut()[i] = 2;
            }
        }
        Template {
            scan_id: "synthetic-liver".into(),
            image,
            labels,
        }
    }

    #[test]
    fn synthesize_liver_cyst_end_to_end() {
        let template = liver_template();
        let params = SamplingParams::default();
        let spec = LesionSpec {
            lesion_type: LesionType::LiverCyst,
            enhancement: Enhancement::EnhancedCt,
            size_mm: SizeMm::new(10.0, 10.0, 10.0),
            shape: Shape::RoundLike,
            density: Density::Hypodense,
            heterogeneity: Heterogeneity::Homogeneous,
            surface: Surface::WellDefined,
            invasion: Invasion::NoCloseRelationship,
            seed: 4242,
        };
        let sample = synthesize(&template, &spec, &params).unwrap();

        // Lesion labeled 21 and contained in the liver.
        let organ = template.labels.mask_of(2);
        let mut lesion_count = 0usize;
        for (i, &lbl) in sample.labels.voxels().iter().enumerate() {
            if lbl == 21 {
                lesion_count += 1;
                assert!(organ[i], "cyst voxel escaped the liver");
            }
        }
        assert!(lesion_count > 0);

        // Hypodense: in-lesion mean below the ring mean.
        let lesion_mean = mean_at(&sample.image, &sample.lesion_mask);
        assert!(lesion_mean < sample.provenance.ring.mean);

        // Determinism: bit-identical on repeat.
        let again = synthesize(&template, &spec, &params).unwrap();
        assert_eq!(again.image.voxels(), sample.image.voxels());
        assert_eq!(again.labels.voxels(), sample.labels.voxels());

        // Image untouched outside the dilated lesion band.
        let region = modified_region(
            &sample.image.grid(),
            &sample.lesion_mask,
            sample.provenance.blur_sigma_mm,
        );
        for i in 0..region.len() {
            if !region[i] {
                assert_eq!(sample.image.voxels()[i], template.image.voxels()[i]);
            }
        }

        // Non-lesion labels preserved exactly.
        for i in 0..region.len() {
            if sample.labels.voxels()[i] != 21 {
                assert_eq!(sample.labels.voxels()[i], template.labels.voxels()[i]);
            }
        }

        // Report round-trips.
        let parsed = StructuredReport::from_json(&sample.report.to_json().unwrap()).unwrap();
        assert!(parsed.matches_spec(&spec));
    }

    #[test]
    fn synthesize_rejects_mismatched_geometry() {
        let mut template = liver_template();
        template.labels = LabelMap::zeros([32, 32, 32], [1.0; 3]).unwrap();
        let params = SamplingParams::default();
        let spec = spec_with(
            LesionType::LiverCyst,
            SizeMm::new(10.0, 10.0, 10.0),
            Shape::RoundLike,
            Density::Hypodense,
            Invasion::NoCloseRelationship,
            1,
        );
        assert!(synthesize(&template, &spec, &params).is_err());
    }
}
